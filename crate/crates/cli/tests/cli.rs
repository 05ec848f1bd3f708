use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_markov-bayes"))
        .args(args)
        .env_remove("MARKOV_BAYES_SEED")
        .output()
        .unwrap()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).unwrap()
}

fn learn(mode: &str) -> Output {
    let model = data("two_point.json");
    let csv = data("two_point.csv");
    run(&["learn", "--model", model.to_str().unwrap(), "--data", csv.to_str().unwrap(), "--mode", mode])
}

#[test]
fn learn_sequential_reaches_worked_posterior() {
    let out = learn("seq");
    assert!(out.status.success());
    let doc = stdout_json(&out);
    assert_eq!(doc["posterior"], json!({"m0": "32/59", "m1": "27/59"}));
    assert_eq!(
        doc["trace"],
        json!([{"m0": "1/2", "m1": "1/2"}, {"m0": "8/11", "m1": "3/11"}, {"m0": "32/59", "m1": "27/59"}])
    );
    assert_eq!(doc["diagnostics"]["output_marginal"]["consistent"], json!(false));
    assert_eq!(doc["diagnostics"]["output_marginal"]["pushforward"], json!({"y0": "11/24", "y1": "13/24"}));
}

#[test]
fn learn_batch_matches_sequential() {
    let seq = stdout_json(&learn("seq"));
    let batch = learn("batch");
    assert!(batch.status.success());
    let batch = stdout_json(&batch);
    assert_eq!(batch["posterior"], seq["posterior"]);
    assert_eq!(batch["diagnostics"]["batch_path"], json!("literal"));
}

#[test]
fn learn_batch_factorized_when_capped() {
    let model = data("two_point.json");
    let csv = data("two_point.csv");
    let out = run(&[
        "learn", "--model", model.to_str().unwrap(), "--data", csv.to_str().unwrap(),
        "--mode", "batch", "--zn-cap", "1",
    ]);
    let doc = stdout_json(&out);
    assert_eq!(doc["posterior"], json!({"m0": "32/59", "m1": "27/59"}));
    assert_eq!(doc["diagnostics"]["batch_path"], json!("factorized"));
}

#[test]
fn learn_writes_trace_table_and_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let tsv = dir.path().join("trace.tsv");
    let json_out = dir.path().join("posterior.json");
    let model = data("two_point.json");
    let csv = data("two_point.csv");
    let out = run(&[
        "learn", "--model", model.to_str().unwrap(), "--data", csv.to_str().unwrap(),
        "--tsv", tsv.to_str().unwrap(), "--out", json_out.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    assert_eq!(fs::read_to_string(&tsv).unwrap(), "step\tm0\tm1\n0\t1/2\t1/2\n1\t8/11\t3/11\n2\t32/59\t27/59\n");

    let pred = run(&[
        "predict", "--model", model.to_str().unwrap(), "--posterior", json_out.to_str().unwrap(), "--x", "x0",
    ]);
    assert!(pred.status.success());
    // 32/59 * 2/3 + 27/59 * 1/4 = 337/708
    assert_eq!(stdout_json(&pred)["predictive"], json!({"y0": "337/708", "y1": "371/708"}));
}

#[test]
fn zero_likelihood_exits_with_learning_code() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = fs::read_to_string(data("two_point.json"))
        .unwrap()
        .replace(r#"[["2/3", "1/3"], ["1/4", "3/4"]]"#, r#"[["1/1", "0/1"], ["1/1", "0/1"]]"#);
    let model = dir.path().join("model.json");
    fs::write(&model, bundle).unwrap();
    let csv = data("two_point.csv");
    let out = run(&["learn", "--model", model.to_str().unwrap(), "--data", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], json!("learning"));
}

#[test]
fn invalid_bundle_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = fs::read_to_string(data("two_point.json")).unwrap().replace(r#""3/4""#, r#""1/4""#);
    let model = dir.path().join("model.json");
    fs::write(&model, bundle).unwrap();
    let csv = data("two_point.csv");
    let out = run(&["learn", "--model", model.to_str().unwrap(), "--data", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"], json!("validation"));

    let unknown = dir.path().join("bad.csv");
    fs::write(&unknown, "x,y\nx0,y7\n").unwrap();
    let out = run(&["learn", "--model", data("two_point.json").to_str().unwrap(), "--data", unknown.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn check_dagger_suite_passes() {
    let out = run(&["check", "--suite", "dagger", "--cases", "1000", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = stdout_json(&out);
    assert_eq!(doc["passed"], json!(true));
    assert_eq!(doc["seed"], json!(7));
}

#[test]
fn check_reads_seed_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_markov-bayes"))
        .args(["check", "--suite", "markov", "--cases", "20"])
        .env("MARKOV_BAYES_SEED", "99")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(stdout_json(&out)["seed"], json!(99));
}

#[test]
fn check_output_is_deterministic() {
    let a = run(&["check", "--suite", "all", "--cases", "30", "--seed", "5"]);
    let b = run(&["check", "--suite", "all", "--cases", "30", "--seed", "5"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(stdout_json(&a).as_array().unwrap().len(), 7);
}

#[test]
fn unknown_suite_is_a_validation_error() {
    let out = run(&["check", "--suite", "bogus", "--cases", "1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn compose_and_invert_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let space = |name: &str, els: &[&str]| json!({"name": name, "elements": els});
    let f = json!({
        "source": space("X", &["a", "b"]),
        "target": space("Y", &["u", "v"]),
        "rows": [["1/2", "1/2"], ["1/4", "3/4"]],
    });
    let g = json!({
        "source": space("Y", &["u", "v"]),
        "target": space("Z", &["p"]),
        "rows": [["1/1"], ["1/1"]],
    });
    let pi = json!({
        "source": space("I", &["*"]),
        "target": space("X", &["a", "b"]),
        "rows": [["1/3", "2/3"]],
    });
    for (name, doc) in [("f.json", &f), ("g.json", &g), ("pi.json", &pi)] {
        fs::write(dir.path().join(name), doc.to_string()).unwrap();
    }
    let p = |n: &str| dir.path().join(n).to_str().unwrap().to_string();

    let out = run(&["compose", &p("f.json"), &p("g.json")]);
    assert!(out.status.success());
    assert_eq!(stdout_json(&out)["rows"], json!([["1/1"], ["1/1"]]));

    let out = run(&["invert", "--kernel", &p("f.json"), "--state", &p("pi.json")]);
    assert!(out.status.success());
    let dag = stdout_json(&out);
    // (π;f)(u) = 1/6 + 1/6 = 1/3, so f†(u) = (1/2, 1/2); f†(v) = (1/6, 1/2) / (2/3)
    assert_eq!(dag["rows"], json!([["1/2", "1/2"], ["1/4", "3/4"]]));

    // the written kernel parses back to the same document
    fs::write(dir.path().join("dag.json"), &out.stdout).unwrap();
    let again = run(&["compose", &p("dag.json")]);
    assert_eq!(stdout_json(&again), dag);

    let out = run(&["compose", &p("g.json"), &p("f.json")]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn gauss_fit_predict_update() {
    let dir = tempfile::tempdir().unwrap();
    let post = dir.path().join("post.json");
    let csv = data("regression.csv");
    let out = run(&["gauss", "fit", "--data", csv.to_str().unwrap(), "--sigma", "0.5", "--out", post.to_str().unwrap()]);
    assert!(out.status.success());
    let fitted: Value = serde_json::from_str(&fs::read_to_string(&post).unwrap()).unwrap();
    let mean = fitted["mean"].as_array().unwrap();
    assert_eq!(mean.len(), 2);
    assert!((mean[0].as_f64().unwrap() - 1.5).abs() < 0.3);
    assert!((mean[1].as_f64().unwrap() + 0.5).abs() < 0.3);

    let out = run(&["gauss", "predict", "--posterior", post.to_str().unwrap(), "--x", "0,0", "--sigma", "0.5"]);
    let pred = stdout_json(&out);
    assert_eq!(pred["mean"], json!(0.0));
    assert!((pred["variance"].as_f64().unwrap() - 0.25).abs() < 1e-15);

    let seq = run(&["gauss", "update", "--posterior", post.to_str().unwrap(), "--data", csv.to_str().unwrap(), "--sigma", "0.5"]);
    let batch = run(&[
        "gauss", "update", "--posterior", post.to_str().unwrap(), "--data", csv.to_str().unwrap(),
        "--sigma", "0.5", "--mode", "batch",
    ]);
    let (s, b) = (stdout_json(&seq), stdout_json(&batch));
    for i in 0..2 {
        let d = s["mean"][i].as_f64().unwrap() - b["mean"][i].as_f64().unwrap();
        assert!(d.abs() < 1e-9);
    }

    let out = run(&["gauss", "predict", "--posterior", post.to_str().unwrap(), "--x", "1", "--sigma", "0.5"]);
    assert_eq!(out.status.code(), Some(1));
}
