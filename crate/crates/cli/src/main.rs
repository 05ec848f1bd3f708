use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use markov_bayes::conditioning::invert;
use markov_bayes::finstoch::compose;
use markov_bayes::gauss::{self, GaussPosterior};
use markov_bayes::io::{self, state_from_labels, Labeled, ModelBundle};
use markov_bayes::laws::{self, Suite, SuiteReport};
use markov_bayes::learning::{
    batch_path, batch_update, check_output_marginal, predictive, sequential_update, BatchPath,
    DEFAULT_ZN_CAP,
};
use markov_bayes::{Error, Kernel, Rat, State};
use nalgebra::DVector;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "markov-bayes", version, about = "Exact Bayesian inversion and learning over finite kernels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compose kernels left to right.
    Compose {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bayesian inverse of a kernel against a state on its source.
    Invert {
        #[arg(long)]
        kernel: PathBuf,
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Posterior over parameters from a model bundle and training CSV.
    Learn(LearnArgs),
    /// Posterior predictive at an input label.
    Predict {
        #[arg(long)]
        model: PathBuf,
        /// Labeled posterior, or the output of `learn`.
        #[arg(long)]
        posterior: PathBuf,
        #[arg(long)]
        x: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bayesian linear regression with known noise.
    #[command(subcommand)]
    Gauss(GaussCommand),
    /// Run a law suite over seeded random instances.
    Check {
        /// Suite name, or `all`.
        #[arg(long)]
        suite: String,
        #[arg(long, default_value_t = 1000)]
        cases: u64,
        #[arg(long, env = "MARKOV_BAYES_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Seq,
    Batch,
}

#[derive(Args)]
struct LearnArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "seq")]
    mode: Mode,
    /// Largest n for which the batch update builds Z_n literally.
    #[arg(long, default_value_t = DEFAULT_ZN_CAP)]
    zn_cap: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the posterior trace as a TSV table (seq mode).
    #[arg(long)]
    tsv: Option<PathBuf>,
}

#[derive(Subcommand)]
enum GaussCommand {
    /// Posterior under the flat prior.
    Fit {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Predictive mean and variance at x*.
    Predict {
        #[arg(long)]
        posterior: PathBuf,
        /// Comma-separated coordinates.
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Update a posterior with more data.
    Update {
        #[arg(long)]
        posterior: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        sigma: f64,
        #[arg(long, value_enum, default_value = "seq")]
        mode: Mode,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Validation(String),
    Learning(String),
    Law(Value),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Learning(_) => 2,
            Failure::Law(_) => 3,
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Failure::Validation(m) => json!({"error": "validation", "message": m}),
            Failure::Learning(m) => json!({"error": "learning", "message": m}),
            Failure::Law(report) => json!({"error": "law_violation", "report": report}),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::ZeroLikelihoodObservation { .. } | Error::ZeroLikelihoodBatch | Error::RankDeficient { .. } => {
                Failure::Learning(e.to_string())
            }
            other => Failure::Validation(other.to_string()),
        }
    }
}

type Outcome<T> = Result<T, Failure>;

fn read(path: &Path) -> Outcome<String> {
    fs::read_to_string(path).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path) -> Outcome<T> {
    serde_json::from_str(&read(path)?).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))
}

fn open(path: &Path) -> Outcome<fs::File> {
    fs::File::open(path).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, value: &Value) -> Outcome<()> {
    let text = serde_json::to_string_pretty(value).expect("values serialize") + "\n";
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Validation(format!("{}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Validation(e.to_string())),
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("values serialize")
}

fn run_compose(paths: &[PathBuf], out: Option<&Path>) -> Outcome<()> {
    let mut kernels = paths.iter().map(|p| parse_json::<Kernel>(p));
    let first = kernels.next().expect("clap requires a path")?;
    let result = kernels.try_fold(first, |acc, k| Ok::<_, Failure>(compose(&acc, &k?)?))?;
    emit(out, &to_value(&result))
}

fn run_invert(kernel: &Path, state: &Path, out: Option<&Path>) -> Outcome<()> {
    let f: Kernel = parse_json(kernel)?;
    let pi: State = parse_json(state)?;
    emit(out, &to_value(&invert(&f, &pi)?))
}

fn load_bundle(path: &Path) -> Outcome<markov_bayes::learning::Model> {
    Ok(ModelBundle::from_json(&read(path)?)?.resolve()?)
}

fn run_learn(args: &LearnArgs) -> Outcome<()> {
    let model = load_bundle(&args.model)?;
    let data = io::read_training_csv(open(&args.data)?)?;
    if args.tsv.is_some() && args.mode == Mode::Batch {
        return Err(Failure::Validation("--tsv needs --mode seq".into()));
    }
    let mut trace_doc = None;
    let mut diagnostics = serde_json::Map::new();
    diagnostics.insert("observations".into(), json!(data.len()));
    if let Some(observed) = data.empirical_output(&model)? {
        let check = check_output_marginal(&model, &observed)?;
        diagnostics.insert(
            "output_marginal".into(),
            json!({
                "consistent": check.consistent,
                "pushforward": Labeled(&check.pushforward),
                "observed": Labeled(&check.observed),
            }),
        );
    }
    let posterior = match args.mode {
        Mode::Seq => {
            let trace = sequential_update(&model, &data)?;
            if let Some(path) = &args.tsv {
                fs::write(path, io::trace_tsv(&trace))
                    .map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
            }
            trace_doc = Some(Value::Array(trace.states.iter().map(|s| to_value(&Labeled(s))).collect()));
            trace.last().clone()
        }
        Mode::Batch => {
            let path = match batch_path(&model, data.len(), args.zn_cap) {
                BatchPath::Literal => "literal",
                BatchPath::Factorized => "factorized",
            };
            diagnostics.insert("batch_path".into(), json!(path));
            batch_update(&model, &data, args.zn_cap)?
        }
    };
    let mut doc = serde_json::Map::new();
    doc.insert("posterior".into(), to_value(&Labeled(&posterior)));
    if let Some(trace) = trace_doc {
        doc.insert("trace".into(), trace);
    }
    doc.insert("diagnostics".into(), Value::Object(diagnostics));
    emit(args.out.as_deref(), &Value::Object(doc))
}

fn run_predict(model: &Path, posterior: &Path, x: &str, out: Option<&Path>) -> Outcome<()> {
    let model = load_bundle(model)?;
    let doc: Value = parse_json(posterior)?;
    let labels = doc.get("posterior").unwrap_or(&doc);
    let labels: BTreeMap<String, Rat> = serde_json::from_value(labels.clone())
        .map_err(|e| Failure::Validation(format!("{}: {e}", posterior.display())))?;
    let post = state_from_labels(model.params(), &labels)?;
    let pred = predictive(&model, &post, x)?;
    emit(out, &json!({"x": x, "predictive": Labeled(&pred)}))
}

fn parse_vector(text: &str) -> Outcome<DVector<f64>> {
    let values = text
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Failure::Validation(format!("`{v}` is not a finite number")))
        })
        .collect::<Outcome<Vec<f64>>>()?;
    Ok(DVector::from_vec(values))
}

fn run_gauss(cmd: &GaussCommand) -> Outcome<()> {
    match cmd {
        GaussCommand::Fit { data, sigma, out } => {
            let data = io::read_regression_csv(open(data)?)?;
            emit(out.as_deref(), &to_value(&gauss::fit_posterior(&data, *sigma)?))
        }
        GaussCommand::Predict { posterior, x, sigma, out } => {
            let post: GaussPosterior = parse_json(posterior)?;
            let (mean, variance) = gauss::predictive_density(&post, &parse_vector(x)?, *sigma)?;
            emit(out.as_deref(), &json!({"mean": mean, "variance": variance}))
        }
        GaussCommand::Update { posterior, data, sigma, mode, out } => {
            let prior: GaussPosterior = parse_json(posterior)?;
            let data = io::read_regression_csv(open(data)?)?;
            let post = match mode {
                Mode::Seq => gauss::gauss_sequential(&data, *sigma, &prior)?,
                Mode::Batch => gauss::gauss_batch(&data, *sigma, &prior)?,
            };
            emit(out.as_deref(), &to_value(&post))
        }
    }
}

fn report_json(r: &SuiteReport) -> Value {
    json!({
        "suite": r.suite,
        "seed": r.seed,
        "cases": r.cases,
        "passed": r.passed(),
        "reproducer": r.failure,
    })
}

fn run_check(suite: &str, cases: u64, seed: u64, out: Option<&Path>) -> Outcome<()> {
    let suites: Vec<Suite> = if suite == "all" {
        Suite::ALL.to_vec()
    } else {
        vec![suite.parse()?]
    };
    let reports: Vec<SuiteReport> = suites.into_iter().map(|s| laws::run_suite(s, cases, seed)).collect();
    let doc = if reports.len() == 1 {
        report_json(&reports[0])
    } else {
        Value::Array(reports.iter().map(report_json).collect())
    };
    emit(out, &doc)?;
    match reports.iter().find(|r| !r.passed()) {
        Some(r) => Err(Failure::Law(report_json(r))),
        None => Ok(()),
    }
}

fn run(cli: Cli) -> Outcome<()> {
    match cli.command {
        Command::Compose { paths, out } => run_compose(&paths, out.as_deref()),
        Command::Invert { kernel, state, out } => run_invert(&kernel, &state, out.as_deref()),
        Command::Learn(args) => run_learn(&args),
        Command::Predict { model, posterior, x, out } => run_predict(&model, &posterior, &x, out.as_deref()),
        Command::Gauss(cmd) => run_gauss(&cmd),
        Command::Check { suite, cases, seed, out } => run_check(&suite, cases, seed, out.as_deref()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("{}", failure.to_json());
            ExitCode::from(failure.code())
        }
    }
}
