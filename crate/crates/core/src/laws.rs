//! Randomized law suites over seeded instances.
//!
//! Each case draws its instance from an independent stream
//! ([`gen::case_rng`]), so a failure is reproduced by `(seed, case)` alone.
//! Cases run in parallel; the reported failure is always the lowest failing
//! case index, which keeps output deterministic.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::conditioning::{as_equal, canonicalize, disintegrate, invert, jointify};
use crate::error::Error;
use crate::finstoch::{
    associator, compose, copy, del, identity, left_unitor, middle_swap, right_unitor, swap,
    tensor, FinSpace, Kernel,
};
use crate::gauss::{self, GaussPosterior, RegressionData};
use crate::gen;
use crate::learning::{
    batch_update_factorized, batch_update_literal, sequential_update, TrainingSet,
};
use crate::paralens::{
    bayes_learn, functor_r, lens_compose, para_compose, para_lens_compose, reparametrize,
    reparametrize_lens, ParaLensMorphism, ParaMorphism,
};
use crate::ps::{dagger, ps_compose, ps_morphism, ps_tensor, PSMorphism, PSObject};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Markov,
    Inversion,
    Dagger,
    Functor,
    Coincidence,
    Zn,
    Gauss,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Markov,
        Suite::Inversion,
        Suite::Dagger,
        Suite::Functor,
        Suite::Coincidence,
        Suite::Zn,
        Suite::Gauss,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Markov => "markov",
            Suite::Inversion => "inversion",
            Suite::Dagger => "dagger",
            Suite::Functor => "functor",
            Suite::Coincidence => "coincidence",
            Suite::Zn => "zn",
            Suite::Gauss => "gauss",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown suite `{s}`")))
    }
}

/// A broken law together with the instance that broke it.
#[derive(Clone, Debug, Serialize)]
pub struct Violation {
    pub law: String,
    pub instance: Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct CaseFailure {
    pub suite: Suite,
    pub seed: u64,
    pub case: u64,
    pub law: String,
    pub instance: Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub seed: u64,
    pub cases: u64,
    pub failure: Option<CaseFailure>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

type CaseResult = Result<(), Violation>;

fn check(ok: bool, law: &str, instance: impl FnOnce() -> Value) -> CaseResult {
    if ok {
        Ok(())
    } else {
        Err(Violation {
            law: law.to_string(),
            instance: instance(),
        })
    }
}

fn op<T>(r: crate::Result<T>, law: &str) -> Result<T, Violation> {
    r.map_err(|e| Violation {
        law: format!("{law}: unexpected error"),
        instance: json!(e.to_string()),
    })
}

/// Run one case of `suite`.
pub fn check_case(suite: Suite, seed: u64, case: u64) -> CaseResult {
    let mut rng = gen::case_rng(seed, case);
    match suite {
        Suite::Markov => markov_case(&mut rng),
        Suite::Inversion => inversion_case(&mut rng),
        Suite::Dagger => dagger_case(&mut rng),
        Suite::Functor => functor_case(&mut rng),
        Suite::Coincidence => coincidence_case(&mut rng),
        Suite::Zn => zn_case(&mut rng),
        Suite::Gauss => gauss_case(&mut rng),
    }
}

pub fn run_suite(suite: Suite, cases: u64, seed: u64) -> SuiteReport {
    let failure = (0..cases)
        .into_par_iter()
        .filter_map(|case| check_case(suite, seed, case).err().map(|v| (case, v)))
        .min_by_key(|(case, _)| *case)
        .map(|(case, v)| CaseFailure {
            suite,
            seed,
            case,
            law: v.law,
            instance: v.instance,
        });
    SuiteReport {
        suite,
        seed,
        cases,
        failure,
    }
}

const MAX_SIDE: usize = 3;

fn markov_case(rng: &mut ChaCha8Rng) -> CaseResult {
    let a = gen::space(rng, "A", MAX_SIDE);
    let b = gen::space(rng, "B", MAX_SIDE);
    let c = gen::space(rng, "C", MAX_SIDE);
    let d = gen::space(rng, "D", MAX_SIDE);
    let f = gen::kernel(rng, &a, &b);
    let g = gen::kernel(rng, &b, &c);
    let h = gen::kernel(rng, &c, &d);
    let k = gen::kernel(rng, &d, &a);
    let inst = || json!({ "f": f, "g": g, "h": h, "k": k });

    let fg = op(compose(&f, &g), "compose")?;
    let gh = op(compose(&g, &h), "compose")?;
    check(
        op(compose(&fg, &h), "compose")? == op(compose(&f, &gh), "compose")?,
        "associativity",
        inst,
    )?;
    check(
        op(compose(&identity(&a), &f), "compose")? == f
            && op(compose(&f, &identity(&b)), "compose")? == f,
        "unitality",
        inst,
    )?;
    check(
        [&f, &g, &h, &k, &fg, &tensor(&f, &h)].iter().all(|x| x.is_stochastic()),
        "stochasticity",
        inst,
    )?;

    // (f⊗h);(g⊗k) = (f;g)⊗(h;k)
    let lhs = op(compose(&tensor(&f, &h), &tensor(&g, &k)), "compose")?;
    let rhs = tensor(&fg, &op(compose(&h, &k), "compose")?);
    check(lhs == rhs, "interchange", inst)?;

    // tensor is associative up to the associator
    let l = op(compose(&tensor(&tensor(&f, &g), &h), &associator(&b, &c, &d)), "compose")?;
    let r = op(compose(&associator(&a, &b, &c), &tensor(&f, &tensor(&g, &h))), "compose")?;
    check(l == r, "tensor associativity", inst)?;

    // comonoid laws on A
    let cp = copy(&a);
    let co_l = op(
        compose(&op(compose(&cp, &tensor(&cp, &identity(&a))), "compose")?, &associator(&a, &a, &a)),
        "compose",
    )?;
    let co_r = op(compose(&cp, &tensor(&identity(&a), &cp)), "compose")?;
    check(co_l == co_r, "coassociativity", inst)?;
    let counit_l = op(
        compose(&op(compose(&cp, &tensor(&del(&a), &identity(&a))), "compose")?, &left_unitor(&a)),
        "compose",
    )?;
    let counit_r = op(
        compose(&op(compose(&cp, &tensor(&identity(&a), &del(&a))), "compose")?, &right_unitor(&a)),
        "compose",
    )?;
    check(counit_l == identity(&a) && counit_r == identity(&a), "counit", inst)?;
    check(op(compose(&cp, &swap(&a, &a)), "compose")? == cp, "cocommutativity", inst)?;
    let sw = op(compose(&swap(&a, &b), &swap(&b, &a)), "compose")?;
    check(sw == identity(&FinSpace::product(&a, &b)), "swap involution", inst)?;

    // terminality of I
    check(op(compose(&f, &del(&b)), "compose")? == del(&a), "terminality", inst)?;

    // agreement: copy_{A⊗B} = (copy_A ⊗ copy_B) ; middle swap
    let ab = FinSpace::product(&a, &b);
    let agree = op(compose(&tensor(&copy(&a), &copy(&b)), &middle_swap(&a, &a, &b, &b)), "compose")?;
    check(agree == copy(&ab), "agreement", inst)
}

fn inversion_case(rng: &mut ChaCha8Rng) -> CaseResult {
    let x = gen::space(rng, "X", 4);
    let y = gen::space(rng, "Y", 4);
    let f = gen::kernel(rng, &x, &y);
    let pi = gen::state(rng, &x, true);
    let inst = || json!({ "f": f, "pi": pi });

    let dag = op(invert(&f, &pi), "invert")?;
    let push = op(pi.push(&f), "push")?;
    let lhs = op(jointify(&pi, &f), "jointify")?;
    let rhs = op(op(jointify(&push, &dag), "jointify")?.push(&swap(&y, &x)), "push")?;
    check(lhs == rhs, "bayesian inversion defining equality", inst)?;

    let d = op(disintegrate(&lhs), "disintegrate")?;
    check(d.marginal == pi, "disintegration marginal", inst)?;
    check(op(as_equal(&f, &d.channel, &pi), "as_equal")?, "disintegration round trip", inst)?;
    check(d.jointify() == lhs, "disintegration reconstructs joint", inst)?;

    // Any other inverse (here: perturbed off the pushforward support) agrees a.s.
    let other = gen::kernel(rng, &y, &x);
    let alt = Kernel::new(
        y.clone(),
        x.clone(),
        (0..y.len())
            .map(|j| {
                if push.probs()[j].is_zero() {
                    other.row(j).to_vec()
                } else {
                    dag.row(j).to_vec()
                }
            })
            .collect(),
    )
    .expect("rows are distributions");
    let rhs_alt = op(op(jointify(&push, &alt), "jointify")?.push(&swap(&y, &x)), "push")?;
    check(rhs_alt == lhs, "alternative inverse is an inverse", inst)?;
    check(op(as_equal(&dag, &alt, &push), "as_equal")?, "inverses agree almost surely", inst)?;

    // as_equal is an equivalence and is exact equality under full support
    let g = gen::kernel(rng, &x, &y);
    let e_fg = op(as_equal(&f, &g, &pi), "as_equal")?;
    let e_gf = op(as_equal(&g, &f, &pi), "as_equal")?;
    check(e_fg == e_gf && op(as_equal(&f, &f, &pi), "as_equal")?, "as_equal equivalence", inst)?;
    let canon = op(canonicalize(&f, &pi), "canonicalize")?;
    check(op(as_equal(&f, &canon, &pi), "as_equal")?, "canonical representative", inst)?;
    let full = gen::state(rng, &x, false);
    check(
        op(as_equal(&f, &g, &full), "as_equal")? == (f == g),
        "as_equal under full support",
        inst,
    )
}

/// A random state-preserving morphism out of `src`.
fn ps_out(rng: &mut ChaCha8Rng, src: &PSObject, name: &str) -> Result<PSMorphism, Violation> {
    let y = gen::space(rng, name, MAX_SIDE);
    let k = gen::kernel(rng, src.space(), &y);
    op(PSMorphism::pushforward(src, &k), "pushforward")
}

fn dagger_case(rng: &mut ChaCha8Rng) -> CaseResult {
    let x = gen::space(rng, "X", MAX_SIDE);
    let a = PSObject::new(gen::state(rng, &x, true));
    let f = ps_out(rng, &a, "Y")?;
    let g = ps_out(rng, f.dst(), "Z")?;
    let w = gen::space(rng, "W", MAX_SIDE);
    let b = PSObject::new(gen::state(rng, &w, true));
    let h = ps_out(rng, &b, "V")?;
    let inst = || json!({ "f": f, "g": g, "h": h });

    check(dagger(&dagger(&f)) == f, "dagger involution", inst)?;
    let fg = op(ps_compose(&f, &g), "ps_compose")?;
    check(
        dagger(&fg) == op(ps_compose(&dagger(&g), &dagger(&f)), "ps_compose")?,
        "dagger contravariant functoriality",
        inst,
    )?;
    check(
        dagger(&PSMorphism::identity(&a)) == PSMorphism::identity(&a),
        "dagger preserves identities",
        inst,
    )?;
    check(
        dagger(&ps_tensor(&f, &h)) == ps_tensor(&dagger(&f), &dagger(&h)),
        "dagger is monoidal",
        inst,
    )?;
    check(
        ps_compose(&f, &g).is_ok()
            && fg.src().state().push(fg.rep()).ok().as_ref() == Some(fg.dst().state()),
        "state preservation closed under composition",
        inst,
    )?;
    let t = ps_tensor(&f, &h);
    check(
        t.src().state().push(t.rep()).ok().as_ref() == Some(t.dst().state()),
        "state preservation closed under tensor",
        inst,
    )?;

    // ps_morphism is constant on a.s. classes
    let noise = gen::kernel(rng, f.src().space(), f.dst().space());
    let rows = (0..x.len())
        .map(|i| {
            if a.state().probs()[i].is_zero() {
                noise.row(i).to_vec()
            } else {
                f.rep().row(i).to_vec()
            }
        })
        .collect();
    let variant = Kernel::new(x.clone(), f.dst().space().clone(), rows).expect("rows are distributions");
    check(
        op(ps_morphism(&a, f.dst(), &variant), "ps_morphism")? == f,
        "ps_morphism constant on a.s. classes",
        inst,
    )
}

fn random_para(
    rng: &mut ChaCha8Rng,
    src: &PSObject,
    pname: &str,
    yname: &str,
) -> Result<ParaMorphism, Violation> {
    let p = gen::space(rng, pname, 2);
    let param = PSObject::new(gen::state(rng, &p, true));
    let y = gen::space(rng, yname, 2);
    let body_src = param.tensor(src);
    let k = gen::kernel(rng, body_src.space(), &y);
    let body = op(PSMorphism::pushforward(&body_src, &k), "pushforward")?;
    op(ParaMorphism::from_body(&param, src, body), "para")
}

fn functor_case(rng: &mut ChaCha8Rng) -> CaseResult {
    let x = gen::space(rng, "X", MAX_SIDE);
    let a = PSObject::new(gen::state(rng, &x, true));
    let f = ps_out(rng, &a, "Y")?;
    let g = ps_out(rng, f.dst(), "Z")?;
    let inst = || json!({ "f": f, "g": g });

    let fg = op(ps_compose(&f, &g), "ps_compose")?;
    check(
        functor_r(&fg) == op(lens_compose(&functor_r(&f), &functor_r(&g)), "lens_compose")?,
        "R preserves composition",
        inst,
    )?;
    check(
        functor_r(&PSMorphism::identity(&a)) == crate::paralens::LensMorphism::identity(&a),
        "R preserves identities",
        inst,
    )?;

    let pf = random_para(rng, &a, "P", "Y")?;
    let pg = random_para(rng, pf.dst(), "Q", "Z")?;
    let inst = || json!({ "f": pf, "g": pg });
    let composite = op(para_compose(&pf, &pg), "para_compose")?;
    check(
        bayes_learn(&composite)
            == op(para_lens_compose(&bayes_learn(&pf), &bayes_learn(&pg)), "para_lens_compose")?,
        "Para(R) preserves composition",
        inst,
    )?;

    // naturality in the parameter
    let q = gen::space(rng, "S", 2);
    let qobj = PSObject::new(gen::state(rng, &q, true));
    let alpha_k = gen::kernel(rng, &q, pf.param().space());
    let alpha_pushed = op(PSMorphism::pushforward(&qobj, &alpha_k), "pushforward")?;
    // re-express f against the pushed-forward parameter state
    let param2 = alpha_pushed.dst().clone();
    let body2 = op(
        PSMorphism::pushforward(&param2.tensor(pf.src()), pf.body().rep()),
        "pushforward",
    )?;
    let f2 = op(ParaMorphism::from_body(&param2, pf.src(), body2), "para")?;
    check(
        bayes_learn(&op(reparametrize(&f2, &alpha_pushed), "reparametrize")?)
            == op(reparametrize_lens(&bayes_learn(&f2), &alpha_pushed), "reparametrize_lens")?,
        "BayesLearn natural in reparametrization",
        inst,
    )?;

    // j-square: learning a trivially parametrized morphism is R then j
    check(
        bayes_learn(&ParaMorphism::trivial(&f)) == ParaLensMorphism::trivial(&functor_r(&f)),
        "BayesLearn ∘ j = j ∘ R",
        inst,
    )
}

fn coincidence_case(rng: &mut ChaCha8Rng) -> CaseResult {
    let m = gen::model(rng, 4);
    let n = rng.gen_range(0..=5);
    let t = gen::training_set(rng, &m, n);
    let inst = || {
        json!({
            "prior": m.prior(),
            "input_state": m.input_state(),
            "f": m.kernel(),
            "training": t.items,
        })
    };
    let seq = op(sequential_update(&m, &t), "sequential_update")?;
    let batch = op(batch_update_factorized(&m, &t), "batch_update")?;
    check(seq.last() == &batch, "sequential equals batch", inst)?;
    check(
        seq.states.iter().all(|s| s.as_kernel().is_stochastic()),
        "posteriors normalized",
        inst,
    )?;
    let mut shuffled = t.items.clone();
    shuffled.shuffle(rng);
    let ts = TrainingSet::new(shuffled);
    check(
        op(batch_update_factorized(&m, &ts), "batch_update")? == batch,
        "batch order invariance",
        inst,
    )?;
    // Every permutation of a valid set stays valid: the running posterior's
    // support only depends on the multiset of points seen.
    let seq_shuffled = op(sequential_update(&m, &ts), "sequential_update")?;
    check(seq_shuffled.last() == &batch, "sequential order invariance", inst)
}

fn zn_case(rng: &mut ChaCha8Rng) -> CaseResult {
    let m = gen::model_with_small_z(rng, 4, 3);
    let n = rng.gen_range(1..=4);
    let t = gen::training_set(rng, &m, n);
    let inst = || {
        json!({
            "prior": m.prior(),
            "input_state": m.input_state(),
            "f": m.kernel(),
            "training": t.items,
        })
    };
    let literal = op(batch_update_literal(&m, &t), "batch_update_literal")?;
    let factorized = op(batch_update_factorized(&m, &t), "batch_update_factorized")?;
    check(literal == factorized, "Z_n literal equals factorized", inst)
}

/// Random well-conditioned regression problem.
pub fn regression_instance<R: Rng>(rng: &mut R) -> (RegressionData, f64, DVector<f64>) {
    loop {
        let dim = rng.gen_range(1..=4);
        let n = rng.gen_range(dim + 5..=50);
        let beta = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal) * 2.0);
        let sigma = rng.gen_range(0.1..2.0);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dim).map(|_| rng.sample(StandardNormal)).collect())
            .collect();
        let ys: Vec<f64> = rows
            .iter()
            .map(|r| {
                let mean: f64 = r.iter().zip(beta.iter()).map(|(a, b)| a * b).sum();
                mean + sigma * rng.sample::<f64, _>(StandardNormal)
            })
            .collect();
        let data = RegressionData::from_rows(&rows, &ys).expect("consistent shapes");
        let x = data.design();
        let eig = SymmetricEigen::new(x.transpose() * &x).eigenvalues;
        let (lo, hi) = eig.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &e| (l.min(e), h.max(e)));
        if lo > 0.0 && hi / lo < 1e6 {
            return (data, sigma, beta);
        }
    }
}

fn gauss_case(rng: &mut ChaCha8Rng) -> CaseResult {
    let (data, sigma, _) = regression_instance(rng);
    let inst = || {
        json!({
            "inputs": data.inputs().iter().map(|x| x.iter().cloned().collect::<Vec<_>>()).collect::<Vec<_>>(),
            "targets": data.targets(),
            "sigma": sigma,
        })
    };
    let post = op(gauss::fit_posterior(&data, sigma), "fit_posterior")?;
    let x = data.design();
    let xtx = x.transpose() * &x;
    let ols = xtx
        .clone()
        .lu()
        .solve(&(x.transpose() * data.target_vector()))
        .expect("well conditioned");
    check((gauss::map_estimate(&post) - ols).amax() < 1e-9, "MAP equals OLS", inst)?;

    let dim = post.dim();
    let prior = GaussPosterior::new(DVector::zeros(dim), DMatrix::identity(dim, dim) * 10.0)
        .expect("identity is SPD");
    let batch = op(gauss::gauss_batch(&data, sigma, &prior), "gauss_batch")?;
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(rng);
    let shuffled = RegressionData::new(
        order.iter().map(|&i| data.inputs()[i].clone()).collect(),
        order.iter().map(|&i| data.targets()[i]).collect(),
    )
    .expect("same shapes");
    let seq = op(gauss::gauss_sequential(&shuffled, sigma, &prior), "gauss_sequential")?;
    check(
        (seq.mean() - batch.mean()).amax() < 1e-9 && (seq.cov() - batch.cov()).amax() < 1e-9,
        "sequential equals batch",
        inst,
    )?;

    let k = rng.gen_range(0..=data.len());
    let (first, second) = data.split_at(k);
    let q1 = op(gauss::gauss_batch(&first, sigma, &prior), "gauss_batch")?;
    let q2 = op(gauss::gauss_batch(&second, sigma, &q1), "gauss_batch")?;
    check(
        (q2.mean() - batch.mean()).amax() < 1e-9 && (q2.cov() - batch.cov()).amax() < 1e-9,
        "split update equals whole update",
        inst,
    )?;
    let shrink = SymmetricEigen::new(prior.cov() - q1.cov()).eigenvalues.min();
    let shrink2 = SymmetricEigen::new(q1.cov() - q2.cov()).eigenvalues.min();
    check(shrink > -1e-9 && shrink2 > -1e-9, "covariance nonincreasing", inst)?;

    let x_star = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    let (_, var) = op(gauss::predictive_density(&post, &x_star, sigma), "predictive_density")?;
    check(var >= sigma * sigma, "predictive variance at least noise", inst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_suite_passes_a_few_cases() {
        for suite in Suite::ALL {
            let report = run_suite(suite, 25, 11);
            assert!(report.passed(), "{suite}: {:?}", report.failure);
        }
    }

    #[test]
    fn parse_names() {
        assert_eq!("dagger".parse::<Suite>().unwrap(), Suite::Dagger);
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn deterministic_cases() {
        let a = gen::model(&mut gen::case_rng(3, 9), 4);
        let b = gen::model(&mut gen::case_rng(3, 9), 4);
        assert_eq!(a, b);
    }
}
