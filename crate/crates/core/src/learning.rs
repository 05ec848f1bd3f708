//! The finite Bayes learning pipeline: the joint channel of a parametrized
//! model, sequential and batch posterior updates on the parameter space, and
//! predictive distributions.

use serde::{Deserialize, Serialize};

use crate::conditioning::{disintegrate, invert, is_uniquely_invertible_at_index, jointify};
use crate::error::{Error, Result};
use crate::finstoch::{
    self, associator_inv, compose, copy, delta_at, ensure_same, identity, right_unitor_inv,
    tensor, FinSpace, Kernel, State,
};
use crate::paralens::{ParaLensMorphism, ParaMorphism};
use crate::ps::{PSMorphism, PSObject};
use crate::rat::Rat;

/// Default bound on `n` for materializing `f^n_joint : M -> Z_n`.
pub const DEFAULT_ZN_CAP: usize = 8;

/// Largest `|M|^n · |Z|^n` for which `⊗^n f_joint` is built as a table.
pub const LITERAL_ENTRY_BUDGET: usize = 1 << 15;

/// A parametrized channel `f : M⊗X -> Y` with a prior on `M` and an input
/// state on `X`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Model {
    prior: State,
    input_state: State,
    f: Kernel,
}

impl Model {
    pub fn new(prior: State, input_state: State, f: Kernel) -> Result<Self> {
        let expected = FinSpace::product(prior.space(), input_state.space());
        ensure_same(&expected, f.source())?;
        Ok(Model {
            prior,
            input_state,
            f,
        })
    }

    pub fn params(&self) -> &FinSpace {
        self.prior.space()
    }

    pub fn prior(&self) -> &State {
        &self.prior
    }

    pub fn input(&self) -> &FinSpace {
        self.input_state.space()
    }

    pub fn input_state(&self) -> &State {
        &self.input_state
    }

    pub fn output(&self) -> &FinSpace {
        self.f.target()
    }

    pub fn kernel(&self) -> &Kernel {
        &self.f
    }

    /// `Z = X⊗Y`.
    pub fn observation_space(&self) -> FinSpace {
        FinSpace::product(self.input(), self.output())
    }

    pub fn with_prior(&self, prior: State) -> Result<Self> {
        Model::new(prior, self.input_state.clone(), self.f.clone())
    }

    /// `(π_M ⊗ π_X) ; f`.
    pub fn output_pushforward(&self) -> State {
        self.prior
            .tensor(&self.input_state)
            .push(&self.f)
            .expect("model shapes checked")
    }

    /// The model as a parametrized PS-morphism
    /// `(M, π_M) ⊗ (X, π_X) -> (Y, π_Y)`.
    pub fn as_para(&self) -> ParaMorphism {
        let param = PSObject::new(self.prior.clone());
        let src = PSObject::new(self.input_state.clone());
        let body = PSMorphism::pushforward(&param.tensor(&src), &self.f).expect("model shapes checked");
        ParaMorphism::from_body(&param, &src, body).expect("body built on param ⊗ src")
    }
}

/// An ordered list of observed `(x, y)` labels.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingSet {
    pub items: Vec<(String, String)>,
}

impl TrainingSet {
    pub fn new(items: Vec<(String, String)>) -> Self {
        TrainingSet { items }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Indices of the observations in `Z = X⊗Y`.
    pub fn points(&self, model: &Model) -> Result<Vec<usize>> {
        let ny = model.output().len();
        self.items
            .iter()
            .map(|(x, y)| {
                let i = model.input().require_index(x)?;
                let j = model.output().require_index(y)?;
                Ok(FinSpace::pair_index(ny, i, j))
            })
            .collect()
    }

    /// Empirical distribution of the `y` labels.
    pub fn empirical_output(&self, model: &Model) -> Result<Option<State>> {
        if self.items.is_empty() {
            return Ok(None);
        }
        let y = model.output();
        let mut counts = vec![0i64; y.len()];
        for (_, label) in &self.items {
            counts[y.require_index(label)?] += 1;
        }
        let n = self.items.len() as i64;
        Ok(Some(State::assemble(
            y.clone(),
            counts.into_iter().map(|c| Rat::new(c, n)).collect(),
        )))
    }
}

/// Prior followed by successive posteriors.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PosteriorTrace {
    pub states: Vec<State>,
}

impl PosteriorTrace {
    pub fn last(&self) -> &State {
        self.states.last().expect("trace holds at least the prior")
    }
}

/// `f_joint : M -> X⊗Y`, built as
/// `M ≅ M⊗I --id⊗π_X--> M⊗X --id⊗copy--> M⊗(X⊗X) ≅ (M⊗X)⊗X --f⊗id--> Y⊗X --swap--> X⊗Y`.
pub fn joint_channel(m: &Model) -> Kernel {
    let (ms, xs, ys) = (m.params(), m.input(), m.output());
    let steps = [
        right_unitor_inv(ms),
        tensor(&identity(ms), m.input_state().as_kernel()),
        tensor(&identity(ms), &copy(xs)),
        associator_inv(ms, xs, xs),
        tensor(m.kernel(), &identity(xs)),
        finstoch::swap(ys, xs),
    ];
    let mut k = steps[0].clone();
    for s in &steps[1..] {
        k = compose(&k, s).expect("joint channel steps line up");
    }
    // M⊗I was only an intermediate; relabel the source as M.
    debug_assert_eq!(k.source(), ms);
    k
}

fn label(z: &FinSpace, i: usize) -> String {
    z.elements()[i].clone()
}

/// `π_{M,i+1} = δ_{z_{i+1}} ; f†_{joint,i}`, inverting against the current
/// posterior at every step.
pub fn sequential_update(m: &Model, t: &TrainingSet) -> Result<PosteriorTrace> {
    let fj = joint_channel(m);
    let points = t.points(m)?;
    let mut states = Vec::with_capacity(points.len() + 1);
    states.push(m.prior().clone());
    for (step, &z) in points.iter().enumerate() {
        let current = states.last().expect("non-empty");
        if !is_uniquely_invertible_at_index(&fj, current, z)? {
            return Err(Error::ZeroLikelihoodObservation {
                step,
                point: label(fj.target(), z),
            });
        }
        let dagger = invert(&fj, current)?;
        let next = delta_at(fj.target(), z).push(&dagger)?;
        states.push(next);
    }
    Ok(PosteriorTrace { states })
}

/// Which construction [`batch_update`] uses for a given `n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BatchPath {
    /// `f^n_joint` materialized through `⊗^n copy_M` and `⊗^n f_joint`.
    Literal,
    /// `Π_i f_joint(m)(z_i)`.
    Factorized,
}

pub fn batch_path(m: &Model, n: usize, zn_cap: usize) -> BatchPath {
    let cells = (m.params().len() * m.observation_space().len()).checked_pow(n as u32);
    match cells {
        Some(c) if n <= zn_cap && c <= LITERAL_ENTRY_BUDGET => BatchPath::Literal,
        _ => BatchPath::Factorized,
    }
}

/// `π_{M,T} = δ_{z_T} ; (f^n_joint)†` against the original prior.
pub fn batch_update(m: &Model, t: &TrainingSet, zn_cap: usize) -> Result<State> {
    match batch_path(m, t.len(), zn_cap) {
        BatchPath::Literal => batch_update_literal(m, t),
        BatchPath::Factorized => batch_update_factorized(m, t),
    }
}

/// `π_{M,T}(m) ∝ π_{M,0}(m) Π_i f_joint(m)(z_i)`.
pub fn batch_update_factorized(m: &Model, t: &TrainingSet) -> Result<State> {
    let fj = joint_channel(m);
    let points = t.points(m)?;
    let weights: Vec<Rat> = m
        .prior()
        .probs()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            points
                .iter()
                .fold(p.clone(), |acc, &z| if acc.is_zero() { acc } else { acc * fj.entry(i, z) })
        })
        .collect();
    let total: Rat = weights.iter().sum();
    if total.is_zero() {
        return Err(Error::ZeroLikelihoodBatch);
    }
    Ok(State::assemble(
        m.params().clone(),
        weights.into_iter().map(|w| w / &total).collect(),
    ))
}

/// `M -> ⊗^n M`, right-nested: `copy^1 = id`, `copy^{k+1} = copy ; (id ⊗ copy^k)`.
pub fn copy_power(space: &FinSpace, n: usize) -> Kernel {
    match n {
        0 => finstoch::del(space),
        1 => identity(space),
        _ => {
            let rest = copy_power(space, n - 1);
            compose(&copy(space), &tensor(&identity(space), &rest)).expect("copy power lines up")
        }
    }
}

/// `k ⊗ (k ⊗ (... ⊗ k))`, `n ≥ 1` factors.
pub fn tensor_power(k: &Kernel, n: usize) -> Kernel {
    assert!(n >= 1, "tensor power needs at least one factor");
    if n == 1 {
        k.clone()
    } else {
        tensor(k, &tensor_power(k, n - 1))
    }
}

/// `f^n_joint = (⊗^n copy_M) ; (⊗^n f_joint) : M -> Z_n`.
pub fn joint_power(m: &Model, n: usize) -> Kernel {
    let fj = joint_channel(m);
    if n == 0 {
        return finstoch::del(m.params());
    }
    compose(&copy_power(m.params(), n), &tensor_power(&fj, n)).expect("⊗^n M lines up")
}

/// The elementary point `z_T` of `Z_n` as an index (right-nested products
/// index like base-|Z| numerals, first observation most significant).
pub fn tuple_index(points: &[usize], z_len: usize) -> usize {
    points.iter().fold(0, |acc, &z| acc * z_len + z)
}

/// Batch update through the literal `Z_n` construction. Size grows as
/// `(|M|·|Z|)^n`; see [`batch_path`].
pub fn batch_update_literal(m: &Model, t: &TrainingSet) -> Result<State> {
    let points = t.points(m)?;
    if points.is_empty() {
        return Ok(m.prior().clone());
    }
    let fn_joint = joint_power(m, points.len());
    let zt = tuple_index(&points, m.observation_space().len());
    if !is_uniquely_invertible_at_index(&fn_joint, m.prior(), zt)? {
        return Err(Error::ZeroLikelihoodBatch);
    }
    let dagger = invert(&fn_joint, m.prior())?;
    delta_at(fn_joint.target(), zt).push(&dagger)
}

/// `f†_{joint,0} : X⊗Y -> M`.
pub fn posterior_channel(m: &Model, prior: &State) -> Result<Kernel> {
    invert(&joint_channel(m), prior)
}

/// `(posterior ⊗ δ_{x*}) ; f`.
pub fn predictive(m: &Model, posterior: &State, x_star: &str) -> Result<State> {
    ensure_same(m.params(), posterior.space())?;
    let x = finstoch::delta(m.input(), x_star)?;
    posterior.tensor(&x).push(m.kernel())
}

/// The predictive kernel `X -> Y` averaged over the training state
/// `π_{X_T} ⊗ π_{Y_T}`.
pub fn full_predictive(m: &Model, prior: &State) -> Result<Kernel> {
    let model = m.with_prior(prior.clone())?;
    let training = model.input_state().tensor(&model.output_pushforward());
    let averaged = training.push(&posterior_channel(&model, prior)?)?;
    let xs = model.input();
    let lift = tensor(averaged.as_kernel(), &identity(xs));
    compose(
        &compose(&finstoch::left_unitor_inv(xs), &lift)?,
        model.kernel(),
    )
}

/// Outcome of comparing `(π_M ⊗ π_X) ; f` with an observed output marginal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarginalCheck {
    pub pushforward: State,
    pub observed: State,
    pub consistent: bool,
}

/// The pipeline assumes the model's output pushforward equals the observed
/// marginal on `Y`. Mismatches are reported, not fatal.
pub fn check_output_marginal(m: &Model, observed: &State) -> Result<MarginalCheck> {
    ensure_same(m.output(), observed.space())?;
    let pushforward = m.output_pushforward();
    let consistent = &pushforward == observed;
    Ok(MarginalCheck {
        pushforward,
        observed: observed.clone(),
        consistent,
    })
}

/// Conditionalize the backward map `Y -> M⊗X` of a learned model into a
/// channel `X⊗Y -> M`.
pub fn posterior_from_lens(learned: &ParaLensMorphism) -> Result<Kernel> {
    let backward = learned.lens().backward();
    let y_state = backward.src().state();
    let joint = jointify(y_state, backward.rep())?;
    let (ys, mx) = (y_state.space(), backward.dst().space());
    let (ms, xs) = mx
        .factors()
        .ok_or_else(|| Error::NotAProductSpace(mx.name().to_string()))?;
    let (ny, nm, nx) = (ys.len(), ms.len(), xs.len());
    // y⊗(m⊗x) ↦ (x⊗y)⊗m
    let reorder = Kernel::deterministic(
        joint.space().clone(),
        FinSpace::product(&FinSpace::product(xs, ys), ms),
        |k| {
            let (y, rest) = (k / (nm * nx), k % (nm * nx));
            let (mi, x) = (rest / nx, rest % nx);
            (x * ny + y) * nm + mi
        },
    );
    Ok(disintegrate(&joint.push(&reorder)?)?.channel)
}
