//! Seeded random instances for the law suites.
//!
//! Distributions are drawn as small non-negative integer weights normalized
//! to exact rationals, so zero entries (and hence null sets) show up often.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::finstoch::{FinSpace, Kernel, State};
use crate::learning::{joint_channel, Model, TrainingSet};
use crate::rat::Rat;

/// Independent stream for case `case` under `seed`.
pub fn case_rng(seed: u64, case: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(case);
    rng
}

pub fn space<R: Rng>(rng: &mut R, name: &str, max_len: usize) -> FinSpace {
    let n = rng.gen_range(1..=max_len);
    space_of_size(name, n)
}

pub fn space_of_size(name: &str, n: usize) -> FinSpace {
    let prefix = name.to_lowercase();
    FinSpace::new(name, (0..n).map(|i| format!("{prefix}{i}"))).expect("generated labels are valid")
}

/// A random distribution of length `len`; `sparse` lets entries vanish.
pub fn distribution<R: Rng>(rng: &mut R, len: usize, sparse: bool) -> Vec<Rat> {
    let low = if sparse { 0 } else { 1 };
    let mut weights: Vec<i64> = (0..len).map(|_| rng.gen_range(low..=4)).collect();
    if weights.iter().all(|&w| w == 0) {
        let i = rng.gen_range(0..len);
        weights[i] = 1;
    }
    let total: i64 = weights.iter().sum();
    weights.into_iter().map(|w| Rat::new(w, total)).collect()
}

pub fn kernel<R: Rng>(rng: &mut R, source: &FinSpace, target: &FinSpace) -> Kernel {
    let rows = (0..source.len())
        .map(|_| distribution(rng, target.len(), true))
        .collect();
    Kernel::new(source.clone(), target.clone(), rows).expect("rows are distributions")
}

pub fn state<R: Rng>(rng: &mut R, space: &FinSpace, sparse: bool) -> State {
    State::new(space.clone(), distribution(rng, space.len(), sparse)).expect("row is a distribution")
}

/// Model with `|M|, |X|, |Y| ≤ max`.
pub fn model<R: Rng>(rng: &mut R, max: usize) -> Model {
    let ms = space(rng, "M", max);
    let xs = space(rng, "X", max);
    let ys = space(rng, "Y", max);
    let prior = state(rng, &ms, true);
    let px = state(rng, &xs, true);
    let f = kernel(rng, &FinSpace::product(&ms, &xs), &ys);
    Model::new(prior, px, f).expect("shapes agree")
}

/// Model whose observation space `X⊗Y` has at most `max_z` points.
pub fn model_with_small_z<R: Rng>(rng: &mut R, max_m: usize, max_z: usize) -> Model {
    let ms = space(rng, "M", max_m);
    let nz = rng.gen_range(1..=max_z);
    let divisors: Vec<usize> = (1..=nz).filter(|d| nz % d == 0).collect();
    let nx = *divisors.choose(rng).expect("1 divides everything");
    let xs = space_of_size("X", nx);
    let ys = space_of_size("Y", nz / nx);
    let prior = state(rng, &ms, true);
    let px = state(rng, &xs, true);
    let f = kernel(rng, &FinSpace::product(&ms, &xs), &ys);
    Model::new(prior, px, f).expect("shapes agree")
}

/// `n` observations such that each sequential step is uniquely invertible:
/// every new point has positive likelihood under the running posterior.
pub fn training_set<R: Rng>(rng: &mut R, m: &Model, n: usize) -> TrainingSet {
    let fj = joint_channel(m);
    let z = fj.target();
    let (xs, ys) = (m.input(), m.output());
    let mut weights: Vec<Rat> = m.prior().probs().to_vec();
    let mut items = Vec::with_capacity(n);
    for _ in 0..n {
        let valid: Vec<usize> = (0..z.len())
            .filter(|&k| {
                weights
                    .iter()
                    .enumerate()
                    .any(|(i, w)| w.is_positive() && fj.entry(i, k).is_positive())
            })
            .collect();
        let k = *valid.choose(rng).expect("posterior predictive has mass somewhere");
        for (i, w) in weights.iter_mut().enumerate() {
            *w = &*w * fj.entry(i, k);
        }
        let (xi, yi) = (k / ys.len(), k % ys.len());
        items.push((xs.elements()[xi].clone(), ys.elements()[yi].clone()));
    }
    TrainingSet::new(items)
}
