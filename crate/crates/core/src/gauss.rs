//! Bayesian linear regression with known noise variance.
//!
//! `y = βᵀx + ε`, `ε ~ N(0, σ²)`. With the flat prior `q(β) = 1` the
//! posterior is `N((XᵀX)⁻¹Xᵀy, σ²(XᵀX)⁻¹)` and its mode is the least-squares
//! solution. With a proper Gaussian prior the conjugate update is available
//! one observation at a time or for a whole dataset.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest accepted condition number of `XᵀX`.
pub const MAX_CONDITION: f64 = 1e12;
const SYM_TOL: f64 = 1e-12;

/// Affine map plus Gaussian noise: `x ↦ N(Wx + b, Σ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussChannel {
    weight: DMatrix<f64>,
    offset: DVector<f64>,
    noise_cov: DMatrix<f64>,
}

impl GaussChannel {
    pub fn new(weight: DMatrix<f64>, offset: DVector<f64>, noise_cov: DMatrix<f64>) -> Result<Self> {
        let k = weight.nrows();
        if offset.len() != k || noise_cov.shape() != (k, k) {
            return Err(Error::DimensionMismatch(format!(
                "weight is {}x{}, offset {}, noise {}x{}",
                k,
                weight.ncols(),
                offset.len(),
                noise_cov.nrows(),
                noise_cov.ncols()
            )));
        }
        check_symmetric(&noise_cov)?;
        let min_eig = SymmetricEigen::new(noise_cov.clone())
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -SYM_TOL {
            return Err(Error::InvalidGaussian(format!(
                "noise covariance has eigenvalue {min_eig}"
            )));
        }
        Ok(GaussChannel {
            weight,
            offset,
            noise_cov,
        })
    }

    /// The regression likelihood `β ↦ N(x·β, σ²)`.
    pub fn regression(x: &DVector<f64>, sigma: f64) -> Self {
        GaussChannel {
            weight: DMatrix::from_row_slice(1, x.len(), x.as_slice()),
            offset: DVector::zeros(1),
            noise_cov: DMatrix::from_element(1, 1, sigma * sigma),
        }
    }

    pub fn weight(&self) -> &DMatrix<f64> {
        &self.weight
    }

    pub fn offset(&self) -> &DVector<f64> {
        &self.offset
    }

    pub fn noise_cov(&self) -> &DMatrix<f64> {
        &self.noise_cov
    }

    /// Push a Gaussian `N(mean, cov)` through the channel.
    pub fn push(&self, mean: &DVector<f64>, cov: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
        if mean.len() != self.weight.ncols() || cov.shape() != (mean.len(), mean.len()) {
            return Err(Error::DimensionMismatch(format!(
                "channel expects inputs of dimension {}, got {}",
                self.weight.ncols(),
                mean.len()
            )));
        }
        let m = &self.weight * mean + &self.offset;
        let c = &self.weight * cov * self.weight.transpose() + &self.noise_cov;
        Ok((m, c))
    }
}

fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::InvalidGaussian("covariance is not square".into()));
    }
    let asym = (m - m.transpose()).amax();
    if asym > SYM_TOL * m.amax().max(1.0) {
        return Err(Error::InvalidGaussian(format!("covariance asymmetric by {asym:e}")));
    }
    Ok(())
}

/// `N(mean, cov)` over regression coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PosteriorDoc", into = "PosteriorDoc")]
pub struct GaussPosterior {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
struct PosteriorDoc {
    mean: Vec<f64>,
    cov: Vec<Vec<f64>>,
}

impl TryFrom<PosteriorDoc> for GaussPosterior {
    type Error = Error;
    fn try_from(d: PosteriorDoc) -> Result<Self> {
        let n = d.mean.len();
        if d.cov.len() != n || d.cov.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch(format!("mean has {n} entries, cov is not {n}x{n}")));
        }
        let cov = DMatrix::from_fn(n, n, |i, j| d.cov[i][j]);
        GaussPosterior::new(DVector::from_vec(d.mean), cov)
    }
}

impl From<GaussPosterior> for PosteriorDoc {
    fn from(p: GaussPosterior) -> Self {
        let n = p.mean.len();
        PosteriorDoc {
            mean: p.mean.iter().cloned().collect(),
            cov: (0..n).map(|i| (0..n).map(|j| p.cov[(i, j)]).collect()).collect(),
        }
    }
}

impl GaussPosterior {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if cov.shape() != (mean.len(), mean.len()) {
            return Err(Error::DimensionMismatch(format!(
                "mean has {} entries, cov is {}x{}",
                mean.len(),
                cov.nrows(),
                cov.ncols()
            )));
        }
        check_symmetric(&cov)?;
        if cov.clone().cholesky().is_none() {
            return Err(Error::InvalidGaussian("covariance is not positive definite".into()));
        }
        Ok(GaussPosterior { mean, cov })
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Observations `(x_i, y_i)` with `x_i ∈ ℝⁿ`.
#[derive(Clone, Debug, PartialEq)]
pub struct RegressionData {
    inputs: Vec<DVector<f64>>,
    targets: Vec<f64>,
}

impl RegressionData {
    pub fn new(inputs: Vec<DVector<f64>>, targets: Vec<f64>) -> Result<Self> {
        if inputs.len() != targets.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} inputs but {} targets",
                inputs.len(),
                targets.len()
            )));
        }
        if let Some(first) = inputs.first() {
            let n = first.len();
            if n == 0 || inputs.iter().any(|x| x.len() != n) {
                return Err(Error::DimensionMismatch("inputs have inconsistent dimension".into()));
            }
        }
        Ok(RegressionData { inputs, targets })
    }

    /// One row per observation.
    pub fn from_rows(rows: &[Vec<f64>], targets: &[f64]) -> Result<Self> {
        RegressionData::new(
            rows.iter().map(|r| DVector::from_column_slice(r)).collect(),
            targets.to_vec(),
        )
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.inputs.first().map(|x| x.len())
    }

    pub fn inputs(&self) -> &[DVector<f64>] {
        &self.inputs
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    /// `N × n` design matrix.
    pub fn design(&self) -> DMatrix<f64> {
        let n = self.dim().unwrap_or(0);
        DMatrix::from_fn(self.len(), n, |i, j| self.inputs[i][j])
    }

    pub fn target_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.targets)
    }

    pub fn split_at(&self, k: usize) -> (RegressionData, RegressionData) {
        (
            RegressionData {
                inputs: self.inputs[..k].to_vec(),
                targets: self.targets[..k].to_vec(),
            },
            RegressionData {
                inputs: self.inputs[k..].to_vec(),
                targets: self.targets[k..].to_vec(),
            },
        )
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma.is_finite() && sigma > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidGaussian(format!("noise scale must be positive, got {sigma}")))
    }
}

fn condition_number(gram: &DMatrix<f64>) -> f64 {
    let eig = SymmetricEigen::new(gram.clone()).eigenvalues;
    let max = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Posterior under the flat prior: mean from a QR least-squares solve,
/// covariance `σ²(XᵀX)⁻¹` through a Cholesky factor.
pub fn fit_posterior(data: &RegressionData, sigma: f64) -> Result<GaussPosterior> {
    check_sigma(sigma)?;
    let x = data.design();
    let n = x.ncols();
    if data.len() < n || n == 0 {
        return Err(Error::RankDeficient {
            condition: f64::INFINITY,
        });
    }
    let gram = x.transpose() * &x;
    let condition = condition_number(&gram);
    if condition.is_nan() || condition >= MAX_CONDITION {
        return Err(Error::RankDeficient { condition });
    }
    let qr = x.clone().qr();
    let qty = qr.q().transpose() * data.target_vector();
    let mean = qr
        .r()
        .solve_upper_triangular(&qty)
        .ok_or(Error::RankDeficient { condition })?;
    let chol = gram.cholesky().ok_or(Error::RankDeficient { condition })?;
    let mut cov = chol.inverse() * (sigma * sigma);
    symmetrize(&mut cov);
    GaussPosterior::new(mean, cov)
}

/// Mode of the posterior.
pub fn map_estimate(post: &GaussPosterior) -> DVector<f64> {
    post.mean.clone()
}

/// Mean and variance of `p(y* | x*, T) = ∫ p(y* | x*, β) p(β | T) dβ`.
pub fn predictive_density(post: &GaussPosterior, x_star: &DVector<f64>, sigma: f64) -> Result<(f64, f64)> {
    check_sigma(sigma)?;
    if x_star.len() != post.dim() {
        return Err(Error::DimensionMismatch(format!(
            "x* has {} entries, posterior has {}",
            x_star.len(),
            post.dim()
        )));
    }
    let (m, v) = GaussChannel::regression(x_star, sigma).push(&post.mean, &post.cov)?;
    Ok((m[0], v[(0, 0)]))
}

fn check_prior(data: &RegressionData, prior: &GaussPosterior) -> Result<()> {
    match data.dim() {
        Some(n) if n != prior.dim() => Err(Error::DimensionMismatch(format!(
            "data has dimension {n}, prior {}",
            prior.dim()
        ))),
        _ => Ok(()),
    }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m = (&*m + t) * 0.5;
}

/// One conjugate update per observation, in order (covariance form):
/// `k = Σx / (xᵀΣx + σ²)`, `μ ← μ + k(y − xᵀμ)`, `Σ ← Σ − k xᵀΣ`.
pub fn gauss_sequential(data: &RegressionData, sigma: f64, prior: &GaussPosterior) -> Result<GaussPosterior> {
    check_sigma(sigma)?;
    check_prior(data, prior)?;
    let mut mean = prior.mean.clone();
    let mut cov = prior.cov.clone();
    for (x, &y) in data.inputs.iter().zip(&data.targets) {
        let sx = &cov * x;
        let s = x.dot(&sx) + sigma * sigma;
        let gain = &sx / s;
        mean += &gain * (y - x.dot(&mean));
        cov -= &gain * sx.transpose();
        symmetrize(&mut cov);
    }
    GaussPosterior::new(mean, cov)
}

/// Whole-dataset conjugate update (information form):
/// `Λ = Σ₀⁻¹ + XᵀX/σ²`, `μ = Λ⁻¹(Σ₀⁻¹μ₀ + Xᵀy/σ²)`.
pub fn gauss_batch(data: &RegressionData, sigma: f64, prior: &GaussPosterior) -> Result<GaussPosterior> {
    check_sigma(sigma)?;
    check_prior(data, prior)?;
    if data.is_empty() {
        return Ok(prior.clone());
    }
    let prior_chol = prior
        .cov
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidGaussian("prior covariance not positive definite".into()))?;
    let prior_prec = prior_chol.inverse();
    let x = data.design();
    let s2 = sigma * sigma;
    let precision = &prior_prec + x.transpose() * &x / s2;
    let info = &prior_prec * &prior.mean + x.transpose() * data.target_vector() / s2;
    let chol = precision
        .cholesky()
        .ok_or_else(|| Error::InvalidGaussian("posterior precision not positive definite".into()))?;
    let mean = chol.solve(&info);
    let mut cov = chol.inverse();
    symmetrize(&mut cov);
    GaussPosterior::new(mean, cov)
}
