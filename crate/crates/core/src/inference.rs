//! Coefficient covariance: plug-in sandwich and nonparametric bootstrap.
//!
//! The sandwich estimate is `A⁻¹ V A⁻ᵀ / n` with
//!
//! ```text
//! V = n⁻¹ Σ_j Σ_i (z_i - μ̂_j)(z_i - μ̂_j)' Y_i(t_j) ΔΛ̂_i(j)
//! ```
//!
//! and `A` chosen by [`InformationMethod`].

use nalgebra::DMatrix;
use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{CauseSteps, Dataset, RiskIndex};
use crate::error::{Error, Result};
use crate::estimate::{
    fit_cause, profile_jacobian, score_jacobian, CauseFit, FitConfig, JacobianMode,
};
use crate::linalg;
use crate::link::LinkSpec;

/// Minimum number of bootstrap replicates.
pub const MIN_BOOTSTRAP_REPS: usize = 50;
/// Largest tolerated share of failed bootstrap replicates.
pub const MAX_FAILED_SHARE: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarianceMethod {
    Sandwich,
    Bootstrap,
}

/// Which matrix plays the role of the derivative of the estimating function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InformationMethod {
    /// `-n⁻¹ dU(β, ĥ_β)/dβ`, including the response of the baseline to `β`.
    #[default]
    Profile,
    /// `-n⁻¹ ∂U(β, ĥ)/∂β` with the baseline frozen.
    FixedBaseline,
    /// `n⁻¹ Σ_{j≥2} Σ_i (z_i - μ̂_j) z_i' λ'(z_i'β̂ + ĥ_j) Y_i(t_j) Δĥ_j`.
    /// The first jump is skipped because `Δĥ_1` is infinite.
    Direct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceEstimate {
    pub cause: usize,
    pub method: VarianceMethod,
    /// Covariance of `β̂`, row-major.
    pub covariance: Vec<Vec<f64>>,
    pub standard_errors: Vec<f64>,
    pub bootstrap_reps: Option<usize>,
    pub failed_reps: Option<usize>,
}

impl VarianceEstimate {
    fn from_matrix(cause: usize, method: VarianceMethod, m: &DMatrix<f64>) -> Self {
        let sym = (m + m.transpose()) * 0.5;
        let covariance = (0..sym.nrows())
            .map(|r| (0..sym.ncols()).map(|c| sym[(r, c)]).collect())
            .collect();
        let standard_errors = (0..sym.nrows())
            .map(|i| sym[(i, i)].max(0.0).sqrt())
            .collect();
        Self {
            cause,
            method,
            covariance,
            standard_errors,
            bootstrap_reps: None,
            failed_reps: None,
        }
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let p = self.covariance.len();
        DMatrix::from_fn(p, p, |r, c| self.covariance[r][c])
    }
}

/// Weighted covariate mean at every step: `Σ_i z_i λ_i Y_i / Σ_i λ_i Y_i`
/// with `λ_i = λ(z_i'β̂ + ĥ_j)`.
fn step_means(
    link: LinkSpec,
    steps: &CauseSteps,
    patterns: &[Vec<f64>],
    eta: &[f64],
    h: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let p = patterns.first().map_or(0, Vec::len);
    (0..steps.len())
        .map(|j| {
            let mut num = vec![0.0; p];
            let mut den = 0.0;
            for &(g, c) in steps.at_risk(j) {
                let w = c * link.hazard(eta[g] + h[j]);
                den += w;
                for (n, z) in num.iter_mut().zip(&patterns[g]) {
                    *n += w * z;
                }
            }
            if den.is_nan() || den <= 0.0 {
                return Err(Error::ZeroDenominator {
                    time: steps.time(j),
                });
            }
            Ok(num.into_iter().map(|x| x / den).collect())
        })
        .collect()
}

/// Plug-in `B̂(t, s) = exp(Σ_{s < t_j ≤ t} [Σ_i λ'_i Y_i / Σ_i λ_i Y_i] Δĥ_j)`.
///
/// Returns 1 when no jump lies in `(s, t]`. The first jump has `Δĥ = ∞` and
/// is left out of the sum.
pub fn b_factor(t: f64, s: f64, fit: &CauseFit, idx: &RiskIndex) -> f64 {
    let steps = idx.cause(fit.cause);
    let eta = idx.linear_predictors(&fit.beta_hat);
    let h = &fit.baseline.h_values;
    let mut exponent = 0.0;
    for j in 1..steps.len() {
        let tj = steps.time(j);
        if tj <= s || tj > t {
            continue;
        }
        let (mut num, mut den) = (0.0, 0.0);
        for &(g, c) in steps.at_risk(j) {
            num += c * fit.link.hazard_derivative(eta[g] + h[j]);
            den += c * fit.link.hazard(eta[g] + h[j]);
        }
        exponent += num / den * (h[j] - h[j - 1]);
    }
    exponent.exp()
}

/// `μ̂(t) = Ĉ_z(t) / Ĉ_d(t)` at a cause-k event time `t`, evaluated subject by
/// subject from the records in `ds`.
pub fn mu_hat(t: f64, fit: &CauseFit, idx: &RiskIndex, ds: &Dataset) -> Result<Vec<f64>> {
    let steps = idx.cause(fit.cause);
    let j = steps.times().iter().position(|&s| s == t).ok_or_else(|| {
        Error::InvalidConfig(format!("{t} is not a cause-{} event time", fit.cause))
    })?;
    let h = fit.baseline.h_values[j];
    let n = ds.len() as f64;
    let p = ds.covariate_dim();
    let mut c_z = vec![0.0; p];
    let mut c_d = 0.0;
    for r in ds.records().iter().filter(|r| r.at_risk(t)) {
        let eta: f64 = r
            .covariates
            .iter()
            .zip(&fit.beta_hat)
            .map(|(z, b)| z * b)
            .sum();
        let lam = fit.link.hazard(eta + h);
        let b = b_factor(t, r.time, fit, idx);
        for (cz, z) in c_z.iter_mut().zip(&r.covariates) {
            *cz += z * lam * b / n;
        }
        c_d += lam / n;
    }
    if c_d.is_nan() || c_d <= 0.0 {
        return Err(Error::ZeroDenominator { time: t });
    }
    Ok(c_z.into_iter().map(|x| x / c_d).collect())
}

/// Weighted means `μ̂(t_j)` at every cause-k event time.
pub fn mu_path(fit: &CauseFit, idx: &RiskIndex) -> Result<Vec<Vec<f64>>> {
    let steps = idx.cause(fit.cause);
    let eta = idx.linear_predictors(&fit.beta_hat);
    step_means(
        fit.link,
        steps,
        idx.patterns(),
        &eta,
        &fit.baseline.h_values,
    )
}

/// `n⁻¹ Σ_j Σ_i (z_i - μ̂_j)(z_i - μ̂_j)' Y_i ΔΛ̂_i(j)`.
pub fn score_variance(fit: &CauseFit, idx: &RiskIndex) -> Result<DMatrix<f64>> {
    let steps = idx.cause(fit.cause);
    let patterns = idx.patterns();
    let p = fit.beta_hat.len();
    let eta = idx.linear_predictors(&fit.beta_hat);
    let mu = step_means(fit.link, steps, patterns, &eta, &fit.baseline.h_values)?;
    let mut v = DMatrix::zeros(p, p);
    for (j, mu_j) in mu.iter().enumerate() {
        let (h, hp) = (fit.baseline.h_values[j], fit.baseline.previous(j));
        for &(g, c) in steps.at_risk(j) {
            let w = c * (fit.link.cum_hazard(h + eta[g]) - fit.link.cum_hazard(hp + eta[g]));
            let d: Vec<f64> = patterns[g].iter().zip(mu_j).map(|(z, m)| z - m).collect();
            for r in 0..p {
                for s in 0..p {
                    v[(r, s)] += w * d[r] * d[s];
                }
            }
        }
    }
    Ok(v / idx.num_subjects() as f64)
}

/// The information matrix `A` (already divided by `n`).
pub fn information(
    fit: &CauseFit,
    idx: &RiskIndex,
    method: InformationMethod,
) -> Result<DMatrix<f64>> {
    let n = idx.num_subjects() as f64;
    match method {
        InformationMethod::Profile => {
            Ok(-profile_jacobian(&fit.beta_hat, &fit.baseline, fit.link, idx)? / n)
        }
        InformationMethod::FixedBaseline => Ok(-score_jacobian(
            &fit.beta_hat,
            &fit.baseline,
            fit.link,
            idx,
            JacobianMode::Analytic,
        )? / n),
        InformationMethod::Direct => {
            let steps = idx.cause(fit.cause);
            let patterns = idx.patterns();
            let p = fit.beta_hat.len();
            let eta = idx.linear_predictors(&fit.beta_hat);
            let h = &fit.baseline.h_values;
            let mu = step_means(fit.link, steps, patterns, &eta, h)?;
            let mut a = DMatrix::zeros(p, p);
            for j in 1..steps.len() {
                let dh = h[j] - h[j - 1];
                for &(g, c) in steps.at_risk(j) {
                    let w = c * fit.link.hazard_derivative(eta[g] + h[j]) * dh;
                    let z = &patterns[g];
                    for r in 0..p {
                        for s in 0..p {
                            a[(r, s)] += w * (z[r] - mu[j][r]) * z[s];
                        }
                    }
                }
            }
            Ok(a / n)
        }
    }
}

/// Sandwich covariance of `β̂` for a fitted cause.
pub fn sandwich_covariance(
    fit: &CauseFit,
    idx: &RiskIndex,
    method: InformationMethod,
) -> Result<VarianceEstimate> {
    let v = score_variance(fit, idx)?;
    let a = information(fit, idx, method)?;
    let a_inv =
        linalg::inverse(&a).map_err(|condition| Error::SingularInformation { condition })?;
    let n = idx.num_subjects() as f64;
    let cov = &a_inv * v * a_inv.transpose() / n;
    Ok(VarianceEstimate::from_matrix(
        fit.cause,
        VarianceMethod::Sandwich,
        &cov,
    ))
}

/// Record-resampling bootstrap covariance of `β̂_k`.
///
/// Replicate `r` draws from its own ChaCha stream `(seed, r)`, so results do
/// not depend on scheduling. Replicates that fail or do not converge are
/// dropped; more than 10% failures is an error.
pub fn bootstrap_covariance(
    ds: &Dataset,
    cause: usize,
    link: LinkSpec,
    config: &FitConfig,
    reps: usize,
    seed: u64,
) -> Result<VarianceEstimate> {
    if reps < MIN_BOOTSTRAP_REPS {
        return Err(Error::InvalidConfig(format!(
            "bootstrap needs at least {MIN_BOOTSTRAP_REPS} replicates, got {reps}"
        )));
    }
    let n = ds.len();
    let pick = Uniform::new(0, n).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let draws: Vec<Option<Vec<f64>>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let indices: Vec<usize> = (0..n).map(|_| pick.sample(&mut rng)).collect();
            let sample = ds.resample(&indices).ok()?;
            let fit = fit_cause(cause, &sample, link, config).ok()?;
            fit.converged.then_some(fit.beta_hat)
        })
        .collect();
    let ok: Vec<&Vec<f64>> = draws.iter().flatten().collect();
    let failed = reps - ok.len();
    if failed as f64 > MAX_FAILED_SHARE * reps as f64 || ok.len() < 2 {
        return Err(Error::TooManyFailedReplicates {
            failed,
            total: reps,
        });
    }
    let p = ds.covariate_dim();
    let m = ok.len() as f64;
    let mean: Vec<f64> = (0..p)
        .map(|c| ok.iter().map(|b| b[c]).sum::<f64>() / m)
        .collect();
    let mut cov = DMatrix::zeros(p, p);
    for b in &ok {
        for r in 0..p {
            for s in 0..p {
                cov[(r, s)] += (b[r] - mean[r]) * (b[s] - mean[s]);
            }
        }
    }
    cov /= m - 1.0;
    let mut est = VarianceEstimate::from_matrix(cause, VarianceMethod::Bootstrap, &cov);
    est.bootstrap_reps = Some(reps);
    est.failed_reps = Some(failed);
    Ok(est)
}
