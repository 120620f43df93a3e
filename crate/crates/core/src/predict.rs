//! Cumulative incidence, overall survival and cure fraction from fitted causes.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::estimate::CauseFit;

/// A probability computed as `1 - Σ_k F_k`, clamped into `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClampedProbability {
    pub value: f64,
    pub raw: f64,
    /// Set when `raw` fell outside `[0, 1]`.
    pub clamped: bool,
}

impl ClampedProbability {
    fn new(raw: f64) -> Self {
        let value = raw.clamp(0.0, 1.0);
        Self {
            value,
            raw,
            clamped: value != raw,
        }
    }
}

fn linear_predictor(fit: &CauseFit, z: &[f64]) -> Result<f64> {
    if z.len() != fit.beta_hat.len() {
        return Err(Error::DimensionMismatch {
            expected: fit.beta_hat.len(),
            found: z.len(),
        });
    }
    Ok(z.iter().zip(&fit.beta_hat).map(|(a, b)| a * b).sum())
}

fn incidence_at(fit: &CauseFit, eta: f64, h: f64) -> f64 {
    if h == f64::NEG_INFINITY {
        0.0
    } else {
        fit.link.inverse(h + eta)
    }
}

/// `F_k(t | z) = g_k⁻¹(ĥ_k(t) + z'β̂_k)`, zero before the first event time.
pub fn cif(fit: &CauseFit, z: &[f64], t: f64) -> Result<f64> {
    let eta = linear_predictor(fit, z)?;
    Ok(incidence_at(fit, eta, fit.baseline.evaluate(t)))
}

/// `P(J = k | z) = g_k⁻¹(ĥ_k(∞) + z'β̂_k)`.
pub fn cause_probability(fit: &CauseFit, z: &[f64]) -> Result<f64> {
    let eta = linear_predictor(fit, z)?;
    Ok(incidence_at(fit, eta, fit.baseline.h_infinity()))
}

/// `S(t | z) = 1 - Σ_k F_k(t | z)`.
pub fn overall_survival(fits: &[CauseFit], z: &[f64], t: f64) -> Result<ClampedProbability> {
    let mut total = 0.0;
    for fit in fits {
        total += cif(fit, z, t)?;
    }
    Ok(ClampedProbability::new(1.0 - total))
}

/// `π̂₀(z) = 1 - Σ_k g_k⁻¹(ĥ_k(∞) + z'β̂_k)`.
pub fn cure_fraction(fits: &[CauseFit], z: &[f64]) -> Result<ClampedProbability> {
    let mut total = 0.0;
    for fit in fits {
        total += cause_probability(fit, z)?;
    }
    Ok(ClampedProbability::new(1.0 - total))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternCure {
    pub covariates: Vec<f64>,
    pub count: usize,
    pub cure: f64,
}

/// Cure fraction averaged over the observed covariate rows, with the value
/// for every distinct row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CureSummary {
    pub population: f64,
    pub patterns: Vec<PatternCure>,
    pub clamped: bool,
}

pub fn cure_summary(fits: &[CauseFit], ds: &Dataset) -> Result<CureSummary> {
    let mut patterns: Vec<PatternCure> = Vec::new();
    let mut clamped = false;
    for z in ds.covariate_rows() {
        if let Some(p) = patterns.iter_mut().find(|p| p.covariates == z) {
            p.count += 1;
            continue;
        }
        let pi = cure_fraction(fits, z)?;
        clamped |= pi.clamped;
        patterns.push(PatternCure {
            covariates: z.to_vec(),
            count: 1,
            cure: pi.value,
        });
    }
    patterns.sort_by(|a, b| {
        a.covariates
            .iter()
            .zip(&b.covariates)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let population = patterns
        .iter()
        .map(|p| p.cure * p.count as f64)
        .sum::<f64>()
        / ds.len() as f64;
    Ok(CureSummary {
        population,
        patterns,
        clamped,
    })
}

/// Population average of `P(J = k | Z_i)` over the observed rows.
pub fn mean_cause_probability(fit: &CauseFit, ds: &Dataset) -> Result<f64> {
    let mut total = 0.0;
    for z in ds.covariate_rows() {
        total += cause_probability(fit, z)?;
    }
    Ok(total / ds.len() as f64)
}

/// `F_k(t | z)` on an ascending grid.
pub fn cif_curve(fit: &CauseFit, z: &[f64], grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    if grid
        .windows(2)
        .any(|w| w[0].partial_cmp(&w[1]).is_none_or(|o| o.is_gt()))
    {
        return Err(Error::UnsortedGrid);
    }
    grid.iter().map(|&t| Ok((t, cif(fit, z, t)?))).collect()
}

/// Overall survival on an ascending grid.
pub fn survival_curve(
    fits: &[CauseFit],
    z: &[f64],
    grid: &[f64],
) -> Result<Vec<(f64, ClampedProbability)>> {
    if grid
        .windows(2)
        .any(|w| w[0].partial_cmp(&w[1]).is_none_or(|o| o.is_gt()))
    {
        return Err(Error::UnsortedGrid);
    }
    grid.iter()
        .map(|&t| Ok((t, overall_survival(fits, z, t)?)))
        .collect()
}
