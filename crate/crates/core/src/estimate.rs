//! Regression coefficients from the counting-process score
//!
//! ```text
//! U(β, h) = Σ_j [ Σ_{i fails at t_j} z_i - Σ_i z_i Y_i(t_j) ΔΛ_i(j) ],
//! ΔΛ_i(j) = Λ(h_j + z_i'β) - Λ(h_{j-1} + z_i'β),
//! ```
//!
//! solved jointly with the baseline recursion of [`crate::baseline`].

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline::{solve_curve, BaselineCurve};
use crate::data::{CauseSteps, Dataset, RiskIndex};
use crate::error::{Error, Result};
use crate::linalg;
use crate::link::LinkSpec;

const MAX_HALVINGS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JacobianMode {
    #[default]
    Analytic,
    FiniteDifference,
}

/// How the coefficient and baseline updates are interleaved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Newton on `β ↦ U(β, ĥ_β)`, re-solving the baseline at every trial point.
    #[default]
    Profile,
    /// Solve `U(β, ĥ) = 0` with `ĥ` frozen, then re-solve `ĥ`, and repeat.
    Alternating,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// Starting coefficients; zeros when absent.
    pub beta_init: Option<Vec<f64>>,
    pub outer_tol: f64,
    pub score_tol: f64,
    pub max_outer: usize,
    pub max_newton: usize,
    pub jacobian: JacobianMode,
    pub scheme: Scheme,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            beta_init: None,
            outer_tol: 1e-6,
            score_tol: 1e-6,
            max_outer: 100,
            max_newton: 50,
            jacobian: JacobianMode::Analytic,
            scheme: Scheme::Profile,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.outer_tol > 0.0 && self.score_tol > 0.0) {
            return Err(Error::InvalidConfig("tolerances must be positive".into()));
        }
        if self.max_outer == 0 || self.max_newton == 0 {
            return Err(Error::InvalidConfig(
                "iteration caps must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Fitted coefficients and baseline for one cause.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauseFit {
    pub cause: usize,
    pub link: LinkSpec,
    pub beta_hat: Vec<f64>,
    pub baseline: BaselineCurve,
    pub score: Vec<f64>,
    /// `max_c |U_c|` at the returned estimate.
    pub score_norm: f64,
    pub outer_iters: usize,
    pub converged: bool,
}

impl CauseFit {
    pub fn ensure_converged(&self) -> Result<&Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NonConvergence {
                iterations: self.outer_iters,
                score_norm: self.score_norm,
            })
        }
    }
}

fn check_curve<'a>(idx: &'a RiskIndex, curve: &BaselineCurve) -> Result<&'a CauseSteps> {
    if curve.cause == 0 || curve.cause > idx.num_causes() {
        return Err(Error::CurveMismatch { cause: curve.cause });
    }
    let steps = idx.cause(curve.cause);
    if !curve.matches(steps) {
        return Err(Error::CurveMismatch { cause: curve.cause });
    }
    Ok(steps)
}

fn score_raw(
    link: LinkSpec,
    steps: &CauseSteps,
    patterns: &[Vec<f64>],
    eta: &[f64],
    curve: &BaselineCurve,
) -> Vec<f64> {
    let p = patterns.first().map_or(0, Vec::len);
    let mut u = vec![0.0; p];
    for j in 0..steps.len() {
        let (h, hp) = (curve.h_values[j], curve.previous(j));
        for &(g, c) in steps.events(j) {
            for (u, z) in u.iter_mut().zip(&patterns[g]) {
                *u += c * z;
            }
        }
        for &(g, c) in steps.at_risk(j) {
            let w = c * (link.cum_hazard(h + eta[g]) - link.cum_hazard(hp + eta[g]));
            for (u, z) in u.iter_mut().zip(&patterns[g]) {
                *u -= w * z;
            }
        }
    }
    u
}

/// The estimating function `U(β, h)` for the cause of `curve`.
pub fn score_beta(
    beta: &[f64],
    curve: &BaselineCurve,
    link: LinkSpec,
    idx: &RiskIndex,
) -> Result<Vec<f64>> {
    let steps = check_curve(idx, curve)?;
    let eta = idx.linear_predictors(beta);
    Ok(score_raw(link, steps, idx.patterns(), &eta, curve))
}

fn fixed_baseline_jacobian(
    link: LinkSpec,
    steps: &CauseSteps,
    patterns: &[Vec<f64>],
    eta: &[f64],
    curve: &BaselineCurve,
) -> DMatrix<f64> {
    let p = patterns.first().map_or(0, Vec::len);
    let mut jac = DMatrix::zeros(p, p);
    for j in 0..steps.len() {
        let (h, hp) = (curve.h_values[j], curve.previous(j));
        for &(g, c) in steps.at_risk(j) {
            let w = c * (link.hazard(h + eta[g]) - link.hazard(hp + eta[g]));
            let z = &patterns[g];
            for r in 0..p {
                for s in 0..p {
                    jac[(r, s)] -= w * z[r] * z[s];
                }
            }
        }
    }
    jac
}

/// `∂U/∂β` with the baseline held fixed.
pub fn score_jacobian(
    beta: &[f64],
    curve: &BaselineCurve,
    link: LinkSpec,
    idx: &RiskIndex,
    mode: JacobianMode,
) -> Result<DMatrix<f64>> {
    let steps = check_curve(idx, curve)?;
    match mode {
        JacobianMode::Analytic => {
            let eta = idx.linear_predictors(beta);
            Ok(fixed_baseline_jacobian(
                link,
                steps,
                idx.patterns(),
                &eta,
                curve,
            ))
        }
        JacobianMode::FiniteDifference => {
            let p = beta.len();
            let mut jac = DMatrix::zeros(p, p);
            for c in 0..p {
                let step = 1e-6 * beta[c].abs().max(1.0);
                let mut up = beta.to_vec();
                let mut down = beta.to_vec();
                up[c] += step;
                down[c] -= step;
                let su = score_raw(
                    link,
                    steps,
                    idx.patterns(),
                    &idx.linear_predictors(&up),
                    curve,
                );
                let sd = score_raw(
                    link,
                    steps,
                    idx.patterns(),
                    &idx.linear_predictors(&down),
                    curve,
                );
                for r in 0..p {
                    jac[(r, c)] = (su[r] - sd[r]) / (2.0 * step);
                }
            }
            Ok(jac)
        }
    }
}

fn profile_jacobian_raw(
    link: LinkSpec,
    steps: &CauseSteps,
    patterns: &[Vec<f64>],
    eta: &[f64],
    curve: &BaselineCurve,
) -> DMatrix<f64> {
    let p = patterns.first().map_or(0, Vec::len);
    let m = steps.len();
    let mut jac = fixed_baseline_jacobian(link, steps, patterns, eta, curve);

    // Sensitivities dh_j/dβ from implicit differentiation of each step equation.
    let mut dh_prev = vec![0.0; p];
    for j in 0..m {
        let (h, hp) = (curve.h_values[j], curve.previous(j));
        let mut slope_now = 0.0;
        let mut slope_prev = 0.0;
        let mut dbeta = vec![0.0; p];
        let mut dscore_now = vec![0.0; p];
        for &(g, c) in steps.at_risk(j) {
            let l_now = link.hazard(h + eta[g]);
            let l_prev = link.hazard(hp + eta[g]);
            slope_now += c * l_now;
            slope_prev += c * l_prev;
            for r in 0..p {
                let z = patterns[g][r];
                dbeta[r] += c * z * (l_now - l_prev);
                dscore_now[r] -= c * z * l_now;
            }
        }
        let dh: Vec<f64> = (0..p)
            .map(|s| (slope_prev * dh_prev[s] - dbeta[s]) / slope_now)
            .collect();
        // h_j also enters the subtracted term of step j + 1.
        if j + 1 < m {
            for &(g, c) in steps.at_risk(j + 1) {
                let l = link.hazard(h + eta[g]);
                for r in 0..p {
                    dscore_now[r] += c * patterns[g][r] * l;
                }
            }
        }
        for r in 0..p {
            for s in 0..p {
                jac[(r, s)] += dscore_now[r] * dh[s];
            }
        }
        dh_prev = dh;
    }
    jac
}

/// Total derivative of `β ↦ U(β, ĥ_β)`, where `ĥ_β` solves the baseline
/// equations at `β`; `curve` must be that solution.
pub fn profile_jacobian(
    beta: &[f64],
    curve: &BaselineCurve,
    link: LinkSpec,
    idx: &RiskIndex,
) -> Result<DMatrix<f64>> {
    let steps = check_curve(idx, curve)?;
    let eta = idx.linear_predictors(beta);
    Ok(profile_jacobian_raw(
        link,
        steps,
        idx.patterns(),
        &eta,
        curve,
    ))
}

/// `U(β, ĥ_β)` with the baseline re-solved at `beta`.
pub fn profile_score(
    beta: &[f64],
    link: LinkSpec,
    idx: &RiskIndex,
    cause: usize,
) -> Result<(Vec<f64>, BaselineCurve)> {
    let steps = idx.cause(cause);
    let eta = idx.linear_predictors(beta);
    let curve = solve_curve(link, steps, &eta)?;
    let u = score_raw(link, steps, idx.patterns(), &eta, &curve);
    Ok((u, curve))
}

fn euclid(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

struct Iterate {
    beta: Vec<f64>,
    curve: BaselineCurve,
    score: Vec<f64>,
}

fn newton_direction(jac: &DMatrix<f64>, score: &[f64]) -> Result<Vec<f64>> {
    let rhs = -DVector::from_column_slice(score);
    linalg::solve(jac, &rhs)
        .map(|d| d.iter().copied().collect())
        .map_err(|condition| Error::SingularJacobian { condition })
}

fn jacobian_for(
    mode: JacobianMode,
    link: LinkSpec,
    idx: &RiskIndex,
    at: &Iterate,
) -> Result<DMatrix<f64>> {
    let steps = idx.cause(at.curve.cause);
    match mode {
        JacobianMode::Analytic => {
            let eta = idx.linear_predictors(&at.beta);
            Ok(profile_jacobian_raw(
                link,
                steps,
                idx.patterns(),
                &eta,
                &at.curve,
            ))
        }
        JacobianMode::FiniteDifference => {
            let p = at.beta.len();
            let mut jac = DMatrix::zeros(p, p);
            for c in 0..p {
                let step = 1e-6 * at.beta[c].abs().max(1.0);
                let mut up = at.beta.clone();
                let mut down = at.beta.clone();
                up[c] += step;
                down[c] -= step;
                let (su, _) = profile_score(&up, link, idx, at.curve.cause)?;
                let (sd, _) = profile_score(&down, link, idx, at.curve.cause)?;
                for r in 0..p {
                    jac[(r, c)] = (su[r] - sd[r]) / (2.0 * step);
                }
            }
            Ok(jac)
        }
    }
}

fn fit_profile(
    idx: &RiskIndex,
    cause: usize,
    link: LinkSpec,
    config: &FitConfig,
    start: Vec<f64>,
) -> Result<CauseFit> {
    let (score, curve) = profile_score(&start, link, idx, cause)?;
    let mut it = Iterate {
        beta: start,
        curve,
        score,
    };
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_outer {
        iterations += 1;
        let jac = jacobian_for(config.jacobian, link, idx, &it)?;
        let direction = newton_direction(&jac, &it.score)?;
        let norm = euclid(&it.score);
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial: Vec<f64> = it
                .beta
                .iter()
                .zip(&direction)
                .map(|(b, d)| b + scale * d)
                .collect();
            if let Ok((score, curve)) = profile_score(&trial, link, idx, cause) {
                let trial_norm = euclid(&score);
                if trial_norm < norm || linalg::max_abs(&score) <= config.score_tol {
                    accepted = Some(Iterate {
                        beta: trial,
                        curve,
                        score,
                    });
                    break;
                }
            }
            scale *= 0.5;
        }
        let Some(next) = accepted else { break };
        let delta = next
            .beta
            .iter()
            .zip(&it.beta)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        it = next;
        if delta <= config.outer_tol && linalg::max_abs(&it.score) <= config.score_tol {
            converged = true;
            break;
        }
    }
    Ok(finish(cause, link, it, iterations, converged))
}

fn fit_alternating(
    idx: &RiskIndex,
    cause: usize,
    link: LinkSpec,
    config: &FitConfig,
    start: Vec<f64>,
) -> Result<CauseFit> {
    let steps = idx.cause(cause);
    let patterns = idx.patterns();
    let mut beta = start;
    let mut curve = solve_curve(link, steps, &idx.linear_predictors(&beta))?;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_outer {
        iterations += 1;
        // Coefficient step: solve U(β, curve) = 0 with the curve frozen.
        let mut inner = beta.clone();
        let mut u = score_raw(
            link,
            steps,
            patterns,
            &idx.linear_predictors(&inner),
            &curve,
        );
        for _ in 0..config.max_newton {
            if linalg::max_abs(&u) <= 0.1 * config.score_tol {
                break;
            }
            let jac = match config.jacobian {
                JacobianMode::Analytic => fixed_baseline_jacobian(
                    link,
                    steps,
                    patterns,
                    &idx.linear_predictors(&inner),
                    &curve,
                ),
                mode => score_jacobian(&inner, &curve, link, idx, mode)?,
            };
            let direction = newton_direction(&jac, &u)?;
            let norm = euclid(&u);
            let mut scale = 1.0;
            let mut moved = false;
            for _ in 0..=MAX_HALVINGS {
                let trial: Vec<f64> = inner
                    .iter()
                    .zip(&direction)
                    .map(|(b, d)| b + scale * d)
                    .collect();
                let tu = score_raw(
                    link,
                    steps,
                    patterns,
                    &idx.linear_predictors(&trial),
                    &curve,
                );
                if tu.iter().all(|x| x.is_finite()) && euclid(&tu) < norm {
                    inner = trial;
                    u = tu;
                    moved = true;
                    break;
                }
                scale *= 0.5;
            }
            if !moved {
                break;
            }
        }
        let delta = inner
            .iter()
            .zip(&beta)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        beta = inner;
        curve = solve_curve(link, steps, &idx.linear_predictors(&beta))?;
        let score = score_raw(link, steps, patterns, &idx.linear_predictors(&beta), &curve);
        if delta <= config.outer_tol && linalg::max_abs(&score) <= config.score_tol {
            converged = true;
            break;
        }
    }
    let score = score_raw(link, steps, patterns, &idx.linear_predictors(&beta), &curve);
    Ok(finish(
        cause,
        link,
        Iterate { beta, curve, score },
        iterations,
        converged,
    ))
}

fn finish(
    cause: usize,
    link: LinkSpec,
    it: Iterate,
    iterations: usize,
    converged: bool,
) -> CauseFit {
    let score_norm = linalg::max_abs(&it.score);
    CauseFit {
        cause,
        link,
        beta_hat: it.beta,
        baseline: it.curve,
        score: it.score,
        score_norm,
        outer_iters: iterations,
        converged,
    }
}

/// Fits cause `cause` on a prebuilt risk index. The caller is responsible for
/// the identifiability check.
pub fn fit_cause_indexed(
    idx: &RiskIndex,
    cause: usize,
    link: LinkSpec,
    config: &FitConfig,
) -> Result<CauseFit> {
    config.validate()?;
    if cause == 0 || cause > idx.num_causes() {
        return Err(Error::InvalidConfig(format!("cause {cause} out of range")));
    }
    if idx.cause(cause).is_empty() {
        return Err(Error::EmptyCause(cause));
    }
    let p = idx.patterns().first().map_or(0, Vec::len);
    let start = config.beta_init.clone().unwrap_or_else(|| vec![0.0; p]);
    if start.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            found: start.len(),
        });
    }
    match config.scheme {
        Scheme::Profile => fit_profile(idx, cause, link, config, start),
        Scheme::Alternating => fit_alternating(idx, cause, link, config, start),
    }
}

/// Fits `β_k` and `h_k` for one cause.
///
/// Returns the final iterate with `converged = false` when the iteration cap
/// is reached; use [`CauseFit::ensure_converged`] to turn that into an error.
pub fn fit_cause(
    cause: usize,
    ds: &Dataset,
    link: LinkSpec,
    config: &FitConfig,
) -> Result<CauseFit> {
    ds.check_identifiable()?;
    let idx = RiskIndex::new(ds);
    fit_cause_indexed(&idx, cause, link, config)
}

/// Independent fits for causes `1..=K`; `links` holds one link per cause or a
/// single link shared by all causes.
pub fn fit_all(ds: &Dataset, links: &[LinkSpec], config: &FitConfig) -> Vec<Result<CauseFit>> {
    let k = ds.num_causes();
    if links.len() != 1 && links.len() != k {
        let err = Error::InvalidConfig(format!("expected 1 or {k} links, found {}", links.len()));
        return vec![Err(err); k];
    }
    if let Err(e) = ds.check_identifiable() {
        return vec![Err(e); k];
    }
    let idx = RiskIndex::new(ds);
    (1..=k)
        .into_par_iter()
        .map(|cause| {
            let link = links[if links.len() == 1 { 0 } else { cause - 1 }];
            fit_cause_indexed(&idx, cause, link, config)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baseline::solve_baseline;
    use crate::data::SubjectRecord;
    use approx::assert_abs_diff_eq;

    fn small_two_cause() -> Dataset {
        let records = (0..60)
            .map(|i| {
                let t = ((i * 37) % 53) as f64 * 0.11 + 0.05;
                let z = vec![(i % 2) as f64, ((i * 7) % 5) as f64 * 0.25 - 0.5];
                match (i * 5) % 7 {
                    0 | 1 => SubjectRecord::censored(t, z),
                    2..=4 => SubjectRecord::event(t, 1, z),
                    _ => SubjectRecord::event(t, 2, z),
                }
            })
            .collect();
        Dataset::new(records, 2).unwrap()
    }

    #[test]
    fn identical_covariates_give_zero_score() {
        let ds = Dataset::new(
            (1..=6)
                .map(|t| {
                    if t % 3 == 0 {
                        SubjectRecord::censored(t as f64, vec![2.5])
                    } else {
                        SubjectRecord::event(t as f64, 1, vec![2.5])
                    }
                })
                .collect(),
            1,
        )
        .unwrap();
        let idx = RiskIndex::new(&ds);
        for beta in [-1.0, 0.0, 0.7] {
            for link in [LinkSpec::ProportionalHazards, LinkSpec::ProportionalOdds] {
                let curve = solve_baseline(&[beta], link, &idx, 1).unwrap();
                let u = score_beta(&[beta], &curve, link, &idx).unwrap();
                assert!(u[0].abs() < 1e-9, "{u:?}");
            }
        }
    }

    #[test]
    fn single_subject_jacobian_by_hand() {
        let ds = Dataset::new(vec![SubjectRecord::event(1.0, 1, vec![3.0])], 1).unwrap();
        let idx = RiskIndex::new(&ds);
        let curve = BaselineCurve {
            cause: 1,
            times: vec![1.0],
            h_values: vec![0.0],
        };
        let jac = score_jacobian(
            &[0.0],
            &curve,
            LinkSpec::ProportionalHazards,
            &idx,
            JacobianMode::Analytic,
        )
        .unwrap();
        assert_abs_diff_eq!(jac[(0, 0)], -9.0, epsilon = 1e-12);
    }

    #[test]
    fn analytic_and_numeric_jacobians_agree() {
        let ds = small_two_cause();
        let idx = RiskIndex::new(&ds);
        let beta = [0.3, -0.4];
        for link in [LinkSpec::ProportionalHazards, LinkSpec::ProportionalOdds] {
            let curve = solve_baseline(&beta, link, &idx, 1).unwrap();
            let a = score_jacobian(&beta, &curve, link, &idx, JacobianMode::Analytic).unwrap();
            let f =
                score_jacobian(&beta, &curve, link, &idx, JacobianMode::FiniteDifference).unwrap();
            let rel = (&a - &f).norm() / a.norm();
            assert!(rel < 1e-6, "{link}: {rel}");
        }
    }

    #[test]
    fn profile_jacobian_matches_finite_differences() {
        let ds = small_two_cause();
        let idx = RiskIndex::new(&ds);
        let beta = [0.2, 0.5];
        for link in [
            LinkSpec::ProportionalHazards,
            LinkSpec::ProportionalOdds,
            LinkSpec::Logarithmic(0.5),
        ] {
            let (_, curve) = profile_score(&beta, link, &idx, 2).unwrap();
            let analytic = profile_jacobian(&beta, &curve, link, &idx).unwrap();
            for c in 0..2 {
                let eps = 1e-6;
                let mut up = beta;
                let mut down = beta;
                up[c] += eps;
                down[c] -= eps;
                let (su, _) = profile_score(&up, link, &idx, 2).unwrap();
                let (sd, _) = profile_score(&down, link, &idx, 2).unwrap();
                for r in 0..2 {
                    let fd = (su[r] - sd[r]) / (2.0 * eps);
                    assert!(
                        (fd - analytic[(r, c)]).abs() <= 1e-5 * analytic.norm(),
                        "{link} ({r},{c}): {fd} vs {}",
                        analytic[(r, c)]
                    );
                }
            }
        }
    }

    #[test]
    fn profile_and_alternating_reach_the_same_root() {
        let ds = small_two_cause();
        for link in [LinkSpec::ProportionalHazards, LinkSpec::ProportionalOdds] {
            let profile = fit_cause(1, &ds, link, &FitConfig::default()).unwrap();
            let alt_cfg = FitConfig {
                scheme: Scheme::Alternating,
                max_outer: 500,
                ..FitConfig::default()
            };
            let alternating = fit_cause(1, &ds, link, &alt_cfg).unwrap();
            assert!(profile.converged && alternating.converged);
            for (a, b) in profile.beta_hat.iter().zip(&alternating.beta_hat) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-5);
            }
            assert!(profile.outer_iters < alternating.outer_iters);
        }
    }

    #[test]
    fn converged_fit_satisfies_both_equations() {
        let ds = small_two_cause();
        let fits = fit_all(&ds, &[LinkSpec::ProportionalOdds], &FitConfig::default());
        let idx = RiskIndex::new(&ds);
        for fit in fits {
            let fit = fit.unwrap();
            assert!(fit.converged);
            assert!(fit.score_norm <= 1e-6);
            let res = crate::baseline::step_residuals(&fit.baseline, &fit.beta_hat, fit.link, &idx)
                .unwrap();
            assert!(linalg::max_abs(&res) <= 1e-8);
        }
    }

    #[test]
    fn constant_column_is_rejected_before_fitting() {
        let ds = Dataset::new(
            vec![
                SubjectRecord::event(1.0, 1, vec![1.0]),
                SubjectRecord::event(2.0, 1, vec![1.0]),
                SubjectRecord::censored(3.0, vec![1.0]),
            ],
            1,
        )
        .unwrap();
        let err =
            fit_cause(1, &ds, LinkSpec::ProportionalHazards, &FitConfig::default()).unwrap_err();
        assert_eq!(err, Error::ConstantCovariate(0));
    }

    #[test]
    fn separated_data_never_reports_convergence() {
        // Every cause-1 event has z = 0 while z varies elsewhere: β̂ → -∞.
        let ds = Dataset::new(
            vec![
                SubjectRecord::event(1.0, 1, vec![0.0]),
                SubjectRecord::event(2.0, 1, vec![0.0]),
                SubjectRecord::censored(2.5, vec![1.0]),
                SubjectRecord::censored(3.0, vec![0.0]),
                SubjectRecord::censored(4.0, vec![1.0]),
            ],
            1,
        )
        .unwrap();
        match fit_cause(1, &ds, LinkSpec::ProportionalHazards, &FitConfig::default()) {
            Ok(fit) => {
                assert!(!fit.converged);
                assert!(fit.ensure_converged().is_err());
            }
            Err(e) => assert!(matches!(
                e,
                Error::NoBracket { .. } | Error::SingularJacobian { .. }
            )),
        }
    }

    #[test]
    fn mismatched_link_count_is_reported_per_cause() {
        let ds = small_two_cause();
        let links = [LinkSpec::ProportionalHazards; 3];
        let fits = fit_all(&ds, &links, &FitConfig::default());
        assert_eq!(fits.len(), 2);
        assert!(fits
            .iter()
            .all(|f| matches!(f, Err(Error::InvalidConfig(_)))));
    }
}
