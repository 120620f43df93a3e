//! Step-function baseline `h_k` solved one event time at a time.
//!
//! At the j-th distinct cause-k event time the baseline jump solves
//!
//! ```text
//! Σ_i Y_i(t_j) [Λ(h_j + z_i'β) - Λ(h_{j-1} + z_i'β)] = d_j,     h_0 = -∞,
//! ```
//!
//! whose left side is continuous and strictly increasing in `h_j`.

use serde::{Deserialize, Serialize};

use crate::data::{CauseSteps, RiskIndex};
use crate::error::{Error, Result};
use crate::link::LinkSpec;

const MAX_ITERATIONS: usize = 200;
const ARG_MIN: f64 = -745.0;
const ARG_MAX: f64 = 700.0;

/// Nondecreasing step function `h_k` at the observed cause-k event times.
///
/// `h(t) = -∞` before the first event time and `h(t) = h_j` on `[t_j, t_{j+1})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineCurve {
    pub cause: usize,
    pub times: Vec<f64>,
    pub h_values: Vec<f64>,
}

impl BaselineCurve {
    /// Right-continuous lookup of `h(t)`.
    pub fn evaluate(&self, t: f64) -> f64 {
        match self.times.partition_point(|&s| s <= t) {
            0 => f64::NEG_INFINITY,
            j => self.h_values[j - 1],
        }
    }

    /// `h(∞)`, estimated by the largest fitted value.
    pub fn h_infinity(&self) -> f64 {
        self.h_values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `h_{j-1}` with the `-∞` convention for `j = 0`.
    pub fn previous(&self, j: usize) -> f64 {
        if j == 0 {
            f64::NEG_INFINITY
        } else {
            self.h_values[j - 1]
        }
    }

    pub(crate) fn matches(&self, steps: &CauseSteps) -> bool {
        self.cause == steps.cause() && self.times.as_slice() == steps.times()
    }
}

/// Convenience wrapper: `evaluate_h(curve, t)`.
pub fn evaluate_h(curve: &BaselineCurve, t: f64) -> f64 {
    curve.evaluate(t)
}

/// One step equation `Σ c_g Λ(h + η_g) - offset`.
struct StepEquation<'a> {
    link: LinkSpec,
    eta: &'a [f64],
    at_risk: &'a [(usize, f64)],
    offset: f64,
}

impl StepEquation<'_> {
    fn value(&self, h: f64) -> f64 {
        self.at_risk
            .iter()
            .map(|&(g, c)| c * self.link.cum_hazard(h + self.eta[g]))
            .sum::<f64>()
            - self.offset
    }

    fn slope(&self, h: f64) -> f64 {
        self.at_risk
            .iter()
            .map(|&(g, c)| c * self.link.hazard(h + self.eta[g]))
            .sum()
    }
}

fn solve_step(
    link: LinkSpec,
    eta: &[f64],
    at_risk: &[(usize, f64)],
    deaths: f64,
    h_prev: f64,
    time: f64,
) -> Result<f64> {
    if at_risk.is_empty() {
        return Err(Error::EmptyRiskSet { time });
    }
    let eta_max = at_risk
        .iter()
        .map(|&(g, _)| eta[g])
        .fold(f64::NEG_INFINITY, f64::max);
    let h_min = ARG_MIN - eta_max;
    let h_max = ARG_MAX - eta_max;

    let carried: f64 = if h_prev == f64::NEG_INFINITY {
        0.0
    } else {
        at_risk
            .iter()
            .map(|&(g, c)| c * link.cum_hazard(h_prev + eta[g]))
            .sum()
    };
    let eq = StepEquation {
        link,
        eta,
        at_risk,
        offset: deaths + carried,
    };
    let no_bracket = || Error::NoBracket { time };

    // Bracket [lo, hi] with f(lo) < 0 <= f(hi).
    let (mut lo, mut hi);
    if h_prev.is_finite() {
        lo = h_prev;
        let mut step = 1.0;
        loop {
            hi = (lo + step).min(h_max);
            if eq.value(hi) >= 0.0 {
                break;
            }
            if hi >= h_max {
                return Err(no_bracket());
            }
            lo = hi;
            step *= 2.0;
        }
    } else {
        // Log of Σ c e^η: exact starting point for proportional hazards.
        let lse = at_risk
            .iter()
            .map(|&(g, c)| c.ln() + eta[g] - eta_max)
            .map(f64::exp)
            .sum::<f64>()
            .ln()
            + eta_max;
        let start = (deaths.ln() - lse).clamp(h_min, h_max);
        let mut step = 1.0;
        if eq.value(start) < 0.0 {
            lo = start;
            hi = start + step;
            while eq.value(hi) < 0.0 {
                lo = hi;
                step *= 2.0;
                hi += step;
                if hi > h_max {
                    return Err(no_bracket());
                }
            }
        } else {
            hi = start;
            lo = start - step;
            while eq.value(lo) >= 0.0 {
                hi = lo;
                step *= 2.0;
                lo -= step;
                if lo < h_min {
                    return Err(no_bracket());
                }
            }
        }
    }

    // Safeguarded Newton inside the bracket.
    let mut x = hi;
    let mut best = (f64::INFINITY, x);
    // Iterate to roundoff level; errors carry over into later steps.
    let target = 16.0 * f64::EPSILON * eq.offset.abs().max(1.0);
    for _ in 0..MAX_ITERATIONS {
        let fx = eq.value(x);
        if fx.abs() < best.0 {
            best = (fx.abs(), x);
        }
        if fx.abs() <= target {
            return Ok(x);
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let slope = eq.slope(x);
        let newton = x - fx / slope;
        let next = if slope > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let negligible = (next - x).abs() <= 2.0 * f64::EPSILON * x.abs().max(1.0);
        x = next;
        if negligible || hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(1.0) {
            break;
        }
    }
    Ok(best.1)
}

pub(crate) fn solve_curve(
    link: LinkSpec,
    steps: &CauseSteps,
    eta: &[f64],
) -> Result<BaselineCurve> {
    let mut h_values = Vec::with_capacity(steps.len());
    let mut h_prev = f64::NEG_INFINITY;
    for j in 0..steps.len() {
        let h = solve_step(
            link,
            eta,
            steps.at_risk(j),
            steps.deaths(j),
            h_prev,
            steps.time(j),
        )?;
        // Roundoff can place a tiny jump just below the previous value.
        let h = h.max(h_prev);
        h_values.push(h);
        h_prev = h;
    }
    Ok(BaselineCurve {
        cause: steps.cause(),
        times: steps.times().to_vec(),
        h_values,
    })
}

/// Solves for `h_k(t_{k1})`.
pub fn solve_first_step(
    beta: &[f64],
    link: LinkSpec,
    idx: &RiskIndex,
    cause: usize,
) -> Result<f64> {
    let steps = idx.cause(cause);
    let time = steps.times().first().copied().unwrap_or(f64::NAN);
    if steps.is_empty() {
        return Err(Error::EmptyCause(cause));
    }
    let eta = idx.linear_predictors(beta);
    solve_step(
        link,
        &eta,
        steps.at_risk(0),
        steps.deaths(0),
        f64::NEG_INFINITY,
        time,
    )
}

/// Solves for `h_k(t_{kj})` given `h_k(t_{k,j-1}) = h_prev` (`j` is 0-based).
pub fn solve_increment(
    beta: &[f64],
    link: LinkSpec,
    idx: &RiskIndex,
    cause: usize,
    j: usize,
    h_prev: f64,
) -> Result<f64> {
    let steps = idx.cause(cause);
    let eta = idx.linear_predictors(beta);
    solve_step(
        link,
        &eta,
        steps.at_risk(j),
        steps.deaths(j),
        h_prev,
        steps.time(j),
    )
}

/// Full forward recursion over the cause-k event times.
pub fn solve_baseline(
    beta: &[f64],
    link: LinkSpec,
    idx: &RiskIndex,
    cause: usize,
) -> Result<BaselineCurve> {
    let steps = idx.cause(cause);
    if steps.is_empty() {
        return Err(Error::EmptyCause(cause));
    }
    solve_curve(link, steps, &idx.linear_predictors(beta))
}

/// Per-step residuals `Σ_i Y_i(t_j) ΔΛ_i(j) - d_j` of a curve.
pub fn step_residuals(
    curve: &BaselineCurve,
    beta: &[f64],
    link: LinkSpec,
    idx: &RiskIndex,
) -> Result<Vec<f64>> {
    let steps = idx.cause(curve.cause);
    if !curve.matches(steps) {
        return Err(Error::CurveMismatch { cause: curve.cause });
    }
    let eta = idx.linear_predictors(beta);
    Ok((0..steps.len())
        .map(|j| {
            let (h, hp) = (curve.h_values[j], curve.previous(j));
            steps
                .at_risk(j)
                .iter()
                .map(|&(g, c)| c * (link.cum_hazard(h + eta[g]) - link.cum_hazard(hp + eta[g])))
                .sum::<f64>()
                - steps.deaths(j)
        })
        .collect())
}
