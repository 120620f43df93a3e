//! Fit reports and curve tables for serialization.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::baseline::{step_residuals, BaselineCurve};
use crate::data::{Dataset, RiskIndex};
use crate::error::{Error, Result};
use crate::estimate::{fit_cause_indexed, CauseFit, FitConfig};
use crate::inference::{bootstrap_covariance, sandwich_covariance, InformationMethod};
use crate::link::LinkSpec;
use crate::predict::{cif, cure_summary, mean_cause_probability, overall_survival, CureSummary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeMethod {
    #[default]
    Sandwich,
    Bootstrap,
    /// Sandwich in `se`, bootstrap in `se_bootstrap`.
    Both,
}

impl FromStr for SeMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sandwich" => Ok(SeMethod::Sandwich),
            "bootstrap" => Ok(SeMethod::Bootstrap),
            "both" => Ok(SeMethod::Both),
            other => Err(Error::Parse(format!(
                "unknown standard error method `{other}` (expected sandwich, bootstrap or both)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportOptions {
    pub fit: FitConfig,
    pub se: SeMethod,
    pub information: InformationMethod,
    pub boot_reps: usize,
    pub seed: u64,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            fit: FitConfig::default(),
            se: SeMethod::Sandwich,
            information: InformationMethod::Profile,
            boot_reps: 200,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauseCure {
    /// Population-average cure fraction over all causes.
    pub population: Option<f64>,
    /// Population average of `P(J = k | Z)`.
    pub cause_incidence: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub converged: bool,
    pub outer_iterations: Option<usize>,
    pub score: Option<Vec<f64>>,
    pub score_norm: Option<f64>,
    pub max_baseline_residual: Option<f64>,
    pub error: Option<String>,
    pub se_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauseReport {
    pub cause: usize,
    pub link: LinkSpec,
    pub beta: Option<Vec<f64>>,
    pub se: Option<Vec<f64>>,
    /// Two-sided normal p-values of `beta / se`.
    pub p_value: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub se_bootstrap: Option<Vec<f64>>,
    pub baseline: Option<BaselineCurve>,
    pub cure_fraction: CauseCure,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub n: usize,
    pub dropped_rows: usize,
    pub num_causes: usize,
    pub covariates: Vec<String>,
    pub se_method: SeMethod,
    pub causes: Vec<CauseReport>,
    /// Absent unless every cause produced estimates.
    pub cure: Option<CureSummary>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitStatus {
    AllConverged,
    /// Some causes failed or did not converge.
    Partial,
    Failed,
}

/// `2 (1 - Φ(|b / se|))`.
pub fn two_sided_p(beta: f64, se: f64) -> f64 {
    if se > 0.0 {
        erfc((beta / se).abs() / std::f64::consts::SQRT_2)
    } else {
        f64::NAN
    }
}

fn resolve_links(links: &[LinkSpec], k: usize) -> Result<Vec<LinkSpec>> {
    match links.len() {
        1 => Ok(vec![links[0]; k]),
        l if l == k => Ok(links.to_vec()),
        l => Err(Error::InvalidConfig(format!(
            "expected 1 or {k} links, found {l}"
        ))),
    }
}

fn cause_report(
    ds: &Dataset,
    idx: &RiskIndex,
    cause: usize,
    link: LinkSpec,
    opts: &ReportOptions,
) -> (CauseReport, Option<CauseFit>) {
    let mut report = CauseReport {
        cause,
        link,
        beta: None,
        se: None,
        p_value: None,
        se_bootstrap: None,
        baseline: None,
        cure_fraction: CauseCure {
            population: None,
            cause_incidence: None,
        },
        diagnostics: Diagnostics {
            converged: false,
            outer_iterations: None,
            score: None,
            score_norm: None,
            max_baseline_residual: None,
            error: None,
            se_error: None,
        },
    };
    let fit = match fit_cause_indexed(idx, cause, link, &opts.fit) {
        Ok(f) => f,
        Err(e) => {
            report.diagnostics.error = Some(e.to_string());
            return (report, None);
        }
    };
    let d = &mut report.diagnostics;
    d.converged = fit.converged;
    d.outer_iterations = Some(fit.outer_iters);
    d.score = Some(fit.score.clone());
    d.score_norm = Some(fit.score_norm);
    d.max_baseline_residual = step_residuals(&fit.baseline, &fit.beta_hat, link, idx)
        .ok()
        .map(|r| r.iter().fold(0.0_f64, |m, v| m.max(v.abs())));
    if let Err(e) = fit.ensure_converged() {
        d.error = Some(e.to_string());
    }

    let bootstrap = || bootstrap_covariance(ds, cause, link, &opts.fit, opts.boot_reps, opts.seed);
    let sandwich = || sandwich_covariance(&fit, idx, opts.information);
    let (primary, secondary) = match opts.se {
        SeMethod::Sandwich => (sandwich(), None),
        SeMethod::Bootstrap => (bootstrap(), None),
        SeMethod::Both => (sandwich(), Some(bootstrap())),
    };
    let mut se_errors = Vec::new();
    match primary {
        Ok(v) => {
            report.p_value = Some(
                fit.beta_hat
                    .iter()
                    .zip(&v.standard_errors)
                    .map(|(&b, &s)| two_sided_p(b, s))
                    .collect(),
            );
            report.se = Some(v.standard_errors);
        }
        Err(e) => se_errors.push(e.to_string()),
    }
    match secondary {
        Some(Ok(v)) => report.se_bootstrap = Some(v.standard_errors),
        Some(Err(e)) => se_errors.push(format!("bootstrap: {e}")),
        None => {}
    }
    if !se_errors.is_empty() {
        report.diagnostics.se_error = Some(se_errors.join("; "));
    }
    report.cure_fraction.cause_incidence = mean_cause_probability(&fit, ds).ok();
    report.beta = Some(fit.beta_hat.clone());
    report.baseline = Some(fit.baseline.clone());
    (report, Some(fit))
}

/// Fits every cause and assembles the serializable report.
pub fn build_report(
    ds: &Dataset,
    covariates: &[String],
    dropped_rows: usize,
    links: &[LinkSpec],
    opts: &ReportOptions,
) -> Result<FitReport> {
    if covariates.len() != ds.covariate_dim() {
        return Err(Error::DimensionMismatch {
            expected: ds.covariate_dim(),
            found: covariates.len(),
        });
    }
    let k = ds.num_causes();
    let links = resolve_links(links, k)?;
    ds.check_identifiable()?;
    let idx = RiskIndex::new(ds);
    let (mut causes, fits): (Vec<_>, Vec<_>) = (1..=k)
        .map(|cause| cause_report(ds, &idx, cause, links[cause - 1], opts))
        .unzip();
    let fits: Option<Vec<CauseFit>> = fits.into_iter().collect();
    let cure = match fits {
        Some(f) => Some(cure_summary(&f, ds)?),
        None => None,
    };
    if let Some(c) = &cure {
        for r in &mut causes {
            r.cure_fraction.population = Some(c.population);
        }
    }
    Ok(FitReport {
        n: ds.len(),
        dropped_rows,
        num_causes: k,
        covariates: covariates.to_vec(),
        se_method: opts.se,
        causes,
        cure,
    })
}

impl FitReport {
    pub fn status(&self) -> FitStatus {
        let converged = self
            .causes
            .iter()
            .filter(|c| c.diagnostics.converged)
            .count();
        let fitted = self.causes.iter().filter(|c| c.beta.is_some()).count();
        if converged == self.causes.len() {
            FitStatus::AllConverged
        } else if fitted > 0 {
            FitStatus::Partial
        } else {
            FitStatus::Failed
        }
    }

    /// Fits reconstructed from the report, for prediction.
    pub fn cause_fits(&self) -> Result<Vec<CauseFit>> {
        self.causes
            .iter()
            .map(|c| match (&c.beta, &c.baseline) {
                (Some(beta), Some(baseline)) => Ok(CauseFit {
                    cause: c.cause,
                    link: c.link,
                    beta_hat: beta.clone(),
                    baseline: baseline.clone(),
                    score: c.diagnostics.score.clone().unwrap_or_default(),
                    score_norm: c.diagnostics.score_norm.unwrap_or(f64::NAN),
                    outer_iters: c.diagnostics.outer_iterations.unwrap_or(0),
                    converged: c.diagnostics.converged,
                }),
                _ => Err(Error::InvalidConfig(format!(
                    "cause {} has no fitted estimates",
                    c.cause
                ))),
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// A labelled covariate vector, written `label:v1,v2` or just `v1,v2`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariatePattern {
    pub label: String,
    pub values: Vec<f64>,
}

impl FromStr for CovariatePattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (label, values) = match s.split_once(':') {
            Some((l, v)) => (Some(l.trim()), v),
            None => (None, s),
        };
        let values = values
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| Error::Parse(format!("invalid covariate pattern `{s}`")))?;
        Ok(Self {
            label: label.map_or_else(
                || {
                    values
                        .iter()
                        .map(f64::to_string)
                        .collect::<Vec<_>>()
                        .join(";")
                },
                str::to_string,
            ),
            values,
        })
    }
}

impl fmt::Display for CovariatePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

/// Time grid for curve output.
#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    /// Merged event times of all causes.
    Events,
    Points(Vec<f64>),
}

impl FromStr for Grid {
    type Err = Error;

    /// `events`, `start:stop:count`, or a comma-separated list.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parse(format!("invalid grid `{s}`"));
        if s.eq_ignore_ascii_case("events") {
            return Ok(Grid::Events);
        }
        if let [start, stop, count] = s.split(':').collect::<Vec<_>>()[..] {
            let start: f64 = start.trim().parse().map_err(|_| bad())?;
            let stop: f64 = stop.trim().parse().map_err(|_| bad())?;
            let count: usize = count.trim().parse().map_err(|_| bad())?;
            let points = match count {
                0 => Vec::new(),
                1 => vec![start],
                _ => (0..count)
                    .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
                    .collect(),
            };
            return Ok(Grid::Points(points));
        }
        s.split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()
            .map(Grid::Points)
    }
}

impl Grid {
    pub fn resolve(&self, fits: &[CauseFit]) -> Vec<f64> {
        match self {
            Grid::Points(p) => p.clone(),
            Grid::Events => {
                let mut t: Vec<f64> = fits
                    .iter()
                    .flat_map(|f| f.baseline.times.iter().copied())
                    .collect();
                t.sort_by(f64::total_cmp);
                t.dedup();
                t
            }
        }
    }
}

/// One output row; `cause` is `overall` for survival rows, whose `cif`
/// column holds `S(t | z)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRow {
    pub cause: String,
    pub z_pattern: String,
    pub t: f64,
    pub cif: f64,
}

pub const CURVE_HEADER: &str = "cause,z_pattern,t,cif";

/// CIF rows for every cause and pattern, followed by overall survival rows.
pub fn curve_rows(
    fits: &[CauseFit],
    patterns: &[CovariatePattern],
    grid: &[f64],
) -> Result<Vec<CurveRow>> {
    if grid
        .windows(2)
        .any(|w| w[0].partial_cmp(&w[1]).is_none_or(|o| o.is_gt()))
    {
        return Err(Error::UnsortedGrid);
    }
    let p = fits.first().map_or(0, |f| f.beta_hat.len());
    for pat in patterns {
        if pat.values.len() != p {
            return Err(Error::PatternDimensionMismatch {
                pattern: pat.label.clone(),
                expected: p,
                found: pat.values.len(),
            });
        }
    }
    let mut rows = Vec::new();
    for fit in fits {
        for pat in patterns {
            for &t in grid {
                rows.push(CurveRow {
                    cause: fit.cause.to_string(),
                    z_pattern: pat.label.clone(),
                    t,
                    cif: cif(fit, &pat.values, t)?,
                });
            }
        }
    }
    for pat in patterns {
        for &t in grid {
            rows.push(CurveRow {
                cause: "overall".into(),
                z_pattern: pat.label.clone(),
                t,
                cif: overall_survival(fits, &pat.values, t)?.value,
            });
        }
    }
    Ok(rows)
}

pub fn write_curves<W: Write>(rows: &[CurveRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(CURVE_HEADER.split(','))?;
    for r in rows {
        w.write_record([
            r.cause.clone(),
            r.z_pattern.clone(),
            r.t.to_string(),
            r.cif.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
