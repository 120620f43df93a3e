//! Monte Carlo study of coefficient bias and MSE.
//!
//! Two causes with latent failure times drawn from
//!
//! * proportional hazards (`r = 0`): `T_k = -log(U) exp(-Z b_k)`
//! * proportional odds (`r = 1`): `T_k = ((1 - U) / U) exp(-Z b_k)`
//!
//! with `Z ~ Bernoulli(1/2)`. The observed cause is the one with the smaller
//! latent time; censoring is `Uniform(0, c)` with `c` calibrated to a target
//! censoring rate.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::distr::{Bernoulli, Distribution, Open01};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, SubjectRecord};
use crate::error::{Error, Result};
use crate::estimate::{fit_all, FitConfig};
use crate::link::LinkSpec;

/// Subjects in the censoring calibration pilot sample.
pub const PILOT_SIZE: usize = 200_000;
/// Calibration must land within this distance of the target rate.
pub const CALIBRATION_TOLERANCE: f64 = 0.005;
/// Largest tolerated share of failed replications.
pub const MAX_FAILED_SHARE: f64 = 0.02;
const CALIBRATION_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    /// `r = 0`.
    Ph,
    /// `r = 1`.
    Po,
}

impl Model {
    pub fn link(self) -> LinkSpec {
        match self {
            Model::Ph => LinkSpec::ProportionalHazards,
            Model::Po => LinkSpec::ProportionalOdds,
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Ph => "ph",
            Model::Po => "po",
        })
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "0" | "ph" => Ok(Model::Ph),
            "1" | "po" => Ok(Model::Po),
            other => Err(Error::Parse(format!(
                "unknown model `{other}` (expected ph/0 or po/1)"
            ))),
        }
    }
}

/// Latent failure time for uniform draw `u` in `(0, 1)`.
pub fn latent_time(model: Model, u: f64, z: f64, b: f64) -> f64 {
    let scale = (-z * b).exp();
    match model {
        Model::Ph => -u.ln() * scale,
        Model::Po => (1.0 - u) / u * scale,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: Option<String>,
    pub model: Model,
    pub true_betas: [f64; 2],
    pub n: usize,
    pub censor_target: f64,
    /// Probability that a subject never fails.
    pub cure_mass: f64,
    pub replications: usize,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: None,
            model: Model::Ph,
            true_betas: [1.0, 1.0],
            n: 500,
            censor_target: 0.2,
            cure_mass: 0.0,
            replications: 1000,
            seed: 1,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 10 {
            return Err(Error::InvalidConfig("n must be at least 10".into()));
        }
        if self.replications == 0 {
            return Err(Error::InvalidConfig(
                "replications must be at least 1".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.censor_target) {
            return Err(Error::InvalidConfig(
                "censoring target must lie in [0, 1)".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.cure_mass) {
            return Err(Error::InvalidConfig("cure mass must lie in [0, 1)".into()));
        }
        if self.true_betas.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidConfig("coefficients must be finite".into()));
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| {
            format!(
                "{}_b{}-{}_n{}_c{}",
                self.model, self.true_betas[0], self.true_betas[1], self.n, self.censor_target
            )
        })
    }

    /// Parses `key = value` lines; `#` starts a comment.
    ///
    /// Keys: `name`, `model`, `beta1`, `beta2`, `true_betas` (`b1,b2`), `n`,
    /// `censor_target`, `cure_mass`, `replications`, `seed`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .or_else(|| line.split_once(':'))
                .ok_or_else(|| {
                    Error::Parse(format!("line {}: expected key = value", lineno + 1))
                })?;
            let (key, value) = (key.trim(), value.trim());
            let bad =
                |what: &str| Error::Parse(format!("line {}: invalid {what} `{value}`", lineno + 1));
            let num = |what: &str| value.parse::<f64>().map_err(|_| bad(what));
            match key {
                "name" | "scenario" => cfg.name = Some(value.to_string()),
                "model" | "r" => cfg.model = value.parse()?,
                "beta1" | "b1" => cfg.true_betas[0] = num(key)?,
                "beta2" | "b2" => cfg.true_betas[1] = num(key)?,
                "true_betas" | "betas" => {
                    let parts: Vec<f64> = value
                        .split(',')
                        .map(|s| s.trim().parse::<f64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| bad(key))?;
                    if parts.len() != 2 {
                        return Err(bad(key));
                    }
                    cfg.true_betas = [parts[0], parts[1]];
                }
                "n" => cfg.n = value.parse().map_err(|_| bad(key))?,
                "censor_target" | "censoring" | "p" => cfg.censor_target = num(key)?,
                "cure_mass" => cfg.cure_mass = num(key)?,
                "replications" | "reps" => {
                    cfg.replications = value.parse().map_err(|_| bad(key))?
                }
                "seed" => cfg.seed = value.parse().map_err(|_| bad(key))?,
                other => {
                    return Err(Error::Parse(format!(
                        "line {}: unknown key `{other}`",
                        lineno + 1
                    )))
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Random stream `stream` of the scenario's root seed.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Latent draws for one subject, in the fixed order Z, U₁, U₂, cure flag, C.
struct Subject {
    z: f64,
    time: f64,
    cause: usize,
    /// Censoring time as a fraction of `c`.
    censor_unit: f64,
}

fn draw_subject<R: Rng>(cfg: &ScenarioConfig, rng: &mut R) -> Subject {
    let coin = Bernoulli::new(0.5).expect("valid probability");
    let z = if coin.sample(rng) { 1.0 } else { 0.0 };
    let u1: f64 = Open01.sample(rng);
    let u2: f64 = Open01.sample(rng);
    let cured = rng.random::<f64>() < cfg.cure_mass;
    let censor_unit = rng.random::<f64>();
    let t1 = latent_time(cfg.model, u1, z, cfg.true_betas[0]);
    let t2 = latent_time(cfg.model, u2, z, cfg.true_betas[1]);
    let (time, cause) = if cured {
        (f64::INFINITY, 0)
    } else if t1 <= t2 {
        (t1, 1)
    } else {
        (t2, 2)
    };
    Subject {
        z,
        time,
        cause,
        censor_unit,
    }
}

/// Simulates one dataset with censoring bound `c`.
pub fn generate_dataset<R: Rng>(cfg: &ScenarioConfig, c: f64, rng: &mut R) -> Result<Dataset> {
    if c.is_nan() || c <= 0.0 {
        return Err(Error::InvalidConfig(
            "censoring bound must be positive".into(),
        ));
    }
    let records = (0..cfg.n)
        .map(|_| {
            let s = draw_subject(cfg, rng);
            let censor = c * s.censor_unit;
            if s.time <= censor {
                SubjectRecord::event(s.time, s.cause, vec![s.z])
            } else {
                // Cured subjects (infinite latent time) land here.
                SubjectRecord::censored(censor, vec![s.z])
            }
        })
        .collect();
    Dataset::new(records, 2)
}

fn censored_share(pilot: &[(f64, f64)], c: f64) -> f64 {
    pilot.iter().filter(|&&(t, v)| t > c * v).count() as f64 / pilot.len() as f64
}

/// Finds `c` so that the censoring proportion `P(T > C)` matches the target
/// on a seeded pilot sample.
pub fn calibrate_censoring(cfg: &ScenarioConfig) -> Result<f64> {
    cfg.validate()?;
    let target = cfg.censor_target;
    let fail = || Error::CalibrationFailed { target };
    if target < 0.01 || target <= cfg.cure_mass {
        return Err(fail());
    }
    let mut rng = stream_rng(cfg.seed, CALIBRATION_STREAM);
    let pilot: Vec<(f64, f64)> = (0..PILOT_SIZE)
        .map(|_| {
            let s = draw_subject(cfg, &mut rng);
            (s.time, s.censor_unit)
        })
        .collect();

    // Censoring share decreases in c; bracket then bisect on log c.
    let (mut lo, mut hi) = (1.0, 1.0);
    while censored_share(&pilot, lo) < target {
        lo /= 2.0;
        if lo < 1e-12 {
            return Err(fail());
        }
    }
    while censored_share(&pilot, hi) > target {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(fail());
        }
    }
    let mut best = (f64::INFINITY, hi);
    for _ in 0..100 {
        let mid = (lo * hi).sqrt();
        let share = censored_share(&pilot, mid);
        let gap = (share - target).abs();
        if gap < best.0 {
            best = (gap, mid);
        }
        if gap <= 1e-4 || hi / lo < 1.0 + 1e-12 {
            break;
        }
        if share > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if best.0 > CALIBRATION_TOLERANCE {
        return Err(fail());
    }
    Ok(best.1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSummary {
    /// `beta1` or `beta2`.
    pub coef: String,
    pub truth: f64,
    pub mean: f64,
    /// Absolute bias `|mean(β̂) - β|`.
    pub bias: f64,
    /// `mean((β̂ - β)²)`.
    pub mse: f64,
    /// `mean(|β̂ - β|)`.
    pub mean_abs_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub scenario: String,
    pub censor_bound: f64,
    pub coefficients: Vec<CoefficientSummary>,
    /// Mean censoring proportion over all replications.
    pub censoring_achieved: f64,
    pub failures: usize,
    pub replications: usize,
}

pub const CSV_HEADER: &str = "scenario,coef,bias,mse,censoring_achieved,failures";

impl McSummary {
    pub fn write_csv<W: Write>(&self, out: W, header: bool) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(out);
        if header {
            w.write_record(CSV_HEADER.split(','))?;
        }
        for c in &self.coefficients {
            w.write_record([
                self.scenario.clone(),
                c.coef.clone(),
                c.bias.to_string(),
                c.mse.to_string(),
                self.censoring_achieved.to_string(),
                self.failures.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Outcome of a single replication.
#[derive(Debug, Clone, PartialEq)]
pub struct Replication {
    pub censored_share: f64,
    /// `None` when the data could not be fitted or a cause did not converge.
    pub estimates: Option<[f64; 2]>,
}

/// Runs replication `r` with censoring bound `c`.
pub fn run_replication(cfg: &ScenarioConfig, c: f64, r: usize) -> Replication {
    let mut rng = stream_rng(cfg.seed, r as u64);
    let ds = match generate_dataset(cfg, c, &mut rng) {
        Ok(ds) => ds,
        Err(_) => {
            return Replication {
                censored_share: f64::NAN,
                estimates: None,
            }
        }
    };
    let censored_share = ds.count_cause(0) as f64 / ds.len() as f64;
    let fits = fit_all(&ds, &[cfg.model.link()], &FitConfig::default());
    let mut estimates = [0.0; 2];
    for (slot, fit) in estimates.iter_mut().zip(&fits) {
        match fit {
            Ok(f) if f.converged => *slot = f.beta_hat[0],
            _ => {
                return Replication {
                    censored_share,
                    estimates: None,
                }
            }
        }
    }
    Replication {
        censored_share,
        estimates: Some(estimates),
    }
}

/// Aggregates replications in index order.
pub fn summarize(cfg: &ScenarioConfig, c: f64, reps: &[Replication]) -> Result<McSummary> {
    let total = reps.len();
    let ok: Vec<[f64; 2]> = reps.iter().filter_map(|r| r.estimates).collect();
    let failures = total - ok.len();
    if failures as f64 > MAX_FAILED_SHARE * total as f64 {
        return Err(Error::TooManyFailedFits {
            failed: failures,
            total,
        });
    }
    let shares: Vec<f64> = reps
        .iter()
        .map(|r| r.censored_share)
        .filter(|s| s.is_finite())
        .collect();
    let censoring_achieved = shares.iter().sum::<f64>() / shares.len().max(1) as f64;
    let m = ok.len() as f64;
    let coefficients = (0..2)
        .map(|k| {
            let truth = cfg.true_betas[k];
            let mean = ok.iter().map(|e| e[k]).sum::<f64>() / m;
            CoefficientSummary {
                coef: format!("beta{}", k + 1),
                truth,
                mean,
                bias: (mean - truth).abs(),
                mse: ok.iter().map(|e| (e[k] - truth).powi(2)).sum::<f64>() / m,
                mean_abs_error: ok.iter().map(|e| (e[k] - truth).abs()).sum::<f64>() / m,
            }
        })
        .collect();
    Ok(McSummary {
        scenario: cfg.label(),
        censor_bound: c,
        coefficients,
        censoring_achieved,
        failures,
        replications: total,
    })
}

/// Calibrates censoring, then runs all replications in parallel.
pub fn run_monte_carlo(cfg: &ScenarioConfig) -> Result<McSummary> {
    let c = calibrate_censoring(cfg)?;
    let reps: Vec<Replication> = (0..cfg.replications)
        .into_par_iter()
        .map(|r| run_replication(cfg, c, r))
        .collect();
    summarize(cfg, c, &reps)
}
