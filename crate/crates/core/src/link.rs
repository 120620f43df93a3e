//! Cause-specific transformation links.
//!
//! A link bundles the inverse transformation `g⁻¹` that maps the linear
//! predictor `h(t) + z'β` onto the sub-distribution scale together with the
//! cumulative hazard `Λ(x) = -log(1 - g⁻¹(x))` and its first two derivatives.
//!
//! All links belong to the logarithmic family `Λ(x) = log(1 + r eˣ) / r`, with
//! `r → 0` giving proportional hazards (`Λ = eˣ`) and `r = 1` proportional odds.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Logistic function evaluated without overflow.
fn logistic(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + eᵘ)` evaluated without overflow.
fn softplus(u: f64) -> f64 {
    if u > 35.0 {
        u + (-u).exp().ln_1p()
    } else {
        u.exp().ln_1p()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum LinkSpec {
    /// Complementary log-log link, `g⁻¹(x) = 1 - exp(-eˣ)`.
    ProportionalHazards,
    /// Logit link, `g⁻¹(x) = eˣ / (1 + eˣ)`.
    ProportionalOdds,
    /// Logarithmic family member with parameter `r > 0`.
    Logarithmic(f64),
}

impl LinkSpec {
    /// Resolves a link by name: `ph`, `po`, or `log:<r>` for `r > 0`.
    pub fn by_name(name: &str) -> Result<Self> {
        let lower = name.trim().to_ascii_lowercase();
        match lower.as_str() {
            "ph" | "cloglog" => Ok(Self::ProportionalHazards),
            "po" | "logit" => Ok(Self::ProportionalOdds),
            other => {
                let r = other
                    .strip_prefix("log:")
                    .and_then(|s| s.parse::<f64>().ok())
                    .filter(|r| r.is_finite() && *r >= 0.0)
                    .ok_or_else(|| Error::UnknownLink(name.to_string()))?;
                Ok(if r == 0.0 {
                    Self::ProportionalHazards
                } else if r == 1.0 {
                    Self::ProportionalOdds
                } else {
                    Self::Logarithmic(r)
                })
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            Self::ProportionalHazards => "ph".into(),
            Self::ProportionalOdds => "po".into(),
            Self::Logarithmic(r) => format!("log:{r}"),
        }
    }

    /// The `r` of the logarithmic family (0 for proportional hazards).
    pub fn family_parameter(&self) -> f64 {
        match self {
            Self::ProportionalHazards => 0.0,
            Self::ProportionalOdds => 1.0,
            Self::Logarithmic(r) => *r,
        }
    }

    /// Cumulative hazard `Λ(x)`; `Λ(-∞) = 0`.
    pub fn cum_hazard(&self, x: f64) -> f64 {
        if x == f64::NEG_INFINITY {
            return 0.0;
        }
        match *self {
            Self::ProportionalHazards => x.exp(),
            Self::ProportionalOdds => softplus(x),
            Self::Logarithmic(r) => softplus(x + r.ln()) / r,
        }
    }

    /// Hazard `λ(x) = Λ'(x)`.
    pub fn hazard(&self, x: f64) -> f64 {
        if x == f64::NEG_INFINITY {
            return 0.0;
        }
        match *self {
            Self::ProportionalHazards => x.exp(),
            Self::ProportionalOdds => logistic(x),
            Self::Logarithmic(r) => logistic(x + r.ln()) / r,
        }
    }

    /// `λ'(x)`.
    pub fn hazard_derivative(&self, x: f64) -> f64 {
        if x == f64::NEG_INFINITY {
            return 0.0;
        }
        match *self {
            Self::ProportionalHazards => x.exp(),
            Self::ProportionalOdds => {
                let s = logistic(x);
                s * logistic(-x)
            }
            Self::Logarithmic(r) => {
                let u = x + r.ln();
                logistic(u) * logistic(-u) / r
            }
        }
    }

    /// `exp(-Λ(x)) = 1 - g⁻¹(x)`.
    pub fn survival(&self, x: f64) -> f64 {
        (-self.cum_hazard(x)).exp()
    }

    /// Inverse link `g⁻¹(x)`, the sub-distribution value at linear predictor `x`.
    pub fn inverse(&self, x: f64) -> f64 {
        match *self {
            Self::ProportionalOdds => {
                if x == f64::NEG_INFINITY {
                    0.0
                } else {
                    logistic(x)
                }
            }
            _ => -(-self.cum_hazard(x)).exp_m1(),
        }
    }
}

impl fmt::Display for LinkSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for LinkSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::by_name(s)
    }
}

impl From<LinkSpec> for String {
    fn from(l: LinkSpec) -> String {
        l.name()
    }
}

impl TryFrom<String> for LinkSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        Self::by_name(&s)
    }
}
