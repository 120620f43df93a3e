//! Observed competing-risks records, dataset validation and risk sets.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One subject: follow-up time, event indicator, cause label and covariates.
///
/// `cause` is 0 exactly when the subject is censored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectRecord {
    pub time: f64,
    pub status: u8,
    pub cause: usize,
    pub covariates: Vec<f64>,
}

impl SubjectRecord {
    pub fn event(time: f64, cause: usize, covariates: Vec<f64>) -> Self {
        Self {
            time,
            status: 1,
            cause,
            covariates,
        }
    }

    pub fn censored(time: f64, covariates: Vec<f64>) -> Self {
        Self {
            time,
            status: 0,
            cause: 0,
            covariates,
        }
    }

    /// At-risk indicator `Y(t)`, using `time >= t` so that a subject failing
    /// at `t` belongs to the risk set at `t`.
    pub fn at_risk(&self, t: f64) -> bool {
        self.time >= t
    }
}

/// A validated collection of records sharing `K` causes and `p` covariates.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    records: Vec<SubjectRecord>,
    num_causes: usize,
    covariate_dim: usize,
}

impl Dataset {
    /// Validates `records` against `num_causes`.
    pub fn new(records: Vec<SubjectRecord>, num_causes: usize) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if num_causes == 0 {
            return Err(Error::NoCauses);
        }
        let covariate_dim = records[0].covariates.len();
        let mut counts = vec![0usize; num_causes + 1];
        for (index, r) in records.iter().enumerate() {
            if !r.time.is_finite() || r.time < 0.0 {
                return Err(Error::NegativeTime {
                    index,
                    time: r.time,
                });
            }
            let consistent = match r.status {
                0 => r.cause == 0,
                1 => r.cause >= 1 && r.cause <= num_causes,
                _ => false,
            };
            if !consistent {
                return Err(Error::CauseOutOfRange {
                    index,
                    cause: r.cause,
                    status: r.status,
                    num_causes,
                });
            }
            if r.covariates.len() != covariate_dim {
                return Err(Error::InconsistentCovariateLength {
                    index,
                    expected: covariate_dim,
                    found: r.covariates.len(),
                });
            }
            if let Some(column) = r.covariates.iter().position(|z| !z.is_finite()) {
                return Err(Error::NonFiniteCovariate { index, column });
            }
            counts[r.cause] += 1;
        }
        if let Some(k) = (1..=num_causes).find(|&k| counts[k] == 0) {
            return Err(Error::EmptyCause(k));
        }
        Ok(Self {
            records,
            num_causes,
            covariate_dim,
        })
    }

    pub fn records(&self) -> &[SubjectRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn num_causes(&self) -> usize {
        self.num_causes
    }

    pub fn covariate_dim(&self) -> usize {
        self.covariate_dim
    }

    /// Number of records with the given cause label (0 counts censored records).
    pub fn count_cause(&self, cause: usize) -> usize {
        self.records.iter().filter(|r| r.cause == cause).count()
    }

    /// Rejects covariate columns that take a single value.
    pub fn check_identifiable(&self) -> Result<()> {
        if self.covariate_dim == 0 {
            return Err(Error::InvalidConfig(
                "at least one covariate is required".into(),
            ));
        }
        for c in 0..self.covariate_dim {
            let first = self.records[0].covariates[c];
            if self.records.iter().all(|r| r.covariates[c] == first) {
                return Err(Error::ConstantCovariate(c));
            }
        }
        Ok(())
    }

    /// Builds a dataset from the records at `indices` (with repetition).
    pub fn resample(&self, indices: &[usize]) -> Result<Self> {
        let records = indices.iter().map(|&i| self.records[i].clone()).collect();
        Self::new(records, self.num_causes)
    }

    /// Covariate rows as a flat list, one per record.
    pub fn covariate_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.records.iter().map(|r| r.covariates.as_slice())
    }
}

/// Compressed rows of `(pattern, multiplicity)` pairs, one row per step.
#[derive(Debug, Clone, Default)]
struct PatternRows {
    offsets: Vec<usize>,
    entries: Vec<(usize, f64)>,
}

impl PatternRows {
    fn push_row(&mut self, counts: &[u32]) {
        if self.offsets.is_empty() {
            self.offsets.push(0);
        }
        self.entries.extend(
            counts
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(g, &c)| (g, c as f64)),
        );
        self.offsets.push(self.entries.len());
    }

    fn row(&self, j: usize) -> &[(usize, f64)] {
        &self.entries[self.offsets[j]..self.offsets[j + 1]]
    }
}

/// Distinct event times of one cause with their risk sets.
#[derive(Debug, Clone)]
pub struct CauseSteps {
    cause: usize,
    times: Vec<f64>,
    deaths: Vec<f64>,
    at_risk_totals: Vec<f64>,
    at_risk: PatternRows,
    events: PatternRows,
}

impl CauseSteps {
    pub fn cause(&self) -> usize {
        self.cause
    }

    /// Number of distinct event times `m`.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn time(&self, j: usize) -> f64 {
        self.times[j]
    }

    /// Tie multiplicity `d_j`.
    pub fn deaths(&self, j: usize) -> f64 {
        self.deaths[j]
    }

    /// Total number of subjects at risk at `t_j`.
    pub fn at_risk_total(&self, j: usize) -> f64 {
        self.at_risk_totals[j]
    }

    /// Covariate patterns at risk at `t_j`, with their multiplicities.
    pub fn at_risk(&self, j: usize) -> &[(usize, f64)] {
        self.at_risk.row(j)
    }

    /// Covariate patterns failing from this cause at `t_j`.
    pub fn events(&self, j: usize) -> &[(usize, f64)] {
        self.events.row(j)
    }
}

/// Per-cause event times, tie counts and at-risk sets.
///
/// Subjects sharing a covariate row are collapsed into one pattern so that
/// risk-set sums cost `O(#patterns)` rather than `O(n)`.
#[derive(Debug, Clone)]
pub struct RiskIndex {
    num_subjects: usize,
    sorted_times: Vec<f64>,
    patterns: Vec<Vec<f64>>,
    pattern_of: Vec<usize>,
    causes: Vec<CauseSteps>,
}

fn cmp_rows(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

impl RiskIndex {
    pub fn new(ds: &Dataset) -> Self {
        let records = ds.records();
        let n = records.len();

        let mut by_row: Vec<usize> = (0..n).collect();
        by_row.sort_by(|&a, &b| cmp_rows(&records[a].covariates, &records[b].covariates));
        let mut patterns: Vec<Vec<f64>> = Vec::new();
        let mut pattern_of = vec![0usize; n];
        for &i in &by_row {
            let row = &records[i].covariates;
            if patterns
                .last()
                .is_none_or(|last| cmp_rows(last, row).is_ne())
            {
                patterns.push(row.clone());
            }
            pattern_of[i] = patterns.len() - 1;
        }

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| records[a].time.total_cmp(&records[b].time));
        let sorted_times: Vec<f64> = order.iter().map(|&i| records[i].time).collect();

        let causes = (1..=ds.num_causes())
            .map(|k| {
                let mut steps = CauseSteps {
                    cause: k,
                    times: Vec::new(),
                    deaths: Vec::new(),
                    at_risk_totals: Vec::new(),
                    at_risk: PatternRows::default(),
                    events: PatternRows::default(),
                };
                let mut counts = vec![0u32; patterns.len()];
                for &g in &pattern_of {
                    counts[g] += 1;
                }
                let mut remaining = n;
                let mut removed = 0;
                let mut pos = 0;
                while pos < n {
                    let t = sorted_times[pos];
                    let mut end = pos;
                    let mut failing = vec![0u32; 0];
                    while end < n && sorted_times[end] == t {
                        let i = order[end];
                        if records[i].cause == k {
                            if failing.is_empty() {
                                failing = vec![0u32; patterns.len()];
                            }
                            failing[pattern_of[i]] += 1;
                        }
                        end += 1;
                    }
                    if !failing.is_empty() {
                        while removed < pos {
                            counts[pattern_of[order[removed]]] -= 1;
                            remaining -= 1;
                            removed += 1;
                        }
                        steps.times.push(t);
                        steps
                            .deaths
                            .push(failing.iter().map(|&c| c as f64).sum::<f64>());
                        steps.at_risk_totals.push(remaining as f64);
                        steps.at_risk.push_row(&counts);
                        steps.events.push_row(&failing);
                    }
                    pos = end;
                }
                steps
            })
            .collect();

        Self {
            num_subjects: n,
            sorted_times,
            patterns,
            pattern_of,
            causes,
        }
    }

    pub fn num_subjects(&self) -> usize {
        self.num_subjects
    }

    pub fn num_causes(&self) -> usize {
        self.causes.len()
    }

    /// Steps for cause `k` (1-based).
    pub fn cause(&self, k: usize) -> &CauseSteps {
        &self.causes[k - 1]
    }

    /// Distinct covariate rows, sorted lexicographically.
    pub fn patterns(&self) -> &[Vec<f64>] {
        &self.patterns
    }

    /// Pattern id of record `i`.
    pub fn pattern_of(&self, i: usize) -> usize {
        self.pattern_of[i]
    }

    /// Number of subjects with follow-up time `>= t`.
    pub fn at_risk_count(&self, t: f64) -> usize {
        let first = self.sorted_times.partition_point(|&s| s < t);
        self.num_subjects - first
    }

    /// Linear predictor `z'β` per pattern.
    pub fn linear_predictors(&self, beta: &[f64]) -> Vec<f64> {
        self.patterns
            .iter()
            .map(|z| z.iter().zip(beta).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Union of the event times of all causes, ascending.
    pub fn merged_event_times(&self) -> Vec<f64> {
        let mut all: Vec<f64> = self
            .causes
            .iter()
            .flat_map(|c| c.times.iter().copied())
            .collect();
        all.sort_by(f64::total_cmp);
        all.dedup();
        all
    }
}
