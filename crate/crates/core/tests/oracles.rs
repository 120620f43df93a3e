//! Under the proportional hazards link the estimator coincides with the Cox
//! partial-likelihood estimator for the cause-specific hazard (Breslow ties).
//! These tests check that against a direct implementation.

use ltcure::inference::{sandwich_covariance, InformationMethod};
use ltcure::sim::{calibrate_censoring, generate_dataset, stream_rng};
use ltcure::{fit_cause, Dataset, FitConfig, LinkSpec, RiskIndex, ScenarioConfig, SubjectRecord};

/// Score and information of the Breslow partial likelihood, subject by subject.
fn cox_derivatives(ds: &Dataset, cause: usize, beta: f64) -> (f64, f64) {
    let (mut score, mut info) = (0.0, 0.0);
    for event in ds.records().iter().filter(|r| r.cause == cause) {
        let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
        for r in ds.records().iter().filter(|r| r.time >= event.time) {
            let z = r.covariates[0];
            let w = (beta * z).exp();
            s0 += w;
            s1 += w * z;
            s2 += w * z * z;
        }
        score += event.covariates[0] - s1 / s0;
        info += s2 / s0 - (s1 / s0).powi(2);
    }
    (score, info)
}

fn cox_fit(ds: &Dataset, cause: usize) -> (f64, f64) {
    let mut beta = 0.0;
    for _ in 0..100 {
        let (u, i) = cox_derivatives(ds, cause, beta);
        beta += u / i;
        if (u / i).abs() < 1e-14 {
            break;
        }
    }
    let (_, info) = cox_derivatives(ds, cause, beta);
    (beta, 1.0 / info.sqrt())
}

fn simulated(n: usize, seed: u64, ties: bool) -> Dataset {
    let cfg = ScenarioConfig {
        n,
        true_betas: [0.7, -0.4],
        ..ScenarioConfig::default()
    };
    let c = calibrate_censoring(&cfg).unwrap();
    let ds = generate_dataset(&cfg, c, &mut stream_rng(seed, 0)).unwrap();
    if !ties {
        return ds;
    }
    let records = ds
        .records()
        .iter()
        .map(|r| SubjectRecord {
            time: (r.time * 10.0).ceil() / 10.0,
            ..r.clone()
        })
        .collect();
    Dataset::new(records, 2).unwrap()
}

#[test]
fn ph_coefficients_match_cox() {
    for (seed, ties) in [(1, false), (2, true), (3, true)] {
        let ds = simulated(400, seed, ties);
        let idx = RiskIndex::new(&ds);
        for cause in 1..=2 {
            let fit = fit_cause(
                cause,
                &ds,
                LinkSpec::ProportionalHazards,
                &FitConfig::default(),
            )
            .unwrap();
            let (beta, se) = cox_fit(&ds, cause);
            assert!(
                (fit.beta_hat[0] - beta).abs() < 1e-9,
                "{} vs {beta}",
                fit.beta_hat[0]
            );
            let cov = sandwich_covariance(&fit, &idx, InformationMethod::Profile).unwrap();
            let rel = (cov.standard_errors[0] - se).abs() / se;
            assert!(rel < 1e-6, "se {} vs {se}", cov.standard_errors[0]);
        }
    }
}
