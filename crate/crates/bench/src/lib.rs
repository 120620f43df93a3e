//! Fixtures shared by the benchmarks.

use ltcure::sim::{calibrate_censoring, generate_dataset, stream_rng};
use ltcure::{Dataset, ScenarioConfig};

/// PH scenario with `(β₁, β₂) = (1, 1)` and 20% censoring.
pub fn scenario(n: usize) -> ScenarioConfig {
    ScenarioConfig {
        n,
        replications: 1,
        ..ScenarioConfig::default()
    }
}

/// One simulated dataset of size `n`.
pub fn dataset(n: usize, seed: u64) -> Dataset {
    let cfg = scenario(n);
    let c = calibrate_censoring(&cfg).expect("calibration");
    generate_dataset(&cfg, c, &mut stream_rng(seed, 0)).expect("dataset")
}

/// Adds a continuous covariate, so every subject is its own pattern.
pub fn continuous_dataset(n: usize, seed: u64) -> Dataset {
    let base = dataset(n, seed);
    let records = base
        .records()
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut r = r.clone();
            r.covariates.push((i as f64 * 0.618_033_988_7).fract());
            r
        })
        .collect();
    Dataset::new(records, base.num_causes()).expect("dataset")
}
