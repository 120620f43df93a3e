//! Acceptance criteria, one line of output per criterion.
//!
//! Runs without the libtest harness. Criterion 9 is a long job and only runs
//! with `--ignored` (or `--include-ignored`). Criterion 7 needs the Amsterdam
//! cohort export named by `LTCURE_AIDSSI_CSV` and is skipped otherwise.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;

use ltcure::inference::{bootstrap_covariance, sandwich_covariance, InformationMethod};
use ltcure::predict::{cif_curve, survival_curve};
use ltcure::sim::{
    calibrate_censoring, generate_dataset, run_monte_carlo, stream_rng, McSummary, Model,
};
use ltcure::{
    build_report, fit_all, load_csv, profile_jacobian, profile_score, score_beta, score_jacobian,
    solve_baseline, step_residuals, CauseFit, ColumnMapping, DMatrix, Dataset, FitConfig,
    FitReport, JacobianMode, LinkSpec, ReportOptions, RiskIndex, ScenarioConfig, SubjectRecord,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

enum Verdict {
    Pass,
    Fail,
    Skip,
}

struct Outcome {
    verdict: Verdict,
    detail: String,
}

fn judge(ok: bool, detail: String) -> Outcome {
    Outcome {
        verdict: if ok { Verdict::Pass } else { Verdict::Fail },
        detail,
    }
}

const LINKS: [LinkSpec; 2] = [LinkSpec::ProportionalHazards, LinkSpec::ProportionalOdds];

/// Random competing-risks data with optional ties and one or two covariates.
fn random_dataset(rng: &mut ChaCha8Rng, n: usize, causes: usize) -> Dataset {
    loop {
        let p = rng.random_range(1..=2);
        let ties = rng.random_bool(0.5);
        let censoring = rng.random_range(0.2..0.8);
        let records: Vec<SubjectRecord> = (0..n)
            .map(|_| {
                let z: Vec<f64> = (0..p)
                    .map(|c| {
                        if c == 0 {
                            f64::from(u8::from(rng.random_bool(0.5)))
                        } else {
                            rng.random_range(-1.0..1.0)
                        }
                    })
                    .collect();
                let mut t = -rng.random::<f64>().ln() * 2.0 + 1e-3;
                if ties {
                    t = (t * 4.0).ceil() / 4.0;
                }
                if rng.random_bool(censoring) {
                    SubjectRecord::censored(t, z)
                } else {
                    SubjectRecord::event(t, rng.random_range(1..=causes), z)
                }
            })
            .collect();
        if let Ok(ds) = Dataset::new(records, causes) {
            if ds.check_identifiable().is_ok() {
                return ds;
            }
        }
    }
}

fn nelson_aalen(ds: &Dataset) -> Vec<(f64, f64)> {
    let mut times: Vec<f64> = ds
        .records()
        .iter()
        .filter(|r| r.cause == 1)
        .map(|r| r.time)
        .collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut total = 0.0;
    times
        .into_iter()
        .map(|t| {
            let d = ds
                .records()
                .iter()
                .filter(|r| r.cause == 1 && r.time == t)
                .count() as f64;
            let y = ds.records().iter().filter(|r| r.time >= t).count() as f64;
            total += d / y;
            (t, total)
        })
        .collect()
}

fn criterion_1() -> Outcome {
    let mut rng = stream_rng(101, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.random_range(2..=50);
        let ds = random_dataset(&mut rng, n, 1);
        let idx = RiskIndex::new(&ds);
        let curve = solve_baseline(
            &vec![0.0; ds.covariate_dim()],
            LinkSpec::ProportionalHazards,
            &idx,
            1,
        )
        .expect("baseline solves");
        let oracle = nelson_aalen(&ds);
        assert_eq!(curve.times.len(), oracle.len());
        for ((t, na), (&s, &h)) in oracle.iter().zip(curve.times.iter().zip(&curve.h_values)) {
            assert_eq!(*t, s);
            worst = worst.max((h.exp() - na).abs());
        }
    }
    judge(
        worst <= 1e-10,
        format!("200 instances, max |exp(h) - NA| = {worst:.2e} (tol 1e-10)"),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = stream_rng(102, 0);
    let (mut worst_step, mut worst_score): (f64, f64) = (0.0, 0.0);
    let (mut converged, mut total, mut errors) = (0, 0, 0);
    for link in LINKS {
        for _ in 0..100 {
            let n = rng.random_range(20..=80);
            let ds = random_dataset(&mut rng, n, 2);
            let idx = RiskIndex::new(&ds);
            for fit in fit_all(&ds, &[link], &FitConfig::default()) {
                total += 1;
                let Ok(fit) = fit else {
                    errors += 1;
                    continue;
                };
                if !fit.converged {
                    continue;
                }
                converged += 1;
                let r = step_residuals(&fit.baseline, &fit.beta_hat, link, &idx).unwrap();
                worst_step = r.iter().fold(worst_step, |m, v| m.max(v.abs()));
                worst_score = worst_score.max(fit.score_norm);
            }
        }
    }
    judge(
        worst_step <= 1e-8 && worst_score <= 1e-6 && converged > 0,
        format!(
            "{converged}/{total} cause fits converged ({errors} errors); max step residual {worst_step:.2e} (tol 1e-8), \
             max |U| {worst_score:.2e} (tol 1e-6)"
        ),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = stream_rng(103, 0);
    let mut violations = Vec::new();
    let (mut checked, mut clamped) = (0, 0);
    for link in LINKS {
        for inst in 0..50 {
            let n = rng.random_range(20..=120);
            let ds = random_dataset(&mut rng, n, 2);
            let fits: Vec<CauseFit> = match fit_all(&ds, &[link], &FitConfig::default())
                .into_iter()
                .collect::<Result<Vec<_>, _>>()
            {
                Ok(f) => f,
                Err(_) => continue,
            };
            let idx = RiskIndex::new(&ds);
            let grid = idx.merged_event_times();
            for fit in &fits {
                if fit.baseline.h_values.windows(2).any(|w| w[1] < w[0]) {
                    violations.push(format!("{link} #{inst}: h decreases"));
                }
            }
            for z in idx.patterns() {
                checked += 1;
                for fit in &fits {
                    let curve = cif_curve(fit, z, &grid).unwrap();
                    if curve.windows(2).any(|w| w[1].1 < w[0].1)
                        || curve.iter().any(|c| !(0.0..1.0).contains(&c.1))
                    {
                        violations.push(format!("{link} #{inst}: CIF not monotone in [0,1)"));
                    }
                }
                let surv = survival_curve(&fits, z, &grid).unwrap();
                if surv.iter().any(|s| s.1.clamped) {
                    clamped += 1;
                } else if surv.windows(2).any(|w| w[1].1.value > w[0].1.value) {
                    violations.push(format!("{link} #{inst}: survival increases"));
                }
                if surv.windows(2).any(|w| w[1].1.raw > w[0].1.raw) {
                    violations.push(format!("{link} #{inst}: raw survival increases"));
                }
            }
        }
    }
    judge(
        violations.is_empty() && checked > 0,
        format!(
            "{checked} covariate patterns checked ({clamped} clamped, checked before clamping only); {} violations{}",
            violations.len(),
            violations.first().map(|v| format!(" (first: {v})")).unwrap_or_default()
        ),
    )
}

fn relative_error(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1e-12)
}

fn central_difference<F: Fn(&[f64]) -> Vec<f64>>(f: F, beta: &[f64]) -> DMatrix<f64> {
    let p = beta.len();
    let mut jac = DMatrix::zeros(p, p);
    for c in 0..p {
        let step = 1e-5 * beta[c].abs().max(1.0);
        let mut up = beta.to_vec();
        let mut down = beta.to_vec();
        up[c] += step;
        down[c] -= step;
        let (fu, fd) = (f(&up), f(&down));
        for r in 0..p {
            jac[(r, c)] = (fu[r] - fd[r]) / (2.0 * step);
        }
    }
    jac
}

fn criterion_4() -> Outcome {
    let mut rng = stream_rng(104, 0);
    let (mut worst_fixed, mut worst_profile): (f64, f64) = (0.0, 0.0);
    for link in LINKS {
        for _ in 0..20 {
            let n = rng.random_range(30..=100);
            let ds = random_dataset(&mut rng, n, 1);
            let idx = RiskIndex::new(&ds);
            let beta: Vec<f64> = (0..ds.covariate_dim())
                .map(|_| rng.random_range(-1.0..1.0))
                .collect();
            let curve = solve_baseline(&beta, link, &idx, 1).unwrap();
            let analytic =
                score_jacobian(&beta, &curve, link, &idx, JacobianMode::Analytic).unwrap();
            let numeric = central_difference(|b| score_beta(b, &curve, link, &idx).unwrap(), &beta);
            worst_fixed = worst_fixed.max(relative_error(&analytic, &numeric));
            let analytic = profile_jacobian(&beta, &curve, link, &idx).unwrap();
            let numeric = central_difference(|b| profile_score(b, link, &idx, 1).unwrap().0, &beta);
            worst_profile = worst_profile.max(relative_error(&analytic, &numeric));
        }
    }
    judge(
        worst_fixed <= 1e-4 && worst_profile <= 1e-4,
        format!(
            "20 instances per link; max relative error fixed-baseline {worst_fixed:.2e}, profile {worst_profile:.2e} (tol 1e-4)"
        ),
    )
}

fn table1_scenario(n: usize, censor_target: f64, replications: usize) -> ScenarioConfig {
    ScenarioConfig {
        name: None,
        model: Model::Ph,
        true_betas: [1.0, 1.0],
        n,
        censor_target,
        cure_mass: 0.0,
        replications,
        seed: 20_240_601,
    }
}

fn describe(s: &McSummary) -> String {
    let c = &s.coefficients;
    format!(
        "bias1 {:.4} mse1 {:.4} bias2 {:.4} mse2 {:.4} (censoring {:.3}, {} failed)",
        c[0].bias, c[0].mse, c[1].bias, c[1].mse, s.censoring_achieved, s.failures
    )
}

fn criterion_5() -> Outcome {
    let s = run_monte_carlo(&table1_scenario(500, 0.2, 1000)).expect("simulation runs");
    let c = &s.coefficients;
    let ok = c[0].bias <= 0.03
        && c[1].bias <= 0.03
        && (0.08..=0.15).contains(&c[0].mse)
        && (0.11..=0.21).contains(&c[1].mse);
    judge(
        ok,
        format!(
            "R=1000: {}; required bias <= 0.03, mse1 in [0.08, 0.15], mse2 in [0.11, 0.21]",
            describe(&s)
        ),
    )
}

fn criterion_6() -> Outcome {
    let ns = [100, 200, 500];
    // mse[censoring][sample size] = (mse1, mse2)
    let mse: Vec<Vec<[f64; 2]>> = [0.2, 0.4]
        .into_iter()
        .map(|p| {
            ns.iter()
                .map(|&n| {
                    let s = run_monte_carlo(&table1_scenario(n, p, 1000)).expect("simulation runs");
                    [s.coefficients[0].mse, s.coefficients[1].mse]
                })
                .collect()
        })
        .collect();
    let mut failures = Vec::new();
    for by_n in &mse {
        for (i, pair) in by_n.windows(2).enumerate() {
            for (k, (small, large)) in pair[0].iter().zip(&pair[1]).enumerate() {
                if *large > 1.1 * small {
                    failures.push(format!(
                        "mse{} rises from n={} to n={}",
                        k + 1,
                        ns[i],
                        ns[i + 1]
                    ));
                }
            }
        }
    }
    for (i, (low, high)) in mse[0].iter().zip(&mse[1]).enumerate() {
        for (k, (l, h)) in low.iter().zip(high).enumerate() {
            if 1.1 * h < *l {
                failures.push(format!("mse{} at 40% below 20% for n={}", k + 1, ns[i]));
            }
        }
    }
    let table: Vec<String> = ns
        .iter()
        .enumerate()
        .map(|(i, n)| {
            format!(
                "n={n}: 20% ({:.4}, {:.4}) 40% ({:.4}, {:.4})",
                mse[0][i][0], mse[0][i][1], mse[1][i][0], mse[1][i][1]
            )
        })
        .collect();
    let verdict = if failures.is_empty() {
        "trends hold".to_string()
    } else {
        failures.join(", ")
    };
    judge(
        failures.is_empty(),
        format!("{}; {verdict}", table.join("; ")),
    )
}

fn criterion_7() -> Outcome {
    let Ok(path) = std::env::var("LTCURE_AIDSSI_CSV") else {
        return Outcome {
            verdict: Verdict::Skip,
            detail: "set LTCURE_AIDSSI_CSV to the cohort export (time,status,ccr5) to run".into(),
        };
    };
    let mapping =
        ColumnMapping::new("time", "status", &["ccr5"]).with_categorical("ccr5", &["WW", "WM"]);
    let loaded = load_csv(&path, &mapping, 2).expect("cohort file loads");
    let ds = &loaded.dataset;
    let wm = ds.covariate_rows().filter(|z| z[0] == 1.0).count();
    let fit = |link: LinkSpec| -> FitReport {
        build_report(
            ds,
            &loaded.design_names,
            loaded.dropped,
            &[link],
            &ReportOptions::default(),
        )
        .expect("fit runs")
    };
    let ph = fit(LinkSpec::ProportionalHazards);
    let po = fit(LinkSpec::ProportionalOdds);
    let coef = |r: &FitReport, k: usize| r.causes[k].beta.as_ref().map_or(f64::NAN, |b| b[0]);
    let se = |r: &FitReport, k: usize| r.causes[k].se.as_ref().map_or(f64::NAN, |s| s[0]);
    let cure = |r: &FitReport| r.cure.as_ref().map_or(f64::NAN, |c| c.population);
    let within = |x: f64, target: f64, tol: f64| (x - target).abs() <= tol;
    let checks = [
        ("records", ds.len() == 324 && wm == 65),
        ("PH AIDS", within(coef(&ph, 0), 0.057, 0.05)),
        ("PH SI", within(coef(&ph, 1), 0.351, 0.05)),
        ("PO AIDS", within(coef(&po, 0), 0.081, 0.05)),
        ("PO SI", within(coef(&po, 1), 0.353, 0.05)),
        ("PH AIDS se", within(se(&ph, 0), 0.204, 0.06)),
        ("PH SI se", within(se(&ph, 1), 0.257, 0.06)),
        ("PO AIDS se", within(se(&po, 0), 0.299, 0.06)),
        ("PO SI se", within(se(&po, 1), 0.324, 0.06)),
        ("PH cure", within(cure(&ph), 0.11, 0.03)),
        ("PO cure", within(cure(&po), 0.13, 0.03)),
    ];
    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    judge(
        failed.is_empty(),
        format!(
            "n={} (WM {wm}); PH beta ({:.3}, {:.3}) se ({:.3}, {:.3}) cure {:.3}; PO beta ({:.3}, {:.3}) se ({:.3}, {:.3}) cure {:.3}; failed: {:?}",
            ds.len(),
            coef(&ph, 0),
            coef(&ph, 1),
            se(&ph, 0),
            se(&ph, 1),
            cure(&ph),
            coef(&po, 0),
            coef(&po, 1),
            se(&po, 0),
            se(&po, 1),
            cure(&po),
            failed
        ),
    )
}

fn criterion_8() -> Outcome {
    let cfg = table1_scenario(500, 0.2, 1);
    let c = calibrate_censoring(&cfg).expect("calibration");
    let ds = generate_dataset(&cfg, c, &mut stream_rng(cfg.seed, 0)).expect("data");
    let idx = RiskIndex::new(&ds);
    let config = FitConfig::default();
    let mut worst: f64 = 0.0;
    let mut pairs = Vec::new();
    for fit in fit_all(&ds, &[LinkSpec::ProportionalHazards], &config) {
        let fit = fit.expect("fit");
        let sandwich =
            sandwich_covariance(&fit, &idx, InformationMethod::Profile).expect("sandwich");
        let boot =
            bootstrap_covariance(&ds, fit.cause, fit.link, &config, 200, 7).expect("bootstrap");
        let (s, b) = (sandwich.standard_errors[0], boot.standard_errors[0]);
        worst = worst.max((s - b).abs() / b);
        pairs.push(format!(
            "cause {}: sandwich {s:.4} bootstrap {b:.4}",
            fit.cause
        ));
    }
    judge(
        worst <= 0.25,
        format!(
            "{}; max relative gap {worst:.3} (tol 0.25)",
            pairs.join(", ")
        ),
    )
}

fn criterion_9() -> Outcome {
    let s = run_monte_carlo(&table1_scenario(500, 0.2, 10_000)).expect("simulation runs");
    let c = &s.coefficients;
    let reference = [(0.0053, 0.1135), (0.0065, 0.1593)];
    let ok = c
        .iter()
        .zip(reference)
        .all(|(x, (bias, mse))| (x.bias - bias).abs() <= 0.02 && (x.mse - mse).abs() <= 0.15 * mse);
    judge(
        ok,
        format!(
            "R=10000: {}; reference bias (0.0053, 0.0065) +-0.02, mse (0.1135, 0.1593) +-15%",
            describe(&s)
        ),
    )
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let full = args
        .iter()
        .any(|a| a == "--ignored" || a == "--include-ignored");
    let only_ignored = args.iter().any(|a| a == "--ignored");
    if args.iter().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }

    type Criterion = (u8, &'static str, fn() -> Outcome, bool);
    let criteria: [Criterion; 9] = [
        (1, "baseline matches Nelson-Aalen", criterion_1, false),
        (2, "estimating-equation residuals", criterion_2, false),
        (3, "monotonicity", criterion_3, false),
        (4, "analytic jacobian", criterion_4, false),
        (
            5,
            "PH (1,1) n=500 20% censoring, R=1000",
            criterion_5,
            false,
        ),
        (6, "MSE trends in n and censoring", criterion_6, false),
        (7, "Amsterdam cohort reproduction", criterion_7, false),
        (
            8,
            "sandwich vs bootstrap standard errors",
            criterion_8,
            false,
        ),
        (9, "R=10000 reproduction", criterion_9, true),
    ];

    let mut failed = 0;
    for (id, name, run, long) in criteria {
        if (long && !full) || (!long && only_ignored) {
            if long {
                println!("criterion {id} [{name}]: IGNORED (run with --ignored)");
            }
            continue;
        }
        let start = std::time::Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| Outcome {
            verdict: Verdict::Fail,
            detail: format!(
                "panicked: {}",
                e.downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default()
            ),
        });
        let label = match outcome.verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => {
                failed += 1;
                "FAIL"
            }
            Verdict::Skip => "SKIP",
        };
        println!(
            "criterion {id} [{name}]: {label} ({:.1}s) {}",
            start.elapsed().as_secs_f64(),
            outcome.detail
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
