use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use ltcure::report::{curve_rows, write_curves};
use ltcure::{
    build_report, load_csv, run_monte_carlo, ColumnMapping, CovariatePattern, FitReport, FitStatus,
    Grid, LinkSpec, Model, ReportOptions, ScenarioConfig, SeMethod,
};

/// Transformation models for competing risks with a cure fraction.
#[derive(Parser)]
#[command(name = "ltcure", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit every cause and write a JSON report.
    Fit(FitArgs),
    /// Tabulate cumulative incidence and overall survival from a fit report.
    Curves(CurvesArgs),
    /// Run a Monte Carlo bias/MSE study.
    Benchmark(BenchmarkArgs),
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    input: PathBuf,
    /// Link shared by all causes: ph, po or log:<r>.
    #[arg(long, default_value = "ph")]
    link: String,
    /// One link per cause, comma-separated; overrides --link.
    #[arg(long, value_delimiter = ',')]
    link_per_cause: Option<Vec<String>>,
    #[arg(long, default_value_t = 2)]
    causes: usize,
    #[arg(long, default_value = "time")]
    time: String,
    /// Status column: 0 = censored, k = cause k (unless --cause is given).
    #[arg(long, default_value = "status")]
    status: String,
    /// Cause column; status is then a 0/1 event indicator.
    #[arg(long)]
    cause: Option<String>,
    #[arg(long, value_delimiter = ',', required = true)]
    covariates: Vec<String>,
    /// Categorical encoding `column=ref,level1,...`; repeatable.
    #[arg(long)]
    categorical: Vec<String>,
    #[arg(long, default_value = "sandwich")]
    se: SeMethod,
    #[arg(long, default_value_t = 200)]
    boot_reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output path; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CurvesArgs {
    /// JSON report written by `fit`.
    #[arg(long)]
    fit: PathBuf,
    /// `label:v1,v2,...`; repeatable.
    #[arg(long = "covariate-pattern", required = true)]
    patterns: Vec<CovariatePattern>,
    /// `events`, `start:stop:count` or `t1,t2,...`.
    #[arg(long, default_value = "events", allow_hyphen_values = true)]
    grid: Grid,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchmarkArgs {
    /// Key-value scenario file; repeatable.
    #[arg(long)]
    scenario: Vec<PathBuf>,
    /// Inline scenario: ph or po.
    #[arg(long)]
    model: Option<Model>,
    #[arg(long)]
    beta1: Option<f64>,
    #[arg(long)]
    beta2: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    /// Target censoring proportion.
    #[arg(long)]
    censoring: Option<f64>,
    #[arg(long)]
    cure_mass: Option<f64>,
    #[arg(long)]
    name: Option<String>,
    /// Replications; overrides the scenario file.
    #[arg(long)]
    reps: Option<usize>,
    /// Root seed; overrides the scenario file.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn parse_links(args: &FitArgs) -> ltcure::Result<Vec<LinkSpec>> {
    match &args.link_per_cause {
        Some(names) => names.iter().map(|n| n.parse()).collect(),
        None => Ok(vec![args.link.parse()?]),
    }
}

fn mapping(args: &FitArgs) -> anyhow::Result<ColumnMapping> {
    let mut m = ColumnMapping {
        time: args.time.clone(),
        status: args.status.clone(),
        cause: args.cause.clone(),
        covariates: args.covariates.clone(),
        ..ColumnMapping::default()
    };
    for spec in &args.categorical {
        let Some((column, levels)) = spec.split_once('=') else {
            bail!("invalid --categorical `{spec}` (expected column=ref,level1,...)");
        };
        let levels: Vec<String> = levels.split(',').map(|l| l.trim().to_string()).collect();
        if levels.len() < 2 {
            bail!("categorical column `{column}` needs at least two levels");
        }
        m.categorical.insert(column.trim().to_string(), levels);
    }
    Ok(m)
}

fn fit(args: FitArgs) -> anyhow::Result<ExitCode> {
    let links = parse_links(&args)?;
    let loaded = load_csv(&args.input, &mapping(&args)?, args.causes)?;
    if loaded.dropped > 0 {
        eprintln!("dropped {} rows with missing covariates", loaded.dropped);
    }
    let opts = ReportOptions {
        se: args.se,
        boot_reps: args.boot_reps,
        seed: args.seed,
        ..ReportOptions::default()
    };
    let report = build_report(
        &loaded.dataset,
        &loaded.design_names,
        loaded.dropped,
        &links,
        &opts,
    )?;
    let mut out = output(args.out.as_deref())?;
    serde_json::to_writer_pretty(&mut out, &report)?;
    writeln!(out)?;
    out.flush()?;
    for c in &report.causes {
        if let Some(e) = &c.diagnostics.error {
            eprintln!("cause {}: {e}", c.cause);
        }
    }
    Ok(match report.status() {
        FitStatus::AllConverged => ExitCode::SUCCESS,
        FitStatus::Partial => ExitCode::from(2),
        FitStatus::Failed => ExitCode::FAILURE,
    })
}

fn curves(args: CurvesArgs) -> anyhow::Result<ExitCode> {
    let text = std::fs::read_to_string(&args.fit)
        .with_context(|| format!("cannot read {}", args.fit.display()))?;
    let report = FitReport::from_json(&text)?;
    let fits = report.cause_fits()?;
    let grid = args.grid.resolve(&fits);
    let rows = curve_rows(&fits, &args.patterns, &grid)?;
    let mut out = output(args.out.as_deref())?;
    write_curves(&rows, &mut out)?;
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn inline_scenario(args: &BenchmarkArgs) -> ScenarioConfig {
    let d = ScenarioConfig::default();
    ScenarioConfig {
        name: args.name.clone(),
        model: args.model.unwrap_or(d.model),
        true_betas: [
            args.beta1.unwrap_or(d.true_betas[0]),
            args.beta2.unwrap_or(d.true_betas[1]),
        ],
        n: args.n.unwrap_or(d.n),
        censor_target: args.censoring.unwrap_or(d.censor_target),
        cure_mass: args.cure_mass.unwrap_or(d.cure_mass),
        ..d
    }
}

fn benchmark(args: BenchmarkArgs) -> anyhow::Result<ExitCode> {
    let mut scenarios = Vec::new();
    for path in &args.scenario {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read {}", path.display()))?;
        scenarios
            .push(ScenarioConfig::parse(&text).with_context(|| format!("in {}", path.display()))?);
    }
    if scenarios.is_empty() {
        scenarios.push(inline_scenario(&args));
    }
    let mut out = output(args.out.as_deref())?;
    for (i, mut cfg) in scenarios.into_iter().enumerate() {
        if let Some(r) = args.reps {
            cfg.replications = r;
        }
        if let Some(s) = args.seed {
            cfg.seed = s;
        }
        cfg.validate()?;
        let summary = run_monte_carlo(&cfg)?;
        summary.write_csv(&mut out, i == 0)?;
    }
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit(a) => fit(a),
        Command::Curves(a) => curves(a),
        Command::Benchmark(a) => benchmark(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            match e.downcast_ref::<ltcure::Error>() {
                Some(inner) => eprintln!("error[{}]: {e:#}", inner.kind()),
                None => eprintln!("error: {e:#}"),
            }
            ExitCode::FAILURE
        }
    }
}
