use clap::{Args, Parser, Subcommand};
use gpconc::harness::{self, report, ExperimentConfig, ExperimentKind, ExperimentReport};
use gpconc::Error;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

const EXIT_CHECKS_FAILED: u8 = 4;

#[derive(Parser)]
#[command(name = "gpconc", version, about = "Concentration bounds for kriging errors, checked by Monte Carlo")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// P-greedy design and its measured gap trace with the fitted envelope.
    Greedy(RunArgs),
    /// Violation rates of the kriging-error bounds on sampled Gaussian paths.
    GpConcentration(RunArgs),
    /// Violation rates of the weighted chi-square tail bound.
    Chi2(RunArgs),
    /// Truncation errors of Gaussian fields on products of spheres.
    Spheres(RunArgs),
    /// Closed-form bounds next to their numeric tail-sum counterparts.
    BoundTable(RunArgs),
    /// Re-reads a results directory, re-derives the pass column and prints a summary.
    Report(ReportArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment configuration.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in configuration (greedy, gp-matern, gp-gaussian, chi2, spheres, bound-table).
    #[arg(long)]
    preset: Option<String>,
    /// Overrides the master seed of the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to the configuration's `out`, then `results/<experiment>`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    workers: Option<usize>,
    /// Also render SVG plots.
    #[arg(long)]
    svg: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory holding results.csv.
    #[arg(long)]
    out: PathBuf,
    /// Re-render SVG plots from results.csv.
    #[arg(long)]
    svg: bool,
}

fn load(kind: ExperimentKind, args: &RunArgs) -> Result<ExperimentConfig, Error> {
    let mut cfg = match (&args.config, &args.preset) {
        (Some(p), _) => ExperimentConfig::load(p)?,
        (None, Some(name)) => ExperimentConfig::preset(name)?,
        (None, None) => ExperimentConfig::default_for(kind),
    };
    if cfg.experiment != kind {
        return Err(Error::Config(format!(
            "configuration is for experiment {}, not {}",
            cfg.experiment.id(),
            kind.id()
        )));
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(o) = &args.out {
        cfg.out = Some(o.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_report(r: &ExperimentReport) {
    for row in &r.rows {
        let cell = |v: Option<f64>| v.map(|x| format!("{x:.4e}")).unwrap_or_else(|| "-".into());
        println!(
            "{:<28} n={:<4} tau={:<4} bound={:<11} value={:<11} q={:<11} rate={:<8} limit={:<8} {}",
            row.series,
            row.n.map(|n| n.to_string()).unwrap_or_else(|| "-".into()),
            row.tau.map(|t| t.to_string()).unwrap_or_else(|| "-".into()),
            cell(row.bound),
            cell(row.value),
            cell(row.quantile),
            row.rate.map(|x| format!("{x:.5}")).unwrap_or_else(|| "-".into()),
            row.rate_limit.map(|x| format!("{x:.5}")).unwrap_or_else(|| "-".into()),
            match row.pass {
                Some(true) => "ok",
                Some(false) => "VIOLATED",
                None => "",
            }
        );
    }
    for (k, v) in &r.summary {
        println!("{k} = {v:e}");
    }
    for n in &r.notes {
        println!("note: {n}");
    }
    let failed: Vec<_> = r.failures().collect();
    println!("checks: {} passed, {} failed", r.checks.len() - failed.len(), failed.len());
    for c in failed {
        println!("FAILED {}: {}", c.name, c.detail);
    }
}

fn run_experiment(kind: ExperimentKind, args: &RunArgs) -> Result<bool, Error> {
    let cfg = load(kind, args)?;
    let start = Instant::now();
    let report = harness::run_with_workers(&cfg, args.workers)?;
    let dir = cfg
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("results").join(kind.id()));
    let files = harness::emit_report(&report, &cfg, &dir, args.svg)?;
    print_report(&report);
    println!(
        "{} finished in {:.1}s; wrote {}",
        kind.id(),
        start.elapsed().as_secs_f64(),
        files.iter().map(|f| f.display().to_string()).collect::<Vec<_>>().join(", ")
    );
    Ok(report.passed())
}

fn rerun_report(args: &ReportArgs) -> Result<bool, Error> {
    let rows = harness::read_results(&args.out.join("results.csv"))?;
    let mut ok = true;
    for (i, r) in rows.iter().enumerate() {
        let again = r.recomputed_pass();
        if again != r.pass {
            println!("row {}: stored pass {:?} but counts give {:?}", i + 1, r.pass, again);
            ok = false;
        }
        if again == Some(false) {
            ok = false;
        }
    }
    let report = ExperimentReport {
        rows,
        ..Default::default()
    };
    print_report(&report);
    let plot = report::plotdata_csv(&report.rows)?;
    let path = args.out.join("plotdata.csv");
    std::fs::write(&path, plot).map_err(|e| Error::Io { path, source: e })?;
    if args.svg {
        for (name, svg) in report::render_svgs(&report.rows, "report")? {
            let path = args.out.join(name);
            std::fs::write(&path, svg).map_err(|e| Error::Io { path, source: e })?;
        }
    }
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Greedy(a) => run_experiment(ExperimentKind::Greedy, a),
        Command::GpConcentration(a) => run_experiment(ExperimentKind::GpConcentration, a),
        Command::Chi2(a) => run_experiment(ExperimentKind::Chi2, a),
        Command::Spheres(a) => run_experiment(ExperimentKind::Spheres, a),
        Command::BoundTable(a) => run_experiment(ExperimentKind::BoundTable, a),
        Command::Report(a) => rerun_report(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_CHECKS_FAILED),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
