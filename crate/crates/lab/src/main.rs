use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use mmhom::config::Format;
use mmhom::emit::{emit, CsvSink};
use mmhom::experiment::{
    fit_column, fit_scaling, isotropy_study_with, probe_exponent, run_schedule_with, spread, validate,
};
use mmhom::fieldio::write_field;
use mmhom::{Config, ExperimentRow, IsotropyRow, ProbeRow, Setup};
use mmhom_core::field::{diffuse_energy, project_to_wells, reconstructed_perimeter, Region};
use mmhom_core::minimize::Boundary;
use mmhom_core::potential::CheckStatus;
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "mmhom", version, about = "Heterogeneous phase-transition experiments")]
struct Cli {
    /// JSON config; defaults apply to missing keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; tables go to stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for independent rows and angles.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Overrides `output.format`.
    #[arg(long, global = true)]
    format: Option<FormatArg>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Transition constant by the string method, checked against the lattice oracle.
    Kh,
    /// Minimize one diffuse problem.
    Minimize {
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        delta: f64,
        /// Interface normal in degrees; Dirichlet faces on the first axis when absent.
        #[arg(long)]
        angle: Option<f64>,
        /// Write the minimizer in the plain-text field format.
        #[arg(long)]
        field: Option<PathBuf>,
    },
    /// Full scaling study over the configured schedule.
    Schedule,
    /// Energy per unit length across interface normals.
    Isotropy,
    /// Rerun the schedule for several exponents, including ones outside the regime.
    Probe {
        #[arg(long = "alpha", required = true, num_args = 1..)]
        alphas: Vec<f64>,
    },
    /// Sample the structural hypotheses of the configured potential.
    Validate,
    /// Print the effective config as JSON.
    Config,
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn print_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(p) => std::fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display()))?,
        None => println!("{text}"),
    }
    Ok(())
}

/// Stream rows to the output file (CSV) or stdout, then write JSON at the end if requested.
fn table<T, F>(columns: &[&str], format: Format, out: Option<&Path>, run: F) -> Result<Vec<T>>
where
    T: Serialize + Clone,
    F: FnOnce(&mut (dyn FnMut(&T) + Send)) -> mmhom::Result<Vec<T>>,
{
    match (format, out) {
        (Format::Csv, Some(path)) => {
            let mut sink = CsvSink::create(path, columns)?;
            let mut failure = None;
            let rows = run(&mut |r: &T| {
                if failure.is_none() {
                    failure = sink.push(r).err();
                }
            })?;
            if let Some(e) = failure {
                return Err(e.into());
            }
            Ok(rows)
        }
        (Format::Csv, None) => {
            let mut sink = CsvSink::new(std::io::stdout(), Path::new("<stdout>"), columns)?;
            let rows = run(&mut |r: &T| {
                let _ = sink.push(r);
            })?;
            Ok(rows)
        }
        (Format::Json, out) => {
            let rows = run(&mut |_: &T| {})?;
            match out {
                Some(p) => emit(&rows, columns, Format::Json, p)?,
                None => println!("{}", serde_json::to_string_pretty(&rows)?),
            }
            Ok(rows)
        }
    }
}

fn run() -> Result<bool> {
    let cli = Cli::parse();
    let mut config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(f) = cli.format {
        config.output.format = match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        };
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.max(1))
        .build_global()
        .context("starting the thread pool")?;
    let out = cli.out.as_deref();
    let format = config.output.format;

    match cli.command {
        Command::Config => {
            print_json(&config, out)?;
            Ok(true)
        }
        Command::Validate => {
            let report = validate(&config)?;
            for c in &report.checks {
                let status = match c.status {
                    CheckStatus::Pass => "pass",
                    CheckStatus::Fail => "FAIL",
                    CheckStatus::Skipped => "skipped",
                };
                println!("{:<3} {status:<8} samples={}", c.hypothesis.label(), c.samples);
                if let Some(w) = &c.witness {
                    println!("    witness y={:?} p={:?} value={}", w.y, w.p, w.value);
                }
            }
            Ok(report.passed())
        }
        Command::Kh => {
            let setup = Setup::new(&config)?;
            let report = setup.kh_report()?;
            print_json(&report, out)?;
            Ok(report.converged)
        }
        Command::Minimize { eps, delta, angle, field } => {
            let setup = Setup::new(&config)?;
            let boundary = match angle {
                Some(deg) => Boundary::Planar { angle: deg.to_radians() },
                None => Boundary::Dirichlet,
            };
            let outcome = setup.minimize(eps, delta, boundary)?;
            let (a, b) = (setup.spec.well_a(), setup.spec.well_b());
            let energy = diffuse_energy(&outcome.field, eps, delta, &setup.truncated)?;
            let proj = project_to_wells(&outcome.field, a, b)?;
            let perimeter = reconstructed_perimeter(&proj, a, b, &Region::Full)?;
            if let Some(p) = &field {
                write_field(&outcome.field, p)?;
            }
            #[derive(Serialize)]
            struct Summary {
                eps: f64,
                delta: f64,
                cells: usize,
                energy: f64,
                potential_term: f64,
                gradient_term: f64,
                perimeter: f64,
                kh: f64,
                sharp_energy: f64,
                steps: usize,
                converged: bool,
                residual: f64,
            }
            print_json(
                &Summary {
                    eps,
                    delta,
                    cells: config.schedule.cells(eps, delta),
                    energy: energy.total,
                    potential_term: energy.potential,
                    gradient_term: energy.gradient,
                    perimeter,
                    kh: setup.kh,
                    sharp_energy: setup.kh * perimeter,
                    steps: outcome.steps,
                    converged: outcome.converged,
                    residual: outcome.residual,
                },
                out,
            )?;
            Ok(outcome.converged)
        }
        Command::Schedule => {
            let setup = Setup::new(&config)?;
            let rows: Vec<ExperimentRow> = table(ExperimentRow::COLUMNS, format, out, |sink| {
                run_schedule_with(&setup, false, |r| sink(r))
            })?;
            match fit_scaling(&rows) {
                Ok(f) => eprintln!("discrepancy fit: slope {:.4}, r2 {:.4}", f.slope, f.r2),
                Err(e) => eprintln!("discrepancy fit: {e}"),
            }
            if let Ok(f) = fit_column(&rows, |r| r.poincare_bound) {
                eprintln!("bound fit: slope {:.4}", f.slope);
            }
            for r in rows.iter().filter(|r| !r.succeeded()) {
                eprintln!("row {} {:?}: {}", r.n, r.status, r.message);
            }
            Ok(rows.iter().all(ExperimentRow::succeeded))
        }
        Command::Isotropy => {
            let setup = Setup::new(&config)?;
            let rows: Vec<IsotropyRow> =
                table(IsotropyRow::COLUMNS, format, out, |sink| isotropy_study_with(&setup, |r| sink(r)))?;
            eprintln!("spread {:.4}%", 100.0 * spread(&rows));
            Ok(rows.iter().all(|r| r.status == mmhom::RowStatus::Ok))
        }
        Command::Probe { alphas } => {
            let (rows, summaries) = probe_exponent(&config, &alphas)?;
            match out {
                Some(p) => emit(&rows, ProbeRow::COLUMNS, format, p)?,
                None => {
                    let mut sink = CsvSink::new(std::io::stdout(), Path::new("<stdout>"), ProbeRow::COLUMNS)?;
                    for r in &rows {
                        sink.push(r)?;
                    }
                }
            }
            for s in &summaries {
                eprintln!(
                    "alpha {}: in regime {}, ratio x{:.3}, discrepancy decays {}, error decays {}",
                    s.alpha, s.in_regime, s.ratio_change, s.discrepancy_decays, s.error_decays
                );
            }
            Ok(true)
        }
    }
}
