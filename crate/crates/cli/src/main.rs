use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use casimir_cli::config::{FormulationChoice, PrecisionChoice};
use casimir_cli::{run, Overrides, RunConfig, Task};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "casimir", version, about = "Casimir energies and forces between conducting bodies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the Casimir energy.
    Energy(Args),
    /// Integrate the force on one object along a direction.
    Force(Args),
    /// Tabulate the integrand over the κ grid.
    Spectrum(Args),
    /// Compare EFIE and A-EFIE in single and double precision.
    Breakdown(Args),
    /// Energy and force over a range of separations.
    Sweep(Args),
}

#[derive(clap::Args)]
struct Args {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// efie, aefie or both.
    #[arg(long)]
    formulation: Option<FormulationChoice>,
    /// single, double or both.
    #[arg(long)]
    precision: Option<PrecisionChoice>,
    /// Number of κ quadrature nodes.
    #[arg(long)]
    nodes: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker thread cap.
    #[arg(long, env = "CASIMIR_THREADS")]
    threads: Option<usize>,
}

fn execute(task: Task, args: Args) -> Result<()> {
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    let overrides = Overrides {
        task: Some(task),
        formulation: args.formulation,
        precision: args.precision,
        nodes: args.nodes,
        out: args.out,
    };
    let cfg = RunConfig::load(&args.config, &overrides)?;
    let report = run(&cfg)?;
    if let Some(runs) = report.result.get("runs").and_then(|r| r.as_array()) {
        for r in runs {
            print!("{} {}: E = {} hbar*c/L", r["formulation"].as_str().unwrap_or("?"), r["precision"].as_str().unwrap_or("?"), r["energy"]);
            if !r["force"].is_null() {
                print!(", F = {} hbar*c/L^2", r["force"]);
            }
            println!();
            for w in r["warnings"].as_array().into_iter().flatten() {
                eprintln!("warning: {}", w.as_str().unwrap_or_default());
            }
        }
    }
    if let Some(points) = report.result.get("points").and_then(|r| r.as_array()) {
        for p in points {
            println!("gap {}: E = {} hbar*c/L, F = {} hbar*c/L^2", p["separation"], p["energy"], p["force"]);
        }
    }
    for f in &report.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (task, args) = match cli.command {
        Command::Energy(a) => (Task::Energy, a),
        Command::Force(a) => (Task::Force, a),
        Command::Spectrum(a) => (Task::Spectrum, a),
        Command::Breakdown(a) => (Task::Breakdown, a),
        Command::Sweep(a) => (Task::Sweep, a),
    };
    match execute(task, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
