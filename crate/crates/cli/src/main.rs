//! `fracq`: batch front end of the workbench.
//!
//! Each invocation runs one task from a TOML config and writes a JSON summary, CSV data and
//! `manifest.json` into the output directory. Exit status 2 marks configuration errors and
//! 3 numerical failures.

mod config;
mod curvature;
mod output;
mod tasks;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use config::RunConfig;
use output::Output;
use tasks::{Context, RunError};

#[derive(Parser)]
#[command(name = "fracq", version, about = "Numerical workbench for the prescribed fractional Q-curvature equation on S^n")]
struct Cli {
    #[command(subcommand)]
    task: Task,
    /// TOML run configuration; defaults to n = 2, σ = 1/2, K ≡ 1.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output` in the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed of the ChaCha8 generator (overrides `seed` in the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel sections.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Task {
    /// Eigenvalues of P_σ up to the configured degree.
    Spectrum,
    /// Fixed-point solve of the (subcritical) equation.
    Solve,
    /// Subcritical continuation with blow-up diagnostics.
    Continue,
    /// Solve once and report profile, Harnack, Pohozaev and Sobolev diagnostics.
    Diagnose,
    /// Critical-point classification and the interaction matrix.
    Flatness,
    /// Brouwer degree of the obstruction field, with a t* sweep.
    Degree,
    /// The K ≡ 1 verification suite.
    Verify,
    /// Which compactness hypothesis holds.
    Certify,
}

impl Task {
    fn name(self) -> &'static str {
        match self {
            Task::Spectrum => "spectrum",
            Task::Solve => "solve",
            Task::Continue => "continue",
            Task::Diagnose => "diagnose",
            Task::Flatness => "flatness",
            Task::Degree => "degree",
            Task::Verify => "verify",
            Task::Certify => "certify",
        }
    }
}

fn run(cli: Cli) -> Result<(), RunError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| RunError::Config(format!("--threads: {e}")))?;
    }
    let dir = cli.out.clone().or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("fracq-out"));
    let params = cfg.params()?;
    let mut out = Output::create(&dir, cfg.hash())?;
    let ctx = Context { seed: cfg.seed, params, cfg };
    let start = Instant::now();
    let result = match cli.task {
        Task::Spectrum => tasks::spectrum(&ctx, &mut out),
        Task::Solve => tasks::solve(&ctx, &mut out),
        Task::Continue => tasks::continuation(&ctx, &mut out),
        Task::Diagnose => tasks::diagnose(&ctx, &mut out),
        Task::Flatness => tasks::flatness(&ctx, &mut out),
        Task::Degree => tasks::degree(&ctx, &mut out),
        Task::Verify => tasks::verify(&ctx, &mut out),
        Task::Certify => tasks::certify(&ctx, &mut out),
    };
    let status = match &result {
        Ok(()) => "ok",
        Err(RunError::Config(_)) => "config-error",
        Err(RunError::Numerical(_)) => "numerical-failure",
        Err(RunError::Io(_)) => "io-error",
    };
    out.manifest(cli.task.name(), ctx.seed, start.elapsed().as_secs_f64(), status)?;
    result
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(RunError::Config(m)) => {
            eprintln!("fracq: configuration error: {m}");
            ExitCode::from(2)
        }
        Err(RunError::Numerical(m)) => {
            eprintln!("fracq: {m}");
            ExitCode::from(3)
        }
        Err(RunError::Io(e)) => {
            eprintln!("fracq: i/o error: {e}");
            ExitCode::from(1)
        }
    }
}
