//! Command-line interface: `run` trains and writes all artifacts, `analyze`
//! recomputes diagnostics from a checkpoint, `presets` lists the catalog.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use timopinn::config::{self, Overrides};
use timopinn::presets;
use timopinn::runner;
use timopinn_core::physics::stability_number;

#[derive(Parser)]
#[command(
    name = "timopinn",
    about = "Physics-informed neural-network solver and energy diagnostics \
             for the 1-D thermoelastic Timoshenko beam with second sound",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train a network and write checkpoint, loss history, energy, decay
    /// fits, error norms (when an exact solution exists), and the manifest.
    Run(RunArgs),
    /// Recompute the diagnostic artifacts from an existing checkpoint.
    Analyze(AnalyzeArgs),
    /// List the preset catalog with parameter values and stability numbers.
    Presets,
}

#[derive(Args)]
struct CommonArgs {
    /// Preset name (see `presets`).
    #[arg(long)]
    preset: Option<String>,
    /// JSON config file; CLI flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Training epochs (full-batch gradient steps).
    #[arg(long)]
    epochs: Option<usize>,
    /// Collocation draws per category (interior / boundary / initial).
    #[arg(long)]
    collocation: Option<usize>,
    /// Seed for sampling (parameter init uses seed + 1).
    #[arg(long)]
    seed: Option<u64>,
    /// Adam learning rate.
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Diagnostic grid cells in both directions.
    #[arg(long)]
    grid: Option<usize>,
    /// Spatial grid cells (overrides --grid).
    #[arg(long)]
    grid_nx: Option<usize>,
    /// Temporal grid cells (overrides --grid).
    #[arg(long)]
    grid_nt: Option<usize>,
    /// Output directory (beats the TIMO_PINN_OUT environment variable).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Add a constant to the initial temperature profile.
    #[arg(long)]
    theta0_offset: Option<f64>,
    /// Fit-window start for decay regression (default 0.2·T).
    #[arg(long)]
    t_cut: Option<f64>,
    /// Loss-history cadence in epochs.
    #[arg(long)]
    log_every: Option<usize>,
    /// Chunked multi-threaded gradient path (reproducible, but its roundoff
    /// differs from the sequential reference in the last ulps).
    #[arg(long)]
    parallel: bool,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Checkpoint to analyze; its architecture must match the config.
    #[arg(long)]
    checkpoint: PathBuf,
    #[command(flatten)]
    common: CommonArgs,
}

fn overrides_from(common: &CommonArgs) -> Overrides {
    Overrides {
        preset: common.preset.clone(),
        epochs: common.epochs,
        collocation: common.collocation,
        seed: common.seed,
        learning_rate: common.learning_rate,
        grid_nx: common.grid_nx.or(common.grid),
        grid_nt: common.grid_nt.or(common.grid),
        out: common.out.clone(),
        theta0_offset: common.theta0_offset,
        t_cut: common.t_cut,
        log_every: common.log_every,
        parallel: common.parallel.then_some(true),
    }
}

fn resolve_common(common: &CommonArgs) -> Result<config::ResolvedConfig> {
    let file = match &common.config {
        Some(path) => Some(config::load_config_file(path)?),
        None => None,
    };
    config::resolve(file.as_ref(), &overrides_from(common))
}

fn real_main() -> Result<()> {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Run(args) => {
            let resolved = resolve_common(&args.common)?;
            let paths = runner::run(&resolved)?;
            println!("run complete; artifacts in {}", paths.dir.display());
        }
        Cmd::Analyze(args) => {
            let resolved = resolve_common(&args.common)?;
            let paths = runner::analyze(&args.checkpoint, &resolved)?;
            println!("analysis complete; artifacts in {}", paths.dir.display());
        }
        Cmd::Presets => {
            for p in presets::all() {
                let chi = stability_number(&p.physics);
                println!("{}", p.name);
                println!("  {}", p.description);
                println!(
                    "  rho1={} rho2={} rho3={} b={} k={} delta={} beta={} tau={}",
                    p.physics.rho1,
                    p.physics.rho2,
                    p.physics.rho3,
                    p.physics.b,
                    p.physics.k,
                    p.physics.delta,
                    p.physics.beta,
                    p.physics.tau
                );
                println!(
                    "  damping={} mu={} T={} epochs={} sources={} chi={}",
                    p.physics.damping.name(),
                    p.physics.mu,
                    p.physics.horizon,
                    p.epochs,
                    p.sources,
                    chi
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
