//! `filament`: runs, sweeps, and plots for two reduced models of vorticity
//! growth at a boundary stagnation point.
//!
//! Exit codes: 0 success (including detected blow-up), 1 invariant
//! violations recorded, 2 configuration error, 3 numerical failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod config;
mod csvio;
mod errors;
mod model1;
mod model2;
mod report;

use config::{load, Model1Config, Model1File, Model2Config, Model2File, Model2Flags};
use errors::CliResult;

#[derive(Parser)]
#[command(
    name = "filament",
    version,
    about = "Numerical laboratory for two reduced models of vorticity growth",
    propagate_version = true
)]
struct Cli {
    /// Worker threads for row-parallel quadrature (default: all cores).
    /// Results are identical for every setting.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Globally regular front-profile model (trajectory in the (A, B) plane)
    Model1 {
        #[command(subcommand)]
        action: Model1Action,
    },
    /// Finite-time-blow-up boundary-layer model (Lagrangian particle patch)
    Model2 {
        #[command(subcommand)]
        action: Model2Action,
    },
    /// Render SVG plots from a finished run directory
    Report {
        /// Directory containing `series.csv`
        run_dir: PathBuf,
    },
}

#[derive(Args)]
struct Model1RunArgs {
    /// Flat JSON config file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Depletion constant (regularity analysis covers [1, 1.3])
    #[arg(long = "K")]
    k: Option<f64>,
    /// Integration horizon
    #[arg(long)]
    t_end: Option<f64>,
    /// Relative tolerance of the adaptive integrator
    #[arg(long)]
    tol: Option<f64>,
    /// Sample rows per decade of time
    #[arg(long)]
    per_decade: Option<u32>,
    /// Output directory (created if absent)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Model1SweepArgs {
    /// Flat JSON config file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated depletion constants, one run each
    #[arg(long = "K", value_delimiter = ',')]
    k: Option<Vec<f64>>,
    /// Integration horizon
    #[arg(long)]
    t_end: Option<f64>,
    /// Relative tolerance of the adaptive integrator
    #[arg(long)]
    tol: Option<f64>,
    /// Sample rows per decade of time
    #[arg(long)]
    per_decade: Option<u32>,
    /// Output directory; each constant gets a `K_*` subdirectory
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Model1Action {
    /// Integrate one trajectory, audit every sample, export CSV + JSON
    Run(Model1RunArgs),
    /// Run several depletion constants concurrently
    Sweep(Model1SweepArgs),
}

#[derive(Args)]
struct Model2RunArgs {
    /// Flat JSON config file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Plateau scale of the initial data
    #[arg(long)]
    delta: Option<f64>,
    /// Plateau width factor (> 5, with (L+1)*delta < 1)
    #[arg(long = "L")]
    width_factor: Option<f64>,
    /// Horizontal particles
    #[arg(long)]
    nx: Option<usize>,
    /// Vertical particles
    #[arg(long)]
    ny: Option<usize>,
    /// Stop once the flux reaches this value
    #[arg(long = "stop-Q")]
    stop_q: Option<f64>,
    /// Stop once time reaches this value
    #[arg(long)]
    t_max: Option<f64>,
    /// Step-halving threshold on the relative compression change per step
    #[arg(long)]
    growth_limit: Option<f64>,
    /// Declare blow-up when the compression exceeds this cap
    #[arg(long)]
    d_cap: Option<f64>,
    /// Initial step size
    #[arg(long)]
    dt_init: Option<f64>,
    /// Total resolution levels: level i doubles the grid i times and halves
    /// the step threshold, reporting the shift of the extrapolated T*
    #[arg(long)]
    refine: Option<u32>,
    /// Output directory (created if absent)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Model2Action {
    /// Advance the patch to blow-up or the stop rule, export CSV + JSON
    Run(Model2RunArgs),
}

fn dispatch(cli: Cli) -> CliResult<i32> {
    match cli.command {
        Command::Model1 {
            action: Model1Action::Run(args),
        } => {
            let file: Model1File = load(args.config.as_deref())?;
            let config = Model1Config::resolve(
                args.k,
                args.t_end,
                args.tol,
                args.per_decade,
                args.out,
                file,
            )?;
            model1::cmd_run(config)
        }
        Command::Model1 {
            action: Model1Action::Sweep(args),
        } => {
            let file: Model1File = load(args.config.as_deref())?;
            let ks = args
                .k
                .or_else(|| file.k.map(|k| vec![k]))
                .ok_or_else(|| errors::CliError::Config("--K is required for a sweep".into()))?;
            let out = args
                .out
                .clone()
                .or_else(|| file.out.clone())
                .ok_or_else(|| errors::CliError::Config("--out is required".into()))?;
            // Per-run settings share the sweep directory as a placeholder
            // `out`; each run replaces it with its own subdirectory.
            let base = Model1Config::resolve(
                Some(ks[0]),
                args.t_end,
                args.tol,
                args.per_decade,
                Some(out.clone()),
                file,
            )?;
            model1::cmd_sweep(&ks, &base, &out)
        }
        Command::Model2 {
            action: Model2Action::Run(args),
        } => {
            let file: Model2File = load(args.config.as_deref())?;
            let flags = Model2Flags {
                delta: args.delta,
                width_factor: args.width_factor,
                nx: args.nx,
                ny: args.ny,
                stop_q: args.stop_q,
                t_max: args.t_max,
                growth_limit: args.growth_limit,
                d_cap: args.d_cap,
                dt_init: args.dt_init,
                refine: args.refine,
                out: args.out,
            };
            let config = Model2Config::resolve(flags, file)?;
            model2::cmd_run(config)
        }
        Command::Report { run_dir } => report::cmd_report(&run_dir),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(err) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("configuration error: thread pool: {err}");
            return ExitCode::from(errors::EXIT_CONFIG as u8);
        }
    }
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("{err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
