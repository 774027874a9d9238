use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use horoflow_cli::config::{Overrides, Scenario};

#[derive(Parser)]
#[command(name = "horoflow", version, about = "Magnetic flows, horocycle invariants and Mane critical values")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the geodesic/horocycle commutation residual over a (t, s) grid.
    CheckAlgebra(RunArgs),
    /// Integrate magnetic orbits and write them as CSV.
    Simulate(RunArgs),
    /// Jacobi and Riccati traces along one orbit, with conjugate points.
    Variation(RunArgs),
    /// Liouville action, Maslov rate and the horocycle verdict (exit 1 if not horocyclic).
    Invariants(RunArgs),
    /// Upper and lower bounds for the Mane critical value.
    CriticalValue(RunArgs),
    /// Closed magnetic geodesic in a free homotopy class.
    ClosedOrbit(RunArgs),
    /// Run the acceptance criteria.
    Acceptance(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment config; defaults apply when omitted.
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: config, then $HOROFLOW_WORKERS, then all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory (default: ./out).
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    resolution: Option<usize>,
    /// Replace the field by the constant `lambda`.
    #[arg(long)]
    lambda: Option<f64>,
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let (scenario, args) = match cli.command {
        Command::CheckAlgebra(a) => (Scenario::CheckAlgebra, a),
        Command::Simulate(a) => (Scenario::Simulate, a),
        Command::Variation(a) => (Scenario::Variation, a),
        Command::Invariants(a) => (Scenario::Invariants, a),
        Command::CriticalValue(a) => (Scenario::CriticalValue, a),
        Command::ClosedOrbit(a) => (Scenario::ClosedOrbit, a),
        Command::Acceptance(a) => (Scenario::Acceptance, a),
    };
    let overrides = Overrides {
        seed: args.seed,
        workers: args.workers,
        out: args.out,
        dt: args.dt,
        horizon: args.horizon,
        samples: args.samples,
        resolution: args.resolution,
        lambda: args.lambda,
    };
    horoflow_cli::execute(scenario, args.config.as_deref(), &overrides)
}
