//! `xxqst`: coefficient traces, protocol runs, boundary-coupling sweeps and
//! operator-identity checks for XX spin chains.

mod commands;
mod output;
mod parse;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use parse::parse_time;

#[derive(Parser, Debug)]
#[command(name = "xxqst", version, about = "State transfer on XX spin chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct ProfileArgs {
    /// `perfect`, `boundary` (with --eta) or a comma-separated coupling list.
    #[arg(long, default_value = "perfect")]
    pub profile: String,
    /// Number of sites; implied by an explicit coupling list.
    #[arg(long)]
    pub n: Option<usize>,
    /// Boundary coupling ratio for `--profile boundary`.
    #[arg(long)]
    pub eta: Option<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Leave the timestamp out of the output metadata.
    #[arg(long)]
    pub no_timestamp: bool,
}

#[derive(Args, Debug, Clone)]
pub struct BoxArgs {
    #[arg(long)]
    pub eta_min: Option<f64>,
    #[arg(long)]
    pub eta_max: Option<f64>,
    #[arg(long, value_parser = parse_time)]
    pub t_min: Option<f64>,
    #[arg(long, value_parser = parse_time)]
    pub t_max: Option<f64>,
    /// Grid points per axis.
    #[arg(long, default_value_t = xxqst_core::optimize::DEFAULT_RESOLUTION)]
    pub resolution: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the Heisenberg coefficient trace α_k(t) as CSV.
    Coefficients {
        #[command(flatten)]
        profile: ProfileArgs,
        #[arg(long, value_parser = parse_time)]
        t_max: f64,
        #[arg(long, default_value_t = 200)]
        steps: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run the measurement-based transfer protocol on the exact oracle.
    Transfer(commands::TransferArgs),
    /// Grid sweep of the fidelity estimate over (eta, t) as CSV.
    Sweep {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        grid: BoxArgs,
        /// Also write the best grid point as JSON here.
        #[arg(long)]
        best_out: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Sweep plus local refinement; writes the optimum as JSON.
    Optimize {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        grid: BoxArgs,
        #[arg(long, default_value_t = xxqst_core::optimize::DEFAULT_TOLERANCE)]
        tolerance: f64,
        /// Haar input samples for an exact cross-check at the optimum; 0 skips it.
        #[arg(long, default_value_t = 0)]
        cross_validate: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, env = "XXQST_ORACLE_CAP", default_value_t = xxqst_core::oracle::DEFAULT_ORACLE_CAP)]
        oracle_cap: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// End-pair operator identities and the transfer condition at one time.
    Verify {
        #[command(flatten)]
        profile: ProfileArgs,
        #[arg(long, value_parser = parse_time, default_value = "pi/4")]
        t: f64,
        /// First site of the mirror pair.
        #[arg(long, default_value_t = 1)]
        site: usize,
        /// Emit JSON instead of a text table.
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Operator identities for every mirror pair of an N-site chain.
    Identity {
        #[command(flatten)]
        profile: ProfileArgs,
        #[arg(long, value_parser = parse_time, default_value = "pi/4")]
        t: f64,
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = match cli.command {
        Command::Coefficients { profile, t_max, steps, output } => {
            commands::coefficients(&profile, t_max, steps, &output)
        }
        Command::Transfer(args) => commands::transfer(&args),
        Command::Sweep { n, grid, best_out, output } => commands::sweep(n, &grid, best_out.as_deref(), &output),
        Command::Optimize { n, grid, tolerance, cross_validate, seed, oracle_cap, output } => {
            commands::optimize(n, &grid, tolerance, cross_validate, seed, oracle_cap, &output)
        }
        Command::Verify { profile, t, site, json, output } => commands::verify(&profile, t, site, json, &output),
        Command::Identity { profile, t, json, output } => commands::identity(&profile, t, json, &output),
    };
    match run {
        Ok(code) => code,
        Err(e) => {
            eprintln!("xxqst: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
