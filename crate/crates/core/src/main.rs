use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use coop_spectra::cli::{output_dir, run_subcommand, Command, Overrides, OUT_ENV};
use coop_spectra::config::load_config;

#[derive(Clone, Copy, ValueEnum)]
enum Sub {
    Eigen,
    Ode,
    Elliptic,
    Hj,
    Constants,
    Levelset,
    Sweep,
    Persistence,
    Verify,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::Eigen => Command::Eigen,
            Sub::Ode => Command::Ode,
            Sub::Elliptic => Command::Elliptic,
            Sub::Hj => Command::Hj,
            Sub::Constants => Command::Constants,
            Sub::Levelset => Command::Levelset,
            Sub::Sweep => Command::Sweep,
            Sub::Persistence => Command::Persistence,
            Sub::Verify => Command::Verify,
        }
    }
}

/// Principal eigenvalues of time-periodic cooperative parabolic systems.
#[derive(Parser)]
#[command(version, allow_negative_numbers = true, after_help = format!("The output directory is --out, else ${OUT_ENV}, else [output] dir, else ./out.\nExit codes: 0 ok, 1 verification failure, 2 config error, 3 solver error."))]
struct Args {
    #[arg(value_enum)]
    command: Sub,
    /// Problem description file
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    level: Option<f64>,
    /// Eigenvalue tolerance
    #[arg(long)]
    tol: Option<f64>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Some(k) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("error: --threads: {e}");
            return ExitCode::from(2);
        }
    }
    let cfg = match load_config(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", args.config.display());
            return ExitCode::from(2);
        }
    };
    let over = Overrides { omega: args.omega, rho: args.rho, theta: args.theta, level: args.level, tol: args.tol };
    let out = output_dir(args.out.as_deref(), &cfg);
    let outcome = run_subcommand(args.command.into(), &cfg, &over, &out);
    for l in &outcome.lines {
        println!("{l}");
    }
    if let Some(e) = &outcome.error {
        eprintln!("error: {e}");
    }
    println!("results in {}", out.display());
    ExitCode::from(outcome.exit_code() as u8)
}
