use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rosl_cli::{cmd_audit, cmd_estimate, cmd_scan, cmd_solve};

/// Solve and analyse algebraic inclusions with relaxed one-sided Lipschitz maps.
#[derive(Parser)]
#[command(name = "rosl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured scheme from one starting point and write its trace.
    Solve {
        #[arg(long)]
        problem: PathBuf,
        /// Comma-separated starting point; overrides "x0" in the problem file.
        #[arg(long, allow_hyphen_values = true)]
        x0: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve from every node of the problem's grid and write the limits.
    Scan {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate the ROSL and Lipschitz constants by sampling the box.
    Estimate {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Check a trace against the problem's a-priori and exclusion bounds.
    Audit {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        problem: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mut out, mut err) = (io::stdout().lock(), io::stderr().lock());
    let code = match cli.command {
        Command::Solve {
            problem,
            x0,
            out: trace,
        } => cmd_solve(&problem, x0.as_deref(), &trace, &mut out, &mut err),
        Command::Scan { problem, out: csv } => cmd_scan(&problem, &csv, &mut out, &mut err),
        Command::Estimate {
            problem,
            samples,
            seed,
        } => cmd_estimate(&problem, samples, seed, &mut out, &mut err),
        Command::Audit { trace, problem } => cmd_audit(&trace, &problem, &mut out, &mut err),
    };
    ExitCode::from(code as u8)
}
