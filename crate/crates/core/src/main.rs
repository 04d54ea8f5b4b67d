use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vhi::cli::{self, Overrides};

#[derive(Parser)]
#[command(name = "vhi", version, about = "Penalized finite element solves and convergence sweeps for contact problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve once and write nodal values and the residual breakdown.
    Solve(Opts),
    /// Run the configured (h, eps) sweep and write the CSV table.
    Sweep(Opts),
    /// Estimate trace eigenvalues and check the smallness condition.
    Constants(Opts),
}

#[derive(Args)]
struct Opts {
    config: PathBuf,
    #[arg(long)]
    level: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    eps: Option<f64>,
    /// Proceed when the smallness condition fails.
    #[arg(long)]
    force: bool,
    /// Print the planned sweep cells without solving.
    #[arg(long)]
    dry_run: bool,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Opts {
    fn overrides(&self) -> Overrides {
        Overrides {
            level: self.level,
            eps: self.eps,
            force: self.force,
            dry_run: self.dry_run,
            workers: self.workers,
            seed: self.seed,
            out: self.out.clone(),
        }
    }
}

fn main() -> ExitCode {
    let args = match Cli::try_parse() {
        Ok(a) => a,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(cli::EXIT_PARSE as u8);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    let (command, opts): (fn(&_, &_, &mut dyn std::io::Write) -> _, _) = match &args.command {
        Command::Solve(o) => (cli::cmd_solve, o),
        Command::Sweep(o) => (cli::cmd_sweep, o),
        Command::Constants(o) => (cli::cmd_constants, o),
    };
    let mut stdout = std::io::stdout().lock();
    let code = cli::run(command, &opts.config, &opts.overrides(), &mut stdout);
    ExitCode::from(code as u8)
}
