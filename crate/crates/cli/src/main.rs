use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qdyn::parallel::{self, Execution};
use qdyn_cli::Failure;

#[derive(Parser)]
#[command(name = "qdyn", version, about = "Constrained density-matrix dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a scenario file and report constraint qualification.
    Check { file: PathBuf },
    /// Integrate every initial state; writes traj_<i>.csv and summary.json.
    Run {
        file: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Like run, optionally with an SVG cross-section of the Bloch ball.
    Sweep {
        file: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        svg: bool,
    },
    /// Built-in scenarios.
    #[command(subcommand)]
    Demo(Demo),
}

#[derive(Subcommand)]
enum Demo {
    /// Spin-1/2 with H = sigma_z and constraint sigma_x, swept over a slice x = x0.
    Figure1 {
        #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
        x0: f64,
        #[arg(long, default_value_t = 9)]
        grid: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn execute(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = qdyn_cli::threads_from_env()? {
        parallel::configure_threads(n);
    }
    let exec = Execution::Parallel;
    match cli.command {
        Command::Check { file } => qdyn_cli::check(&file, &mut std::io::stdout().lock()),
        Command::Run { file, out } => {
            let rep = qdyn_cli::run(&file, &out, false, exec)?;
            println!("wrote {} trajectories to {}", rep.summary.trajectories.len(), out.display());
            Ok(())
        }
        Command::Sweep { file, out, svg } => {
            let rep = qdyn_cli::run(&file, &out, svg, exec)?;
            println!("wrote {} trajectories to {}", rep.summary.trajectories.len(), out.display());
            if let Some((p, c)) = rep.svg {
                println!("{}: {} trajectories, {} fixed points", p.display(), c.polylines, c.markers);
            }
            Ok(())
        }
        Command::Demo(Demo::Figure1 { x0, grid, out }) => {
            let (file, rep) = qdyn_cli::demo_figure1(x0, grid, &out, exec)?;
            println!("scenario written to {}", file.display());
            if let Some((p, c)) = rep.svg {
                println!("{}: {} trajectories, {} fixed points", p.display(), c.polylines, c.markers);
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        // Usage errors count as validation failures; 2 is reserved for integration.
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qdyn: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
