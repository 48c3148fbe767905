use std::path::PathBuf;
use std::process::ExitCode;

use anticoncentration_lab::{batch_exit_code, run_scenario, verify_all, Scenario, Task, WORKERS_ENV};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "anticoncentration-lab", version, about = "Exact anti-concentration experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file (JSON).
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory for the CSV and JSON artifacts.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the scenario's `mode`.
    #[arg(long)]
    mode: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Certified bound on rho_S (modes: walk, product, decoupling).
    Bound(RunArgs),
    /// Verify or search self-translate certificates (modes: verify, search).
    Selfdim(RunArgs),
    /// Progressions, grids, grid edge counts and bad translates (modes: ap, grid, bad, count).
    Mine(RunArgs),
    /// Baseline bounds for sign walks (modes: js, forward1, forward2).
    Baseline(RunArgs),
    /// Equipartition bound for sign walks.
    Forward1(RunArgs),
    /// Parameter sweeps (modes: erdos, inverse).
    Sweep(RunArgs),
    /// Runs whatever task the scenario names.
    Run(RunArgs),
    /// Runs every scenario in a directory.
    VerifyAll {
        /// Directory of scenario files.
        #[arg(long)]
        scenarios: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Worker threads.
        #[arg(long, env = WORKERS_ENV, default_value_t = 1)]
        workers: usize,
    },
}

fn run_one(args: RunArgs, task: Option<Task>) -> u8 {
    let mut sc = match Scenario::load(&args.scenario) {
        Ok(sc) => sc,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    if let Some(t) = task {
        if sc.task != t {
            eprintln!(
                "error: {}: scenario task is `{}` but the subcommand is `{t}`",
                args.scenario.display(),
                sc.task
            );
            return 2;
        }
    }
    if let Some(m) = args.mode {
        if !sc.task.modes().contains(&m.as_str()) {
            eprintln!("error: `{m}` is not a mode of `{}`; expected one of {:?}", sc.task, sc.task.modes());
            return 2;
        }
        sc.mode = m;
    }
    let output = match run_scenario(&sc) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {}: {e}", args.scenario.display());
            return 2;
        }
    };
    match output.write(&args.out) {
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    }
    for v in &output.violations {
        eprintln!("VIOLATION: {v}");
    }
    for r in &output.rejections {
        eprintln!("rejected: {r}");
    }
    output.exit_code() as u8
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Bound(a) => run_one(a, Some(Task::Bound)),
        Command::Selfdim(a) => run_one(a, Some(Task::Selfdim)),
        Command::Mine(a) => run_one(a, Some(Task::Mine)),
        Command::Baseline(a) => run_one(a, Some(Task::Baseline)),
        Command::Forward1(a) => run_one(a, Some(Task::Forward1)),
        Command::Sweep(a) => run_one(a, Some(Task::Sweep)),
        Command::Run(a) => run_one(a, None),
        Command::VerifyAll {
            scenarios,
            out,
            workers,
        } => match verify_all(&scenarios, &out, workers) {
            Ok(entries) => {
                for e in &entries {
                    let status = match e.exit_code {
                        0 => "ok",
                        1 => "VIOLATION",
                        _ => "error",
                    };
                    println!("{status:<9} {} {}", e.file.display(), e.message);
                }
                batch_exit_code(&entries) as u8
            }
            Err(e) => {
                eprintln!("error: {e}");
                2
            }
        },
    };
    ExitCode::from(code)
}
