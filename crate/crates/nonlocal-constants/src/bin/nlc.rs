//! Experiment runner for nonlocal constants of motion.
//!
//! `nlc run --config exp.toml` integrates a catalog system, evaluates the
//! requested constants along the trajectory, and writes a CSV time series
//! plus a JSON summary. `nlc check` runs the hypothesis validations on a
//! short probe trajectory; `nlc list` prints the registries.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nonlocal_constants::error::Error;
use nonlocal_constants::experiment::{
    list_catalog, run_checks, run_experiment, ExperimentConfig, OUTPUT_DIR_ENV,
};

#[derive(Parser)]
#[command(name = "nlc", version, about = "Nonlocal constants of motion experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run experiments from config files (several run concurrently).
    Run(RunArgs),
    /// List the built-in systems, families and constants.
    List,
    /// Run hypothesis checks only (short probe integration, no reports).
    Check(CheckArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config file(s), TOML. Repeat for a concurrent batch.
    #[arg(long, required = true, num_args = 1..)]
    config: Vec<PathBuf>,

    /// Override the end time of the integration window.
    #[arg(long)]
    tf: Option<f64>,

    /// Override both integrator tolerances.
    #[arg(long)]
    tol: Option<f64>,

    /// Output directory (precedence: this flag, then the config file,
    /// then $NLC_OUT_DIR, then the current directory).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    config: PathBuf,
}

fn load_config(path: &PathBuf, tf: Option<f64>, tol: Option<f64>) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::from_path(path)?;
    if let Some(tf) = tf {
        cfg.t_span.1 = tf;
    }
    if let Some(tol) = tol {
        cfg.integrator.rel_tol = tol;
        cfg.integrator.abs_tol = tol;
    }
    Ok(cfg)
}

fn output_dir(flag: &Option<PathBuf>, cfg: &ExperimentConfig) -> PathBuf {
    if let Some(dir) = flag {
        return dir.clone();
    }
    if let Some(dir) = &cfg.output.dir {
        return PathBuf::from(dir);
    }
    if let Ok(dir) = std::env::var(OUTPUT_DIR_ENV) {
        if !dir.is_empty() {
            return PathBuf::from(dir);
        }
    }
    PathBuf::from(".")
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::BlowUp { .. } | Error::Stiffness { .. } | Error::MaxSteps { .. } => 3,
        _ => 2,
    }
}

fn run_one(path: &PathBuf, args: &RunArgs) -> u8 {
    let cfg = match load_config(path, args.tf, args.tol) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("{}: {e}", path.display());
            return 2;
        }
    };
    let out_dir = output_dir(&args.out, &cfg);
    match run_experiment(&cfg, &out_dir) {
        Ok(report) => {
            let s = &report.summary;
            println!("[{}] status: {}", s.name, s.status);
            if let Some(t) = s.last_valid_time {
                println!("[{}]   last valid time: {t:.6}", s.name);
            }
            for (name, c) in &s.constants {
                println!(
                    "[{}]   {name}: ref={:.6e} max_rel_drift={:.3e} budget={:.1e} {}",
                    s.name,
                    c.drift.reference_value,
                    c.drift.max_rel_drift,
                    c.budget,
                    if c.passed { "PASS" } else { "FAIL" }
                );
            }
            for (name, c) in &s.checks {
                println!(
                    "[{}]   check {name}: {}",
                    s.name,
                    if c.passed { "PASS" } else { "FAIL" }
                );
            }
            if let Some(csv) = &report.csv_path {
                println!("[{}]   wrote {}", s.name, csv.display());
            }
            println!("[{}]   wrote {}", s.name, report.summary_path.display());
            s.exit_code as u8
        }
        Err(e) => {
            eprintln!("{}: {e}", path.display());
            exit_code_for(&e)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match &cli.command {
        Command::List => {
            print!("{}", list_catalog());
            0
        }
        Command::Check(args) => match ExperimentConfig::from_path(&args.config) {
            Ok(cfg) => match run_checks(&cfg) {
                Ok(checks) => {
                    let mut ok = true;
                    if checks.is_empty() {
                        println!("no applicable hypothesis checks for this config");
                    }
                    for (name, c) in &checks {
                        ok &= c.passed;
                        match (c.residual, c.threshold) {
                            (Some(r), Some(th)) => println!(
                                "check {name}: residual {r:.3e} (limit {th:.1e}) {}",
                                if c.passed { "PASS" } else { "FAIL" }
                            ),
                            _ => println!(
                                "check {name}: {}",
                                if c.passed { "PASS" } else { "FAIL" }
                            ),
                        }
                    }
                    u8::from(!ok)
                }
                Err(e) => {
                    eprintln!("{e}");
                    exit_code_for(&e)
                }
            },
            Err(e) => {
                eprintln!("{e}");
                2
            }
        },
        Command::Run(args) => {
            if args.config.len() == 1 {
                run_one(&args.config[0], args)
            } else {
                // Batch: one thread per experiment, worst exit code wins.
                std::thread::scope(|scope| {
                    let handles: Vec<_> = args
                        .config
                        .iter()
                        .map(|path| scope.spawn(move || run_one(path, args)))
                        .collect();
                    handles
                        .into_iter()
                        .map(|h| h.join().unwrap_or(2))
                        .max()
                        .unwrap_or(0)
                })
            }
        }
    };
    ExitCode::from(code)
}
