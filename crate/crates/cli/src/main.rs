//! `tensor-means`: runs tail-bound experiments from JSON configs.
//!
//! Precedence for run parameters: command-line flag, then config file value,
//! then built-in default. `--out-dir` keeps the file name of the config's
//! `out` (or the theorem id) and replaces its directory.
//!
//! Exit codes: 0 all primary claims satisfied, 1 a deterministic check or a
//! non-vacuous tail bound failed, 2 usage or configuration error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tensor_means::connections::ConnectionSpec;
use tensor_means::experiment::{
    run_config_file, run_oracle, run_suite_file, OracleArgs, OracleKind, Overrides, Severity,
};
use tensor_means::random::Parallelism;

#[derive(Parser)]
#[command(name = "tensor-means", version, about = "Monte Carlo checks of tensor tail and Löwner-order bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunFlags {
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config trial count.
    #[arg(long)]
    trials: Option<usize>,
    /// Overrides the deterministic order tolerance.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Directory for report files.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Run trials on one thread. Reports are identical either way.
    #[arg(long)]
    serial: bool,
}

impl RunFlags {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            trials: self.trials,
            tolerance: self.tolerance,
            out_dir: self.out_dir.clone(),
            parallelism: if self.serial { Parallelism::Serial } else { Parallelism::Parallel },
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config.
    Check {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Run a JSON array of experiment configs into one aggregated report.
    Suite {
        #[arg(long)]
        suite: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Cross-check a library quantity against a brute-force recomputation.
    Oracle {
        /// einstein_product, trace_cyclic, ratio_spectrum or scalar_mean.
        name: String,
        /// Modes of the tensor shape, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "2,2")]
        shape: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random samples for the tensor oracles.
        #[arg(long, default_value_t = 1)]
        pairs: usize,
        /// Connection name, e.g. sqrt, arithmetic, reciprocal_power.
        #[arg(long = "f", default_value = "sqrt")]
        connection: String,
        /// Connection exponent for power and reciprocal_power.
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, default_value_t = 2.0)]
        q: f64,
        /// Diagonal of Z, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "4,1")]
        z: Vec<f64>,
        #[arg(long, default_value_t = 4.0)]
        x: f64,
        #[arg(long, default_value_t = 9.0)]
        y: f64,
        #[arg(long)]
        tolerance: Option<f64>,
    },
}

fn exit(severity: Severity) -> ExitCode {
    ExitCode::from(severity.code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Check { config, flags } => {
            let out = run_config_file(&config, &flags.overrides());
            if let Some(err) = &out.error {
                eprintln!("error: {err}");
            }
            if let Some(report) = &out.report {
                for claim in &report.claims {
                    println!(
                        "{:<32} {:<13} {}",
                        claim.name,
                        format!("{:?}", claim.role).to_lowercase(),
                        if claim.satisfied() { "ok" } else { "VIOLATED" }
                    );
                }
                println!(
                    "{}: {}",
                    report.theorem,
                    if report.satisfied { "satisfied" } else { "violated" }
                );
            }
            if let Some(paths) = &out.paths {
                println!("wrote {} and {}", paths.csv.display(), paths.json.display());
            }
            exit(out.severity)
        }
        Command::Suite { suite, flags } => {
            let out = run_suite_file(&suite, &flags.overrides());
            if let Some(err) = &out.error {
                eprintln!("error: {err}");
            }
            for entry in &out.entries {
                match (&entry.report, &entry.error) {
                    (Some(r), _) => println!("[{}] {} exit {}", entry.index, r.theorem, entry.exit_code),
                    (None, Some(e)) => eprintln!("[{}] {e}", entry.index),
                    (None, None) => {}
                }
            }
            if let Some(paths) = &out.paths {
                println!("wrote {} and {}", paths.csv.display(), paths.json.display());
            }
            exit(out.severity)
        }
        Command::Oracle {
            name,
            shape,
            seed,
            pairs,
            connection,
            alpha,
            q,
            z,
            x,
            y,
            tolerance,
        } => {
            let kind: OracleKind = match name.parse() {
                Ok(kind) => kind,
                Err(e) => {
                    eprintln!("error: {e}");
                    return exit(Severity::Usage);
                }
            };
            let mut spec = ConnectionSpec::named(&connection);
            if let Some(a) = alpha {
                spec = spec.with("alpha", a);
            }
            let args = OracleArgs {
                shape,
                seed,
                pairs,
                connection: spec,
                q,
                z,
                x,
                y,
                tolerance,
            };
            match run_oracle(kind, &args) {
                Ok(out) => {
                    if !out.library.is_empty() {
                        println!("library:   {:?}", out.library);
                        println!("reference: {:?}", out.reference);
                    }
                    println!("max deviation: {:e} (tolerance {:e})", out.max_deviation, out.tolerance);
                    exit(if out.passed { Severity::Satisfied } else { Severity::Violated })
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    exit(Severity::of_error(&e))
                }
            }
        }
    }
}
