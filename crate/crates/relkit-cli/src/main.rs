use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use relkit_core::finite::{theorem_suite, Mutation, SuiteConfig};
use relkit_core::runner::{render_report_element, run_scenario_file, RunOptions};

/// Rigorous box-level dynamics for closed relations.
#[derive(Parser)]
#[command(name = "relkit", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario file and write its report, CSVs and SVGs.
    Run {
        scenario: PathBuf,
        /// Output directory (default: $RELKIT_OUT or ./relkit-out).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed for sampled computations inside the scenario.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Worker threads (default: all cores). Results do not depend on it.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Run the finite-space theorem suite directly.
    Oracle {
        #[arg(long = "n-max", default_value_t = 6)]
        n_max: usize,
        #[arg(long, default_value_t = 500)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Deliberately corrupt one internal computation to confirm the
        /// suite catches it.
        #[arg(long)]
        mutate: Option<String>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Re-render a named element from a previously written report.
    Render {
        report: PathBuf,
        #[arg(long)]
        element: String,
    },
}

fn default_out() -> PathBuf {
    std::env::var_os("RELKIT_OUT")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("relkit-out"))
}

fn with_threads<T>(threads: Option<usize>, body: impl FnOnce() -> T + Send) -> anyhow::Result<T>
where
    T: Send,
{
    match threads {
        None => Ok(body()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .context("building thread pool")?;
            Ok(pool.install(body))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Cmd::Run {
            scenario,
            out,
            seed,
            threads,
        } => {
            let opts = RunOptions {
                out_dir: out.unwrap_or_else(default_out),
                seed,
            };
            let report = with_threads(threads, || run_scenario_file(&scenario, &opts))?
                .with_context(|| format!("running {}", scenario.display()))?;
            for cmd in &report.commands {
                let status = match cmd.pass {
                    Some(true) => "pass",
                    Some(false) => "FAIL",
                    None => "done",
                };
                eprintln!(
                    "[{}] {} ... {} ({:.1} ms)",
                    cmd.index,
                    cmd.title,
                    status,
                    cmd.elapsed.as_secs_f64() * 1e3
                );
            }
            let dir = opts.out_dir.join(&report.scenario);
            println!("{}", dir.join("report.txt").display());
            if report.failed_expectations() > 0 {
                eprintln!("{} expectation(s) failed", report.failed_expectations());
                return Ok(ExitCode::from(2));
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Oracle {
            n_max,
            trials,
            seed,
            mutate,
            threads,
        } => {
            let mut config = SuiteConfig::new(n_max, trials, seed);
            config.mutation = match mutate.as_deref() {
                None => None,
                Some("drop-invariance") => Some(Mutation::DropInvariance),
                Some(other) => anyhow::bail!("unknown mutation `{other}`"),
            };
            let report = with_threads(threads, || theorem_suite(&config))??;
            println!("trials = {}", report.trials);
            for (k, label) in ["T1", "T2", "T3", "T4"].iter().enumerate() {
                println!("checks.{label} = {}", report.checks[k]);
            }
            println!("failures = {}", report.failures.len());
            if let Some(f) = report.first_counterexample() {
                println!("first-counterexample = trial {} {}: {}", f.trial, f.check, f.detail);
            }
            if report.passed() {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(2))
            }
        }
        Cmd::Render { report, element } => {
            let path = render_report_element(&report, &element)?;
            println!("{}", path.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}
