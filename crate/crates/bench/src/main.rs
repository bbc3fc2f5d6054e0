use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Parser, Subcommand};
use isac_bench::experiments::{self, EXPERIMENTS};
use isac_bench::{plot, BenchConfig};

/// Experiment runner for the sensing and communication simulator.
#[derive(Debug, Parser)]
#[command(name = "isac-bench", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment and write its CSV tables.
    Run {
        /// Experiment name; see `isac-bench list`.
        experiment: String,
        /// Overrides the seed in the configuration file.
        #[arg(long)]
        seed: Option<u64>,
        /// TOML configuration; defaults apply to every missing key.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory (default: out/<experiment>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write SVG charts next to the CSVs.
        #[arg(long)]
        plots: bool,
    },
    /// List the available experiments.
    List,
    /// Parse a configuration file and print it with defaults filled in.
    Validate { config: PathBuf },
}

const EXIT_THRESHOLD: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_CONFIG: u8 = 3;

fn load_config(path: Option<&Path>) -> Result<BenchConfig, ExitCode> {
    match path {
        None => Ok(BenchConfig::default()),
        Some(p) => BenchConfig::load(p).map_err(|e| {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }),
    }
}

fn run(
    experiment: &str,
    seed: Option<u64>,
    config: Option<&Path>,
    out: Option<PathBuf>,
    plots: bool,
) -> ExitCode {
    if !EXPERIMENTS.iter().any(|(n, _)| *n == experiment) {
        eprintln!("error: unknown experiment {experiment:?}; try `isac-bench list`");
        return ExitCode::from(EXIT_USAGE);
    }
    let cfg = match load_config(config) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let seed = seed.unwrap_or(cfg.seed);
    let out = out.unwrap_or_else(|| Path::new("out").join(experiment));
    let started = Instant::now();
    let result = experiments::run(experiment, &cfg, seed)
        .expect("name checked above")
        .and_then(|report| {
            let header = format!(
                "# experiment={experiment} seed={seed} config_hash={}",
                cfg.hash()
            );
            report
                .write_tables(&out, &header)
                .with_context(|| format!("writing tables to {}", out.display()))?;
            if plots {
                for (file, svg) in plot::charts(experiment, &report) {
                    let path = out.join(file);
                    std::fs::write(&path, svg)
                        .with_context(|| format!("writing {}", path.display()))?;
                }
            }
            Ok(report)
        });
    let report = match result {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::FAILURE;
        }
    };
    for n in &report.notes {
        println!("{n}");
    }
    for c in &report.checks {
        println!("{}", c.line());
    }
    log_line(experiment, seed, &out, started);
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_THRESHOLD)
    }
}

fn log_line(experiment: &str, seed: u64, out: &Path, started: Instant) {
    eprintln!(
        "{experiment} (seed {seed}) finished in {:.1} s, tables in {}",
        started.elapsed().as_secs_f64(),
        out.display()
    );
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match cli.command {
        Command::Run {
            experiment,
            seed,
            config,
            out,
            plots,
        } => run(&experiment, seed, config.as_deref(), out, plots),
        Command::List => {
            for (name, description) in EXPERIMENTS {
                println!("{name:<20} {description}");
            }
            ExitCode::SUCCESS
        }
        Command::Validate { config } => match load_config(Some(&config)) {
            Ok(cfg) => {
                // A closed pipe (e.g. `| head`) is not an error worth a panic.
                let mut stdout = std::io::stdout().lock();
                let _ = writeln!(stdout, "{}# config_hash={}", cfg.normalized(), cfg.hash());
                ExitCode::SUCCESS
            }
            Err(code) => code,
        },
    }
}
