use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use kpca_cli::acceptance::{self, all_pass};
use kpca_cli::config::RawConfig;
use kpca_cli::report::{execute, write_outputs};
use kpca_cli::{presets, sweep, RunConfig};

#[derive(Parser)]
#[command(name = "kpca", version, about = "Kernel-based predictive control allocation scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario (or `--preset all` for the full acceptance set).
    Run {
        #[arg(long, conflicts_with = "preset")]
        config: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = default_jobs())]
        jobs: usize,
    },
    /// Run one sub-run per value of a numeric key.
    Sweep {
        #[arg(long, conflicts_with = "preset")]
        config: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        key: String,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        values: Vec<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = default_jobs())]
        jobs: usize,
    },
    /// Evaluate the acceptance criteria against an output directory.
    Check {
        #[arg(long)]
        out: PathBuf,
    },
    /// List the built-in presets.
    ListPresets,
    /// Print a preset as a complete config file.
    DumpPreset {
        #[arg(long)]
        preset: String,
    },
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn raw_source(config: &Option<PathBuf>, preset: &Option<String>) -> Result<RawConfig> {
    match (config, preset) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            RawConfig::parse(&text, &path.display().to_string())
        }
        (None, Some(name)) => RawConfig::parse(&presets::find(name)?.dump(), name),
        _ => bail!("give exactly one of --config or --preset"),
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run { config, preset, out, jobs } => {
            if preset.as_deref() == Some("all") {
                acceptance::produce(&out, jobs)?;
                println!("wrote acceptance outputs to {}", out.display());
                return Ok(true);
            }
            let cfg = RunConfig::from_raw(&raw_source(&config, &preset)?)?;
            let outcome = execute(&cfg)?;
            write_outputs(&out, &outcome)?;
            let r = &outcome.report;
            println!("{} ({} s simulated, {:.2} s wall)", r.scenario, cfg.scenario.duration, r.runtime_s);
            for (flag, v) in &r.flags {
                println!("  {flag:22} {}", v.as_str());
            }
            if let Some(f) = &r.failure {
                eprintln!("run stopped early: {f}");
                return Ok(false);
            }
            Ok(true)
        }
        Command::Sweep { config, preset, key, values, out, jobs } => {
            let raw = raw_source(&config, &preset)?;
            let values = values
                .iter()
                .map(|s| s.trim())
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<f64>().with_context(|| format!("sweep value {s:?} is not a number")))
                .collect::<Result<Vec<_>>>()?;
            let report = sweep::sweep(&raw, &key, &values, &out, jobs)?;
            print!("{}", report.table());
            Ok(report.rows.iter().all(|r| r.failure.is_none()))
        }
        Command::Check { out } => {
            let criteria = acceptance::evaluate(&out);
            for c in &criteria {
                println!("{}", c.line());
            }
            Ok(all_pass(&criteria))
        }
        Command::ListPresets => {
            for p in presets::presets() {
                println!("{:26} {}", p.name, p.summary);
            }
            Ok(true)
        }
        Command::DumpPreset { preset } => {
            print!("{}", presets::find(&preset)?.dump());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
