use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dyngroup::calibration;
use dyngroup::config::{Scenario, ScenarioConfig};
use dyngroup::error::{Error, Result};
use dyngroup::grouping::Partition;
use dyngroup::harness::{replay, run_comparison, run_episode};
use dyngroup::report::{emit_report, read_transcript, write_comparison};

#[derive(Parser)]
#[command(
    name = "dyngroup",
    version,
    about = "Dynamic-grouping climate negotiation simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one episode and write its report.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        scenario: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// Override the number of steps (10 gives a 50-year run).
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run several scenarios over several seeds and tabulate averages.
    Compare {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Comma-separated scenario names.
        #[arg(
            long,
            default_value = "none,bilateral,static-mitigation,static-mitigation-saving,dynamic"
        )]
        scenarios: String,
        /// `a..b` (inclusive) or a comma-separated list.
        #[arg(long, default_value = "0..9")]
        seeds: String,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-derive a recorded episode and check it against the transcript.
    Replay {
        #[arg(long)]
        transcript: PathBuf,
    },
    /// Write the synthetic calibration for a seed as CSV.
    Calibration {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the seed-table partition as text.
    Groups {
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_seeds(spec: &str) -> Result<Vec<u64>> {
    let bad = || Error::Config(format!("cannot parse seeds {spec:?}"));
    if let Some((a, b)) = spec.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b
            .trim()
            .trim_start_matches('=')
            .parse()
            .map_err(|_| bad())?;
        if b < a {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    spec.split(',')
        .map(|s| s.trim().parse().map_err(|_| bad()))
        .collect()
}

fn parse_scenarios(spec: &str) -> Result<Vec<Scenario>> {
    spec.split(',').map(|s| s.trim().parse()).collect()
}

fn load_config(path: Option<&Path>, horizon: Option<usize>) -> Result<ScenarioConfig> {
    let mut cfg = match path {
        Some(p) => ScenarioConfig::load(p)?,
        None => ScenarioConfig::default(),
    };
    if let Some(h) = horizon {
        cfg.horizon = h;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            config,
            scenario,
            seed,
            horizon,
            out,
        } => {
            let mut cfg = load_config(config.as_deref(), horizon)?;
            if let Some(s) = scenario {
                cfg.scenario = s.parse()?;
            }
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let record = run_episode(&cfg)?;
            let files = emit_report(std::slice::from_ref(&record), &out)?;
            let m = record.metrics;
            println!(
                "{} seed {}: temp_rise {:.3} gross_output {:.1} climate_index {:.3} econ_index {:.3} hv {:.4}",
                cfg.scenario, cfg.seed, m.temp_rise, m.gross_output, m.climate_index, m.econ_index,
                m.hv_contribution
            );
            println!("wrote {}", files.metrics.parent().unwrap_or(&out).display());
        }
        Command::Compare {
            config,
            scenarios,
            seeds,
            horizon,
            out,
        } => {
            let cfg = load_config(config.as_deref(), horizon)?;
            let scenarios = parse_scenarios(&scenarios)?;
            let seeds = parse_seeds(&seeds)?;
            let cmp = run_comparison(&cfg, &scenarios, &seeds)?;
            emit_report(&cmp.records, &out)?;
            let path = write_comparison(&cmp, &out)?;
            println!(
                "{:<26} {:>9} {:>12} {:>8} {:>8} {:>8}",
                "scenario", "temp_rise", "gross_output", "climate", "econ", "hv"
            );
            for r in &cmp.rows {
                println!(
                    "{:<26} {:>9.3} {:>12.1} {:>8.3} {:>8.3} {:>8.4}",
                    r.scenario.name(),
                    r.temp_rise,
                    r.gross_output,
                    r.climate_index,
                    r.econ_index,
                    r.hv_contribution
                );
            }
            println!("hypervolume of scenario set: {:.4}", cmp.hypervolume);
            println!("wrote {}", path.display());
        }
        Command::Replay { transcript } => {
            let record = read_transcript(&transcript)?;
            let report = replay(&record)?;
            println!(
                "replayed {} seed {}: {} steps, {} swaps, metrics identical (temp_rise {:.3}, hv {:.4})",
                report.scenario,
                report.seed,
                report.steps,
                report.swaps,
                report.metrics.temp_rise,
                report.metrics.hv_contribution
            );
        }
        Command::Calibration { seed, out } => {
            let file = std::fs::File::create(&out)?;
            calibration::write_csv(&calibration::synthetic(seed), file)?;
        }
        Command::Groups { out } => {
            std::fs::write(&out, Partition::seed_table().to_text())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
