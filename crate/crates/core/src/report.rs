//! CSV reports and JSON transcripts.
//!
//! | file | header |
//! |------|--------|
//! | `metrics.csv` | `scenario,seed,temp_rise,gross_output,climate_index,econ_index,hv_contribution` |
//! | `trajectories.csv` | `scenario,seed,step,temperature,carbon_stock,net_output,gross_output,emissions,consumption` |
//! | `partitions.csv` | `scenario,seed,step,generation,event,region_a,region_b,group_a,group_b,groups` |
//! | `comparison.csv` | `scenario,runs,temp_rise,gross_output,climate_index,econ_index,hv_contribution` |
//! | `transcripts/<scenario>_seed<n>.json` | one serialized [`RunRecord`] |
//!
//! Trajectory step 0 is the initial state; step `k` is the state after the
//! `k`-th action stage, with that stage's outputs and emissions.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::harness::{Comparison, PartitionEvent, RunRecord};

#[derive(Serialize)]
struct MetricsRow<'a> {
    scenario: &'a str,
    seed: u64,
    temp_rise: f64,
    gross_output: f64,
    climate_index: f64,
    econ_index: f64,
    hv_contribution: f64,
}

#[derive(Serialize)]
struct TrajectoryRow<'a> {
    scenario: &'a str,
    seed: u64,
    step: usize,
    temperature: f64,
    carbon_stock: f64,
    net_output: f64,
    gross_output: f64,
    emissions: f64,
    consumption: f64,
}

#[derive(Serialize)]
struct PartitionRow<'a> {
    scenario: &'a str,
    seed: u64,
    step: usize,
    generation: u64,
    event: &'static str,
    region_a: Option<usize>,
    region_b: Option<usize>,
    group_a: Option<usize>,
    group_b: Option<usize>,
    groups: String,
}

#[derive(Serialize)]
struct ComparisonCsvRow<'a> {
    scenario: &'a str,
    runs: Option<usize>,
    temp_rise: Option<f64>,
    gross_output: Option<f64>,
    climate_index: Option<f64>,
    econ_index: Option<f64>,
    hv_contribution: f64,
}

/// Paths written by [`emit_report`].
#[derive(Debug, Clone)]
pub struct ReportFiles {
    pub metrics: PathBuf,
    pub trajectories: PathBuf,
    pub partitions: PathBuf,
    pub transcripts: Vec<PathBuf>,
}

fn writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

fn prepare_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", dir.display()),
        ))
    })
}

pub fn transcript_name(record: &RunRecord) -> String {
    format!("{}_seed{}.json", record.scenario().name(), record.seed())
}

pub fn write_transcript(record: &RunRecord, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })?;
    serde_json::to_writer(BufWriter::new(file), record)?;
    Ok(())
}

pub fn read_transcript(path: &Path) -> Result<RunRecord> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Transcript(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Transcript(format!("{}: {e}", path.display())))
}

/// Writes metrics, trajectories, partition history and one transcript per record.
pub fn emit_report(records: &[RunRecord], out_dir: &Path) -> Result<ReportFiles> {
    if records.is_empty() {
        return Err(Error::InvalidInput("no records to report".into()));
    }
    prepare_dir(out_dir)?;
    let files = ReportFiles {
        metrics: out_dir.join("metrics.csv"),
        trajectories: out_dir.join("trajectories.csv"),
        partitions: out_dir.join("partitions.csv"),
        transcripts: records
            .iter()
            .map(|r| out_dir.join("transcripts").join(transcript_name(r)))
            .collect(),
    };

    let mut w = writer(&files.metrics)?;
    for r in records {
        let m = &r.metrics;
        w.serialize(MetricsRow {
            scenario: r.scenario().name(),
            seed: r.seed(),
            temp_rise: m.temp_rise,
            gross_output: m.gross_output,
            climate_index: m.climate_index,
            econ_index: m.econ_index,
            hv_contribution: m.hv_contribution,
        })?;
    }
    w.flush()?;

    let mut w = writer(&files.trajectories)?;
    for r in records {
        let scenario = r.scenario().name();
        let initial = std::iter::once((0, &r.initial_world, 0.0, 0.0, 0.0, 0.0));
        let later = r.steps.iter().map(|s| {
            (
                s.step + 1,
                &s.world,
                s.world.total_net_output(),
                s.world.total_gross_output(),
                s.world.total_emissions(),
                s.world.total_consumption(),
            )
        });
        for (step, world, net, gross, emissions, consumption) in initial.chain(later) {
            w.serialize(TrajectoryRow {
                scenario,
                seed: r.seed(),
                step,
                temperature: world.climate.temperature,
                carbon_stock: world.climate.carbon_stock,
                net_output: net,
                gross_output: gross,
                emissions,
                consumption,
            })?;
        }
    }
    w.flush()?;

    let file = File::create(&files.partitions)?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(BufWriter::new(file));
    // written by hand so the header exists even with no grouped scenario
    w.write_record([
        "scenario",
        "seed",
        "step",
        "generation",
        "event",
        "region_a",
        "region_b",
        "group_a",
        "group_b",
        "groups",
    ])?;
    for r in records {
        let scenario = r.scenario().name();
        for event in r.partition_history() {
            let row = match event {
                PartitionEvent::Initial { partition } => PartitionRow {
                    scenario,
                    seed: r.seed(),
                    step: 0,
                    generation: 0,
                    event: "initial",
                    region_a: None,
                    region_b: None,
                    group_a: None,
                    group_b: None,
                    groups: partition.to_text().trim_end().replace('\n', ";"),
                },
                PartitionEvent::Swap {
                    step,
                    generation,
                    swap,
                } => PartitionRow {
                    scenario,
                    seed: r.seed(),
                    step: step + 1,
                    generation,
                    event: "swap",
                    region_a: Some(swap.region_a),
                    region_b: Some(swap.region_b),
                    group_a: Some(swap.group_a),
                    group_b: Some(swap.group_b),
                    groups: String::new(),
                },
            };
            w.serialize(row)?;
        }
    }
    w.flush()?;

    if let Some(dir) = files.transcripts.first().and_then(|p| p.parent()) {
        prepare_dir(dir)?;
    }
    for (r, path) in records.iter().zip(&files.transcripts) {
        write_transcript(r, path)?;
    }
    Ok(files)
}

/// Writes the per-scenario averages plus a final `hypervolume-set` row.
pub fn write_comparison(cmp: &Comparison, out_dir: &Path) -> Result<PathBuf> {
    prepare_dir(out_dir)?;
    let path = out_dir.join("comparison.csv");
    let mut w = writer(&path)?;
    for row in &cmp.rows {
        w.serialize(ComparisonCsvRow {
            scenario: row.scenario.name(),
            runs: Some(row.runs),
            temp_rise: Some(row.temp_rise),
            gross_output: Some(row.gross_output),
            climate_index: Some(row.climate_index),
            econ_index: Some(row.econ_index),
            hv_contribution: row.hv_contribution,
        })?;
    }
    w.serialize(ComparisonCsvRow {
        scenario: "hypervolume-set",
        runs: None,
        temp_rise: None,
        gross_output: None,
        climate_index: None,
        econ_index: None,
        hv_contribution: cmp.hypervolume,
    })?;
    w.flush()?;
    Ok(path)
}
