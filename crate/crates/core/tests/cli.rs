use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use dyngroup::config::{Scenario, ScenarioConfig};
use dyngroup::harness::{replay, run_episode};
use dyngroup::report::{emit_report, read_transcript, write_transcript};
use dyngroup::Error;

fn dyngroup(args: &[&str], out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_dyngroup"));
    cmd.args(args);
    if let Some(out) = out {
        cmd.arg("--out").arg(out);
    }
    cmd.output().expect("binary runs")
}

fn header(path: &Path) -> String {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string()
}

#[test]
fn simulate_writes_report_and_replays() {
    let dir = tempfile::tempdir().unwrap();
    let out = dyngroup(
        &[
            "simulate",
            "--scenario",
            "dynamic",
            "--seed",
            "3",
            "--horizon",
            "8",
        ],
        Some(dir.path()),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(
        header(&dir.path().join("metrics.csv")),
        "scenario,seed,temp_rise,gross_output,climate_index,econ_index,hv_contribution"
    );
    let traj = fs::read_to_string(dir.path().join("trajectories.csv")).unwrap();
    assert_eq!(traj.lines().count(), 1 + 9);
    let transcript = dir.path().join("transcripts/dynamic_seed3.json");
    let out = dyngroup(
        &["replay", "--transcript", transcript.to_str().unwrap()],
        None,
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("identical"));
}

#[test]
fn tampered_transcript_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ScenarioConfig {
        scenario: Scenario::StaticMitigation,
        horizon: 4,
        ..ScenarioConfig::default()
    };
    let mut record = run_episode(&cfg).unwrap();
    record.steps[2].actions[5].mitigation = 0.99;
    let path = dir.path().join("bad.json");
    write_transcript(&record, &path).unwrap();
    assert!(matches!(replay(&record), Err(Error::Transcript(_))));
    let out = dyngroup(&["replay", "--transcript", path.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));

    fs::write(&path, "{ not json").unwrap();
    let out = dyngroup(&["replay", "--transcript", path.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_configs_exit_with_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "scenario = \"dynamic\"\nunknown_key = 3\n").unwrap();
    let out = dyngroup(
        &["simulate", "--config", cfg.to_str().unwrap()],
        Some(dir.path()),
    );
    assert_eq!(out.status.code(), Some(1));

    fs::write(&cfg, "similarity_threshold = -1.0\n").unwrap();
    let out = dyngroup(
        &["simulate", "--config", cfg.to_str().unwrap()],
        Some(dir.path()),
    );
    assert_eq!(out.status.code(), Some(1));

    let out = dyngroup(&["simulate", "--scenario", "anarchy"], Some(dir.path()));
    assert_eq!(out.status.code(), Some(1));

    fs::write(&cfg, "calibration = \"missing.csv\"\n").unwrap();
    let out = dyngroup(
        &["simulate", "--config", cfg.to_str().unwrap()],
        Some(dir.path()),
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_paths_resolve_relative_to_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let calib = dir.path().join("calib.csv");
    let groups = dir.path().join("groups.txt");
    let out = dyngroup(&["calibration", "--seed", "7"], Some(&calib));
    assert!(out.status.success());
    let out = dyngroup(&["groups"], Some(&groups));
    assert!(out.status.success());
    fs::write(
        dir.path().join("policies.toml"),
        "default = { kind = \"cooperative\", target_level = 7 }\n[regions]\n4 = { kind = \"selfish\" }\n",
    )
    .unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        "scenario = \"static-mitigation-saving\"\nhorizon = 5\ncalibration = \"calib.csv\"\n\
         groups = \"groups.txt\"\npolicy_map = \"policies.toml\"\n",
    )
    .unwrap();
    let report = dir.path().join("report");
    let out = dyngroup(
        &["simulate", "--config", cfg.to_str().unwrap()],
        Some(&report),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(report
        .join("transcripts/static-mitigation-saving_seed0.json")
        .exists());
}

#[test]
fn compare_writes_table_with_hypervolume_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = dyngroup(
        &[
            "compare",
            "--scenarios",
            "none,dynamic",
            "--seeds",
            "0,1",
            "--horizon",
            "4",
        ],
        Some(dir.path()),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let table = fs::read_to_string(dir.path().join("comparison.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("none,2,"));
    assert!(lines[3].starts_with("hypervolume-set,"));
    assert_eq!(
        fs::read_dir(dir.path().join("transcripts"))
            .unwrap()
            .count(),
        4
    );
}

#[test]
fn report_records_swaps_at_their_step() {
    // Low inconsistency threshold and a generous similarity gate force swaps.
    let cfg = ScenarioConfig {
        scenario: Scenario::Dynamic,
        horizon: 6,
        inconsistency_threshold: 4,
        similarity_threshold: 2.0,
        seed: 2,
        ..ScenarioConfig::default()
    };
    let record = run_episode(&cfg).unwrap();
    let (k, step) = record
        .steps
        .iter()
        .enumerate()
        .find(|(_, s)| !s.swaps.is_empty())
        .expect("some swap happens");
    let dir = tempfile::tempdir().unwrap();
    let files = emit_report(std::slice::from_ref(&record), dir.path()).unwrap();
    assert_eq!(
        header(&files.partitions),
        "scenario,seed,step,generation,event,region_a,region_b,group_a,group_b,groups"
    );
    assert_eq!(
        header(&files.trajectories),
        "scenario,seed,step,temperature,carbon_stock,net_output,gross_output,emissions,consumption"
    );
    let mut rdr = csv::Reader::from_path(&files.partitions).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(&rows[0][4], "initial");
    let first_swap = rows.iter().find(|r| &r[4] == "swap").unwrap();
    assert_eq!(first_swap[2].parse::<usize>().unwrap(), k + 1);
    assert_eq!(
        first_swap[5].parse::<usize>().unwrap(),
        step.swaps[0].region_a
    );
    assert_eq!(
        first_swap[3].parse::<u64>().unwrap(),
        1 + record.steps[..k]
            .iter()
            .map(|s| s.swaps.len() as u64)
            .sum::<u64>()
    );

    let back = read_transcript(&files.transcripts[0]).unwrap();
    assert_eq!(back, record);
    assert_eq!(replay(&back).unwrap().metrics, record.metrics);
}
