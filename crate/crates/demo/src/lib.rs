//! Browser bindings: run a scenario, split a group commitment, and measure
//! hypervolume. Each export wraps a plain function that is tested natively.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use dyngroup::config::{Scenario, ScenarioConfig};
use dyngroup::harness::run_episode;
use dyngroup::metrics::{climate_index, econ_index, hypervolume_set, EpisodeMetrics, IndexAnchors};
use dyngroup::negotiation::intra_group_share_split;

#[derive(Debug, Serialize)]
pub struct StepView {
    pub temperature: f64,
    pub carbon_stock: f64,
    pub net_output: f64,
    pub emissions: f64,
    pub mean_mitigation: f64,
    pub swaps: usize,
}

#[derive(Debug, Serialize)]
pub struct EpisodeView {
    pub scenario: &'static str,
    pub seed: u64,
    pub steps: Vec<StepView>,
    pub groups: Vec<[usize; 3]>,
    pub metrics: EpisodeMetrics,
}

pub fn episode(scenario: &str, seed: u64, horizon: usize) -> Result<EpisodeView, String> {
    let scenario: Scenario = scenario
        .parse()
        .map_err(|e: dyngroup::Error| e.to_string())?;
    let config = ScenarioConfig {
        scenario,
        seed,
        horizon,
        ..ScenarioConfig::default()
    };
    let record = run_episode(&config).map_err(|e| e.to_string())?;
    let initial = &record.initial_world;
    let mut steps = vec![StepView {
        temperature: initial.climate.temperature,
        carbon_stock: initial.climate.carbon_stock,
        net_output: 0.0,
        emissions: 0.0,
        mean_mitigation: 0.0,
        swaps: 0,
    }];
    steps.extend(record.steps.iter().map(|s| StepView {
        temperature: s.world.climate.temperature,
        carbon_stock: s.world.climate.carbon_stock,
        net_output: s.world.total_net_output(),
        emissions: s.world.total_emissions(),
        mean_mitigation: s.actions.iter().map(|a| a.mitigation).sum::<f64>()
            / s.actions.len() as f64,
        swaps: s.swaps.len(),
    }));
    // final partition: replay the swaps onto the initial one
    let mut groups: Vec<[usize; 3]> = record
        .initial_partition
        .as_ref()
        .map(|p| p.groups().to_vec())
        .unwrap_or_default();
    for swap in record.steps.iter().flat_map(|s| &s.swaps) {
        for m in groups.iter_mut().flatten() {
            if *m == swap.region_a {
                *m = swap.region_b;
            } else if *m == swap.region_b {
                *m = swap.region_a;
            }
        }
    }
    Ok(EpisodeView {
        scenario: scenario.name(),
        seed,
        steps,
        groups,
        metrics: record.metrics,
    })
}

/// Parses `[[c, e], ...]` and returns the dominated area.
pub fn hypervolume_of(points_json: &str) -> Result<f64, String> {
    let points: Vec<(f64, f64)> = serde_json::from_str(points_json).map_err(|e| e.to_string())?;
    if let Some(bad) = points
        .iter()
        .find(|(c, e)| !(0.0..=1.0).contains(c) || !(0.0..=1.0).contains(e))
    {
        return Err(format!("point {bad:?} outside the unit square"));
    }
    Ok(hypervolume_set(&points))
}

/// Runs one episode; returns JSON with per-step aggregates and final metrics.
#[wasm_bindgen(js_name = runScenario)]
pub fn run_scenario(scenario: &str, seed: u32, horizon: u32) -> Result<String, JsError> {
    let view =
        episode(scenario, u64::from(seed), horizon as usize).map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&view).map_err(|e| JsError::new(&e.to_string()))
}

/// Splits a group's average mitigation level among three members.
#[wasm_bindgen(js_name = shareSplit)]
pub fn share_split(p0: f64, p1: f64, p2: f64, commitment: f64) -> Result<Vec<f64>, JsError> {
    intra_group_share_split([p0, p1, p2], commitment)
        .map(|s| s.to_vec())
        .map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn hypervolume(points_json: &str) -> Result<f64, JsError> {
    hypervolume_of(points_json).map_err(|e| JsError::new(&e))
}

/// Climate and economic index of a (warming, output) outcome.
#[wasm_bindgen]
pub fn indices(temp_rise: f64, output: f64) -> Vec<f64> {
    let a = IndexAnchors::default();
    vec![climate_index(temp_rise, &a), econ_index(output, &a)]
}
