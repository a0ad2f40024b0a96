//! Episode evaluation: temperature rise, output, the two normalized indices
//! and their hypervolume.

use serde::{Deserialize, Serialize};

use crate::engine::ClimateState;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub temp_rise: f64,
    pub gross_output: f64,
    pub climate_index: f64,
    pub econ_index: f64,
    pub hv_contribution: f64,
}

impl EpisodeMetrics {
    pub fn from_outcome(temp_rise: f64, gross_output: f64, anchors: &IndexAnchors) -> Self {
        let climate = climate_index(temp_rise, anchors);
        let econ = econ_index(gross_output, anchors);
        EpisodeMetrics {
            temp_rise,
            gross_output,
            climate_index: climate,
            econ_index: econ,
            hv_contribution: hypervolume_contribution(climate, econ),
        }
    }
}

/// Linear normalization anchors for the two indices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IndexAnchors {
    /// Warming mapped to a climate index of 1.
    pub temp_zero: f64,
    /// Warming mapped to a climate index of 0.
    pub temp_one: f64,
    /// Output mapped to an economic index of 1.
    pub output_scale: f64,
}

impl Default for IndexAnchors {
    fn default() -> Self {
        IndexAnchors {
            temp_zero: 0.0,
            temp_one: 8.0,
            output_scale: 10_000.0,
        }
    }
}

impl IndexAnchors {
    pub fn validate(&self) -> Result<()> {
        if self.temp_one.partial_cmp(&self.temp_zero) != Some(std::cmp::Ordering::Greater) {
            return invalid("temp_one must exceed temp_zero");
        }
        if self.output_scale.is_nan() || self.output_scale <= 0.0 {
            return invalid("output_scale must be positive");
        }
        Ok(())
    }
}

/// Which output series the economic index sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputMeasure {
    /// Output after damages and abatement.
    #[default]
    Net,
    /// Production before damages and abatement.
    Gross,
}

/// Final warming of a trajectory.
pub fn temperature_rise(trajectory: &[ClimateState]) -> Result<f64> {
    match trajectory.last() {
        Some(state) => Ok(state.temperature),
        None => invalid("empty climate trajectory"),
    }
}

/// Sum over steps and regions.
pub fn gross_output_total(per_step_outputs: &[Vec<f64>]) -> f64 {
    per_step_outputs.iter().flatten().sum()
}

pub fn climate_index(temp_rise: f64, anchors: &IndexAnchors) -> f64 {
    let span = anchors.temp_one - anchors.temp_zero;
    (1.0 - (temp_rise - anchors.temp_zero) / span).clamp(0.0, 1.0)
}

pub fn econ_index(gross_output: f64, anchors: &IndexAnchors) -> f64 {
    (gross_output / anchors.output_scale).clamp(0.0, 1.0)
}

/// Area dominated by one point against the origin.
pub fn hypervolume_contribution(climate_index: f64, econ_index: f64) -> f64 {
    climate_index * econ_index
}

/// Area of the union of `[0, c] × [0, e]` over all points.
pub fn hypervolume_set(points: &[(f64, f64)]) -> f64 {
    let mut sorted: Vec<(f64, f64)> = points.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.total_cmp(&a.1)));
    let mut covered = 0.0;
    let mut area = 0.0;
    for (c, e) in sorted {
        if e > covered {
            area += c * (e - covered);
            covered = e;
        }
    }
    area
}
