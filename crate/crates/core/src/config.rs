//! Scenario configuration files (TOML).
//!
//! ```toml
//! scenario = "dynamic"
//! horizon = 20
//! dt = 5.0
//! seed = 0
//! calibration = "synthetic"        # "synthetic", "synthetic:<seed>" or a CSV path
//! policy_map = "paper-table"       # preset name or a policy TOML path
//! groups = "seed-table"            # "seed-table", "principled" or a partition file path
//! similarity_threshold = 0.1
//! inconsistency_threshold = 18
//!
//! [anchors]
//! temp_zero = 0.0
//! temp_one = 8.0
//! output_scale = 10000.0
//! ```
//!
//! Every key is optional; unknown keys are rejected. Relative paths resolve
//! against the config file's directory.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::agents::PolicyMap;
use crate::calibration;
use crate::engine::{ClimateParams, RegionParams};
use crate::error::{Error, Result};
use crate::grouping::{
    form_initial_groups, FormationMode, Partition, SimilarityConfig,
    DEFAULT_INCONSISTENCY_THRESHOLD,
};
use crate::metrics::{IndexAnchors, OutputMeasure};
use crate::negotiation::{NegotiationMode, Variant};

/// The five compared methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    None,
    Bilateral,
    StaticMitigation,
    StaticMitigationSaving,
    Dynamic,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::None,
        Scenario::Bilateral,
        Scenario::StaticMitigation,
        Scenario::StaticMitigationSaving,
        Scenario::Dynamic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::None => "none",
            Scenario::Bilateral => "bilateral",
            Scenario::StaticMitigation => "static-mitigation",
            Scenario::StaticMitigationSaving => "static-mitigation-saving",
            Scenario::Dynamic => "dynamic",
        }
    }

    pub fn mode(self) -> NegotiationMode {
        match self {
            Scenario::None => NegotiationMode::None,
            Scenario::Bilateral => NegotiationMode::Bilateral,
            Scenario::StaticMitigation | Scenario::StaticMitigationSaving => {
                NegotiationMode::StaticGroup
            }
            Scenario::Dynamic => NegotiationMode::DynamicGroup,
        }
    }

    pub fn variant(self) -> Variant {
        match self {
            Scenario::StaticMitigationSaving | Scenario::Dynamic => Variant::MitigationSavings,
            _ => Variant::MitigationOnly,
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Scenario::ALL.iter().map(|s| s.name()).collect();
                Error::Config(format!(
                    "unknown scenario {s:?}; known: {}",
                    names.join(", ")
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_scenario")]
    pub scenario: Scenario,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_calibration")]
    pub calibration: String,
    #[serde(default = "default_policy_map")]
    pub policy_map: String,
    #[serde(default = "default_groups")]
    pub groups: String,
    #[serde(default = "default_similarity_threshold")]
    pub similarity_threshold: f64,
    #[serde(default = "default_pop_scale")]
    pub similarity_pop_scale: f64,
    #[serde(default = "default_cap_scale")]
    pub similarity_cap_scale: f64,
    #[serde(default = "default_inconsistency_threshold")]
    pub inconsistency_threshold: u32,
    #[serde(default)]
    pub output_measure: OutputMeasure,
    #[serde(default)]
    pub anchors: IndexAnchors,
    #[serde(default)]
    pub seed: u64,
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

fn default_scenario() -> Scenario {
    Scenario::Dynamic
}
fn default_horizon() -> usize {
    20
}
fn default_dt() -> f64 {
    5.0
}
fn default_calibration() -> String {
    "synthetic".into()
}
fn default_policy_map() -> String {
    "paper-table".into()
}
fn default_groups() -> String {
    "seed-table".into()
}
fn default_similarity_threshold() -> f64 {
    SimilarityConfig::default().threshold
}
fn default_pop_scale() -> f64 {
    SimilarityConfig::default().pop_scale
}
fn default_cap_scale() -> f64 {
    SimilarityConfig::default().cap_scale
}
fn default_inconsistency_threshold() -> u32 {
    DEFAULT_INCONSISTENCY_THRESHOLD
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        toml::from_str("").expect("empty config uses defaults")
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon < 1 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Config("dt must be positive".into()));
        }
        if self.inconsistency_threshold == 0 {
            return Err(Error::Config(
                "inconsistency_threshold must be positive".into(),
            ));
        }
        self.similarity()
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        self.anchors
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn similarity(&self) -> SimilarityConfig {
        SimilarityConfig {
            pop_scale: self.similarity_pop_scale,
            cap_scale: self.similarity_cap_scale,
            threshold: self.similarity_threshold,
        }
    }

    pub fn climate(&self) -> ClimateParams {
        ClimateParams {
            step_years: self.dt,
            horizon: self.horizon,
            ..ClimateParams::default()
        }
    }

    fn resolve_path(&self, p: &str) -> PathBuf {
        match &self.base_dir {
            Some(dir) => dir.join(p),
            None => PathBuf::from(p),
        }
    }

    pub fn load_calibration(&self) -> Result<Vec<RegionParams>> {
        match self.calibration.as_str() {
            "synthetic" => Ok(calibration::synthetic(self.seed)),
            other => match other.strip_prefix("synthetic:") {
                Some(seed) => {
                    let seed = seed.parse().map_err(|_| {
                        Error::Config(format!("bad synthetic calibration seed {seed:?}"))
                    })?;
                    Ok(calibration::synthetic(seed))
                }
                None => calibration::load(&self.resolve_path(other)),
            },
        }
    }

    pub fn load_policies(&self) -> Result<PolicyMap> {
        PolicyMap::resolve(&self.policy_map, self.seed, self.base_dir.as_deref())
    }

    pub fn initial_partition(&self, regions: &[RegionParams]) -> Result<Partition> {
        match self.groups.as_str() {
            "seed-table" => form_initial_groups(regions, FormationMode::SeedTable),
            "principled" => form_initial_groups(regions, FormationMode::Principled),
            path => {
                let path = self.resolve_path(path);
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                Partition::from_text(&text).map_err(|e| Error::Config(e.to_string()))
            }
        }
    }
}
