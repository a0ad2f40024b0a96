//! Rule-based region policies.
//!
//! Four archetypes stand in for trained agents: `selfish` never commits,
//! `cooperative` proposes and accepts a fixed target, `adaptive-threshold`
//! accepts requests it can afford given its abatement cost, and `random`
//! draws everything from a per-region stream.
//!
//! Random streams are ChaCha8 seeded with `episode_seed ^ config.seed`,
//! with the region id selecting the stream, so each region in each episode
//! owns an independent reproducible substream.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{Action, ClimateState, RegionParams, RegionState, NUM_REGIONS};
use crate::error::{Error, Result};
use crate::negotiation::{Commitment, MAX_LEVEL};

/// Savings level cooperative and adaptive policies request from others.
pub const REQUESTED_SAVINGS_LEVEL: u8 = 5;
/// Adaptive policies reject savings requests above this level.
pub const MAX_ACCEPTED_SAVINGS_LEVEL: u8 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    Selfish,
    Cooperative,
    AdaptiveThreshold,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    #[serde(default)]
    pub target_level: u8,
    #[serde(default = "default_capacity_slope")]
    pub capacity_slope: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_capacity_slope() -> f64 {
    0.5
}

impl PolicyConfig {
    pub fn selfish() -> Self {
        PolicyConfig {
            kind: PolicyKind::Selfish,
            target_level: 0,
            capacity_slope: default_capacity_slope(),
            seed: 0,
        }
    }

    pub fn cooperative(target_level: u8) -> Self {
        PolicyConfig {
            kind: PolicyKind::Cooperative,
            target_level,
            ..Self::selfish()
        }
    }

    pub fn adaptive(capacity_slope: f64) -> Self {
        PolicyConfig {
            kind: PolicyKind::AdaptiveThreshold,
            capacity_slope,
            ..Self::selfish()
        }
    }

    pub fn random(seed: u64) -> Self {
        PolicyConfig {
            kind: PolicyKind::Random,
            seed,
            ..Self::selfish()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.target_level > MAX_LEVEL {
            return Err(Error::Config(format!(
                "target_level {} exceeds {MAX_LEVEL}",
                self.target_level
            )));
        }
        if !(self.capacity_slope.is_finite() && self.capacity_slope >= 0.0) {
            return Err(Error::Config("capacity_slope must be non-negative".into()));
        }
        Ok(())
    }
}

/// What a region sees when it acts. Holds no other region's policy state.
#[derive(Debug, Clone)]
pub struct Observation<'a> {
    pub region: usize,
    pub params: &'a RegionParams,
    pub state: &'a RegionState,
    pub climate: &'a ClimateState,
    pub commitment: Commitment,
    pub group_members: Vec<usize>,
    pub member_last_actions: Vec<Action>,
}

/// Output of the proposal stage for one region.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyProposal {
    /// Preferred share of the group mitigation, 0..10.
    pub share_level: f64,
    /// `(mitigation_level, savings_level)` per target, in target order.
    pub outgoing: Vec<(u8, u8)>,
}

#[derive(Debug, Clone)]
pub struct Policy {
    config: PolicyConfig,
    rng: ChaCha8Rng,
}

impl Policy {
    pub fn new(config: PolicyConfig, episode_seed: u64, region: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(episode_seed ^ config.seed);
        rng.set_stream(region as u64);
        Policy { config, rng }
    }

    pub fn config(&self) -> &PolicyConfig {
        &self.config
    }

    /// Highest mitigation level an adaptive region will accept or offer.
    pub fn max_acceptable_level(&self, params: &RegionParams) -> u8 {
        if params.abatement_coeff <= 0.0 {
            return MAX_LEVEL;
        }
        let level = (self.config.capacity_slope / params.abatement_coeff).round();
        level.min(MAX_LEVEL as f64) as u8
    }

    pub fn propose(&mut self, obs: &Observation<'_>, targets: usize) -> PolicyProposal {
        match self.config.kind {
            PolicyKind::Selfish => PolicyProposal {
                share_level: 0.0,
                outgoing: vec![(0, 0); targets],
            },
            PolicyKind::Cooperative => {
                let t = self.config.target_level;
                PolicyProposal {
                    share_level: t as f64,
                    outgoing: vec![(t, REQUESTED_SAVINGS_LEVEL); targets],
                }
            }
            PolicyKind::AdaptiveThreshold => {
                let level = self.max_acceptable_level(obs.params);
                PolicyProposal {
                    share_level: level as f64,
                    outgoing: vec![(level, REQUESTED_SAVINGS_LEVEL); targets],
                }
            }
            PolicyKind::Random => {
                let share_level = self.rng.gen_range(0..=MAX_LEVEL) as f64;
                let outgoing = (0..targets)
                    .map(|_| {
                        (
                            self.rng.gen_range(0..=MAX_LEVEL),
                            self.rng.gen_range(0..=MAX_LEVEL),
                        )
                    })
                    .collect();
                PolicyProposal {
                    share_level,
                    outgoing,
                }
            }
        }
    }

    /// Accepts or rejects a `(mitigation_level, savings_level)` request as a whole.
    pub fn decide(
        &mut self,
        obs: &Observation<'_>,
        mitigation_level: u8,
        savings_level: u8,
    ) -> bool {
        match self.config.kind {
            PolicyKind::Selfish => false,
            PolicyKind::Cooperative => true,
            PolicyKind::AdaptiveThreshold => {
                mitigation_level <= self.max_acceptable_level(obs.params)
                    && savings_level <= MAX_ACCEPTED_SAVINGS_LEVEL
            }
            PolicyKind::Random => self.rng.gen_bool(0.5),
        }
    }

    /// Rates the region would pick with no commitment.
    pub fn preferred(&mut self, _obs: &Observation<'_>) -> Action {
        match self.config.kind {
            PolicyKind::Selfish => Action::new(0.0, 0.2),
            PolicyKind::Cooperative => Action::new(self.config.target_level as f64 / 10.0, 0.25),
            PolicyKind::AdaptiveThreshold => {
                Action::new(self.config.target_level as f64 / 10.0, 0.2)
            }
            PolicyKind::Random => Action::new(self.rng.gen_range(0..=MAX_LEVEL) as f64 / 10.0, 0.2),
        }
    }

    pub fn act(&mut self, obs: &Observation<'_>) -> Action {
        let preferred = self.preferred(obs);
        clamp_to_commitment(preferred, &obs.commitment)
    }
}

/// Raises an action to meet a commitment's minimum rates.
pub fn clamp_to_commitment(action: Action, commitment: &Commitment) -> Action {
    Action::new(
        action.mitigation.max(commitment.min_mitigation).min(1.0),
        action.savings.max(commitment.min_savings).min(1.0),
    )
}

/// Region id to policy assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyMap(pub Vec<PolicyConfig>);

/// Named policy mixtures.
pub const PRESETS: [&str; 4] = ["paper-table", "cooperative", "selfish", "adaptive"];

impl PolicyMap {
    pub fn uniform(config: PolicyConfig) -> Self {
        PolicyMap(vec![config; NUM_REGIONS])
    }

    /// Expands a preset name. `paper-table` is a cooperative-leaning mixture
    /// (11 cooperative with targets 5..8, 7 adaptive, 6 selfish, 3 random)
    /// shuffled over regions by `seed`.
    pub fn preset(name: &str, seed: u64) -> Result<Self> {
        match name {
            "paper-table" => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(u64::from(u32::MAX));
                let mut configs = Vec::with_capacity(NUM_REGIONS);
                for i in 0..11u8 {
                    configs.push(PolicyConfig::cooperative(5 + i % 4));
                }
                configs.extend(std::iter::repeat_n(PolicyConfig::adaptive(0.5), 7));
                configs.extend(std::iter::repeat_n(PolicyConfig::selfish(), 6));
                for k in 0..3 {
                    configs.push(PolicyConfig::random(k));
                }
                use rand::seq::SliceRandom;
                configs.shuffle(&mut rng);
                Ok(PolicyMap(configs))
            }
            "cooperative" => Ok(Self::uniform(PolicyConfig::cooperative(8))),
            "selfish" => Ok(Self::uniform(PolicyConfig::selfish())),
            "adaptive" => Ok(Self::uniform(PolicyConfig::adaptive(0.5))),
            other => Err(Error::Config(format!(
                "unknown policy preset {other:?}; known: {}",
                PRESETS.join(", ")
            ))),
        }
    }

    /// Parses a TOML policy file:
    ///
    /// ```toml
    /// default = { kind = "cooperative", target_level = 7 }
    ///
    /// [regions]
    /// 3 = { kind = "selfish" }
    /// ```
    ///
    /// Every region without an explicit entry takes `default`, which is
    /// required unless all 27 regions are listed.
    pub fn from_toml(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct File {
            default: Option<PolicyConfig>,
            #[serde(default)]
            regions: BTreeMap<String, PolicyConfig>,
        }
        let file: File = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut slots: Vec<Option<PolicyConfig>> = vec![file.default.clone(); NUM_REGIONS];
        for (key, cfg) in file.regions {
            let id: usize = key
                .parse()
                .map_err(|_| Error::Config(format!("region key {key:?} is not an id")))?;
            if id >= NUM_REGIONS {
                return Err(Error::Config(format!("region id {id} out of range")));
            }
            slots[id] = Some(cfg);
        }
        let configs = slots
            .into_iter()
            .enumerate()
            .map(|(id, c)| c.ok_or_else(|| Error::Config(format!("no policy for region {id}"))))
            .collect::<Result<Vec<_>>>()?;
        let map = PolicyMap(configs);
        map.validate()?;
        Ok(map)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Resolves a preset name or a policy file path.
    pub fn resolve(spec: &str, seed: u64, base_dir: Option<&Path>) -> Result<Self> {
        if PRESETS.contains(&spec) {
            return Self::preset(spec, seed);
        }
        let path = match base_dir {
            Some(dir) => dir.join(spec),
            None => Path::new(spec).to_path_buf(),
        };
        Self::load(&path)
    }

    pub fn validate(&self) -> Result<()> {
        if self.0.len() != NUM_REGIONS {
            return Err(Error::Config(format!(
                "policy map covers {} regions, expected {NUM_REGIONS}",
                self.0.len()
            )));
        }
        self.0.iter().try_for_each(PolicyConfig::validate)
    }

    pub fn instantiate(&self, episode_seed: u64) -> Vec<Policy> {
        self.0
            .iter()
            .enumerate()
            .map(|(region, c)| Policy::new(c.clone(), episode_seed, region))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration;

    fn obs_for<'a>(
        params: &'a RegionParams,
        state: &'a RegionState,
        climate: &'a ClimateState,
        commitment: Commitment,
    ) -> Observation<'a> {
        Observation {
            region: params.id,
            params,
            state,
            climate,
            commitment,
            group_members: vec![],
            member_last_actions: vec![],
        }
    }

    fn fixture() -> (RegionParams, RegionState, ClimateState) {
        let mut p = calibration::synthetic(0)[0].clone();
        p.abatement_coeff = 0.05;
        let s = RegionState::initial(&p);
        (
            p,
            s,
            ClimateState {
                carbon_stock: 0.0,
                temperature: 0.0,
            },
        )
    }

    #[test]
    fn proposal_examples() {
        let (p, s, c) = fixture();
        let obs = obs_for(&p, &s, &c, Commitment::none(0));
        let out = Policy::new(PolicyConfig::selfish(), 0, 0).propose(&obs, 8);
        assert_eq!(out.share_level, 0.0);
        assert_eq!(out.outgoing, vec![(0, 0); 8]);

        let out = Policy::new(PolicyConfig::cooperative(8), 0, 0).propose(&obs, 8);
        assert_eq!(out.share_level, 8.0);
        assert_eq!(out.outgoing, vec![(8, 5); 8]);

        let mut adaptive = Policy::new(PolicyConfig::adaptive(0.3), 0, 0);
        assert_eq!(adaptive.max_acceptable_level(&p), 6);
        let out = adaptive.propose(&obs, 8);
        assert_eq!(out.share_level, 6.0);
        assert!(out.outgoing.iter().all(|&(m, _)| m == 6));
    }

    #[test]
    fn decision_examples() {
        let (p, s, c) = fixture();
        let obs = obs_for(&p, &s, &c, Commitment::none(0));
        let mut selfish = Policy::new(PolicyConfig::selfish(), 0, 0);
        assert!(!selfish.decide(&obs, 0, 0));
        let mut adaptive = Policy::new(PolicyConfig::adaptive(0.3), 0, 0);
        assert!(adaptive.decide(&obs, 5, 4));
        assert!(!adaptive.decide(&obs, 7, 0));
        assert!(!adaptive.decide(&obs, 5, 9));
    }

    #[test]
    fn act_examples() {
        let (p, s, c) = fixture();
        let commit = |m, sv| Commitment {
            region: 0,
            min_mitigation: m,
            min_savings: sv,
        };
        let obs = obs_for(&p, &s, &c, commit(0.7, 0.5));
        assert_eq!(
            Policy::new(PolicyConfig::selfish(), 0, 0).act(&obs),
            Action::new(0.7, 0.5)
        );
        let obs = obs_for(&p, &s, &c, commit(0.3, 0.0));
        assert_eq!(
            Policy::new(PolicyConfig::cooperative(8), 0, 0).act(&obs),
            Action::new(0.8, 0.25)
        );
        let obs = obs_for(&p, &s, &c, Commitment::none(0));
        assert_eq!(
            Policy::new(PolicyConfig::selfish(), 0, 0).act(&obs),
            Action::new(0.0, 0.2)
        );
    }

    #[test]
    fn random_policy_is_reproducible_per_region() {
        let (p, s, c) = fixture();
        let obs = obs_for(&p, &s, &c, Commitment::none(0));
        let run = |seed, region| {
            let mut pol = Policy::new(PolicyConfig::random(1), seed, region);
            (0..20)
                .map(|_| {
                    let prop = pol.propose(&obs, 8);
                    let d = pol.decide(&obs, 5, 5);
                    let a = pol.act(&obs);
                    (prop, d, a.mitigation)
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(run(3, 4), run(3, 4));
        assert_ne!(run(3, 4), run(3, 5));
        assert_ne!(run(3, 4), run(4, 4));
    }

    #[test]
    fn presets_and_files() {
        let map = PolicyMap::preset("paper-table", 2).unwrap();
        map.validate().unwrap();
        let count = |k| map.0.iter().filter(|c| c.kind == k).count();
        assert_eq!(count(PolicyKind::Cooperative), 11);
        assert_eq!(count(PolicyKind::Selfish), 6);
        assert_ne!(map, PolicyMap::preset("paper-table", 3).unwrap());
        assert!(PolicyMap::preset("nope", 0).is_err());

        let text = r#"
default = { kind = "cooperative", target_level = 7 }
[regions]
3 = { kind = "selfish" }
"#;
        let map = PolicyMap::from_toml(text).unwrap();
        assert_eq!(map.0[3].kind, PolicyKind::Selfish);
        assert_eq!(map.0[4], PolicyConfig::cooperative(7));

        assert!(PolicyMap::from_toml("[regions]\n3 = { kind = \"selfish\" }\n").is_err());
        assert!(PolicyMap::from_toml("default = { kind = \"selfish\", bogus = 1 }\n").is_err());
        assert!(
            PolicyMap::from_toml("default = { kind = \"cooperative\", target_level = 11 }\n")
                .is_err()
        );
    }
}
