//! Episode orchestration, replay and multi-scenario comparison.
//!
//! Each step runs four stages in a fixed order: proposal, evaluation,
//! action and group updating. Stages a scenario does not use are still
//! logged, marked disabled.

use serde::{Deserialize, Serialize};

use crate::agents::{clamp_to_commitment, Policy, PolicyMap};
use crate::config::{Scenario, ScenarioConfig};
use crate::engine::{
    step_world, Action, ClimateParams, ClimateState, RegionParams, World, NUM_REGIONS,
};
use crate::error::{Error, Result};
use crate::grouping::{
    record_inconsistencies, update_groups, InconsistencyLedger, Indicators, Partition,
    SimilarityConfig, SwapEvent,
};
use crate::metrics::{
    gross_output_total, hypervolume_contribution, hypervolume_set, temperature_rise,
    EpisodeMetrics, IndexAnchors, OutputMeasure,
};
use crate::negotiation::{
    run_negotiation_round, Commitment, NegotiationMode, RoundContext, RoundTranscript,
};

const MEAN_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Proposal,
    Evaluation,
    Action,
    Updating,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageLog {
    pub stage: Stage,
    pub enabled: bool,
}

fn stage_plan(scenario: Scenario) -> Vec<StageLog> {
    let negotiates = scenario.mode() != NegotiationMode::None;
    vec![
        StageLog {
            stage: Stage::Proposal,
            enabled: negotiates,
        },
        StageLog {
            stage: Stage::Evaluation,
            enabled: negotiates,
        },
        StageLog {
            stage: Stage::Action,
            enabled: true,
        },
        StageLog {
            stage: Stage::Updating,
            enabled: scenario == Scenario::Dynamic,
        },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub stages: Vec<StageLog>,
    pub round: RoundTranscript,
    /// Rates each policy wanted before commitments were applied.
    pub preferred: Vec<Action>,
    pub actions: Vec<Action>,
    /// World after the action stage.
    pub world: World,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ledger: Option<InconsistencyLedger>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub swaps: Vec<SwapEvent>,
    pub generation: u64,
}

/// Everything needed to audit or replay one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: ScenarioConfig,
    pub calibration: Vec<RegionParams>,
    pub climate: ClimateParams,
    pub initial_world: World,
    pub initial_partition: Option<Partition>,
    pub steps: Vec<StepRecord>,
    pub metrics: EpisodeMetrics,
}

/// One row of the partition history.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PartitionEvent {
    Initial {
        partition: Partition,
    },
    Swap {
        step: usize,
        generation: u64,
        swap: SwapEvent,
    },
}

impl RunRecord {
    pub fn scenario(&self) -> Scenario {
        self.config.scenario
    }

    pub fn seed(&self) -> u64 {
        self.config.seed
    }

    pub fn climate_trajectory(&self) -> Vec<ClimateState> {
        std::iter::once(self.initial_world.climate)
            .chain(self.steps.iter().map(|s| s.world.climate))
            .collect()
    }

    pub fn partition_history(&self) -> Vec<PartitionEvent> {
        let Some(initial) = &self.initial_partition else {
            return Vec::new();
        };
        let mut out = vec![PartitionEvent::Initial {
            partition: initial.clone(),
        }];
        for step in &self.steps {
            let first_generation = step.generation - step.swaps.len() as u64;
            for (k, swap) in step.swaps.iter().enumerate() {
                out.push(PartitionEvent::Swap {
                    step: step.step,
                    generation: first_generation + k as u64 + 1,
                    swap: *swap,
                });
            }
        }
        out
    }
}

/// Fully resolved inputs of an episode.
#[derive(Debug, Clone)]
pub struct EpisodeInputs {
    pub config: ScenarioConfig,
    pub regions: Vec<RegionParams>,
    pub climate: ClimateParams,
    pub policies: PolicyMap,
    pub partition: Option<Partition>,
}

impl EpisodeInputs {
    pub fn from_config(config: &ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let regions = config.load_calibration()?;
        let policies = config.load_policies()?;
        policies.validate()?;
        let partition = if config.scenario.mode().uses_groups() {
            Some(config.initial_partition(&regions)?)
        } else {
            None
        };
        Ok(EpisodeInputs {
            config: config.clone(),
            regions,
            climate: config.climate(),
            policies,
            partition,
        })
    }

    pub fn with_policies(mut self, policies: PolicyMap) -> Self {
        self.policies = policies;
        self
    }
}

pub fn run_episode(config: &ScenarioConfig) -> Result<RunRecord> {
    simulate(EpisodeInputs::from_config(config)?)
}

fn check_state(world: &World, step: usize) -> Result<()> {
    for (i, r) in world.regions.iter().enumerate() {
        if r.capital < 0.0 || r.last_emissions < 0.0 || !r.capital.is_finite() {
            return Err(Error::Invariant(format!(
                "step {step}: region {i} has capital {} and emissions {}",
                r.capital, r.last_emissions
            )));
        }
    }
    if world.climate.carbon_stock < 0.0 || !world.climate.temperature.is_finite() {
        return Err(Error::Invariant(format!(
            "step {step}: climate state {:?} out of range",
            world.climate
        )));
    }
    Ok(())
}

fn check_round(round: &RoundTranscript, partition: Option<&Partition>, step: usize) -> Result<()> {
    if let Some(partition) = partition.filter(|_| round.mode.uses_groups()) {
        for (group, members) in partition.groups().iter().enumerate() {
            let mean = members
                .iter()
                .map(|&r| round.commitments[r].min_mitigation)
                .sum::<f64>()
                / members.len() as f64;
            let level = round.group_levels[group].0 as f64 / 10.0;
            if (mean - level).abs() > MEAN_TOLERANCE {
                return Err(Error::Invariant(format!(
                    "step {step}: group {group} mean mitigation {mean} != committed {level}"
                )));
            }
        }
    }
    Ok(())
}

fn indicators(world: &World) -> Vec<Indicators> {
    world
        .regions
        .iter()
        .map(|r| Indicators {
            population: r.population,
            capital: r.capital,
        })
        .collect()
}

/// Group updating stage; returns the new partition, ledger and swaps.
fn updating_stage(
    partition: &Partition,
    ledger: &InconsistencyLedger,
    round: &RoundTranscript,
    world: &World,
    similarity: &SimilarityConfig,
) -> Result<(Partition, InconsistencyLedger, Vec<SwapEvent>)> {
    let ledger = record_inconsistencies(ledger, partition, &round.outcomes, &round.decisions)?;
    update_groups(partition, &ledger, &indicators(world), similarity)
}

pub fn compute_metrics(
    initial_world: &World,
    steps: &[StepRecord],
    measure: OutputMeasure,
    anchors: &IndexAnchors,
) -> Result<EpisodeMetrics> {
    let trajectory: Vec<ClimateState> = std::iter::once(initial_world.climate)
        .chain(steps.iter().map(|s| s.world.climate))
        .collect();
    let outputs: Vec<Vec<f64>> = steps
        .iter()
        .map(|s| {
            s.world
                .regions
                .iter()
                .map(|r| match measure {
                    OutputMeasure::Net => r.last_net_output,
                    OutputMeasure::Gross => r.last_gross_output,
                })
                .collect()
        })
        .collect();
    Ok(EpisodeMetrics::from_outcome(
        temperature_rise(&trajectory)?,
        gross_output_total(&outputs),
        anchors,
    ))
}

/// Runs one episode from resolved inputs.
pub fn simulate(inputs: EpisodeInputs) -> Result<RunRecord> {
    let EpisodeInputs {
        config,
        regions,
        climate,
        policies,
        partition,
    } = inputs;
    climate.validate()?;
    crate::calibration::validate(&regions)?;
    let scenario = config.scenario;
    let mode = scenario.mode();
    let similarity = config.similarity();
    let mut policies: Vec<Policy> = policies.instantiate(config.seed);

    let initial_world = World::initial(&regions, &climate);
    let initial_partition = partition.filter(|_| mode.uses_groups());
    let mut partition = initial_partition.clone();
    let mut ledger = InconsistencyLedger::new(config.inconsistency_threshold);
    let mut world = initial_world.clone();
    let mut last_actions = vec![Action::new(0.0, 0.0); NUM_REGIONS];
    let mut commitments: Vec<Commitment> = (0..NUM_REGIONS).map(Commitment::none).collect();
    let mut steps = Vec::with_capacity(climate.horizon);

    for step in 0..climate.horizon {
        let stages = stage_plan(scenario);

        // proposal + evaluation
        let round = {
            let ctx = RoundContext {
                world: &world,
                regions: &regions,
                partition: partition.as_ref(),
                last_actions: &last_actions,
                commitments: &commitments,
            };
            run_negotiation_round(mode, scenario.variant(), &mut policies, &ctx)?
        };
        check_round(&round, partition.as_ref(), step)?;
        commitments = round.commitments.clone();

        // action
        let ctx = RoundContext {
            world: &world,
            regions: &regions,
            partition: partition.as_ref(),
            last_actions: &last_actions,
            commitments: &commitments,
        };
        let mut preferred = Vec::with_capacity(NUM_REGIONS);
        let mut actions = Vec::with_capacity(NUM_REGIONS);
        for (region, policy) in policies.iter_mut().enumerate() {
            let obs = ctx.observe(region);
            let wanted = policy.preferred(&obs);
            let action = clamp_to_commitment(wanted, &commitments[region]);
            if !commitments[region].is_satisfied_by(&action) {
                return Err(Error::Invariant(format!(
                    "step {step}: region {region} action {action:?} violates {:?}",
                    commitments[region]
                )));
            }
            preferred.push(wanted);
            actions.push(action);
        }
        let next = step_world(&world, &actions, &regions, &climate)?;
        check_state(&next, step)?;

        // updating
        let mut swaps = Vec::new();
        let mut ledger_snapshot = None;
        if scenario == Scenario::Dynamic {
            let current = partition
                .as_ref()
                .ok_or_else(|| Error::Invariant("dynamic scenario lost its partition".into()))?;
            let (p, l, s) = updating_stage(current, &ledger, &round, &next, &similarity)?;
            partition = Some(p);
            ledger = l;
            swaps = s;
            ledger_snapshot = Some(ledger.clone());
        }
        let generation = partition.as_ref().map_or(0, Partition::generation);
        if scenario != Scenario::Dynamic && generation != 0 {
            return Err(Error::Invariant(format!(
                "step {step}: static partition changed"
            )));
        }

        world = next;
        last_actions = actions.clone();
        steps.push(StepRecord {
            step,
            stages,
            round,
            preferred,
            actions,
            world: world.clone(),
            ledger: ledger_snapshot,
            swaps,
            generation,
        });
    }

    let metrics = compute_metrics(
        &initial_world,
        &steps,
        config.output_measure,
        &config.anchors,
    )?;
    Ok(RunRecord {
        config,
        calibration: regions,
        climate,
        initial_world,
        initial_partition,
        steps,
        metrics,
    })
}

/// Summary of a successful replay.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayReport {
    pub scenario: Scenario,
    pub seed: u64,
    pub steps: usize,
    pub swaps: usize,
    pub metrics: EpisodeMetrics,
}

fn mismatch(step: usize, what: &str) -> Error {
    Error::Transcript(format!(
        "step {step}: replayed {what} differs from the recorded one"
    ))
}

/// Re-derives every commitment, action, world state, group update and the
/// final metrics from the recorded statements and decisions alone.
pub fn replay(record: &RunRecord) -> Result<ReplayReport> {
    let config = &record.config;
    let scenario = config.scenario;
    crate::calibration::validate(&record.calibration)?;
    record.climate.validate()?;
    let mut world = World::initial(&record.calibration, &record.climate);
    if world != record.initial_world {
        return Err(Error::Transcript(
            "initial world differs from calibration".into(),
        ));
    }
    let mut partition = record.initial_partition.clone();
    if scenario.mode().uses_groups() && partition.is_none() {
        return Err(Error::Transcript(
            "group scenario without initial partition".into(),
        ));
    }
    let mut ledger = InconsistencyLedger::new(config.inconsistency_threshold);
    let mut swaps_total = 0;
    for (k, step) in record.steps.iter().enumerate() {
        if step.step != k || step.round.mode != scenario.mode() {
            return Err(mismatch(k, "step header"));
        }
        let commitments = step.round.recompute_commitments(partition.as_ref())?;
        if commitments != step.round.commitments {
            return Err(mismatch(k, "commitments"));
        }
        check_round(&step.round, partition.as_ref(), k)?;
        if step.preferred.len() != NUM_REGIONS {
            return Err(mismatch(k, "preferred action vector"));
        }
        let actions: Vec<Action> = step
            .preferred
            .iter()
            .zip(&commitments)
            .map(|(a, c)| clamp_to_commitment(*a, c))
            .collect();
        if actions != step.actions {
            return Err(mismatch(k, "actions"));
        }
        world = step_world(&world, &actions, &record.calibration, &record.climate)?;
        if world != step.world {
            return Err(mismatch(k, "world state"));
        }
        if scenario == Scenario::Dynamic {
            let current = partition.as_ref().expect("checked above");
            let (p, l, s) =
                updating_stage(current, &ledger, &step.round, &world, &config.similarity())?;
            if s != step.swaps || Some(&l) != step.ledger.as_ref() {
                return Err(mismatch(k, "group update"));
            }
            swaps_total += s.len();
            partition = Some(p);
            ledger = l;
        }
        if partition.as_ref().map_or(0, Partition::generation) != step.generation {
            return Err(mismatch(k, "partition generation"));
        }
    }
    let metrics = compute_metrics(
        &record.initial_world,
        &record.steps,
        config.output_measure,
        &config.anchors,
    )?;
    if metrics != record.metrics {
        return Err(Error::Transcript("replayed metrics differ".into()));
    }
    Ok(ReplayReport {
        scenario,
        seed: config.seed,
        steps: record.steps.len(),
        swaps: swaps_total,
        metrics,
    })
}

/// Per-scenario averages over seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub scenario: Scenario,
    pub runs: usize,
    pub temp_rise: f64,
    pub gross_output: f64,
    pub climate_index: f64,
    pub econ_index: f64,
    pub hv_contribution: f64,
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    /// Hypervolume of the set of averaged scenario points.
    pub hypervolume: f64,
    /// Runs in (scenario, seed) order.
    pub records: Vec<RunRecord>,
}

fn run_cells(base: &ScenarioConfig, cells: &[(Scenario, u64)]) -> Result<Vec<RunRecord>> {
    let run = |&(scenario, seed): &(Scenario, u64)| {
        let config = ScenarioConfig {
            scenario,
            seed,
            ..base.clone()
        };
        run_episode(&config)
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        cells.par_iter().map(run).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        cells.iter().map(run).collect()
    }
}

/// Runs every (scenario, seed) cell and averages metrics per scenario.
///
/// Averaged rows report the product of the averaged indices as their
/// hypervolume contribution.
pub fn run_comparison(
    base: &ScenarioConfig,
    scenarios: &[Scenario],
    seeds: &[u64],
) -> Result<Comparison> {
    if scenarios.is_empty() || seeds.is_empty() {
        return Err(Error::Config(
            "need at least one scenario and one seed".into(),
        ));
    }
    let cells: Vec<(Scenario, u64)> = scenarios
        .iter()
        .flat_map(|&s| seeds.iter().map(move |&seed| (s, seed)))
        .collect();
    let records = run_cells(base, &cells)?;
    let n = seeds.len() as f64;
    let rows: Vec<ComparisonRow> = records
        .chunks(seeds.len())
        .zip(scenarios)
        .map(|(runs, &scenario)| {
            let mean =
                |f: fn(&EpisodeMetrics) -> f64| runs.iter().map(|r| f(&r.metrics)).sum::<f64>() / n;
            let climate_index = mean(|m| m.climate_index);
            let econ_index = mean(|m| m.econ_index);
            ComparisonRow {
                scenario,
                runs: runs.len(),
                temp_rise: mean(|m| m.temp_rise),
                gross_output: mean(|m| m.gross_output),
                climate_index,
                econ_index,
                hv_contribution: hypervolume_contribution(climate_index, econ_index),
            }
        })
        .collect();
    let points: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r.climate_index, r.econ_index))
        .collect();
    Ok(Comparison {
        hypervolume: hypervolume_set(&points),
        rows,
        records,
    })
}
