//! Group formation, inconsistency tracking and similarity-gated member swaps.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::engine::{RegionParams, NUM_REGIONS};
use crate::error::{invalid, Error, Result};
use crate::negotiation::{Decision, GroupOutcome};

pub const NUM_GROUPS: usize = 9;
pub const GROUP_SIZE: usize = 3;
pub const DEFAULT_INCONSISTENCY_THRESHOLD: u32 = 18;

/// Initial regional groups used by the reference experiments.
pub const SEED_GROUPS: [[usize; GROUP_SIZE]; NUM_GROUPS] = [
    [26, 1, 2],
    [3, 4, 6],
    [5, 7, 18],
    [19, 10, 12],
    [20, 13, 15],
    [14, 16, 22],
    [8, 9, 21],
    [11, 17, 23],
    [24, 25, 0],
];

/// Nine disjoint triples covering regions 0..26.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    groups: Vec<[usize; GROUP_SIZE]>,
    generation: u64,
}

impl Partition {
    pub fn new(groups: Vec<[usize; GROUP_SIZE]>) -> Result<Self> {
        let p = Partition {
            groups,
            generation: 0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn seed_table() -> Self {
        Partition {
            groups: SEED_GROUPS.to_vec(),
            generation: 0,
        }
    }

    pub fn groups(&self) -> &[[usize; GROUP_SIZE]] {
        &self.groups
    }

    pub fn members(&self, group: usize) -> [usize; GROUP_SIZE] {
        self.groups[group]
    }

    /// Number of swaps applied since formation.
    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn group_of(&self, region: usize) -> Option<usize> {
        self.groups.iter().position(|g| g.contains(&region))
    }

    /// Region to group lookup table.
    pub fn assignment(&self) -> Vec<usize> {
        let mut out = vec![usize::MAX; NUM_REGIONS];
        for (g, members) in self.groups.iter().enumerate() {
            for &r in members {
                out[r] = g;
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.groups.len() != NUM_GROUPS {
            return Err(Error::Invariant(format!(
                "partition has {} groups, expected {NUM_GROUPS}",
                self.groups.len()
            )));
        }
        let mut seen = [false; NUM_REGIONS];
        for members in &self.groups {
            for &r in members {
                if r >= NUM_REGIONS {
                    return Err(Error::Invariant(format!("region {r} out of range")));
                }
                if seen[r] {
                    return Err(Error::Invariant(format!("region {r} appears twice")));
                }
                seen[r] = true;
            }
        }
        Ok(())
    }

    fn swap(&mut self, a: usize, b: usize) {
        for members in &mut self.groups {
            for r in members.iter_mut() {
                if *r == a {
                    *r = b;
                } else if *r == b {
                    *r = a;
                }
            }
        }
        self.generation += 1;
    }

    /// One line per group, members separated by spaces.
    pub fn to_text(&self) -> String {
        self.to_string()
    }

    /// Parses the [`Partition::to_text`] format. Blank lines and `#` comments are skipped.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut groups = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let ids: Vec<usize> = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<usize>().map_err(|e| {
                        Error::InvalidInput(format!("line {}: {tok:?}: {e}", lineno + 1))
                    })
                })
                .collect::<Result<_>>()?;
            let triple: [usize; GROUP_SIZE] = ids.try_into().map_err(|v: Vec<usize>| {
                Error::InvalidInput(format!(
                    "line {}: expected {GROUP_SIZE} ids, found {}",
                    lineno + 1,
                    v.len()
                ))
            })?;
            groups.push(triple);
        }
        Partition::new(groups).map_err(|e| Error::InvalidInput(e.to_string()))
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for [a, b, c] in &self.groups {
            writeln!(f, "{a} {b} {c}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormationMode {
    SeedTable,
    Principled,
}

/// Builds the initial partition.
///
/// Principled mode deals the nine best-capitalised regions one per group,
/// then the nine most populous of the rest (largest first, each to the
/// group with the least capital so far), then fills the last slot greedily
/// so that group population totals stay as even as possible.
pub fn form_initial_groups(params: &[RegionParams], mode: FormationMode) -> Result<Partition> {
    if params.len() != NUM_REGIONS {
        return invalid(format!(
            "expected {NUM_REGIONS} regions, got {}",
            params.len()
        ));
    }
    let mut seen = [false; NUM_REGIONS];
    for p in params {
        if p.id >= NUM_REGIONS || seen[p.id] {
            return invalid(format!("duplicate or out-of-range region id {}", p.id));
        }
        seen[p.id] = true;
    }
    match mode {
        FormationMode::SeedTable => Ok(Partition::seed_table()),
        FormationMode::Principled => Ok(principled(params)),
    }
}

fn open_group_minimizing(groups: &[Vec<usize>], size: usize, key: &[f64]) -> usize {
    (0..groups.len())
        .filter(|&g| groups[g].len() == size)
        .min_by(|&a, &b| key[a].total_cmp(&key[b]).then(a.cmp(&b)))
        .expect("an open group exists while regions remain")
}

fn principled(params: &[RegionParams]) -> Partition {
    let mut by_capital: Vec<&RegionParams> = params.iter().collect();
    by_capital.sort_by(|a, b| b.capital0.total_cmp(&a.capital0).then(a.id.cmp(&b.id)));

    let mut groups: Vec<Vec<usize>> = by_capital[..NUM_GROUPS]
        .iter()
        .map(|p| vec![p.id])
        .collect();
    let mut capital: Vec<f64> = by_capital[..NUM_GROUPS]
        .iter()
        .map(|p| p.capital0)
        .collect();
    let mut population: Vec<f64> = by_capital[..NUM_GROUPS]
        .iter()
        .map(|p| p.population0)
        .collect();

    let mut rest: Vec<&RegionParams> = by_capital[NUM_GROUPS..].to_vec();
    rest.sort_by(|a, b| {
        b.population0
            .total_cmp(&a.population0)
            .then(a.id.cmp(&b.id))
    });

    // second slot: most populous first, to the group with the least capital
    for p in &rest[..NUM_GROUPS] {
        let g = open_group_minimizing(&groups, 1, &capital);
        groups[g].push(p.id);
        capital[g] += p.capital0;
        population[g] += p.population0;
    }
    // third slot: keep group population totals even
    for p in &rest[NUM_GROUPS..] {
        let g = open_group_minimizing(&groups, 2, &population);
        groups[g].push(p.id);
        population[g] += p.population0;
    }

    Partition {
        groups: groups.into_iter().map(|g| [g[0], g[1], g[2]]).collect(),
        generation: 0,
    }
}

/// Current population and capital of a region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Indicators {
    pub population: f64,
    pub capital: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityConfig {
    pub pop_scale: f64,
    pub cap_scale: f64,
    pub threshold: f64,
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        SimilarityConfig {
            pop_scale: 100.0,
            cap_scale: 500.0,
            threshold: 0.1,
        }
    }
}

impl SimilarityConfig {
    pub fn validate(&self) -> Result<()> {
        if [self.pop_scale, self.cap_scale, self.threshold]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0)
        {
            Ok(())
        } else {
            invalid("similarity scales and threshold must be positive")
        }
    }
}

/// Sum of the scaled absolute differences in population and capital.
pub fn similarity_distance(a: &Indicators, b: &Indicators, cfg: &SimilarityConfig) -> f64 {
    (a.population - b.population).abs() / cfg.pop_scale
        + (a.capital - b.capital).abs() / cfg.cap_scale
}

/// Per-region disagreement counts and the exchangeable candidate pool.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InconsistencyLedger {
    pub counts: Vec<u32>,
    pub threshold: u32,
    pub pool: BTreeSet<usize>,
}

impl InconsistencyLedger {
    pub fn new(threshold: u32) -> Self {
        InconsistencyLedger {
            counts: vec![0; NUM_REGIONS],
            threshold,
            pool: BTreeSet::new(),
        }
    }
}

/// Adds one to a region's count for every evaluated proposal on which its
/// own decision differs from its group's voted outcome.
pub fn record_inconsistencies(
    ledger: &InconsistencyLedger,
    partition: &Partition,
    outcomes: &[GroupOutcome],
    decisions: &[Decision],
) -> Result<InconsistencyLedger> {
    let mut next = ledger.clone();
    for d in decisions {
        let group = partition
            .group_of(d.region)
            .ok_or_else(|| Error::InvalidInput(format!("region {} is in no group", d.region)))?;
        let outcome = outcomes
            .iter()
            .find(|o| o.proposal == d.proposal && o.group == group)
            .ok_or_else(|| {
                Error::InvalidInput(format!(
                    "no outcome for proposal {} in group {group}",
                    d.proposal
                ))
            })?;
        if outcome.accepted != d.accept {
            next.counts[d.region] += 1;
        }
    }
    Ok(next)
}

/// A completed member exchange.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwapEvent {
    pub region_a: usize,
    pub region_b: usize,
    /// Group `region_a` belonged to before the swap.
    pub group_a: usize,
    pub group_b: usize,
}

/// Pools every region above the threshold, then repeatedly swaps the first
/// (lowest id pair) pooled pair that sits in different groups and is within
/// the similarity threshold. Swapped regions leave the pool with zero counts.
pub fn update_groups(
    partition: &Partition,
    ledger: &InconsistencyLedger,
    indicators: &[Indicators],
    cfg: &SimilarityConfig,
) -> Result<(Partition, InconsistencyLedger, Vec<SwapEvent>)> {
    if indicators.len() != NUM_REGIONS {
        return invalid(format!(
            "expected {NUM_REGIONS} indicator records, got {}",
            indicators.len()
        ));
    }
    let mut partition = partition.clone();
    let mut ledger = ledger.clone();
    let mut swaps = Vec::new();
    for (region, &count) in ledger.counts.iter().enumerate() {
        if count > ledger.threshold {
            ledger.pool.insert(region);
        }
    }
    loop {
        let assignment = partition.assignment();
        let pooled: Vec<usize> = ledger.pool.iter().copied().collect();
        let pair = pooled.iter().enumerate().find_map(|(i, &a)| {
            pooled[i + 1..].iter().find_map(|&b| {
                let eligible = assignment[a] != assignment[b]
                    && similarity_distance(&indicators[a], &indicators[b], cfg) <= cfg.threshold;
                eligible.then_some((a, b))
            })
        });
        let Some((a, b)) = pair else { break };
        swaps.push(SwapEvent {
            region_a: a,
            region_b: b,
            group_a: assignment[a],
            group_b: assignment[b],
        });
        partition.swap(a, b);
        ledger.pool.remove(&a);
        ledger.pool.remove(&b);
        ledger.counts[a] = 0;
        ledger.counts[b] = 0;
    }
    partition.validate()?;
    Ok((partition, ledger, swaps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration;

    fn flat_indicators() -> Vec<Indicators> {
        vec![
            Indicators {
                population: 10.0,
                capital: 10.0
            };
            NUM_REGIONS
        ]
    }

    #[test]
    fn seed_table_is_valid() {
        let p = form_initial_groups(&calibration::synthetic(0), FormationMode::SeedTable).unwrap();
        p.validate().unwrap();
        assert_eq!(p.members(0), [26, 1, 2]);
        assert_eq!(p.members(8), [24, 25, 0]);
        assert_eq!(p.generation(), 0);
    }

    #[test]
    fn formation_rejects_bad_input() {
        let regions = calibration::synthetic(0);
        assert!(form_initial_groups(&regions[..26], FormationMode::Principled).is_err());
        let mut dup = regions.clone();
        dup[3].id = 2;
        assert!(form_initial_groups(&dup, FormationMode::SeedTable).is_err());
    }

    #[test]
    fn principled_on_identical_regions_is_valid() {
        let template = calibration::synthetic(0)[0].clone();
        let regions: Vec<_> = (0..NUM_REGIONS)
            .map(|id| RegionParams {
                id,
                ..template.clone()
            })
            .collect();
        form_initial_groups(&regions, FormationMode::Principled)
            .unwrap()
            .validate()
            .unwrap();
    }

    #[test]
    fn text_round_trip() {
        let p = Partition::seed_table();
        let text = p.to_text();
        assert_eq!(text.lines().count(), 9);
        assert_eq!(text.lines().next(), Some("26 1 2"));
        assert_eq!(Partition::from_text(&text).unwrap(), p);
        assert!(Partition::from_text("0 1\n").is_err());
        let mut bad = text.clone();
        bad = bad.replacen("26 1 2", "26 1 1", 1);
        assert!(Partition::from_text(&bad).is_err());
    }

    #[test]
    fn distance_examples() {
        let cfg = SimilarityConfig {
            pop_scale: 1.0,
            cap_scale: 1.0,
            threshold: 0.1,
        };
        let a = Indicators {
            population: 0.5,
            capital: 0.20,
        };
        let b = Indicators {
            population: 0.3,
            capital: 0.25,
        };
        assert_eq!(similarity_distance(&a, &a, &cfg), 0.0);
        assert!((similarity_distance(&a, &b, &cfg) - 0.25).abs() < 1e-12);
        assert_eq!(
            similarity_distance(&a, &b, &cfg),
            similarity_distance(&b, &a, &cfg)
        );
    }

    fn decision(region: usize, proposal: usize, accept: bool) -> Decision {
        Decision {
            region,
            proposal,
            accept,
        }
    }

    #[test]
    fn single_disagreement_counted() {
        let p = Partition::seed_table();
        let ledger = InconsistencyLedger::new(18);
        let outcomes = [GroupOutcome {
            group: 0,
            proposal: 0,
            accepted: true,
        }];
        let decisions = [
            decision(26, 0, true),
            decision(1, 0, false),
            decision(2, 0, true),
        ];
        let next = record_inconsistencies(&ledger, &p, &outcomes, &decisions).unwrap();
        assert_eq!(next.counts[1], 1);
        assert_eq!(next.counts.iter().sum::<u32>(), 1);
    }

    #[test]
    fn disagreements_accumulate_over_proposals() {
        let p = Partition::seed_table();
        let ledger = InconsistencyLedger::new(18);
        let mut outcomes = Vec::new();
        let mut decisions = Vec::new();
        for k in 0..8 {
            outcomes.push(GroupOutcome {
                group: 0,
                proposal: k,
                accepted: true,
            });
            decisions.push(decision(26, k, true));
            decisions.push(decision(2, k, true));
            decisions.push(decision(1, k, k >= 3));
        }
        let next = record_inconsistencies(&ledger, &p, &outcomes, &decisions).unwrap();
        assert_eq!(next.counts[1], 3);
        assert_eq!(next.counts[26], 0);

        let unanimous: Vec<_> = decisions
            .iter()
            .map(|d| Decision { accept: true, ..*d })
            .collect();
        let next = record_inconsistencies(&ledger, &p, &outcomes, &unanimous).unwrap();
        assert_eq!(next, ledger);
    }

    #[test]
    fn record_rejects_unknown_region_or_outcome() {
        let p = Partition::seed_table();
        let ledger = InconsistencyLedger::new(18);
        let outcomes = [GroupOutcome {
            group: 0,
            proposal: 0,
            accepted: true,
        }];
        assert!(record_inconsistencies(&ledger, &p, &outcomes, &[decision(40, 0, true)]).is_err());
        assert!(record_inconsistencies(&ledger, &p, &outcomes, &[decision(3, 0, true)]).is_err());
    }

    #[test]
    fn similar_pooled_pair_swaps() {
        let p = Partition::seed_table();
        let mut ledger = InconsistencyLedger::new(18);
        ledger.counts[5] = 19;
        ledger.counts[12] = 20;
        let mut ind = flat_indicators();
        ind[5] = Indicators {
            population: 10.0,
            capital: 10.0,
        };
        ind[12] = Indicators {
            population: 15.0,
            capital: 10.0,
        };
        let cfg = SimilarityConfig {
            pop_scale: 100.0,
            cap_scale: 100.0,
            threshold: 0.1,
        };
        assert!((similarity_distance(&ind[5], &ind[12], &cfg) - 0.05).abs() < 1e-12);
        let (next, ledger, swaps) = update_groups(&p, &ledger, &ind, &cfg).unwrap();
        assert_eq!(next.group_of(5), Some(3));
        assert_eq!(next.group_of(12), Some(2));
        assert_eq!(ledger.counts[5], 0);
        assert_eq!(ledger.counts[12], 0);
        assert!(ledger.pool.is_empty());
        assert_eq!(next.generation(), 1);
        assert_eq!(
            swaps,
            vec![SwapEvent {
                region_a: 5,
                region_b: 12,
                group_a: 2,
                group_b: 3
            }]
        );
    }

    #[test]
    fn below_threshold_is_noop() {
        let p = Partition::seed_table();
        let mut ledger = InconsistencyLedger::new(18);
        ledger.counts[5] = 18;
        let (next, l2, swaps) = update_groups(
            &p,
            &ledger,
            &flat_indicators(),
            &SimilarityConfig::default(),
        )
        .unwrap();
        assert_eq!(next, p);
        assert!(l2.pool.is_empty());
        assert!(swaps.is_empty());
    }

    #[test]
    fn lone_pooled_region_waits() {
        let p = Partition::seed_table();
        let mut ledger = InconsistencyLedger::new(18);
        ledger.counts[5] = 30;
        let (next, l2, _) = update_groups(
            &p,
            &ledger,
            &flat_indicators(),
            &SimilarityConfig::default(),
        )
        .unwrap();
        assert_eq!(next, p);
        assert_eq!(l2.pool.iter().copied().collect::<Vec<_>>(), vec![5]);
        assert_eq!(l2.counts[5], 30);
    }

    #[test]
    fn same_group_pair_never_swaps() {
        let p = Partition::seed_table();
        let mut ledger = InconsistencyLedger::new(18);
        ledger.counts[3] = 19;
        ledger.counts[4] = 19;
        let (next, l2, swaps) = update_groups(
            &p,
            &ledger,
            &flat_indicators(),
            &SimilarityConfig::default(),
        )
        .unwrap();
        assert!(swaps.is_empty());
        assert_eq!(next, p);
        assert_eq!(l2.pool.len(), 2);
    }
}
