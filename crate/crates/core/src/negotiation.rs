//! Negotiation protocols.
//!
//! Group rounds run in three parts. Every region first states the share of
//! its group's mitigation it is willing to carry and what it wants from each
//! other group; member requests are aggregated into one proposal per
//! (group, target) pair by elementwise median. Every member of a target group
//! then accepts or rejects each incoming proposal as a whole, and the group
//! accepts on a 2-of-3 vote. Finally each group is bound to the elementwise
//! maximum of the proposals it accepted and of its own proposals that were
//! accepted, and the mitigation part is split among members around their
//! stated shares.
//!
//! The bilateral protocol is the region-level baseline: every region sends
//! every other region a (promise, request) pair of mitigation levels.

use serde::{Deserialize, Serialize};

use crate::agents::{Observation, Policy};
use crate::engine::{Action, RegionParams, World, NUM_REGIONS};
use crate::error::{invalid, Error, Result};
use crate::grouping::{Partition, GROUP_SIZE, NUM_GROUPS};

pub const MAX_LEVEL: u8 = 10;
const MEAN_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NegotiationMode {
    None,
    Bilateral,
    StaticGroup,
    DynamicGroup,
}

impl NegotiationMode {
    pub fn uses_groups(self) -> bool {
        matches!(
            self,
            NegotiationMode::StaticGroup | NegotiationMode::DynamicGroup
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    MitigationOnly,
    MitigationSavings,
}

/// A group's request to another group. Accepted or rejected as one unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Proposal {
    pub from_group: usize,
    pub to_group: usize,
    pub mitigation_level: u8,
    pub savings_level: u8,
}

impl Proposal {
    pub fn new(
        from_group: usize,
        to_group: usize,
        mitigation_level: u8,
        savings_level: u8,
    ) -> Result<Self> {
        if from_group == to_group {
            return invalid(format!("group {from_group} cannot propose to itself"));
        }
        if mitigation_level > MAX_LEVEL || savings_level > MAX_LEVEL {
            return invalid(format!(
                "levels ({mitigation_level}, {savings_level}) exceed {MAX_LEVEL}"
            ));
        }
        Ok(Proposal {
            from_group,
            to_group,
            mitigation_level,
            savings_level,
        })
    }
}

/// One region's verdict on one proposal. There is deliberately a single flag:
/// mitigation and savings are never decided separately.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decision {
    pub region: usize,
    /// Index of the proposal within its round.
    pub proposal: usize,
    pub accept: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupOutcome {
    pub group: usize,
    pub proposal: usize,
    pub accepted: bool,
}

/// Minimum rates binding a region's next action.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Commitment {
    pub region: usize,
    pub min_mitigation: f64,
    pub min_savings: f64,
}

impl Commitment {
    pub fn none(region: usize) -> Self {
        Commitment {
            region,
            min_mitigation: 0.0,
            min_savings: 0.0,
        }
    }

    pub fn is_satisfied_by(&self, action: &Action) -> bool {
        action.mitigation >= self.min_mitigation && action.savings >= self.min_savings
    }
}

/// Member mitigation levels whose mean is the group's committed level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShareVector {
    pub group: usize,
    pub shares: [f64; GROUP_SIZE],
}

impl ShareVector {
    pub fn mean(&self) -> f64 {
        self.shares.iter().sum::<f64>() / GROUP_SIZE as f64
    }
}

pub fn level_to_rate(level: f64) -> Result<f64> {
    if !(0.0..=MAX_LEVEL as f64).contains(&level) {
        return invalid(format!("level {level} outside [0, {MAX_LEVEL}]"));
    }
    Ok(level / MAX_LEVEL as f64)
}

/// Splits a group-average mitigation level among three members.
///
/// Member proposals are shifted together so their mean hits the commitment;
/// any share pushed past `[0, 10]` is pinned at the bound and the excess is
/// spread evenly over the members still free, until nothing moves.
pub fn intra_group_share_split(
    proposed: [f64; GROUP_SIZE],
    commitment: f64,
) -> Result<[f64; GROUP_SIZE]> {
    let max = MAX_LEVEL as f64;
    if !(0.0..=max).contains(&commitment) {
        return invalid(format!("commitment {commitment} outside [0, {max}]"));
    }
    if let Some(bad) = proposed.iter().find(|p| !(0.0..=max).contains(*p)) {
        return invalid(format!("proposed share {bad} outside [0, {max}]"));
    }
    let target_sum = commitment * GROUP_SIZE as f64;
    let shift = commitment - proposed.iter().sum::<f64>() / GROUP_SIZE as f64;
    let mut shares = proposed.map(|p| p + shift);
    let mut pinned = [false; GROUP_SIZE];
    loop {
        let mut clipped = false;
        for (s, pin) in shares.iter_mut().zip(pinned.iter_mut()) {
            if *pin {
                continue;
            }
            if *s > max {
                *s = max;
                *pin = true;
                clipped = true;
            } else if *s < 0.0 {
                *s = 0.0;
                *pin = true;
                clipped = true;
            }
        }
        let free = pinned.iter().filter(|p| !**p).count();
        if free == 0 {
            break;
        }
        let residual = (target_sum - shares.iter().sum::<f64>()) / free as f64;
        for (s, pin) in shares.iter_mut().zip(pinned.iter()) {
            if !*pin {
                *s += residual;
            }
        }
        if !clipped && shares.iter().all(|s| (0.0..=max).contains(s)) {
            break;
        }
    }
    Ok(shares)
}

/// 2-of-3 majority.
pub fn group_vote(decisions: &[bool]) -> Result<bool> {
    if decisions.len() != GROUP_SIZE {
        return invalid(format!(
            "group vote needs {GROUP_SIZE} decisions, got {}",
            decisions.len()
        ));
    }
    Ok(decisions.iter().filter(|d| **d).count() >= 2)
}

/// Elementwise maximum of accepted incoming requests and accepted own
/// proposals; `(0, 0)` when nothing was accepted.
pub fn set_group_commitments(
    accepted_incoming: &[Proposal],
    own_accepted_outgoing: &[Proposal],
) -> (u8, u8) {
    accepted_incoming
        .iter()
        .chain(own_accepted_outgoing)
        .fold((0, 0), |(m, s), p| {
            (m.max(p.mitigation_level), s.max(p.savings_level))
        })
}

/// Per-member commitments from the group levels and the settled shares.
pub fn apply_commitments(
    group_levels: (u8, u8),
    shares: &ShareVector,
    members: [usize; GROUP_SIZE],
) -> Result<[Commitment; GROUP_SIZE]> {
    let (mitigation_level, savings_level) = group_levels;
    if (shares.mean() - mitigation_level as f64).abs() > MEAN_TOLERANCE {
        return invalid(format!(
            "share vector of group {} averages {}, expected {mitigation_level}",
            shares.group,
            shares.mean()
        ));
    }
    let min_savings = level_to_rate(savings_level as f64)?;
    let mut out = [Commitment::none(0); GROUP_SIZE];
    for ((slot, &region), &share) in out.iter_mut().zip(&members).zip(&shares.shares) {
        *slot = Commitment {
            region,
            min_mitigation: level_to_rate(share)?,
            min_savings,
        };
    }
    Ok(out)
}

/// Region-level offer in the bilateral protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BilateralProposal {
    pub from: usize,
    pub to: usize,
    /// Level the proposer promises for itself.
    pub self_level: u8,
    /// Level the proposer requests of the recipient.
    pub other_level: u8,
}

/// Commitments from a full bilateral round; `decisions[i]` is the
/// recipient's verdict on `proposals[i]`. Savings are not negotiated.
pub fn bilateral_round(
    proposals: &[BilateralProposal],
    decisions: &[bool],
) -> Result<Vec<Commitment>> {
    let expected = NUM_REGIONS * (NUM_REGIONS - 1);
    if proposals.len() != expected || decisions.len() != proposals.len() {
        return invalid(format!(
            "bilateral round needs {expected} proposals and decisions, got {} and {}",
            proposals.len(),
            decisions.len()
        ));
    }
    let mut seen = vec![false; NUM_REGIONS * NUM_REGIONS];
    let mut levels = [0u8; NUM_REGIONS];
    for (p, &accepted) in proposals.iter().zip(decisions) {
        if p.from >= NUM_REGIONS || p.to >= NUM_REGIONS || p.from == p.to {
            return invalid(format!("malformed bilateral pair ({}, {})", p.from, p.to));
        }
        if p.self_level > MAX_LEVEL || p.other_level > MAX_LEVEL {
            return invalid(format!(
                "bilateral levels of ({}, {}) exceed {MAX_LEVEL}",
                p.from, p.to
            ));
        }
        let slot = p.from * NUM_REGIONS + p.to;
        if seen[slot] {
            return invalid(format!("duplicate bilateral pair ({}, {})", p.from, p.to));
        }
        seen[slot] = true;
        if accepted {
            levels[p.to] = levels[p.to].max(p.other_level);
            levels[p.from] = levels[p.from].max(p.self_level);
        }
    }
    levels
        .iter()
        .enumerate()
        .map(|(region, &level)| {
            Ok(Commitment {
                region,
                min_mitigation: level_to_rate(level as f64)?,
                min_savings: 0.0,
            })
        })
        .collect()
}

/// A single region's request to another group, before aggregation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemberProposal {
    pub region: usize,
    pub to_group: usize,
    pub mitigation_level: u8,
    pub savings_level: u8,
}

fn median3(mut v: [u8; 3]) -> u8 {
    v.sort_unstable();
    v[1]
}

/// One group proposal per ordered (group, target) pair, ordered by source
/// group then target. Levels are the median of the members' requests.
pub fn aggregate_group_proposals(
    partition: &Partition,
    member_proposals: &[MemberProposal],
    variant: Variant,
) -> Result<Vec<Proposal>> {
    let mut out = Vec::with_capacity(NUM_GROUPS * (NUM_GROUPS - 1));
    for (from, members) in partition.groups().iter().enumerate() {
        for to in (0..NUM_GROUPS).filter(|&g| g != from) {
            let mut mitigation = [0u8; GROUP_SIZE];
            let mut savings = [0u8; GROUP_SIZE];
            for (k, &region) in members.iter().enumerate() {
                let mp = member_proposals
                    .iter()
                    .find(|mp| mp.region == region && mp.to_group == to)
                    .ok_or_else(|| {
                        Error::InvalidInput(format!(
                            "region {region} made no proposal to group {to}"
                        ))
                    })?;
                mitigation[k] = mp.mitigation_level;
                savings[k] = mp.savings_level;
            }
            let savings_level = match variant {
                Variant::MitigationOnly => 0,
                Variant::MitigationSavings => median3(savings),
            };
            out.push(Proposal::new(from, to, median3(mitigation), savings_level)?);
        }
    }
    Ok(out)
}

/// Votes, group levels, share vectors and commitments of a group round.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupResolution {
    pub outcomes: Vec<GroupOutcome>,
    pub group_levels: Vec<(u8, u8)>,
    pub shares: Vec<ShareVector>,
    pub commitments: Vec<Commitment>,
}

/// Turns member decisions into votes and binding commitments.
pub fn resolve_group_round(
    partition: &Partition,
    share_levels: &[f64],
    proposals: &[Proposal],
    decisions: &[Decision],
) -> Result<GroupResolution> {
    if share_levels.len() != NUM_REGIONS {
        return invalid(format!(
            "expected {NUM_REGIONS} share levels, got {}",
            share_levels.len()
        ));
    }
    let mut outcomes = Vec::with_capacity(proposals.len());
    for (idx, p) in proposals.iter().enumerate() {
        let members = partition.members(p.to_group);
        let votes = members
            .iter()
            .map(|&region| {
                decisions
                    .iter()
                    .find(|d| d.region == region && d.proposal == idx)
                    .map(|d| d.accept)
                    .ok_or_else(|| {
                        Error::InvalidInput(format!(
                            "region {region} did not decide proposal {idx}"
                        ))
                    })
            })
            .collect::<Result<Vec<bool>>>()?;
        outcomes.push(GroupOutcome {
            group: p.to_group,
            proposal: idx,
            accepted: group_vote(&votes)?,
        });
    }

    let mut group_levels = Vec::with_capacity(NUM_GROUPS);
    let mut shares = Vec::with_capacity(NUM_GROUPS);
    let mut commitments = vec![Commitment::none(0); NUM_REGIONS];
    for (group, members) in partition.groups().iter().enumerate() {
        let accepted = |o: &&GroupOutcome| o.accepted;
        let incoming: Vec<Proposal> = outcomes
            .iter()
            .filter(accepted)
            .filter(|o| o.group == group)
            .map(|o| proposals[o.proposal])
            .collect();
        let outgoing: Vec<Proposal> = outcomes
            .iter()
            .filter(accepted)
            .map(|o| proposals[o.proposal])
            .filter(|p| p.from_group == group)
            .collect();
        let levels = set_group_commitments(&incoming, &outgoing);
        let proposed = members.map(|r| share_levels[r]);
        let split = ShareVector {
            group,
            shares: intra_group_share_split(proposed, levels.0 as f64)?,
        };
        for c in apply_commitments(levels, &split, *members)? {
            commitments[c.region] = c;
        }
        group_levels.push(levels);
        shares.push(split);
    }
    Ok(GroupResolution {
        outcomes,
        group_levels,
        shares,
        commitments,
    })
}

/// Everything said and decided in one negotiation round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundTranscript {
    pub mode: NegotiationMode,
    pub variant: Variant,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub share_levels: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub member_proposals: Vec<MemberProposal>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub proposals: Vec<Proposal>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub decisions: Vec<Decision>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub outcomes: Vec<GroupOutcome>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub group_levels: Vec<(u8, u8)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub shares: Vec<ShareVector>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bilateral_proposals: Vec<BilateralProposal>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bilateral_decisions: Vec<bool>,
    pub commitments: Vec<Commitment>,
}

impl RoundTranscript {
    fn empty(mode: NegotiationMode, variant: Variant) -> Self {
        RoundTranscript {
            mode,
            variant,
            share_levels: Vec::new(),
            member_proposals: Vec::new(),
            proposals: Vec::new(),
            decisions: Vec::new(),
            outcomes: Vec::new(),
            group_levels: Vec::new(),
            shares: Vec::new(),
            bilateral_proposals: Vec::new(),
            bilateral_decisions: Vec::new(),
            commitments: (0..NUM_REGIONS).map(Commitment::none).collect(),
        }
    }

    /// Recomputes commitments from the recorded statements and decisions.
    pub fn recompute_commitments(&self, partition: Option<&Partition>) -> Result<Vec<Commitment>> {
        match self.mode {
            NegotiationMode::None => Ok((0..NUM_REGIONS).map(Commitment::none).collect()),
            NegotiationMode::Bilateral => {
                bilateral_round(&self.bilateral_proposals, &self.bilateral_decisions)
            }
            NegotiationMode::StaticGroup | NegotiationMode::DynamicGroup => {
                let partition = partition
                    .ok_or_else(|| Error::InvalidInput("group round without a partition".into()))?;
                let proposals =
                    aggregate_group_proposals(partition, &self.member_proposals, self.variant)?;
                if proposals != self.proposals {
                    return Err(Error::Transcript(
                        "recorded group proposals differ from aggregated member proposals".into(),
                    ));
                }
                let resolution = resolve_group_round(
                    partition,
                    &self.share_levels,
                    &proposals,
                    &self.decisions,
                )?;
                Ok(resolution.commitments)
            }
        }
    }
}

/// Read-only context shared by all observations in a round.
pub struct RoundContext<'a> {
    pub world: &'a World,
    pub regions: &'a [RegionParams],
    pub partition: Option<&'a Partition>,
    pub last_actions: &'a [Action],
    pub commitments: &'a [Commitment],
}

impl RoundContext<'_> {
    pub fn observe(&self, region: usize) -> Observation<'_> {
        let group_members: Vec<usize> = self
            .partition
            .and_then(|p| p.group_of(region).map(|g| p.members(g).to_vec()))
            .unwrap_or_default();
        let member_last_actions = group_members
            .iter()
            .map(|&r| self.last_actions[r])
            .collect();
        Observation {
            region,
            params: &self.regions[region],
            state: &self.world.regions[region],
            climate: &self.world.climate,
            commitment: self.commitments[region],
            group_members,
            member_last_actions,
        }
    }
}

fn to_level(share: f64) -> u8 {
    share.round().clamp(0.0, MAX_LEVEL as f64) as u8
}

/// Runs the proposal and evaluation stages for one step.
///
/// Policies are consulted in region order for proposals and in proposal
/// order, then member order, for decisions, so random policies replay
/// identically.
pub fn run_negotiation_round(
    mode: NegotiationMode,
    variant: Variant,
    policies: &mut [Policy],
    ctx: &RoundContext<'_>,
) -> Result<RoundTranscript> {
    if policies.len() != NUM_REGIONS {
        return invalid(format!(
            "expected {NUM_REGIONS} policies, got {}",
            policies.len()
        ));
    }
    let mut transcript = RoundTranscript::empty(mode, variant);
    match mode {
        NegotiationMode::None => {}
        NegotiationMode::Bilateral => {
            let mut proposals = Vec::with_capacity(NUM_REGIONS * (NUM_REGIONS - 1));
            for (from, policy) in policies.iter_mut().enumerate() {
                let plan = policy.propose(&ctx.observe(from), NUM_REGIONS - 1);
                let targets = (0..NUM_REGIONS).filter(|&t| t != from);
                for (to, &(request, _)) in targets.zip(&plan.outgoing) {
                    proposals.push(BilateralProposal {
                        from,
                        to,
                        self_level: to_level(plan.share_level),
                        other_level: request,
                    });
                }
            }
            let decisions: Vec<bool> = proposals
                .iter()
                .map(|p| policies[p.to].decide(&ctx.observe(p.to), p.other_level, 0))
                .collect();
            transcript.commitments = bilateral_round(&proposals, &decisions)?;
            transcript.bilateral_proposals = proposals;
            transcript.bilateral_decisions = decisions;
        }
        NegotiationMode::StaticGroup | NegotiationMode::DynamicGroup => {
            let partition = ctx
                .partition
                .ok_or_else(|| Error::InvalidInput("group mode needs a partition".into()))?;
            partition.validate()?;
            let assignment = partition.assignment();
            let mut share_levels = vec![0.0; NUM_REGIONS];
            let mut member_proposals = Vec::with_capacity(NUM_REGIONS * (NUM_GROUPS - 1));
            for (region, policy) in policies.iter_mut().enumerate() {
                let own = assignment[region];
                let plan = policy.propose(&ctx.observe(region), NUM_GROUPS - 1);
                share_levels[region] = plan.share_level.clamp(0.0, MAX_LEVEL as f64);
                let targets = (0..NUM_GROUPS).filter(|&g| g != own);
                for (to_group, &(m, s)) in targets.zip(&plan.outgoing) {
                    member_proposals.push(MemberProposal {
                        region,
                        to_group,
                        mitigation_level: m.min(MAX_LEVEL),
                        savings_level: match variant {
                            Variant::MitigationOnly => 0,
                            Variant::MitigationSavings => s.min(MAX_LEVEL),
                        },
                    });
                }
            }
            let proposals = aggregate_group_proposals(partition, &member_proposals, variant)?;
            let mut decisions = Vec::with_capacity(proposals.len() * GROUP_SIZE);
            for (idx, p) in proposals.iter().enumerate() {
                for region in partition.members(p.to_group) {
                    let accept = policies[region].decide(
                        &ctx.observe(region),
                        p.mitigation_level,
                        p.savings_level,
                    );
                    decisions.push(Decision {
                        region,
                        proposal: idx,
                        accept,
                    });
                }
            }
            let resolution = resolve_group_round(partition, &share_levels, &proposals, &decisions)?;
            transcript.share_levels = share_levels;
            transcript.member_proposals = member_proposals;
            transcript.proposals = proposals;
            transcript.decisions = decisions;
            transcript.outcomes = resolution.outcomes;
            transcript.group_levels = resolution.group_levels;
            transcript.shares = resolution.shares;
            transcript.commitments = resolution.commitments;
        }
    }
    Ok(transcript)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{PolicyConfig, PolicyMap};
    use crate::calibration;
    use crate::engine::ClimateParams;

    fn close(a: [f64; 3], b: [f64; 3]) -> bool {
        a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-9)
    }

    #[test]
    fn level_to_rate_examples() {
        assert_eq!(level_to_rate(0.0).unwrap(), 0.0);
        assert_eq!(level_to_rate(10.0).unwrap(), 1.0);
        assert_eq!(level_to_rate(7.0).unwrap(), 0.7);
        assert!(level_to_rate(10.5).is_err());
        assert!(level_to_rate(-1.0).is_err());
    }

    #[test]
    fn share_split_examples() {
        assert!(close(
            intra_group_share_split([4.0, 6.0, 8.0], 6.0).unwrap(),
            [4.0, 6.0, 8.0]
        ));
        assert!(close(
            intra_group_share_split([2.0, 2.0, 2.0], 6.0).unwrap(),
            [6.0, 6.0, 6.0]
        ));
        assert!(close(
            intra_group_share_split([0.0, 3.0, 9.0], 6.0).unwrap(),
            [2.5, 5.5, 10.0]
        ));
        assert!(intra_group_share_split([0.0, 3.0, 11.0], 6.0).is_err());
        assert!(intra_group_share_split([0.0, 3.0, 9.0], 10.5).is_err());
    }

    #[test]
    fn share_split_cascading_clip() {
        let s = intra_group_share_split([0.0, 9.5, 10.0], 9.0).unwrap();
        assert!(close(s, [7.0, 10.0, 10.0]), "{s:?}");
        let s = intra_group_share_split([0.0, 0.0, 10.0], 1.0).unwrap();
        assert!(close(s, [0.0, 0.0, 3.0]), "{s:?}");
    }

    #[test]
    fn vote_examples() {
        assert!(group_vote(&[true, true, false]).unwrap());
        assert!(!group_vote(&[true, false, false]).unwrap());
        assert!(group_vote(&[true, true]).is_err());
    }

    #[test]
    fn commitment_levels() {
        assert_eq!(set_group_commitments(&[], &[]), (0, 0));
        let p = |m, s| Proposal::new(0, 1, m, s).unwrap();
        assert_eq!(set_group_commitments(&[p(3, 2), p(7, 5)], &[]), (7, 5));
        assert_eq!(set_group_commitments(&[p(3, 6)], &[p(5, 2)]), (5, 6));
    }

    #[test]
    fn proposal_validation() {
        assert!(Proposal::new(2, 2, 1, 1).is_err());
        assert!(Proposal::new(1, 2, 11, 1).is_err());
        assert!(Proposal::new(1, 2, 10, 10).is_ok());
    }

    #[test]
    fn apply_commitment_examples() {
        let shares = ShareVector {
            group: 0,
            shares: [2.5, 5.5, 10.0],
        };
        let out = apply_commitments((6, 4), &shares, [26, 1, 2]).unwrap();
        let mit: Vec<f64> = out.iter().map(|c| c.min_mitigation).collect();
        assert!(close(mit.clone().try_into().unwrap(), [0.25, 0.55, 1.0]));
        assert!(out.iter().all(|c| (c.min_savings - 0.4).abs() < 1e-12));
        assert!((mit.iter().sum::<f64>() / 3.0 - 0.6).abs() < 1e-9);
        assert_eq!(out[0].region, 26);

        let zero = ShareVector {
            group: 0,
            shares: [0.0; 3],
        };
        let out = apply_commitments((0, 0), &zero, [26, 1, 2]).unwrap();
        assert!(out
            .iter()
            .all(|c| c.min_mitigation == 0.0 && c.min_savings == 0.0));

        assert!(apply_commitments((5, 0), &shares, [26, 1, 2]).is_err());
    }

    fn bilateral_matrix(level: impl Fn(usize, usize) -> (u8, u8)) -> Vec<BilateralProposal> {
        let mut out = Vec::new();
        for from in 0..NUM_REGIONS {
            for to in (0..NUM_REGIONS).filter(|&t| t != from) {
                let (self_level, other_level) = level(from, to);
                out.push(BilateralProposal {
                    from,
                    to,
                    self_level,
                    other_level,
                });
            }
        }
        out
    }

    #[test]
    fn bilateral_examples() {
        let proposals = bilateral_matrix(|from, to| match (from, to) {
            (1, 0) => (0, 3),
            (2, 0) => (0, 7),
            _ => (0, 9),
        });
        let decisions: Vec<bool> = proposals
            .iter()
            .map(|p| p.to == 0 && (p.from == 1 || p.from == 2))
            .collect();
        let c = bilateral_round(&proposals, &decisions).unwrap();
        assert!((c[0].min_mitigation - 0.7).abs() < 1e-12);
        assert_eq!(c[5].min_mitigation, 0.0);
        assert!(c.iter().all(|c| c.min_savings == 0.0));

        let c = bilateral_round(&proposals, &vec![false; proposals.len()]).unwrap();
        assert!(c.iter().all(|c| c.min_mitigation == 0.0));

        let sym = bilateral_matrix(|_, _| (5, 5));
        let c = bilateral_round(&sym, &vec![true; sym.len()]).unwrap();
        assert!(c.iter().all(|c| c.min_mitigation == 0.5));

        assert!(bilateral_round(&sym[1..], &vec![true; sym.len() - 1]).is_err());
        let mut dup = sym.clone();
        dup[1] = dup[0];
        assert!(bilateral_round(&dup, &vec![true; dup.len()]).is_err());
    }

    struct Fixture {
        regions: Vec<RegionParams>,
        world: World,
        partition: Partition,
        last: Vec<Action>,
        commitments: Vec<Commitment>,
    }

    fn fixture() -> Fixture {
        let regions = calibration::synthetic(0);
        let world = World::initial(&regions, &ClimateParams::default());
        Fixture {
            regions,
            world,
            partition: Partition::seed_table(),
            last: vec![Action::new(0.0, 0.0); NUM_REGIONS],
            commitments: (0..NUM_REGIONS).map(Commitment::none).collect(),
        }
    }

    impl Fixture {
        fn ctx(&self) -> RoundContext<'_> {
            RoundContext {
                world: &self.world,
                regions: &self.regions,
                partition: Some(&self.partition),
                last_actions: &self.last,
                commitments: &self.commitments,
            }
        }
    }

    #[test]
    fn mode_none_commits_nothing() {
        let f = fixture();
        let mut policies = PolicyMap::preset("cooperative", 0).unwrap().instantiate(0);
        let t = run_negotiation_round(
            NegotiationMode::None,
            Variant::MitigationSavings,
            &mut policies,
            &f.ctx(),
        )
        .unwrap();
        assert!(t
            .commitments
            .iter()
            .all(|c| c.min_mitigation == 0.0 && c.min_savings == 0.0));
        assert!(t.proposals.is_empty());
    }

    #[test]
    fn symmetric_cooperation_commits_everyone_to_half() {
        let f = fixture();
        let mut policies = PolicyMap::uniform(PolicyConfig::cooperative(5)).instantiate(0);
        let t = run_negotiation_round(
            NegotiationMode::DynamicGroup,
            Variant::MitigationSavings,
            &mut policies,
            &f.ctx(),
        )
        .unwrap();
        assert_eq!(t.proposals.len(), 72);
        assert_eq!(t.decisions.len(), 216);
        for c in &t.commitments {
            assert!((c.min_mitigation - 0.5).abs() < 1e-12);
            assert!((c.min_savings - 0.5).abs() < 1e-12);
        }
        assert_eq!(
            t.recompute_commitments(Some(&f.partition)).unwrap(),
            t.commitments
        );
    }

    #[test]
    fn rejecting_untargeted_group_stays_free() {
        let f = fixture();
        let mut map = PolicyMap::uniform(PolicyConfig::cooperative(6));
        let loners = f.partition.members(4);
        for r in loners {
            map.0[r] = PolicyConfig::selfish();
        }
        let mut policies = map.instantiate(0);
        let t = run_negotiation_round(
            NegotiationMode::StaticGroup,
            Variant::MitigationOnly,
            &mut policies,
            &f.ctx(),
        )
        .unwrap();
        for r in loners {
            assert_eq!(t.commitments[r].min_mitigation, 0.0);
            assert_eq!(t.commitments[r].min_savings, 0.0);
        }
        let other = f.partition.members(0)[0];
        assert!((t.commitments[other].min_mitigation - 0.6).abs() < 1e-12);
        assert!(t.commitments.iter().all(|c| c.min_savings == 0.0));
    }

    #[test]
    fn bilateral_mode_with_policies() {
        let f = fixture();
        let mut policies = PolicyMap::uniform(PolicyConfig::cooperative(5)).instantiate(0);
        let t = run_negotiation_round(
            NegotiationMode::Bilateral,
            Variant::MitigationOnly,
            &mut policies,
            &f.ctx(),
        )
        .unwrap();
        assert_eq!(t.bilateral_proposals.len(), 702);
        assert!(t.commitments.iter().all(|c| c.min_mitigation == 0.5));
        assert_eq!(t.recompute_commitments(None).unwrap(), t.commitments);
    }

    #[test]
    fn group_mode_requires_partition() {
        let f = fixture();
        let mut policies = PolicyMap::preset("selfish", 0).unwrap().instantiate(0);
        let ctx = RoundContext {
            partition: None,
            ..f.ctx()
        };
        assert!(run_negotiation_round(
            NegotiationMode::StaticGroup,
            Variant::MitigationOnly,
            &mut policies,
            &ctx
        )
        .is_err());
    }
}
