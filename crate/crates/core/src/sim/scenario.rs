use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use super::{ChainFile, SplitMix64};
use crate::arith::{Epoch, Slot, ValidatorIndex};
use crate::committees::{CommitteeError, EpochCommittees};
use crate::fork_choice::{check_store_invariants, ForkChoiceError, Store};
use crate::preset::Preset;
use crate::ssz::SszType;
use crate::transition::{genesis_with_validators, process_block, process_slots, GenesisError};
use crate::types::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Honest,
    /// One validator also votes for a bogus target in an epoch it attests honestly.
    DoubleVote,
    /// One validator votes from genesis to epoch 3 on a stale side branch while
    /// voting 1 to 2 on the main chain.
    Surround,
    /// Two branches from genesis, each finalized with the help of one shared
    /// coalition that attests on both.
    ConflictingFinality,
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Honest => "honest",
            Scenario::DoubleVote => "double_vote",
            Scenario::Surround => "surround",
            Scenario::ConflictingFinality => "conflicting_finality",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [Scenario::Honest, Scenario::DoubleVote, Scenario::Surround, Scenario::ConflictingFinality]
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| format!("unknown scenario `{s}`"))
    }
}

/// Fraction of each committee that attests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Participation {
    pub num: u64,
    pub den: u64,
}

impl Participation {
    pub const FULL: Participation = Participation { num: 1, den: 1 };
}

impl fmt::Display for Participation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for Participation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (n, d) = s.split_once('/').ok_or_else(|| format!("participation `{s}` is not P/Q"))?;
        let num = n.trim().parse().map_err(|_| format!("bad numerator in `{s}`"))?;
        let den = d.trim().parse().map_err(|_| format!("bad denominator in `{s}`"))?;
        Ok(Participation { num, den })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimConfig {
    pub seed: u64,
    pub validators: u64,
    pub epochs: u64,
    pub participation: Participation,
    pub scenario: Scenario,
    pub preset: Preset,
    /// Size of the shared coalition in `ConflictingFinality`; the smallest one
    /// that can finalize both branches when unset.
    pub coalition: Option<u64>,
    /// Check store invariants after every accepted block rather than once per epoch.
    pub check_every_block: bool,
}

impl SimConfig {
    pub fn new(seed: u64, validators: u64, epochs: u64) -> Self {
        SimConfig {
            seed,
            validators,
            epochs,
            participation: Participation::FULL,
            scenario: Scenario::Honest,
            preset: Preset::default(),
            coalition: None,
            check_every_block: false,
        }
    }

    pub fn with_scenario(self, scenario: Scenario) -> Self {
        SimConfig { scenario, ..self }
    }

    pub fn with_preset(self, preset: Preset) -> Self {
        SimConfig { preset, ..self }
    }

    pub fn last_slot(&self) -> Option<Slot> {
        self.epochs.checked_mul(self.preset.slots_per_epoch)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::Config(m));
        self.preset.validate().map_err(|e| SimError::Config(e.to_string()))?;
        let spe = self.preset.slots_per_epoch;
        if self.validators < spe {
            return bad(format!("{} validators leave committees empty; need at least {spe}", self.validators));
        }
        if self.epochs == 0 || self.last_slot().is_none() {
            return bad(format!("epoch count {} out of range", self.epochs));
        }
        let p = self.participation;
        if p.den == 0 || p.num > p.den {
            return bad(format!("participation {p} must lie in [0, 1]"));
        }
        let min_epochs = match self.scenario {
            Scenario::DoubleVote => 2,
            Scenario::Surround => 4,
            _ => 1,
        };
        if self.epochs < min_epochs {
            return bad(format!("{} needs at least {min_epochs} epochs", self.scenario));
        }
        if self.scenario == Scenario::Surround && SURROUND_EPOCH * spe > self.preset.max_slot_advance {
            return bad("surround side block is beyond max_slot_advance".into());
        }
        if let Some(c) = self.coalition {
            if c > self.validators {
                return bad(format!("coalition {c} exceeds {} validators", self.validators));
            }
        }
        Ok(())
    }
}

const SURROUND_EPOCH: Epoch = 3;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Genesis(#[from] GenesisError),
    #[error("slot {slot}: {error}")]
    Committee { slot: Slot, error: CommitteeError },
    #[error("slot {slot}: {error}")]
    Block { slot: Slot, error: ForkChoiceError },
    #[error("slot {slot}: store invariants failed\n{report}")]
    Invariant { slot: Slot, report: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimReport {
    pub scenario: Scenario,
    pub seed: u64,
    pub validators: u64,
    pub epochs: u64,
    pub blocks: usize,
    pub head: Root,
    pub head_slot: Slot,
    pub justified: Checkpoint,
    pub finalized: Checkpoint,
    /// Finalized checkpoint in the post-state of each branch tip.
    pub branch_finalized: Vec<Checkpoint>,
    pub invariant_checks: usize,
    pub adversaries: Vec<ValidatorIndex>,
}

impl fmt::Display for SimReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "scenario={}", self.scenario)?;
        writeln!(f, "seed={}", self.seed)?;
        writeln!(f, "validators={}", self.validators)?;
        writeln!(f, "epochs={}", self.epochs)?;
        writeln!(f, "blocks={}", self.blocks)?;
        writeln!(f, "head={} slot={}", self.head, self.head_slot)?;
        writeln!(f, "justified={}", self.justified)?;
        writeln!(f, "finalized={}", self.finalized)?;
        for (i, c) in self.branch_finalized.iter().enumerate() {
            writeln!(f, "branch{i}_finalized={c}")?;
        }
        writeln!(f, "invariant_checks={}", self.invariant_checks)?;
        let adv: Vec<String> = self.adversaries.iter().map(u64::to_string).collect();
        writeln!(f, "adversaries=[{}]", adv.join(","))
    }
}

pub struct SimOutput {
    pub genesis: BeaconState,
    pub chain: ChainFile,
    pub store: Store,
    pub report: SimReport,
}

/// A committee duty waiting for inclusion.
#[derive(Debug, Clone)]
struct Duty {
    slot: Slot,
    index: u64,
    bits: Vec<bool>,
    include_at: Slot,
}

struct Branch {
    tip: Root,
    start: Slot,
    voters: Option<BTreeSet<ValidatorIndex>>,
    next_duty: Slot,
    queue: Vec<Duty>,
}

impl Branch {
    fn new(tip: Root, start: Slot, voters: Option<BTreeSet<ValidatorIndex>>) -> Self {
        Branch { tip, start, voters, next_duty: 0, queue: Vec::new() }
    }
}

struct Sim<'a> {
    cfg: &'a SimConfig,
    preset: Preset,
    rng: SplitMix64,
    store: Store,
    chain: ChainFile,
    invariant_checks: usize,
}

/// Attestation data for `(slot, index)` as seen from `state`, which must be
/// past `slot`. None when the boundary root has left the history ring.
fn attestation_data(state: &BeaconState, slot: Slot, index: u64, preset: &Preset) -> Option<AttestationData> {
    let epoch = epoch_of(slot, preset);
    let source = if epoch == state.current_epoch(preset) {
        state.current_justified_checkpoint
    } else {
        state.previous_justified_checkpoint
    };
    Some(AttestationData {
        slot,
        index,
        beacon_block_root: state.block_root_at_slot(slot, preset)?,
        source,
        target: Checkpoint { epoch, root: state.block_root(epoch, preset)? },
    })
}

fn single_bit(members: &[ValidatorIndex], who: ValidatorIndex) -> Vec<bool> {
    members.iter().map(|&m| m == who).collect()
}

impl Sim<'_> {
    fn forwarded(&self, parent: Root, slot: Slot) -> Result<BeaconState, SimError> {
        let pre = &self.store.post_states()[&parent];
        process_slots(pre, slot, &self.preset).map_err(|e| SimError::Block { slot, error: e.into() })
    }

    fn committees(&self, state: &BeaconState, epoch: Epoch) -> EpochCommittees {
        EpochCommittees::new(state, epoch, &self.preset)
    }

    fn members(&self, state: &BeaconState, slot: Slot, index: u64) -> Result<Vec<ValidatorIndex>, SimError> {
        let c = self.committees(state, epoch_of(slot, &self.preset));
        c.committee(slot, index).map(|a| a.members).map_err(|error| SimError::Committee { slot, error })
    }

    fn choose_bits(&mut self, members: &[ValidatorIndex], voters: &Option<BTreeSet<ValidatorIndex>>) -> Vec<bool> {
        let mut eligible: Vec<usize> = (0..members.len())
            .filter(|&i| voters.as_ref().is_none_or(|v| v.contains(&members[i])))
            .collect();
        let p = self.cfg.participation;
        let take = (eligible.len() as u128 * p.num as u128 / p.den as u128) as usize;
        self.rng.shuffle(&mut eligible);
        let mut bits = vec![false; members.len()];
        for &i in &eligible[..take] {
            bits[i] = true;
        }
        bits
    }

    /// Queues the duties of every slot from the branch's cursor up to `slot - 1`.
    fn queue_duties(&mut self, branch: &mut Branch, state: &BeaconState, slot: Slot) -> Result<(), SimError> {
        let delay = self.preset.min_attestation_inclusion_delay;
        let mut cache: BTreeMap<Epoch, EpochCommittees> = BTreeMap::new();
        for u in branch.next_duty..slot {
            let epoch = epoch_of(u, &self.preset);
            let committees = cache.entry(epoch).or_insert_with(|| self.committees(state, epoch)).clone();
            for index in 0..committees.count_per_slot {
                let members =
                    committees.committee(u, index).map_err(|error| SimError::Committee { slot: u, error })?.members;
                let bits = self.choose_bits(&members, &branch.voters);
                if bits.iter().any(|&b| b) {
                    let extra = self.rng.below(2);
                    let include_at = (u + delay + extra).min(u + self.preset.slots_per_epoch);
                    branch.queue.push(Duty { slot: u, index, bits, include_at });
                }
            }
        }
        branch.next_duty = slot;
        Ok(())
    }

    fn take_due(&mut self, branch: &mut Branch, state: &BeaconState, slot: Slot) -> Vec<PendingAttestation> {
        let spe = self.preset.slots_per_epoch;
        branch.queue.retain(|d| d.slot + spe >= slot);
        let cap = self.preset.max_attestations as usize;
        let mut out = Vec::new();
        let mut kept = Vec::new();
        for duty in std::mem::take(&mut branch.queue) {
            if duty.include_at > slot || out.len() >= cap {
                kept.push(duty);
                continue;
            }
            if let Some(data) = attestation_data(state, duty.slot, duty.index, &self.preset) {
                out.push(PendingAttestation { aggregation_bits: duty.bits, data, inclusion_delay: slot - duty.slot });
            }
        }
        branch.queue = kept;
        self.rng.shuffle(&mut out);
        out
    }

    /// Seals a block on `forwarded` and hands it to the store.
    fn propose(
        &mut self,
        parent: Root,
        forwarded: &BeaconState,
        attestations: Vec<PendingAttestation>,
    ) -> Result<Root, SimError> {
        let slot = forwarded.slot;
        let mut block = BeaconBlock { slot, parent_root: parent, state_root: Root::ZERO, attestations };
        let post = process_block(forwarded, &block, &self.preset).map_err(|e| SimError::Block { slot, error: e.into() })?;
        block.state_root = post.tree_root(&self.preset);
        let root = self.store.on_block(block.clone()).map_err(|error| SimError::Block { slot, error })?;
        self.chain.blocks.push(block);
        if self.cfg.check_every_block {
            self.check_invariants(slot)?;
        }
        Ok(root)
    }

    fn step(&mut self, branch: &mut Branch, slot: Slot, inject: Option<ValidatorIndex>) -> Result<Root, SimError> {
        let state = self.forwarded(branch.tip, slot)?;
        self.queue_duties(branch, &state, slot)?;
        let mut attestations = self.take_due(branch, &state, slot);
        if let Some(adversary) = inject {
            attestations.extend(self.double_vote(&state, slot - 1, adversary)?);
        }
        let root = self.propose(branch.tip, &state, attestations)?;
        branch.tip = root;
        Ok(root)
    }

    /// An honest single-validator vote plus one for a made-up target.
    fn double_vote(
        &mut self,
        state: &BeaconState,
        slot: Slot,
        adversary: ValidatorIndex,
    ) -> Result<Vec<PendingAttestation>, SimError> {
        let members = self.members(state, slot, 0)?;
        let Some(honest) = attestation_data(state, slot, 0, &self.preset) else {
            return Ok(vec![]);
        };
        let bogus = AttestationData {
            target: Checkpoint { root: Root(self.rng.bytes32()), ..honest.target },
            ..honest.clone()
        };
        let delay = state.slot - slot;
        let bits = single_bit(&members, adversary);
        Ok([honest, bogus]
            .into_iter()
            .map(|data| PendingAttestation { aggregation_bits: bits.clone(), data, inclusion_delay: delay })
            .collect())
    }

    /// A side block on `fork` whose only vote, by the committee's first member,
    /// spans from genesis to [`SURROUND_EPOCH`].
    fn surround_block(&mut self, fork: Root) -> Result<ValidatorIndex, SimError> {
        let slot = SURROUND_EPOCH * self.preset.slots_per_epoch + 1;
        let state = self.forwarded(fork, slot)?;
        let members = self.members(&state, slot - 1, 0)?;
        let adversary = members[0];
        let data = attestation_data(&state, slot - 1, 0, &self.preset)
            .ok_or_else(|| SimError::Config("side branch lost its boundary root".into()))?;
        let vote = PendingAttestation { aggregation_bits: single_bit(&members, adversary), data, inclusion_delay: 1 };
        self.propose(fork, &state, vec![vote])?;
        Ok(adversary)
    }

    fn check_invariants(&mut self, slot: Slot) -> Result<(), SimError> {
        self.invariant_checks += 1;
        let report = check_store_invariants(&self.store);
        if report.all_passed() {
            Ok(())
        } else {
            Err(SimError::Invariant { slot, report: report.to_string() })
        }
    }
}

/// Coalition sizes for the two-branch scenario: `(shared, branch-1 only, branch-2 only)`.
///
/// The shared coalition is the lowest indices; branch 2's own voters are the
/// highest; branch 1 gets the rest.
pub fn coalition_split(n: u64, shared: u64) -> (u64, u64, u64) {
    let rest = n - shared;
    let second = rest / 2;
    (shared, rest - second, second)
}

/// Smallest shared coalition that gives both branches a two-thirds majority.
pub fn minimal_coalition(n: u64) -> u64 {
    (0..=n)
        .find(|&c| {
            let (shared, _, second) = coalition_split(n, c);
            (shared + second) as u128 * 3 >= n as u128 * 2
        })
        .unwrap_or(n)
}

pub fn simulate(cfg: &SimConfig) -> Result<SimOutput, SimError> {
    cfg.validate()?;
    let preset = cfg.preset;
    let genesis = genesis_with_validators(cfg.validators, &preset)?;
    let store = Store::init(genesis.clone(), preset).map_err(|error| SimError::Block { slot: 0, error })?;
    let genesis_root = store.genesis_root();
    let mut sim = Sim { cfg, preset, rng: SplitMix64::new(cfg.seed), store, chain: ChainFile::default(), invariant_checks: 0 };

    let n = cfg.validators;
    let mut adversaries = Vec::new();
    let mut branches = match cfg.scenario {
        Scenario::ConflictingFinality => {
            let (shared, first, _) = coalition_split(n, cfg.coalition.unwrap_or_else(|| minimal_coalition(n)));
            adversaries = (0..shared).collect();
            let one: BTreeSet<_> = (0..shared + first).collect();
            let two: BTreeSet<_> = (0..shared).chain(shared + first..n).collect();
            vec![Branch::new(genesis_root, 1, Some(one)), Branch::new(genesis_root, 2, Some(two))]
        }
        _ => vec![Branch::new(genesis_root, 1, None)],
    };

    let spe = preset.slots_per_epoch;
    let double_vote_slot = (cfg.scenario == Scenario::DoubleVote).then(|| spe + 1 + sim.rng.below(spe));
    let double_voter = sim.rng.below(n);
    let mut fork_point = None;
    let last = cfg.last_slot().expect("validated");

    for slot in 1..=last {
        for branch in branches.iter_mut().filter(|b| slot >= b.start) {
            let inject = if Some(slot) == double_vote_slot {
                let members = sim.members(&sim.forwarded(branch.tip, slot)?, slot - 1, 0)?;
                let who = members[(double_voter % members.len() as u64) as usize];
                adversaries.push(who);
                Some(who)
            } else {
                None
            };
            let root = sim.step(branch, slot, inject)?;
            if slot == 1 {
                fork_point = Some(root);
            }
        }
        if cfg.scenario == Scenario::Surround && slot == SURROUND_EPOCH * spe + 1 {
            adversaries.push(sim.surround_block(fork_point.expect("slot 1 was proposed"))?);
        }
        if !cfg.check_every_block && (slot % spe == 0 || slot == last) {
            sim.check_invariants(slot)?;
        }
    }

    let head = sim.store.get_head();
    let report = SimReport {
        scenario: cfg.scenario,
        seed: cfg.seed,
        validators: n,
        epochs: cfg.epochs,
        blocks: sim.chain.blocks.len(),
        head,
        head_slot: sim.store.blocks()[&head].slot,
        justified: sim.store.justified_checkpoint(),
        finalized: sim.store.finalized_checkpoint(),
        branch_finalized: branches.iter().map(|b| sim.store.post_states()[&b.tip].finalized_checkpoint).collect(),
        invariant_checks: sim.invariant_checks,
        adversaries,
    };
    Ok(SimOutput { genesis, chain: sim.chain, store: sim.store, report })
}
