//! FFG votes over a block tree: justification and finalization by
//! supermajority links, plus double-vote and surround-vote detection.
//!
//! Every validator carries one unit of stake, so a link is a supermajority
//! when at least two thirds of the registry cast it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::arith::ValidatorIndex;
use crate::committees::{get_attesting_indices, CommitteeError};
use crate::fork_choice::Store;
use crate::types::{Checkpoint, Root};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FfgVote {
    pub validator: ValidatorIndex,
    pub source: Checkpoint,
    pub target: Checkpoint,
}

impl fmt::Display for FfgVote {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:({} -> {})", self.validator, self.source, self.target)
    }
}

/// Two votes by the same validator that together break a slashing rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Evidence {
    pub validator: ValidatorIndex,
    /// For surround evidence, the outer vote.
    pub first: FfgVote,
    pub second: FfgVote,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SlashingReport {
    pub double_votes: BTreeSet<Evidence>,
    pub surround_votes: BTreeSet<Evidence>,
    pub slashable: BTreeSet<ValidatorIndex>,
}

impl SlashingReport {
    pub fn from_votes(votes: &[FfgVote]) -> SlashingReport {
        let double_votes = detect_double_votes(votes);
        let surround_votes = detect_surround_votes(votes);
        let slashable = double_votes.iter().chain(&surround_votes).map(|e| e.validator).collect();
        SlashingReport { double_votes, surround_votes, slashable }
    }

    pub fn is_empty(&self) -> bool {
        self.slashable.is_empty()
    }
}

impl fmt::Display for SlashingReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.double_votes {
            writeln!(f, "DOUBLE_VOTE {} {} {}", e.validator, e.first, e.second)?;
        }
        for e in &self.surround_votes {
            writeln!(f, "SURROUND_VOTE {} {} {}", e.validator, e.first, e.second)?;
        }
        let list: Vec<String> = self.slashable.iter().map(u64::to_string).collect();
        writeln!(f, "SLASHABLE {} [{}]", self.slashable.len(), list.join(","))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FfgError {
    #[error("checkpoints do not conflict: {0}")]
    NotConflicting(String),
    #[error(transparent)]
    CommitteeError(#[from] CommitteeError),
}

impl FfgError {
    pub fn code(&self) -> String {
        match self {
            FfgError::NotConflicting(_) => "NotConflicting".into(),
            FfgError::CommitteeError(e) => format!("CommitteeError({})", e.code()),
        }
    }
}

/// The genesis checkpoint as states record it before any justification has
/// named a root.
fn canonical(c: Checkpoint, genesis_root: Root) -> Checkpoint {
    if c.epoch == 0 && c.root.is_zero() {
        Checkpoint { epoch: 0, root: genesis_root }
    } else {
        c
    }
}

/// Every distinct vote found in the attestation pools of the stored
/// post-states, sorted. Votes whose source is not before the target carry no
/// FFG meaning and are left out.
pub fn extract_ffg_votes(store: &Store) -> Result<Vec<FfgVote>, CommitteeError> {
    let genesis = store.genesis_root();
    let mut votes = BTreeSet::new();
    for state in store.post_states().values() {
        let pools = state.previous_epoch_attestations.iter().chain(&state.current_epoch_attestations);
        for a in pools {
            let source = canonical(a.data.source, genesis);
            let target = canonical(a.data.target, genesis);
            if source.epoch >= target.epoch {
                continue;
            }
            for validator in get_attesting_indices(state, &a.data, &a.aggregation_bits, store.preset())? {
                votes.insert(FfgVote { validator, source, target });
            }
        }
    }
    Ok(votes.into_iter().collect())
}

fn supermajority(voters: usize, n: u64) -> bool {
    voters as u128 * 3 >= n as u128 * 2
}

pub fn is_supermajority_link(votes: &[FfgVote], source: Checkpoint, target: Checkpoint, n: u64) -> bool {
    let voters: BTreeSet<ValidatorIndex> =
        votes.iter().filter(|v| v.source == source && v.target == target).map(|v| v.validator).collect();
    supermajority(voters.len(), n)
}

/// Supermajority links, as `(source, target)` pairs in ascending order.
pub fn supermajority_links(votes: &[FfgVote], n: u64) -> Vec<(Checkpoint, Checkpoint)> {
    let mut voters: BTreeMap<(Checkpoint, Checkpoint), BTreeSet<ValidatorIndex>> = BTreeMap::new();
    for v in votes {
        voters.entry((v.source, v.target)).or_default().insert(v.validator);
    }
    voters.into_iter().filter(|(_, set)| supermajority(set.len(), n)).map(|(link, _)| link).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FfgStatus {
    pub justified: BTreeSet<Checkpoint>,
    pub finalized: BTreeSet<Checkpoint>,
    /// Passes over the link set until nothing changed, the last pass included.
    pub iterations: usize,
    /// Distinct checkpoints mentioned by any vote, plus genesis.
    pub checkpoints: usize,
}

impl fmt::Display for FfgStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.justified {
            writeln!(f, "JUSTIFIED {c}")?;
        }
        for c in &self.finalized {
            writeln!(f, "FINALIZED {c}")?;
        }
        Ok(())
    }
}

/// Registry size used as the stake denominator.
pub fn registry_size(store: &Store) -> u64 {
    store.genesis_state().map_or(0, |s| s.validators.len() as u64)
}

pub fn compute_justified_finalized(store: &Store) -> Result<FfgStatus, CommitteeError> {
    Ok(justified_finalized_from_votes(store, &extract_ffg_votes(store)?))
}

/// Fixpoint over a given vote set. Finalizes a justified `c` when a
/// supermajority link leads from it to a checkpoint one epoch later, or two
/// epochs later with the boundary checkpoint in between also justified.
pub fn justified_finalized_from_votes(store: &Store, votes: &[FfgVote]) -> FfgStatus {
    let genesis = Checkpoint { epoch: 0, root: store.genesis_root() };
    let links = supermajority_links(votes, registry_size(store));
    let checkpoints = votes
        .iter()
        .flat_map(|v| [v.source, v.target])
        .chain(std::iter::once(genesis))
        .collect::<BTreeSet<_>>()
        .len();

    let mut justified = BTreeSet::from([genesis]);
    let mut iterations = 0;
    loop {
        iterations += 1;
        let before = justified.len();
        for (s, t) in &links {
            if justified.contains(s) {
                justified.insert(*t);
            }
        }
        if justified.len() == before {
            break;
        }
    }

    let mut finalized = BTreeSet::from([genesis]);
    for (s, t) in &links {
        if !justified.contains(s) {
            continue;
        }
        let direct = t.epoch == s.epoch + 1;
        let skip_one = t.epoch == s.epoch + 2
            && store
                .boundary_root(t.root, s.epoch + 1)
                .is_some_and(|root| justified.contains(&Checkpoint { epoch: s.epoch + 1, root }));
        if direct || skip_one {
            finalized.insert(*s);
        }
    }
    FfgStatus { justified, finalized, iterations, checkpoints }
}

fn by_validator(votes: &[FfgVote]) -> BTreeMap<ValidatorIndex, BTreeSet<FfgVote>> {
    let mut out: BTreeMap<ValidatorIndex, BTreeSet<FfgVote>> = BTreeMap::new();
    for v in votes {
        out.entry(v.validator).or_default().insert(*v);
    }
    out
}

/// Distinct votes by one validator for the same target epoch.
pub fn detect_double_votes(votes: &[FfgVote]) -> BTreeSet<Evidence> {
    let mut out = BTreeSet::new();
    for (validator, own) in by_validator(votes) {
        let own: Vec<FfgVote> = own.into_iter().collect();
        for (i, a) in own.iter().enumerate() {
            for b in &own[i + 1..] {
                if a.target.epoch == b.target.epoch {
                    out.insert(Evidence { validator, first: *a, second: *b });
                }
            }
        }
    }
    out
}

/// Vote pairs where one span strictly contains the other.
pub fn detect_surround_votes(votes: &[FfgVote]) -> BTreeSet<Evidence> {
    let mut out = BTreeSet::new();
    for (validator, own) in by_validator(votes) {
        for outer in &own {
            for inner in &own {
                if outer.source.epoch < inner.source.epoch && inner.target.epoch < outer.target.epoch {
                    out.insert(Evidence { validator, first: *outer, second: *inner });
                }
            }
        }
    }
    out
}

/// Slashing evidence behind two conflicting finalized checkpoints.
///
/// Fails unless both checkpoints are finalized and neither root lies on the
/// other's chain.
pub fn accountable_safety_check(store: &Store, c1: Checkpoint, c2: Checkpoint) -> Result<SlashingReport, FfgError> {
    let votes = extract_ffg_votes(store)?;
    let status = justified_finalized_from_votes(store, &votes);
    for c in [c1, c2] {
        if !status.finalized.contains(&c) {
            return Err(FfgError::NotConflicting(format!("({c}) is not finalized")));
        }
    }
    if store.is_ancestor(c1.root, c2.root) || store.is_ancestor(c2.root, c1.root) {
        return Err(FfgError::NotConflicting(format!("({c1}) and ({c2}) share a chain")));
    }
    Ok(SlashingReport::from_votes(&votes))
}

/// Some pair of finalized checkpoints on distinct branches, if one exists.
pub fn find_conflicting_finalized(store: &Store, status: &FfgStatus) -> Option<(Checkpoint, Checkpoint)> {
    let finalized: Vec<Checkpoint> = status.finalized.iter().copied().collect();
    for (i, a) in finalized.iter().enumerate() {
        for b in &finalized[i + 1..] {
            if !store.is_ancestor(a.root, b.root) && !store.is_ancestor(b.root, a.root) {
                return Some((*a, *b));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cp(epoch: u64, tag: u8) -> Checkpoint {
        Checkpoint { epoch, root: Root([tag; 32]) }
    }

    fn vote(validator: u64, s: Checkpoint, t: Checkpoint) -> FfgVote {
        FfgVote { validator, source: s, target: t }
    }

    #[test]
    fn supermajority_threshold_is_exact() {
        let (s, t) = (cp(0, 0), cp(1, 1));
        let votes = |k: u64| (0..k).map(|v| vote(v, s, t)).collect::<Vec<_>>();
        assert!(is_supermajority_link(&votes(2), s, t, 3));
        assert!(!is_supermajority_link(&votes(1), s, t, 3));
        for n in 1..=60u64 {
            for k in 0..=n {
                assert_eq!(is_supermajority_link(&votes(k), s, t, n), k * 3 >= n * 2, "n={n} k={k}");
            }
        }
        let mut dup = votes(1);
        dup.push(dup[0]);
        assert!(!is_supermajority_link(&dup, s, t, 3));
    }

    #[test]
    fn double_votes_by_definition() {
        let honest = vec![vote(1, cp(0, 0), cp(1, 1)), vote(1, cp(1, 1), cp(2, 2)), vote(2, cp(0, 0), cp(1, 1))];
        assert!(detect_double_votes(&honest).is_empty());
        let bad = vec![vote(4, cp(1, 1), cp(2, 2)), vote(4, cp(1, 1), cp(2, 3))];
        let found = detect_double_votes(&bad);
        assert_eq!(found.len(), 1);
        assert_eq!(found.iter().next().unwrap().validator, 4);
        let other_source = vec![vote(4, cp(0, 0), cp(2, 2)), vote(4, cp(1, 1), cp(2, 2))];
        assert_eq!(detect_double_votes(&other_source).len(), 1);
    }

    #[test]
    fn surround_votes_by_definition() {
        let s = vec![vote(7, cp(0, 0), cp(3, 3)), vote(7, cp(1, 1), cp(2, 2))];
        let found = detect_surround_votes(&s);
        assert_eq!(found.len(), 1);
        assert_eq!(found.iter().next().unwrap().first.target.epoch, 3);
        let chained = vec![vote(7, cp(0, 0), cp(1, 1)), vote(7, cp(1, 1), cp(2, 2))];
        assert!(detect_surround_votes(&chained).is_empty());
        let split = vec![vote(7, cp(0, 0), cp(3, 3)), vote(8, cp(1, 1), cp(2, 2))];
        assert!(detect_surround_votes(&split).is_empty());
    }

    #[test]
    fn report_lists_each_offender_once() {
        let votes = vec![
            vote(1, cp(1, 1), cp(2, 2)),
            vote(1, cp(1, 1), cp(2, 3)),
            vote(1, cp(0, 0), cp(3, 3)),
            vote(2, cp(0, 0), cp(1, 1)),
        ];
        let r = SlashingReport::from_votes(&votes);
        assert_eq!(r.slashable, BTreeSet::from([1]));
        assert!(r.to_string().contains("SLASHABLE 1 [1]"));
    }
}
