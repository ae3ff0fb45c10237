//! Committee assignment and the committee-size bounds analysis.
//!
//! Committees are contiguous slices of the ascending active-index sequence
//! (no shuffling). Position `k` of the `T` committees in an epoch receives
//! `floor(V(k+1)/T) - floor(Vk/T)` validators, so every committee has either
//! `floor(V/T)` or `ceil(V/T)` members. Once the per-slot committee count is
//! clamped at its maximum, growing `V` grows committees past the aggregation
//! bitlist capacity; [`check_committee_bounds`] reports exactly where.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::arith::{CommitteeIndex, Epoch, Slot, ValidatorIndex};
use crate::preset::Preset;
use crate::types::{epoch_of, AttestationData, BeaconState};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CommitteeError {
    #[error("committee index {index} out of range: {count} committees per slot")]
    IndexOutOfRange { index: u64, count: u64 },
    #[error("committee ({slot}, {index}) has {size} members, above the cap of {max}")]
    OversizedCommittee { slot: Slot, index: CommitteeIndex, size: u64, max: u64 },
    #[error("committee ({slot}, {index}) is empty")]
    EmptyCommittee { slot: Slot, index: CommitteeIndex },
    #[error("aggregation bits have length {bits}, committee has {committee} members")]
    BitsLengthMismatch { bits: usize, committee: usize },
}

impl CommitteeError {
    pub fn code(&self) -> &'static str {
        match self {
            CommitteeError::IndexOutOfRange { .. } => "IndexOutOfRange",
            CommitteeError::OversizedCommittee { .. } => "OversizedCommittee",
            CommitteeError::EmptyCommittee { .. } => "EmptyCommittee",
            CommitteeError::BitsLengthMismatch { .. } => "BitsLengthMismatch",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommitteeAssignment {
    pub slot: Slot,
    pub index: CommitteeIndex,
    pub members: Vec<ValidatorIndex>,
}

pub fn get_active_validator_indices(state: &BeaconState, epoch: Epoch) -> Vec<ValidatorIndex> {
    state
        .validators
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_active_at(epoch))
        .map(|(i, _)| i as ValidatorIndex)
        .collect()
}

pub fn get_committee_count_per_slot(active_validators: u64, preset: &Preset) -> u64 {
    (active_validators / preset.slots_per_epoch / preset.target_committee_size)
        .clamp(1, preset.max_committees_per_slot)
}

/// Bounds of slice `k` of `total` over `len` items.
fn slice_bounds(len: u64, total: u64, k: u64) -> (u64, u64) {
    let at = |i: u64| (len as u128 * i as u128 / total as u128) as u64;
    (at(k), at(k + 1))
}

pub fn compute_committee(
    indices: &[ValidatorIndex],
    total_committees: u64,
    k: u64,
) -> Result<Vec<ValidatorIndex>, CommitteeError> {
    if k >= total_committees {
        return Err(CommitteeError::IndexOutOfRange { index: k, count: total_committees });
    }
    let (start, end) = slice_bounds(indices.len() as u64, total_committees, k);
    Ok(indices[start as usize..end as usize].to_vec())
}

/// Active set of one epoch, from which every committee of that epoch is cut.
#[derive(Debug, Clone)]
pub struct EpochCommittees {
    pub epoch: Epoch,
    pub active: Vec<ValidatorIndex>,
    pub count_per_slot: u64,
    slots_per_epoch: u64,
    max_size: u64,
}

impl EpochCommittees {
    pub fn new(state: &BeaconState, epoch: Epoch, preset: &Preset) -> Self {
        Self::from_active(get_active_validator_indices(state, epoch), epoch, preset)
    }

    pub fn from_active(active: Vec<ValidatorIndex>, epoch: Epoch, preset: &Preset) -> Self {
        EpochCommittees {
            epoch,
            count_per_slot: get_committee_count_per_slot(active.len() as u64, preset),
            active,
            slots_per_epoch: preset.slots_per_epoch,
            max_size: preset.max_validators_per_committee,
        }
    }

    pub fn total(&self) -> u64 {
        self.count_per_slot * self.slots_per_epoch
    }

    /// Committee for `(slot, index)`; `slot` must lie in this epoch.
    pub fn committee(&self, slot: Slot, index: CommitteeIndex) -> Result<CommitteeAssignment, CommitteeError> {
        debug_assert_eq!(slot / self.slots_per_epoch, self.epoch);
        if index >= self.count_per_slot {
            return Err(CommitteeError::IndexOutOfRange { index, count: self.count_per_slot });
        }
        let position = (slot % self.slots_per_epoch) * self.count_per_slot + index;
        let members = compute_committee(&self.active, self.total(), position)?;
        let size = members.len() as u64;
        if size == 0 {
            return Err(CommitteeError::EmptyCommittee { slot, index });
        }
        if size > self.max_size {
            return Err(CommitteeError::OversizedCommittee { slot, index, size, max: self.max_size });
        }
        Ok(CommitteeAssignment { slot, index, members })
    }
}

pub fn get_beacon_committee(
    state: &BeaconState,
    slot: Slot,
    index: CommitteeIndex,
    preset: &Preset,
) -> Result<CommitteeAssignment, CommitteeError> {
    EpochCommittees::new(state, epoch_of(slot, preset), preset).committee(slot, index)
}

pub fn attesting_indices_in(
    committee: &CommitteeAssignment,
    bits: &[bool],
) -> Result<BTreeSet<ValidatorIndex>, CommitteeError> {
    if bits.len() != committee.members.len() {
        return Err(CommitteeError::BitsLengthMismatch { bits: bits.len(), committee: committee.members.len() });
    }
    Ok(committee.members.iter().zip(bits).filter(|(_, &b)| b).map(|(&v, _)| v).collect())
}

/// Committee members whose aggregation bit is set.
pub fn get_attesting_indices(
    state: &BeaconState,
    data: &AttestationData,
    bits: &[bool],
    preset: &Preset,
) -> Result<BTreeSet<ValidatorIndex>, CommitteeError> {
    attesting_indices_in(&get_beacon_committee(state, data.slot, data.index, preset)?, bits)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundsWitness {
    pub slot: Slot,
    pub index: CommitteeIndex,
    pub size: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundsVerdict {
    Safe,
    ExistsViolation(BoundsWitness),
    AllViolate(BoundsWitness),
}

impl BoundsVerdict {
    pub fn label(&self) -> &'static str {
        match self {
            BoundsVerdict::Safe => "SAFE",
            BoundsVerdict::ExistsViolation(_) => "EXISTS_VIOLATION",
            BoundsVerdict::AllViolate(_) => "ALL_VIOLATE",
        }
    }

    pub fn witness(&self) -> Option<BoundsWitness> {
        match self {
            BoundsVerdict::Safe => None,
            BoundsVerdict::ExistsViolation(w) | BoundsVerdict::AllViolate(w) => Some(*w),
        }
    }
}

impl fmt::Display for BoundsVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())?;
        if let Some(w) = self.witness() {
            write!(f, " slot={} index={} size={}", w.slot, w.index, w.size)?;
        }
        Ok(())
    }
}

/// Verdict on whether every committee of an epoch with `active` validators has
/// between 1 and `max_validators_per_committee` members.
///
/// Witness slots are offsets within the epoch. Runs in constant time: sizes take
/// only the values `q = V / T` and `q + 1`, and the first position holding the
/// larger size is `ceil(T / r) - 1` for `r = V mod T`.
pub fn check_committee_bounds(active: u64, preset: &Preset) -> BoundsVerdict {
    let count = get_committee_count_per_slot(active, preset);
    let total = count * preset.slots_per_epoch;
    let (q, r) = (active / total, active % total);
    let bad = |size: u64| size == 0 || size > preset.max_validators_per_committee;
    let witness = |k: u64, size: u64| BoundsWitness { slot: k / count, index: k % count, size };

    // position 0 always holds q because r < total
    let small_bad = bad(q);
    let large_bad = r == 0 || bad(q + 1);
    match (small_bad, large_bad) {
        (false, false) => BoundsVerdict::Safe,
        (true, true) => BoundsVerdict::AllViolate(witness(0, q)),
        (true, false) => BoundsVerdict::ExistsViolation(witness(0, q)),
        (false, true) if r == 0 => BoundsVerdict::Safe,
        (false, true) => BoundsVerdict::ExistsViolation(witness(total.div_ceil(r) - 1, q + 1)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundsThresholds {
    /// Smallest active count giving every committee a member.
    pub safe_min: u64,
    /// Largest active count keeping every committee within the cap.
    pub safe_max: u64,
    /// Smallest active count at which every committee exceeds the cap.
    pub all_violate_min: u64,
}

/// Threshold values implied by the preset, valid when committees at the
/// clamp point are already larger than `target_committee_size`.
pub fn bounds_thresholds(preset: &Preset) -> BoundsThresholds {
    let per_epoch = preset.max_committees_per_epoch();
    BoundsThresholds {
        safe_min: preset.slots_per_epoch,
        safe_max: preset.max_validators_per_committee * per_epoch,
        all_violate_min: (preset.max_validators_per_committee + 1) * per_epoch,
    }
}
