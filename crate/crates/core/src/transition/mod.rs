//! The beacon state transition.
//!
//! Two layers compute the same function. The imperative layer ([`state_transition`],
//! [`process_slots`], [`process_block`]) advances a private working copy in place,
//! step by step. The functional layer ([`next_slot`], [`forward_state_to_slot`],
//! [`update_block`]) composes pure state-to-state functions. Both take the input
//! state by reference and hand back a new one, so a rejected transition never
//! changes the caller's state.

pub mod epoch;
mod functional;

use thiserror::Error;

pub use functional::{forward_state_to_slot, functional_transition, next_slot, update_block};

use crate::arith::{self, ArithmeticOverflow, Slot};
use crate::committees::{get_committee_count_per_slot, CommitteeError, EpochCommittees};
use crate::preset::{Preset, JUSTIFICATION_BITS_LENGTH};
use crate::ssz::SszType;
use crate::types::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttestationFault {
    WrongEpoch,
    TooEarly,
    TooLate,
    BadIndex,
    BitsLengthMismatch,
    WrongSource,
    /// The carried inclusion delay differs from the block slot minus the attestation slot.
    WrongInclusionDelay,
    /// The epoch pool is at its list capacity.
    PoolFull,
    /// The block carries more attestations than `max_attestations`.
    TooMany,
}

impl AttestationFault {
    pub fn code(&self) -> &'static str {
        match self {
            AttestationFault::WrongEpoch => "WrongEpoch",
            AttestationFault::TooEarly => "TooEarly",
            AttestationFault::TooLate => "TooLate",
            AttestationFault::BadIndex => "BadIndex",
            AttestationFault::BitsLengthMismatch => "BitsLengthMismatch",
            AttestationFault::WrongSource => "WrongSource",
            AttestationFault::WrongInclusionDelay => "WrongInclusionDelay",
            AttestationFault::PoolFull => "PoolFull",
            AttestationFault::TooMany => "TooMany",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransitionError {
    #[error("target slot {target} is not ahead of state slot {current}")]
    SlotNotAhead { current: Slot, target: Slot },
    #[error("target slot {target} is more than {max} slots past state slot {current}")]
    SlotTooFar { current: Slot, target: Slot, max: u64 },
    #[error("block slot {block} does not fit state slot {state} after header slot {header}")]
    HeaderSlotMismatch { state: Slot, block: Slot, header: Slot },
    #[error("block parent root {got} differs from latest header root {expected}")]
    ParentRootMismatch { expected: Root, got: Root },
    #[error("block state root {got} differs from computed post-state root {expected}")]
    StateRootMismatch { expected: Root, got: Root },
    #[error("block signature rejected")]
    BadSignature,
    #[error("attestation {position}: {fault:?}: {detail}")]
    BadAttestation { position: usize, fault: AttestationFault, detail: String },
    #[error("{validators} validators but {balances} balances")]
    RegistryMismatch { validators: usize, balances: usize },
    #[error(transparent)]
    ArithmeticOverflow(#[from] ArithmeticOverflow),
    #[error(transparent)]
    CommitteeError(#[from] CommitteeError),
}

impl TransitionError {
    /// Machine-readable code, e.g. `BadAttestation(TooEarly)`.
    pub fn code(&self) -> String {
        match self {
            TransitionError::SlotNotAhead { .. } => "SlotNotAhead".into(),
            TransitionError::SlotTooFar { .. } => "SlotTooFar".into(),
            TransitionError::HeaderSlotMismatch { .. } => "HeaderSlotMismatch".into(),
            TransitionError::ParentRootMismatch { .. } => "ParentRootMismatch".into(),
            TransitionError::StateRootMismatch { .. } => "StateRootMismatch".into(),
            TransitionError::BadSignature => "BadSignature".into(),
            TransitionError::BadAttestation { fault, .. } => format!("BadAttestation({})", fault.code()),
            TransitionError::RegistryMismatch { .. } => "RegistryMismatch".into(),
            TransitionError::ArithmeticOverflow(_) => "ArithmeticOverflow".into(),
            TransitionError::CommitteeError(e) => format!("CommitteeError({})", e.code()),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GenesisError {
    #[error("genesis needs at least one validator")]
    EmptyRegistry,
    #[error("validator at position {position} carries index {index}")]
    IndexMismatch { position: usize, index: u64 },
    #[error("validator {0} exits before it activates")]
    InvalidValidator(u64),
}

pub fn genesis_state(validators: Vec<Validator>, preset: &Preset) -> Result<BeaconState, GenesisError> {
    if validators.is_empty() {
        return Err(GenesisError::EmptyRegistry);
    }
    for (position, v) in validators.iter().enumerate() {
        if v.index != position as u64 {
            return Err(GenesisError::IndexMismatch { position, index: v.index });
        }
        if v.activation_epoch > v.exit_epoch {
            return Err(GenesisError::InvalidValidator(v.index));
        }
    }
    let ring = vec![Root::ZERO; preset.slots_per_historical_root as usize];
    Ok(BeaconState {
        slot: 0,
        latest_block_header: BeaconBlockHeader::default(),
        block_roots: ring.clone(),
        state_roots: ring,
        balances: validators.iter().map(|v| v.effective_balance).collect(),
        validators,
        previous_epoch_attestations: Vec::new(),
        current_epoch_attestations: Vec::new(),
        justification_bits: [false; JUSTIFICATION_BITS_LENGTH],
        previous_justified_checkpoint: Checkpoint::default(),
        current_justified_checkpoint: Checkpoint::default(),
        finalized_checkpoint: Checkpoint::default(),
    })
}

/// Genesis with `n` equal-stake validators active from epoch 0.
pub fn genesis_with_validators(n: u64, preset: &Preset) -> Result<BeaconState, GenesisError> {
    genesis_state((0..n).map(|i| Validator::genesis(i, preset.effective_balance_per_validator)).collect(), preset)
}

fn check_registry(state: &BeaconState) -> Result<(), TransitionError> {
    if state.validators.len() != state.balances.len() {
        return Err(TransitionError::RegistryMismatch {
            validators: state.validators.len(),
            balances: state.balances.len(),
        });
    }
    Ok(())
}

/// Counters from an instrumented run of [`process_slots`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SlotTrace {
    pub iterations: u64,
    pub epoch_transitions: u64,
}

fn ring_index(slot: Slot, preset: &Preset) -> usize {
    (slot % preset.slots_per_historical_root) as usize
}

fn process_slot_in_place(state: &mut BeaconState, preset: &Preset) {
    let previous_state_root = state.tree_root(preset);
    let i = ring_index(state.slot, preset);
    state.state_roots[i] = previous_state_root;
    if state.latest_block_header.state_root.is_zero() {
        state.latest_block_header.state_root = previous_state_root;
    }
    state.block_roots[i] = state.latest_block_header.tree_root(preset);
}

/// Caches the state and header roots of the current slot.
pub fn process_slot(state: &BeaconState, preset: &Preset) -> Result<BeaconState, TransitionError> {
    let mut next = state.clone();
    process_slot_in_place(&mut next, preset);
    Ok(next)
}

pub(crate) fn check_slot_advance(current: Slot, target: Slot, preset: &Preset) -> Result<(), TransitionError> {
    if target <= current {
        return Err(TransitionError::SlotNotAhead { current, target });
    }
    if target - current > preset.max_slot_advance {
        return Err(TransitionError::SlotTooFar { current, target, max: preset.max_slot_advance });
    }
    Ok(())
}

fn process_slots_in_place(
    state: &mut BeaconState,
    slot: Slot,
    preset: &Preset,
    trace: &mut SlotTrace,
) -> Result<(), TransitionError> {
    check_slot_advance(state.slot, slot, preset)?;
    while state.slot < slot {
        process_slot_in_place(state, preset);
        let next = arith::checked_add(state.slot, 1)?;
        if next % preset.slots_per_epoch == 0 {
            epoch::apply_epoch(state, preset)?;
            trace.epoch_transitions += 1;
        }
        state.slot = next;
        trace.iterations += 1;
    }
    Ok(())
}

pub fn process_slots(state: &BeaconState, slot: Slot, preset: &Preset) -> Result<BeaconState, TransitionError> {
    process_slots_traced(state, slot, preset).map(|(s, _)| s)
}

/// [`process_slots`] plus loop counters.
pub fn process_slots_traced(
    state: &BeaconState,
    slot: Slot,
    preset: &Preset,
) -> Result<(BeaconState, SlotTrace), TransitionError> {
    check_registry(state)?;
    let mut next = state.clone();
    let mut trace = SlotTrace::default();
    process_slots_in_place(&mut next, slot, preset, &mut trace)?;
    Ok((next, trace))
}

pub fn process_epoch(state: &BeaconState, preset: &Preset) -> Result<BeaconState, TransitionError> {
    check_registry(state)?;
    let mut next = state.clone();
    epoch::apply_epoch(&mut next, preset)?;
    Ok(next)
}

/// Header checks; returns the header to install.
pub(crate) fn check_block_header(
    state: &BeaconState,
    block: &BeaconBlock,
    preset: &Preset,
) -> Result<BeaconBlockHeader, TransitionError> {
    if block.slot != state.slot || block.slot <= state.latest_block_header.slot {
        return Err(TransitionError::HeaderSlotMismatch {
            state: state.slot,
            block: block.slot,
            header: state.latest_block_header.slot,
        });
    }
    let expected = state.latest_block_header.tree_root(preset);
    if block.parent_root != expected {
        return Err(TransitionError::ParentRootMismatch { expected, got: block.parent_root });
    }
    Ok(BeaconBlockHeader { slot: block.slot, parent_root: block.parent_root, state_root: Root::ZERO })
}

pub fn process_block_header(
    state: &BeaconState,
    block: &BeaconBlock,
    preset: &Preset,
) -> Result<BeaconState, TransitionError> {
    let header = check_block_header(state, block, preset)?;
    Ok(BeaconState { latest_block_header: header, ..state.clone() })
}

/// Which epoch pool a validated attestation joins.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Pool {
    Current,
    Previous,
}

/// Validates an attestation against `state`; returns the pool it joins and the
/// pending record to append.
pub(crate) fn check_attestation(
    state: &BeaconState,
    attestation: &PendingAttestation,
    position: usize,
    preset: &Preset,
) -> Result<(Pool, PendingAttestation), TransitionError> {
    let bad = |fault, detail: String| TransitionError::BadAttestation { position, fault, detail };
    let data = &attestation.data;
    let current = state.current_epoch(preset);
    let previous = state.previous_epoch(preset);

    if data.target.epoch != current && data.target.epoch != previous {
        return Err(bad(
            AttestationFault::WrongEpoch,
            format!("target epoch {} is neither {current} nor {previous}", data.target.epoch),
        ));
    }
    if data.target.epoch != epoch_of(data.slot, preset) {
        return Err(bad(
            AttestationFault::WrongEpoch,
            format!("target epoch {} does not contain slot {}", data.target.epoch, data.slot),
        ));
    }
    if arith::checked_add(data.slot, preset.min_attestation_inclusion_delay)? > state.slot {
        return Err(bad(AttestationFault::TooEarly, format!("slot {} included at {}", data.slot, state.slot)));
    }
    if state.slot > arith::checked_add(data.slot, preset.slots_per_epoch)? {
        return Err(bad(AttestationFault::TooLate, format!("slot {} included at {}", data.slot, state.slot)));
    }

    let delay = arith::checked_sub(state.slot, data.slot)?;
    if attestation.inclusion_delay != delay {
        return Err(bad(
            AttestationFault::WrongInclusionDelay,
            format!("carries delay {} but is included {delay} slots late", attestation.inclusion_delay),
        ));
    }

    let committees = EpochCommittees::new(state, data.target.epoch, preset);
    if data.index >= committees.count_per_slot {
        return Err(bad(
            AttestationFault::BadIndex,
            format!("index {} with {} committees per slot", data.index, committees.count_per_slot),
        ));
    }
    let committee = committees.committee(data.slot, data.index)?;
    if attestation.aggregation_bits.len() != committee.members.len() {
        return Err(bad(
            AttestationFault::BitsLengthMismatch,
            format!("{} bits for {} members", attestation.aggregation_bits.len(), committee.members.len()),
        ));
    }

    let (pool, expected_source, len) = if data.target.epoch == current {
        (Pool::Current, state.current_justified_checkpoint, state.current_epoch_attestations.len())
    } else {
        (Pool::Previous, state.previous_justified_checkpoint, state.previous_epoch_attestations.len())
    };
    if data.source != expected_source {
        return Err(bad(
            AttestationFault::WrongSource,
            format!("source ({}) but justified is ({})", data.source, expected_source),
        ));
    }
    if len as u64 >= preset.epoch_pool_limit() {
        return Err(bad(AttestationFault::PoolFull, format!("{len} attestations already pooled")));
    }
    Ok((pool, attestation.clone()))
}

fn pool_mut(state: &mut BeaconState, pool: Pool) -> &mut Vec<PendingAttestation> {
    match pool {
        Pool::Current => &mut state.current_epoch_attestations,
        Pool::Previous => &mut state.previous_epoch_attestations,
    }
}

fn process_attestation_in_place(
    state: &mut BeaconState,
    attestation: &PendingAttestation,
    position: usize,
    preset: &Preset,
) -> Result<(), TransitionError> {
    let (pool, pending) = check_attestation(state, attestation, position, preset)?;
    pool_mut(state, pool).push(pending);
    Ok(())
}

pub fn process_attestation(
    state: &BeaconState,
    attestation: &PendingAttestation,
    preset: &Preset,
) -> Result<BeaconState, TransitionError> {
    let mut next = state.clone();
    process_attestation_in_place(&mut next, attestation, 0, preset)?;
    Ok(next)
}

pub(crate) fn check_attestation_count(block: &BeaconBlock, preset: &Preset) -> Result<(), TransitionError> {
    if block.attestations.len() as u64 > preset.max_attestations {
        return Err(TransitionError::BadAttestation {
            position: block.attestations.len() - 1,
            fault: AttestationFault::TooMany,
            detail: format!("{} attestations, cap {}", block.attestations.len(), preset.max_attestations),
        });
    }
    Ok(())
}

fn process_block_in_place(state: &mut BeaconState, block: &BeaconBlock, preset: &Preset) -> Result<(), TransitionError> {
    check_attestation_count(block, preset)?;
    state.latest_block_header = check_block_header(state, block, preset)?;
    for (position, attestation) in block.attestations.iter().enumerate() {
        process_attestation_in_place(state, attestation, position, preset)?;
    }
    Ok(())
}

pub fn process_block(state: &BeaconState, block: &BeaconBlock, preset: &Preset) -> Result<BeaconState, TransitionError> {
    check_registry(state)?;
    let mut next = state.clone();
    process_block_in_place(&mut next, block, preset)?;
    Ok(next)
}

/// Block signature predicate. Blocks carry no signatures here, so the default accepts all.
pub trait SignatureVerifier {
    fn verify(&self, state: &BeaconState, block: &BeaconBlock) -> bool;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AcceptAllSignatures;

impl SignatureVerifier for AcceptAllSignatures {
    fn verify(&self, _: &BeaconState, _: &BeaconBlock) -> bool {
        true
    }
}

impl<F: Fn(&BeaconState, &BeaconBlock) -> bool> SignatureVerifier for F {
    fn verify(&self, state: &BeaconState, block: &BeaconBlock) -> bool {
        self(state, block)
    }
}

pub fn state_transition(
    state: &BeaconState,
    block: &BeaconBlock,
    validate_result: bool,
    preset: &Preset,
) -> Result<BeaconState, TransitionError> {
    state_transition_with(state, block, validate_result, preset, &AcceptAllSignatures)
}

pub fn state_transition_with(
    state: &BeaconState,
    block: &BeaconBlock,
    validate_result: bool,
    preset: &Preset,
    signatures: &dyn SignatureVerifier,
) -> Result<BeaconState, TransitionError> {
    check_registry(state)?;
    let mut next = state.clone();
    process_slots_in_place(&mut next, block.slot, preset, &mut SlotTrace::default())?;
    if validate_result && !signatures.verify(&next, block) {
        return Err(TransitionError::BadSignature);
    }
    process_block_in_place(&mut next, block, preset)?;
    if validate_result {
        let expected = next.tree_root(preset);
        if block.state_root != expected {
            return Err(TransitionError::StateRootMismatch { expected, got: block.state_root });
        }
    }
    Ok(next)
}

/// True when every pooled attestation targets its pool's epoch and names a
/// committee index that exists at its slot.
pub fn is_valid_state_epoch_attestations(state: &BeaconState, preset: &Preset) -> bool {
    let pools = [
        (&state.current_epoch_attestations, state.current_epoch(preset)),
        (&state.previous_epoch_attestations, state.previous_epoch(preset)),
    ];
    pools.iter().all(|(pool, epoch)| {
        pool.iter().all(|a| {
            let data_epoch = epoch_of(a.data.slot, preset);
            let active = crate::committees::get_active_validator_indices(state, data_epoch).len() as u64;
            a.data.target.epoch == *epoch && data_epoch == *epoch && a.data.index < get_committee_count_per_slot(active, preset)
        })
    })
}

/// A block is valid for `state` exactly when the validated transition succeeds.
pub fn is_valid_block(state: &BeaconState, block: &BeaconBlock, preset: &Preset) -> bool {
    state_transition(state, block, true, preset).is_ok()
}
