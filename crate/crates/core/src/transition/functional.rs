//! Pure formulation of the transition as a composition of state functions.
//!
//! Every function here maps a state value to a new state value without
//! mutating its input. Results agree with the imperative path exactly; the
//! integration tests compare the two on random chains.

use super::{
    check_attestation, check_attestation_count, check_block_header, check_registry, check_slot_advance, epoch, Pool,
    TransitionError,
};
use crate::arith;
use crate::preset::Preset;
use crate::ssz::SszType;
use crate::types::{BeaconBlock, BeaconState, PendingAttestation, Root};

fn with_ring_entry(ring: &[Root], i: usize, root: Root) -> Vec<Root> {
    ring.iter().enumerate().map(|(j, r)| if j == i { root } else { *r }).collect()
}

fn cache_roots(s: &BeaconState, preset: &Preset) -> BeaconState {
    let state_root = s.tree_root(preset);
    let i = (s.slot % preset.slots_per_historical_root) as usize;
    let header = if s.latest_block_header.state_root.is_zero() {
        crate::types::BeaconBlockHeader { state_root, ..s.latest_block_header.clone() }
    } else {
        s.latest_block_header.clone()
    };
    let block_root = header.tree_root(preset);
    BeaconState {
        state_roots: with_ring_entry(&s.state_roots, i, state_root),
        block_roots: with_ring_entry(&s.block_roots, i, block_root),
        latest_block_header: header,
        ..s.clone()
    }
}

fn boundary(s: BeaconState, preset: &Preset) -> Result<BeaconState, TransitionError> {
    let next = arith::checked_add(s.slot, 1)?;
    if next % preset.slots_per_epoch != 0 {
        return Ok(s);
    }
    let mut out = s;
    epoch::apply_epoch(&mut out, preset)?;
    Ok(out)
}

/// Advances exactly one slot, running the epoch step when a boundary is crossed.
pub fn next_slot(s: &BeaconState, preset: &Preset) -> Result<BeaconState, TransitionError> {
    check_registry(s)?;
    let processed = boundary(cache_roots(s, preset), preset)?;
    Ok(BeaconState { slot: arith::checked_add(processed.slot, 1)?, ..processed })
}

/// Identity when `slot` equals the state's slot, otherwise [`next_slot`] iterated.
pub fn forward_state_to_slot(s: &BeaconState, slot: u64, preset: &Preset) -> Result<BeaconState, TransitionError> {
    if slot == s.slot {
        return Ok(s.clone());
    }
    check_slot_advance(s.slot, slot, preset)?;
    (s.slot..slot).try_fold(s.clone(), |acc, _| next_slot(&acc, preset))
}

fn append(pool: &[PendingAttestation], a: PendingAttestation) -> Vec<PendingAttestation> {
    pool.iter().cloned().chain(std::iter::once(a)).collect()
}

fn apply_attestation(
    s: BeaconState,
    (position, a): (usize, &PendingAttestation),
    preset: &Preset,
) -> Result<BeaconState, TransitionError> {
    let (pool, pending) = check_attestation(&s, a, position, preset)?;
    Ok(match pool {
        Pool::Current => BeaconState { current_epoch_attestations: append(&s.current_epoch_attestations, pending), ..s },
        Pool::Previous => {
            BeaconState { previous_epoch_attestations: append(&s.previous_epoch_attestations, pending), ..s }
        }
    })
}

/// Applies a block to a state already at the block's slot: header first, then
/// each attestation in order.
pub fn update_block(s: &BeaconState, b: &BeaconBlock, preset: &Preset) -> Result<BeaconState, TransitionError> {
    check_registry(s)?;
    check_attestation_count(b, preset)?;
    let header = check_block_header(s, b, preset)?;
    let with_header = BeaconState { latest_block_header: header, ..s.clone() };
    b.attestations.iter().enumerate().try_fold(with_header, |acc, item| apply_attestation(acc, item, preset))
}

/// `update_block(forward_state_to_slot(next_slot(s), b.slot), b)`, with the
/// state-root check when `validate_result` is set.
pub fn functional_transition(
    s: &BeaconState,
    b: &BeaconBlock,
    validate_result: bool,
    preset: &Preset,
) -> Result<BeaconState, TransitionError> {
    check_slot_advance(s.slot, b.slot, preset)?;
    let forwarded = forward_state_to_slot(&next_slot(s, preset)?, b.slot, preset)?;
    let post = update_block(&forwarded, b, preset)?;
    if validate_result {
        let expected = post.tree_root(preset);
        if b.state_root != expected {
            return Err(TransitionError::StateRootMismatch { expected, got: b.state_root });
        }
    }
    Ok(post)
}
