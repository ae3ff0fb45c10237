//! Epoch-boundary processing: justification, finalization, the fixed-unit
//! reward step, and attestation pool rotation.

use std::collections::BTreeSet;

use super::TransitionError;
use crate::arith::{self, Epoch, Gwei, ValidatorIndex};
use crate::committees::{get_active_validator_indices, get_attesting_indices};
use crate::preset::Preset;
use crate::types::{BeaconState, Checkpoint, PendingAttestation};

/// Validators whose pooled attestations vote for the boundary root of `epoch`.
pub fn matching_target_attesters(
    state: &BeaconState,
    pool: &[PendingAttestation],
    epoch: Epoch,
    preset: &Preset,
) -> Result<BTreeSet<ValidatorIndex>, TransitionError> {
    let Some(root) = state.block_root(epoch, preset) else {
        return Ok(BTreeSet::new());
    };
    let mut out = BTreeSet::new();
    for a in pool.iter().filter(|a| a.data.target == Checkpoint { epoch, root }) {
        out.extend(get_attesting_indices(state, &a.data, &a.aggregation_bits, preset)?);
    }
    Ok(out)
}

fn stake_of(state: &BeaconState, indices: impl IntoIterator<Item = ValidatorIndex>) -> Result<Gwei, TransitionError> {
    let mut total = 0;
    for i in indices {
        let v = state.validators.get(i as usize).ok_or(TransitionError::RegistryMismatch {
            validators: state.validators.len(),
            balances: state.balances.len(),
        })?;
        total = arith::checked_add(total, v.effective_balance)?;
    }
    Ok(total)
}

/// Whether `attesting * 3 >= total * 2`, failing on overflow.
fn is_supermajority(attesting: Gwei, total: Gwei) -> Result<bool, TransitionError> {
    Ok(arith::checked_mul(attesting, 3)? >= arith::checked_mul(total, 2)?)
}

pub fn process_justification_and_finalization(state: &mut BeaconState, preset: &Preset) -> Result<(), TransitionError> {
    let current = state.current_epoch(preset);
    let previous = state.previous_epoch(preset);
    let total = stake_of(state, get_active_validator_indices(state, current))?;
    let previous_target =
        stake_of(state, matching_target_attesters(state, &state.previous_epoch_attestations, previous, preset)?)?;
    let current_target =
        stake_of(state, matching_target_attesters(state, &state.current_epoch_attestations, current, preset)?)?;

    let old_previous_justified = state.previous_justified_checkpoint;
    let old_current_justified = state.current_justified_checkpoint;

    state.previous_justified_checkpoint = state.current_justified_checkpoint;
    state.justification_bits.rotate_right(1);
    state.justification_bits[0] = false;
    if is_supermajority(previous_target, total)? {
        if let Some(root) = state.block_root(previous, preset) {
            state.current_justified_checkpoint = Checkpoint { epoch: previous, root };
            state.justification_bits[1] = true;
        }
    }
    if is_supermajority(current_target, total)? {
        if let Some(root) = state.block_root(current, preset) {
            state.current_justified_checkpoint = Checkpoint { epoch: current, root };
            state.justification_bits[0] = true;
        }
    }

    let bits = state.justification_bits;
    let plus = |c: &Checkpoint, k: u64| c.epoch.checked_add(k) == Some(current);
    // 2nd, 3rd and 4th most recent epochs justified, the 2nd sourced from the 4th
    if bits[1..4].iter().all(|&b| b) && plus(&old_previous_justified, 3) {
        state.finalized_checkpoint = old_previous_justified;
    }
    // 2nd and 3rd justified, the 2nd sourced from the 3rd
    if bits[1..3].iter().all(|&b| b) && plus(&old_previous_justified, 2) {
        state.finalized_checkpoint = old_previous_justified;
    }
    // 1st, 2nd and 3rd justified, the 1st sourced from the 3rd
    if bits[0..3].iter().all(|&b| b) && plus(&old_current_justified, 2) {
        state.finalized_checkpoint = old_current_justified;
    }
    // 1st and 2nd justified, the 1st sourced from the 2nd
    if bits[0..2].iter().all(|&b| b) && plus(&old_current_justified, 1) {
        state.finalized_checkpoint = old_current_justified;
    }
    Ok(())
}

/// Simplified rewards: `+reward_unit` for each active validator that voted for
/// the previous epoch's target, `-reward_unit` (floored at zero) for the rest.
pub fn process_rewards(state: &mut BeaconState, preset: &Preset) -> Result<(), TransitionError> {
    let previous = state.previous_epoch(preset);
    let attesters = matching_target_attesters(state, &state.previous_epoch_attestations, previous, preset)?;
    let mismatch =
        TransitionError::RegistryMismatch { validators: state.validators.len(), balances: state.balances.len() };
    for i in get_active_validator_indices(state, previous) {
        let balance = state.balances.get_mut(i as usize).ok_or_else(|| mismatch.clone())?;
        *balance = if attesters.contains(&i) {
            arith::checked_add(*balance, preset.reward_unit)?
        } else {
            balance.saturating_sub(preset.reward_unit)
        };
    }
    Ok(())
}

pub fn rotate_attestation_pools(state: &mut BeaconState) {
    state.previous_epoch_attestations = std::mem::take(&mut state.current_epoch_attestations);
}

/// Full boundary step, applied in place.
pub fn apply_epoch(state: &mut BeaconState, preset: &Preset) -> Result<(), TransitionError> {
    process_justification_and_finalization(state, preset)?;
    process_rewards(state, preset)?;
    rotate_attestation_pools(state);
    Ok(())
}
