//! Deterministic chain simulator, chain replay, and on-disk dumps.

mod chainfile;
mod dump;
mod rng;
mod scenario;

use thiserror::Error;

pub use chainfile::{ChainFile, ChainFileError, MAGIC, VERSION};
pub use dump::{load_dump, write_dump, Dump, DumpError};
pub use rng::SplitMix64;
pub use scenario::{coalition_split, minimal_coalition, simulate, Participation, Scenario, SimConfig, SimError, SimOutput, SimReport};

use crate::preset::Preset;
use crate::transition::{state_transition, TransitionError};
use crate::types::BeaconState;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("block {index} rejected: {error}")]
pub struct ReplayError {
    pub index: usize,
    pub error: TransitionError,
}

/// Folds the state transition over `chain`, stopping at the first rejected block.
pub fn replay(
    genesis: &BeaconState,
    chain: &ChainFile,
    verify_root: bool,
    preset: &Preset,
) -> Result<BeaconState, ReplayError> {
    chain.blocks.iter().enumerate().try_fold(genesis.clone(), |state, (index, block)| {
        state_transition(&state, block, verify_root, preset).map_err(|error| ReplayError { index, error })
    })
}
