//! Simulation dumps: a directory holding the genesis state, the chain file,
//! the preset, and the run report.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::{ChainFile, ChainFileError, SimOutput};
use crate::fork_choice::{ForkChoiceError, Store};
use crate::preset::{Preset, PresetError};
use crate::ssz::{DecodeError, SszType};
use crate::types::BeaconState;

pub const GENESIS_FILE: &str = "genesis.ssz";
pub const CHAIN_FILE: &str = "chain.bchn";
pub const PRESET_FILE: &str = "preset.txt";
pub const REPORT_FILE: &str = "report.txt";

#[derive(Debug, Error)]
pub enum DumpError {
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error(transparent)]
    Preset(#[from] PresetError),
    #[error("genesis state does not decode: {0}")]
    Genesis(DecodeError),
    #[error(transparent)]
    Chain(#[from] ChainFileError),
    #[error("block {index}: {error}")]
    Block { index: usize, error: ForkChoiceError },
}

impl DumpError {
    pub fn code(&self) -> String {
        match self {
            DumpError::Io { .. } => "Io".into(),
            DumpError::Preset(_) => "BadPreset".into(),
            DumpError::Genesis(_) => "MalformedEncoding".into(),
            DumpError::Chain(e) => e.code().into(),
            DumpError::Block { error, .. } => error.code(),
        }
    }
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> DumpError + '_ {
    move |e| DumpError::Io { path: path.to_path_buf(), message: e.to_string() }
}

pub fn write_dump(dir: &Path, out: &SimOutput) -> Result<(), DumpError> {
    let preset = out.store.preset();
    fs::create_dir_all(dir).map_err(io(dir))?;
    let files: [(&str, Vec<u8>); 4] = [
        (GENESIS_FILE, out.genesis.to_ssz_bytes(preset)),
        (CHAIN_FILE, out.chain.encode(preset)),
        (PRESET_FILE, preset.to_text().into_bytes()),
        (REPORT_FILE, out.report.to_string().into_bytes()),
    ];
    for (name, bytes) in files {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(io(&path))?;
    }
    Ok(())
}

/// The inputs needed to rebuild a store.
#[derive(Debug, Clone)]
pub struct Dump {
    pub preset: Preset,
    pub genesis: BeaconState,
    pub chain: ChainFile,
}

impl Dump {
    /// Replays every block through the store in file order.
    pub fn build_store(&self) -> Result<Store, DumpError> {
        let mut store = Store::init(self.genesis.clone(), self.preset)
            .map_err(|error| DumpError::Block { index: 0, error })?;
        for (index, block) in self.chain.blocks.iter().enumerate() {
            store.on_block(block.clone()).map_err(|error| DumpError::Block { index, error })?;
        }
        Ok(store)
    }
}

pub fn load_dump(dir: &Path) -> Result<Dump, DumpError> {
    let preset_path = dir.join(PRESET_FILE);
    let preset = if preset_path.exists() { Preset::load(&preset_path)? } else { Preset::default() };
    let genesis_path = dir.join(GENESIS_FILE);
    let bytes = fs::read(&genesis_path).map_err(io(&genesis_path))?;
    let genesis = BeaconState::from_ssz_bytes(&bytes, &preset).map_err(DumpError::Genesis)?;
    let chain_path = dir.join(CHAIN_FILE);
    let bytes = fs::read(&chain_path).map_err(io(&chain_path))?;
    let chain = ChainFile::decode(&bytes, &preset)?;
    Ok(Dump { preset, genesis, chain })
}
