//! The chain file: a length-delimited sequence of SSZ blocks.
//!
//! Layout: `"BCHN"`, version byte `0x01`, block count (u32 LE), then per block
//! its byte length (u32 LE) followed by the encoded block.

use std::path::Path;

use thiserror::Error;

use crate::preset::Preset;
use crate::ssz::{DecodeError, SszType};
use crate::types::BeaconBlock;

pub const MAGIC: &[u8; 4] = b"BCHN";
pub const VERSION: u8 = 0x01;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChainFileError {
    #[error("missing BCHN magic")]
    BadMagic,
    #[error("unsupported chain file version {0:#04x}")]
    BadVersion(u8),
    #[error("file ends inside record {index}")]
    Truncated { index: usize },
    #[error("block {index} does not decode: {error}")]
    Block { index: usize, error: DecodeError },
    #[error("{0} bytes after the last record")]
    TrailingBytes(usize),
    #[error("block {index} has slot {slot}, below the previous block's {previous}")]
    SlotOrder { index: usize, slot: u64, previous: u64 },
    #[error("{0}")]
    Io(String),
}

impl ChainFileError {
    pub fn code(&self) -> &'static str {
        match self {
            ChainFileError::Block { .. } => "MalformedEncoding",
            ChainFileError::Io(_) => "Io",
            _ => "MalformedChainFile",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ChainFile {
    pub blocks: Vec<BeaconBlock>,
}

impl ChainFile {
    pub fn encode(&self, preset: &Preset) -> Vec<u8> {
        let mut out = Vec::with_capacity(9);
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.extend_from_slice(&(self.blocks.len() as u32).to_le_bytes());
        for block in &self.blocks {
            let bytes = block.to_ssz_bytes(preset);
            out.extend_from_slice(&(bytes.len() as u32).to_le_bytes());
            out.extend_from_slice(&bytes);
        }
        out
    }

    /// Splits the file into raw block records without decoding them.
    pub fn records(bytes: &[u8]) -> Result<Vec<&[u8]>, ChainFileError> {
        if bytes.len() < 4 || &bytes[..4] != MAGIC {
            return Err(ChainFileError::BadMagic);
        }
        let version = *bytes.get(4).ok_or(ChainFileError::Truncated { index: 0 })?;
        if version != VERSION {
            return Err(ChainFileError::BadVersion(version));
        }
        let mut rest = &bytes[5..];
        let count = take_u32(&mut rest).ok_or(ChainFileError::Truncated { index: 0 })?;
        let mut records = Vec::new();
        for index in 0..count as usize {
            let len = take_u32(&mut rest).ok_or(ChainFileError::Truncated { index })? as usize;
            if rest.len() < len {
                return Err(ChainFileError::Truncated { index });
            }
            let (record, tail) = rest.split_at(len);
            records.push(record);
            rest = tail;
        }
        if !rest.is_empty() {
            return Err(ChainFileError::TrailingBytes(rest.len()));
        }
        Ok(records)
    }

    pub fn decode(bytes: &[u8], preset: &Preset) -> Result<ChainFile, ChainFileError> {
        let mut blocks: Vec<BeaconBlock> = Vec::new();
        for (index, record) in Self::records(bytes)?.into_iter().enumerate() {
            let block =
                BeaconBlock::from_ssz_bytes(record, preset).map_err(|error| ChainFileError::Block { index, error })?;
            if let Some(previous) = blocks.last() {
                if block.slot < previous.slot {
                    return Err(ChainFileError::SlotOrder { index, slot: block.slot, previous: previous.slot });
                }
            }
            blocks.push(block);
        }
        Ok(ChainFile { blocks })
    }

    pub fn read(path: &Path, preset: &Preset) -> Result<ChainFile, ChainFileError> {
        let bytes = std::fs::read(path).map_err(|e| ChainFileError::Io(format!("{}: {e}", path.display())))?;
        Self::decode(&bytes, preset)
    }
}

fn take_u32(rest: &mut &[u8]) -> Option<u32> {
    let (head, tail) = rest.split_first_chunk::<4>()?;
    *rest = tail;
    Some(u32::from_le_bytes(*head))
}
