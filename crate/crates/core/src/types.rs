//! Domain types of the beacon state machine.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::arith::{self, ArithmeticOverflow, Epoch, Gwei, Slot, ValidatorIndex, FAR_FUTURE_EPOCH};
use crate::preset::{Preset, JUSTIFICATION_BITS_LENGTH};

/// An opaque 32-byte digest.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Root(pub [u8; 32]);

impl Root {
    pub const ZERO: Root = Root([0; 32]);

    pub fn is_zero(&self) -> bool {
        self.0 == [0; 32]
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }
}

impl fmt::Display for Root {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{}", hex::encode(self.0))
    }
}

impl fmt::Debug for Root {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Root(0x{}..)", hex::encode(&self.0[..4]))
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid root `{0}`: expected 0x-prefixed 64 hex digits")]
pub struct RootParseError(String);

impl FromStr for Root {
    type Err = RootParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let digits = s.strip_prefix("0x").ok_or_else(|| RootParseError(s.to_string()))?;
        let mut out = [0u8; 32];
        hex::decode_to_slice(digits, &mut out).map_err(|_| RootParseError(s.to_string()))?;
        Ok(Root(out))
    }
}

impl Serialize for Root {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Root {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Bit sequences travel through JSON as strings of `0`/`1`, index 0 first.
pub mod bit_string {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn to_string(bits: &[bool]) -> String {
        bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    pub fn parse(s: &str) -> Option<Vec<bool>> {
        s.chars()
            .map(|c| match c {
                '0' => Some(false),
                '1' => Some(true),
                _ => None,
            })
            .collect()
    }

    pub fn serialize<S: Serializer, B: AsRef<[bool]>>(bits: &B, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&to_string(bits.as_ref()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>, B: TryFrom<Vec<bool>>>(d: D) -> Result<B, D::Error> {
        let s = String::deserialize(d)?;
        let bits = parse(&s).ok_or_else(|| serde::de::Error::custom("bit string may only hold 0 and 1"))?;
        B::try_from(bits).map_err(|_| serde::de::Error::custom("bit string has the wrong length"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Validator {
    pub index: ValidatorIndex,
    pub effective_balance: Gwei,
    pub activation_epoch: Epoch,
    pub exit_epoch: Epoch,
}

impl Validator {
    /// A validator of the fixed registry: active from genesis, never exiting.
    pub fn genesis(index: ValidatorIndex, effective_balance: Gwei) -> Self {
        Validator { index, effective_balance, activation_epoch: 0, exit_epoch: FAR_FUTURE_EPOCH }
    }

    pub fn is_active_at(&self, epoch: Epoch) -> bool {
        self.activation_epoch <= epoch && epoch < self.exit_epoch
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct Checkpoint {
    pub epoch: Epoch,
    pub root: Root,
}

impl fmt::Display for Checkpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.epoch, self.root)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AttestationData {
    pub slot: Slot,
    pub index: u64,
    pub beacon_block_root: Root,
    pub source: Checkpoint,
    pub target: Checkpoint,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PendingAttestation {
    #[serde(with = "bit_string")]
    pub aggregation_bits: Vec<bool>,
    pub data: AttestationData,
    pub inclusion_delay: Slot,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BeaconBlockHeader {
    pub slot: Slot,
    pub parent_root: Root,
    pub state_root: Root,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeaconBlock {
    pub slot: Slot,
    pub parent_root: Root,
    pub state_root: Root,
    pub attestations: Vec<PendingAttestation>,
}

impl BeaconBlock {
    pub fn header(&self) -> BeaconBlockHeader {
        BeaconBlockHeader { slot: self.slot, parent_root: self.parent_root, state_root: self.state_root }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeaconState {
    pub slot: Slot,
    pub latest_block_header: BeaconBlockHeader,
    pub block_roots: Vec<Root>,
    pub state_roots: Vec<Root>,
    pub validators: Vec<Validator>,
    pub balances: Vec<Gwei>,
    pub previous_epoch_attestations: Vec<PendingAttestation>,
    pub current_epoch_attestations: Vec<PendingAttestation>,
    #[serde(with = "bit_string")]
    pub justification_bits: [bool; JUSTIFICATION_BITS_LENGTH],
    pub previous_justified_checkpoint: Checkpoint,
    pub current_justified_checkpoint: Checkpoint,
    pub finalized_checkpoint: Checkpoint,
}

pub fn epoch_of(slot: Slot, preset: &Preset) -> Epoch {
    slot / preset.slots_per_epoch
}

pub fn epoch_start_slot(epoch: Epoch, preset: &Preset) -> Result<Slot, ArithmeticOverflow> {
    arith::checked_mul(epoch, preset.slots_per_epoch)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("validator index {index} out of range for registry of {len}")]
pub struct IndexOutOfRange {
    pub index: u64,
    pub len: usize,
}

/// Lowers a balance by `delta`, flooring at zero.
pub fn decrease_balance(
    state: &BeaconState,
    index: ValidatorIndex,
    delta: Gwei,
) -> Result<BeaconState, IndexOutOfRange> {
    let mut next = state.clone();
    let len = next.balances.len();
    let balance = usize::try_from(index)
        .ok()
        .and_then(|i| next.balances.get_mut(i))
        .ok_or(IndexOutOfRange { index, len })?;
    *balance = balance.saturating_sub(delta);
    Ok(next)
}

impl BeaconState {
    pub fn current_epoch(&self, preset: &Preset) -> Epoch {
        epoch_of(self.slot, preset)
    }

    /// The epoch before the current one, clamped at genesis.
    pub fn previous_epoch(&self, preset: &Preset) -> Epoch {
        self.current_epoch(preset).saturating_sub(1)
    }

    /// Root of the latest block at or before `slot`, from the history ring.
    ///
    /// Only defined for `slot < self.slot` within the last ring length of slots.
    pub fn block_root_at_slot(&self, slot: Slot, preset: &Preset) -> Option<Root> {
        if slot >= self.slot || self.slot - slot > preset.slots_per_historical_root {
            return None;
        }
        self.block_roots.get((slot % preset.slots_per_historical_root) as usize).copied()
    }

    /// Epoch-boundary root: the block root at the first slot of `epoch`.
    pub fn block_root(&self, epoch: Epoch, preset: &Preset) -> Option<Root> {
        self.block_root_at_slot(epoch_start_slot(epoch, preset).ok()?, preset)
    }

    pub fn total_balance(&self) -> Result<Gwei, ArithmeticOverflow> {
        arith::checked_sum(self.balances.iter().copied())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state_with_balances(balances: Vec<Gwei>) -> BeaconState {
        let preset = Preset::minimal();
        BeaconState {
            slot: 0,
            latest_block_header: BeaconBlockHeader::default(),
            block_roots: vec![Root::ZERO; preset.slots_per_historical_root as usize],
            state_roots: vec![Root::ZERO; preset.slots_per_historical_root as usize],
            validators: (0..balances.len() as u64).map(|i| Validator::genesis(i, 32)).collect(),
            balances,
            previous_epoch_attestations: vec![],
            current_epoch_attestations: vec![],
            justification_bits: [false; 4],
            previous_justified_checkpoint: Checkpoint::default(),
            current_justified_checkpoint: Checkpoint::default(),
            finalized_checkpoint: Checkpoint::default(),
        }
    }

    #[test]
    fn epoch_of_boundaries() {
        let p = Preset::default();
        assert_eq!(epoch_of(0, &p), 0);
        assert_eq!(epoch_of(31, &p), 0);
        assert_eq!(epoch_of(32, &p), 1);
        assert_eq!(epoch_of(u64::MAX, &p), u64::MAX / 32);
    }

    #[test]
    fn decrease_balance_floors_at_zero() {
        let s = state_with_balances(vec![10, 3, 0]);
        assert_eq!(decrease_balance(&s, 0, 3).unwrap().balances, vec![7, 3, 0]);
        assert_eq!(decrease_balance(&s, 1, 10).unwrap().balances, vec![10, 0, 0]);
        assert_eq!(decrease_balance(&s, 2, 0).unwrap().balances, vec![10, 3, 0]);
        assert_eq!(decrease_balance(&s, 3, 1), Err(IndexOutOfRange { index: 3, len: 3 }));
        assert_eq!(decrease_balance(&s, u64::MAX, 1).unwrap_err().index, u64::MAX);
        // input untouched
        assert_eq!(s.balances, vec![10, 3, 0]);
    }

    #[test]
    fn root_text_round_trip() {
        let r = Root([0xab; 32]);
        let text = r.to_string();
        assert_eq!(text.len(), 66);
        assert_eq!(text.parse::<Root>().unwrap(), r);
        assert!("ab".parse::<Root>().is_err());
        assert!(format!("0x{}", "zz".repeat(32)).parse::<Root>().is_err());
    }

    #[test]
    fn block_root_lookup_window() {
        let p = Preset::minimal();
        let mut s = state_with_balances(vec![1]);
        s.slot = 10;
        s.block_roots[8] = Root([8; 32]);
        assert_eq!(s.block_root(1, &p), Some(Root([8; 32])));
        assert_eq!(s.block_root_at_slot(10, &p), None);
        assert_eq!(s.block_root(2, &p), None);
    }

    #[test]
    fn json_shapes() {
        let a = PendingAttestation {
            aggregation_bits: vec![true, false, true],
            data: AttestationData {
                slot: 1,
                index: 0,
                beacon_block_root: Root::ZERO,
                source: Checkpoint::default(),
                target: Checkpoint::default(),
            },
            inclusion_delay: 1,
        };
        let json = serde_json::to_value(&a).unwrap();
        assert_eq!(json["aggregation_bits"], "101");
        let back: PendingAttestation = serde_json::from_value(json).unwrap();
        assert_eq!(back, a);
    }
}
