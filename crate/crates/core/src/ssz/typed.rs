//! Mapping between domain types and [`SszValue`] trees.

use super::codec::{decode, encode, DecodeError};
use super::value::{Kind, SszValue};
use crate::merkle::{hash_tree_root, Hasher, Sha256Hasher};
use crate::preset::{Preset, JUSTIFICATION_BITS_LENGTH};
use crate::types::*;

pub trait SszType: Sized {
    fn kind(preset: &Preset) -> Kind;
    fn to_ssz(&self, preset: &Preset) -> SszValue;
    fn from_ssz(value: SszValue) -> Result<Self, DecodeError>;

    fn to_ssz_bytes(&self, preset: &Preset) -> Vec<u8> {
        encode(&self.to_ssz(preset))
    }

    fn from_ssz_bytes(bytes: &[u8], preset: &Preset) -> Result<Self, DecodeError> {
        Self::from_ssz(decode(bytes, &Self::kind(preset))?)
    }

    fn tree_root_with(&self, preset: &Preset, hasher: &dyn Hasher) -> Root {
        hash_tree_root(&self.to_ssz(preset), hasher)
    }

    /// `hash_tree_root` under the default SHA-256 hasher.
    fn tree_root(&self, preset: &Preset) -> Root {
        self.tree_root_with(preset, &Sha256Hasher)
    }
}

fn shape(what: &str) -> DecodeError {
    DecodeError::Shape(what.to_string())
}

/// Pulls the fields out of a container value, checking the field count.
fn fields<const N: usize>(value: SszValue, name: &str) -> Result<[SszValue; N], DecodeError> {
    match value {
        SszValue::Container(f) => f.try_into().map_err(|_| shape(name)),
        _ => Err(shape(name)),
    }
}

fn u64_of(value: SszValue) -> Result<u64, DecodeError> {
    match value {
        SszValue::Uint64(v) => Ok(v),
        _ => Err(shape("uint64")),
    }
}

fn root_of(value: SszValue) -> Result<Root, DecodeError> {
    match value {
        SszValue::Bytes32(r) => Ok(r),
        _ => Err(shape("bytes32")),
    }
}

fn elements_of(value: SszValue) -> Result<Vec<SszValue>, DecodeError> {
    match value {
        SszValue::List { elements, .. } | SszValue::Vector { elements, .. } => Ok(elements),
        _ => Err(shape("sequence")),
    }
}

fn list_of<T: SszType>(items: &[T], max_length: u64, preset: &Preset) -> SszValue {
    SszValue::List {
        element: T::kind(preset),
        max_length,
        elements: items.iter().map(|i| i.to_ssz(preset)).collect(),
    }
}

fn roots_vector(roots: &[Root]) -> SszValue {
    SszValue::Vector { element: Kind::Bytes32, elements: roots.iter().map(|r| SszValue::Bytes32(*r)).collect() }
}

impl SszType for u64 {
    fn kind(_: &Preset) -> Kind {
        Kind::Uint64
    }
    fn to_ssz(&self, _: &Preset) -> SszValue {
        SszValue::Uint64(*self)
    }
    fn from_ssz(value: SszValue) -> Result<Self, DecodeError> {
        u64_of(value)
    }
}

impl SszType for bool {
    fn kind(_: &Preset) -> Kind {
        Kind::Boolean
    }
    fn to_ssz(&self, _: &Preset) -> SszValue {
        SszValue::Boolean(*self)
    }
    fn from_ssz(value: SszValue) -> Result<Self, DecodeError> {
        match value {
            SszValue::Boolean(b) => Ok(b),
            _ => Err(shape("boolean")),
        }
    }
}

impl SszType for Root {
    fn kind(_: &Preset) -> Kind {
        Kind::Bytes32
    }
    fn to_ssz(&self, _: &Preset) -> SszValue {
        SszValue::Bytes32(*self)
    }
    fn from_ssz(value: SszValue) -> Result<Self, DecodeError> {
        root_of(value)
    }
}

impl SszType for Checkpoint {
    fn kind(_: &Preset) -> Kind {
        Kind::Container(vec![Kind::Uint64, Kind::Bytes32])
    }
    fn to_ssz(&self, _: &Preset) -> SszValue {
        SszValue::Container(vec![SszValue::Uint64(self.epoch), SszValue::Bytes32(self.root)])
    }
    fn from_ssz(value: SszValue) -> Result<Self, DecodeError> {
        let [epoch, root] = fields(value, "Checkpoint")?;
        Ok(Checkpoint { epoch: u64_of(epoch)?, root: root_of(root)? })
    }
}

impl SszType for Validator {
    fn kind(_: &Preset) -> Kind {
        Kind::Container(vec![Kind::Uint64; 4])
    }
    fn to_ssz(&self, _: &Preset) -> SszValue {
        SszValue::Container(
            [self.index, self.effective_balance, self.activation_epoch, self.exit_epoch]
                .map(SszValue::Uint64)
                .to_vec(),
        )
    }
    fn from_ssz(value: SszValue) -> Result<Self, DecodeError> {
        let [index, effective_balance, activation_epoch, exit_epoch] = fields(value, "Validator")?.map(u64_of);
        Ok(Validator {
            index: index?,
            effective_balance: effective_balance?,
            activation_epoch: activation_epoch?,
            exit_epoch: exit_epoch?,
        })
    }
}

impl SszType for AttestationData {
    fn kind(p: &Preset) -> Kind {
        Kind::Container(vec![Kind::Uint64, Kind::Uint64, Kind::Bytes32, Checkpoint::kind(p), Checkpoint::kind(p)])
    }
    fn to_ssz(&self, p: &Preset) -> SszValue {
        SszValue::Container(vec![
            SszValue::Uint64(self.slot),
            SszValue::Uint64(self.index),
            SszValue::Bytes32(self.beacon_block_root),
            self.source.to_ssz(p),
            self.target.to_ssz(p),
        ])
    }
    fn from_ssz(value: SszValue) -> Result<Self, DecodeError> {
        let [slot, index, head, source, target] = fields(value, "AttestationData")?;
        Ok(AttestationData {
            slot: u64_of(slot)?,
            index: u64_of(index)?,
            beacon_block_root: root_of(head)?,
            source: Checkpoint::from_ssz(source)?,
            target: Checkpoint::from_ssz(target)?,
        })
    }
}

impl SszType for PendingAttestation {
    fn kind(p: &Preset) -> Kind {
        Kind::Container(vec![
            Kind::BitList { max_length: p.max_validators_per_committee },
            AttestationData::kind(p),
            Kind::Uint64,
        ])
    }
    fn to_ssz(&self, p: &Preset) -> SszValue {
        SszValue::Container(vec![
            SszValue::BitList { max_length: p.max_validators_per_committee, bits: self.aggregation_bits.clone() },
            self.data.to_ssz(p),
            SszValue::Uint64(self.inclusion_delay),
        ])
    }
    fn from_ssz(value: SszValue) -> Result<Self, DecodeError> {
        let [bits, data, delay] = fields(value, "PendingAttestation")?;
        let SszValue::BitList { bits, .. } = bits else {
            return Err(shape("aggregation_bits"));
        };
        Ok(PendingAttestation {
            aggregation_bits: bits,
            data: AttestationData::from_ssz(data)?,
            inclusion_delay: u64_of(delay)?,
        })
    }
}

impl SszType for BeaconBlockHeader {
    fn kind(_: &Preset) -> Kind {
        Kind::Container(vec![Kind::Uint64, Kind::Bytes32, Kind::Bytes32])
    }
    fn to_ssz(&self, _: &Preset) -> SszValue {
        SszValue::Container(vec![
            SszValue::Uint64(self.slot),
            SszValue::Bytes32(self.parent_root),
            SszValue::Bytes32(self.state_root),
        ])
    }
    fn from_ssz(value: SszValue) -> Result<Self, DecodeError> {
        let [slot, parent, state] = fields(value, "BeaconBlockHeader")?;
        Ok(BeaconBlockHeader { slot: u64_of(slot)?, parent_root: root_of(parent)?, state_root: root_of(state)? })
    }
}

impl SszType for BeaconBlock {
    fn kind(p: &Preset) -> Kind {
        Kind::Container(vec![
            Kind::Uint64,
            Kind::Bytes32,
            Kind::Bytes32,
            Kind::list(PendingAttestation::kind(p), p.max_attestations),
        ])
    }
    fn to_ssz(&self, p: &Preset) -> SszValue {
        SszValue::Container(vec![
            SszValue::Uint64(self.slot),
            SszValue::Bytes32(self.parent_root),
            SszValue::Bytes32(self.state_root),
            list_of(&self.attestations, p.max_attestations, p),
        ])
    }
    fn from_ssz(value: SszValue) -> Result<Self, DecodeError> {
        let [slot, parent, state, atts] = fields(value, "BeaconBlock")?;
        Ok(BeaconBlock {
            slot: u64_of(slot)?,
            parent_root: root_of(parent)?,
            state_root: root_of(state)?,
            attestations: elements_of(atts)?.into_iter().map(PendingAttestation::from_ssz).collect::<Result<_, _>>()?,
        })
    }
}

impl SszType for BeaconState {
    fn kind(p: &Preset) -> Kind {
        let pool = Kind::list(PendingAttestation::kind(p), p.epoch_pool_limit());
        Kind::Container(vec![
            Kind::Uint64,
            BeaconBlockHeader::kind(p),
            Kind::vector(Kind::Bytes32, p.slots_per_historical_root),
            Kind::vector(Kind::Bytes32, p.slots_per_historical_root),
            Kind::list(Validator::kind(p), p.validator_registry_limit),
            Kind::list(Kind::Uint64, p.validator_registry_limit),
            pool.clone(),
            pool,
            Kind::BitVector { length: JUSTIFICATION_BITS_LENGTH as u64 },
            Checkpoint::kind(p),
            Checkpoint::kind(p),
            Checkpoint::kind(p),
        ])
    }

    fn to_ssz(&self, p: &Preset) -> SszValue {
        let pool = p.epoch_pool_limit();
        SszValue::Container(vec![
            SszValue::Uint64(self.slot),
            self.latest_block_header.to_ssz(p),
            roots_vector(&self.block_roots),
            roots_vector(&self.state_roots),
            list_of(&self.validators, p.validator_registry_limit, p),
            list_of(&self.balances, p.validator_registry_limit, p),
            list_of(&self.previous_epoch_attestations, pool, p),
            list_of(&self.current_epoch_attestations, pool, p),
            SszValue::BitVector { bits: self.justification_bits.to_vec() },
            self.previous_justified_checkpoint.to_ssz(p),
            self.current_justified_checkpoint.to_ssz(p),
            self.finalized_checkpoint.to_ssz(p),
        ])
    }

    fn from_ssz(value: SszValue) -> Result<Self, DecodeError> {
        let [slot, header, block_roots, state_roots, validators, balances, prev, cur, bits, pj, cj, fin] =
            fields(value, "BeaconState")?;
        let roots = |v| elements_of(v)?.into_iter().map(root_of).collect::<Result<Vec<_>, _>>();
        let atts = |v| elements_of(v)?.into_iter().map(PendingAttestation::from_ssz).collect::<Result<Vec<_>, _>>();
        let SszValue::BitVector { bits } = bits else {
            return Err(shape("justification_bits"));
        };
        let validators: Vec<Validator> =
            elements_of(validators)?.into_iter().map(Validator::from_ssz).collect::<Result<_, _>>()?;
        let balances: Vec<u64> = elements_of(balances)?.into_iter().map(u64_of).collect::<Result<_, _>>()?;
        if validators.len() != balances.len() {
            return Err(shape("validators and balances differ in length"));
        }
        Ok(BeaconState {
            slot: u64_of(slot)?,
            latest_block_header: BeaconBlockHeader::from_ssz(header)?,
            block_roots: roots(block_roots)?,
            state_roots: roots(state_roots)?,
            validators,
            balances,
            previous_epoch_attestations: atts(prev)?,
            current_epoch_attestations: atts(cur)?,
            justification_bits: bits.try_into().map_err(|_| shape("justification_bits"))?,
            previous_justified_checkpoint: Checkpoint::from_ssz(pj)?,
            current_justified_checkpoint: Checkpoint::from_ssz(cj)?,
            finalized_checkpoint: Checkpoint::from_ssz(fin)?,
        })
    }
}
