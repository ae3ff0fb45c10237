//! Helpers shared by the integration tests: independent oracles and
//! generators of random valid inputs.
#![allow(dead_code)]

use sha2::{Digest, Sha256};

use beacon_core::committees::EpochCommittees;
use beacon_core::preset::Preset;
use beacon_core::sim::{simulate, Participation, SimConfig, SplitMix64};
use beacon_core::ssz::{Kind, SszType, SszValue};
use beacon_core::transition::{process_block, process_slots};
use beacon_core::types::{
    epoch_of, AttestationData, BeaconBlock, BeaconState, Checkpoint, PendingAttestation, Root,
};

pub type Chunk = [u8; 32];

pub fn sha256_pair(a: &Chunk, b: &Chunk) -> Chunk {
    let mut h = Sha256::new();
    h.update(a);
    h.update(b);
    h.finalize().into()
}

/// Smallest power of two not below `n`, found by doubling.
pub fn pow2_at_least(n: u64) -> u64 {
    let mut w = 1;
    while w < n {
        w *= 2;
    }
    w
}

/// Pads with zero chunks to a full power-of-two width and hashes pairwise,
/// with no precomputed zero subtrees.
pub fn naive_merkleize(chunks: &[Chunk], limit: Option<u64>) -> Chunk {
    fn fold(leaves: &[Chunk]) -> Chunk {
        if leaves.len() == 1 {
            return leaves[0];
        }
        let (l, r) = leaves.split_at(leaves.len() / 2);
        sha256_pair(&fold(l), &fold(r))
    }
    let width = pow2_at_least(limit.unwrap_or(chunks.len() as u64).max(chunks.len() as u64));
    let mut leaves = chunks.to_vec();
    leaves.resize(width as usize, [0; 32]);
    fold(&leaves)
}

fn length_chunk(n: usize) -> Chunk {
    let mut c = [0; 32];
    c[..8].copy_from_slice(&(n as u64).to_le_bytes());
    c
}

fn bytes_to_chunks(mut bytes: Vec<u8>) -> Vec<Chunk> {
    if bytes.is_empty() {
        return vec![];
    }
    bytes.resize(bytes.len().div_ceil(32) * 32, 0);
    bytes.chunks(32).map(|c| c.try_into().unwrap()).collect()
}

fn bits_le(bits: &[bool]) -> Vec<u8> {
    let mut out = vec![0u8; bits.len().div_ceil(8)];
    for (i, &b) in bits.iter().enumerate() {
        if b {
            out[i / 8] |= 1 << (i % 8);
        }
    }
    out
}

fn basic_bytes(v: &SszValue) -> Vec<u8> {
    match v {
        SszValue::Boolean(b) => vec![*b as u8],
        SszValue::Uint64(x) => x.to_le_bytes().to_vec(),
        SszValue::Bytes32(r) => r.0.to_vec(),
        _ => unreachable!("not basic"),
    }
}

fn basic_size(k: &Kind) -> Option<u64> {
    match k {
        Kind::Boolean => Some(1),
        Kind::Uint64 => Some(8),
        Kind::Bytes32 => Some(32),
        _ => None,
    }
}

/// Straight-from-the-definition tree root using [`naive_merkleize`]. Only
/// usable for small capacities, since it materializes every padding leaf.
pub fn naive_root(v: &SszValue) -> Chunk {
    match v {
        SszValue::Boolean(_) | SszValue::Uint64(_) | SszValue::Bytes32(_) => {
            naive_merkleize(&bytes_to_chunks(basic_bytes(v)), None)
        }
        SszValue::BitVector { bits } => {
            naive_merkleize(&bytes_to_chunks(bits_le(bits)), Some((bits.len() as u64).div_ceil(256)))
        }
        SszValue::BitList { max_length, bits } => {
            let root = naive_merkleize(&bytes_to_chunks(bits_le(bits)), Some(max_length.div_ceil(256)));
            sha256_pair(&root, &length_chunk(bits.len()))
        }
        SszValue::List { element, max_length, elements } => {
            let (chunks, limit) = member_leaves(element, elements, *max_length);
            sha256_pair(&naive_merkleize(&chunks, Some(limit)), &length_chunk(elements.len()))
        }
        SszValue::Vector { element, elements } => {
            let (chunks, limit) = member_leaves(element, elements, elements.len() as u64);
            naive_merkleize(&chunks, Some(limit))
        }
        SszValue::Container(fields) => naive_merkleize(&fields.iter().map(naive_root).collect::<Vec<_>>(), None),
    }
}

fn member_leaves(element: &Kind, elements: &[SszValue], capacity: u64) -> (Vec<Chunk>, u64) {
    match basic_size(element) {
        Some(size) => {
            let bytes = elements.iter().flat_map(basic_bytes).collect();
            (bytes_to_chunks(bytes), (capacity * size).div_ceil(32))
        }
        None => (elements.iter().map(naive_root).collect(), capacity),
    }
}

/// A random type descriptor of bounded depth with small capacities.
pub fn random_kind(rng: &mut SplitMix64, depth: u32) -> Kind {
    let pick = if depth == 0 { rng.below(5) } else { rng.below(8) };
    match pick {
        0 => Kind::Boolean,
        1 => Kind::Uint64,
        2 => Kind::Bytes32,
        3 => Kind::BitList { max_length: 1 + rng.below(600) },
        4 => Kind::BitVector { length: 1 + rng.below(600) },
        5 => Kind::list(random_kind(rng, depth - 1), 1 + rng.below(12)),
        6 => Kind::vector(random_kind(rng, depth - 1), 1 + rng.below(5)),
        _ => Kind::Container((0..1 + rng.below(4)).map(|_| random_kind(rng, depth - 1)).collect()),
    }
}

pub fn random_bits(rng: &mut SplitMix64, len: u64) -> Vec<bool> {
    (0..len).map(|_| rng.chance(1, 2)).collect()
}

pub fn random_u64(rng: &mut SplitMix64) -> u64 {
    match rng.below(4) {
        0 => rng.below(256),
        1 => [0, 1, u64::MAX, u64::MAX - 1, 1 << 32][rng.below(5) as usize],
        _ => rng.next_u64(),
    }
}

/// A random well-formed value of `kind`.
pub fn random_value(rng: &mut SplitMix64, kind: &Kind) -> SszValue {
    match kind {
        Kind::Boolean => SszValue::Boolean(rng.chance(1, 2)),
        Kind::Uint64 => SszValue::Uint64(random_u64(rng)),
        Kind::Bytes32 => SszValue::Bytes32(Root(rng.bytes32())),
        Kind::BitList { max_length } => {
            let len = rng.below(max_length + 1);
            SszValue::BitList { max_length: *max_length, bits: random_bits(rng, len) }
        }
        Kind::BitVector { length } => SszValue::BitVector { bits: random_bits(rng, *length) },
        Kind::List { element, max_length } => {
            let len = rng.below(max_length.min(&8) + 1);
            SszValue::List {
                element: (**element).clone(),
                max_length: *max_length,
                elements: (0..len).map(|_| random_value(rng, element)).collect(),
            }
        }
        Kind::Vector { element, length } => SszValue::Vector {
            element: (**element).clone(),
            elements: (0..*length).map(|_| random_value(rng, element)).collect(),
        },
        Kind::Container(fields) => SszValue::Container(fields.iter().map(|f| random_value(rng, f)).collect()),
    }
}

pub fn random_checkpoint(rng: &mut SplitMix64) -> Checkpoint {
    Checkpoint { epoch: random_u64(rng), root: Root(rng.bytes32()) }
}

pub fn random_attestation(rng: &mut SplitMix64, preset: &Preset) -> PendingAttestation {
    let len = rng.below(preset.max_validators_per_committee.min(300) + 1);
    PendingAttestation {
        aggregation_bits: random_bits(rng, len),
        data: AttestationData {
            slot: random_u64(rng),
            index: random_u64(rng),
            beacon_block_root: Root(rng.bytes32()),
            source: random_checkpoint(rng),
            target: random_checkpoint(rng),
        },
        inclusion_delay: random_u64(rng),
    }
}

/// Base states for transition testing: post-states drawn from short
/// simulated runs with random registry size and participation.
pub fn sample_states(rng: &mut SplitMix64, runs: usize, per_run: usize, preset: &Preset) -> Vec<BeaconState> {
    let mut out = Vec::new();
    for _ in 0..runs {
        let n = 33 + rng.below(480);
        let mut cfg = SimConfig::new(rng.next_u64(), n, 1 + rng.below(3)).with_preset(*preset);
        cfg.participation = Participation { num: 1 + rng.below(4), den: 4 };
        let store = simulate(&cfg).expect("simulation").store;
        let states: Vec<&BeaconState> = store.post_states().values().collect();
        for _ in 0..per_run {
            out.push(states[rng.below(states.len() as u64) as usize].clone());
        }
    }
    out
}

/// A random block that `state` accepts under full validation.
///
/// The block may skip slots and carries a random mix of attestations from
/// every committee still inside the inclusion window: some for the expected
/// boundary root, some for an arbitrary one, with random participation bits.
pub fn random_valid_block(rng: &mut SplitMix64, state: &BeaconState, preset: &Preset) -> BeaconBlock {
    let spe = preset.slots_per_epoch;
    let skip = if rng.chance(1, 5) { rng.below(2 * spe) } else { 0 };
    let slot = state.slot + 1 + skip;
    let forwarded = process_slots(state, slot, preset).expect("forwarding a valid state");
    let current = epoch_of(slot, preset);

    let mut candidates = Vec::new();
    let lo = slot.saturating_sub(spe);
    let hi = slot.saturating_sub(preset.min_attestation_inclusion_delay);
    for data_slot in lo..=hi {
        if slot < data_slot + preset.min_attestation_inclusion_delay {
            continue;
        }
        let epoch = epoch_of(data_slot, preset);
        if epoch + 1 < current {
            continue;
        }
        let committees = EpochCommittees::new(&forwarded, epoch, preset);
        let source = if epoch == current {
            forwarded.current_justified_checkpoint
        } else {
            forwarded.previous_justified_checkpoint
        };
        for index in 0..committees.count_per_slot {
            let size = committees.committee(data_slot, index).expect("committee").members.len() as u64;
            candidates.push((data_slot, index, size, epoch, source));
        }
    }
    rng.shuffle(&mut candidates);
    let take = rng.below(candidates.len().min(12) as u64 + 1) as usize;

    let attestations = candidates[..take]
        .iter()
        .map(|&(data_slot, index, size, epoch, source)| {
            let honest = forwarded.block_root(epoch, preset);
            let target_root = match honest {
                Some(r) if rng.chance(3, 4) => r,
                _ => Root(rng.bytes32()),
            };
            let density = rng.below(5);
            PendingAttestation {
                aggregation_bits: (0..size).map(|_| rng.below(4) < density).collect(),
                data: AttestationData {
                    slot: data_slot,
                    index,
                    beacon_block_root: forwarded.block_root_at_slot(data_slot, preset).unwrap_or_default(),
                    source,
                    target: Checkpoint { epoch, root: target_root },
                },
                inclusion_delay: slot - data_slot,
            }
        })
        .collect();

    let mut block = BeaconBlock {
        slot,
        parent_root: forwarded.latest_block_header.tree_root(preset),
        state_root: Root::ZERO,
        attestations,
    };
    let post = process_block(&forwarded, &block, preset).expect("generated block applies");
    block.state_root = post.tree_root(preset);
    block
}
