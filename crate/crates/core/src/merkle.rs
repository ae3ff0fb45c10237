//! `hash_tree_root` over a pluggable 32-byte hash.

use std::sync::OnceLock;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::ssz::codec::{encode, pack_bits};
use crate::ssz::{Kind, SszValue};
use crate::types::Root;

pub const BYTES_PER_CHUNK: usize = 32;

pub type Chunk = [u8; BYTES_PER_CHUNK];

/// A pure function from 64 bytes (two child nodes) to a 32-byte node.
pub trait Hasher: Sync {
    fn hash(&self, data: &[u8; 64]) -> Root;

    fn hash_pair(&self, left: &Root, right: &Root) -> Root {
        let mut buf = [0u8; 64];
        buf[..32].copy_from_slice(&left.0);
        buf[32..].copy_from_slice(&right.0);
        self.hash(&buf)
    }

    /// Root of a full subtree of `depth` levels whose leaves are all zero.
    fn zero_hash(&self, depth: usize) -> Root {
        (0..depth).fold(Root::ZERO, |z, _| self.hash_pair(&z, &z))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Sha256Hasher;

const ZERO_HASH_DEPTH: usize = 65;

fn sha256_zero_hashes() -> &'static [Root; ZERO_HASH_DEPTH] {
    static TABLE: OnceLock<[Root; ZERO_HASH_DEPTH]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = [Root::ZERO; ZERO_HASH_DEPTH];
        for i in 1..ZERO_HASH_DEPTH {
            table[i] = Sha256Hasher.hash_pair(&table[i - 1], &table[i - 1]);
        }
        table
    })
}

impl Hasher for Sha256Hasher {
    fn hash(&self, data: &[u8; 64]) -> Root {
        Root(Sha256::digest(data).into())
    }

    fn zero_hash(&self, depth: usize) -> Root {
        match sha256_zero_hashes().get(depth) {
            Some(r) => *r,
            None => (ZERO_HASH_DEPTH - 1..depth).fold(sha256_zero_hashes()[ZERO_HASH_DEPTH - 1], |z, _| {
                self.hash_pair(&z, &z)
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("{count} chunks exceed the limit of {limit}")]
pub struct LimitExceeded {
    pub count: u64,
    pub limit: u64,
}

/// Least power of two that is at least `max(n, 1)`.
///
/// Panics for `n > 2^63`, whose next power of two does not fit in a u64.
pub fn next_power_of_two(n: u64) -> u64 {
    1u64.checked_shl(tree_depth(n)).expect("next power of two exceeds u64")
}

/// Number of levels above the leaves in a tree with room for `n` leaves.
fn tree_depth(n: u64) -> u32 {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros()
    }
}

fn pad_to_chunks(mut bytes: Vec<u8>) -> Vec<Chunk> {
    let len = bytes.len().div_ceil(BYTES_PER_CHUNK) * BYTES_PER_CHUNK;
    bytes.resize(len, 0);
    bytes.chunks(BYTES_PER_CHUNK).map(|c| c.try_into().expect("chunk width")).collect()
}

/// Serializes a basic value, a bit sequence, or a sequence of basic values into chunks.
///
/// Bit sequences are packed without the bitlist sentinel. Returns `None` for
/// composite values, which are merkleized from their members' roots instead.
pub fn pack(value: &SszValue) -> Option<Vec<Chunk>> {
    match value {
        SszValue::Boolean(_) | SszValue::Uint64(_) | SszValue::Bytes32(_) => Some(pad_to_chunks(encode(value))),
        SszValue::BitVector { bits } | SszValue::BitList { bits, .. } => Some(pad_to_chunks(pack_bits(bits))),
        SszValue::List { element, elements, .. } | SszValue::Vector { element, elements } if element.is_basic() => {
            Some(pad_to_chunks(elements.iter().flat_map(encode).collect()))
        }
        _ => None,
    }
}

/// Root of the binary tree over `chunks`, zero-padded to `next_power_of_two(limit or |chunks|)` leaves.
pub fn merkleize(chunks: &[Chunk], limit: Option<u64>, hasher: &dyn Hasher) -> Result<Root, LimitExceeded> {
    let count = chunks.len() as u64;
    if let Some(limit) = limit {
        if count > limit {
            return Err(LimitExceeded { count, limit });
        }
    }
    let depth = tree_depth(limit.unwrap_or(count)) as usize;

    // all-zero trailing leaves fold into precomputed zero subtrees
    let used = chunks.iter().rposition(|c| *c != [0; BYTES_PER_CHUNK]).map_or(0, |i| i + 1);
    if used == 0 {
        return Ok(hasher.zero_hash(depth));
    }
    let mut layer: Vec<Root> = chunks[..used].iter().map(|c| Root(*c)).collect();
    for level in 0..depth {
        if layer.len() % 2 == 1 {
            layer.push(hasher.zero_hash(level));
        }
        layer = layer.chunks(2).map(|pair| hasher.hash_pair(&pair[0], &pair[1])).collect();
    }
    Ok(layer[0])
}

pub fn mix_in_length(root: &Root, length: u64, hasher: &dyn Hasher) -> Root {
    let mut len_chunk = [0u8; 32];
    len_chunk[..8].copy_from_slice(&length.to_le_bytes());
    hasher.hash_pair(root, &Root(len_chunk))
}

fn chunk_limit(element: &Kind, length: u64) -> u64 {
    match element.fixed_size() {
        Some(size) if element.is_basic() => (length * size as u64).div_ceil(BYTES_PER_CHUNK as u64),
        _ => length,
    }
}

/// The canonical 32-byte digest of a well-formed value.
pub fn hash_tree_root(value: &SszValue, hasher: &dyn Hasher) -> Root {
    let within_limit = "well-formed values never exceed their capacity";
    match value {
        // a single 32-byte chunk is its own root
        SszValue::Bytes32(r) => *r,
        SszValue::Boolean(_) | SszValue::Uint64(_) => {
            merkleize(&pack(value).expect("basic"), None, hasher).expect(within_limit)
        }
        SszValue::BitVector { bits } => {
            let chunks = pack(value).expect("bits");
            merkleize(&chunks, Some((bits.len() as u64).div_ceil(256)), hasher).expect(within_limit)
        }
        SszValue::BitList { max_length, bits } => {
            let chunks = pack(value).expect("bits");
            let root = merkleize(&chunks, Some(max_length.div_ceil(256)), hasher).expect(within_limit);
            mix_in_length(&root, bits.len() as u64, hasher)
        }
        SszValue::List { element, max_length, elements } => {
            let root = merkleize(&member_chunks(value, elements, hasher), Some(chunk_limit(element, *max_length)), hasher)
                .expect(within_limit);
            mix_in_length(&root, elements.len() as u64, hasher)
        }
        SszValue::Vector { element, elements } => {
            let limit = chunk_limit(element, elements.len() as u64);
            merkleize(&member_chunks(value, elements, hasher), Some(limit), hasher).expect(within_limit)
        }
        SszValue::Container(fields) => {
            let roots: Vec<Chunk> = fields.iter().map(|f| hash_tree_root(f, hasher).0).collect();
            merkleize(&roots, None, hasher).expect(within_limit)
        }
    }
}

fn member_chunks(value: &SszValue, elements: &[SszValue], hasher: &dyn Hasher) -> Vec<Chunk> {
    pack(value).unwrap_or_else(|| elements.iter().map(|e| hash_tree_root(e, hasher).0).collect())
}
