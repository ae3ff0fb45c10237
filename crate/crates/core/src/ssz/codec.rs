use thiserror::Error;

use super::value::{Kind, SszValue, BYTES_PER_LENGTH_OFFSET};
use crate::types::Root;

/// Reasons a byte string is not the encoding of any value of the requested kind.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("wrong length for {kind}: expected {expected} bytes, got {got}")]
    WrongLength { kind: String, expected: usize, got: usize },
    #[error("boolean byte must be 0x00 or 0x01, got {0:#04x}")]
    InvalidBoolean(u8),
    #[error("bitlist has no sentinel bit")]
    MissingSentinel,
    #[error("bitvector padding bits are not zero")]
    NonZeroPadding,
    #[error("offset {offset} out of range (valid {min}..={max})")]
    OffsetOutOfRange { offset: usize, min: usize, max: usize },
    #[error("offset {next} decreases after {prev}")]
    OffsetDecreasing { prev: usize, next: usize },
    #[error("first offset {got} does not end the fixed part at {expected}")]
    FirstOffsetMismatch { expected: usize, got: usize },
    #[error("{got} elements exceed the maximum of {max}")]
    ListTooLong { max: u64, got: u64 },
    #[error("{len} bytes is not a whole number of {element_size}-byte elements")]
    ElementSizeMismatch { len: usize, element_size: usize },
    #[error("value does not match its expected shape: {0}")]
    Shape(String),
}

impl DecodeError {
    /// Stable diagnostic code, one per failure class.
    pub fn code(&self) -> &'static str {
        match self {
            DecodeError::WrongLength { .. } => "WrongLength",
            DecodeError::InvalidBoolean(_) => "InvalidBoolean",
            DecodeError::MissingSentinel => "MissingSentinel",
            DecodeError::NonZeroPadding => "NonZeroPadding",
            DecodeError::OffsetOutOfRange { .. } => "OffsetOutOfRange",
            DecodeError::OffsetDecreasing { .. } => "OffsetDecreasing",
            DecodeError::FirstOffsetMismatch { .. } => "FirstOffsetMismatch",
            DecodeError::ListTooLong { .. } => "ListTooLong",
            DecodeError::ElementSizeMismatch { .. } => "ElementSizeMismatch",
            DecodeError::Shape(_) => "Shape",
        }
    }
}

pub fn encode(value: &SszValue) -> Vec<u8> {
    let mut out = Vec::new();
    encode_into(value, &mut out);
    out
}

/// Packs bits little-endian within each byte, zero-padded to whole bytes.
pub(crate) fn pack_bits(bits: &[bool]) -> Vec<u8> {
    let mut bytes = vec![0u8; bits.len().div_ceil(8)];
    for (i, _) in bits.iter().enumerate().filter(|(_, b)| **b) {
        bytes[i / 8] |= 1 << (i % 8);
    }
    bytes
}

fn encode_into(value: &SszValue, out: &mut Vec<u8>) {
    match value {
        SszValue::Boolean(b) => out.push(u8::from(*b)),
        SszValue::Uint64(v) => out.extend_from_slice(&v.to_le_bytes()),
        SszValue::Bytes32(r) => out.extend_from_slice(r.as_bytes()),
        SszValue::BitVector { bits } => out.extend(pack_bits(bits)),
        SszValue::BitList { bits, .. } => {
            let mut with_sentinel = bits.clone();
            with_sentinel.push(true);
            out.extend(pack_bits(&with_sentinel));
        }
        SszValue::List { elements, .. } | SszValue::Vector { elements, .. } => encode_sequence(elements, out),
        SszValue::Container(fields) => encode_sequence(fields, out),
    }
}

/// Fixed parts (with 4-byte offsets standing in for variable items), then the heap.
fn encode_sequence(items: &[SszValue], out: &mut Vec<u8>) {
    let kinds: Vec<Kind> = items.iter().map(SszValue::kind).collect();
    let fixed_len: usize = kinds.iter().map(Kind::fixed_part_size).sum();
    let mut heap = Vec::new();
    let start = out.len();
    for (item, kind) in items.iter().zip(&kinds) {
        if kind.is_fixed_size() {
            encode_into(item, out);
        } else {
            let offset = fixed_len + heap.len();
            out.extend_from_slice(&(offset as u32).to_le_bytes());
            encode_into(item, &mut heap);
        }
    }
    debug_assert_eq!(out.len() - start, fixed_len);
    out.extend(heap);
}

pub fn decode(bytes: &[u8], kind: &Kind) -> Result<SszValue, DecodeError> {
    let expect_len = |expected: usize| {
        if bytes.len() == expected {
            Ok(())
        } else {
            Err(DecodeError::WrongLength { kind: kind.to_string(), expected, got: bytes.len() })
        }
    };
    match kind {
        Kind::Boolean => {
            expect_len(1)?;
            match bytes[0] {
                0 => Ok(SszValue::Boolean(false)),
                1 => Ok(SszValue::Boolean(true)),
                b => Err(DecodeError::InvalidBoolean(b)),
            }
        }
        Kind::Uint64 => {
            expect_len(8)?;
            Ok(SszValue::Uint64(u64::from_le_bytes(bytes.try_into().expect("length checked"))))
        }
        Kind::Bytes32 => {
            expect_len(32)?;
            Ok(SszValue::Bytes32(Root(bytes.try_into().expect("length checked"))))
        }
        Kind::BitVector { length } => {
            let length = *length as usize;
            expect_len(length.div_ceil(8))?;
            let bits = unpack_bits(bytes, length);
            if !length.is_multiple_of(8) && bytes[bytes.len() - 1] >> (length % 8) != 0 {
                return Err(DecodeError::NonZeroPadding);
            }
            Ok(SszValue::BitVector { bits })
        }
        Kind::BitList { max_length } => {
            let last = *bytes.last().ok_or(DecodeError::MissingSentinel)?;
            if last == 0 {
                return Err(DecodeError::MissingSentinel);
            }
            let len = (bytes.len() - 1) * 8 + (7 - last.leading_zeros() as usize);
            if len as u64 > *max_length {
                return Err(DecodeError::ListTooLong { max: *max_length, got: len as u64 });
            }
            Ok(SszValue::BitList { max_length: *max_length, bits: unpack_bits(bytes, len) })
        }
        Kind::List { element, max_length } => {
            let elements = match element.fixed_size() {
                Some(size) => {
                    if !bytes.len().is_multiple_of(size) {
                        return Err(DecodeError::ElementSizeMismatch { len: bytes.len(), element_size: size });
                    }
                    let count = (bytes.len() / size) as u64;
                    if count > *max_length {
                        return Err(DecodeError::ListTooLong { max: *max_length, got: count });
                    }
                    bytes.chunks(size).map(|c| decode(c, element)).collect::<Result<_, _>>()?
                }
                None if bytes.is_empty() => Vec::new(),
                None => {
                    let count = variable_count(bytes)?;
                    if count as u64 > *max_length {
                        return Err(DecodeError::ListTooLong { max: *max_length, got: count as u64 });
                    }
                    let kinds = vec![element.as_ref(); count];
                    decode_sequence(bytes, &kinds)?
                }
            };
            Ok(SszValue::List { element: element.as_ref().clone(), max_length: *max_length, elements })
        }
        Kind::Vector { element, length } => {
            let n = *length as usize;
            // reject before allocating when the input cannot possibly hold n items
            let min = n.saturating_mul(element.fixed_part_size().max(1));
            if bytes.len() < min {
                return Err(DecodeError::WrongLength {
                    kind: kind.to_string(),
                    expected: kind.fixed_size().unwrap_or(min),
                    got: bytes.len(),
                });
            }
            let kinds = vec![element.as_ref(); n];
            let elements = decode_sequence(bytes, &kinds)?;
            Ok(SszValue::Vector { element: element.as_ref().clone(), elements })
        }
        Kind::Container(fields) => {
            let kinds: Vec<&Kind> = fields.iter().collect();
            Ok(SszValue::Container(decode_sequence(bytes, &kinds)?))
        }
    }
}

fn unpack_bits(bytes: &[u8], len: usize) -> Vec<bool> {
    (0..len).map(|i| bytes[i / 8] >> (i % 8) & 1 == 1).collect()
}

fn read_offset(bytes: &[u8], at: usize) -> usize {
    u32::from_le_bytes(bytes[at..at + BYTES_PER_LENGTH_OFFSET].try_into().expect("4 bytes")) as usize
}

/// Element count of a variable-size element list, read from its first offset.
fn variable_count(bytes: &[u8]) -> Result<usize, DecodeError> {
    if bytes.len() < BYTES_PER_LENGTH_OFFSET {
        return Err(DecodeError::WrongLength {
            kind: "offset".into(),
            expected: BYTES_PER_LENGTH_OFFSET,
            got: bytes.len(),
        });
    }
    let first = read_offset(bytes, 0);
    if first == 0 || !first.is_multiple_of(BYTES_PER_LENGTH_OFFSET) || first > bytes.len() {
        return Err(DecodeError::OffsetOutOfRange { offset: first, min: BYTES_PER_LENGTH_OFFSET, max: bytes.len() });
    }
    Ok(first / BYTES_PER_LENGTH_OFFSET)
}

fn decode_sequence(bytes: &[u8], kinds: &[&Kind]) -> Result<Vec<SszValue>, DecodeError> {
    let fixed_len: usize = kinds.iter().map(|k| k.fixed_part_size()).sum();
    let has_variable = kinds.iter().any(|k| !k.is_fixed_size());
    if bytes.len() < fixed_len || (!has_variable && bytes.len() != fixed_len) {
        return Err(DecodeError::WrongLength { kind: "composite".into(), expected: fixed_len, got: bytes.len() });
    }

    // first pass: fixed items and offsets
    let mut pos = 0;
    let mut offsets = Vec::new();
    let mut slots: Vec<Option<SszValue>> = Vec::with_capacity(kinds.len());
    for kind in kinds {
        match kind.fixed_size() {
            Some(size) => {
                slots.push(Some(decode(&bytes[pos..pos + size], kind)?));
                pos += size;
            }
            None => {
                let offset = read_offset(bytes, pos);
                match offsets.last() {
                    None if offset != fixed_len => {
                        return Err(DecodeError::FirstOffsetMismatch { expected: fixed_len, got: offset })
                    }
                    Some(&prev) if offset < prev => return Err(DecodeError::OffsetDecreasing { prev, next: offset }),
                    _ if offset > bytes.len() => {
                        return Err(DecodeError::OffsetOutOfRange { offset, min: fixed_len, max: bytes.len() })
                    }
                    _ => {}
                }
                offsets.push(offset);
                slots.push(None);
                pos += BYTES_PER_LENGTH_OFFSET;
            }
        }
    }

    // second pass: heap items delimited by consecutive offsets
    let mut ends = offsets.iter().skip(1).copied().chain(std::iter::once(bytes.len()));
    let mut starts = offsets.iter().copied();
    kinds
        .iter()
        .zip(slots)
        .map(|(kind, slot)| match slot {
            Some(v) => Ok(v),
            None => {
                let (start, end) = (starts.next().expect("offset"), ends.next().expect("end"));
                decode(&bytes[start..end], kind)
            }
        })
        .collect()
}
