use std::fmt;

use crate::types::Root;

/// Type descriptor for an SSZ value.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Kind {
    Boolean,
    Uint64,
    Bytes32,
    BitList { max_length: u64 },
    BitVector { length: u64 },
    List { element: Box<Kind>, max_length: u64 },
    Vector { element: Box<Kind>, length: u64 },
    Container(Vec<Kind>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SszValue {
    Boolean(bool),
    Uint64(u64),
    Bytes32(Root),
    BitList { max_length: u64, bits: Vec<bool> },
    BitVector { bits: Vec<bool> },
    List { element: Kind, max_length: u64, elements: Vec<SszValue> },
    Vector { element: Kind, elements: Vec<SszValue> },
    Container(Vec<SszValue>),
}

pub const BYTES_PER_LENGTH_OFFSET: usize = 4;

impl Kind {
    pub fn list(element: Kind, max_length: u64) -> Kind {
        Kind::List { element: Box::new(element), max_length }
    }

    pub fn vector(element: Kind, length: u64) -> Kind {
        Kind::Vector { element: Box::new(element), length }
    }

    /// Encoded size when the kind is fixed-size, `None` for variable-size kinds.
    pub fn fixed_size(&self) -> Option<usize> {
        match self {
            Kind::Boolean => Some(1),
            Kind::Uint64 => Some(8),
            Kind::Bytes32 => Some(32),
            Kind::BitVector { length } => Some((*length as usize).div_ceil(8)),
            Kind::BitList { .. } | Kind::List { .. } => None,
            Kind::Vector { element, length } => element.fixed_size().map(|s| s * *length as usize),
            Kind::Container(fields) => fields.iter().map(Kind::fixed_size).sum(),
        }
    }

    pub fn is_fixed_size(&self) -> bool {
        self.fixed_size().is_some()
    }

    /// Size this kind occupies in a container's fixed part.
    pub(crate) fn fixed_part_size(&self) -> usize {
        self.fixed_size().unwrap_or(BYTES_PER_LENGTH_OFFSET)
    }

    pub fn is_basic(&self) -> bool {
        matches!(self, Kind::Boolean | Kind::Uint64)
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kind::Boolean => f.write_str("Boolean"),
            Kind::Uint64 => f.write_str("Uint64"),
            Kind::Bytes32 => f.write_str("Bytes32"),
            Kind::BitList { max_length } => write!(f, "Bitlist[{max_length}]"),
            Kind::BitVector { length } => write!(f, "Bitvector[{length}]"),
            Kind::List { element, max_length } => write!(f, "List[{element},{max_length}]"),
            Kind::Vector { element, length } => write!(f, "Vector[{element},{length}]"),
            Kind::Container(fields) => {
                f.write_str("Container[")?;
                for (i, k) in fields.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{k}")?;
                }
                f.write_str("]")
            }
        }
    }
}

impl SszValue {
    pub fn kind(&self) -> Kind {
        match self {
            SszValue::Boolean(_) => Kind::Boolean,
            SszValue::Uint64(_) => Kind::Uint64,
            SszValue::Bytes32(_) => Kind::Bytes32,
            SszValue::BitList { max_length, .. } => Kind::BitList { max_length: *max_length },
            SszValue::BitVector { bits } => Kind::BitVector { length: bits.len() as u64 },
            SszValue::List { element, max_length, .. } => Kind::list(element.clone(), *max_length),
            SszValue::Vector { element, elements } => Kind::vector(element.clone(), elements.len() as u64),
            SszValue::Container(fields) => Kind::Container(fields.iter().map(SszValue::kind).collect()),
        }
    }

    /// Checks the length and element-kind invariants recursively.
    pub fn is_well_formed(&self) -> bool {
        match self {
            SszValue::Boolean(_) | SszValue::Uint64(_) | SszValue::Bytes32(_) => true,
            SszValue::BitList { max_length, bits } => bits.len() as u64 <= *max_length,
            SszValue::BitVector { bits } => !bits.is_empty(),
            SszValue::List { element, max_length, elements } => {
                elements.len() as u64 <= *max_length
                    && elements.iter().all(|e| e.kind() == *element && e.is_well_formed())
            }
            SszValue::Vector { element, elements } => {
                !elements.is_empty() && elements.iter().all(|e| e.kind() == *element && e.is_well_formed())
            }
            SszValue::Container(fields) => fields.iter().all(SszValue::is_well_formed),
        }
    }
}
