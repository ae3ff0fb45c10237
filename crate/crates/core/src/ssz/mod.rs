//! Simple serialize: deterministic byte encoding for every consensus type.

pub mod codec;
mod descriptor;
mod typed;
mod value;

pub use codec::{decode, encode, DecodeError};
pub use descriptor::{Descriptor, DescriptorError, DomainType};
pub use typed::SszType;
pub use value::{Kind, SszValue, BYTES_PER_LENGTH_OFFSET};
