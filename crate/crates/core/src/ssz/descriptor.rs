//! Type descriptor strings (`BeaconState`, `Uint64`, `List[Uint64,4]`, ...) and
//! the JSON form used by the `ssz encode|decode` commands.

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value as Json;
use thiserror::Error;

use super::codec::{decode, encode, DecodeError};
use super::typed::SszType;
use super::value::{Kind, SszValue};
use crate::merkle::{hash_tree_root, Sha256Hasher};
use crate::preset::Preset;
use crate::types::*;

#[derive(Debug, Error)]
pub enum DescriptorError {
    #[error("bad type descriptor `{0}`")]
    Parse(String),
    #[error("malformed encoding ({code}): {0}", code = .0.code())]
    Decode(#[from] DecodeError),
    #[error("json does not match the type: {0}")]
    Json(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainType {
    BeaconState,
    BeaconBlock,
    BeaconBlockHeader,
    Checkpoint,
    AttestationData,
    PendingAttestation,
    Validator,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Descriptor {
    Domain(DomainType),
    Generic(Kind),
}

impl DomainType {
    const ALL: [(&'static str, DomainType); 7] = [
        ("BeaconState", DomainType::BeaconState),
        ("BeaconBlock", DomainType::BeaconBlock),
        ("BeaconBlockHeader", DomainType::BeaconBlockHeader),
        ("Checkpoint", DomainType::Checkpoint),
        ("AttestationData", DomainType::AttestationData),
        ("PendingAttestation", DomainType::PendingAttestation),
        ("Validator", DomainType::Validator),
    ];
}

/// Dispatches a generic body over the concrete Rust type of a [`DomainType`].
macro_rules! with_domain_type {
    ($d:expr, $t:ident => $body:expr) => {
        match $d {
            DomainType::BeaconState => { type $t = BeaconState; $body }
            DomainType::BeaconBlock => { type $t = BeaconBlock; $body }
            DomainType::BeaconBlockHeader => { type $t = BeaconBlockHeader; $body }
            DomainType::Checkpoint => { type $t = Checkpoint; $body }
            DomainType::AttestationData => { type $t = AttestationData; $body }
            DomainType::PendingAttestation => { type $t = PendingAttestation; $body }
            DomainType::Validator => { type $t = Validator; $body }
        }
    };
}

fn decode_json<T: SszType + Serialize>(bytes: &[u8], preset: &Preset) -> Result<Json, DescriptorError> {
    let value = T::from_ssz_bytes(bytes, preset)?;
    serde_json::to_value(value).map_err(|e| DescriptorError::Json(e.to_string()))
}

fn encode_json<T: SszType + DeserializeOwned>(json: Json, preset: &Preset) -> Result<SszValue, DescriptorError> {
    let value: T = serde_json::from_value(json).map_err(|e| DescriptorError::Json(e.to_string()))?;
    let ssz = value.to_ssz(preset);
    if !ssz.is_well_formed() {
        return Err(DescriptorError::Json("value exceeds a length limit of its type".into()));
    }
    Ok(ssz)
}

fn domain_value<T: SszType>(bytes: &[u8], preset: &Preset) -> Result<SszValue, DescriptorError> {
    Ok(T::from_ssz_bytes(bytes, preset)?.to_ssz(preset))
}

impl Descriptor {
    pub fn parse(text: &str) -> Result<Self, DescriptorError> {
        let text = text.trim();
        if let Some((_, d)) = DomainType::ALL.iter().find(|(name, _)| *name == text) {
            return Ok(Descriptor::Domain(*d));
        }
        let mut parser = Parser { src: text, pos: 0 };
        let kind = parser.kind()?;
        if parser.pos != text.len() {
            return Err(DescriptorError::Parse(text.to_string()));
        }
        Ok(Descriptor::Generic(kind))
    }

    pub fn kind(&self, preset: &Preset) -> Kind {
        match self {
            Descriptor::Domain(d) => with_domain_type!(d, T => T::kind(preset)),
            Descriptor::Generic(k) => k.clone(),
        }
    }

    /// Decodes `bytes` into a validated value of this type.
    pub fn decode_value(&self, bytes: &[u8], preset: &Preset) -> Result<SszValue, DescriptorError> {
        match self {
            Descriptor::Domain(d) => with_domain_type!(d, T => domain_value::<T>(bytes, preset)),
            Descriptor::Generic(k) => Ok(decode(bytes, k)?),
        }
    }

    pub fn hash_tree_root(&self, bytes: &[u8], preset: &Preset) -> Result<Root, DescriptorError> {
        Ok(hash_tree_root(&self.decode_value(bytes, preset)?, &Sha256Hasher))
    }

    pub fn decode_to_json(&self, bytes: &[u8], preset: &Preset) -> Result<Json, DescriptorError> {
        match self {
            Descriptor::Domain(d) => with_domain_type!(d, T => decode_json::<T>(bytes, preset)),
            Descriptor::Generic(k) => Ok(value_to_json(&decode(bytes, k)?)),
        }
    }

    pub fn encode_from_json(&self, json: Json, preset: &Preset) -> Result<Vec<u8>, DescriptorError> {
        let value = match self {
            Descriptor::Domain(d) => with_domain_type!(d, T => encode_json::<T>(json, preset)?),
            Descriptor::Generic(k) => json_to_value(&json, k)?,
        };
        Ok(encode(&value))
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn err(&self) -> DescriptorError {
        DescriptorError::Parse(self.src.to_string())
    }

    fn ident(&mut self) -> &str {
        let rest = &self.src[self.pos..];
        let len = rest.find(|c: char| !c.is_ascii_alphanumeric()).unwrap_or(rest.len());
        self.pos += len;
        &rest[..len]
    }

    fn eat(&mut self, c: char) -> Result<(), DescriptorError> {
        self.skip_ws();
        if self.src[self.pos..].starts_with(c) {
            self.pos += 1;
            self.skip_ws();
            Ok(())
        } else {
            Err(self.err())
        }
    }

    fn skip_ws(&mut self) {
        while self.src[self.pos..].starts_with(' ') {
            self.pos += 1;
        }
    }

    fn number(&mut self) -> Result<u64, DescriptorError> {
        let n: u64 = self.ident().parse().map_err(|_| self.err())?;
        if n == 0 {
            return Err(self.err());
        }
        Ok(n)
    }

    fn kind(&mut self) -> Result<Kind, DescriptorError> {
        let name = self.ident().to_string();
        let kind = match name.as_str() {
            "Boolean" | "bool" => Kind::Boolean,
            "Uint64" | "uint64" => Kind::Uint64,
            "Bytes32" | "Root" => Kind::Bytes32,
            "Bitlist" | "BitList" => {
                self.eat('[')?;
                let max_length = self.number()?;
                self.eat(']')?;
                Kind::BitList { max_length }
            }
            "Bitvector" | "BitVector" => {
                self.eat('[')?;
                let length = self.number()?;
                self.eat(']')?;
                Kind::BitVector { length }
            }
            "List" | "Vector" => {
                self.eat('[')?;
                let element = self.kind()?;
                self.eat(',')?;
                let n = self.number()?;
                self.eat(']')?;
                if name == "List" {
                    Kind::list(element, n)
                } else {
                    Kind::vector(element, n)
                }
            }
            "Container" => {
                self.eat('[')?;
                let mut fields = vec![self.kind()?];
                while self.eat(',').is_ok() {
                    fields.push(self.kind()?);
                }
                self.eat(']')?;
                Kind::Container(fields)
            }
            _ => return Err(self.err()),
        };
        Ok(kind)
    }
}

pub fn value_to_json(value: &SszValue) -> Json {
    match value {
        SszValue::Boolean(b) => Json::Bool(*b),
        SszValue::Uint64(v) => Json::from(*v),
        SszValue::Bytes32(r) => Json::String(r.to_string()),
        SszValue::BitList { bits, .. } | SszValue::BitVector { bits } => Json::String(bit_string::to_string(bits)),
        SszValue::List { elements, .. } | SszValue::Vector { elements, .. } | SszValue::Container(elements) => {
            Json::Array(elements.iter().map(value_to_json).collect())
        }
    }
}

pub fn json_to_value(json: &Json, kind: &Kind) -> Result<SszValue, DescriptorError> {
    let mismatch = || DescriptorError::Json(format!("expected {kind}, got {json}"));
    let bits = || json.as_str().and_then(bit_string::parse).ok_or_else(mismatch);
    let array = |expected: Option<usize>| {
        json.as_array().filter(|a| expected.is_none_or(|n| a.len() == n)).ok_or_else(mismatch)
    };
    let value = match kind {
        Kind::Boolean => SszValue::Boolean(json.as_bool().ok_or_else(mismatch)?),
        Kind::Uint64 => SszValue::Uint64(json.as_u64().ok_or_else(mismatch)?),
        Kind::Bytes32 => SszValue::Bytes32(json.as_str().and_then(|s| s.parse().ok()).ok_or_else(mismatch)?),
        Kind::BitList { max_length } => SszValue::BitList { max_length: *max_length, bits: bits()? },
        Kind::BitVector { length } => {
            let bits = bits()?;
            if bits.len() as u64 != *length {
                return Err(mismatch());
            }
            SszValue::BitVector { bits }
        }
        Kind::List { element, max_length } => SszValue::List {
            element: element.as_ref().clone(),
            max_length: *max_length,
            elements: array(None)?.iter().map(|j| json_to_value(j, element)).collect::<Result<_, _>>()?,
        },
        Kind::Vector { element, length } => SszValue::Vector {
            element: element.as_ref().clone(),
            elements: array(Some(*length as usize))?
                .iter()
                .map(|j| json_to_value(j, element))
                .collect::<Result<_, _>>()?,
        },
        Kind::Container(fields) => SszValue::Container(
            array(Some(fields.len()))?.iter().zip(fields).map(|(j, k)| json_to_value(j, k)).collect::<Result<_, _>>()?,
        ),
    };
    if !value.is_well_formed() {
        return Err(DescriptorError::Json(format!("value exceeds a length limit of {kind}")));
    }
    Ok(value)
}
