//! The named constant bundle threaded through every operation.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::arith::Gwei;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PresetError {
    #[error("line {line}: unknown preset key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: expected `key=value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: value for `{key}` is not an unsigned 64-bit integer: `{value}`")]
    BadValue { line: usize, key: String, value: String },
    #[error("line {line}: duplicate key `{key}`")]
    Duplicate { line: usize, key: String },
    #[error("preset invariant violated: {0}")]
    Invariant(String),
    #[error("cannot read preset file: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Preset {
    pub slots_per_epoch: u64,
    pub max_committees_per_slot: u64,
    pub target_committee_size: u64,
    /// Capacity of an attestation's aggregation bitlist.
    pub max_validators_per_committee: u64,
    pub slots_per_historical_root: u64,
    pub min_attestation_inclusion_delay: u64,
    pub justification_bits_length: u64,
    pub effective_balance_per_validator: Gwei,
    pub reward_unit: Gwei,
    /// Attestation cap per block; epoch pools hold `max_attestations * slots_per_epoch`.
    pub max_attestations: u64,
    pub validator_registry_limit: u64,
    /// Largest slot distance a single block may jump over.
    pub max_slot_advance: u64,
}

pub const JUSTIFICATION_BITS_LENGTH: usize = 4;

impl Default for Preset {
    fn default() -> Self {
        Preset {
            slots_per_epoch: 32,
            max_committees_per_slot: 64,
            target_committee_size: 128,
            max_validators_per_committee: 2048,
            slots_per_historical_root: 8192,
            min_attestation_inclusion_delay: 1,
            justification_bits_length: JUSTIFICATION_BITS_LENGTH as u64,
            effective_balance_per_validator: 32_000_000_000,
            reward_unit: 100_000,
            max_attestations: 128,
            validator_registry_limit: 1 << 40,
            max_slot_advance: 8192,
        }
    }
}

const KEYS: [&str; 12] = [
    "slots_per_epoch",
    "max_committees_per_slot",
    "target_committee_size",
    "max_validators_per_committee",
    "slots_per_historical_root",
    "min_attestation_inclusion_delay",
    "justification_bits_length",
    "effective_balance_per_validator",
    "reward_unit",
    "max_attestations",
    "validator_registry_limit",
    "max_slot_advance",
];

impl Preset {
    /// A shrunken preset for fast tests: 8-slot epochs and a 64-slot history ring.
    pub fn minimal() -> Self {
        Preset {
            slots_per_epoch: 8,
            max_committees_per_slot: 4,
            target_committee_size: 4,
            slots_per_historical_root: 64,
            max_slot_advance: 64,
            ..Preset::default()
        }
    }

    fn field_mut(&mut self, key: &str) -> Option<&mut u64> {
        Some(match key {
            "slots_per_epoch" => &mut self.slots_per_epoch,
            "max_committees_per_slot" => &mut self.max_committees_per_slot,
            "target_committee_size" => &mut self.target_committee_size,
            "max_validators_per_committee" => &mut self.max_validators_per_committee,
            "slots_per_historical_root" => &mut self.slots_per_historical_root,
            "min_attestation_inclusion_delay" => &mut self.min_attestation_inclusion_delay,
            "justification_bits_length" => &mut self.justification_bits_length,
            "effective_balance_per_validator" => &mut self.effective_balance_per_validator,
            "reward_unit" => &mut self.reward_unit,
            "max_attestations" => &mut self.max_attestations,
            "validator_registry_limit" => &mut self.validator_registry_limit,
            "max_slot_advance" => &mut self.max_slot_advance,
            _ => return None,
        })
    }

    fn field(&self, key: &str) -> u64 {
        let mut copy = *self;
        *copy.field_mut(key).expect("known key")
    }

    pub fn validate(&self) -> Result<(), PresetError> {
        for key in KEYS {
            if key != "reward_unit" && self.field(key) == 0 {
                return Err(PresetError::Invariant(format!("{key} must be at least 1")));
            }
        }
        if !self.slots_per_historical_root.is_multiple_of(self.slots_per_epoch) {
            return Err(PresetError::Invariant(
                "slots_per_historical_root must be a multiple of slots_per_epoch".into(),
            ));
        }
        // boundary roots of the previous epoch must still be in the history ring
        if self.slots_per_historical_root / self.slots_per_epoch < 2 {
            return Err(PresetError::Invariant(
                "slots_per_historical_root must cover at least two epochs".into(),
            ));
        }
        if self.justification_bits_length != JUSTIFICATION_BITS_LENGTH as u64 {
            return Err(PresetError::Invariant("justification_bits_length is fixed at 4".into()));
        }
        if self
            .max_validators_per_committee
            .checked_mul(self.max_committees_per_slot)
            .and_then(|v| v.checked_mul(self.slots_per_epoch))
            .is_none()
        {
            return Err(PresetError::Invariant("committee capacity per epoch overflows u64".into()));
        }
        if self.max_attestations.checked_mul(self.slots_per_epoch).is_none() {
            return Err(PresetError::Invariant("attestation pool capacity overflows u64".into()));
        }
        Ok(())
    }

    /// Parses a flat `key=value` file. Keys not present keep their default value.
    pub fn parse(text: &str) -> Result<Self, PresetError> {
        let mut preset = Preset::default();
        let mut seen = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| PresetError::Syntax { line, text: raw.to_string() })?;
            let (key, value) = (key.trim(), value.trim());
            let slot = preset
                .field_mut(key)
                .ok_or_else(|| PresetError::UnknownKey { line, key: key.to_string() })?;
            *slot = value.replace('_', "").parse().map_err(|_| PresetError::BadValue {
                line,
                key: key.to_string(),
                value: value.to_string(),
            })?;
            if seen.contains(&key) {
                return Err(PresetError::Duplicate { line, key: key.to_string() });
            }
            seen.push(key);
        }
        preset.validate()?;
        Ok(preset)
    }

    pub fn load(path: &Path) -> Result<Self, PresetError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PresetError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Renders every key, one per line, in a form [`Preset::parse`] reads back.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let _ = writeln!(out, "{key}={}", self.field(key));
        }
        out
    }

    /// Number of committees in one epoch when the per-slot count is clamped at its maximum.
    pub fn max_committees_per_epoch(&self) -> u64 {
        self.max_committees_per_slot * self.slots_per_epoch
    }

    pub fn epoch_pool_limit(&self) -> u64 {
        self.max_attestations * self.slots_per_epoch
    }
}
