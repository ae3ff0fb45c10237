//! Checked 64-bit arithmetic for slots, epochs and Gwei.
//!
//! Every consensus quantity is a `u64`. A wrapping add, sub or mul is never
//! allowed to produce a value: it surfaces as [`ArithmeticOverflow`], which the
//! state transition reports as an invalid transition.

use thiserror::Error;

pub type Slot = u64;
pub type Epoch = u64;
pub type ValidatorIndex = u64;
pub type Gwei = u64;
pub type CommitteeIndex = u64;

/// Exit epoch of a validator that never exits.
pub const FAR_FUTURE_EPOCH: Epoch = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("u64 {op} overflow: {lhs} {symbol} {rhs}", symbol = self.symbol())]
pub struct ArithmeticOverflow {
    pub op: ArithOp,
    pub lhs: u64,
    pub rhs: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl std::fmt::Display for ArithOp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ArithOp::Add => "add",
            ArithOp::Sub => "sub",
            ArithOp::Mul => "mul",
            ArithOp::Div => "div",
        })
    }
}

impl ArithmeticOverflow {
    fn symbol(&self) -> &'static str {
        match self.op {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
            ArithOp::Div => "/",
        }
    }
}

pub fn checked_add(a: u64, b: u64) -> Result<u64, ArithmeticOverflow> {
    a.checked_add(b).ok_or(ArithmeticOverflow { op: ArithOp::Add, lhs: a, rhs: b })
}

pub fn checked_sub(a: u64, b: u64) -> Result<u64, ArithmeticOverflow> {
    a.checked_sub(b).ok_or(ArithmeticOverflow { op: ArithOp::Sub, lhs: a, rhs: b })
}

pub fn checked_mul(a: u64, b: u64) -> Result<u64, ArithmeticOverflow> {
    a.checked_mul(b).ok_or(ArithmeticOverflow { op: ArithOp::Mul, lhs: a, rhs: b })
}

/// Division by zero is reported through the same error so callers have one failure path.
pub fn checked_div(a: u64, b: u64) -> Result<u64, ArithmeticOverflow> {
    a.checked_div(b).ok_or(ArithmeticOverflow { op: ArithOp::Div, lhs: a, rhs: b })
}

/// Sum of an iterator of u64 values, failing on the first wrap.
pub fn checked_sum<I: IntoIterator<Item = u64>>(values: I) -> Result<u64, ArithmeticOverflow> {
    values.into_iter().try_fold(0u64, checked_add)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn add_examples() {
        assert_eq!(checked_add(0, 0), Ok(0));
        assert_eq!(
            checked_add(u64::MAX, 1),
            Err(ArithmeticOverflow { op: ArithOp::Add, lhs: u64::MAX, rhs: 1 })
        );
        assert_eq!(checked_add(32_000_000_000, 100_000), Ok(32_000_100_000));
    }

    #[test]
    fn sub_and_div_failures() {
        assert!(checked_sub(0, 1).is_err());
        assert!(checked_div(7, 0).is_err());
        assert_eq!(checked_div(7, 2), Ok(3));
        assert!(checked_mul(u64::MAX / 2 + 1, 2).is_err());
    }

    #[test]
    fn error_message_names_operands() {
        let e = checked_sub(3, 5).unwrap_err();
        assert_eq!(e.to_string(), "u64 sub overflow: 3 - 5");
    }

    fn boundary() -> impl Strategy<Value = u64> {
        prop_oneof![
            Just(0u64),
            Just(1u64),
            Just(u64::MAX),
            Just(u64::MAX - 1),
            Just(1u64 << 63),
            Just(u32::MAX as u64),
            any::<u64>(),
        ]
    }

    proptest! {
        // exact integer result or an overflow error, compared against u128
        #[test]
        fn never_wraps(a in boundary(), b in boundary()) {
            let (wa, wb) = (a as u128, b as u128);
            match checked_add(a, b) {
                Ok(v) => prop_assert_eq!(v as u128, wa + wb),
                Err(_) => prop_assert!(wa + wb > u64::MAX as u128),
            }
            match checked_sub(a, b) {
                Ok(v) => prop_assert_eq!(v as u128 + wb, wa),
                Err(_) => prop_assert!(wa < wb),
            }
            match checked_mul(a, b) {
                Ok(v) => prop_assert_eq!(v as u128, wa * wb),
                Err(_) => prop_assert!(wa * wb > u64::MAX as u128),
            }
        }
    }
}
