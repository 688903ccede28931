//! 256-bit cumulative work and compact difficulty targets.
//!
//! Targets use the Bitcoin/Zcash 4-byte compact encoding (`nBits`). The work
//! contributed by one block is `floor(2^256 / (target + 1))`, the standard
//! expected-hash-count convention, evaluated entirely in 256-bit arithmetic
//! as `(!target / (target + 1)) + 1`.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Sub};

use primitive_types::U256;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// 256-bit unsigned cumulative work.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Work(pub U256);

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WorkError {
    #[error("compact target {0:#010x} expands to zero")]
    ZeroTarget(u32),
    #[error("compact target {0:#010x} overflows 256 bits")]
    TargetOverflow(u32),
}

impl Work {
    pub const ZERO: Work = Work(U256::zero());
    pub const MAX: Work = Work(U256::MAX);

    pub fn from_u64(v: u64) -> Work {
        Work(U256::from(v))
    }

    /// Big-endian 32-byte form, as serialized on the wire.
    pub fn to_be_bytes(&self) -> [u8; 32] {
        let mut out = [0u8; 32];
        self.0.to_big_endian(&mut out);
        out
    }

    pub fn from_be_bytes(bytes: &[u8; 32]) -> Work {
        Work(U256::from_big_endian(bytes))
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.to_be_bytes())
    }

    pub fn from_hex(s: &str) -> Result<Work, hex::FromHexError> {
        let bytes = hex::decode(s)?;
        let arr: [u8; 32] = bytes
            .try_into()
            .map_err(|_| hex::FromHexError::InvalidStringLength)?;
        Ok(Work::from_be_bytes(&arr))
    }

    /// Lossy conversion for ratio arithmetic (sampling distributions).
    pub fn as_f64(&self) -> f64 {
        let mut acc = 0.0f64;
        for limb in self.0 .0.iter().rev() {
            acc = acc * 1.8446744073709552e19 + *limb as f64;
        }
        acc
    }

    pub fn saturating_add(self, rhs: Work) -> Work {
        Work(self.0.saturating_add(rhs.0))
    }

    pub fn checked_sub(self, rhs: Work) -> Option<Work> {
        self.0.checked_sub(rhs.0).map(Work)
    }

    pub fn saturating_mul_u64(self, k: u64) -> Work {
        Work(self.0.saturating_mul(U256::from(k)))
    }
}

impl Add for Work {
    type Output = Work;
    fn add(self, rhs: Work) -> Work {
        Work(self.0 + rhs.0)
    }
}

impl AddAssign for Work {
    fn add_assign(&mut self, rhs: Work) {
        self.0 += rhs.0;
    }
}

impl Sub for Work {
    type Output = Work;
    fn sub(self, rhs: Work) -> Work {
        Work(self.0 - rhs.0)
    }
}

impl Sum for Work {
    fn sum<I: Iterator<Item = Work>>(iter: I) -> Work {
        iter.fold(Work::ZERO, |acc, w| acc + w)
    }
}

impl fmt::Debug for Work {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Work({})", self.0)
    }
}

impl fmt::Display for Work {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for Work {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Work {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Work::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

/// Expand a 4-byte compact target into its 256-bit value.
///
/// Compact form: high byte is a base-256 exponent, low three bytes are the
/// mantissa. `target = mantissa * 256^(exponent - 3)`. Mantissas with the
/// 0x800000 bit set (negative in Bitcoin's signed convention) are rejected
/// by normalization at encode time and treated literally here.
pub fn expand_target(bits: u32) -> Result<U256, WorkError> {
    let exponent = (bits >> 24) as usize;
    let mantissa = U256::from(bits & 0x007f_ffff);
    if mantissa.is_zero() {
        return Err(WorkError::ZeroTarget(bits));
    }
    let target = if exponent <= 3 {
        mantissa >> (8 * (3 - exponent))
    } else {
        let shift = 8 * (exponent - 3);
        if shift >= 256 || (mantissa.bits() + shift) > 256 {
            return Err(WorkError::TargetOverflow(bits));
        }
        mantissa << shift
    };
    if target.is_zero() {
        return Err(WorkError::ZeroTarget(bits));
    }
    Ok(target)
}

/// Compress a 256-bit target to the canonical compact form (lossy).
pub fn compact_from_target(target: U256) -> u32 {
    if target.is_zero() {
        return 0;
    }
    let mut size = (target.bits() + 7) / 8;
    let mut mantissa = if size <= 3 {
        (target << (8 * (3 - size))).low_u32()
    } else {
        (target >> (8 * (size - 3))).low_u32()
    };
    // Keep the sign bit clear, matching the canonical Bitcoin encoding.
    if mantissa & 0x0080_0000 != 0 {
        mantissa >>= 8;
        size += 1;
    }
    ((size as u32) << 24) | (mantissa & 0x007f_ffff)
}

/// Work of a single block mined at compact target `bits`:
/// `floor(2^256 / (target + 1))`.
pub fn work_from_bits(bits: u32) -> Result<Work, WorkError> {
    let target = expand_target(bits)?;
    Ok(work_from_target(target))
}

/// Work for an already-expanded target.
pub fn work_from_target(target: U256) -> Work {
    if target == U256::MAX {
        return Work(U256::one());
    }
    Work((!target) / (target + U256::one()) + U256::one())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expand_compress_round_trip_on_canonical_bits() {
        for bits in [0x1d00ffffu32, 0x1f07ffff, 0x2000ffff, 0x1e011111, 0x03001234] {
            let t = expand_target(bits).unwrap();
            assert_eq!(compact_from_target(t), bits, "bits {bits:#x}");
        }
    }

    #[test]
    fn zero_mantissa_rejected() {
        assert_eq!(expand_target(0x1d000000), Err(WorkError::ZeroTarget(0x1d000000)));
    }

    #[test]
    fn overflow_rejected() {
        assert!(matches!(expand_target(0x22ffffff), Err(WorkError::TargetOverflow(_))));
    }

    #[test]
    fn work_matches_div_definition() {
        // For small targets the quotient identity equals 2^256/(t+1) exactly:
        // with t = 2^k - 1, work = 2^(256-k).
        let t = (U256::one() << 200) - U256::one();
        let w = work_from_target(t);
        assert_eq!(w.0, U256::one() << 56);
    }

    #[test]
    fn work_monotone_in_difficulty() {
        let easy = work_from_bits(0x1f07ffff).unwrap();
        let hard = work_from_bits(0x1e07ffff).unwrap();
        assert!(hard > easy);
    }

    #[test]
    fn be_bytes_round_trip() {
        let w = Work(U256::from(0x1234_5678_9abc_def0u64));
        assert_eq!(Work::from_be_bytes(&w.to_be_bytes()), w);
    }

    #[test]
    fn f64_approximation_scale() {
        let w = Work::from_u64(1_000_000);
        assert!((w.as_f64() - 1.0e6).abs() < 1e-6);
        let big = Work(U256::one() << 200);
        let expect = 2f64.powi(200);
        assert!((big.as_f64() / expect - 1.0).abs() < 1e-12);
    }
}
