//! Difficulty schedules and transition validation.
//!
//! Three schedules are supported: fixed target, linear difficulty growth
//! (target shrinks as `period / (period + height)`), and a seeded random walk
//! whose per-step target ratio stays within `[1/tau, tau]`. The random walk
//! cannot be recomputed without the seed, so its transition check is the
//! ratio-plausibility bound; the other two are checked for exact equality.

use primitive_types::U256;
use rand::Rng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::work::{compact_from_target, expand_target};

use super::{ChainError, ConsensusParams, Header};

/// Smallest target a schedule may reach before it is declared unsatisfiable.
const MIN_TARGET_BITS_EXP: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScheduleSpec {
    Fixed { bits: u32 },
    /// Difficulty grows linearly: `target(h) = base * period / (period + h)`.
    LinearGrowth { base_bits: u32, period: u64 },
    /// Seeded multiplicative random walk, per-step factor in `[1/2, 2]`,
    /// always within the `tau = 4` plausibility band.
    RandomWalk { base_bits: u32 },
}

impl ScheduleSpec {
    pub fn base_bits(&self) -> u32 {
        match *self {
            ScheduleSpec::Fixed { bits } => bits,
            ScheduleSpec::LinearGrowth { base_bits, .. } => base_bits,
            ScheduleSpec::RandomWalk { base_bits } => base_bits,
        }
    }
}

/// Evolving schedule state used during chain assembly.
#[derive(Debug, Clone)]
pub struct ScheduleState {
    spec: ScheduleSpec,
    last_target: Option<U256>,
}

impl ScheduleState {
    pub fn new(spec: ScheduleSpec) -> ScheduleState {
        ScheduleState {
            spec,
            last_target: None,
        }
    }

    /// Resume a walk from the last target of a kept prefix.
    pub fn resume(spec: ScheduleSpec, last_bits: u32) -> Result<ScheduleState, ChainError> {
        Ok(ScheduleState {
            spec,
            last_target: Some(expand_target(last_bits)?),
        })
    }

    /// Compact bits for the block at `height`. `walk_rng` feeds the random
    /// walk only.
    pub fn next_bits(&mut self, height: u64, walk_rng: &mut ChaCha20Rng) -> Result<u32, ChainError> {
        let target = match self.spec {
            ScheduleSpec::Fixed { bits } => expand_target(bits)?,
            ScheduleSpec::LinearGrowth { base_bits, period } => {
                let base = expand_target(base_bits)?;
                let denom = U256::from(period) + U256::from(height);
                base * U256::from(period) / denom
            }
            ScheduleSpec::RandomWalk { base_bits } => {
                let prev = match self.last_target {
                    None => expand_target(base_bits)?,
                    Some(prev) => {
                        // factor = 2^x, x uniform in [-1, 1], as a /2^16 ratio
                        let x: f64 = walk_rng.gen_range(-1.0..=1.0);
                        let num = (2f64.powf(x) * 65536.0) as u64;
                        prev / U256::from(65536u64) * U256::from(num)
                    }
                };
                clamp_walk_target(prev, base_bits)?
            }
        };
        if target.is_zero() || target.bits() < MIN_TARGET_BITS_EXP {
            return Err(ChainError::UnsatisfiableSchedule { height });
        }
        // Quantize through the compact encoding so stored bits re-expand to
        // exactly the scheduled target.
        let bits = compact_from_target(target);
        self.last_target = Some(expand_target(bits)?);
        Ok(bits)
    }
}

/// Keep random-walk targets within two octaves of the base so neither
/// underflow nor trivial difficulty can occur on long chains.
fn clamp_walk_target(target: U256, base_bits: u32) -> Result<U256, ChainError> {
    let base = expand_target(base_bits)?;
    let lo = base >> 2;
    let hi = base << 2;
    Ok(target.clamp(lo, hi))
}

/// Check `candidate` against the schedule given the preceding header window.
///
/// Fixed and linear schedules are deterministic functions of the height and
/// are checked exactly; the random walk is checked for ratio plausibility
/// within `[1/tau, tau]`. Timestamps may drift at most one hour backwards.
pub fn validate_transition(
    window: &[Header],
    candidate: &Header,
    params: &ConsensusParams,
) -> bool {
    if let Some(prev) = window.last() {
        if candidate.time + 3600 <= prev.time {
            return false;
        }
    }
    match params.schedule {
        ScheduleSpec::Fixed { bits } => candidate.bits == bits,
        ScheduleSpec::LinearGrowth { base_bits, period } => {
            let Ok(base) = expand_target(base_bits) else {
                return false;
            };
            let denom = U256::from(period) + U256::from(candidate.height);
            let expect = compact_from_target(base * U256::from(period) / denom);
            candidate.bits == expect
        }
        ScheduleSpec::RandomWalk { .. } => match window.last() {
            None => true,
            Some(prev) => targets_within_ratio(prev.bits, candidate.bits, params.tau, 1),
        },
    }
}

/// True when `expand(a)` and `expand(b)` differ by at most a factor of
/// `tau^steps`, evaluated exactly in 256-bit arithmetic with saturation.
pub fn targets_within_ratio(a_bits: u32, b_bits: u32, tau: u32, steps: u64) -> bool {
    let (Ok(a), Ok(b)) = (expand_target(a_bits), expand_target(b_bits)) else {
        return false;
    };
    let mut bound_a = a;
    let mut bound_b = b;
    for _ in 0..steps {
        bound_a = bound_a.saturating_mul(U256::from(tau));
        bound_b = bound_b.saturating_mul(U256::from(tau));
        if bound_a == U256::MAX && bound_b == U256::MAX {
            break;
        }
    }
    b <= bound_a && a <= bound_b
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn header_with(bits: u32, time: u32, height: u64) -> Header {
        Header {
            version: 4,
            prev_hash: crate::hash::Digest::ZERO,
            merkle_root: crate::hash::Digest::ZERO,
            block_commitments: crate::hash::Digest::ZERO,
            time,
            bits,
            nonce: [0u8; 32],
            solution: Vec::new(),
            height,
        }
    }

    #[test]
    fn fixed_schedule_equality() {
        let params = ConsensusParams::default();
        let prev = header_with(0x1d3fffff, 1_700_000_000, 10);
        let ok = header_with(0x1d3fffff, 1_700_000_075, 11);
        let halved = header_with(0x1d1fffff, 1_700_000_075, 11);
        assert!(validate_transition(&[prev.clone()], &ok, &params));
        assert!(!validate_transition(&[prev], &halved, &params));
    }

    #[test]
    fn random_walk_ratio_bound() {
        let params = ConsensusParams {
            schedule: ScheduleSpec::RandomWalk { base_bits: 0x1d3fffff },
            ..ConsensusParams::default()
        };
        let prev = header_with(0x1d100000, 1_700_000_000, 5);
        // Ratio 4 passes, ratio 5 fails.
        let times4 = header_with(0x1d400000, 1_700_000_075, 6);
        let times5 = header_with(0x1d500000, 1_700_000_075, 6);
        assert!(validate_transition(&[prev.clone()], &times4, &params));
        assert!(!validate_transition(&[prev], &times5, &params));
    }

    #[test]
    fn backwards_time_drift_bounded() {
        let params = ConsensusParams::default();
        let prev = header_with(0x1d3fffff, 1_700_010_000, 10);
        let slight = header_with(0x1d3fffff, 1_700_010_000 - 3599, 11);
        let too_far = header_with(0x1d3fffff, 1_700_010_000 - 3600, 11);
        assert!(validate_transition(&[prev.clone()], &slight, &params));
        assert!(!validate_transition(&[prev], &too_far, &params));
    }

    #[test]
    fn walk_stays_within_band_and_validates() {
        let spec = ScheduleSpec::RandomWalk { base_bits: 0x1d3fffff };
        let mut state = ScheduleState::new(spec);
        let mut rng = ChaCha20Rng::seed_from_u64(42);
        let mut prev_bits = None;
        for h in 0..2000u64 {
            let bits = state.next_bits(h, &mut rng).unwrap();
            if let Some(p) = prev_bits {
                assert!(targets_within_ratio(p, bits, 4, 1), "step at {h}");
            }
            prev_bits = Some(bits);
        }
    }

    #[test]
    fn linear_growth_underflow_errors() {
        let spec = ScheduleSpec::LinearGrowth {
            base_bits: 0x0401ffff,
            period: 1,
        };
        let mut state = ScheduleState::new(spec);
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let err = state.next_bits(u64::MAX / 2, &mut rng).unwrap_err();
        assert!(matches!(err, ChainError::UnsatisfiableSchedule { .. }));
    }
}
