//! Mock proof-of-work: digest-vs-target comparison with a difficulty scale.
//!
//! The effective mining target is `expand(bits) * difficulty_scale`
//! (saturating), so expected attempts shrink by the scale factor while work
//! accounting stays nominal. Under distilled consensus the final digest is
//! computed over the distilled header fields (header hash, mixhash,
//! chain-history root, target, timestamp), binding them all.

use primitive_types::U256;
use rand::RngCore;
use rand_chacha::ChaCha20Rng;

use crate::codec::binary;
use crate::codec::distill::DistilledHeader;
use crate::hash::{self, Digest};
use crate::work::{expand_target, WorkError};

use super::{ConsensusParams, Header};

pub fn effective_target(bits: u32, scale: u64) -> Result<U256, WorkError> {
    Ok(expand_target(bits)?.saturating_mul(U256::from(scale)))
}

/// PoW digest for a header. `chain_history_root` is only consulted under
/// distilled consensus, where it is part of the bound fields.
pub fn pow_digest(
    header: &Header,
    chain_history_root: &Digest,
    params: &ConsensusParams,
) -> Digest {
    if params.distilled {
        let distilled = DistilledHeader {
            header_hash: header.digest(),
            mixhash: mixhash_of(header),
            chain_history_root: *chain_history_root,
            target_bits: header.bits,
            time: header.time,
            prev_hash: None,
        };
        hash::sha256(&binary::distilled_header_bytes(&distilled))
    } else {
        header.digest()
    }
}

fn mixhash_of(header: &Header) -> Digest {
    let mut d = [0u8; 32];
    let n = header.solution.len().min(32);
    d[..n].copy_from_slice(&header.solution[..n]);
    Digest(d)
}

pub fn pow_valid(
    header: &Header,
    chain_history_root: &Digest,
    params: &ConsensusParams,
) -> Result<bool, WorkError> {
    let digest = pow_digest(header, chain_history_root, params);
    let target = effective_target(header.bits, params.difficulty_scale)?;
    Ok(U256::from_big_endian(digest.as_ref()) < target)
}

/// PoW check usable by a verifier holding only a distilled header.
pub fn distilled_pow_valid(
    distilled: &DistilledHeader,
    params: &ConsensusParams,
) -> Result<bool, WorkError> {
    let stripped = DistilledHeader {
        prev_hash: None,
        ..distilled.clone()
    };
    let digest = hash::sha256(&binary::distilled_header_bytes(&stripped));
    let target = effective_target(distilled.target_bits, params.difficulty_scale)?;
    Ok(U256::from_big_endian(digest.as_ref()) < target)
}

/// Vary the nonce until the header meets (or, for adversarial padding,
/// fails) its effective target. Deterministic for a given rng state.
pub fn mine(
    header: &mut Header,
    chain_history_root: &Digest,
    params: &ConsensusParams,
    want_valid: bool,
    rng: &mut ChaCha20Rng,
) -> Result<(), WorkError> {
    loop {
        rng.fill_bytes(&mut header.nonce);
        if pow_valid(header, chain_history_root, params)? == want_valid {
            return Ok(());
        }
    }
}
