//! Canonical binary layouts.
//!
//! Integers are little-endian except cumulative work, which is a 32-byte
//! big-endian quantity. Heights and transaction counts use the Bitcoin
//! variable-length integer (1 byte below 253, else 3/5/9-byte forms).
//!
//! Sizes: an equihash-emulation header is exactly 1,487 bytes, an
//! ethash-stub header 175, a bare mock-sha header 143; a full MMR node falls
//! in [212, 244] bytes depending on varint widths; distilled headers and
//! nodes are fixed at 104 (136 with previous hash) and 140 bytes.

use thiserror::Error;

use crate::chainsim::{EngineKind, Header};
use crate::hash::Digest;
use crate::mmr::{AuxFields, MmrNode};
use crate::work::Work;

use super::distill::{DistilledHeader, DistilledNode};

pub const DISTILLED_HEADER_LEN: usize = 104;
pub const DISTILLED_HEADER_SPV_LEN: usize = 136;
pub const DISTILLED_NODE_LEN: usize = 140;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodecError {
    #[error("unexpected end of input at offset {0}")]
    Truncated(usize),
    #[error("trailing bytes after decode")]
    TrailingBytes,
    #[error("non-canonical varint")]
    NonCanonicalVarint,
    #[error("solution length {got} does not match engine ({expect})")]
    SolutionLength { got: usize, expect: usize },
    #[error("distilled encoding requires a 32-byte memory-hard solution")]
    DistillRequiresMixhash,
    #[error("invalid field: {0}")]
    InvalidField(&'static str),
}

/// Append the CompactSize encoding of `v`.
pub fn write_varint(out: &mut Vec<u8>, v: u64) {
    match v {
        0..=0xfc => out.push(v as u8),
        0xfd..=0xffff => {
            out.push(0xfd);
            out.extend_from_slice(&(v as u16).to_le_bytes());
        }
        0x1_0000..=0xffff_ffff => {
            out.push(0xfe);
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        _ => {
            out.push(0xff);
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
}

pub fn varint_len(v: u64) -> usize {
    match v {
        0..=0xfc => 1,
        0xfd..=0xffff => 3,
        0x1_0000..=0xffff_ffff => 5,
        _ => 9,
    }
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(data: &'a [u8]) -> Reader<'a> {
        Reader { data, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], CodecError> {
        if self.pos + n > self.data.len() {
            return Err(CodecError::Truncated(self.pos));
        }
        let out = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32, CodecError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, CodecError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn digest(&mut self) -> Result<Digest, CodecError> {
        Ok(Digest(self.take(32)?.try_into().unwrap()))
    }

    fn work(&mut self) -> Result<Work, CodecError> {
        Ok(Work::from_be_bytes(self.take(32)?.try_into().unwrap()))
    }

    fn varint(&mut self) -> Result<u64, CodecError> {
        let tag = self.take(1)?[0];
        let v = match tag {
            0..=0xfc => u64::from(tag),
            0xfd => {
                let v = u64::from(u16::from_le_bytes(self.take(2)?.try_into().unwrap()));
                if v < 0xfd {
                    return Err(CodecError::NonCanonicalVarint);
                }
                v
            }
            0xfe => {
                let v = u64::from(u32::from_le_bytes(self.take(4)?.try_into().unwrap()));
                if v <= 0xffff {
                    return Err(CodecError::NonCanonicalVarint);
                }
                v
            }
            0xff => {
                let v = u64::from_le_bytes(self.take(8)?.try_into().unwrap());
                if v <= 0xffff_ffff {
                    return Err(CodecError::NonCanonicalVarint);
                }
                v
            }
        };
        Ok(v)
    }

    fn finish(self) -> Result<(), CodecError> {
        if self.pos != self.data.len() {
            return Err(CodecError::TrailingBytes);
        }
        Ok(())
    }
}

/// Wire serialization of a header. The height is contextual and not encoded.
pub fn header_bytes(h: &Header) -> Vec<u8> {
    let mut out = Vec::with_capacity(143 + h.solution.len());
    out.extend_from_slice(&h.version.to_le_bytes());
    out.extend_from_slice(h.prev_hash.as_ref());
    out.extend_from_slice(h.merkle_root.as_ref());
    out.extend_from_slice(h.block_commitments.as_ref());
    out.extend_from_slice(&h.time.to_le_bytes());
    out.extend_from_slice(&h.bits.to_le_bytes());
    out.extend_from_slice(&h.nonce);
    // 3-byte solution length, matching the emulated production layout.
    let len = h.solution.len() as u32;
    out.extend_from_slice(&len.to_le_bytes()[..3]);
    out.extend_from_slice(&h.solution);
    out
}

/// Decode a header for the given engine; `height` restores the contextual
/// field.
pub fn decode_header(bytes: &[u8], engine: EngineKind, height: u64) -> Result<Header, CodecError> {
    let mut r = Reader::new(bytes);
    let version = r.u32()?;
    let prev_hash = r.digest()?;
    let merkle_root = r.digest()?;
    let block_commitments = r.digest()?;
    let time = r.u32()?;
    let bits = r.u32()?;
    let nonce: [u8; 32] = r.take(32)?.try_into().unwrap();
    let len_bytes = r.take(3)?;
    let sol_len = u32::from_le_bytes([len_bytes[0], len_bytes[1], len_bytes[2], 0]) as usize;
    if sol_len != engine.solution_len() {
        return Err(CodecError::SolutionLength {
            got: sol_len,
            expect: engine.solution_len(),
        });
    }
    let solution = r.take(sol_len)?.to_vec();
    r.finish()?;
    Ok(Header {
        version,
        prev_hash,
        merkle_root,
        block_commitments,
        time,
        bits,
        nonce,
        solution,
        height,
    })
}

fn aux_bytes_into(out: &mut Vec<u8>, aux: &AuxFields) {
    out.extend_from_slice(aux.earliest_sapling_root.as_ref());
    out.extend_from_slice(aux.latest_sapling_root.as_ref());
    write_varint(out, aux.sapling_tx_count);
    out.extend_from_slice(aux.earliest_orchard_root.as_ref());
    out.extend_from_slice(aux.latest_orchard_root.as_ref());
    write_varint(out, aux.orchard_tx_count);
}

/// Serialized Sapling/Orchard emulation fields, as hashed into distilled
/// nodes.
pub fn aux_bytes(aux: &AuxFields) -> Vec<u8> {
    let mut out = Vec::with_capacity(130);
    aux_bytes_into(&mut out, aux);
    out
}

/// Canonical full-node serialization: commitment, timestamps, targets,
/// heights (varint), cumulative work (big-endian), then the emulated
/// metadata fields.
pub fn node_bytes(n: &MmrNode) -> Vec<u8> {
    let mut out = Vec::with_capacity(244);
    out.extend_from_slice(n.commitment.as_ref());
    out.extend_from_slice(&n.earliest_timestamp.to_le_bytes());
    out.extend_from_slice(&n.latest_timestamp.to_le_bytes());
    out.extend_from_slice(&n.earliest_target.to_le_bytes());
    out.extend_from_slice(&n.latest_target.to_le_bytes());
    write_varint(&mut out, n.earliest_height);
    write_varint(&mut out, n.latest_height);
    out.extend_from_slice(&n.total_work.to_be_bytes());
    aux_bytes_into(&mut out, &n.aux);
    out
}

pub fn decode_node(bytes: &[u8]) -> Result<MmrNode, CodecError> {
    let mut r = Reader::new(bytes);
    let commitment = r.digest()?;
    let earliest_timestamp = r.u32()?;
    let latest_timestamp = r.u32()?;
    let earliest_target = r.u32()?;
    let latest_target = r.u32()?;
    let earliest_height = r.varint()?;
    let latest_height = r.varint()?;
    let total_work = r.work()?;
    let earliest_sapling_root = r.digest()?;
    let latest_sapling_root = r.digest()?;
    let sapling_tx_count = r.varint()?;
    let earliest_orchard_root = r.digest()?;
    let latest_orchard_root = r.digest()?;
    let orchard_tx_count = r.varint()?;
    r.finish()?;
    if latest_height < earliest_height {
        return Err(CodecError::InvalidField("latest height below earliest"));
    }
    Ok(MmrNode {
        commitment,
        earliest_timestamp,
        latest_timestamp,
        earliest_target,
        latest_target,
        earliest_height,
        latest_height,
        total_work,
        aux: AuxFields {
            earliest_sapling_root,
            latest_sapling_root,
            sapling_tx_count,
            earliest_orchard_root,
            latest_orchard_root,
            orchard_tx_count,
        },
    })
}

/// Fixed 104-byte distilled header (136 with the optional previous hash).
pub fn distilled_header_bytes(d: &DistilledHeader) -> Vec<u8> {
    let mut out = Vec::with_capacity(DISTILLED_HEADER_SPV_LEN);
    out.extend_from_slice(d.header_hash.as_ref());
    out.extend_from_slice(d.mixhash.as_ref());
    out.extend_from_slice(d.chain_history_root.as_ref());
    out.extend_from_slice(&d.target_bits.to_le_bytes());
    out.extend_from_slice(&d.time.to_le_bytes());
    if let Some(prev) = &d.prev_hash {
        out.extend_from_slice(prev.as_ref());
    }
    out
}

pub fn decode_distilled_header(bytes: &[u8]) -> Result<DistilledHeader, CodecError> {
    if bytes.len() != DISTILLED_HEADER_LEN && bytes.len() != DISTILLED_HEADER_SPV_LEN {
        return Err(CodecError::Truncated(bytes.len()));
    }
    let mut r = Reader::new(bytes);
    let header_hash = r.digest()?;
    let mixhash = r.digest()?;
    let chain_history_root = r.digest()?;
    let target_bits = r.u32()?;
    let time = r.u32()?;
    let prev_hash = if bytes.len() == DISTILLED_HEADER_SPV_LEN {
        Some(r.digest()?)
    } else {
        None
    };
    r.finish()?;
    Ok(DistilledHeader {
        header_hash,
        mixhash,
        chain_history_root,
        target_bits,
        time,
        prev_hash,
    })
}

/// Fixed 140-byte distilled node: a flags word, the child commitment, the
/// FlyClient-essential fields at fixed widths, and the hash of the remaining
/// fields.
pub fn distilled_node_bytes(d: &DistilledNode) -> Vec<u8> {
    let mut out = Vec::with_capacity(DISTILLED_NODE_LEN);
    let flags: u32 = u32::from(d.internal);
    out.extend_from_slice(&flags.to_le_bytes());
    out.extend_from_slice(d.child_commitment.as_ref());
    out.extend_from_slice(&d.earliest_timestamp.to_le_bytes());
    out.extend_from_slice(&d.latest_timestamp.to_le_bytes());
    out.extend_from_slice(&d.earliest_target.to_le_bytes());
    out.extend_from_slice(&d.latest_target.to_le_bytes());
    out.extend_from_slice(&d.earliest_height.to_le_bytes());
    out.extend_from_slice(&d.latest_height.to_le_bytes());
    out.extend_from_slice(&d.total_work.to_be_bytes());
    out.extend_from_slice(d.other_fields_hash.as_ref());
    debug_assert_eq!(out.len(), DISTILLED_NODE_LEN);
    out
}

pub fn decode_distilled_node(bytes: &[u8]) -> Result<DistilledNode, CodecError> {
    if bytes.len() != DISTILLED_NODE_LEN {
        return Err(CodecError::Truncated(bytes.len()));
    }
    let mut r = Reader::new(bytes);
    let flags = r.u32()?;
    if flags > 1 {
        return Err(CodecError::InvalidField("reserved flag bits set"));
    }
    let child_commitment = r.digest()?;
    let earliest_timestamp = r.u64()?;
    let latest_timestamp = r.u64()?;
    let earliest_target = r.u32()?;
    let latest_target = r.u32()?;
    let earliest_height = r.u64()?;
    let latest_height = r.u64()?;
    let total_work = r.work()?;
    let other_fields_hash = r.digest()?;
    r.finish()?;
    Ok(DistilledNode {
        internal: flags & 1 == 1,
        child_commitment,
        earliest_timestamp,
        latest_timestamp,
        earliest_target,
        latest_target,
        earliest_height,
        latest_height,
        total_work,
        other_fields_hash,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn varint_widths() {
        for (v, len) in [(0u64, 1), (252, 1), (253, 3), (65535, 3), (65536, 5), (1 << 32, 9)] {
            let mut out = Vec::new();
            write_varint(&mut out, v);
            assert_eq!(out.len(), len);
            assert_eq!(varint_len(v), len);
            let mut r = Reader::new(&out);
            assert_eq!(r.varint().unwrap(), v);
        }
    }

    #[test]
    fn non_canonical_varint_rejected() {
        let mut r = Reader::new(&[0xfd, 0x01, 0x00]);
        assert_eq!(r.varint(), Err(CodecError::NonCanonicalVarint));
    }
}
