//! Distilled header and node formats.
//!
//! Distillation strips a proof item down to the fields a FlyClient check
//! actually reads. A distilled header carries the full header's hash, the
//! memory-hard solution, the chain-history root, the target and the
//! timestamp; the PoW digest is computed over exactly these fields, binding
//! them. A distilled node keeps the child commitment and the
//! difficulty-transition fields and replaces everything else with one hash.

use serde::{Deserialize, Serialize};

use crate::chainsim::Header;
use crate::hash::{self, Digest};
use crate::mmr::MmrNode;
use crate::work::Work;

use super::binary::{self, CodecError};

/// 104-byte verification-only header form; the optional previous hash (SPV
/// chaining) extends it to 136 bytes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistilledHeader {
    pub header_hash: Digest,
    pub mixhash: Digest,
    pub chain_history_root: Digest,
    pub target_bits: u32,
    pub time: u32,
    pub prev_hash: Option<Digest>,
}

impl DistilledHeader {
    /// Distill a full header. Requires a 32-byte memory-hard solution
    /// (ethash-stub chains); equihash blobs cannot be distilled.
    pub fn from_header(
        header: &Header,
        chain_history_root: Digest,
        include_prev: bool,
    ) -> Result<DistilledHeader, CodecError> {
        if header.solution.len() != 32 {
            return Err(CodecError::DistillRequiresMixhash);
        }
        Ok(DistilledHeader {
            header_hash: header.digest(),
            mixhash: Digest(header.solution.as_slice().try_into().unwrap()),
            chain_history_root,
            target_bits: header.bits,
            time: header.time,
            prev_hash: include_prev.then_some(header.prev_hash),
        })
    }

    pub fn without_prev(&self) -> DistilledHeader {
        DistilledHeader {
            prev_hash: None,
            ..self.clone()
        }
    }
}

/// 140-byte distilled MMR node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistilledNode {
    pub internal: bool,
    pub child_commitment: Digest,
    pub earliest_timestamp: u64,
    pub latest_timestamp: u64,
    pub earliest_target: u32,
    pub latest_target: u32,
    pub earliest_height: u64,
    pub latest_height: u64,
    pub total_work: Work,
    pub other_fields_hash: Digest,
}

impl DistilledNode {
    pub fn from_node(node: &MmrNode) -> DistilledNode {
        DistilledNode {
            internal: !node.is_leaf(),
            child_commitment: node.commitment,
            earliest_timestamp: u64::from(node.earliest_timestamp),
            latest_timestamp: u64::from(node.latest_timestamp),
            earliest_target: node.earliest_target,
            latest_target: node.latest_target,
            earliest_height: node.earliest_height,
            latest_height: node.latest_height,
            total_work: node.total_work,
            other_fields_hash: hash::sha256(&binary::aux_bytes(&node.aux)),
        }
    }
}
