//! Append-only Merkle Mountain Range with difficulty-metadata aggregation.
//!
//! Every persistent node carries, besides its subtree commitment, the
//! timestamps, compact targets and heights of the first and last covered
//! block plus the cumulative work of all covered blocks, so that a verifier
//! can check difficulty-transition plausibility and work totals from proof
//! nodes alone. Sapling/Orchard-style metadata is emulated: for a leaf it is
//! derived deterministically from the header digest, for internal nodes it
//! aggregates exactly like the real fields (earliest from the left child,
//! latest from the right, transaction counts summed).
//!
//! Node identifiers are creation-order positions (see [`index`]); generated
//! peak-folding nodes are recomputed on demand and never stored or numbered.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hash::{self, Digest, HashFn};
use crate::work::{self, Work, WorkError};

pub mod index;
pub mod proof;

pub use proof::{
    ancestry_proof_indices, cumulative_proof_indices, verify_cover, AncestryProof, CoverFailure,
    CoverOutcome, SampledLeaf,
};

#[derive(Debug, Error)]
pub enum MmrError {
    #[error("MMR is empty")]
    Empty,
    #[error("append height mismatch: expected {expected}, got {got}")]
    HeightMismatch { expected: u64, got: u64 },
    #[error("leaf {leaf} out of range for leaf count {leaf_count}")]
    LeafOutOfRange { leaf: u64, leaf_count: u64 },
    #[error("empty target set (full covers are the peak set)")]
    EmptyTargetSet,
    #[error("malformed proof: {0}")]
    MalformedProof(String),
    #[error(transparent)]
    Work(#[from] WorkError),
}

/// Hashing payload format: full nodes serialize all emulated fields, distilled
/// nodes replace the non-essential ones with their hash (consensus variant).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeFormat {
    Full,
    Distilled,
}

/// Emulated Sapling/Orchard node metadata. Not used by the FlyClient checks
/// themselves, but carried and aggregated so that serialized node sizes match
/// the production layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuxFields {
    pub earliest_sapling_root: Digest,
    pub latest_sapling_root: Digest,
    pub sapling_tx_count: u64,
    pub earliest_orchard_root: Digest,
    pub latest_orchard_root: Digest,
    pub orchard_tx_count: u64,
}

impl AuxFields {
    /// Leaf metadata is a deterministic function of the header digest, so a
    /// verifier can rebuild a leaf node from the header alone.
    pub fn for_leaf(header_digest: &Digest) -> AuxFields {
        let sapling = hash::sha256_pair(b"leaf-sapling-root", header_digest.as_ref());
        let orchard = hash::sha256_pair(b"leaf-orchard-root", header_digest.as_ref());
        let counts = hash::sha256_pair(b"leaf-tx-counts", header_digest.as_ref());
        let sapling_count = u64::from(u16::from_le_bytes([counts.0[0], counts.0[1]]) % 400);
        let orchard_count = u64::from(u16::from_le_bytes([counts.0[2], counts.0[3]]) % 400);
        AuxFields {
            earliest_sapling_root: sapling,
            latest_sapling_root: sapling,
            sapling_tx_count: sapling_count,
            earliest_orchard_root: orchard,
            latest_orchard_root: orchard,
            orchard_tx_count: orchard_count,
        }
    }

    fn merge(left: &AuxFields, right: &AuxFields) -> AuxFields {
        AuxFields {
            earliest_sapling_root: left.earliest_sapling_root,
            latest_sapling_root: right.latest_sapling_root,
            sapling_tx_count: left.sapling_tx_count + right.sapling_tx_count,
            earliest_orchard_root: left.earliest_orchard_root,
            latest_orchard_root: right.latest_orchard_root,
            orchard_tx_count: left.orchard_tx_count + right.orchard_tx_count,
        }
    }
}

/// Per-leaf consensus metadata supplied on append.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeafMeta {
    pub timestamp: u32,
    pub target_bits: u32,
    pub height: u64,
}

/// A persistent MMR node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MmrNode {
    pub commitment: Digest,
    pub earliest_timestamp: u32,
    pub latest_timestamp: u32,
    pub earliest_target: u32,
    pub latest_target: u32,
    pub earliest_height: u64,
    pub latest_height: u64,
    pub total_work: Work,
    pub aux: AuxFields,
}

impl MmrNode {
    /// Build the leaf node for a header digest and its consensus metadata.
    pub fn leaf(digest: Digest, meta: LeafMeta) -> Result<MmrNode, MmrError> {
        let w = work::work_from_bits(meta.target_bits)?;
        Ok(MmrNode {
            commitment: digest,
            earliest_timestamp: meta.timestamp,
            latest_timestamp: meta.timestamp,
            earliest_target: meta.target_bits,
            latest_target: meta.target_bits,
            earliest_height: meta.height,
            latest_height: meta.height,
            total_work: w,
            aux: AuxFields::for_leaf(&digest),
        })
    }

    pub fn is_leaf(&self) -> bool {
        self.earliest_height == self.latest_height
    }

    /// Number of leaves covered by this node.
    pub fn covered_leaves(&self) -> u64 {
        self.latest_height - self.earliest_height + 1
    }

    /// Canonical bytes used as hashing payload under `format`.
    pub fn hash_payload(&self, format: NodeFormat) -> Vec<u8> {
        match format {
            NodeFormat::Full => crate::codec::binary::node_bytes(self),
            NodeFormat::Distilled => crate::codec::binary::distilled_node_bytes(
                &crate::codec::distill::DistilledNode::from_node(self),
            ),
        }
    }

    /// Parent of two adjacent sibling subtrees.
    pub fn merge(left: &MmrNode, right: &MmrNode, format: NodeFormat, hasher: HashFn) -> MmrNode {
        debug_assert_eq!(left.latest_height + 1, right.earliest_height);
        let payload = [left.hash_payload(format), right.hash_payload(format)].concat();
        MmrNode {
            commitment: hasher(&payload),
            earliest_timestamp: left.earliest_timestamp,
            latest_timestamp: right.latest_timestamp,
            earliest_target: left.earliest_target,
            latest_target: right.latest_target,
            earliest_height: left.earliest_height,
            latest_height: right.latest_height,
            total_work: left.total_work + right.total_work,
            aux: AuxFields::merge(&left.aux, &right.aux),
        }
    }
}

/// Append-only MMR over header digests.
#[derive(Debug, Clone)]
pub struct Mmr {
    nodes: Vec<MmrNode>,
    leaf_count: u64,
    format: NodeFormat,
    hasher: HashFn,
}

impl Mmr {
    pub fn new(format: NodeFormat) -> Mmr {
        Mmr::with_hasher(format, hash::sha256)
    }

    pub fn with_hasher(format: NodeFormat, hasher: HashFn) -> Mmr {
        Mmr {
            nodes: Vec::new(),
            leaf_count: 0,
            format,
            hasher,
        }
    }

    pub fn leaf_count(&self) -> u64 {
        self.leaf_count
    }

    pub fn node_count(&self) -> u64 {
        self.nodes.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.leaf_count == 0
    }

    pub fn format(&self) -> NodeFormat {
        self.format
    }

    pub fn hasher(&self) -> HashFn {
        self.hasher
    }

    pub fn node(&self, pos: u64) -> Option<&MmrNode> {
        self.nodes.get(pos as usize)
    }

    pub fn nodes(&self) -> &[MmrNode] {
        &self.nodes
    }

    /// First covered height, if any. Later appends must stay contiguous
    /// relative to it.
    pub fn height_offset(&self) -> Option<u64> {
        self.nodes.first().map(|n| n.earliest_height)
    }

    /// Append the leaf for `header_digest` and carry-merge completed
    /// mountains. Returns the creation-order indices of every new node, the
    /// leaf first.
    pub fn append_leaf(
        &mut self,
        header_digest: Digest,
        meta: LeafMeta,
    ) -> Result<Vec<u64>, MmrError> {
        if let Some(offset) = self.height_offset() {
            let expected = offset + self.leaf_count;
            if meta.height != expected {
                return Err(MmrError::HeightMismatch {
                    expected,
                    got: meta.height,
                });
            }
        }
        let leaf_index = self.leaf_count;
        let leaf_node = MmrNode::leaf(header_digest, meta)?;
        let mut created = Vec::with_capacity(1 + leaf_index.trailing_ones() as usize);
        let mut right_pos = self.nodes.len() as u64;
        debug_assert_eq!(right_pos, index::leaf_pos(leaf_index));
        self.nodes.push(leaf_node);
        created.push(right_pos);
        for k in 1..=leaf_index.trailing_ones() {
            let subtree_nodes = (1u64 << k) - 1;
            let left_pos = right_pos - subtree_nodes;
            let parent = MmrNode::merge(
                &self.nodes[left_pos as usize],
                &self.nodes[right_pos as usize],
                self.format,
                self.hasher,
            );
            right_pos = self.nodes.len() as u64;
            self.nodes.push(parent);
            created.push(right_pos);
        }
        self.leaf_count += 1;
        Ok(created)
    }

    /// Peak positions, left to right.
    pub fn peak_positions(&self) -> Vec<u64> {
        index::peaks(self.leaf_count).iter().map(|p| p.0).collect()
    }

    /// Fold the peaks right-to-left through generated (non-persistent) nodes
    /// and return the resulting root node.
    pub fn root_node(&self) -> Result<MmrNode, MmrError> {
        let peaks = self.peak_positions();
        fold_peak_nodes(
            peaks
                .iter()
                .map(|&p| self.nodes[p as usize].clone())
                .collect(),
            self.format,
            self.hasher,
        )
    }

    /// Root commitment over all appended leaves.
    pub fn root(&self) -> Result<Digest, MmrError> {
        Ok(self.root_node()?.commitment)
    }

    /// Total work across all covered leaves.
    pub fn total_work(&self) -> Work {
        self.peak_positions()
            .iter()
            .map(|&p| self.nodes[p as usize].total_work)
            .sum()
    }
}

/// Reduce an ordered peak list to the single root node by folding from the
/// rightmost peak leftwards.
pub fn fold_peak_nodes(
    peaks: Vec<MmrNode>,
    format: NodeFormat,
    hasher: HashFn,
) -> Result<MmrNode, MmrError> {
    let mut iter = peaks.into_iter().rev();
    let mut acc = iter.next().ok_or(MmrError::Empty)?;
    for peak in iter {
        acc = MmrNode::merge(&peak, &acc, format, hasher);
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaf_meta(height: u64) -> LeafMeta {
        LeafMeta {
            timestamp: 1_700_000_000 + height as u32 * 75,
            target_bits: 0x1f07ffff,
            height,
        }
    }

    fn digest_for(i: u64) -> Digest {
        hash::derive_digest("test-header", 7, i)
    }

    fn build(n: u64) -> Mmr {
        let mut mmr = Mmr::new(NodeFormat::Full);
        for i in 0..n {
            mmr.append_leaf(digest_for(i), leaf_meta(i)).unwrap();
        }
        mmr
    }

    #[test]
    fn single_leaf_identity() {
        let mut mmr = Mmr::new(NodeFormat::Full);
        let created = mmr.append_leaf(digest_for(0), leaf_meta(0)).unwrap();
        assert_eq!(created, vec![0]);
        assert_eq!(mmr.peak_positions(), vec![0]);
        // Root of a single leaf is the leaf commitment itself.
        assert_eq!(mmr.root().unwrap(), digest_for(0));
    }

    #[test]
    fn two_leaves_root_is_parent_hash() {
        let mmr = build(2);
        let left = mmr.node(0).unwrap();
        let right = mmr.node(1).unwrap();
        let expect = hash::sha256(
            &[
                left.hash_payload(NodeFormat::Full),
                right.hash_payload(NodeFormat::Full),
            ]
            .concat(),
        );
        assert_eq!(mmr.root().unwrap(), expect);
    }

    #[test]
    fn peak_collapse_at_256_leaves() {
        let mut mmr = build(255);
        assert_eq!(mmr.peak_positions().len(), 8);
        mmr.append_leaf(digest_for(255), leaf_meta(255)).unwrap();
        assert_eq!(mmr.peak_positions().len(), 1);
    }

    #[test]
    fn eleven_leaves_node_layout() {
        let mmr = build(11);
        assert_eq!(mmr.node_count(), 19);
        assert_eq!(mmr.peak_positions(), vec![14, 17, 18]);
        // Power-of-two leaf counts reduce to the single peak's commitment.
        let m8 = build(8);
        assert_eq!(m8.root().unwrap(), m8.node(14).unwrap().commitment);
    }

    #[test]
    fn root_equals_independent_balanced_reduction() {
        // Independent oracle: hash the 11 leaves into balanced trees by plain
        // recursion over the mountain decomposition, then fold right-to-left.
        let mmr = build(11);

        fn subtree(leaves: &[(Digest, LeafMeta)], format: NodeFormat) -> MmrNode {
            if leaves.len() == 1 {
                return MmrNode::leaf(leaves[0].0, leaves[0].1).unwrap();
            }
            let mid = leaves.len() / 2;
            MmrNode::merge(
                &subtree(&leaves[..mid], format),
                &subtree(&leaves[mid..], format),
                format,
                hash::sha256,
            )
        }

        let leaves: Vec<(Digest, LeafMeta)> =
            (0..11).map(|i| (digest_for(i), leaf_meta(i))).collect();
        let mountains = [
            subtree(&leaves[0..8], NodeFormat::Full),
            subtree(&leaves[8..10], NodeFormat::Full),
            subtree(&leaves[10..11], NodeFormat::Full),
        ];
        let root = fold_peak_nodes(mountains.to_vec(), NodeFormat::Full, hash::sha256).unwrap();
        assert_eq!(mmr.root().unwrap(), root.commitment);
    }

    #[test]
    fn height_mismatch_rejected() {
        let mut mmr = build(3);
        let err = mmr.append_leaf(digest_for(9), leaf_meta(9)).unwrap_err();
        assert!(matches!(
            err,
            MmrError::HeightMismatch {
                expected: 3,
                got: 9
            }
        ));
    }

    #[test]
    fn node_count_invariant() {
        for n in [1u64, 2, 3, 11, 64, 255, 256, 300] {
            let mmr = build(n);
            assert_eq!(mmr.node_count(), 2 * n - u64::from(n.count_ones()));
            assert_eq!(mmr.peak_positions().len() as u32, n.count_ones());
        }
    }

    #[test]
    fn empty_root_errors() {
        let mmr = Mmr::new(NodeFormat::Full);
        assert!(matches!(mmr.root(), Err(MmrError::Empty)));
    }

    #[test]
    fn work_aggregation_matches_per_leaf_sum() {
        let mmr = build(37);
        let per_leaf = work::work_from_bits(0x1f07ffff).unwrap();
        assert_eq!(mmr.total_work(), per_leaf.saturating_mul_u64(37));
        for node in mmr.nodes() {
            assert_eq!(
                node.total_work,
                per_leaf.saturating_mul_u64(node.covered_leaves())
            );
        }
    }
}
