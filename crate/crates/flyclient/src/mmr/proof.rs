//! Single and cumulative proofs of ancestry.
//!
//! A proof for a sampled leaf set is the minimal antichain of persistent
//! nodes covering exactly the complement of the samples. Verification
//! recombines the sampled leaves with the proof nodes bottom-up, recording
//! every internal node recomputed along the way, folds the peaks, and
//! compares against the expected root commitment.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::hash::{Digest, HashFn};
use crate::work::Work;

use super::index;
use super::{fold_peak_nodes, LeafMeta, MmrError, MmrNode, NodeFormat};

/// Minimal persistent-node cover of all leaves except `excluded`.
///
/// Per mountain: emit the maximal aligned subtrees containing no excluded
/// leaf; recurse into halves otherwise.
fn cover_indices(leaf_count: u64, excluded: &BTreeSet<u64>) -> Vec<u64> {
    let mut out = Vec::new();
    for (_, first_leaf, height) in index::peaks(leaf_count) {
        cover_rec(first_leaf, height, excluded, &mut out);
    }
    out.sort_unstable();
    out
}

fn cover_rec(first_leaf: u64, height: u32, excluded: &BTreeSet<u64>, out: &mut Vec<u64>) {
    let span = 1u64 << height;
    let end = first_leaf + span;
    let has_excluded = excluded.range(first_leaf..end).next().is_some();
    if !has_excluded {
        out.push(index::subtree_root_pos(first_leaf, height));
        return;
    }
    if height == 0 {
        return; // the excluded leaf itself
    }
    let half = height - 1;
    cover_rec(first_leaf, half, excluded, out);
    cover_rec(first_leaf + span / 2, half, excluded, out);
}

/// Node indices of the proof of ancestry for a single leaf.
pub fn ancestry_proof_indices(leaf_count: u64, target_leaf: u64) -> Result<Vec<u64>, MmrError> {
    if target_leaf >= leaf_count {
        return Err(MmrError::LeafOutOfRange {
            leaf: target_leaf,
            leaf_count,
        });
    }
    let mut excluded = BTreeSet::new();
    excluded.insert(target_leaf);
    Ok(cover_indices(leaf_count, &excluded))
}

/// Node indices of the cumulative proof of ancestry for a leaf set.
pub fn cumulative_proof_indices(
    leaf_count: u64,
    targets: &BTreeSet<u64>,
) -> Result<Vec<u64>, MmrError> {
    if targets.is_empty() {
        return Err(MmrError::EmptyTargetSet);
    }
    if let Some(&max) = targets.iter().next_back() {
        if max >= leaf_count {
            return Err(MmrError::LeafOutOfRange {
                leaf: max,
                leaf_count,
            });
        }
    }
    Ok(cover_indices(leaf_count, targets))
}

/// Proof payload: cover nodes keyed by creation-order index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AncestryProof {
    pub entries: Vec<(u64, MmrNode)>,
}

impl AncestryProof {
    pub fn indices(&self) -> Vec<u64> {
        self.entries.iter().map(|(i, _)| *i).collect()
    }

    pub fn node_count(&self) -> usize {
        self.entries.len()
    }
}

/// A sampled leaf as reconstructed by the verifier from a downloaded header.
#[derive(Debug, Clone, Copy)]
pub struct SampledLeaf {
    pub leaf_index: u64,
    pub header_digest: Digest,
    pub meta: LeafMeta,
}

/// Why a structurally well-formed cover failed to verify.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CoverFailure {
    /// The provided index set is not the expected cover for the sampled
    /// positions (gap, overlap, or wrong proof presented for these leaves).
    IndexSetMismatch {
        expected: Vec<u64>,
        got: Vec<u64>,
    },
    /// A proof node declares heights inconsistent with its index-derived
    /// leaf interval.
    NodeInterval {
        index: u64,
    },
    /// A sampled leaf's metadata cannot form a valid leaf node.
    LeafMeta {
        leaf: u64,
    },
    RootMismatch {
        expected: Digest,
        got: Digest,
    },
}

/// Result of recombining a cover against an expected root.
#[derive(Debug, Clone)]
pub struct CoverOutcome {
    pub accepted: bool,
    pub failure: Option<CoverFailure>,
    /// Persistent internal nodes recomputed during recombination, by index.
    pub reconstructed: BTreeMap<u64, MmrNode>,
    /// Every subtree node available after recombination, keyed by
    /// `(first_leaf, height)`: given cover nodes, sampled leaves, and
    /// reconstructed internals.
    pub subtrees: BTreeMap<(u64, u32), MmrNode>,
    /// Sorted leaf tiling `(first_leaf, leaf_span, work)` of the cover plus
    /// samples, for prefix-work accounting.
    pub tiling: Vec<(u64, u64, Work)>,
    /// The reconstructed root node, when recombination got that far.
    pub root: Option<MmrNode>,
}

impl CoverOutcome {
    fn rejected(failure: CoverFailure) -> CoverOutcome {
        CoverOutcome {
            accepted: false,
            failure: Some(failure),
            reconstructed: BTreeMap::new(),
            subtrees: BTreeMap::new(),
            tiling: Vec::new(),
            root: None,
        }
    }

    /// Exact cumulative work of leaves `[0, k)` when `k` falls on a tile
    /// boundary, otherwise `None`.
    pub fn prefix_work(&self, k: u64) -> Option<Work> {
        let mut acc = Work::ZERO;
        for &(first, span, w) in &self.tiling {
            if first == k {
                return Some(acc);
            }
            if first > k {
                return None;
            }
            acc += w;
            if first + span == k {
                return Some(acc);
            }
        }
        None
    }

    /// Lower/upper bounds on the cumulative work of leaves `[0, k)`: exact
    /// when `k` is a tile boundary, otherwise bracketed by the tile
    /// containing `k`.
    pub fn prefix_work_bounds(&self, k: u64) -> (Work, Work) {
        let mut acc = Work::ZERO;
        for &(first, span, w) in &self.tiling {
            if k <= first {
                return (acc, acc);
            }
            if k < first + span {
                return (acc, acc + w);
            }
            acc += w;
        }
        (acc, acc)
    }

    /// Chain-history root over the first `k` leaves, reconstructed from the
    /// available subtrees. Returns `None` for `k = 0` or when a prefix piece
    /// is hidden inside a cover node (never the case for sampled positions).
    pub fn prefix_root(
        &self,
        k: u64,
        format: NodeFormat,
        hasher: HashFn,
    ) -> Option<MmrNode> {
        if k == 0 {
            return None;
        }
        let mut pieces = Vec::new();
        let mut first = 0u64;
        for height in (0..64).rev() {
            if k & (1u64 << height) != 0 {
                pieces.push(self.subtrees.get(&(first, height))?.clone());
                first += 1u64 << height;
            }
        }
        fold_peak_nodes(pieces, format, hasher).ok()
    }
}

/// Verify a (single or cumulative) ancestry proof for `sampled` leaves
/// against `expected_root` over an MMR of `leaf_count` leaves whose first
/// leaf sits at chain height `height_offset`.
///
/// Structural malformations of the inputs (duplicate indices, out-of-range
/// positions) are hard errors; mismatches against the expected cover or the
/// root are reported as a rejected outcome with the failure cause.
pub fn verify_cover(
    expected_root: &Digest,
    sampled: &[SampledLeaf],
    proof: &AncestryProof,
    leaf_count: u64,
    height_offset: u64,
    format: NodeFormat,
    hasher: HashFn,
) -> Result<CoverOutcome, MmrError> {
    if sampled.is_empty() {
        return Err(MmrError::EmptyTargetSet);
    }
    let mut positions = BTreeSet::new();
    for s in sampled {
        if s.leaf_index >= leaf_count {
            return Err(MmrError::LeafOutOfRange {
                leaf: s.leaf_index,
                leaf_count,
            });
        }
        if !positions.insert(s.leaf_index) {
            return Err(MmrError::MalformedProof(format!(
                "duplicate sampled leaf {}",
                s.leaf_index
            )));
        }
    }
    let total_nodes = index::node_count(leaf_count);
    let mut given_indices = Vec::with_capacity(proof.entries.len());
    for (i, _) in &proof.entries {
        if *i >= total_nodes {
            return Err(MmrError::MalformedProof(format!(
                "proof index {i} out of range for {leaf_count} leaves"
            )));
        }
        given_indices.push(*i);
    }
    let sorted: BTreeSet<u64> = given_indices.iter().copied().collect();
    if sorted.len() != given_indices.len() {
        return Err(MmrError::MalformedProof("duplicate proof index".into()));
    }

    // The cover must be exactly the complement antichain for these samples.
    let expected_indices = cover_indices(leaf_count, &positions);
    let got: Vec<u64> = sorted.iter().copied().collect();
    if expected_indices != got {
        return Ok(CoverOutcome::rejected(CoverFailure::IndexSetMismatch {
            expected: expected_indices,
            got,
        }));
    }

    // Place proof nodes and sampled leaves on the leaf axis.
    let mut subtrees: BTreeMap<(u64, u32), MmrNode> = BTreeMap::new();
    for (pos, node) in &proof.entries {
        let (first_leaf, height) = index::interval_for_pos(*pos);
        let span = 1u64 << height;
        let expect_earliest = height_offset + first_leaf;
        let expect_latest = expect_earliest + span - 1;
        if node.earliest_height != expect_earliest || node.latest_height != expect_latest {
            return Ok(CoverOutcome::rejected(CoverFailure::NodeInterval {
                index: *pos,
            }));
        }
        subtrees.insert((first_leaf, height), node.clone());
    }
    for s in sampled {
        if s.meta.height != height_offset + s.leaf_index {
            return Ok(CoverOutcome::rejected(CoverFailure::LeafMeta {
                leaf: s.leaf_index,
            }));
        }
        match MmrNode::leaf(s.header_digest, s.meta) {
            Ok(node) => {
                subtrees.insert((s.leaf_index, 0), node);
            }
            Err(_) => {
                return Ok(CoverOutcome::rejected(CoverFailure::LeafMeta {
                    leaf: s.leaf_index,
                }));
            }
        }
    }

    let tiling: Vec<(u64, u64, Work)> = subtrees
        .iter()
        .map(|(&(first, h), node)| (first, 1u64 << h, node.total_work))
        .collect();

    // Recombine each mountain; record persistent internals created on the way.
    let mut reconstructed = BTreeMap::new();
    let mut peaks = Vec::new();
    for (_, first_leaf, height) in index::peaks(leaf_count) {
        let peak = build_subtree(
            first_leaf,
            height,
            &mut subtrees,
            &mut reconstructed,
            format,
            hasher,
        );
        peaks.push(peak);
    }
    let root = fold_peak_nodes(peaks, format, hasher)?;
    let accepted = root.commitment == *expected_root;
    let failure = if accepted {
        None
    } else {
        Some(CoverFailure::RootMismatch {
            expected: *expected_root,
            got: root.commitment,
        })
    };
    Ok(CoverOutcome {
        accepted,
        failure,
        reconstructed,
        subtrees,
        tiling,
        root: Some(root),
    })
}

fn build_subtree(
    first_leaf: u64,
    height: u32,
    subtrees: &mut BTreeMap<(u64, u32), MmrNode>,
    reconstructed: &mut BTreeMap<u64, MmrNode>,
    format: NodeFormat,
    hasher: HashFn,
) -> MmrNode {
    if let Some(node) = subtrees.get(&(first_leaf, height)) {
        return node.clone();
    }
    debug_assert!(height > 0, "missing leaf {first_leaf} in tiling");
    let half = 1u64 << (height - 1);
    let left = build_subtree(first_leaf, height - 1, subtrees, reconstructed, format, hasher);
    let right = build_subtree(
        first_leaf + half,
        height - 1,
        subtrees,
        reconstructed,
        format,
        hasher,
    );
    let parent = MmrNode::merge(&left, &right, format, hasher);
    subtrees.insert((first_leaf, height), parent.clone());
    reconstructed.insert(index::subtree_root_pos(first_leaf, height), parent.clone());
    parent
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hash::{self, derive_digest};
    use crate::mmr::Mmr;

    fn leaf_meta(height: u64) -> LeafMeta {
        LeafMeta {
            timestamp: 1_700_000_000 + height as u32 * 75,
            target_bits: 0x1f07ffff,
            height,
        }
    }

    fn digest_for(i: u64) -> Digest {
        derive_digest("proof-header", 3, i)
    }

    fn build(n: u64) -> Mmr {
        let mut mmr = Mmr::new(NodeFormat::Full);
        for i in 0..n {
            mmr.append_leaf(digest_for(i), leaf_meta(i)).unwrap();
        }
        mmr
    }

    fn proof_for(mmr: &Mmr, indices: &[u64]) -> AncestryProof {
        AncestryProof {
            entries: indices
                .iter()
                .map(|&i| (i, mmr.node(i).unwrap().clone()))
                .collect(),
        }
    }

    #[test]
    fn eleven_leaf_single_proofs_match_known_sets() {
        assert_eq!(ancestry_proof_indices(11, 3).unwrap(), vec![2, 3, 13, 17, 18]);
        assert_eq!(ancestry_proof_indices(11, 6).unwrap(), vec![6, 9, 11, 17, 18]);
    }

    #[test]
    fn two_leaf_proof_is_sibling() {
        assert_eq!(ancestry_proof_indices(2, 0).unwrap(), vec![1]);
    }

    #[test]
    fn out_of_range_leaf_rejected() {
        assert!(matches!(
            ancestry_proof_indices(11, 11),
            Err(MmrError::LeafOutOfRange { .. })
        ));
    }

    #[test]
    fn cumulative_eleven_leaf_pair() {
        let targets: BTreeSet<u64> = [3u64, 6].into_iter().collect();
        let cumulative = cumulative_proof_indices(11, &targets).unwrap();
        assert_eq!(cumulative, vec![2, 3, 9, 11, 17, 18]);
        // Distinct nodes across the two cached individual proofs: 8.
        let union: BTreeSet<u64> = ancestry_proof_indices(11, 3)
            .unwrap()
            .into_iter()
            .chain(ancestry_proof_indices(11, 6).unwrap())
            .collect();
        assert_eq!(union.len(), 8);
        assert!(cumulative.len() < union.len());
        assert!(cumulative.iter().all(|i| union.contains(i)));
    }

    #[test]
    fn cumulative_single_target_reduces_to_ancestry() {
        for n in [5u64, 11, 33] {
            for leaf in 0..n {
                let targets: BTreeSet<u64> = [leaf].into_iter().collect();
                assert_eq!(
                    cumulative_proof_indices(n, &targets).unwrap(),
                    ancestry_proof_indices(n, leaf).unwrap()
                );
            }
        }
    }

    #[test]
    fn cumulative_everything_sampled_is_empty() {
        let targets: BTreeSet<u64> = (0..16u64).collect();
        assert!(cumulative_proof_indices(16, &targets).unwrap().is_empty());
    }

    #[test]
    fn cumulative_empty_targets_rejected() {
        assert!(matches!(
            cumulative_proof_indices(16, &BTreeSet::new()),
            Err(MmrError::EmptyTargetSet)
        ));
    }

    #[test]
    fn honest_cover_verifies_and_reconstructs_internals() {
        let mmr = build(11);
        let root = mmr.root().unwrap();
        let targets: BTreeSet<u64> = [3u64, 6].into_iter().collect();
        let indices = cumulative_proof_indices(11, &targets).unwrap();
        let proof = proof_for(&mmr, &indices);
        let sampled = [
            SampledLeaf {
                leaf_index: 3,
                header_digest: digest_for(3),
                meta: leaf_meta(3),
            },
            SampledLeaf {
                leaf_index: 6,
                header_digest: digest_for(6),
                meta: leaf_meta(6),
            },
        ];
        let outcome =
            verify_cover(&root, &sampled, &proof, 11, 0, NodeFormat::Full, hash::sha256).unwrap();
        assert!(outcome.accepted, "failure: {:?}", outcome.failure);
        // Nodes 6 and 13 are recomputed from {2,3,H(B3)} and {9,11,H(B6)}.
        assert_eq!(
            outcome.reconstructed.get(&6).unwrap(),
            mmr.node(6).unwrap()
        );
        assert_eq!(
            outcome.reconstructed.get(&13).unwrap(),
            mmr.node(13).unwrap()
        );
    }

    #[test]
    fn prefix_roots_match_incremental_builds() {
        let mmr = build(11);
        let root = mmr.root().unwrap();
        let targets: BTreeSet<u64> = [3u64, 6].into_iter().collect();
        let proof = proof_for(&mmr, &cumulative_proof_indices(11, &targets).unwrap());
        let sampled = [
            SampledLeaf {
                leaf_index: 3,
                header_digest: digest_for(3),
                meta: leaf_meta(3),
            },
            SampledLeaf {
                leaf_index: 6,
                header_digest: digest_for(6),
                meta: leaf_meta(6),
            },
        ];
        let outcome =
            verify_cover(&root, &sampled, &proof, 11, 0, NodeFormat::Full, hash::sha256).unwrap();
        for k in [3u64, 6] {
            let expect = build(k).root().unwrap();
            let got = outcome
                .prefix_root(k, NodeFormat::Full, hash::sha256)
                .unwrap();
            assert_eq!(got.commitment, expect, "prefix {k}");
        }
    }

    #[test]
    fn flipped_node_byte_rejected_as_root_mismatch() {
        let mmr = build(11);
        let root = mmr.root().unwrap();
        let indices = ancestry_proof_indices(11, 6).unwrap();
        let mut proof = proof_for(&mmr, &indices);
        proof.entries[0].1.commitment.0[5] ^= 0x40;
        let sampled = [SampledLeaf {
            leaf_index: 6,
            header_digest: digest_for(6),
            meta: leaf_meta(6),
        }];
        let outcome =
            verify_cover(&root, &sampled, &proof, 11, 0, NodeFormat::Full, hash::sha256).unwrap();
        assert!(!outcome.accepted);
        assert!(matches!(
            outcome.failure,
            Some(CoverFailure::RootMismatch { .. })
        ));
    }

    #[test]
    fn proof_for_other_position_rejected_structurally() {
        let mmr = build(11);
        let root = mmr.root().unwrap();
        // Proof built for leaf 3, presented as covering leaf 6.
        let proof = proof_for(&mmr, &ancestry_proof_indices(11, 3).unwrap());
        let sampled = [SampledLeaf {
            leaf_index: 6,
            header_digest: digest_for(6),
            meta: leaf_meta(6),
        }];
        let outcome =
            verify_cover(&root, &sampled, &proof, 11, 0, NodeFormat::Full, hash::sha256).unwrap();
        assert!(!outcome.accepted);
        assert!(matches!(
            outcome.failure,
            Some(CoverFailure::IndexSetMismatch { .. })
        ));
    }

    #[test]
    fn duplicate_proof_index_is_structural_error() {
        let mmr = build(11);
        let root = mmr.root().unwrap();
        let mut proof = proof_for(&mmr, &ancestry_proof_indices(11, 6).unwrap());
        let dup = proof.entries[0].clone();
        proof.entries.push(dup);
        let sampled = [SampledLeaf {
            leaf_index: 6,
            header_digest: digest_for(6),
            meta: leaf_meta(6),
        }];
        assert!(matches!(
            verify_cover(&root, &sampled, &proof, 11, 0, NodeFormat::Full, hash::sha256),
            Err(MmrError::MalformedProof(_))
        ));
    }

    #[test]
    fn prefix_work_boundaries() {
        let mmr = build(16);
        let root = mmr.root().unwrap();
        let targets: BTreeSet<u64> = [5u64].into_iter().collect();
        let proof = proof_for(&mmr, &cumulative_proof_indices(16, &targets).unwrap());
        let sampled = [SampledLeaf {
            leaf_index: 5,
            header_digest: digest_for(5),
            meta: leaf_meta(5),
        }];
        let outcome =
            verify_cover(&root, &sampled, &proof, 16, 0, NodeFormat::Full, hash::sha256).unwrap();
        let per_leaf = crate::work::work_from_bits(0x1f07ffff).unwrap();
        assert_eq!(outcome.prefix_work(5).unwrap(), per_leaf.saturating_mul_u64(5));
        assert_eq!(outcome.prefix_work(6).unwrap(), per_leaf.saturating_mul_u64(6));
        let (lo, hi) = outcome.prefix_work_bounds(7);
        assert!(lo <= per_leaf.saturating_mul_u64(7) && per_leaf.saturating_mul_u64(7) <= hi);
    }
}
