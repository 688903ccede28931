//! Synthetic proof-of-work blockchain with mock mining.
//!
//! Chains are deterministic functions of a seed and a [`ConsensusParams`]
//! bundle. Solution blobs, transaction commitments and auth-data roots are
//! seed-derived pseudo-random bytes of the production sizes, so encodings and
//! proof-size measurements match the real layouts while mining stays cheap
//! (the PoW check compares the digest against `target * difficulty_scale`).
//!
//! The chain-history commitment reboots at every network upgrade: each
//! consensus branch keeps its own MMR, a header commits the root over all
//! strictly earlier headers of its branch, and the first header of a branch
//! commits the complete MMR of the previous branch (the connection point
//! between the old and the new tree).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hash::{self, Digest};
use crate::mmr::{Mmr, MmrError, NodeFormat};
use crate::work::{Work, WorkError};

mod build;
mod persist;
pub mod pow;
pub mod schedule;

pub use build::{
    build_adversarial_fork, build_adversarial_fork_with_plan, build_honest_chain,
    fork_valid_work, ForkPlacement, ForkPlan,
};
pub use persist::{load_chain, save_chain, ChainManifest};
pub use schedule::{validate_transition, ScheduleSpec};

#[derive(Debug, Error)]
pub enum ChainError {
    #[error("chain must contain at least one block")]
    Empty,
    #[error("upgrade heights must be strictly ascending, nonzero, and below the block count")]
    UpgradeHeights,
    #[error("unsatisfiable difficulty schedule at height {height}: target underflow")]
    UnsatisfiableSchedule { height: u64 },
    #[error("height {height} beyond tip {tip}")]
    HeightRange { height: u64, tip: u64 },
    #[error("fork height {fork_height} not below tip {tip}")]
    ForkHeight { fork_height: u64, tip: u64 },
    #[error("zero work budget with positive validity ratio")]
    ZeroBudget,
    #[error("validity ratio {0} outside [0, 1]")]
    ValidityRatio(f64),
    #[error("no work {0} in chain")]
    WorkRange(Work),
    #[error("distilled consensus requires the ethash-stub engine")]
    DistilledEngine,
    #[error("corrupt chain record at height {height}: {detail}")]
    Corrupt { height: u64, detail: String },
    #[error("chain i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("manifest: {0}")]
    Manifest(String),
    #[error(transparent)]
    Work(#[from] WorkError),
    #[error(transparent)]
    Mmr(#[from] MmrError),
}

/// Mock PoW engine kind. Solution blobs only matter for their byte size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EngineKind {
    /// No solution blob, bare double-hash style header.
    MockSha,
    /// 1344-byte pseudo-solution, production Zcash header layout.
    EquihashStub,
    /// 32-byte mixhash-style solution.
    EthashStub,
}

impl EngineKind {
    pub fn solution_len(&self) -> usize {
        match self {
            EngineKind::MockSha => 0,
            EngineKind::EquihashStub => 1344,
            EngineKind::EthashStub => 32,
        }
    }

    /// Serialized header size: fixed fields (143 bytes incl. the 3-byte
    /// solution length) plus the solution blob.
    pub fn header_wire_len(&self) -> usize {
        143 + self.solution_len()
    }
}

/// Block header. `height` is contextual (derived from chain position) and is
/// not part of the wire serialization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Header {
    pub version: u32,
    pub prev_hash: Digest,
    pub merkle_root: Digest,
    pub block_commitments: Digest,
    pub time: u32,
    pub bits: u32,
    pub nonce: [u8; 32],
    pub solution: Vec<u8>,
    pub height: u64,
}

impl Header {
    /// Hash of the canonical wire serialization.
    pub fn digest(&self) -> Digest {
        hash::sha256(&crate::codec::binary::header_bytes(self))
    }
}

/// Commitment stored in a header binding the auth-data root and the
/// chain-history root together.
pub fn block_commitments(auth_data_root: &Digest, chain_history_root: &Digest) -> Digest {
    hash::sha256_pair(auth_data_root.as_ref(), chain_history_root.as_ref())
}

/// Consensus constants shared by chain construction and verification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsensusParams {
    pub engine: EngineKind,
    pub schedule: ScheduleSpec,
    /// Target multiplier making desk-scale mining cheap. Work accounting
    /// always uses the nominal target.
    pub difficulty_scale: u64,
    /// Per-step plausibility bound on adjacent target ratios.
    pub tau: u32,
    /// Network-upgrade activation heights, strictly ascending.
    pub upgrade_heights: Vec<u64>,
    /// Distilled consensus: MMR nodes hash their distilled serialization and
    /// the PoW digest binds the FlyClient-relevant header fields.
    pub distilled: bool,
}

impl Default for ConsensusParams {
    fn default() -> Self {
        ConsensusParams {
            engine: EngineKind::MockSha,
            schedule: ScheduleSpec::Fixed { bits: 0x1d3fffff },
            difficulty_scale: 1 << 24,
            tau: 4,
            upgrade_heights: Vec::new(),
            distilled: false,
        }
    }
}

impl ConsensusParams {
    pub fn node_format(&self) -> NodeFormat {
        if self.distilled {
            NodeFormat::Distilled
        } else {
            NodeFormat::Full
        }
    }

    /// Index of the consensus branch containing `height`.
    pub fn branch_index_of(&self, height: u64) -> u32 {
        self.upgrade_heights
            .iter()
            .take_while(|&&u| u <= height)
            .count() as u32
    }

    /// First height of the branch with the given index.
    pub fn branch_start(&self, branch: u32) -> u64 {
        if branch == 0 {
            0
        } else {
            self.upgrade_heights[branch as usize - 1]
        }
    }

    /// Context for ancestry proofs under the header at `tip_height`: the
    /// branch whose MMR that header commits, and its start height. The first
    /// header of a branch commits the complete MMR of the previous branch.
    pub fn proof_context(&self, tip_height: u64) -> (u32, u64) {
        if tip_height == 0 {
            return (0, 0);
        }
        let branch = self.branch_index_of(tip_height - 1);
        (branch, self.branch_start(branch))
    }

    pub fn validate(&self) -> Result<(), ChainError> {
        if self.distilled && self.engine != EngineKind::EthashStub {
            return Err(ChainError::DistilledEngine);
        }
        let mut prev = 0u64;
        for &u in &self.upgrade_heights {
            if u == 0 || u <= prev {
                return Err(ChainError::UpgradeHeights);
            }
            prev = u;
        }
        Ok(())
    }
}

/// One consensus branch: its headers and the MMR over them.
#[derive(Debug, Clone)]
pub struct ChainBranch {
    pub branch_id: u32,
    pub start_height: u64,
    pub headers: Vec<Header>,
    pub mmr: Mmr,
}

impl ChainBranch {
    pub fn len(&self) -> u64 {
        self.headers.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.headers.is_empty()
    }
}

/// A fully constructed chain, immutable once built.
#[derive(Debug, Clone)]
pub struct Chain {
    pub params: ConsensusParams,
    pub seed: u64,
    branches: Vec<ChainBranch>,
    /// chain_history_root committed by the header at each height.
    history_roots: Vec<Digest>,
    /// auth-data root per height (all-zero for genesis).
    auth_roots: Vec<Digest>,
    /// Cumulative nominal work through each height, inclusive.
    work_prefix: Vec<Work>,
}

impl Chain {
    pub(crate) fn from_parts(
        params: ConsensusParams,
        seed: u64,
        branches: Vec<ChainBranch>,
        history_roots: Vec<Digest>,
        auth_roots: Vec<Digest>,
        work_prefix: Vec<Work>,
    ) -> Chain {
        Chain {
            params,
            seed,
            branches,
            history_roots,
            auth_roots,
            work_prefix,
        }
    }

    pub fn block_count(&self) -> u64 {
        self.work_prefix.len() as u64
    }

    pub fn tip_height(&self) -> u64 {
        self.block_count() - 1
    }

    pub fn branches(&self) -> &[ChainBranch] {
        &self.branches
    }

    pub fn branch(&self, index: u32) -> Option<&ChainBranch> {
        self.branches.get(index as usize)
    }

    pub fn header_at(&self, height: u64) -> Result<&Header, ChainError> {
        let branch = self
            .branches
            .get(self.params.branch_index_of(height) as usize)
            .ok_or(ChainError::HeightRange {
                height,
                tip: self.tip_height(),
            })?;
        branch
            .headers
            .get((height - branch.start_height) as usize)
            .ok_or(ChainError::HeightRange {
                height,
                tip: self.tip_height(),
            })
    }

    pub fn tip(&self) -> &Header {
        self.header_at(self.tip_height()).expect("nonempty chain")
    }

    pub fn history_root_at(&self, height: u64) -> Result<Digest, ChainError> {
        self.history_roots
            .get(height as usize)
            .copied()
            .ok_or(ChainError::HeightRange {
                height,
                tip: self.tip_height(),
            })
    }

    pub fn auth_root_at(&self, height: u64) -> Result<Digest, ChainError> {
        self.auth_roots
            .get(height as usize)
            .copied()
            .ok_or(ChainError::HeightRange {
                height,
                tip: self.tip_height(),
            })
    }

    /// Cumulative nominal work of blocks `0..=height`.
    pub fn total_work(&self, height: u64) -> Result<Work, ChainError> {
        self.work_prefix
            .get(height as usize)
            .copied()
            .ok_or(ChainError::HeightRange {
                height,
                tip: self.tip_height(),
            })
    }

    pub fn tip_total_work(&self) -> Work {
        *self.work_prefix.last().expect("nonempty chain")
    }

    /// Smallest height whose cumulative work is `>= x`.
    pub fn height_with_total_work(&self, x: Work) -> Result<u64, ChainError> {
        if x > self.tip_total_work() {
            return Err(ChainError::WorkRange(x));
        }
        let idx = self.work_prefix.partition_point(|w| *w < x);
        Ok(idx as u64)
    }

    /// Internal consistency check used by tests and `load`: every header
    /// commits the expected history root, passes PoW, and chains correctly.
    pub fn validate(&self) -> Result<(), ChainError> {
        let mut prev: Option<&Header> = None;
        for h in 0..self.block_count() {
            let header = self.header_at(h)?;
            if header.height != h {
                return Err(ChainError::Corrupt {
                    height: h,
                    detail: "height field mismatch".into(),
                });
            }
            let expected_commit =
                block_commitments(&self.auth_roots[h as usize], &self.history_roots[h as usize]);
            if header.block_commitments != expected_commit {
                return Err(ChainError::Corrupt {
                    height: h,
                    detail: "block commitments mismatch".into(),
                });
            }
            if let Some(p) = prev {
                if header.prev_hash != p.digest() {
                    return Err(ChainError::Corrupt {
                        height: h,
                        detail: "previous hash mismatch".into(),
                    });
                }
            } else if !header.prev_hash.is_zero() {
                return Err(ChainError::Corrupt {
                    height: h,
                    detail: "genesis previous hash not null".into(),
                });
            }
            if !pow::pow_valid(header, &self.history_roots[h as usize], &self.params)? {
                return Err(ChainError::Corrupt {
                    height: h,
                    detail: "invalid proof of work".into(),
                });
            }
            prev = Some(header);
        }
        // Every header's committed history root must equal the incremental
        // branch-MMR root over all strictly earlier branch headers; the first
        // header of a branch links the complete MMR of the previous branch.
        let mut prev_branch_root = Digest::ZERO;
        for branch in &self.branches {
            let mut probe = Mmr::with_hasher(branch.mmr.format(), branch.mmr.hasher());
            for (i, header) in branch.headers.iter().enumerate() {
                let h = branch.start_height + i as u64;
                let expected = if i == 0 {
                    prev_branch_root
                } else {
                    probe.root()?
                };
                if self.history_roots[h as usize] != expected {
                    return Err(ChainError::Corrupt {
                        height: h,
                        detail: "history root mismatch".into(),
                    });
                }
                probe.append_leaf(
                    header.digest(),
                    crate::mmr::LeafMeta {
                        timestamp: header.time,
                        target_bits: header.bits,
                        height: header.height,
                    },
                )?;
            }
            if probe.node_count() != branch.mmr.node_count()
                || probe.nodes() != branch.mmr.nodes()
            {
                return Err(ChainError::Corrupt {
                    height: branch.start_height,
                    detail: format!("branch {} MMR mismatch", branch.branch_id),
                });
            }
            prev_branch_root = probe.root()?;
        }
        Ok(())
    }
}
