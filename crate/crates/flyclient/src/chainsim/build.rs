//! Honest-chain assembly and adversarial fork construction.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::hash::{self, Digest};
use crate::mmr::{LeafMeta, Mmr};
use crate::work::{work_from_bits, Work};

use super::schedule::ScheduleState;
use super::{block_commitments, pow, Chain, ChainBranch, ChainError, ConsensusParams, Header};

const GENESIS_TIME: u32 = 1_700_000_000;
const BLOCK_SPACING: u32 = 75;

/// Where an adversary spends its valid-PoW budget inside the fork.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForkPlacement {
    /// Valid blocks spread through the fork at the validity ratio.
    Interleaved,
    /// All valid blocks at the end of the fork (tip-loaded).
    ValidSuffix,
    /// All valid blocks at the start of the fork.
    ValidPrefix,
}

/// Adversarial fork parameters beyond the base six-argument builder.
#[derive(Debug, Clone, Copy)]
pub struct ForkPlan {
    pub fork_height: u64,
    pub work_budget: Work,
    pub validity_ratio: f64,
    pub placement: ForkPlacement,
    pub seed: u64,
}

struct Assembler {
    params: ConsensusParams,
    seed: u64,
    branches: Vec<ChainBranch>,
    current: ChainBranch,
    history_roots: Vec<Digest>,
    auth_roots: Vec<Digest>,
    work_prefix: Vec<Work>,
    schedule: ScheduleState,
    next_height: u64,
    prev_digest: Digest,
    prev_time: u32,
    nonce_rng: ChaCha20Rng,
    jitter_rng: ChaCha20Rng,
    walk_rng: ChaCha20Rng,
}

impl Assembler {
    fn new(params: ConsensusParams, seed: u64) -> Assembler {
        let format = params.node_format();
        Assembler {
            schedule: ScheduleState::new(params.schedule),
            params,
            seed,
            branches: Vec::new(),
            current: ChainBranch {
                branch_id: 0,
                start_height: 0,
                headers: Vec::new(),
                mmr: Mmr::new(format),
            },
            history_roots: Vec::new(),
            auth_roots: Vec::new(),
            work_prefix: Vec::new(),
            next_height: 0,
            prev_digest: Digest::ZERO,
            prev_time: GENESIS_TIME,
            nonce_rng: ChaCha20Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15)),
            jitter_rng: ChaCha20Rng::seed_from_u64(seed.wrapping_add(0x517c_c1b7_2722_0a95)),
            walk_rng: ChaCha20Rng::seed_from_u64(seed ^ 0x2545_f491_4f6c_dd1d),
        }
    }

    /// Clone the first `keep` blocks of `base` and prepare to extend them
    /// under a fresh seed; the schedule resumes from the last kept target.
    fn from_truncated(base: &Chain, keep: u64, seed: u64) -> Result<Assembler, ChainError> {
        let mut asm = Assembler::new(base.params.clone(), seed);
        for h in 0..keep {
            let header = base.header_at(h)?.clone();
            let root = base.history_root_at(h)?;
            let auth = base.auth_root_at(h)?;
            asm.admit_block(header, root, auth)?;
        }
        if keep > 0 {
            asm.schedule = ScheduleState::resume(base.params.schedule, base.header_at(keep - 1)?.bits)?;
        }
        Ok(asm)
    }

    /// Root the next header must commit, given the branch layout at
    /// `next_height`.
    fn pending_history_root(&self) -> Result<Digest, ChainError> {
        if self.next_height == 0 {
            Ok(Digest::ZERO)
        } else if self.params.upgrade_heights.contains(&self.next_height) {
            // First header of a new branch commits the full previous tree.
            Ok(self.current.mmr.root()?)
        } else if self.current.mmr.is_empty() {
            // Only reachable right after a reboot handled above or genesis.
            Ok(Digest::ZERO)
        } else {
            Ok(self.current.mmr.root()?)
        }
    }

    fn next_bits(&mut self) -> Result<u32, ChainError> {
        self.schedule.next_bits(self.next_height, &mut self.walk_rng)
    }

    /// Bits the schedule will assign to the next block, without committing.
    fn peek_bits(&mut self) -> Result<u32, ChainError> {
        let mut probe = self.schedule.clone();
        let mut probe_rng = self.walk_rng.clone();
        probe.next_bits(self.next_height, &mut probe_rng)
    }

    fn next_time(&mut self) -> u32 {
        if self.next_height == 0 {
            return GENESIS_TIME;
        }
        let jitter: i32 = self.jitter_rng.gen_range(-30..=30);
        let step = (BLOCK_SPACING as i32 + jitter).max(1) as u32;
        self.prev_time + step
    }

    fn solution_for(&self, height: u64) -> Vec<u8> {
        let len = self.params.engine.solution_len();
        if len == 0 {
            return Vec::new();
        }
        let seed_digest = hash::derive_digest("solution", self.seed, height);
        let mut rng = ChaCha20Rng::from_seed(seed_digest.0);
        let mut out = vec![0u8; len];
        rng.fill_bytes(&mut out);
        out
    }

    /// Mine and append the next block. Adversarial callers pass
    /// `want_valid = false` to produce padding blocks that fail PoW.
    fn push_block(&mut self, want_valid: bool) -> Result<(), ChainError> {
        let height = self.next_height;
        let root = self.pending_history_root()?;
        let auth = if height == 0 {
            Digest::ZERO
        } else {
            hash::derive_digest("auth-data-root", self.seed, height)
        };
        let bits = self.next_bits()?;
        let time = self.next_time();
        let mut header = Header {
            version: 4,
            prev_hash: self.prev_digest,
            merkle_root: hash::derive_digest("tx-merkle-root", self.seed, height),
            block_commitments: block_commitments(&auth, &root),
            time,
            bits,
            nonce: [0u8; 32],
            solution: self.solution_for(height),
            height,
        };
        pow::mine(&mut header, &root, &self.params, want_valid, &mut self.nonce_rng)?;
        self.admit_block(header, root, auth)
    }

    /// Append a finalized header, maintaining branch MMRs and work totals.
    fn admit_block(&mut self, header: Header, root: Digest, auth: Digest) -> Result<(), ChainError> {
        let height = self.next_height;
        if height > 0 && self.params.upgrade_heights.contains(&height) {
            let format = self.current.mmr.format();
            let finished = std::mem::replace(
                &mut self.current,
                ChainBranch {
                    branch_id: self.branches.len() as u32 + 1,
                    start_height: height,
                    headers: Vec::new(),
                    mmr: Mmr::new(format),
                },
            );
            self.branches.push(finished);
        }
        let digest = header.digest();
        let meta = LeafMeta {
            timestamp: header.time,
            target_bits: header.bits,
            height,
        };
        let work = work_from_bits(header.bits)?;
        let total = match self.work_prefix.last() {
            Some(prev) => *prev + work,
            None => work,
        };
        self.prev_digest = digest;
        self.prev_time = header.time;
        self.current.headers.push(header);
        self.current.mmr.append_leaf(digest, meta)?;
        self.history_roots.push(root);
        self.auth_roots.push(auth);
        self.work_prefix.push(total);
        self.next_height += 1;
        Ok(())
    }

    fn finish(mut self) -> Chain {
        self.branches.push(self.current);
        Chain::from_parts(
            self.params,
            self.seed,
            self.branches,
            self.history_roots,
            self.auth_roots,
            self.work_prefix,
        )
    }
}

/// Build a deterministic honest chain of `blocks` blocks.
pub fn build_honest_chain(
    blocks: u64,
    params: ConsensusParams,
    seed: u64,
) -> Result<Chain, ChainError> {
    if blocks == 0 {
        return Err(ChainError::Empty);
    }
    params.validate()?;
    if params.upgrade_heights.iter().any(|&u| u >= blocks) {
        return Err(ChainError::UpgradeHeights);
    }
    let mut asm = Assembler::new(params, seed);
    for _ in 0..blocks {
        asm.push_block(true)?;
    }
    Ok(asm.finish())
}

/// Build an adversarial fork of `base` whose valid-PoW blocks carry at most
/// `work_budget` cumulative nominal work, padded with invalid-PoW blocks so
/// that the valid fraction approximates `validity_ratio` (interleaved
/// placement). With a zero ratio the fork extends to the original tip height
/// on invalid blocks alone. Declared total work follows the nominal bits
/// schedule, so it may well exceed the work actually mined.
pub fn build_adversarial_fork(
    base: &Chain,
    fork_height: u64,
    work_budget: Work,
    validity_ratio: f64,
    seed: u64,
) -> Result<Chain, ChainError> {
    build_adversarial_fork_with_plan(
        base,
        ForkPlan {
            fork_height,
            work_budget,
            validity_ratio,
            placement: ForkPlacement::Interleaved,
            seed,
        },
    )
}

pub fn build_adversarial_fork_with_plan(base: &Chain, plan: ForkPlan) -> Result<Chain, ChainError> {
    if plan.fork_height >= base.tip_height() {
        return Err(ChainError::ForkHeight {
            fork_height: plan.fork_height,
            tip: base.tip_height(),
        });
    }
    if !(0.0..=1.0).contains(&plan.validity_ratio) {
        return Err(ChainError::ValidityRatio(plan.validity_ratio));
    }
    if plan.work_budget == Work::ZERO && plan.validity_ratio > 0.0 {
        return Err(ChainError::ZeroBudget);
    }

    let mut asm = Assembler::from_truncated(base, plan.fork_height + 1, plan.seed)?;

    if plan.validity_ratio == 0.0 {
        // Invalid-only fork, reaching the original tip height.
        while asm.next_height <= base.tip_height() {
            asm.push_block(false)?;
        }
        return Ok(asm.finish());
    }

    // Plan lengths from the nominal per-block work at the fork point; the
    // budget is enforced exactly while assembling.
    let per_block = work_from_bits(base.header_at(plan.fork_height)?.bits)?;
    let n_valid_est = (plan.work_budget.as_f64() / per_block.as_f64()).floor() as u64;
    let target_len = ((n_valid_est as f64 / plan.validity_ratio).round() as u64).max(1);

    let mut valid_work = Work::ZERO;
    let mut valid_count = 0u64;
    for j in 1..=target_len {
        let want_valid = match plan.placement {
            ForkPlacement::Interleaved => {
                (plan.validity_ratio * j as f64).round() as u64 > valid_count
            }
            ForkPlacement::ValidPrefix => j <= n_valid_est,
            ForkPlacement::ValidSuffix => j > target_len - n_valid_est,
        };
        if want_valid {
            let w = work_from_bits(asm.peek_bits()?)?;
            if valid_work + w > plan.work_budget {
                // Budget exhausted: degrade to an invalid block.
                asm.push_block(false)?;
                continue;
            }
            asm.push_block(true)?;
            valid_work += w;
            valid_count += 1;
        } else {
            asm.push_block(false)?;
        }
    }
    Ok(asm.finish())
}

/// Nominal work of the valid-PoW blocks above `fork_height`, summed for
/// budget assertions.
pub fn fork_valid_work(chain: &Chain, fork_height: u64) -> Result<Work, ChainError> {
    let mut total = Work::ZERO;
    for h in (fork_height + 1)..chain.block_count() {
        let header = chain.header_at(h)?;
        if pow::pow_valid(header, &chain.history_root_at(h)?, &chain.params)? {
            total += work_from_bits(header.bits)?;
        }
    }
    Ok(total)
}
