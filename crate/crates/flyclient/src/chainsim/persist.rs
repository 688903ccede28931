//! Chain directory persistence.
//!
//! Layout (all integers little-endian):
//!
//! - `manifest.json` — parameters, seed, block count, header record size.
//! - `headers.bin`   — fixed-size records, one wire-serialized header per
//!   height starting at genesis.
//! - `auth.bin`      — 32-byte auth-data root per height.
//! - `branch_<k>.nodes` — MMR nodes of branch `k` in creation order, each
//!   prefixed with a `u32` byte length.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::codec::binary;
use crate::hash::{self, Digest};
use crate::mmr::{LeafMeta, Mmr};
use crate::work::work_from_bits;

use super::{Chain, ChainBranch, ChainError, ConsensusParams};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const HEADERS_FILE: &str = "headers.bin";
pub const AUTH_FILE: &str = "auth.bin";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainManifest {
    pub format_version: u32,
    pub seed: u64,
    pub block_count: u64,
    pub header_record_bytes: u32,
    pub branch_count: u32,
    pub params: ConsensusParams,
}

impl ChainManifest {
    pub fn for_chain(chain: &Chain) -> ChainManifest {
        ChainManifest {
            format_version: 1,
            seed: chain.seed,
            block_count: chain.block_count(),
            header_record_bytes: chain.params.engine.header_wire_len() as u32,
            branch_count: chain.branches().len() as u32,
            params: chain.params.clone(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        serde_json::to_vec_pretty(self).expect("manifest serializes")
    }

    /// Digest over the canonical manifest bytes; identical parameters and
    /// seed yield identical digests.
    pub fn digest(&self) -> Digest {
        hash::sha256(&self.to_bytes())
    }
}

pub fn save_chain(chain: &Chain, dir: &Path) -> Result<ChainManifest, ChainError> {
    fs::create_dir_all(dir)?;
    let manifest = ChainManifest::for_chain(chain);
    fs::write(dir.join(MANIFEST_FILE), manifest.to_bytes())?;

    let record = manifest.header_record_bytes as usize;
    let mut headers = Vec::with_capacity(record * chain.block_count() as usize);
    let mut auth = Vec::with_capacity(32 * chain.block_count() as usize);
    for h in 0..chain.block_count() {
        let bytes = binary::header_bytes(chain.header_at(h)?);
        debug_assert_eq!(bytes.len(), record);
        headers.extend_from_slice(&bytes);
        auth.extend_from_slice(chain.auth_root_at(h)?.as_ref());
    }
    fs::write(dir.join(HEADERS_FILE), headers)?;
    fs::write(dir.join(AUTH_FILE), auth)?;

    for branch in chain.branches() {
        let mut out = Vec::new();
        for node in branch.mmr.nodes() {
            let bytes = binary::node_bytes(node);
            out.write_all(&(bytes.len() as u32).to_le_bytes())?;
            out.write_all(&bytes)?;
        }
        fs::write(dir.join(format!("branch_{}.nodes", branch.branch_id)), out)?;
    }
    Ok(manifest)
}

pub fn load_manifest(dir: &Path) -> Result<ChainManifest, ChainError> {
    let bytes = fs::read(dir.join(MANIFEST_FILE))?;
    serde_json::from_slice(&bytes).map_err(|e| ChainError::Manifest(e.to_string()))
}

/// Load a chain directory: headers are authoritative, branch MMRs are
/// rebuilt from them, and the stored node files are cross-checked
/// byte-for-byte against the rebuild.
pub fn load_chain(dir: &Path) -> Result<Chain, ChainError> {
    let manifest = load_manifest(dir)?;
    manifest.params.validate()?;
    let record = manifest.header_record_bytes as usize;
    let header_bytes = fs::read(dir.join(HEADERS_FILE))?;
    if header_bytes.len() != record * manifest.block_count as usize {
        return Err(ChainError::Manifest(format!(
            "headers file is {} bytes, expected {}",
            header_bytes.len(),
            record * manifest.block_count as usize
        )));
    }
    let auth_bytes = fs::read(dir.join(AUTH_FILE))?;
    if auth_bytes.len() != 32 * manifest.block_count as usize {
        return Err(ChainError::Manifest("auth file length mismatch".into()));
    }

    let params = manifest.params.clone();
    let format = params.node_format();
    let mut branches: Vec<ChainBranch> = Vec::new();
    let mut current = ChainBranch {
        branch_id: 0,
        start_height: 0,
        headers: Vec::new(),
        mmr: Mmr::new(format),
    };
    let mut history_roots = Vec::with_capacity(manifest.block_count as usize);
    let mut auth_roots = Vec::with_capacity(manifest.block_count as usize);
    let mut work_prefix = Vec::with_capacity(manifest.block_count as usize);
    let mut prev_branch_root = Digest::ZERO;

    for h in 0..manifest.block_count {
        let off = h as usize * record;
        let header = binary::decode_header(&header_bytes[off..off + record], params.engine, h)
            .map_err(|e| ChainError::Corrupt {
                height: h,
                detail: e.to_string(),
            })?;
        if h > 0 && params.upgrade_heights.contains(&h) {
            prev_branch_root = current.mmr.root()?;
            let finished = std::mem::replace(
                &mut current,
                ChainBranch {
                    branch_id: branches.len() as u32 + 1,
                    start_height: h,
                    headers: Vec::new(),
                    mmr: Mmr::new(format),
                },
            );
            branches.push(finished);
        }
        let root = if current.mmr.is_empty() {
            prev_branch_root
        } else {
            current.mmr.root()?
        };
        let mut auth = [0u8; 32];
        auth.copy_from_slice(&auth_bytes[h as usize * 32..h as usize * 32 + 32]);
        let work = work_from_bits(header.bits).map_err(|e| ChainError::Corrupt {
            height: h,
            detail: e.to_string(),
        })?;
        let total = match work_prefix.last() {
            Some(prev) => *prev + work,
            None => work,
        };
        let meta = LeafMeta {
            timestamp: header.time,
            target_bits: header.bits,
            height: h,
        };
        current.mmr.append_leaf(header.digest(), meta)?;
        current.headers.push(header);
        history_roots.push(root);
        auth_roots.push(Digest(auth));
        work_prefix.push(total);
    }
    branches.push(current);

    // Cross-check the persisted node files against the rebuild.
    for branch in &branches {
        let path = dir.join(format!("branch_{}.nodes", branch.branch_id));
        let stored = fs::read(&path)?;
        let mut offset = 0usize;
        for (idx, node) in branch.mmr.nodes().iter().enumerate() {
            let expect = binary::node_bytes(node);
            if offset + 4 > stored.len() {
                return Err(ChainError::Corrupt {
                    height: branch.start_height,
                    detail: format!("branch {} node file truncated at index {idx}", branch.branch_id),
                });
            }
            let len =
                u32::from_le_bytes(stored[offset..offset + 4].try_into().unwrap()) as usize;
            offset += 4;
            if stored.get(offset..offset + len) != Some(expect.as_slice()) {
                return Err(ChainError::Corrupt {
                    height: node.earliest_height,
                    detail: format!(
                        "branch {} node {idx} differs from rebuilt MMR",
                        branch.branch_id
                    ),
                });
            }
            offset += len;
        }
        if offset != stored.len() {
            return Err(ChainError::Corrupt {
                height: branch.start_height,
                detail: format!("branch {} node file has trailing bytes", branch.branch_id),
            });
        }
    }

    Ok(Chain::from_parts(
        params,
        manifest.seed,
        branches,
        history_roots,
        auth_roots,
        work_prefix,
    ))
}
