//! FlyClient toolkit over a synthetic proof-of-work blockchain.
//!
//! The crate is organized around the lifecycle of a FlyClient deployment:
//!
//! - [`mmr`] — Merkle Mountain Range commitments with single and cumulative
//!   proofs of ancestry and difficulty-metadata aggregation.
//! - [`chainsim`] — deterministic synthetic chains with mock mining,
//!   difficulty schedules, per-upgrade MMR reboots, and adversarial forks.
//! - [`params`] — adversary-budget arithmetic: classic `(c, L)` sampling
//!   counts, the work-budget reduction, and the numeric `(c*, L*)` optimizer.
//! - [`prover`] — the node-side store and the RPC surface a verifier talks to.
//! - [`verifier`] — the reference verifier, its fixed-difficulty and
//!   cache-less variants, and non-interactive prove/verify via Fiat–Shamir.
//! - [`codec`] — JSON / binary / gzip proof representations, distilled
//!   formats, byte accounting, and calldata gas estimation.

pub mod chainsim;
pub mod codec;
pub mod hash;
pub mod mmr;
pub mod params;
pub mod prover;
pub mod transcript;
pub mod verifier;
pub mod work;

pub use hash::Digest;
pub use work::Work;
