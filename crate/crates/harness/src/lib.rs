//! Experiment harness for the BiDD decider: seeded experiment grids with
//! resumable per-cell checkpoints, estimator and conditioning ablations,
//! real-pair ingestion with subsampling, and benchmark reporting.

pub mod config;
pub mod error;
pub mod grid;
pub mod ingest;
pub mod real;
pub mod record;

pub use error::{Error, Result};

/// FNV-1a hash used for content-addressed cell checkpoints and per-pair
/// stream labels.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}
