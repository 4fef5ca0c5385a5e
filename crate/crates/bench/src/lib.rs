//! Shared fixtures for the criterion benches.

use siftmatch_core::descriptors::{generate_synthetic, SyntheticPair};

/// Deterministic query/database pair of `count` descriptors each.
pub fn fixture(count: usize, seed: u64) -> SyntheticPair {
    generate_synthetic(count, seed, 0.5, 0.02).expect("valid synthetic parameters")
}
