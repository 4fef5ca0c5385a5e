//! Closed-form cycle count.
//!
//! Schedule, with `b` the block size, `f` the fetch cycles per descriptor and
//! `P = max(b, f)` the period of one database descriptor:
//!
//! * lead-in: the first block is loaded into DES_MEM, `b * f` cycles;
//! * every block but the last spans `max(n * P, b * f)`: while it computes,
//!   the next block is prefetched into the spare DES_MEM bank, and the switch
//!   waits for that prefetch if the database is too short to hide it;
//! * the last block spans `(n - 1) * P + b`, up to its final issue;
//! * drain: the final dot product walks through dot, cosine, MIN_FIND and
//!   Match_Check stages.
//!
//! With the default `b = f = 33` and `n >= 33` this reduces to
//! `ceil(m / 33) * n * 33 + 33 * 33 + 66`.

use serde::Serialize;

use super::PipelineConfig;

/// Cycles to move a descriptor of `bytes` over a bus of `bus_bytes` per cycle.
pub const fn fetch_cycles(bytes: usize, bus_bytes: usize) -> u64 {
    bytes.div_ceil(bus_bytes) as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CycleBreakdown {
    pub blocks: u64,
    pub lead_in: u64,
    /// Issue cycles, vacant slots included.
    pub issue_slots: u64,
    /// Cycles spent waiting on fetches between issues.
    pub stalls: u64,
    pub drain: u64,
}

impl CycleBreakdown {
    pub fn total(&self) -> u64 {
        self.lead_in + self.issue_slots + self.stalls + self.drain
    }

    pub fn compute(m: usize, n: usize, cfg: &PipelineConfig) -> CycleBreakdown {
        let b = cfg.block_size as u64;
        let f = cfg.fetch_cycles_per_descriptor;
        let (m, n) = (m as u64, n as u64);
        let blocks = m.div_ceil(b);
        let period = b.max(f);
        let block_load = b * f;

        let issue_slots = blocks * n * b;
        // Inside a block each database descriptor waits `period - b` for the
        // next one; a non-final block may also wait for the prefetch.
        let per_block_beta_stall = (n - 1) * (period - b);
        let full_span = (n * period).max(block_load);
        let nonfinal_stall = full_span - n * b;
        let stalls = (blocks - 1) * nonfinal_stall + per_block_beta_stall;

        CycleBreakdown {
            blocks,
            lead_in: block_load,
            issue_slots,
            stalls,
            drain: cfg.drain_cycles(),
        }
    }
}

/// Total cycles [`run_pipeline`](super::run_pipeline) takes for `m` queries
/// against `n` database descriptors. `m, n >= 1`.
pub fn predict_cycles(m: usize, n: usize, cfg: &PipelineConfig) -> u64 {
    assert!(m >= 1 && n >= 1, "predict_cycles needs m, n >= 1");
    CycleBreakdown::compute(m, n, cfg).total()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fetch_of_260_bytes_at_8_per_cycle() {
        assert_eq!(fetch_cycles(260, 8), 33);
        assert_eq!(fetch_cycles(256, 8), 32);
        assert_eq!(fetch_cycles(256, 32), 8);
    }

    #[test]
    fn full_scale_counts() {
        let cfg = PipelineConfig::default();
        // 18 blocks x 1021 x 33 + 33 x 33 + 66
        assert_eq!(predict_cycles(579, 1021, &cfg), 606_474 + 1089 + 66);
        // 31 blocks
        assert_eq!(predict_cycles(1021, 1021, &cfg), 1_044_483 + 1089 + 66);
        assert_eq!(predict_cycles(1, 1, &cfg), 33 + 1089 + 66);
        assert_eq!(predict_cycles(33, 1, &cfg), 33 + 1089 + 66);
    }

    #[test]
    fn short_database_waits_for_prefetch() {
        let cfg = PipelineConfig::default();
        // two blocks, n = 1: the second block load (1089) dominates the
        // first block's 33 compute cycles
        let b = CycleBreakdown::compute(34, 1, &cfg);
        assert_eq!(b.blocks, 2);
        assert_eq!(b.stalls, 1089 - 33);
        assert_eq!(b.total(), 1089 + 1089 + 33 + 66);
    }

    #[test]
    fn small_blocks_starve_on_database_fetch() {
        let cfg = PipelineConfig {
            block_size: 16,
            ..PipelineConfig::default()
        };
        // one block, n = 3: periods of 33 with 16 issues each
        let b = CycleBreakdown::compute(16, 3, &cfg);
        assert_eq!(b.issue_slots, 48);
        assert_eq!(b.stalls, 2 * 17);
        assert_eq!(b.total(), 16 * 33 + 2 * 33 + 16 + 66);
    }
}
