//! Cycle-timed model of the pipelined matching core.
//!
//! Query descriptors are cut into blocks that fit the descriptor cache
//! (DES_MEM). Each database descriptor streams through a register once per
//! block and meets every cached query in consecutive cycles, one dot product
//! per cycle. Each result flows through the Cosine_Inverse core and MIN_FIND,
//! which folds it into the query's MIN_MEM slot; when the block has seen the
//! whole database, Match_Check turns every slot into a verdict.
//!
//! [`run_pipeline`] produces both the verdicts and the exact cycle count;
//! [`predict_cycles`] gives the same count in closed form.

mod accelerator;
mod cores;
mod timing;

pub use accelerator::{run_functional, run_pipeline};
pub use cores::{
    dot_product_core, match_check, min_find, MinPairEntry, ADDER_TREE_LEVELS, MIN_SENTINEL,
};
pub use timing::{fetch_cycles, predict_cycles, CycleBreakdown};

use serde::{Deserialize, Serialize};

use crate::cordic::CordicConfig;
use crate::descriptors::DESCRIPTOR_BYTES;
use crate::error::MatchError;
use crate::reference::MatchResult;

/// Bytes the external memory delivers per clock (32-bit DDR, double data rate).
pub const BUS_BYTES_PER_CYCLE: usize = 8;

/// How Match_Check scales the second minimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum ThresholdMode {
    /// `min < 0.6 * second_min`, evaluated exactly as `5 * min < 3 * second_min`.
    #[serde(rename = "exact_0_6")]
    Exact0_6,
    /// `32 * min < 19 * second_min`: 0.6 truncated to `0.10011b` and applied
    /// with shifts and adds.
    #[default]
    #[serde(rename = "binary_10011")]
    Binary10011,
}

impl ThresholdMode {
    /// Effective ratio threshold.
    pub fn ratio(self) -> f64 {
        match self {
            ThresholdMode::Exact0_6 => 0.6,
            ThresholdMode::Binary10011 => 19.0 / 32.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Query descriptors held in DES_MEM.
    pub block_size: usize,
    /// Cycles to stream one 260-byte descriptor from external memory.
    pub fetch_cycles_per_descriptor: u64,
    /// 3 multiplier stages + 7 adder-tree levels.
    pub dot_product_stages: u64,
    /// 4 (`1 - x^2`) + 37 (square root) + 11 (polar).
    pub cosine_stages: u64,
    pub min_find_stages: u64,
    pub match_check_stages: u64,
    pub clock_hz: f64,
    pub threshold_mode: ThresholdMode,
    pub cordic: CordicConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            block_size: 33,
            fetch_cycles_per_descriptor: fetch_cycles(DESCRIPTOR_BYTES, BUS_BYTES_PER_CYCLE),
            dot_product_stages: 10,
            cosine_stages: 52,
            min_find_stages: 1,
            match_check_stages: 3,
            clock_hz: 100e6,
            threshold_mode: ThresholdMode::default(),
            cordic: CordicConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), MatchError> {
        let bad = |m: &str| Err(MatchError::InvalidConfig(m.to_owned()));
        if self.block_size == 0 {
            return bad("block_size must be >= 1");
        }
        if self.fetch_cycles_per_descriptor == 0 {
            return bad("fetch_cycles_per_descriptor must be >= 1");
        }
        if [
            self.dot_product_stages,
            self.cosine_stages,
            self.min_find_stages,
            self.match_check_stages,
        ]
        .contains(&0)
        {
            return bad("every stage count must be >= 1");
        }
        if !(self.clock_hz.is_finite() && self.clock_hz > 0.0) {
            return bad("clock_hz must be positive");
        }
        self.cordic.validate()
    }

    /// Cycles from issuing a dot product to its MIN_MEM write.
    pub fn update_latency(&self) -> u64 {
        self.dot_product_stages + self.cosine_stages + self.min_find_stages
    }

    /// Cycles from issuing the last dot product to the last verdict.
    pub fn drain_cycles(&self) -> u64 {
        self.update_latency() + self.match_check_stages
    }
}

/// Outcome of one [`run_pipeline`] call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub total_cycles: u64,
    pub clock_hz: f64,
    pub elapsed_seconds: f64,
    pub blocks_processed: u64,
    /// Dot products on real query descriptors; vacant slots of a partial
    /// last block are charged cycles but not counted here.
    pub dot_products_executed: u64,
    /// Issue cycles, vacant slots included.
    pub issue_slots: u64,
    /// Cycles the control unit waited on a descriptor fetch after the lead-in.
    pub stall_cycles: u64,
    pub lead_in_cycles: u64,
    pub drain_cycles: u64,
    pub matches: Vec<MatchResult>,
}

impl RunReport {
    pub fn elapsed_ms(&self) -> f64 {
        self.elapsed_seconds * 1e3
    }

    /// Dot products per second over the whole run.
    pub fn throughput(&self) -> f64 {
        self.dot_products_executed as f64 / self.elapsed_seconds
    }
}
