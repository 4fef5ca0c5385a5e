//! JSON report types and CSV emitters.

use std::io::Write;

use serde::{Deserialize, Serialize};
use siftmatch_core::cordic::AccuracySweep;
use siftmatch_core::{DescriptorSet, MatchResult, RunReport, ThresholdMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Reference,
    Pipeline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetInfo {
    pub path: String,
    pub image_id: String,
    pub count: usize,
}

impl SetInfo {
    pub fn new(path: &std::path::Path, set: &DescriptorSet) -> Self {
        Self {
            path: path.display().to_string(),
            image_id: set.image_id.clone(),
            count: set.len(),
        }
    }
}

/// Cycle accounting of a pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub total_cycles: u64,
    pub predicted_cycles: u64,
    pub clock_hz: f64,
    pub elapsed_seconds: f64,
    pub elapsed_ms: f64,
    pub blocks_processed: u64,
    pub block_size: usize,
    pub dot_products_executed: u64,
    pub issue_slots: u64,
    pub stall_cycles: u64,
    pub lead_in_cycles: u64,
    pub drain_cycles: u64,
}

impl Timing {
    pub fn new(run: &RunReport, predicted_cycles: u64, block_size: usize) -> Self {
        Self {
            total_cycles: run.total_cycles,
            predicted_cycles,
            clock_hz: run.clock_hz,
            elapsed_seconds: run.elapsed_seconds,
            elapsed_ms: run.elapsed_ms(),
            blocks_processed: run.blocks_processed,
            block_size,
            dot_products_executed: run.dot_products_executed,
            issue_slots: run.issue_slots,
            stall_cycles: run.stall_cycles,
            lead_in_cycles: run.lead_in_cycles,
            drain_cycles: run.drain_cycles,
        }
    }
}

/// Output of `siftmatch match`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub engine: Engine,
    pub queries: SetInfo,
    pub database: SetInfo,
    pub threshold: f64,
    /// Present for the pipeline engine.
    pub threshold_mode: Option<ThresholdMode>,
    pub matched_count: usize,
    /// Present for the pipeline engine.
    pub timing: Option<Timing>,
    pub matches: Vec<MatchResult>,
}

pub fn write_matches_csv<W: Write>(out: &mut W, matches: &[MatchResult]) -> std::io::Result<()> {
    writeln!(out, "k,matched,best_index,qx,qy,bx,by,min_raw,secmin_raw")?;
    for m in matches {
        let opt = |v: Option<String>| v.unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            m.query_index,
            u8::from(m.matched),
            opt(m.best_index.map(|i| i.to_string())),
            m.query_xy.x,
            m.query_xy.y,
            opt(m.best_xy.map(|p| p.x.to_string())),
            opt(m.best_xy.map(|p| p.y.to_string())),
            m.min_raw(),
            m.second_min_raw(),
        )?;
    }
    Ok(())
}

pub fn write_accuracy_csv<W: Write>(out: &mut W, sweep: &AccuracySweep) -> std::io::Result<()> {
    writeln!(out, "x,cordic_arccos,arccos,error")?;
    for r in &sweep.rows {
        writeln!(out, "{},{},{},{}", r.x, r.cordic, r.reference, r.error)?;
    }
    Ok(())
}

pub fn accuracy_summary(sweep: &AccuracySweep) -> String {
    format!(
        "max_error_lsb={:.4} max_error_x={} max_error_lsb_outside_exclusion={:.4} exclusion_below={} inputs={}",
        sweep.max_error_lsb(),
        sweep.max_error_x,
        sweep.max_error_outside_exclusion / sweep.angle_lsb,
        sweep.exclusion_below,
        sweep.rows.len()
    )
}
