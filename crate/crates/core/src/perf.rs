//! Roofline throughput model for streaming descriptor matching.
//!
//! Without a descriptor cache every dot product needs one fresh database
//! descriptor from external memory, so attainable throughput is the smaller
//! of the compute peak and what the memory bandwidth can feed.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::MatchError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RooflineConfig {
    pub clock_hz: f64,
    /// Bytes moved per dot product.
    pub descriptor_bytes: u64,
    /// Dot products the core can start per cycle.
    pub peak_ops_per_cycle: f64,
}

impl Default for RooflineConfig {
    fn default() -> Self {
        Self {
            clock_hz: 100e6,
            descriptor_bytes: 256,
            peak_ops_per_cycle: 1.0,
        }
    }
}

impl RooflineConfig {
    pub fn validate(&self) -> Result<(), MatchError> {
        if !(self.clock_hz.is_finite() && self.clock_hz > 0.0) {
            return Err(MatchError::InvalidConfig(
                "clock_hz must be positive".into(),
            ));
        }
        if self.descriptor_bytes == 0 {
            return Err(MatchError::InvalidConfig(
                "descriptor_bytes must be >= 1".into(),
            ));
        }
        if !(self.peak_ops_per_cycle.is_finite() && self.peak_ops_per_cycle > 0.0) {
            return Err(MatchError::InvalidConfig(
                "peak_ops_per_cycle must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn peak_ops_per_s(&self) -> f64 {
        self.clock_hz * self.peak_ops_per_cycle
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bound {
    Memory,
    Compute,
}

impl std::fmt::Display for Bound {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Bound::Memory => "memory",
            Bound::Compute => "compute",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RooflinePoint {
    pub bandwidth_bytes_per_s: f64,
    pub attainable_ops_per_s: f64,
    pub bound: Bound,
}

/// Whole cycles needed to fetch one descriptor at `bandwidth_bytes_per_s`.
///
/// A bus delivers an integral number of bytes per cycle, so a fetch that
/// does not fill its last cycle still occupies it.
pub fn cycles_per_descriptor(cfg: &RooflineConfig, bandwidth_bytes_per_s: f64) -> u64 {
    let bytes_per_cycle = bandwidth_bytes_per_s / cfg.clock_hz;
    let exact = cfg.descriptor_bytes as f64 / bytes_per_cycle;
    let rounded = exact.round();
    if (exact - rounded).abs() <= 1e-9 * exact.max(1.0) {
        rounded as u64
    } else {
        exact.ceil() as u64
    }
}

pub fn attainable_throughput(
    cfg: &RooflineConfig,
    bandwidth_bytes_per_s: f64,
) -> Result<RooflinePoint, MatchError> {
    cfg.validate()?;
    if !(bandwidth_bytes_per_s.is_finite() && bandwidth_bytes_per_s > 0.0) {
        return Err(MatchError::InvalidConfig(format!(
            "bandwidth {bandwidth_bytes_per_s} must be positive"
        )));
    }
    let cycles = cycles_per_descriptor(cfg, bandwidth_bytes_per_s).max(1);
    let memory = cfg.clock_hz / cycles as f64;
    let peak = cfg.peak_ops_per_s();
    let (attainable, bound) = if memory < peak {
        (memory, Bound::Memory)
    } else {
        (peak, Bound::Compute)
    };
    Ok(RooflinePoint {
        bandwidth_bytes_per_s,
        attainable_ops_per_s: attainable,
        bound,
    })
}

pub fn roofline_sweep(
    cfg: &RooflineConfig,
    bandwidths: &[f64],
) -> Result<Vec<RooflinePoint>, MatchError> {
    if bandwidths.is_empty() {
        return Err(MatchError::InvalidConfig("no bandwidths to sweep".into()));
    }
    bandwidths
        .iter()
        .map(|&bw| attainable_throughput(cfg, bw))
        .collect()
}

/// Steady-state throughput when `block_size` cached queries share each
/// database descriptor that takes `fetch_cycles` to arrive.
pub fn effective_throughput_with_blocking(
    cfg: &RooflineConfig,
    block_size: usize,
    fetch_cycles: u64,
) -> Result<f64, MatchError> {
    cfg.validate()?;
    if block_size == 0 || fetch_cycles == 0 {
        return Err(MatchError::InvalidConfig(
            "block_size and fetch_cycles must be >= 1".into(),
        ));
    }
    let utilisation = (block_size as f64 / fetch_cycles as f64).min(1.0);
    Ok(cfg.peak_ops_per_s() * utilisation)
}

/// Writes `bandwidth_bytes_per_s,ops_per_s,bound` rows.
pub fn write_roofline_csv<W: Write>(out: &mut W, points: &[RooflinePoint]) -> std::io::Result<()> {
    writeln!(out, "bandwidth_bytes_per_s,ops_per_s,bound")?;
    for p in points {
        writeln!(
            out,
            "{},{},{}",
            p.bandwidth_bytes_per_s, p.attainable_ops_per_s, p.bound
        )?;
    }
    Ok(())
}
