//! Cycle-stepped simulation of the matching core.
//!
//! Each cycle the model retires MIN_MEM updates and Match_Check results whose
//! latency has elapsed, then lets the control unit issue at most one dot
//! product. Data values are computed at issue time; the timing machinery only
//! decides *when* they land, never *what* they are.

use std::collections::VecDeque;

use super::cores::{dot_product_core, match_check, min_find, MinPairEntry};
use super::{PipelineConfig, RunReport};
use crate::cordic::ArccosTable;
use crate::descriptors::DescriptorSet;
use crate::error::MatchError;
use crate::reference::MatchResult;

/// A dot product travelling through Dot_Product, Cosine_Inverse and MIN_FIND.
#[derive(Debug, Clone, Copy)]
struct InFlight {
    update_at: u64,
    slot: usize,
    db_index: u32,
    /// Query index and angle; `None` for a vacant DES_MEM slot.
    payload: Option<(usize, u16)>,
    first_of_block: bool,
    last_of_block: bool,
}

/// A final MIN_MEM entry travelling through Match_Check.
#[derive(Debug, Clone, Copy)]
struct PendingCheck {
    done_at: u64,
    query: Option<usize>,
    entry: MinPairEntry,
}

fn check_inputs(
    queries: &DescriptorSet,
    db: &DescriptorSet,
    cfg: &PipelineConfig,
) -> Result<ArccosTable, MatchError> {
    cfg.validate()?;
    if queries.is_empty() {
        return Err(MatchError::EmptyQueries);
    }
    if db.is_empty() {
        return Err(MatchError::EmptyDatabase);
    }
    if u32::try_from(db.len()).is_err() {
        return Err(MatchError::InvalidConfig(
            "database exceeds u32 indices".into(),
        ));
    }
    ArccosTable::new(cfg.cordic)
}

#[inline]
fn angle_of(table: &ArccosTable, q: &[u16; 128], d: &[u16; 128]) -> u16 {
    table.lookup(dot_product_core(q, d).raw() as u16)
}

fn verdict(
    query_index: usize,
    entry: &MinPairEntry,
    queries: &DescriptorSet,
    db: &DescriptorSet,
    cfg: &PipelineConfig,
) -> MatchResult {
    let lsb = cfg.cordic.angle_lsb();
    let best_index = entry.min_index.map(|i| i as usize);
    MatchResult {
        query_index,
        best_index,
        min_angle: entry.min as f64 * lsb,
        second_min_angle: entry.second_min as f64 * lsb,
        matched: match_check(entry, cfg.threshold_mode),
        query_xy: queries[query_index].location(),
        best_xy: best_index.map(|j| db[j].location()),
    }
}

/// Runs the matching core over `queries` (DES_MEM side) and `db` (streamed
/// side), returning verdicts in query order and the cycle count.
pub fn run_pipeline(
    queries: &DescriptorSet,
    db: &DescriptorSet,
    cfg: &PipelineConfig,
) -> Result<RunReport, MatchError> {
    let table = check_inputs(queries, db, cfg)?;
    let m = queries.len();
    let n = db.len();
    let b = cfg.block_size;
    let fetch = cfg.fetch_cycles_per_descriptor;
    let block_load = b as u64 * fetch;
    let blocks = m.div_ceil(b);

    let mut min_mem = vec![MinPairEntry::FLUSHED; b];
    let mut in_flight: VecDeque<InFlight> =
        VecDeque::with_capacity(cfg.update_latency() as usize + 1);
    let mut checks: VecDeque<PendingCheck> = VecDeque::new();
    let mut results: Vec<Option<MatchResult>> = vec![None; m];

    // Control unit state.
    let (mut block, mut beta, mut slot) = (0usize, 0usize, 0usize);
    let mut issuing = true;
    // DES_MEM bank holding `block` becomes readable at this cycle.
    let mut active_ready_at = block_load;
    let mut spare_ready_at = u64::MAX;
    // The database register is refilled one descriptor at a time.
    let mut beta_ready_at = fetch;

    let mut cycle = 0u64;
    let mut first_issue: Option<u64> = None;
    let (mut issue_slots, mut stall_cycles, mut dot_products) = (0u64, 0u64, 0u64);

    loop {
        while let Some(op) = in_flight
            .front()
            .copied()
            .filter(|op| op.update_at == cycle)
        {
            in_flight.pop_front();
            // Flush multiplexer: the first database descriptor of a block sees
            // the sentinel pair instead of the stale MIN_MEM contents.
            let prev = if op.first_of_block {
                MinPairEntry::FLUSHED
            } else {
                min_mem[op.slot]
            };
            let next = match op.payload {
                Some((_, angle)) => min_find(angle, op.db_index, prev),
                None => prev,
            };
            min_mem[op.slot] = next;
            if op.last_of_block {
                checks.push_back(PendingCheck {
                    done_at: cycle + cfg.match_check_stages,
                    query: op.payload.map(|(k, _)| k),
                    entry: next,
                });
            }
        }

        while let Some(check) = checks.front().copied().filter(|c| c.done_at == cycle) {
            checks.pop_front();
            if let Some(k) = check.query {
                results[k] = Some(verdict(k, &check.entry, queries, db, cfg));
            }
        }

        if issuing {
            let starting_beta = slot == 0;
            let ready = !starting_beta || (cycle >= beta_ready_at && cycle >= active_ready_at);
            if ready {
                if starting_beta {
                    if beta == 0 && block + 1 < blocks {
                        spare_ready_at = cycle + block_load;
                    }
                    beta_ready_at = cycle + fetch;
                }
                first_issue.get_or_insert(cycle);
                let query = block * b + slot;
                let payload = (query < m).then(|| {
                    dot_products += 1;
                    (
                        query,
                        angle_of(&table, queries[query].fixed(), db[beta].fixed()),
                    )
                });
                in_flight.push_back(InFlight {
                    update_at: cycle + cfg.update_latency(),
                    slot,
                    db_index: beta as u32,
                    payload,
                    first_of_block: beta == 0,
                    last_of_block: beta + 1 == n,
                });
                issue_slots += 1;

                slot += 1;
                if slot == b {
                    slot = 0;
                    beta += 1;
                    if beta == n {
                        beta = 0;
                        block += 1;
                        active_ready_at = spare_ready_at;
                        issuing = block < blocks;
                    }
                }
            } else if first_issue.is_some() {
                stall_cycles += 1;
            }
        } else if in_flight.is_empty() && checks.is_empty() {
            break;
        }
        cycle += 1;
    }

    let total_cycles = cycle + 1;
    let lead_in_cycles = first_issue.unwrap_or(0);
    let matches = results
        .into_iter()
        .map(|r| r.expect("every query receives a verdict"))
        .collect();
    Ok(RunReport {
        total_cycles,
        clock_hz: cfg.clock_hz,
        elapsed_seconds: total_cycles as f64 / cfg.clock_hz,
        blocks_processed: blocks as u64,
        dot_products_executed: dot_products,
        issue_slots,
        stall_cycles,
        lead_in_cycles,
        drain_cycles: total_cycles - lead_in_cycles - issue_slots - stall_cycles,
        matches,
    })
}

/// The same datapath as [`run_pipeline`] as a plain loop with no timing:
/// per query, fold every database angle through MIN_FIND and apply
/// Match_Check.
pub fn run_functional(
    queries: &DescriptorSet,
    db: &DescriptorSet,
    cfg: &PipelineConfig,
) -> Result<Vec<MatchResult>, MatchError> {
    let table = check_inputs(queries, db, cfg)?;
    Ok(queries
        .iter()
        .enumerate()
        .map(|(k, q)| {
            let entry = db
                .iter()
                .enumerate()
                .fold(MinPairEntry::FLUSHED, |entry, (j, d)| {
                    min_find(angle_of(&table, q.fixed(), d.fixed()), j as u32, entry)
                });
            verdict(k, &entry, queries, db, cfg)
        })
        .collect())
}
