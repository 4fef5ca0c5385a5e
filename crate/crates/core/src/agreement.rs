//! Verdict agreement between two engines.
//!
//! [`compare`] lines up two result lists query by query. [`explain`]
//! decides, for each disagreement, whether fixed-point rounding alone could
//! account for it: it bounds how far every pipeline angle can sit from the
//! float angle and checks whether the threshold falls inside the resulting
//! ratio interval.

use serde::{Deserialize, Serialize};

use crate::cordic::CordicConfig;
use crate::descriptors::{Descriptor, DescriptorSet};
use crate::error::MatchError;
use crate::pipeline::MIN_SENTINEL;
use crate::reference::{dot_product, dot_to_angle, MatchResult, SINGLE_ENTRY_SECOND_MIN};

/// Arc-cosine error budget of the CORDIC kernel, in angle LSBs.
pub const CORDIC_BOUND_LSB: f64 = 8.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Disagreement {
    pub query_index: usize,
    pub left_matched: bool,
    pub right_matched: bool,
    pub left_ratio: f64,
    pub right_ratio: f64,
    /// `left_ratio - threshold`.
    pub ratio_margin: f64,
    /// Ratio interval reachable under the quantization bound, once computed.
    pub bound_interval: Option<(f64, f64)>,
    pub within_bound: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub queries: usize,
    pub agreeing: usize,
    pub agreement_percent: f64,
    pub threshold: f64,
    pub disagreements: Vec<Disagreement>,
    /// Set by [`explain`].
    pub all_within_bound: Option<bool>,
}

impl AgreementReport {
    pub fn agreement_fraction(&self) -> f64 {
        if self.queries == 0 {
            1.0
        } else {
            self.agreeing as f64 / self.queries as f64
        }
    }
}

/// Compares `matched` flags query by query.
///
/// `threshold` only feeds the reported ratio margins.
pub fn compare(
    left: &[MatchResult],
    right: &[MatchResult],
    threshold: f64,
) -> Result<AgreementReport, MatchError> {
    if left.len() != right.len() {
        return Err(MatchError::QueryCountMismatch {
            left: left.len(),
            right: right.len(),
        });
    }
    let disagreements: Vec<Disagreement> = left
        .iter()
        .zip(right)
        .filter(|(l, r)| l.matched != r.matched)
        .map(|(l, r)| Disagreement {
            query_index: l.query_index,
            left_matched: l.matched,
            right_matched: r.matched,
            left_ratio: l.ratio(),
            right_ratio: r.ratio(),
            ratio_margin: l.ratio() - threshold,
            bound_interval: None,
            within_bound: None,
        })
        .collect();
    let queries = left.len();
    let agreeing = queries - disagreements.len();
    Ok(AgreementReport {
        queries,
        agreeing,
        agreement_percent: if queries == 0 {
            100.0
        } else {
            100.0 * agreeing as f64 / queries as f64
        },
        threshold,
        disagreements,
        all_within_bound: None,
    })
}

/// Worst-case distance between the float dot product and the pipeline's
/// `UQ1.15` dot product of the same pair.
///
/// Each element rounds by at most `2^-16`, products are exact in the adder
/// tree and only the final narrowing rounds again.
pub fn dot_quantization_bound(a: &Descriptor, b: &Descriptor) -> f64 {
    let half = 2f64.powi(-16);
    let sum_a: f64 = a.elements().iter().sum();
    let sum_b: f64 = b.elements().iter().sum();
    half * (sum_a + sum_b) + 128.0 * half * half + half
}

/// Interval the pipeline's min/second-min ratio can take for `query`.
pub fn ratio_interval(
    query: &Descriptor,
    db: &DescriptorSet,
    cordic: &CordicConfig,
) -> Result<(f64, f64), MatchError> {
    if db.is_empty() {
        return Err(MatchError::EmptyDatabase);
    }
    let slack = CORDIC_BOUND_LSB * cordic.angle_lsb();
    let mut lows = Vec::with_capacity(db.len());
    let mut highs = Vec::with_capacity(db.len());
    for d in db {
        let c = dot_product(query, d);
        let bound = dot_quantization_bound(query, d);
        lows.push((dot_to_angle(c + bound) - slack).max(0.0));
        highs.push(dot_to_angle(c - bound) + slack);
    }
    lows.sort_by(f64::total_cmp);
    highs.sort_by(f64::total_cmp);
    let (sec_lo, sec_hi) = if db.len() >= 2 {
        (lows[1], highs[1])
    } else {
        (
            SINGLE_ENTRY_SECOND_MIN.min(MIN_SENTINEL as f64 * cordic.angle_lsb()),
            SINGLE_ENTRY_SECOND_MIN.max(MIN_SENTINEL as f64 * cordic.angle_lsb()),
        )
    };
    let lo = if sec_hi > 0.0 { lows[0] / sec_hi } else { 0.0 };
    let hi = if sec_lo > 0.0 {
        highs[0] / sec_lo
    } else {
        f64::INFINITY
    };
    Ok((lo, hi))
}

/// Fills in the quantization-bound fields of `report`.
///
/// A disagreement is within bound when the threshold lies inside the ratio
/// interval, so that rounding alone can flip the verdict.
pub fn explain(
    report: &mut AgreementReport,
    queries: &DescriptorSet,
    db: &DescriptorSet,
    cordic: &CordicConfig,
) -> Result<(), MatchError> {
    if queries.len() != report.queries {
        return Err(MatchError::QueryCountMismatch {
            left: report.queries,
            right: queries.len(),
        });
    }
    for d in &mut report.disagreements {
        let (lo, hi) = ratio_interval(&queries[d.query_index], db, cordic)?;
        d.bound_interval = Some((lo, hi));
        d.within_bound = Some(lo <= report.threshold && report.threshold <= hi);
    }
    report.all_within_bound = Some(
        report
            .disagreements
            .iter()
            .all(|d| d.within_bound == Some(true)),
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::descriptors::{generate_synthetic, Point};
    use crate::pipeline::{run_functional, PipelineConfig, ThresholdMode};
    use crate::reference::match_all;

    fn result(k: usize, min: f64, sec: f64, matched: bool) -> MatchResult {
        MatchResult {
            query_index: k,
            best_index: Some(0),
            min_angle: min,
            second_min_angle: sec,
            matched,
            query_xy: Point::default(),
            best_xy: Some(Point::default()),
        }
    }

    #[test]
    fn identical_lists_agree_fully() {
        let a = vec![result(0, 0.1, 0.5, true), result(1, 0.4, 0.5, false)];
        let r = compare(&a, &a, 0.6).unwrap();
        assert_eq!(r.agreement_percent, 100.0);
        assert!(r.disagreements.is_empty());
    }

    #[test]
    fn disagreement_margin() {
        let a = vec![result(0, 0.299, 0.5, true)];
        let b = vec![result(0, 0.301, 0.5, false)];
        let r = compare(&a, &b, 0.6).unwrap();
        assert_eq!(r.agreeing, 0);
        assert_eq!(r.agreement_percent, 0.0);
        assert!((r.disagreements[0].ratio_margin - (0.598 - 0.6)).abs() < 1e-12);
    }

    #[test]
    fn count_mismatch_is_an_error() {
        let a = vec![result(0, 0.1, 0.5, true)];
        assert!(matches!(
            compare(&a, &[], 0.6),
            Err(MatchError::QueryCountMismatch { left: 1, right: 0 })
        ));
    }

    #[test]
    fn interval_contains_float_and_pipeline_ratios() {
        let pair = generate_synthetic(40, 9, 0.5, 0.02).unwrap();
        let cfg = PipelineConfig {
            threshold_mode: ThresholdMode::Exact0_6,
            ..PipelineConfig::default()
        };
        let fixed = run_functional(&pair.queries, &pair.database, &cfg).unwrap();
        let float = match_all(&pair.queries, &pair.database, 0.6).unwrap();
        for (k, q) in pair.queries.iter().enumerate() {
            let (lo, hi) = ratio_interval(q, &pair.database, &cfg.cordic).unwrap();
            assert!(lo <= float[k].ratio() && float[k].ratio() <= hi);
            assert!(lo <= fixed[k].ratio() && fixed[k].ratio() <= hi);
        }
    }
}
