//! Floating-point reference matcher.
//!
//! For every query: the dot product with each database descriptor, the arc
//! cosine of each, an ascending sort, and the ratio test
//! `min < threshold * second_min`. This is the oracle the hardware model is
//! checked against.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::descriptors::{Descriptor, DescriptorSet, Point};
use crate::error::MatchError;
use crate::fixedpoint::{FxSample, QFormat};

pub const DEFAULT_THRESHOLD: f64 = 0.6;

/// Second-minimum stand-in when the database holds a single descriptor.
pub const SINGLE_ENTRY_SECOND_MIN: f64 = PI;

/// Verdict for one query descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub query_index: usize,
    /// Nearest database descriptor, present whenever the database was non-empty.
    pub best_index: Option<usize>,
    /// Radians.
    pub min_angle: f64,
    /// Radians.
    pub second_min_angle: f64,
    pub matched: bool,
    pub query_xy: Point,
    pub best_xy: Option<Point>,
}

impl MatchResult {
    /// `min_angle` as a `UQ2.14` raw (saturating).
    pub fn min_raw(&self) -> u16 {
        angle_to_raw(self.min_angle)
    }

    pub fn second_min_raw(&self) -> u16 {
        angle_to_raw(self.second_min_angle)
    }

    /// `min / second_min`, the quantity the ratio test thresholds.
    pub fn ratio(&self) -> f64 {
        if self.second_min_angle == 0.0 {
            if self.min_angle == 0.0 {
                1.0
            } else {
                f64::INFINITY
            }
        } else {
            self.min_angle / self.second_min_angle
        }
    }
}

fn angle_to_raw(angle: f64) -> u16 {
    FxSample::from_real(angle.max(0.0), QFormat::UQ2_14)
        .map(|s| s.raw() as u16)
        .unwrap_or(u16::MAX)
}

/// Strict left-to-right sum of element products.
pub fn dot_product(a: &Descriptor, b: &Descriptor) -> f64 {
    a.elements()
        .iter()
        .zip(b.elements())
        .fold(0.0, |acc, (x, y)| acc + x * y)
}

/// `arccos(clamp(a . b, 0, 1))`, in `[0, π/2]`.
pub fn angular_distance(a: &Descriptor, b: &Descriptor) -> f64 {
    dot_to_angle(dot_product(a, b))
}

#[inline]
pub fn dot_to_angle(dot: f64) -> f64 {
    dot.clamp(0.0, 1.0).acos()
}

pub(crate) fn check_threshold(threshold: f64) -> Result<(), MatchError> {
    if threshold > 0.0 && threshold < 1.0 {
        Ok(())
    } else {
        Err(MatchError::InvalidThreshold(threshold))
    }
}

/// Matches one query against the whole database.
///
/// Ties in angle go to the smallest database index. A one-entry database
/// uses [`SINGLE_ENTRY_SECOND_MIN`] as its second minimum.
pub fn match_one(
    query_index: usize,
    query: &Descriptor,
    db: &DescriptorSet,
    threshold: f64,
) -> Result<MatchResult, MatchError> {
    check_threshold(threshold)?;
    if db.is_empty() {
        return Err(MatchError::EmptyDatabase);
    }
    let mut angles: Vec<(f64, usize)> = db
        .iter()
        .enumerate()
        .map(|(j, d)| (angular_distance(query, d), j))
        .collect();
    angles.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let (min_angle, best) = angles[0];
    let second_min_angle = angles.get(1).map_or(SINGLE_ENTRY_SECOND_MIN, |a| a.0);
    Ok(MatchResult {
        query_index,
        best_index: Some(best),
        min_angle,
        second_min_angle,
        matched: min_angle < threshold * second_min_angle,
        query_xy: query.location(),
        best_xy: Some(db[best].location()),
    })
}

/// One result per query, in query order. Queries are evaluated in parallel.
pub fn match_all(
    queries: &DescriptorSet,
    db: &DescriptorSet,
    threshold: f64,
) -> Result<Vec<MatchResult>, MatchError> {
    check_threshold(threshold)?;
    if queries.is_empty() {
        return Ok(Vec::new());
    }
    if db.is_empty() {
        return Err(MatchError::EmptyDatabase);
    }
    queries
        .descriptors
        .par_iter()
        .enumerate()
        .map(|(k, q)| match_one(k, q, db, threshold))
        .collect()
}
