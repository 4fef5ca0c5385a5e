//! Datapath cores: Dot_Product, MIN_FIND and Match_Check.

use serde::{Deserialize, Serialize};

use crate::descriptors::DESCRIPTOR_LEN;
use crate::fixedpoint::{resize_raw, FxSample, QFormat};

use super::ThresholdMode;

/// Levels of the pairwise adder tree, `log2(128)`.
pub const ADDER_TREE_LEVELS: u32 = 7;

/// MIN_MEM reset value for both minima.
pub const MIN_SENTINEL: u16 = 0xFFFF;

/// 128 exact `UQ1.15 x UQ1.15 -> UQ2.30` products summed by a 7-level
/// widening adder tree (`UQ9.30` at the root), then narrowed to `UQ1.15`
/// with round-to-nearest-even and saturation.
pub fn dot_product_core(a: &[u16; DESCRIPTOR_LEN], b: &[u16; DESCRIPTOR_LEN]) -> FxSample {
    let mut lanes = [0u64; DESCRIPTOR_LEN];
    for (lane, (&x, &y)) in lanes.iter_mut().zip(a.iter().zip(b)) {
        *lane = x as u64 * y as u64;
    }
    let mut width = DESCRIPTOR_LEN;
    for _ in 0..ADDER_TREE_LEVELS {
        width /= 2;
        for i in 0..width {
            lanes[i] = lanes[2 * i] + lanes[2 * i + 1];
        }
    }
    let out = QFormat::UQ1_15;
    let raw = resize_raw(
        lanes[0] as u128,
        QFormat::UQ9_30.fraction_bits(),
        out.fraction_bits(),
        out.max_raw(),
    );
    FxSample::from_raw_unchecked(raw, out)
}

/// One MIN_MEM slot: running minimum and second minimum of a query's angles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinPairEntry {
    /// `UQ2.14` raw.
    pub min: u16,
    /// `UQ2.14` raw.
    pub second_min: u16,
    /// Database index of `min`.
    pub min_index: Option<u32>,
    /// Set while no database descriptor has been folded in since the flush.
    pub init_flag: bool,
}

impl MinPairEntry {
    /// The value the flush multiplexer injects at the start of a block.
    pub const FLUSHED: MinPairEntry = MinPairEntry {
        min: MIN_SENTINEL,
        second_min: MIN_SENTINEL,
        min_index: None,
        init_flag: true,
    };
}

impl Default for MinPairEntry {
    fn default() -> Self {
        Self::FLUSHED
    }
}

/// Folds one angle into a running (min, second_min) pair with strict `<`.
///
/// A new minimum demotes the old one to second place; otherwise a value
/// below the second minimum replaces it; otherwise nothing changes. Only the
/// first case moves `min_index`.
#[inline]
pub fn min_find(current: u16, current_index: u32, prev: MinPairEntry) -> MinPairEntry {
    if current < prev.min {
        MinPairEntry {
            min: current,
            second_min: prev.min,
            min_index: Some(current_index),
            init_flag: false,
        }
    } else if current < prev.second_min {
        MinPairEntry {
            second_min: current,
            init_flag: false,
            ..prev
        }
    } else {
        MinPairEntry {
            init_flag: false,
            ..prev
        }
    }
}

/// Ratio test on raw angles.
///
/// `Binary10011` compares `min * 0b100000` against `second_min * 0b10011`
/// using only shifts and adds (threshold 19/32). `Exact0_6` compares
/// `5 * min < 3 * second_min`. A flushed entry never matches.
#[inline]
pub fn match_check(entry: &MinPairEntry, mode: ThresholdMode) -> bool {
    if entry.init_flag {
        return false;
    }
    let min = entry.min as u32;
    let sec = entry.second_min as u32;
    match mode {
        ThresholdMode::Binary10011 => {
            let lhs = min << 5;
            let rhs = (sec << 1) + sec + (sec << 4);
            lhs < rhs
        }
        ThresholdMode::Exact0_6 => 5 * min < 3 * sec,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::descriptors::{generate_synthetic, Descriptor, Point};
    use crate::fixedpoint::{fx_add, fx_mul, fx_resize};
    use crate::reference::dot_product;
    use proptest::prelude::*;

    /// The same tree built from the generic widening operations.
    fn dot_via_fx_ops(a: &[u16; 128], b: &[u16; 128]) -> FxSample {
        let mut level: Vec<FxSample> = a
            .iter()
            .zip(b)
            .map(|(&x, &y)| {
                let x = FxSample::from_raw(x as u64, QFormat::UQ1_15).unwrap();
                let y = FxSample::from_raw(y as u64, QFormat::UQ1_15).unwrap();
                fx_mul(x, y).unwrap()
            })
            .collect();
        while level.len() > 1 {
            level = level
                .chunks(2)
                .map(|p| fx_add(p[0], p[1]).unwrap())
                .collect();
        }
        assert_eq!(level[0].format(), QFormat::UQ9_30);
        fx_resize(level[0], QFormat::UQ1_15)
    }

    #[test]
    fn one_hot_dots() {
        let a = Descriptor::one_hot(9, Point::default());
        let b = Descriptor::one_hot(10, Point::default());
        assert_eq!(dot_product_core(a.fixed(), a.fixed()).raw(), 0x8000);
        assert_eq!(dot_product_core(a.fixed(), a.fixed()).to_real(), 1.0);
        assert_eq!(dot_product_core(a.fixed(), b.fixed()).raw(), 0);
    }

    #[test]
    fn saturates_above_two() {
        let full = [0x8000u16; 128];
        assert_eq!(dot_product_core(&full, &full).raw(), 0xFFFF);
    }

    #[test]
    fn random_pairs_within_analytic_bound() {
        for seed in 0..20 {
            let pair = generate_synthetic(8, seed, 0.5, 0.05).unwrap();
            for (q, d) in pair.queries.iter().zip(&pair.database) {
                let fixed = dot_product_core(q.fixed(), d.fixed()).to_real();
                // float view of binary-exact raws: products are exact in the
                // tree, only the final narrowing rounds (<= 2^-16), plus the
                // f64 accumulation error of the oracle itself.
                let qf = Descriptor::from_fixed(q.fixed(), Point::default()).unwrap();
                let df = Descriptor::from_fixed(d.fixed(), Point::default()).unwrap();
                let float = dot_product(&qf, &df);
                assert!((fixed - float).abs() <= 128.0 * 2f64.powi(-31) + 2f64.powi(-15));
                assert!((fixed - float).abs() <= 2f64.powi(-16) + 1e-12);
            }
        }
    }

    #[test]
    fn min_find_examples() {
        let prev = MinPairEntry {
            min: 100,
            second_min: 200,
            min_index: Some(4),
            init_flag: false,
        };
        let r = min_find(50, 7, prev);
        assert_eq!((r.min, r.second_min, r.min_index), (50, 100, Some(7)));

        // equal to min: strict < sends it to the second branch
        let r = min_find(100, 8, prev);
        assert_eq!((r.min, r.second_min, r.min_index), (100, 100, Some(4)));

        let r = min_find(150, 9, prev);
        assert_eq!((r.min, r.second_min, r.min_index), (100, 150, Some(4)));

        let r = min_find(200, 9, prev);
        assert_eq!(r, prev);

        let r = min_find(300, 0, MinPairEntry::FLUSHED);
        assert_eq!(
            (r.min, r.second_min, r.init_flag),
            (300, MIN_SENTINEL, false)
        );
    }

    #[test]
    fn match_check_examples() {
        let entry = |min, second_min| MinPairEntry {
            min,
            second_min,
            min_index: Some(0),
            init_flag: false,
        };
        for mode in [ThresholdMode::Binary10011, ThresholdMode::Exact0_6] {
            assert!(!match_check(&entry(777, 777), mode));
            assert!(match_check(&entry(0, 1), mode));
            assert!(!match_check(&MinPairEntry::FLUSHED, mode));
        }
        // 0.2 and 0.5 rad as UQ2.14 raws
        let (min, sec) = (3277u16, 8192u16);
        assert!((32 * min as u32) < (19 * sec as u32));
        assert!(match_check(&entry(min, sec), ThresholdMode::Binary10011));
        assert!(match_check(&entry(min, sec), ThresholdMode::Exact0_6));
        // ratio 0.59375 exactly: exact mode matches, binary doesn't
        assert!(!match_check(&entry(19, 32), ThresholdMode::Binary10011));
        assert!(match_check(&entry(19, 32), ThresholdMode::Exact0_6));
    }

    proptest! {
        #[test]
        fn tree_equals_generic_ops(
            a in prop::collection::vec(0u16..=0x8000, 128),
            b in prop::collection::vec(0u16..=0x8000, 128),
        ) {
            let a: [u16; 128] = a.try_into().unwrap();
            let b: [u16; 128] = b.try_into().unwrap();
            prop_assert_eq!(dot_product_core(&a, &b), dot_via_fx_ops(&a, &b));
        }

        #[test]
        fn streaming_equals_sort(values in prop::collection::vec(0u16..0x6500, 2..200)) {
            let mut entry = MinPairEntry::FLUSHED;
            for (j, &v) in values.iter().enumerate() {
                entry = min_find(v, j as u32, entry);
            }
            let mut sorted = values.clone();
            sorted.sort_unstable();
            prop_assert_eq!((entry.min, entry.second_min), (sorted[0], sorted[1]));
            let first = values.iter().position(|&v| v == sorted[0]).unwrap();
            prop_assert_eq!(entry.min_index, Some(first as u32));
        }

        #[test]
        fn binary_is_shift_add_times_19(min in any::<u16>(), sec in any::<u16>()) {
            let e = MinPairEntry { min, second_min: sec, min_index: None, init_flag: false };
            prop_assert_eq!(
                match_check(&e, ThresholdMode::Binary10011),
                32 * (min as u64) < 19 * (sec as u64)
            );
        }
    }
}
