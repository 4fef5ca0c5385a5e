//! Fixed-point CORDIC kernels of the cosine-inverse core.
//!
//! `arccos(x) = atan2(sqrt(1 - x^2), x)`: a saturating `1 - x^2` stage, a
//! hyperbolic vectoring CORDIC for the square root, and a circular vectoring
//! CORDIC that turns `(u, v) = (x, sqrt(1 - x^2))` into an angle.
//!
//! Both CORDICs run on signed 64-bit words with 48 fraction bits and round
//! once, to nearest-even, into the output format.

use serde::{Deserialize, Serialize};

use crate::error::MatchError;
use crate::fixedpoint::{resize_raw, FxSample, QFormat};

/// Fraction bits of the internal CORDIC datapath.
const WORK_FRAC: u8 = 48;
const WORK_ONE: i64 = 1 << WORK_FRAC;

/// Iteration counts beyond this shift everything out of a 64-bit word.
pub const MAX_ITERATIONS: u32 = 62;

/// `round(atan(2^-i) * 2^48)` for `i = 0..=48`; zero afterwards.
const ATAN_TABLE: [i64; 49] = [
    221069929750889,
    130505199945453,
    68955363498242,
    35002819193903,
    17569333089919,
    8793231387230,
    4397688649582,
    2198978517948,
    1099506035422,
    549755114839,
    274877819563,
    137438942549,
    68719475371,
    34359738197,
    17179869163,
    8589934589,
    4294967296,
    2147483648,
    1073741824,
    536870912,
    268435456,
    134217728,
    67108864,
    33554432,
    16777216,
    8388608,
    4194304,
    2097152,
    1048576,
    524288,
    262144,
    131072,
    65536,
    32768,
    16384,
    8192,
    4096,
    2048,
    1024,
    512,
    256,
    128,
    64,
    32,
    16,
    8,
    4,
    2,
    1,
];

#[inline]
fn atan_entry(i: u32) -> i64 {
    ATAN_TABLE.get(i as usize).copied().unwrap_or(0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CordicConfig {
    /// Hyperbolic micro-rotations in the square-root kernel, repeats included.
    pub sqrt_iterations: u32,
    /// Circular micro-rotations in the polar kernel.
    pub polar_iterations: u32,
    pub input_format: QFormat,
    /// Radians.
    pub angle_format: QFormat,
}

impl Default for CordicConfig {
    fn default() -> Self {
        Self {
            sqrt_iterations: 37,
            polar_iterations: 16,
            input_format: QFormat::UQ1_15,
            angle_format: QFormat::UQ2_14,
        }
    }
}

impl CordicConfig {
    pub fn validate(&self) -> Result<(), MatchError> {
        let bad = |m: String| Err(MatchError::InvalidConfig(m));
        for (name, n) in [
            ("sqrt_iterations", self.sqrt_iterations),
            ("polar_iterations", self.polar_iterations),
        ] {
            if !(1..=MAX_ITERATIONS).contains(&n) {
                return bad(format!("{name} = {n} is outside 1..={MAX_ITERATIONS}"));
            }
        }
        if self.angle_format.max_real() < std::f64::consts::FRAC_PI_2 {
            return bad(format!("{} cannot hold π/2", self.angle_format));
        }
        if self.angle_format.fraction_bits() > WORK_FRAC
            || self.input_format.fraction_bits() > WORK_FRAC
        {
            return bad(format!(
                "formats may carry at most {WORK_FRAC} fraction bits"
            ));
        }
        if self.input_format.integer_bits() > 1 {
            return bad(format!(
                "input format {} must have at most 1 integer bit",
                self.input_format
            ));
        }
        Ok(())
    }

    /// One LSB of the angle format, in radians.
    pub fn angle_lsb(&self) -> f64 {
        self.angle_format.lsb()
    }
}

/// An angle in radians held in the configured angle format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AngleSample(FxSample);

impl AngleSample {
    fn new(raw: u64, format: QFormat) -> Self {
        AngleSample(FxSample::from_raw_unchecked(raw, format))
    }

    #[inline]
    pub fn raw(self) -> u64 {
        self.0.raw()
    }

    pub fn radians(self) -> f64 {
        self.0.to_real()
    }

    pub fn sample(self) -> FxSample {
        self.0
    }
}

/// Output of the polar kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolarAngle {
    pub angle: AngleSample,
    /// Set for the `(0, 0)` input, whose angle is undefined and reported as 0.
    pub degenerate: bool,
}

/// Hyperbolic shift schedule: 1, 2, 3, 4, 4, 5, ..., 13, 13, ..., 40, 40, ...
fn hyperbolic_schedule(rotations: u32) -> impl Iterator<Item = u32> {
    let mut shift = 1u32;
    let mut next_repeat = 4u32;
    let mut repeating = false;
    (0..rotations).map(move |_| {
        let current = shift;
        if shift == next_repeat && !repeating {
            repeating = true;
        } else {
            if shift == next_repeat {
                next_repeat = 3 * next_repeat + 1;
            }
            repeating = false;
            shift += 1;
        }
        current
    })
}

/// `round(2^48 / K_h)` for the given rotation count, where
/// `K_h = prod sqrt(1 - 2^-2i)` over the schedule.
fn hyperbolic_inverse_gain(rotations: u32) -> i64 {
    let gain: f64 = hyperbolic_schedule(rotations)
        .map(|i| (1.0 - (-2.0 * i as f64).exp2()).sqrt())
        .product();
    (WORK_ONE as f64 / gain).round() as i64
}

/// Square root by hyperbolic vectoring CORDIC, for `x` in `[0, 2)` with at
/// most 48 fraction bits.
///
/// The input is range-reduced by an even power of two into `[0.5, 2)`, which
/// keeps the vectoring angle inside the hyperbolic convergence range, and the
/// result is shifted back by half that power.
pub fn cordic_sqrt(x: FxSample, cfg: &CordicConfig) -> FxSample {
    let out = x.format();
    debug_assert!(out.fraction_bits() <= WORK_FRAC && x.to_real() < 2.0);
    if x.raw() == 0 {
        return FxSample::zero(out);
    }
    let mut w = (x.raw() as i64) << (WORK_FRAC - out.fraction_bits());
    let mut k = 0u32;
    while w < WORK_ONE / 2 {
        w <<= 2;
        k += 1;
    }

    let quarter = WORK_ONE / 4;
    let (mut xs, mut ys) = (w + quarter, w - quarter);
    for i in hyperbolic_schedule(cfg.sqrt_iterations) {
        let (dx, dy) = (ys >> i, xs >> i);
        if ys >= 0 {
            xs -= dx;
            ys -= dy;
        } else {
            xs += dx;
            ys += dy;
        }
    }
    let root = (xs as i128 * hyperbolic_inverse_gain(cfg.sqrt_iterations) as i128) >> WORK_FRAC;
    // sqrt(w) = sqrt(w') * 2^-k: reinterpret with k more fraction bits.
    let raw = resize_raw(
        root.max(0) as u128,
        WORK_FRAC + k as u8,
        out.fraction_bits(),
        out.max_raw(),
    );
    FxSample::from_raw_unchecked(raw, out)
}

/// `1 - x^2`, saturating at zero, rounded once into `x`'s format.
pub fn one_minus_x_squared(x: FxSample) -> FxSample {
    let fmt = x.format();
    let frac = 2 * fmt.fraction_bits() as u32;
    let square = x.raw() as u128 * x.raw() as u128;
    let one = 1u128 << frac;
    let diff = one.saturating_sub(square);
    FxSample::from_raw_unchecked(
        resize_raw(diff, frac as u8, fmt.fraction_bits(), fmt.max_raw()),
        fmt,
    )
}

struct PolarVector {
    #[cfg_attr(not(test), allow(dead_code))]
    magnitude: i64,
    angle: i64,
}

/// Circular vectoring CORDIC on Q.48 words. `u, v >= 0`.
fn polar_vectoring(mut x: i64, mut y: i64, iterations: u32) -> PolarVector {
    let mut z = 0i64;
    for i in 0..iterations {
        let (dx, dy) = (y >> i, x >> i);
        if y > 0 {
            x += dx;
            y -= dy;
            z += atan_entry(i);
        } else if y < 0 {
            x -= dx;
            y += dy;
            z -= atan_entry(i);
        }
    }
    let gain: f64 = (0..iterations)
        .map(|i| (1.0 + (-2.0 * i as f64).exp2()).sqrt())
        .product();
    let inv_gain = (WORK_ONE as f64 / gain).round() as i128;
    PolarVector {
        magnitude: ((x as i128 * inv_gain) >> WORK_FRAC) as i64,
        angle: z,
    }
}

fn to_work(s: FxSample) -> i64 {
    (s.raw() as i64) << (WORK_FRAC - s.format().fraction_bits())
}

/// `atan2(v, u)` for `u, v >= 0`, in the configured angle format.
pub fn cordic_polar_angle(u: FxSample, v: FxSample, cfg: &CordicConfig) -> PolarAngle {
    let fmt = cfg.angle_format;
    if u.raw() == 0 && v.raw() == 0 {
        return PolarAngle {
            angle: AngleSample::new(0, fmt),
            degenerate: true,
        };
    }
    let polar = polar_vectoring(to_work(u), to_work(v), cfg.polar_iterations);
    let raw = resize_raw(
        polar.angle.max(0) as u128,
        WORK_FRAC,
        fmt.fraction_bits(),
        fmt.max_raw(),
    );
    PolarAngle {
        angle: AngleSample::new(raw, fmt),
        degenerate: false,
    }
}

/// `arccos(x)` as `atan2(sqrt(1 - x^2), x)`. Inputs above 1.0 saturate the
/// `1 - x^2` stage to zero and yield angle 0.
pub fn cordic_arccos(x: FxSample, cfg: &CordicConfig) -> AngleSample {
    let v = cordic_sqrt(one_minus_x_squared(x), cfg);
    cordic_polar_angle(x, v, cfg).angle
}

/// `cordic_arccos` for every 16-bit input code, precomputed.
///
/// The pipeline evaluates millions of arc-cosines of `UQ1.15` dot products;
/// the table is built from [`cordic_arccos`] itself so results are identical.
#[derive(Debug, Clone)]
pub struct ArccosTable {
    table: Vec<u16>,
    cfg: CordicConfig,
}

impl ArccosTable {
    pub fn new(cfg: CordicConfig) -> Result<Self, MatchError> {
        cfg.validate()?;
        if cfg.input_format.width() != 16 || cfg.angle_format.width() > 16 {
            return Err(MatchError::InvalidConfig(
                "arc-cosine table needs a 16-bit input and at most 16-bit angle format".into(),
            ));
        }
        let table = (0..=u16::MAX)
            .map(|raw| {
                let x = FxSample::from_raw_unchecked(raw as u64, cfg.input_format);
                cordic_arccos(x, &cfg).raw() as u16
            })
            .collect();
        Ok(Self { table, cfg })
    }

    #[inline]
    pub fn lookup(&self, x_raw: u16) -> u16 {
        self.table[x_raw as usize]
    }

    pub fn config(&self) -> &CordicConfig {
        &self.cfg
    }
}

/// One row of the accuracy sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AccuracyRow {
    pub x_raw: u64,
    pub x: f64,
    pub cordic: f64,
    pub reference: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AccuracySweep {
    pub rows: Vec<AccuracyRow>,
    /// Largest |error| over every input, radians.
    pub max_error: f64,
    pub max_error_x: f64,
    /// Largest |error| over inputs at or above `exclusion_below`.
    pub max_error_outside_exclusion: f64,
    pub exclusion_below: f64,
    pub angle_lsb: f64,
}

impl AccuracySweep {
    pub fn max_error_lsb(&self) -> f64 {
        self.max_error / self.angle_lsb
    }
}

/// Inputs below this are excluded from the headline accuracy bound.
pub const ACCURACY_EXCLUSION_BELOW: f64 = 1.0 / 256.0;

/// Evaluates `cordic_arccos` on every representable input in `[0, 1]`
/// against `f64::acos`.
pub fn accuracy_sweep(cfg: &CordicConfig) -> AccuracySweep {
    let fmt = cfg.input_format;
    let one = 1u64 << fmt.fraction_bits();
    let mut rows = Vec::with_capacity(one as usize + 1);
    let (mut max_error, mut max_error_x, mut max_outside) = (0.0f64, 0.0, 0.0f64);
    for raw in 0..=one {
        let sample = FxSample::from_raw_unchecked(raw, fmt);
        let x = sample.to_real();
        let cordic = cordic_arccos(sample, cfg).radians();
        let reference = x.acos();
        let error = cordic - reference;
        if error.abs() > max_error {
            max_error = error.abs();
            max_error_x = x;
        }
        if x >= ACCURACY_EXCLUSION_BELOW {
            max_outside = max_outside.max(error.abs());
        }
        rows.push(AccuracyRow {
            x_raw: raw,
            x,
            cordic,
            reference,
            error,
        });
    }
    AccuracySweep {
        rows,
        max_error,
        max_error_x,
        max_error_outside_exclusion: max_outside,
        exclusion_below: ACCURACY_EXCLUSION_BELOW,
        angle_lsb: cfg.angle_lsb(),
    }
}
