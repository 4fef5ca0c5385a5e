//! Unsigned Q-format fixed-point arithmetic.
//!
//! Every value carries its [`QFormat`]. Multiplication and addition widen the
//! result format so they are always exact; [`FxSample::resize`] is the only
//! narrowing operation and applies round-to-nearest-even on dropped fraction
//! bits and saturation on dropped integer bits.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::FixedError;

/// Unsigned fixed-point format `UQ<integer_bits>.<fraction_bits>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QFormat {
    integer_bits: u8,
    fraction_bits: u8,
}

impl QFormat {
    /// Descriptor elements and dot-product outputs.
    pub const UQ1_15: QFormat = QFormat::new_unchecked(1, 15);
    /// Angles in radians, covers `[0, π/2]`.
    pub const UQ2_14: QFormat = QFormat::new_unchecked(2, 14);
    /// Exact product of two `UQ1.15` samples.
    pub const UQ2_30: QFormat = QFormat::new_unchecked(2, 30);
    /// Root of the 128-input adder tree fed with `UQ2.30` products.
    pub const UQ9_30: QFormat = QFormat::new_unchecked(9, 30);

    const fn new_unchecked(integer_bits: u8, fraction_bits: u8) -> Self {
        Self {
            integer_bits,
            fraction_bits,
        }
    }

    pub fn new(integer_bits: u8, fraction_bits: u8) -> Result<Self, FixedError> {
        let width = integer_bits as u32 + fraction_bits as u32;
        if width == 0 || width > 64 {
            return Err(FixedError::InvalidWidth { width });
        }
        Ok(Self::new_unchecked(integer_bits, fraction_bits))
    }

    #[inline]
    pub const fn integer_bits(self) -> u8 {
        self.integer_bits
    }

    #[inline]
    pub const fn fraction_bits(self) -> u8 {
        self.fraction_bits
    }

    #[inline]
    pub const fn width(self) -> u32 {
        self.integer_bits as u32 + self.fraction_bits as u32
    }

    /// Largest raw code, `2^width - 1`.
    #[inline]
    pub const fn max_raw(self) -> u64 {
        if self.width() == 64 {
            u64::MAX
        } else {
            (1u64 << self.width()) - 1
        }
    }

    /// Weight of one LSB, `2^-fraction_bits`.
    #[inline]
    pub fn lsb(self) -> f64 {
        (-(self.fraction_bits as f64)).exp2()
    }

    /// Largest representable real value, `2^integer_bits - 2^-fraction_bits`.
    pub fn max_real(self) -> f64 {
        self.max_raw() as f64 * self.lsb()
    }
}

impl fmt::Display for QFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "UQ{}.{}", self.integer_bits, self.fraction_bits)
    }
}

/// A raw fixed-point code together with its format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FxSample {
    raw: u64,
    format: QFormat,
}

impl FxSample {
    pub fn from_raw(raw: u64, format: QFormat) -> Result<Self, FixedError> {
        if raw > format.max_raw() {
            return Err(FixedError::RawOutOfRange { raw, format });
        }
        Ok(Self { raw, format })
    }

    /// Caller guarantees `raw <= format.max_raw()`.
    #[inline]
    pub(crate) const fn from_raw_unchecked(raw: u64, format: QFormat) -> Self {
        Self { raw, format }
    }

    pub fn zero(format: QFormat) -> Self {
        Self { raw: 0, format }
    }

    pub fn max(format: QFormat) -> Self {
        Self {
            raw: format.max_raw(),
            format,
        }
    }

    /// Quantizes a non-negative real with round-to-nearest-even, saturating
    /// above the format's range.
    pub fn from_real(v: f64, format: QFormat) -> Result<Self, FixedError> {
        if !v.is_finite() {
            return Err(FixedError::NotFinite(v));
        }
        if v < 0.0 {
            return Err(FixedError::Negative(v));
        }
        let scaled = (v * (format.fraction_bits as f64).exp2()).round_ties_even();
        // u64::MAX as f64 rounds up to 2^64, so compare before casting.
        let raw = if scaled >= format.max_raw() as f64 {
            format.max_raw()
        } else {
            scaled as u64
        };
        Ok(Self { raw, format })
    }

    #[inline]
    pub const fn raw(self) -> u64 {
        self.raw
    }

    #[inline]
    pub const fn format(self) -> QFormat {
        self.format
    }

    #[inline]
    pub fn to_real(self) -> f64 {
        self.raw as f64 * self.format.lsb()
    }

    /// Exact product in format `UQ(ia+ib).(fa+fb)`.
    pub fn widening_mul(self, rhs: FxSample) -> Result<FxSample, FixedError> {
        let format = QFormat::new(
            self.format.integer_bits + rhs.format.integer_bits,
            self.format.fraction_bits + rhs.format.fraction_bits,
        )?;
        let product = self.raw as u128 * rhs.raw as u128;
        debug_assert!(product <= format.max_raw() as u128);
        Ok(FxSample {
            raw: product as u64,
            format,
        })
    }

    /// Exact sum in the operand format widened by one integer bit.
    pub fn widening_add(self, rhs: FxSample) -> Result<FxSample, FixedError> {
        if self.format != rhs.format {
            return Err(FixedError::FormatMismatch {
                left: self.format,
                right: rhs.format,
            });
        }
        let format = QFormat::new(self.format.integer_bits + 1, self.format.fraction_bits)?;
        Ok(FxSample {
            raw: self.raw + rhs.raw,
            format,
        })
    }

    /// Converts to `format`, rounding dropped fraction bits to nearest-even
    /// and saturating on dropped integer bits.
    pub fn resize(self, format: QFormat) -> FxSample {
        let raw = resize_raw(
            self.raw as u128,
            self.format.fraction_bits,
            format.fraction_bits,
            format.max_raw(),
        );
        FxSample { raw, format }
    }
}

/// Rescales `raw` from `from_frac` to `to_frac` fraction bits with
/// round-half-even, then clamps to `max_raw`.
#[inline]
pub(crate) fn resize_raw(raw: u128, from_frac: u8, to_frac: u8, max_raw: u64) -> u64 {
    let scaled = if to_frac >= from_frac {
        let shift = (to_frac - from_frac) as u32;
        if shift >= 128 || (raw != 0 && raw.leading_zeros() < shift) {
            return max_raw;
        }
        raw << shift
    } else {
        round_shift_right(raw, (from_frac - to_frac) as u32)
    };
    if scaled > max_raw as u128 {
        max_raw
    } else {
        scaled as u64
    }
}

/// `raw / 2^shift` rounded to nearest, ties to even.
#[inline]
pub(crate) fn round_shift_right(raw: u128, shift: u32) -> u128 {
    if shift == 0 {
        return raw;
    }
    if shift >= 128 {
        return 0;
    }
    let quotient = raw >> shift;
    let remainder = raw & ((1u128 << shift) - 1);
    let half = 1u128 << (shift - 1);
    if remainder > half || (remainder == half && quotient & 1 == 1) {
        quotient + 1
    } else {
        quotient
    }
}

/// Quantizes `v` to `fmt`. Free-function form of [`FxSample::from_real`].
pub fn fx_from_real(v: f64, fmt: QFormat) -> Result<FxSample, FixedError> {
    FxSample::from_real(v, fmt)
}

pub fn fx_mul(a: FxSample, b: FxSample) -> Result<FxSample, FixedError> {
    a.widening_mul(b)
}

pub fn fx_add(a: FxSample, b: FxSample) -> Result<FxSample, FixedError> {
    a.widening_add(b)
}

pub fn fx_resize(a: FxSample, fmt: QFormat) -> FxSample {
    a.resize(fmt)
}
