//! Descriptor data model.
//!
//! A [`Descriptor`] keeps two views of the same 128 elements: an `f64` view
//! used by the reference matcher and a `UQ1.15` view consumed by the hardware
//! model. The fixed view is always `fx_from_real` of the float view, and the
//! float view of a fixed-loaded descriptor is the exact real value of its raws,
//! so either view can be the source of truth without drift.

mod io;
mod synthetic;

pub use io::{load_descriptor_set, save_descriptor_set, FileFormat, LoadOptions};
pub use synthetic::{generate_synthetic, SyntheticPair};

use crate::error::DescriptorError;
use crate::fixedpoint::{FxSample, QFormat};

/// Elements per SIFT descriptor.
pub const DESCRIPTOR_LEN: usize = 128;

/// Serialized size of one fixed-point descriptor: 128 x 16-bit elements plus
/// two 16-bit coordinates.
pub const DESCRIPTOR_BITS: usize = DESCRIPTOR_LEN * 16 + 32;
pub const DESCRIPTOR_BYTES: usize = DESCRIPTOR_BITS / 8;

/// Raw `UQ1.15` code for 1.0.
pub const ELEMENT_ONE_RAW: u16 = 1 << 15;

/// Norm tolerance for descriptors given in floating point.
pub const FLOAT_NORM_TOLERANCE: f64 = 1e-6;

/// Norm tolerance for descriptors whose float view came from `UQ1.15` raws:
/// each element may be off by half an LSB, so the norm may move by up to
/// `sqrt(128) * 2^-16`.
pub const FIXED_NORM_TOLERANCE: f64 = 11.313_708_498_984_761 / 65536.0 + FLOAT_NORM_TOLERANCE;

/// Pixel location of a keypoint.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, Default, serde::Serialize, serde::Deserialize,
)]
pub struct Point {
    pub x: u16,
    pub y: u16,
}

impl Point {
    pub const fn new(x: u16, y: u16) -> Self {
        Self { x, y }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Descriptor {
    elements: [f64; DESCRIPTOR_LEN],
    fixed: [u16; DESCRIPTOR_LEN],
    location: Point,
}

impl Descriptor {
    /// Builds a descriptor from float elements, deriving the fixed view.
    pub fn from_elements(elements: &[f64], location: Point) -> Result<Self, DescriptorError> {
        if elements.len() != DESCRIPTOR_LEN {
            return Err(DescriptorError::WrongLength(elements.len()));
        }
        let mut float = [0.0; DESCRIPTOR_LEN];
        let mut fixed = [0u16; DESCRIPTOR_LEN];
        for (index, &value) in elements.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(DescriptorError::ElementOutOfRange { index, value });
            }
            float[index] = value;
            // In-range, so quantization cannot fail and stays <= 0x8000.
            fixed[index] = FxSample::from_real(value, QFormat::UQ1_15)
                .map(|s| s.raw() as u16)
                .unwrap_or(0);
        }
        Ok(Self {
            elements: float,
            fixed,
            location,
        })
    }

    /// Builds a descriptor from `UQ1.15` raws; the float view is exact.
    pub fn from_fixed(raws: &[u16], location: Point) -> Result<Self, DescriptorError> {
        if raws.len() != DESCRIPTOR_LEN {
            return Err(DescriptorError::WrongLength(raws.len()));
        }
        let mut float = [0.0; DESCRIPTOR_LEN];
        let mut fixed = [0u16; DESCRIPTOR_LEN];
        for (index, &raw) in raws.iter().enumerate() {
            let value = raw as f64 / ELEMENT_ONE_RAW as f64;
            if raw > ELEMENT_ONE_RAW {
                return Err(DescriptorError::ElementOutOfRange { index, value });
            }
            float[index] = value;
            fixed[index] = raw;
        }
        Ok(Self {
            elements: float,
            fixed,
            location,
        })
    }

    /// One-hot unit vector along `axis`.
    pub fn one_hot(axis: usize, location: Point) -> Self {
        let mut elements = [0.0; DESCRIPTOR_LEN];
        elements[axis] = 1.0;
        Self::from_elements(&elements, location).expect("one-hot is in range")
    }

    #[inline]
    pub fn elements(&self) -> &[f64; DESCRIPTOR_LEN] {
        &self.elements
    }

    /// `UQ1.15` raws.
    #[inline]
    pub fn fixed(&self) -> &[u16; DESCRIPTOR_LEN] {
        &self.fixed
    }

    #[inline]
    pub fn location(&self) -> Point {
        self.location
    }

    /// L2 norm of the float view.
    pub fn norm(&self) -> f64 {
        self.elements.iter().map(|e| e * e).sum::<f64>().sqrt()
    }

    pub fn is_normalized(&self, tolerance: f64) -> bool {
        (self.norm() - 1.0).abs() <= tolerance
    }

    /// Scales to unit L2 norm, clamping each element to `[0, 1]`.
    pub fn normalize(&self) -> Result<Descriptor, DescriptorError> {
        let mut elements = self.elements;
        normalize_in_place(&mut elements)?;
        Descriptor::from_elements(&elements, self.location)
    }
}

/// Free-function form of [`Descriptor::normalize`].
pub fn normalize(d: &Descriptor) -> Result<Descriptor, DescriptorError> {
    d.normalize()
}

pub(crate) fn normalize_in_place(elements: &mut [f64]) -> Result<(), DescriptorError> {
    let norm = elements.iter().map(|e| e * e).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(DescriptorError::ZeroVector);
    }
    for e in elements.iter_mut() {
        *e = (*e / norm).clamp(0.0, 1.0);
    }
    Ok(())
}

/// The descriptors of one image, in load order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DescriptorSet {
    pub image_id: String,
    pub descriptors: Vec<Descriptor>,
}

impl DescriptorSet {
    pub fn new(image_id: impl Into<String>, descriptors: Vec<Descriptor>) -> Self {
        Self {
            image_id: image_id.into(),
            descriptors,
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.descriptors.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.descriptors.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Descriptor> {
        self.descriptors.iter()
    }

    pub fn get(&self, index: usize) -> Option<&Descriptor> {
        self.descriptors.get(index)
    }

    /// Copy of the first `count` descriptors.
    pub fn truncated(&self, count: usize) -> DescriptorSet {
        DescriptorSet::new(
            self.image_id.clone(),
            self.descriptors.iter().take(count).cloned().collect(),
        )
    }
}

impl std::ops::Index<usize> for DescriptorSet {
    type Output = Descriptor;

    fn index(&self, index: usize) -> &Descriptor {
        &self.descriptors[index]
    }
}

impl<'a> IntoIterator for &'a DescriptorSet {
    type Item = &'a Descriptor;
    type IntoIter = std::slice::Iter<'a, Descriptor>;

    fn into_iter(self) -> Self::IntoIter {
        self.descriptors.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn size_constants() {
        assert_eq!(DESCRIPTOR_BITS, 2080);
        assert_eq!(DESCRIPTOR_BYTES, 260);
    }

    #[test]
    fn rejects_bad_elements() {
        assert!(matches!(
            Descriptor::from_elements(&[0.5; 127], Point::default()),
            Err(DescriptorError::WrongLength(127))
        ));
        let mut e = [0.0; 128];
        e[3] = 1.5;
        assert!(matches!(
            Descriptor::from_elements(&e, Point::default()),
            Err(DescriptorError::ElementOutOfRange { index: 3, .. })
        ));
        e[3] = -0.1;
        assert!(Descriptor::from_elements(&e, Point::default()).is_err());
        let mut raws = [0u16; 128];
        raws[0] = 0x8001;
        assert!(Descriptor::from_fixed(&raws, Point::default()).is_err());
    }

    #[test]
    fn fixed_view_matches_quantized_float() {
        let mut e = [0.0; 128];
        e[0] = 0.6;
        e[1] = 0.8;
        let d = Descriptor::from_elements(&e, Point::new(3, 4)).unwrap();
        assert_eq!(d.fixed()[0], 19661);
        assert_eq!(d.fixed()[1], 26214); // 0.8 * 32768 = 26214.4
        assert_eq!(d.location(), Point::new(3, 4));
        assert!(d.is_normalized(FLOAT_NORM_TOLERANCE));
    }

    #[test]
    fn normalize_one_hot_unchanged() {
        let d = Descriptor::one_hot(17, Point::default());
        assert_eq!(d.normalize().unwrap(), d);
        assert_eq!(d.fixed()[17], ELEMENT_ONE_RAW);
    }

    #[test]
    fn normalize_all_equal() {
        let d = Descriptor::from_elements(&[0.25; 128], Point::default()).unwrap();
        let n = d.normalize().unwrap();
        let expected = 1.0 / 128f64.sqrt();
        for &e in n.elements() {
            assert!((e - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn normalize_zero_vector_fails() {
        let d = Descriptor::from_elements(&[0.0; 128], Point::default()).unwrap();
        assert!(matches!(d.normalize(), Err(DescriptorError::ZeroVector)));
    }

    proptest! {
        #[test]
        fn normalize_gives_unit_norm(v in prop::collection::vec(0.0f64..1.0, 128)) {
            prop_assume!(v.iter().any(|&x| x > 1e-3));
            let d = Descriptor::from_elements(&v, Point::default()).unwrap();
            let n = d.normalize().unwrap();
            let norm = n.elements().iter().map(|e| e * e).sum::<f64>().sqrt();
            prop_assert!((norm - 1.0).abs() < 1e-6);
        }

        #[test]
        fn fixed_round_trip_is_exact(raws in prop::collection::vec(0u16..=0x8000, 128)) {
            let d = Descriptor::from_fixed(&raws, Point::default()).unwrap();
            let again = Descriptor::from_elements(d.elements(), Point::default()).unwrap();
            prop_assert_eq!(again.fixed(), d.fixed());
        }
    }
}
