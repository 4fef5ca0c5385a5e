//! Cosine-angle SIFT descriptor matching.
//!
//! Two engines produce the same [`MatchResult`] lists:
//!
//! * [`reference`]: a double-precision matcher that sorts every angular
//!   distance and applies the ratio test.
//! * [`pipeline`]: a bit-faithful, cycle-timed model of a fully pipelined
//!   matching core built from 16-bit fixed-point arithmetic ([`fixedpoint`])
//!   and CORDIC arc-cosine kernels ([`cordic`]), including its descriptor
//!   block cache and its cycle count.
//!
//! [`perf`] holds the roofline model that motivates the block cache, and
//! [`agreement`] compares the two engines.

pub mod agreement;
pub mod cordic;
pub mod descriptors;
pub mod error;
pub mod fixedpoint;
pub mod perf;
pub mod pipeline;
pub mod reference;

pub use cordic::{AngleSample, CordicConfig};
pub use descriptors::{Descriptor, DescriptorSet, FileFormat, LoadOptions, Point};
pub use error::{DescriptorError, FixedError, MatchError};
pub use fixedpoint::{FxSample, QFormat};
pub use perf::{RooflineConfig, RooflinePoint};
pub use pipeline::{PipelineConfig, RunReport, ThresholdMode};
pub use reference::MatchResult;
