use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::fixedpoint::QFormat;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FixedError {
    #[error("format width {width} bits is outside 1..=64")]
    InvalidWidth { width: u32 },
    #[error("raw value {raw:#x} does not fit {format}")]
    RawOutOfRange { raw: u64, format: QFormat },
    #[error("cannot quantize negative value {0}")]
    Negative(f64),
    #[error("cannot quantize non-finite value {0}")]
    NotFinite(f64),
    #[error("operand formats differ: {left} vs {right}")]
    FormatMismatch { left: QFormat, right: QFormat },
}

#[derive(Debug, Error)]
pub enum DescriptorError {
    #[error("descriptor has {0} elements, expected 128")]
    WrongLength(usize),
    #[error("element {index} = {value} is outside [0, 1]")]
    ElementOutOfRange { index: usize, value: f64 },
    #[error("cannot normalize a zero vector")]
    ZeroVector,
    #[error("empty set")]
    EmptySet,
    #[error("cannot access {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{}: {message}", path.display())]
    Malformed { path: PathBuf, message: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("set holds {0} descriptors, the binary header allows at most u32::MAX")]
    TooLarge(usize),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatchError {
    #[error("database is empty")]
    EmptyDatabase,
    #[error("query set is empty")]
    EmptyQueries,
    #[error("threshold {0} is outside (0, 1)")]
    InvalidThreshold(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("query counts differ: {left} vs {right}")]
    QueryCountMismatch { left: usize, right: usize },
}
