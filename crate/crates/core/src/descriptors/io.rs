//! `.siftd` (text) and `.siftdb` (binary) descriptor files.
//!
//! Text: a `SIFTD v1 text m=<count>` header line, then one line per descriptor
//! holding `x y f1 .. f128`.
//!
//! Binary: the 8-byte magic `SIFTDB01`, a little-endian `u32` count, then per
//! descriptor `x`, `y` and 128 `UQ1.15` raws, all little-endian `u16` (260
//! bytes per descriptor).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{
    Descriptor, DescriptorSet, Point, DESCRIPTOR_BYTES, DESCRIPTOR_LEN, FIXED_NORM_TOLERANCE,
    FLOAT_NORM_TOLERANCE,
};
use crate::error::DescriptorError;

const TEXT_HEADER_PREFIX: &str = "SIFTD v1 text m=";
const BINARY_MAGIC: &[u8; 8] = b"SIFTDB01";

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FileFormat {
    Text,
    Binary,
}

impl FileFormat {
    /// `.siftd` is text, `.siftdb` is binary.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()? {
            "siftd" => Some(FileFormat::Text),
            "siftdb" => Some(FileFormat::Binary),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LoadOptions {
    /// Rescale descriptors whose norm is off by more than the tolerance.
    /// When false a warning is logged and the descriptor is kept as is.
    pub auto_normalize: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            auto_normalize: true,
        }
    }
}

pub fn load_descriptor_set(
    path: &Path,
    format: FileFormat,
    options: LoadOptions,
) -> Result<DescriptorSet, DescriptorError> {
    let file = File::open(path).map_err(|source| DescriptorError::Io {
        path: path.to_owned(),
        source,
    })?;
    let reader = BufReader::new(file);
    let (descriptors, tolerance) = match format {
        FileFormat::Text => (read_text(path, reader)?, FLOAT_NORM_TOLERANCE),
        FileFormat::Binary => (read_binary(path, reader)?, FIXED_NORM_TOLERANCE),
    };
    if descriptors.is_empty() {
        return Err(DescriptorError::EmptySet);
    }
    let descriptors = descriptors
        .into_iter()
        .enumerate()
        .map(|(k, d)| check_norm(path, k, d, tolerance, options))
        .collect::<Result<Vec<_>, _>>()?;
    let image_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(DescriptorSet::new(image_id, descriptors))
}

fn check_norm(
    path: &Path,
    index: usize,
    d: Descriptor,
    tolerance: f64,
    options: LoadOptions,
) -> Result<Descriptor, DescriptorError> {
    if d.is_normalized(tolerance) {
        return Ok(d);
    }
    let norm = d.norm();
    if options.auto_normalize {
        log::warn!(
            "{}: descriptor {index} has norm {norm:.6}, normalizing",
            path.display()
        );
        d.normalize()
    } else {
        log::warn!(
            "{}: descriptor {index} has norm {norm:.6}, keeping as is",
            path.display()
        );
        Ok(d)
    }
}

fn read_text(path: &Path, reader: impl BufRead) -> Result<Vec<Descriptor>, DescriptorError> {
    let parse_err = |line: usize, message: String| DescriptorError::Parse {
        path: path.to_owned(),
        line,
        message,
    };
    let io_err = |source| DescriptorError::Io {
        path: path.to_owned(),
        source,
    };

    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| parse_err(1, "missing header".into()))?
        .map_err(io_err)?;
    let count: usize = header
        .trim_end()
        .strip_prefix(TEXT_HEADER_PREFIX)
        .and_then(|m| m.parse().ok())
        .ok_or_else(|| parse_err(1, format!("malformed header {header:?}")))?;

    let mut descriptors = Vec::with_capacity(count);
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_ascii_whitespace();
        let mut coord = |name: &str| -> Result<u16, DescriptorError> {
            let field = fields
                .next()
                .ok_or_else(|| parse_err(line_no, format!("missing {name}")))?;
            field
                .parse()
                .map_err(|_| parse_err(line_no, format!("bad {name} coordinate {field:?}")))
        };
        let location = Point::new(coord("x")?, coord("y")?);
        let elements = fields
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| parse_err(line_no, format!("bad element {f:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let d = Descriptor::from_elements(&elements, location)
            .map_err(|e| parse_err(line_no, e.to_string()))?;
        descriptors.push(d);
    }
    if descriptors.len() != count {
        return Err(DescriptorError::Malformed {
            path: path.to_owned(),
            message: format!(
                "header declares {count} descriptors, found {}",
                descriptors.len()
            ),
        });
    }
    Ok(descriptors)
}

fn read_binary(path: &Path, mut reader: impl Read) -> Result<Vec<Descriptor>, DescriptorError> {
    let malformed = |message: String| DescriptorError::Malformed {
        path: path.to_owned(),
        message,
    };
    let mut header = [0u8; 12];
    reader
        .read_exact(&mut header)
        .map_err(|_| malformed("truncated header".into()))?;
    if &header[..8] != BINARY_MAGIC {
        return Err(malformed("bad magic".into()));
    }
    let count = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;

    let mut descriptors = Vec::with_capacity(count.min(1 << 20));
    let mut record = [0u8; DESCRIPTOR_BYTES];
    let mut raws = [0u16; DESCRIPTOR_LEN];
    for k in 0..count {
        reader
            .read_exact(&mut record)
            .map_err(|_| malformed(format!("truncated at descriptor {k} of {count}")))?;
        let word = |i: usize| u16::from_le_bytes([record[2 * i], record[2 * i + 1]]);
        let location = Point::new(word(0), word(1));
        for (j, raw) in raws.iter_mut().enumerate() {
            *raw = word(j + 2);
        }
        let d = Descriptor::from_fixed(&raws, location)
            .map_err(|e| malformed(format!("descriptor {k}: {e}")))?;
        descriptors.push(d);
    }
    let mut trailing = [0u8; 1];
    if reader.read(&mut trailing).unwrap_or(0) != 0 {
        return Err(malformed("trailing bytes after last descriptor".into()));
    }
    Ok(descriptors)
}

pub fn save_descriptor_set(
    set: &DescriptorSet,
    path: &Path,
    format: FileFormat,
) -> Result<(), DescriptorError> {
    let io_err = |source| DescriptorError::Io {
        path: path.to_owned(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    match format {
        FileFormat::Text => write_text(set, &mut w),
        FileFormat::Binary => {
            let count =
                u32::try_from(set.len()).map_err(|_| DescriptorError::TooLarge(set.len()))?;
            write_binary(set, count, &mut w)
        }
    }
    .map_err(io_err)?;
    w.flush().map_err(io_err)
}

fn write_text(set: &DescriptorSet, w: &mut impl Write) -> std::io::Result<()> {
    writeln!(w, "{TEXT_HEADER_PREFIX}{}", set.len())?;
    for d in set {
        let Point { x, y } = d.location();
        write!(w, "{x} {y}")?;
        // `{}` prints the shortest string that parses back to the same f64.
        for e in d.elements() {
            write!(w, " {e}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

fn write_binary(set: &DescriptorSet, count: u32, w: &mut impl Write) -> std::io::Result<()> {
    w.write_all(BINARY_MAGIC)?;
    w.write_all(&count.to_le_bytes())?;
    for d in set {
        let Point { x, y } = d.location();
        w.write_all(&x.to_le_bytes())?;
        w.write_all(&y.to_le_bytes())?;
        for raw in d.fixed() {
            w.write_all(&raw.to_le_bytes())?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::descriptors::generate_synthetic;

    fn tmp(name: &str) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(name);
        (dir, path)
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(
            FileFormat::from_path(Path::new("a/b.siftd")),
            Some(FileFormat::Text)
        );
        assert_eq!(
            FileFormat::from_path(Path::new("b.siftdb")),
            Some(FileFormat::Binary)
        );
        assert_eq!(FileFormat::from_path(Path::new("b.txt")), None);
    }

    #[test]
    fn single_one_hot_text() {
        let (_dir, path) = tmp("one.siftd");
        let mut line = String::from("SIFTD v1 text m=1\n10 20");
        for i in 0..128 {
            line.push_str(if i == 5 { " 1" } else { " 0" });
        }
        line.push('\n');
        std::fs::write(&path, line).unwrap();
        let set = load_descriptor_set(&path, FileFormat::Text, LoadOptions::default()).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.image_id, "one");
        assert_eq!(set[0].norm(), 1.0);
        assert_eq!(set[0].location(), Point::new(10, 20));
    }

    #[test]
    fn empty_set_is_an_error() {
        let (_dir, path) = tmp("empty.siftd");
        std::fs::write(&path, "SIFTD v1 text m=0\n").unwrap();
        let err = load_descriptor_set(&path, FileFormat::Text, LoadOptions::default());
        assert!(matches!(err, Err(DescriptorError::EmptySet)));
        assert_eq!(err.unwrap_err().to_string(), "empty set");

        let (_dir, path) = tmp("empty.siftdb");
        let mut bytes = BINARY_MAGIC.to_vec();
        bytes.extend_from_slice(&0u32.to_le_bytes());
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(
            load_descriptor_set(&path, FileFormat::Binary, LoadOptions::default()),
            Err(DescriptorError::EmptySet)
        ));
    }

    #[test]
    fn malformed_inputs() {
        let (_dir, path) = tmp("bad.siftd");
        std::fs::write(&path, "SIFTD v2 text m=1\n").unwrap();
        assert!(matches!(
            load_descriptor_set(&path, FileFormat::Text, LoadOptions::default()),
            Err(DescriptorError::Parse { line: 1, .. })
        ));

        std::fs::write(&path, "SIFTD v1 text m=1\n1 2 0.5 0.5\n").unwrap();
        let err = load_descriptor_set(&path, FileFormat::Text, LoadOptions::default()).unwrap_err();
        assert!(err.to_string().contains("expected 128"), "{err}");

        let mut line = String::from("SIFTD v1 text m=1\n1 2 1.5");
        line.push_str(&" 0".repeat(127));
        std::fs::write(&path, line).unwrap();
        let err = load_descriptor_set(&path, FileFormat::Text, LoadOptions::default()).unwrap_err();
        assert!(err.to_string().contains("outside [0, 1]"), "{err}");

        let (_dir, path) = tmp("bad.siftdb");
        std::fs::write(&path, b"SIFTDB02\x01\x00\x00\x00").unwrap();
        assert!(load_descriptor_set(&path, FileFormat::Binary, LoadOptions::default()).is_err());
        let mut bytes = BINARY_MAGIC.to_vec();
        bytes.extend_from_slice(&2u32.to_le_bytes());
        bytes.extend_from_slice(&[0u8; 260]);
        std::fs::write(&path, bytes).unwrap();
        let err =
            load_descriptor_set(&path, FileFormat::Binary, LoadOptions::default()).unwrap_err();
        assert!(err.to_string().contains("truncated"), "{err}");
    }

    #[test]
    fn header_count_mismatch() {
        let (_dir, path) = tmp("count.siftd");
        let mut line = String::from("SIFTD v1 text m=2\n0 0 1");
        line.push_str(&" 0".repeat(127));
        std::fs::write(&path, line).unwrap();
        let err = load_descriptor_set(&path, FileFormat::Text, LoadOptions::default()).unwrap_err();
        assert!(matches!(err, DescriptorError::Malformed { .. }));
    }

    #[test]
    fn non_unit_descriptor_is_normalized_or_kept() {
        let (_dir, path) = tmp("scaled.siftd");
        let mut line = String::from("SIFTD v1 text m=1\n0 0");
        line.push_str(&" 0.5".repeat(128));
        std::fs::write(&path, &line).unwrap();

        let set = load_descriptor_set(&path, FileFormat::Text, LoadOptions::default()).unwrap();
        assert!(set[0].is_normalized(1e-12));

        let kept = load_descriptor_set(
            &path,
            FileFormat::Text,
            LoadOptions {
                auto_normalize: false,
            },
        )
        .unwrap();
        assert_eq!(kept[0].elements()[0], 0.5);
    }

    #[test]
    fn binary_layout_is_260_bytes_per_descriptor() {
        let pair = generate_synthetic(3, 11, 0.0, 0.0).unwrap();
        let (_dir, path) = tmp("three.siftdb");
        save_descriptor_set(&pair.database, &path, FileFormat::Binary).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(bytes.len(), 12 + 3 * 260);
        assert_eq!(&bytes[..8], b"SIFTDB01");
        assert_eq!(&bytes[8..12], &[3, 0, 0, 0]);
        let d = &pair.database[0];
        assert_eq!(u16::from_le_bytes([bytes[12], bytes[13]]), d.location().x);
        assert_eq!(u16::from_le_bytes([bytes[16], bytes[17]]), d.fixed()[0]);
    }

    #[test]
    fn round_trip_both_formats() {
        for seed in 0..4 {
            let pair = generate_synthetic(25, seed, 0.5, 0.05).unwrap();
            for (name, format) in [
                ("a.siftd", FileFormat::Text),
                ("a.siftdb", FileFormat::Binary),
            ] {
                let (_dir, path) = tmp(name);
                save_descriptor_set(&pair.queries, &path, format).unwrap();
                let loaded = load_descriptor_set(&path, format, LoadOptions::default()).unwrap();
                assert_eq!(loaded.len(), pair.queries.len());
                for (a, b) in loaded.iter().zip(&pair.queries) {
                    assert_eq!(a.fixed(), b.fixed());
                    assert_eq!(a.location(), b.location());
                    if format == FileFormat::Text {
                        assert_eq!(a.elements(), b.elements());
                    }
                }
                // Saving what was loaded reproduces the file byte for byte.
                let (_dir2, again) = tmp(name);
                save_descriptor_set(&loaded, &again, format).unwrap();
                assert_eq!(
                    std::fs::read(&path).unwrap(),
                    std::fs::read(&again).unwrap()
                );
            }
        }
    }
}
