//! Reader and writer for a strict NRRD subset: `NRRD0004`, three
//! dimensions, raw encoding, little-endian `short` or `uchar` samples.
//!
//! Writers always emit the header keys in the order
//! `type, dimension, sizes, spacings, endian, encoding` followed by one
//! blank line and the payload. Spacings are printed with the shortest
//! representation that parses back to the same `f64`.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::volume::{Dims, GridError, LabelGrid, Spacing, VolumeGrid};

pub const MAGIC: &str = "NRRD0004";

#[derive(Debug, Error)]
pub enum NrrdError {
    #[error("missing or unsupported magic line (expected {MAGIC})")]
    BadMagic,
    #[error("required header field '{0}' is missing")]
    MissingField(&'static str),
    #[error("unsupported value for '{key}': {value}")]
    UnsupportedValue { key: String, value: String },
    #[error("header is not terminated by a blank line")]
    UnterminatedHeader,
    #[error("payload has {actual} bytes, expected {expected}")]
    PayloadLengthMismatch { expected: usize, actual: usize },
    #[error("expected a {expected} file")]
    WrongKind { expected: &'static str },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SampleType {
    Short,
    UChar,
}

impl SampleType {
    fn bytes(self) -> usize {
        match self {
            SampleType::Short => 2,
            SampleType::UChar => 1,
        }
    }
}

/// A parsed file: intensities for `short`, labels for `uchar`.
#[derive(Debug, Clone, PartialEq)]
pub enum NrrdGrid {
    Volume(VolumeGrid),
    Labels(LabelGrid),
}

impl NrrdGrid {
    pub fn dims(&self) -> Dims {
        match self {
            NrrdGrid::Volume(v) => v.dims(),
            NrrdGrid::Labels(l) => l.dims(),
        }
    }

    pub fn into_volume(self) -> Result<VolumeGrid, NrrdError> {
        match self {
            NrrdGrid::Volume(v) => Ok(v),
            NrrdGrid::Labels(_) => Err(NrrdError::WrongKind { expected: "short" }),
        }
    }

    pub fn into_labels(self) -> Result<LabelGrid, NrrdError> {
        match self {
            NrrdGrid::Labels(l) => Ok(l),
            NrrdGrid::Volume(_) => Err(NrrdError::WrongKind { expected: "uchar" }),
        }
    }
}

fn unsupported(key: &str, value: &str) -> NrrdError {
    NrrdError::UnsupportedValue {
        key: key.to_string(),
        value: value.to_string(),
    }
}

fn parse_type(value: &str) -> Result<SampleType, NrrdError> {
    match value {
        "short" | "short int" | "signed short" | "signed short int" | "int16" | "int16_t" => {
            Ok(SampleType::Short)
        }
        "uchar" | "unsigned char" | "uint8" | "uint8_t" => Ok(SampleType::UChar),
        other => Err(unsupported("type", other)),
    }
}

fn parse_triple<T: std::str::FromStr>(key: &str, value: &str) -> Result<[T; 3], NrrdError> {
    let parts: Vec<&str> = value.split_whitespace().collect();
    if parts.len() != 3 {
        return Err(unsupported(key, value));
    }
    let mut out = Vec::with_capacity(3);
    for p in parts {
        out.push(p.parse::<T>().map_err(|_| unsupported(key, value))?);
    }
    let mut it = out.into_iter();
    Ok([it.next().unwrap(), it.next().unwrap(), it.next().unwrap()])
}

/// Accepts only an axis-aligned diagonal, e.g. `(0.25,0,0) (0,0.25,0) (0,0,1)`.
fn parse_space_directions(value: &str) -> Result<[f64; 3], NrrdError> {
    let vectors: Vec<&str> = value.split_whitespace().collect();
    if vectors.len() != 3 {
        return Err(unsupported("space directions", value));
    }
    let mut spacing = [0.0; 3];
    for (axis, vector) in vectors.iter().enumerate() {
        let inner = vector
            .strip_prefix('(')
            .and_then(|v| v.strip_suffix(')'))
            .ok_or_else(|| unsupported("space directions", value))?;
        let comps: Vec<f64> = inner
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| unsupported("space directions", value))?;
        if comps.len() != 3 {
            return Err(unsupported("space directions", value));
        }
        for (j, &c) in comps.iter().enumerate() {
            if j != axis && c != 0.0 {
                return Err(unsupported("space directions", value));
            }
        }
        spacing[axis] = comps[axis].abs();
    }
    Ok(spacing)
}

/// Finds the end of the header: the first empty line after the magic.
/// Returns (header text, payload offset).
fn split_header(bytes: &[u8]) -> Result<(&str, usize), NrrdError> {
    let mut start = 0;
    while let Some(rel) = bytes[start..].iter().position(|&b| b == b'\n') {
        let line = &bytes[start..start + rel];
        let line = line.strip_suffix(b"\r").unwrap_or(line);
        if line.is_empty() {
            let header = std::str::from_utf8(&bytes[..start]).map_err(|_| NrrdError::BadMagic)?;
            return Ok((header, start + rel + 1));
        }
        start += rel + 1;
    }
    Err(NrrdError::UnterminatedHeader)
}

pub fn parse_nrrd(bytes: &[u8]) -> Result<NrrdGrid, NrrdError> {
    let first_line_end = bytes.iter().position(|&b| b == b'\n').unwrap_or(bytes.len());
    let magic = &bytes[..first_line_end];
    let magic = magic.strip_suffix(b"\r").unwrap_or(magic);
    if magic != MAGIC.as_bytes() {
        return Err(NrrdError::BadMagic);
    }
    let (header, payload_offset) = split_header(bytes)?;

    let mut fields: HashMap<String, String> = HashMap::new();
    for line in header.lines().skip(1) {
        let line = line.trim_end_matches('\r');
        if line.starts_with('#') {
            continue;
        }
        // Key/value pairs (`key:=value`) carry free-form metadata.
        if line.contains(":=") {
            continue;
        }
        let (key, value) = line
            .split_once(": ")
            .ok_or_else(|| unsupported("header line", line))?;
        fields.insert(key.trim().to_ascii_lowercase(), value.trim().to_string());
    }
    let field = |key: &'static str| -> Result<&str, NrrdError> {
        fields
            .get(key)
            .map(String::as_str)
            .ok_or(NrrdError::MissingField(key))
    };

    let sample_type = parse_type(field("type")?)?;
    let dimension = field("dimension")?;
    if dimension != "3" {
        return Err(unsupported("dimension", dimension));
    }
    let sizes: [usize; 3] = parse_triple("sizes", field("sizes")?)?;
    let spacing = match fields.get("spacings") {
        Some(v) => parse_triple::<f64>("spacings", v)?,
        None => match fields.get("space directions") {
            Some(v) => parse_space_directions(v)?,
            None => return Err(NrrdError::MissingField("spacings")),
        },
    };
    if spacing.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(unsupported("spacings", &format!("{spacing:?}")));
    }
    let encoding = field("encoding")?;
    if encoding != "raw" {
        return Err(unsupported("encoding", encoding));
    }
    if sample_type == SampleType::Short {
        let endian = field("endian")?;
        if endian != "little" {
            return Err(unsupported("endian", endian));
        }
    }

    let dims = Dims(sizes);
    let payload = &bytes[payload_offset..];
    let expected = dims
        .len()
        .checked_mul(sample_type.bytes())
        .ok_or_else(|| unsupported("sizes", &format!("{sizes:?}")))?;
    if payload.len() != expected {
        return Err(NrrdError::PayloadLengthMismatch {
            expected,
            actual: payload.len(),
        });
    }
    let spacing = Spacing(spacing);
    Ok(match sample_type {
        SampleType::Short => {
            let samples = payload
                .chunks_exact(2)
                .map(|c| i16::from_le_bytes([c[0], c[1]]))
                .collect();
            NrrdGrid::Volume(VolumeGrid::new(dims, spacing, samples)?)
        }
        SampleType::UChar => NrrdGrid::Labels(LabelGrid::new(dims, spacing, payload.to_vec())?),
    })
}

fn header(kind: &str, dims: Dims, spacing: Spacing) -> String {
    let [nx, ny, nz] = dims.0;
    let [sx, sy, sz] = spacing.0;
    format!(
        "{MAGIC}\ntype: {kind}\ndimension: 3\nsizes: {nx} {ny} {nz}\nspacings: {sx:?} {sy:?} {sz:?}\nendian: little\nencoding: raw\n\n"
    )
}

pub fn write_volume(grid: &VolumeGrid) -> Vec<u8> {
    let head = header("short", grid.dims(), grid.spacing());
    let mut out = Vec::with_capacity(head.len() + 2 * grid.samples().len());
    out.extend_from_slice(head.as_bytes());
    for v in grid.samples() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn write_labels(grid: &LabelGrid) -> Vec<u8> {
    let head = header("uchar", grid.dims(), grid.spacing());
    let mut out = Vec::with_capacity(head.len() + grid.labels().len());
    out.extend_from_slice(head.as_bytes());
    out.extend_from_slice(grid.labels());
    out
}

pub fn write_nrrd(grid: &NrrdGrid) -> Vec<u8> {
    match grid {
        NrrdGrid::Volume(v) => write_volume(v),
        NrrdGrid::Labels(l) => write_labels(l),
    }
}

pub fn read_file(path: impl AsRef<Path>) -> Result<NrrdGrid, NrrdError> {
    parse_nrrd(&std::fs::read(path)?)
}

pub fn read_volume(path: impl AsRef<Path>) -> Result<VolumeGrid, NrrdError> {
    read_file(path)?.into_volume()
}

pub fn read_labels(path: impl AsRef<Path>) -> Result<LabelGrid, NrrdError> {
    read_file(path)?.into_labels()
}

pub fn save(path: impl AsRef<Path>, grid: &NrrdGrid) -> Result<(), NrrdError> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(&write_nrrd(grid))?;
    f.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn file(header_lines: &str, payload: &[u8]) -> Vec<u8> {
        let mut v = format!("NRRD0004\n{header_lines}\n").into_bytes();
        v.extend_from_slice(payload);
        v
    }

    #[test]
    fn smallest_file() {
        let bytes = file(
            "type: short\ndimension: 3\nsizes: 1 1 1\nspacings: 1 1 1\nendian: little\nencoding: raw\n",
            &[7, 0],
        );
        let g = parse_nrrd(&bytes).unwrap().into_volume().unwrap();
        assert_eq!(g.dims(), Dims::new(1, 1, 1));
        assert_eq!(g.samples(), &[7]);
    }

    #[test]
    fn x_fastest_payload() {
        let payload: Vec<u8> = (0i16..8).flat_map(|v| v.to_le_bytes()).collect();
        let bytes = file(
            "type: short\ndimension: 3\nsizes: 2 2 2\nspacings: 0.25 0.25 1.0\nendian: little\nencoding: raw\n",
            &payload,
        );
        let g = parse_nrrd(&bytes).unwrap().into_volume().unwrap();
        assert_eq!(g.get(1, 0, 1), 5);
        assert_eq!(g.spacing(), Spacing([0.25, 0.25, 1.0]));
    }

    #[test]
    fn bad_magic() {
        let bytes = b"NRRD9999\ntype: short\n\n".to_vec();
        assert!(matches!(parse_nrrd(&bytes), Err(NrrdError::BadMagic)));
        assert!(matches!(parse_nrrd(b""), Err(NrrdError::BadMagic)));
    }

    #[test]
    fn missing_and_unsupported_fields() {
        let no_sizes = file("type: short\ndimension: 3\nspacings: 1 1 1\nendian: little\nencoding: raw\n", &[]);
        assert!(matches!(parse_nrrd(&no_sizes), Err(NrrdError::MissingField("sizes"))));

        let gz = file(
            "type: short\ndimension: 3\nsizes: 1 1 1\nspacings: 1 1 1\nendian: little\nencoding: gzip\n",
            &[0, 0],
        );
        assert!(matches!(parse_nrrd(&gz), Err(NrrdError::UnsupportedValue { key, .. }) if key == "encoding"));

        let four_d = file("type: short\ndimension: 4\n", &[]);
        assert!(matches!(parse_nrrd(&four_d), Err(NrrdError::UnsupportedValue { key, .. }) if key == "dimension"));

        let float = file("type: float\ndimension: 3\n", &[]);
        assert!(matches!(parse_nrrd(&float), Err(NrrdError::UnsupportedValue { key, .. }) if key == "type"));

        let big = file(
            "type: short\ndimension: 3\nsizes: 1 1 1\nspacings: 1 1 1\nendian: big\nencoding: raw\n",
            &[0, 0],
        );
        assert!(matches!(parse_nrrd(&big), Err(NrrdError::UnsupportedValue { key, .. }) if key == "endian"));
    }

    #[test]
    fn payload_length_checked() {
        let short = file(
            "type: short\ndimension: 3\nsizes: 2 1 1\nspacings: 1 1 1\nendian: little\nencoding: raw\n",
            &[1, 0, 2],
        );
        assert!(matches!(
            parse_nrrd(&short),
            Err(NrrdError::PayloadLengthMismatch { expected: 4, actual: 3 })
        ));
    }

    #[test]
    fn space_directions_diagonal_accepted() {
        let bytes = file(
            "# comment\ntype: uchar\ndimension: 3\nspace: left-posterior-superior\nsizes: 1 1 2\nspace directions: (0.5,0,0) (0,0.5,0) (0,0,2)\nencoding: raw\n",
            &[1, 0],
        );
        let l = parse_nrrd(&bytes).unwrap().into_labels().unwrap();
        assert_eq!(l.spacing(), Spacing([0.5, 0.5, 2.0]));
        assert_eq!(l.labels(), &[1, 0]);

        let oblique = file(
            "type: uchar\ndimension: 3\nsizes: 1 1 1\nspace directions: (0.5,0.1,0) (0,0.5,0) (0,0,2)\nencoding: raw\n",
            &[1],
        );
        assert!(matches!(parse_nrrd(&oblique), Err(NrrdError::UnsupportedValue { .. })));
    }

    #[test]
    fn masks_are_written_as_uchar() {
        let m = LabelGrid::new(Dims::new(2, 1, 1), Spacing::UNIT, vec![0, 1]).unwrap();
        let bytes = write_labels(&m);
        let text = String::from_utf8_lossy(&bytes);
        assert!(text.starts_with("NRRD0004\ntype: uchar\n"));
        assert_eq!(parse_nrrd(&bytes).unwrap().into_labels().unwrap(), m);
    }

    #[test]
    fn golden_header_bytes() {
        let g = VolumeGrid::new(Dims::new(1, 1, 1), Spacing([0.25, 0.25, 1.0]), vec![7]).unwrap();
        let expected = b"NRRD0004\ntype: short\ndimension: 3\nsizes: 1 1 1\nspacings: 0.25 0.25 1.0\nendian: little\nencoding: raw\n\n\x07\x00";
        assert_eq!(write_volume(&g), expected.to_vec());
    }

    #[test]
    fn volume_vs_label_kind() {
        let g = VolumeGrid::new(Dims::new(1, 1, 1), Spacing::UNIT, vec![7]).unwrap();
        let parsed = parse_nrrd(&write_volume(&g)).unwrap();
        assert!(matches!(parsed.into_labels(), Err(NrrdError::WrongKind { .. })));
    }
}
