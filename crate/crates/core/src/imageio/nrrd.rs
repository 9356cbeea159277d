//! A strict NRRD subset: three dimensions, little-endian `uchar`, `short`,
//! `ushort`, `int` or `float` samples, raw or gzip encoding, axis-aligned
//! geometry given by `spacings` or a diagonal `space directions`.
//!
//! Anything that would change how the payload is interpreted and is not in
//! the subset (detached data files, skips, big-endian data, oblique
//! directions) is rejected with [`Error::Unsupported`] naming the field.
//! Purely descriptive fields (`kinds`, `content`, `space`, comments, key/value
//! pairs) are ignored.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use flate2::read::MultiGzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;

use crate::error::{Error, Result};
use crate::volgrid::{Dims, LabelVolume, ScalarVolume};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NrrdType {
    UChar,
    Short,
    UShort,
    Int,
    Float,
}

impl NrrdType {
    pub const ALL: [NrrdType; 5] = [NrrdType::UChar, NrrdType::Short, NrrdType::UShort, NrrdType::Int, NrrdType::Float];

    pub fn size(self) -> usize {
        match self {
            NrrdType::UChar => 1,
            NrrdType::Short | NrrdType::UShort => 2,
            NrrdType::Int | NrrdType::Float => 4,
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "uchar" | "unsigned char" | "uint8" | "uint8_t" => NrrdType::UChar,
            "short" | "short int" | "signed short" | "signed short int" | "int16" | "int16_t" => NrrdType::Short,
            "ushort" | "unsigned short" | "unsigned short int" | "uint16" | "uint16_t" => NrrdType::UShort,
            "int" | "signed int" | "int32" | "int32_t" => NrrdType::Int,
            "float" => NrrdType::Float,
            _ => return None,
        })
    }

    /// Numeric range a value must fall in to be stored losslessly.
    fn range(self) -> (f64, f64) {
        match self {
            NrrdType::UChar => (0.0, u8::MAX as f64),
            NrrdType::Short => (i16::MIN as f64, i16::MAX as f64),
            NrrdType::UShort => (0.0, u16::MAX as f64),
            NrrdType::Int => (i32::MIN as f64, i32::MAX as f64),
            NrrdType::Float => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }
}

impl fmt::Display for NrrdType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NrrdType::UChar => "uchar",
            NrrdType::Short => "short",
            NrrdType::UShort => "ushort",
            NrrdType::Int => "int",
            NrrdType::Float => "float",
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Encoding {
    Raw,
    #[default]
    Gzip,
}

impl std::str::FromStr for Encoding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(Encoding::Raw),
            "gzip" | "gz" => Ok(Encoding::Gzip),
            other => Err(Error::Unsupported {
                field: "encoding".into(),
                detail: format!("`{other}` (supported: raw, gzip)"),
            }),
        }
    }
}

impl fmt::Display for Encoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Encoding::Raw => "raw",
            Encoding::Gzip => "gzip",
        })
    }
}

/// A decoded NRRD file.
#[derive(Clone, Debug, PartialEq)]
pub struct Nrrd {
    pub volume: ScalarVolume,
    pub data_type: NrrdType,
    pub encoding: Encoding,
}

impl Nrrd {
    /// Reinterprets the samples as label ids; every sample must be an integer in `0..=255`.
    pub fn into_labels(self) -> Result<LabelVolume> {
        let vol = self.volume;
        let mut labels = Vec::with_capacity(vol.data().len());
        for (i, &v) in vol.data().iter().enumerate() {
            if v.fract() != 0.0 || !(0.0..=255.0).contains(&v) {
                return Err(Error::Domain(format!(
                    "sample {v} at voxel {:?} is not a label id in 0..=255",
                    vol.dims().coords(i)
                )));
            }
            labels.push(v as u8);
        }
        vol.with_data(labels)
    }
}

fn unsupported(field: &str, detail: impl Into<String>) -> Error {
    Error::Unsupported { field: field.into(), detail: detail.into() }
}

fn parse_vector(field: &str, s: &str) -> Result<[f64; 3]> {
    let inner = s
        .trim()
        .strip_prefix('(')
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| unsupported(field, format!("expected a (x,y,z) vector, got `{s}`")))?;
    let vals: Vec<f64> = inner
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| unsupported(field, format!("non-numeric component in `{s}`")))?;
    match vals[..] {
        [x, y, z] if vals.iter().all(|v| v.is_finite()) => Ok([x, y, z]),
        _ => Err(unsupported(field, format!("expected 3 finite components, got `{s}`"))),
    }
}

/// Splits `(a,b,c) (d,e,f) ...` into vector tokens.
fn vector_tokens(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => start = Some(i),
            ')' => {
                if let Some(st) = start.take() {
                    out.push(&s[st..=i]);
                }
            }
            _ => {}
        }
    }
    if out.is_empty() {
        out.extend(s.split_whitespace());
    }
    out
}

#[derive(Default)]
struct Header {
    data_type: Option<NrrdType>,
    dimension: Option<usize>,
    sizes: Option<[usize; 3]>,
    encoding: Option<Encoding>,
    little_endian: Option<bool>,
    spacings: Option<[f64; 3]>,
    directions: Option<[f64; 3]>,
    origin: Option<[f64; 3]>,
}

fn parse_header(text: &str) -> Result<Header> {
    let mut lines = text.lines();
    let magic = lines.next().unwrap_or_default().trim_end();
    match magic.strip_prefix("NRRD000") {
        Some("1" | "2" | "3" | "4" | "5") => {}
        _ => return Err(Error::Corrupt(format!("not a NRRD file (magic `{magic}`)"))),
    }

    let mut h = Header::default();
    for line in lines {
        let line = line.trim_end_matches('\r');
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let field_at = line.find(": ");
        let kv_at = line.find(":=");
        if let Some(k) = kv_at {
            if !field_at.is_some_and(|f| f < k) {
                continue;
            }
        }
        let Some(at) = field_at else {
            return Err(Error::Corrupt(format!("malformed header line `{line}`")));
        };
        let key = line[..at].trim().to_ascii_lowercase();
        let value = line[at + 2..].trim();
        match key.as_str() {
            "type" => {
                let t = value.to_ascii_lowercase();
                h.data_type = Some(NrrdType::parse(&t).ok_or_else(|| {
                    unsupported("type", format!("`{value}` (supported: uchar, short, ushort, int, float)"))
                })?);
            }
            "dimension" => {
                let d: usize =
                    value.parse().map_err(|_| unsupported("dimension", format!("`{value}` is not an integer")))?;
                if d != 3 {
                    return Err(unsupported("dimension", format!("{d} (only 3 is supported)")));
                }
                h.dimension = Some(d);
            }
            "sizes" => {
                let v: Vec<usize> = value
                    .split_whitespace()
                    .map(str::parse)
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| unsupported("sizes", format!("`{value}`")))?;
                match v[..] {
                    [x, y, z] if x > 0 && y > 0 && z > 0 => h.sizes = Some([x, y, z]),
                    _ => return Err(unsupported("sizes", format!("`{value}` (need 3 positive sizes)"))),
                }
            }
            "encoding" => h.encoding = Some(value.to_ascii_lowercase().parse()?),
            "endian" => match value.to_ascii_lowercase().as_str() {
                "little" => h.little_endian = Some(true),
                "big" => h.little_endian = Some(false),
                other => return Err(unsupported("endian", format!("`{other}`"))),
            },
            "spacings" => {
                let v: Vec<f64> = value
                    .split_whitespace()
                    .map(str::parse)
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| unsupported("spacings", format!("`{value}`")))?;
                match v[..] {
                    [x, y, z] if v.iter().all(|s| s.is_finite() && *s > 0.0) => h.spacings = Some([x, y, z]),
                    _ => return Err(unsupported("spacings", format!("`{value}` (need 3 positive spacings)"))),
                }
            }
            "space directions" => {
                let toks = vector_tokens(value);
                if toks.len() != 3 {
                    return Err(unsupported("space directions", format!("`{value}` (need 3 vectors)")));
                }
                let mut diag = [0.0; 3];
                for (i, tok) in toks.iter().enumerate() {
                    let v = parse_vector("space directions", tok)?;
                    for (j, c) in v.iter().enumerate() {
                        if i != j && *c != 0.0 {
                            return Err(unsupported("space directions", format!("`{value}` is not diagonal")));
                        }
                    }
                    if v[i] <= 0.0 {
                        return Err(unsupported("space directions", format!("`{value}` has a non-positive axis")));
                    }
                    diag[i] = v[i];
                }
                h.directions = Some(diag);
            }
            "space origin" => h.origin = Some(parse_vector("space origin", value)?),
            "space dimension" => {
                if value != "3" {
                    return Err(unsupported("space dimension", format!("{value} (only 3 is supported)")));
                }
            }
            "data file" | "datafile" => return Err(unsupported("data file", "detached payloads are not supported")),
            "line skip" | "lineskip" | "byte skip" | "byteskip" if value != "0" => {
                return Err(unsupported(&key, format!("{value} (only 0 is supported)")));
            }
            _ => {}
        }
    }
    Ok(h)
}

fn split_header(bytes: &[u8]) -> Result<(&str, &[u8])> {
    let end = bytes
        .windows(2)
        .position(|w| w == b"\n\n")
        .map(|p| (p + 1, p + 2))
        .or_else(|| bytes.windows(4).position(|w| w == b"\r\n\r\n").map(|p| (p + 2, p + 4)));
    let (head_end, data_start) =
        end.ok_or_else(|| Error::Corrupt("header is not terminated by a blank line".into()))?;
    let text =
        std::str::from_utf8(&bytes[..head_end]).map_err(|_| Error::Corrupt("header is not valid text".into()))?;
    Ok((text, &bytes[data_start..]))
}

/// Decodes an in-memory NRRD file.
pub fn parse_nrrd(bytes: &[u8]) -> Result<Nrrd> {
    if bytes.is_empty() {
        return Err(Error::Corrupt("empty input".into()));
    }
    let (text, payload) = split_header(bytes)?;
    let h = parse_header(text)?;
    let missing = |f: &str| Error::Corrupt(format!("missing required field `{f}`"));
    let data_type = h.data_type.ok_or_else(|| missing("type"))?;
    h.dimension.ok_or_else(|| missing("dimension"))?;
    let sizes = h.sizes.ok_or_else(|| missing("sizes"))?;
    let encoding = h.encoding.ok_or_else(|| missing("encoding"))?;
    if data_type.size() > 1 {
        match h.little_endian {
            Some(true) => {}
            Some(false) => return Err(unsupported("endian", "big-endian data is not supported")),
            None => return Err(unsupported("endian", "missing for a multi-byte type")),
        }
    }

    let need = sizes
        .iter()
        .try_fold(data_type.size(), |acc, &n| acc.checked_mul(n))
        .ok_or_else(|| Error::Corrupt(format!("sizes {sizes:?} overflow")))?;
    let dims = Dims::from(sizes);
    let decoded;
    let raw: &[u8] = match encoding {
        Encoding::Raw => payload,
        Encoding::Gzip => {
            let mut buf = Vec::new();
            MultiGzDecoder::new(payload)
                .read_to_end(&mut buf)
                .map_err(|e| Error::Corrupt(format!("gzip payload: {e}")))?;
            decoded = buf;
            &decoded
        }
    };
    if raw.len() < need {
        return Err(Error::Corrupt(format!("truncated payload: expected {need} bytes, found {}", raw.len())));
    }
    let raw = &raw[..need];

    let values: Vec<f32> = match data_type {
        NrrdType::UChar => raw.iter().map(|&b| b as f32).collect(),
        NrrdType::Short => raw.chunks_exact(2).map(|c| i16::from_le_bytes([c[0], c[1]]) as f32).collect(),
        NrrdType::UShort => raw.chunks_exact(2).map(|c| u16::from_le_bytes([c[0], c[1]]) as f32).collect(),
        NrrdType::Int => raw.chunks_exact(4).map(|c| i32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f32).collect(),
        NrrdType::Float => raw.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect(),
    };
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Corrupt(format!("non-finite sample at voxel {:?}", dims.coords(i))));
    }
    let spacing = h.directions.or(h.spacings).unwrap_or([1.0; 3]);
    let origin = h.origin.unwrap_or([0.0; 3]);
    let volume = ScalarVolume::new(dims, spacing, origin, values)?;
    Ok(Nrrd { volume, data_type, encoding })
}

pub fn read_nrrd(path: &Path) -> Result<Nrrd> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_nrrd(&bytes)
}

pub fn read_scalar_volume(path: &Path) -> Result<ScalarVolume> {
    Ok(read_nrrd(path)?.volume)
}

pub fn read_label_volume(path: &Path) -> Result<LabelVolume> {
    read_nrrd(path)?.into_labels()
}

/// Encodes samples as a NRRD file of the given type.
///
/// Integer types require integral samples inside the type's range.
pub fn encode_nrrd(
    dims: Dims,
    spacing: [f64; 3],
    origin: [f64; 3],
    values: &[f32],
    data_type: NrrdType,
    encoding: Encoding,
) -> Result<Vec<u8>> {
    if dims.is_empty() {
        return Err(Error::Precondition(format!("cannot write a volume with dims {dims}")));
    }
    if values.len() != dims.len() {
        return Err(Error::Precondition(format!("{} samples do not fill dims {dims}", values.len())));
    }
    let (lo, hi) = data_type.range();
    let mut payload = Vec::with_capacity(values.len() * data_type.size());
    for (i, &v) in values.iter().enumerate() {
        let wide = v as f64;
        if data_type != NrrdType::Float && (v.fract() != 0.0 || wide < lo || wide > hi) {
            return Err(Error::Domain(format!(
                "sample {v} at voxel {:?} does not fit NRRD type {data_type}",
                dims.coords(i)
            )));
        }
        match data_type {
            NrrdType::UChar => payload.push(v as u8),
            NrrdType::Short => payload.extend_from_slice(&(v as i16).to_le_bytes()),
            NrrdType::UShort => payload.extend_from_slice(&(v as u16).to_le_bytes()),
            NrrdType::Int => payload.extend_from_slice(&(v as i32).to_le_bytes()),
            NrrdType::Float => payload.extend_from_slice(&v.to_le_bytes()),
        }
    }

    let [sx, sy, sz] = spacing;
    let [ox, oy, oz] = origin;
    let mut out = format!(
        "NRRD0004\n\
         # Complete NRRD file format specification at:\n\
         # http://teem.sourceforge.net/nrrd/format.html\n\
         type: {data_type}\n\
         dimension: 3\n\
         space: left-posterior-superior\n\
         sizes: {} {} {}\n\
         space directions: ({sx},0,0) (0,{sy},0) (0,0,{sz})\n\
         kinds: domain domain domain\n\
         endian: little\n\
         encoding: {encoding}\n\
         space origin: ({ox},{oy},{oz})\n\n",
        dims.nx, dims.ny, dims.nz
    )
    .into_bytes();
    match encoding {
        Encoding::Raw => out.extend_from_slice(&payload),
        Encoding::Gzip => {
            let mut enc = GzEncoder::new(out, Compression::default());
            enc.write_all(&payload).expect("in-memory write");
            out = enc.finish().expect("in-memory write");
        }
    }
    Ok(out)
}

/// Volumes that serialize to NRRD: scalars as `float`, labels as `uchar`.
pub trait NrrdVolume {
    fn encode_nrrd(&self, encoding: Encoding) -> Result<Vec<u8>>;
}

impl NrrdVolume for ScalarVolume {
    fn encode_nrrd(&self, encoding: Encoding) -> Result<Vec<u8>> {
        encode_nrrd(self.dims(), self.spacing(), self.origin(), self.data(), NrrdType::Float, encoding)
    }
}

impl NrrdVolume for LabelVolume {
    fn encode_nrrd(&self, encoding: Encoding) -> Result<Vec<u8>> {
        let values: Vec<f32> = self.data().iter().map(|&l| l as f32).collect();
        encode_nrrd(self.dims(), self.spacing(), self.origin(), &values, NrrdType::UChar, encoding)
    }
}

pub fn write_nrrd<V: NrrdVolume>(vol: &V, path: &Path, encoding: Encoding) -> Result<()> {
    let bytes = vol.encode_nrrd(encoding)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
