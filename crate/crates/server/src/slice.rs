//! Slice payloads: a JSON header part followed by the raw pixels as
//! `multipart/mixed`, or a grayscale PNG.

use growcut3d_core::{Axis, ScalarVolume, Slice};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layer {
    Image,
    Labels,
    Segmentation,
}

/// Metadata sent ahead of the pixels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceHeader {
    pub axis: Axis,
    pub index: usize,
    pub layer: Layer,
    pub rows: usize,
    pub cols: usize,
    /// In-plane spacing `[row, col]` in mm.
    pub spacing: [f64; 2],
    /// Always `uint8`: gray levels for the image layer, label ids otherwise.
    pub dtype: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub window: Option<f32>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub level: Option<f32>,
}

/// Display window over the full intensity range.
pub fn default_window(vol: &ScalarVolume) -> (f32, f32) {
    let (lo, hi) = vol.intensity_range();
    (hi - lo, lo + (hi - lo) / 2.0)
}

/// Linear ramp from `level - window/2` (0) to `level + window/2` (255).
/// A zero window maps everything to 0.
pub fn to_gray(slice: &Slice<f32>, window: f32, level: f32) -> Vec<u8> {
    let lo = level - window / 2.0;
    slice
        .data
        .iter()
        .map(|&v| if window > 0.0 { (((v - lo) / window).clamp(0.0, 1.0) * 255.0).round() as u8 } else { 0 })
        .collect()
}

pub fn encode_png(pixels: &[u8], rows: usize, cols: usize) -> Vec<u8> {
    let mut buf = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut buf, cols as u32, rows as u32);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Eight);
        let mut w = enc.write_header().expect("in-memory png");
        w.write_image_data(pixels).expect("in-memory png");
    }
    buf
}

const BOUNDARY_BASE: &str = "growcut3d-slice";

/// Returns the content type and body of a two-part `multipart/mixed` message.
pub fn encode_multipart(header: &SliceHeader, pixels: &[u8]) -> (String, Vec<u8>) {
    let json = serde_json::to_vec(header).expect("header serializes");
    let mut boundary = BOUNDARY_BASE.to_string();
    let mut n = 0;
    while contains(pixels, boundary.as_bytes()) {
        n += 1;
        boundary = format!("{BOUNDARY_BASE}-{n}");
    }
    let mut body = Vec::with_capacity(json.len() + pixels.len() + 256);
    body.extend_from_slice(format!("--{boundary}\r\nContent-Type: application/json\r\n\r\n").as_bytes());
    body.extend_from_slice(&json);
    body.extend_from_slice(
        format!(
            "\r\n--{boundary}\r\nContent-Type: application/octet-stream\r\nContent-Length: {}\r\n\r\n",
            pixels.len()
        )
        .as_bytes(),
    );
    body.extend_from_slice(pixels);
    body.extend_from_slice(format!("\r\n--{boundary}--\r\n").as_bytes());
    (format!("multipart/mixed; boundary={boundary}"), body)
}

fn contains(haystack: &[u8], needle: &[u8]) -> bool {
    haystack.windows(needle.len()).any(|w| w == needle)
}

/// Inverse of [`encode_multipart`]; returns `None` on a malformed message.
pub fn decode_multipart(content_type: &str, body: &[u8]) -> Option<(SliceHeader, Vec<u8>)> {
    let boundary = content_type.split("boundary=").nth(1)?.trim();
    let delim = format!("--{boundary}");
    let mut parts = Vec::new();
    let mut rest = body.strip_prefix(delim.as_bytes())?;
    loop {
        if rest.starts_with(b"--") {
            break;
        }
        rest = rest.strip_prefix(b"\r\n")?;
        let end = find(rest, format!("\r\n{delim}").as_bytes())?;
        parts.push(&rest[..end]);
        rest = &rest[end + 2 + delim.len()..];
    }
    let [head, pixels] = parts.as_slice() else { return None };
    let body_of = |part: &[u8]| find(part, b"\r\n\r\n").map(|i| part[i + 4..].to_vec());
    let header = serde_json::from_slice(&body_of(head)?).ok()?;
    Some((header, body_of(pixels)?))
}

fn find(haystack: &[u8], needle: &[u8]) -> Option<usize> {
    haystack.windows(needle.len()).position(|w| w == needle)
}
