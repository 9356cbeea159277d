use super::distance::signed_distance_2d;
use super::require_binary;
use crate::error::{Error, Result};
use crate::volgrid::{extract_slice, insert_slice, Axis, LabelVolume, Slice};

/// Fills the slices between consecutive segmented slices by shape-based
/// interpolation.
///
/// For a gap between segmented slices `i < j`, slice `k` is the
/// non-negative region of `(1 - w) * sd_i + w * sd_j` with
/// `w = (k - i) / (j - i)`, where `sd` is the signed distance of a slice.
/// Segmented slices are copied through; slices outside `[first, last]`
/// stay empty.
pub fn interpolate_slices(mask: &LabelVolume, axis: Axis, segmented: &[usize]) -> Result<LabelVolume> {
    require_binary(mask)?;
    if segmented.len() < 2 {
        return Err(Error::Precondition(format!(
            "interpolation needs at least two segmented slices, got {}",
            segmented.len()
        )));
    }
    if segmented.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Precondition("segmented slice indices must be strictly increasing".into()));
    }
    let extent = axis.extent(mask.dims());
    if let Some(&last) = segmented.last().filter(|&&l| l >= extent) {
        return Err(Error::Precondition(format!("segmented slice {last} is outside the {axis} extent {extent}")));
    }
    for k in (0..extent).filter(|k| segmented.binary_search(k).is_err()) {
        if extract_slice(mask, axis, k)?.data.iter().any(|&v| v != 0) {
            return Err(Error::Precondition(format!(
                "{axis} slice {k} is not listed as segmented but contains foreground"
            )));
        }
    }

    let mut out = mask.clone();
    let mut lower = extract_slice(mask, axis, segmented[0])?;
    let mut lower_sd = signed_distance_2d(&lower.data, lower.rows, lower.cols);
    for pair in segmented.windows(2) {
        let (i, j) = (pair[0], pair[1]);
        let upper = extract_slice(mask, axis, j)?;
        let upper_sd = signed_distance_2d(&upper.data, upper.rows, upper.cols);
        for k in i + 1..j {
            let w = (k - i) as f64 / (j - i) as f64;
            let data = lower_sd.iter().zip(&upper_sd).map(|(a, b)| u8::from((1.0 - w) * a + w * b >= 0.0)).collect();
            let slice = Slice { data, ..lower.clone() };
            insert_slice(&mut out, axis, k, &slice)?;
        }
        lower = upper;
        lower_sd = upper_sd;
    }
    Ok(out)
}
