//! Volume estimation: exact voxel counting, per-slice area summation and the
//! closed-form geometric models used in tumor follow-up.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::volgrid::{extract_slice, Axis, LabelVolume};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VoxelVolume {
    pub voxel_count: usize,
    pub volume_mm3: f64,
}

impl VoxelVolume {
    pub fn volume_cm3(&self) -> f64 {
        self.volume_mm3 / 1000.0
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive, got {v}")))
    }
}

fn binary(mask: &LabelVolume) -> Result<()> {
    if mask.is_binary() {
        Ok(())
    } else {
        Err(Error::Domain("mask must be binary".into()))
    }
}

/// Foreground voxel count times the voxel volume `sx * sy * sz`.
pub fn voxel_volume(mask: &LabelVolume, spacing: [f64; 3]) -> Result<VoxelVolume> {
    binary(mask)?;
    for (name, s) in ["sx", "sy", "sz"].iter().zip(spacing) {
        positive(name, s)?;
    }
    let voxel_count = mask.count_label(1);
    Ok(VoxelVolume { voxel_count, volume_mm3: voxel_count as f64 * spacing[0] * spacing[1] * spacing[2] })
}

/// Sum over slices of `pixels * area_per_pixel * thickness`.
pub fn slice_sum_volume(mask: &LabelVolume, axis: Axis, slice_thickness: f64, area_per_pixel: f64) -> Result<f64> {
    binary(mask)?;
    positive("slice thickness", slice_thickness)?;
    positive("pixel area", area_per_pixel)?;
    let mut total = 0.0;
    for k in 0..axis.extent(mask.dims()) {
        let pixels = extract_slice(mask, axis, k)?.data.iter().filter(|&&v| v == 1).count();
        total += pixels as f64 * area_per_pixel * slice_thickness;
    }
    Ok(total)
}

/// Spherical model from the diameter of the largest cross-section: `π d³ / 6`.
pub fn sphere_model(d: f64) -> Result<f64> {
    positive("d", d)?;
    Ok(PI * d * d * d / 6.0)
}

/// How ellipsoid extents are given.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum AxisMode {
    /// Semi-axes (radii).
    #[default]
    SemiAxes,
    /// Full diameters; halved before use.
    Diameters,
}

/// Ellipsoid model `4/3 π a b c` with `a, b, c` the semi-axes.
pub fn ellipsoid_model(a: f64, b: f64, c: f64, mode: AxisMode) -> Result<f64> {
    positive("a", a)?;
    positive("b", b)?;
    positive("c", c)?;
    let k = match mode {
        AxisMode::SemiAxes => 1.0,
        AxisMode::Diameters => 0.5,
    };
    Ok(4.0 / 3.0 * PI * (k * a) * (k * b) * (k * c))
}

/// Sphere whose radius is the mean of three orthogonal radii: `4/3 π r̄³`.
pub fn mean_radius_sphere(r_x: f64, r_y: f64, r_z: f64) -> Result<f64> {
    positive("r_x", r_x)?;
    positive("r_y", r_y)?;
    positive("r_z", r_z)?;
    let r = (r_x + r_y + r_z) / 3.0;
    Ok(4.0 / 3.0 * PI * r * r * r)
}

/// Caliper formula `π a b² / 6` with `a` the largest diameter and `b` the
/// diameter perpendicular to it.
pub fn caliper_model(a: f64, b: f64) -> Result<f64> {
    positive("a", a)?;
    positive("b", b)?;
    if b > a {
        return Err(Error::ArgumentOrder(format!(
            "largest diameter a={a} must not be smaller than perpendicular diameter b={b}"
        )));
    }
    Ok(PI * a * b * b / 6.0)
}

/// Bidimensional tumor size: largest diameter times the largest diameter perpendicular to it.
pub fn macdonald_area(d1: f64, d2: f64) -> Result<f64> {
    positive("d1", d1)?;
    positive("d2", d2)?;
    if d2 > d1 {
        return Err(Error::ArgumentOrder(format!(
            "largest diameter d1={d1} must not be smaller than perpendicular diameter d2={d2}"
        )));
    }
    Ok(d1 * d2)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Response {
    Response,
    NoResponse,
}

/// A reduction of the bidimensional size to half or less counts as response.
pub fn macdonald_response(area_before: f64, area_after: f64) -> Result<Response> {
    positive("area before", area_before)?;
    positive("area after", area_after)?;
    Ok(if area_after <= 0.5 * area_before { Response::Response } else { Response::NoResponse })
}

/// Diameters and radii read off a mask, in mm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GeometricMeasurements {
    /// Diameter of the largest axial cross-section: the longer side of its bounding box.
    pub d: f64,
    /// Bounding-box extents along x, y and z (diameters).
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Half of `a`, `b` and `c`.
    pub r_x: f64,
    pub r_y: f64,
    pub r_z: f64,
    /// Longer side of the largest axial slice's bounding box.
    pub d_largest: f64,
    /// Shorter side of the same box.
    pub d_perp: f64,
}

/// Approximate caliper-style measurements from a binary mask.
///
/// Extents come from axis-aligned bounding boxes and only approximate
/// Feret diameters. Returns `None` for an empty mask.
pub fn measure(mask: &LabelVolume) -> Result<Option<GeometricMeasurements>> {
    binary(mask)?;
    let dims = mask.dims();
    let sp = mask.spacing();
    let mut lo = [usize::MAX; 3];
    let mut hi = [0usize; 3];
    let mut any = false;
    for (i, _) in mask.data().iter().enumerate().filter(|(_, &v)| v == 1) {
        let v = dims.coords(i);
        any = true;
        for k in 0..3 {
            lo[k] = lo[k].min(v[k]);
            hi[k] = hi[k].max(v[k]);
        }
    }
    if !any {
        return Ok(None);
    }
    let extent = |k: usize| (hi[k] - lo[k] + 1) as f64 * sp[k];

    let mut best: Option<(usize, [f64; 2])> = None;
    for z in lo[2]..=hi[2] {
        let s = extract_slice(mask, Axis::Axial, z)?;
        let (mut rlo, mut rhi, mut clo, mut chi, mut n) = (usize::MAX, 0, usize::MAX, 0, 0);
        for r in 0..s.rows {
            for c in 0..s.cols {
                if s.at(r, c) == 1 {
                    n += 1;
                    rlo = rlo.min(r);
                    rhi = rhi.max(r);
                    clo = clo.min(c);
                    chi = chi.max(c);
                }
            }
        }
        if n > best.map_or(0, |b| b.0) {
            best = Some((n, [(rhi - rlo + 1) as f64 * sp[1], (chi - clo + 1) as f64 * sp[0]]));
        }
    }
    let [h, w] = best.map(|b| b.1).unwrap_or([0.0, 0.0]);
    let (a, b, c) = (extent(0), extent(1), extent(2));
    Ok(Some(GeometricMeasurements {
        d: h.max(w),
        a,
        b,
        c,
        r_x: a / 2.0,
        r_y: b / 2.0,
        r_z: c / 2.0,
        d_largest: h.max(w),
        d_perp: h.min(w),
    }))
}
