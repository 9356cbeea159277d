//! Voxel grid data model.
//!
//! Every volume in the crate stores its samples in a flat buffer with
//! x varying fastest: `index = x + nx * (y + ny * z)`. Slices are named
//! after the radiological planes: axial fixes z, sagittal fixes x and
//! coronal fixes y.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A voxel index `(x, y, z)`.
pub type Index3 = [usize; 3];

/// Grid extents in voxels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "[usize; 3]", into = "[usize; 3]")]
pub struct Dims {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

impl Dims {
    pub const fn new(nx: usize, ny: usize, nz: usize) -> Self {
        Dims { nx, ny, nz }
    }

    pub const fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub const fn as_array(&self) -> [usize; 3] {
        [self.nx, self.ny, self.nz]
    }

    #[inline]
    pub const fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.nx * (y + self.ny * z)
    }

    #[inline]
    pub const fn coords(&self, index: usize) -> Index3 {
        let x = index % self.nx;
        let rest = index / self.nx;
        [x, rest % self.ny, rest / self.ny]
    }

    pub fn contains(&self, v: [i64; 3]) -> bool {
        v.iter().zip(self.as_array()).all(|(&c, n)| c >= 0 && (c as u64) < n as u64)
    }

    pub(crate) fn check(&self, v: Index3) -> Result<usize> {
        if v[0] < self.nx && v[1] < self.ny && v[2] < self.nz {
            Ok(self.index(v[0], v[1], v[2]))
        } else {
            Err(Error::OutOfBounds { index: v.map(|c| c as i64), dims: self.as_array() })
        }
    }
}

impl From<[usize; 3]> for Dims {
    fn from(d: [usize; 3]) -> Self {
        Dims::new(d[0], d[1], d[2])
    }
}

impl From<Dims> for [usize; 3] {
    fn from(d: Dims) -> Self {
        d.as_array()
    }
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.nx, self.ny, self.nz)
    }
}

/// A dense 3D grid with physical spacing and origin in millimeters.
#[derive(Clone, Debug, PartialEq)]
pub struct Volume<T> {
    dims: Dims,
    spacing: [f64; 3],
    origin: [f64; 3],
    data: Vec<T>,
}

/// Intensity volume; samples are normalized to `f32` whatever the source encoding.
pub type ScalarVolume = Volume<f32>;

/// Label volume; 0 means unlabeled.
pub type LabelVolume = Volume<u8>;

impl<T> Volume<T> {
    fn build(dims: Dims, spacing: [f64; 3], origin: [f64; 3], data: Vec<T>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::Precondition(format!("volume dims must be positive, got {dims}")));
        }
        if data.len() != dims.len() {
            return Err(Error::Precondition(format!(
                "buffer holds {} samples but dims {dims} need {}",
                data.len(),
                dims.len()
            )));
        }
        if let Some(s) = spacing.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(Error::Precondition(format!("spacing must be finite and positive, got {s}")));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::Precondition("origin must be finite".into()));
        }
        Ok(Volume { dims, spacing, origin, data })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn origin(&self) -> [f64; 3] {
        self.origin
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    /// Volume of a single voxel in mm³.
    pub fn voxel_volume_mm3(&self) -> f64 {
        self.spacing.iter().product()
    }

    /// Physical position of a voxel: `origin + index * spacing`.
    pub fn voxel_to_world(&self, v: Index3) -> Result<[f64; 3]> {
        self.dims.check(v)?;
        Ok([0, 1, 2].map(|i| self.origin[i] + v[i] as f64 * self.spacing[i]))
    }

    /// Same grid geometry, new samples.
    pub fn with_data<U>(&self, data: Vec<U>) -> Result<Volume<U>> {
        Volume::build(self.dims, self.spacing, self.origin, data)
    }

    pub fn same_shape<U>(&self, other: &Volume<U>) -> Result<()> {
        if self.dims == other.dims {
            Ok(())
        } else {
            Err(Error::ShapeMismatch { left: self.dims.as_array(), right: other.dims.as_array() })
        }
    }
}

impl<T: Copy> Volume<T> {
    pub fn get(&self, v: Index3) -> Result<T> {
        Ok(self.data[self.dims.check(v)?])
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize, z: usize) -> T {
        self.data[self.dims.index(x, y, z)]
    }
}

impl ScalarVolume {
    pub fn new(dims: Dims, spacing: [f64; 3], origin: [f64; 3], data: Vec<f32>) -> Result<Self> {
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Precondition(format!("intensity at voxel {:?} is not finite", dims.coords(i))));
        }
        Self::build(dims, spacing, origin, data)
    }

    pub fn filled(dims: Dims, value: f32) -> Result<Self> {
        Self::new(dims, [1.0; 3], [0.0; 3], vec![value; dims.len()])
    }

    /// `(min, max)` over all samples.
    pub fn intensity_range(&self) -> (f32, f32) {
        self.data.iter().fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }
}

impl LabelVolume {
    pub fn new(dims: Dims, spacing: [f64; 3], origin: [f64; 3], data: Vec<u8>) -> Result<Self> {
        Self::build(dims, spacing, origin, data)
    }

    pub fn zeros(dims: Dims) -> Result<Self> {
        Self::new(dims, [1.0; 3], [0.0; 3], vec![0; dims.len()])
    }

    pub fn count_label(&self, label: u8) -> usize {
        count_label(self, label)
    }

    /// `{0, 1}` mask of the voxels carrying `label`.
    pub fn binarize(&self, label: u8) -> LabelVolume {
        Volume {
            dims: self.dims,
            spacing: self.spacing,
            origin: self.origin,
            data: self.data.iter().map(|&l| u8::from(l == label)).collect(),
        }
    }

    pub fn is_binary(&self) -> bool {
        self.data.iter().all(|&l| l <= 1)
    }

    /// Distinct non-zero labels, ascending.
    pub fn labels_present(&self) -> Vec<u8> {
        let mut seen = [false; 256];
        for &l in &self.data {
            seen[l as usize] = true;
        }
        (1..=255u8).filter(|&l| seen[l as usize]).collect()
    }

    #[cfg(test)]
    pub(crate) fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }
}

/// Number of voxels equal to `label`.
pub fn count_label(vol: &LabelVolume, label: u8) -> usize {
    vol.data.iter().filter(|&&l| l == label).count()
}

/// Anatomical slicing plane.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    /// Constant z; rows run along y, columns along x.
    Axial,
    /// Constant x; rows run along z, columns along y.
    Sagittal,
    /// Constant y; rows run along z, columns along x.
    Coronal,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::Axial, Axis::Sagittal, Axis::Coronal];

    /// Grid dimension held constant by this plane.
    pub const fn fixed_dim(self) -> usize {
        match self {
            Axis::Axial => 2,
            Axis::Sagittal => 0,
            Axis::Coronal => 1,
        }
    }

    /// `(row_dim, col_dim)` of slices cut along this plane.
    pub const fn plane_dims(self) -> (usize, usize) {
        match self {
            Axis::Axial => (1, 0),
            Axis::Sagittal => (2, 1),
            Axis::Coronal => (2, 0),
        }
    }

    pub fn extent(self, dims: Dims) -> usize {
        dims.as_array()[self.fixed_dim()]
    }

    /// Grid index of `(row, col)` on slice `index`.
    #[inline]
    pub fn voxel(self, index: usize, row: usize, col: usize) -> Index3 {
        match self {
            Axis::Axial => [col, row, index],
            Axis::Sagittal => [index, col, row],
            Axis::Coronal => [col, index, row],
        }
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "axial" => Ok(Axis::Axial),
            "sagittal" => Ok(Axis::Sagittal),
            "coronal" => Ok(Axis::Coronal),
            other => Err(Error::Domain(format!("unknown axis `{other}`"))),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::Axial => "axial",
            Axis::Sagittal => "sagittal",
            Axis::Coronal => "coronal",
        })
    }
}

/// A 2D plane cut out of a volume, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Slice<T> {
    pub rows: usize,
    pub cols: usize,
    /// `[row_spacing, col_spacing]` in mm.
    pub spacing: [f64; 2],
    pub data: Vec<T>,
}

impl<T: Copy> Slice<T> {
    #[inline]
    pub fn at(&self, row: usize, col: usize) -> T {
        self.data[row * self.cols + col]
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        self.data.chunks(self.cols).map(<[T]>::to_vec).collect()
    }
}

fn slice_range_check(dims: Dims, axis: Axis, index: usize) -> Result<()> {
    if index < axis.extent(dims) {
        Ok(())
    } else {
        let mut v = [0i64; 3];
        v[axis.fixed_dim()] = index as i64;
        Err(Error::OutOfBounds { index: v, dims: dims.as_array() })
    }
}

/// Copies one plane out of `vol`.
pub fn extract_slice<T: Copy>(vol: &Volume<T>, axis: Axis, index: usize) -> Result<Slice<T>> {
    let dims = vol.dims();
    slice_range_check(dims, axis, index)?;
    let (rd, cd) = axis.plane_dims();
    let (rows, cols) = (dims.as_array()[rd], dims.as_array()[cd]);
    let mut data = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let [x, y, z] = axis.voxel(index, r, c);
            data.push(vol.at(x, y, z));
        }
    }
    Ok(Slice { rows, cols, spacing: [vol.spacing[rd], vol.spacing[cd]], data })
}

/// Writes `slice` back into plane `index` of `vol`; inverse of [`extract_slice`].
pub fn insert_slice<T: Copy>(vol: &mut Volume<T>, axis: Axis, index: usize, slice: &Slice<T>) -> Result<()> {
    let dims = vol.dims();
    slice_range_check(dims, axis, index)?;
    let (rd, cd) = axis.plane_dims();
    if slice.rows != dims.as_array()[rd] || slice.cols != dims.as_array()[cd] {
        return Err(Error::Precondition(format!(
            "slice is {}x{} but the {axis} plane of {dims} is {}x{}",
            slice.rows,
            slice.cols,
            dims.as_array()[rd],
            dims.as_array()[cd]
        )));
    }
    for r in 0..slice.rows {
        for c in 0..slice.cols {
            let [x, y, z] = axis.voxel(index, r, c);
            vol.data[dims.index(x, y, z)] = slice.at(r, c);
        }
    }
    Ok(())
}

/// Axis-aligned voxel box with inclusive bounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RegionOfInterest {
    pub min: Index3,
    pub max: Index3,
}

impl RegionOfInterest {
    pub fn new(min: Index3, max: Index3) -> Result<Self> {
        if (0..3).any(|i| min[i] > max[i]) {
            return Err(Error::Precondition(format!("ROI min {min:?} exceeds max {max:?}")));
        }
        Ok(RegionOfInterest { min, max })
    }

    pub fn full(dims: Dims) -> Self {
        RegionOfInterest { min: [0; 3], max: [dims.nx - 1, dims.ny - 1, dims.nz - 1] }
    }

    pub fn dims(&self) -> Dims {
        Dims::new(self.max[0] - self.min[0] + 1, self.max[1] - self.min[1] + 1, self.max[2] - self.min[2] + 1)
    }

    pub fn contains(&self, v: Index3) -> bool {
        (0..3).all(|i| self.min[i] <= v[i] && v[i] <= self.max[i])
    }

    pub fn fits(&self, dims: Dims) -> bool {
        (0..3).all(|i| self.max[i] < dims.as_array()[i])
    }

    pub fn covers(&self, dims: Dims) -> bool {
        *self == Self::full(dims)
    }
}

/// User-painted seed voxels sharing one label.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedStroke {
    pub label: u8,
    pub voxels: Vec<Index3>,
}

impl SeedStroke {
    pub fn new(label: u8, voxels: Vec<Index3>) -> Result<Self> {
        let stroke = SeedStroke { label, voxels };
        stroke.validate(None)?;
        Ok(stroke)
    }

    /// Checks the stroke invariants, plus bounds when `dims` is given.
    pub fn validate(&self, dims: Option<Dims>) -> Result<()> {
        if self.label == 0 {
            return Err(Error::Precondition("stroke label 0 is reserved for unlabeled voxels".into()));
        }
        if self.voxels.is_empty() {
            return Err(Error::Precondition("stroke has no voxels".into()));
        }
        if let Some(dims) = dims {
            for &v in &self.voxels {
                dims.check(v)?;
            }
        }
        Ok(())
    }
}
