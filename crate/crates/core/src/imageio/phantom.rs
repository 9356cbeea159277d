//! Synthetic test volumes with exactly known ground truth.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::strokes::StrokeSet;
use crate::error::{Error, Result};
use crate::volgrid::{Dims, Index3, LabelVolume, ScalarVolume, SeedStroke};

/// Rasterized shape, in voxel index space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum PhantomShape {
    /// Box of `size` voxels starting at `min`.
    Cube { min: Index3, size: Index3 },
    /// Voxels whose index lies within `radius` of `center`.
    Ball { center: [f64; 3], radius: f64 },
}

impl PhantomShape {
    /// A cube of side `side` centered in `dims` (rounded toward the origin).
    pub fn centered_cube(dims: Dims, side: usize) -> Self {
        let start = |n: usize| n.saturating_sub(side) / 2;
        PhantomShape::Cube { min: [start(dims.nx), start(dims.ny), start(dims.nz)], size: [side; 3] }
    }

    /// A ball centered on the middle voxel of `dims`.
    pub fn centered_ball(dims: Dims, radius: f64) -> Self {
        let c = |n: usize| ((n - 1) / 2) as f64;
        PhantomShape::Ball { center: [c(dims.nx), c(dims.ny), c(dims.nz)], radius }
    }

    fn check(&self, dims: Dims) -> Result<()> {
        let n = dims.as_array();
        match *self {
            PhantomShape::Cube { min, size } => {
                if size.contains(&0) {
                    return Err(Error::Precondition(format!("cube size {size:?} must be positive")));
                }
                if (0..3).any(|i| min[i] + size[i] > n[i]) {
                    return Err(Error::Precondition(format!("cube at {min:?} of size {size:?} exceeds dims {dims}")));
                }
            }
            PhantomShape::Ball { center, radius } => {
                if !(radius.is_finite() && radius >= 0.0) || center.iter().any(|c| !c.is_finite()) {
                    return Err(Error::Precondition(format!("ball center {center:?} radius {radius} is invalid")));
                }
                if (0..3).any(|i| center[i] - radius < 0.0 || center[i] + radius > (n[i] - 1) as f64) {
                    return Err(Error::Precondition(format!(
                        "ball at {center:?} of radius {radius} exceeds dims {dims}"
                    )));
                }
            }
        }
        Ok(())
    }

    fn contains(&self, [x, y, z]: Index3) -> bool {
        match *self {
            PhantomShape::Cube { min, size } => {
                (0..3).all(|i| [x, y, z][i] >= min[i] && [x, y, z][i] < min[i] + size[i])
            }
            PhantomShape::Ball { center, radius } => {
                let d2: f64 = [x, y, z].iter().zip(center).map(|(&p, c)| (p as f64 - c).powi(2)).sum();
                d2 <= radius * radius
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub dims: Dims,
    pub shape: PhantomShape,
    pub fg_intensity: f32,
    pub bg_intensity: f32,
    pub noise_sigma: f64,
    pub rng_seed: u64,
    #[serde(default = "unit_spacing")]
    pub spacing: [f64; 3],
}

fn unit_spacing() -> [f64; 3] {
    [1.0; 3]
}

impl PhantomSpec {
    /// Foreground 100, background 0, unit spacing.
    pub fn new(dims: Dims, shape: PhantomShape, noise_sigma: f64, rng_seed: u64) -> Self {
        PhantomSpec {
            dims,
            shape,
            fg_intensity: 100.0,
            bg_intensity: 0.0,
            noise_sigma,
            rng_seed,
            spacing: unit_spacing(),
        }
    }
}

/// Returns the noisy intensity volume and its ground-truth mask (labels 0/1).
///
/// Noise is drawn from a ChaCha8 stream seeded by `rng_seed`, one sample per
/// voxel in memory order; `noise_sigma == 0` draws nothing.
pub fn generate_phantom(spec: &PhantomSpec) -> Result<(ScalarVolume, LabelVolume)> {
    let dims = spec.dims;
    if dims.is_empty() {
        return Err(Error::Precondition(format!("phantom dims {dims} are empty")));
    }
    if spec.fg_intensity == spec.bg_intensity {
        return Err(Error::Precondition("foreground and background intensities must differ".into()));
    }
    if !(spec.noise_sigma.is_finite() && spec.noise_sigma >= 0.0) {
        return Err(Error::Precondition(format!("noise sigma {} is invalid", spec.noise_sigma)));
    }
    spec.shape.check(dims)?;

    let truth: Vec<u8> = (0..dims.len()).map(|i| u8::from(spec.shape.contains(dims.coords(i)))).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let noise = Normal::new(0.0, spec.noise_sigma).expect("sigma checked");
    let values: Vec<f32> = truth
        .iter()
        .map(|&t| {
            let base = if t == 1 { spec.fg_intensity } else { spec.bg_intensity };
            if spec.noise_sigma > 0.0 {
                (base as f64 + noise.sample(&mut rng)) as f32
            } else {
                base
            }
        })
        .collect();
    let vol = ScalarVolume::new(dims, spec.spacing, [0.0; 3], values)?;
    let truth = vol.with_data(truth)?;
    Ok((vol, truth))
}

/// Typical initialization for a ground-truth mask: label 1 on a block at
/// the center of the foreground, label 2 along the twelve edges of the
/// volume, keeping clear of the foreground and its neighbors.
pub fn phantom_strokes(truth: &LabelVolume) -> Result<StrokeSet> {
    let dims = truth.dims();
    let fg: Vec<Index3> = (0..dims.len()).filter(|&i| truth.data()[i] != 0).map(|i| dims.coords(i)).collect();
    if fg.is_empty() {
        return Err(Error::Precondition("ground truth has no foreground".into()));
    }
    let (mut lo, mut hi) = ([usize::MAX; 3], [0; 3]);
    for v in &fg {
        for i in 0..3 {
            lo[i] = lo[i].min(v[i]);
            hi[i] = hi[i].max(v[i]);
        }
    }
    let center: Index3 = std::array::from_fn(|i| (lo[i] + hi[i]) / 2);
    let reach = (0..3).map(|i| (hi[i] - lo[i]) / 6).min().unwrap_or(0);
    let mut core: Vec<Index3> =
        fg.iter().copied().filter(|v| (0..3).all(|i| v[i].abs_diff(center[i]) <= reach)).collect();
    if core.is_empty() {
        core.push(fg[0]);
    }

    let near_fg = |v: Index3| {
        (-1i64..=1).any(|dz| {
            (-1i64..=1).any(|dy| {
                (-1i64..=1).any(|dx| {
                    let p = [v[0] as i64 + dx, v[1] as i64 + dy, v[2] as i64 + dz];
                    dims.contains(p) && truth.at(p[0] as usize, p[1] as usize, p[2] as usize) != 0
                })
            })
        })
    };
    let n = dims.as_array();
    let mut edge = Vec::new();
    for i in 0..dims.len() {
        let v = dims.coords(i);
        let on_face = (0..3).filter(|&a| v[a] == 0 || v[a] == n[a] - 1).count();
        if on_face >= 2 && !near_fg(v) {
            edge.push(v);
        }
    }
    if edge.is_empty() {
        return Err(Error::Precondition("no background voxels along the volume edges".into()));
    }
    StrokeSet::new(dims, vec![SeedStroke::new(1, core)?, SeedStroke::new(2, edge)?])
}
