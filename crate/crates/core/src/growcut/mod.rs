//! GrowCut competitive region growing on voxel volumes.
//!
//! Every labeled voxel attacks its neighbors each iteration. An attack from
//! `q` on `p` has strength `g(C_p, C_q) * θ_q`, where `g` is the intensity
//! similarity and `θ` the per-voxel strength; `p` is conquered when the
//! attack strictly exceeds `θ_p`, taking the attacker's label and the attack
//! strength. Iteration stops once no voxel changes.
//!
//! [`run`] restricts the work to a box around the seeds, evaluates only the
//! voxels whose neighborhood changed in the previous iteration, can cache
//! all pairwise similarities up front, and splits each iteration across
//! worker threads. Updates are synchronous: every voxel reads the state of
//! the previous iteration only, which makes the output independent of the
//! number of workers. [`run_naive`] is the dense single-threaded reference.

mod naive;
mod neighborhood;
mod state;

use std::time::Duration;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::volgrid::{Dims, LabelVolume, RegionOfInterest, ScalarVolume, SeedStroke};

pub use naive::run_naive;
pub use neighborhood::Connectivity;
pub use state::{initialize, AutomatonState};

/// Tuning knobs of a segmentation run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrowCutConfig {
    pub connectivity: Connectivity,
    /// Voxels added on every face of the seed bounding box.
    pub roi_margin: usize,
    /// `None` means twice the ROI diagonal in voxels.
    pub max_iterations: Option<usize>,
    pub workers: usize,
    pub precompute_similarity: bool,
}

impl Default for GrowCutConfig {
    fn default() -> Self {
        GrowCutConfig {
            connectivity: Connectivity::TwentySix,
            roi_margin: 5,
            max_iterations: None,
            workers: std::thread::available_parallelism().map_or(1, usize::from),
            precompute_similarity: true,
        }
    }
}

impl GrowCutConfig {
    pub fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(Error::Precondition("workers must be at least 1".into()));
        }
        if self.max_iterations == Some(0) {
            return Err(Error::Precondition("max_iterations must be at least 1".into()));
        }
        Ok(())
    }

    pub fn iteration_cap(&self, roi: &RegionOfInterest) -> usize {
        self.max_iterations.unwrap_or_else(|| default_max_iterations(roi))
    }
}

/// Twice the ROI diagonal, rounded up.
pub fn default_max_iterations(roi: &RegionOfInterest) -> usize {
    let d = roi.dims();
    let diag = ((d.nx * d.nx + d.ny * d.ny + d.nz * d.nz) as f64).sqrt().ceil() as usize;
    (2 * diag).max(1)
}

/// Bookkeeping of a finished run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunStats {
    /// Iterations executed, including the final one that changed nothing.
    pub iterations: usize,
    pub changed_per_iteration: Vec<usize>,
    #[serde(rename = "wall_time_s", serialize_with = "as_secs")]
    pub wall_time: Duration,
    pub converged: bool,
    pub roi: RegionOfInterest,
}

fn as_secs<S: Serializer>(d: &Duration, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

/// Intensity similarity in `[0, 1]`: `1 - |cp - cq| / max_delta`, or 1 on a constant image.
#[inline]
pub fn similarity(cp: f32, cq: f32, max_delta: f32) -> f32 {
    if max_delta > 0.0 {
        (1.0 - (cp - cq).abs() / max_delta).max(0.0)
    } else {
        1.0
    }
}

/// Bounding box of all seed voxels grown by `margin` and clipped to `dims`.
///
/// The box contains the convex hull of the seeds, so it only ever enlarges
/// the computed region.
pub fn compute_roi(seeds: &[SeedStroke], margin: usize, dims: Dims) -> Result<RegionOfInterest> {
    let mut voxels = seeds.iter().flat_map(|s| s.voxels.iter());
    let first = voxels.next().ok_or_else(|| Error::Precondition("at least one seed voxel is required".into()))?;
    let (mut lo, mut hi) = (*first, *first);
    for v in voxels {
        for i in 0..3 {
            lo[i] = lo[i].min(v[i]);
            hi[i] = hi[i].max(v[i]);
        }
    }
    dims.check(hi)?;
    let ext = dims.as_array();
    RegionOfInterest::new(
        lo.map(|c| c.saturating_sub(margin)),
        [0, 1, 2].map(|i| (hi[i].saturating_add(margin)).min(ext[i] - 1)),
    )
}

/// Segments `vol` from `seeds`.
///
/// The returned volume has the full grid of `vol`; voxels outside the ROI
/// are 0. A run that hits the iteration cap still returns its current
/// labels, with `converged == false`.
pub fn run(vol: &ScalarVolume, seeds: &[SeedStroke], config: &GrowCutConfig) -> Result<(LabelVolume, RunStats)> {
    let started = std::time::Instant::now();
    let mut state = initialize(vol, seeds, config)?;
    let cap = config.iteration_cap(&state.roi());

    let pool = if config.workers > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(config.workers)
                .build()
                .map_err(|e| Error::Precondition(format!("cannot start worker pool: {e}")))?,
        )
    } else {
        None
    };

    let mut changed_per_iteration = Vec::new();
    let mut converged = false;
    while changed_per_iteration.len() < cap {
        let changed = state.step_with(pool.as_ref(), config.workers);
        changed_per_iteration.push(changed);
        if changed == 0 {
            converged = true;
            break;
        }
    }

    let labels = state.to_label_volume(vol)?;
    Ok((
        labels,
        RunStats {
            iterations: changed_per_iteration.len(),
            changed_per_iteration,
            wall_time: started.elapsed(),
            converged,
            roi: state.roi(),
        },
    ))
}

/// Checks the seed preconditions shared by [`run`] and [`run_naive`].
pub(crate) fn validate_seeds(dims: Dims, seeds: &[SeedStroke]) -> Result<()> {
    for s in seeds {
        s.validate(Some(dims))?;
    }
    let mut labels: Vec<u8> = seeds.iter().map(|s| s.label).collect();
    labels.sort_unstable();
    labels.dedup();
    if labels.len() < 2 {
        return Err(Error::Initialization(format!("seeds must use at least two different labels, found {labels:?}")));
    }

    let mut owner: std::collections::HashMap<[usize; 3], u8> = std::collections::HashMap::new();
    let mut conflicts = Vec::new();
    for s in seeds {
        for &v in &s.voxels {
            match owner.insert(v, s.label) {
                Some(prev) if prev != s.label => conflicts.push(v),
                _ => {}
            }
        }
    }
    if !conflicts.is_empty() {
        conflicts.sort_unstable_by_key(|v| (v[2], v[1], v[0]));
        conflicts.dedup();
        return Err(Error::SeedConflict { voxels: conflicts });
    }
    Ok(())
}
