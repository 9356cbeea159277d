use rayon::prelude::*;

use super::{compute_roi, similarity, validate_seeds, Connectivity, GrowCutConfig};
use crate::error::Result;
use crate::volgrid::{Dims, LabelVolume, RegionOfInterest, ScalarVolume, SeedStroke};

/// Below this many active voxels an iteration runs on the calling thread.
const PARALLEL_THRESHOLD: usize = 2048;

#[derive(Clone, Copy, Debug, PartialEq)]
struct Update {
    voxel: u32,
    label: u8,
    strength: f32,
}

/// Per-voxel labels and strengths over the ROI, plus the scheduling state.
///
/// Indices are local to the ROI box (x-fastest).
#[derive(Clone, Debug)]
pub struct AutomatonState {
    roi: RegionOfInterest,
    grid: Dims,
    connectivity: Connectivity,
    /// Linear offset of each neighbor in `connectivity.offsets()` order.
    linear: Vec<isize>,
    labels: Vec<u8>,
    strengths: Vec<f32>,
    features: Vec<f32>,
    max_delta: f32,
    /// `g` for every forward edge: `table[p * half + j]` pairs `p` with
    /// neighbor `half + j`.
    table: Option<Vec<f32>>,
    active: Vec<u32>,
    stamp: Vec<u32>,
    iteration: usize,
}

/// Seeds the automaton: seed voxels get their label at full strength,
/// and the seeds plus their neighbors form the first active set.
pub fn initialize(vol: &ScalarVolume, seeds: &[SeedStroke], config: &GrowCutConfig) -> Result<AutomatonState> {
    config.validate()?;
    let dims = vol.dims();
    validate_seeds(dims, seeds)?;
    let roi = compute_roi(seeds, config.roi_margin, dims)?;
    let grid = roi.dims();

    let mut features = Vec::with_capacity(grid.len());
    for z in roi.min[2]..=roi.max[2] {
        for y in roi.min[1]..=roi.max[1] {
            let row = dims.index(roi.min[0], y, z);
            features.extend_from_slice(&vol.data()[row..row + grid.nx]);
        }
    }
    let (lo, hi) = features.iter().fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));

    let linear = config
        .connectivity
        .offsets()
        .iter()
        .map(|o| o[0] as isize + grid.nx as isize * (o[1] as isize + grid.ny as isize * o[2] as isize))
        .collect();

    let mut state = AutomatonState {
        roi,
        grid,
        connectivity: config.connectivity,
        linear,
        labels: vec![0; grid.len()],
        strengths: vec![0.0; grid.len()],
        features,
        max_delta: hi - lo,
        table: None,
        active: Vec::new(),
        stamp: vec![0; grid.len()],
        iteration: 0,
    };

    let mut active = Vec::new();
    for s in seeds {
        for v in &s.voxels {
            let p = state.local(*v);
            state.labels[p] = s.label;
            state.strengths[p] = 1.0;
            active.push(p as u32);
            state.for_each_neighbor(p, |q| active.push(q as u32));
        }
    }
    active.sort_unstable();
    active.dedup();
    state.active = active;

    if config.precompute_similarity {
        state.table = Some(state.build_table());
    }
    Ok(state)
}

impl AutomatonState {
    pub fn roi(&self) -> RegionOfInterest {
        self.roi
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    /// Labels over the ROI box, x-fastest.
    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn strengths(&self) -> &[f32] {
        &self.strengths
    }

    /// ROI-local indices that will be evaluated by the next step, ascending.
    pub fn active(&self) -> &[u32] {
        &self.active
    }

    pub fn features(&self) -> &[f32] {
        &self.features
    }

    pub fn max_delta(&self) -> f32 {
        self.max_delta
    }

    /// True when the next step cannot change anything.
    pub fn is_saturated(&self) -> bool {
        self.active.is_empty()
    }

    fn local(&self, v: [usize; 3]) -> usize {
        self.grid.index(v[0] - self.roi.min[0], v[1] - self.roi.min[1], v[2] - self.roi.min[2])
    }

    #[inline]
    fn neighbor(&self, p: usize, xyz: [usize; 3], k: usize) -> Option<usize> {
        let o = self.connectivity.offsets()[k];
        let ok = |c: usize, d: i32, n: usize| match d {
            -1 => c > 0,
            1 => c + 1 < n,
            _ => true,
        };
        if ok(xyz[0], o[0], self.grid.nx) && ok(xyz[1], o[1], self.grid.ny) && ok(xyz[2], o[2], self.grid.nz) {
            Some((p as isize + self.linear[k]) as usize)
        } else {
            None
        }
    }

    fn for_each_neighbor(&self, p: usize, mut f: impl FnMut(usize)) {
        let xyz = self.grid.coords(p);
        for k in 0..self.linear.len() {
            if let Some(q) = self.neighbor(p, xyz, k) {
                f(q);
            }
        }
    }

    fn build_table(&self) -> Vec<f32> {
        let n = self.linear.len();
        let half = n / 2;
        let mut table = vec![0.0f32; self.grid.len() * half];
        for (p, row) in table.chunks_mut(half).enumerate() {
            let xyz = self.grid.coords(p);
            for (j, g) in row.iter_mut().enumerate() {
                if let Some(q) = self.neighbor(p, xyz, half + j) {
                    *g = similarity(self.features[p], self.features[q], self.max_delta);
                }
            }
        }
        table
    }

    #[inline]
    fn edge_similarity(&self, p: usize, q: usize, k: usize) -> f32 {
        match &self.table {
            Some(table) => {
                let n = self.linear.len();
                let half = n / 2;
                if k >= half {
                    table[p * half + (k - half)]
                } else {
                    table[q * half + (n - 1 - k - half)]
                }
            }
            None => similarity(self.features[p], self.features[q], self.max_delta),
        }
    }

    /// Strongest attack on `p` that beats its current strength, if any.
    ///
    /// Among equal attacks the lowest label wins; among equal attacks with
    /// the same label the first neighbor in offset order wins (the outcome
    /// is identical either way).
    fn evaluate(&self, p: usize) -> Option<Update> {
        let theta = self.strengths[p];
        if theta >= 1.0 {
            return None;
        }
        let xyz = self.grid.coords(p);
        let mut best_attack = theta;
        let mut best_label = 0u8;
        for k in 0..self.linear.len() {
            let Some(q) = self.neighbor(p, xyz, k) else { continue };
            let lq = self.labels[q];
            if lq == 0 {
                continue;
            }
            let attack = self.edge_similarity(p, q, k) * self.strengths[q];
            if attack > best_attack || (best_label != 0 && attack == best_attack && lq < best_label) {
                best_attack = attack;
                best_label = lq;
            }
        }
        (best_label != 0).then_some(Update { voxel: p as u32, label: best_label, strength: best_attack })
    }

    fn evaluate_all(&self, voxels: &[u32]) -> Vec<Update> {
        voxels.iter().filter_map(|&p| self.evaluate(p as usize)).collect()
    }

    /// One synchronous iteration on the calling thread; returns the number
    /// of voxels that changed.
    pub fn step(&mut self) -> usize {
        self.step_with(None, 1)
    }

    /// One synchronous iteration, with the active set cut into `workers`
    /// contiguous runs along the z-major voxel order.
    pub fn step_with(&mut self, pool: Option<&rayon::ThreadPool>, workers: usize) -> usize {
        let updates: Vec<Update> = match pool {
            Some(pool) if workers > 1 && self.active.len() >= PARALLEL_THRESHOLD => {
                let chunk = self.active.len().div_ceil(workers);
                let this = &*self;
                let parts: Vec<Vec<Update>> =
                    pool.install(|| this.active.par_chunks(chunk).map(|c| this.evaluate_all(c)).collect());
                parts.concat()
            }
            _ => self.evaluate_all(&self.active),
        };
        self.apply(&updates);
        updates.len()
    }

    fn apply(&mut self, updates: &[Update]) {
        self.iteration += 1;
        let mark = self.iteration as u32;
        for u in updates {
            let p = u.voxel as usize;
            debug_assert!(u.strength > self.strengths[p], "strengths must increase");
            self.labels[p] = u.label;
            self.strengths[p] = u.strength;
        }

        let mut next = Vec::with_capacity(updates.len() * 4);
        for u in updates {
            let p = u.voxel as usize;
            if self.stamp[p] != mark {
                self.stamp[p] = mark;
                next.push(p as u32);
            }
            let xyz = self.grid.coords(p);
            for k in 0..self.linear.len() {
                if let Some(q) = self.neighbor(p, xyz, k) {
                    if self.stamp[q] != mark {
                        self.stamp[q] = mark;
                        next.push(q as u32);
                    }
                }
            }
        }
        next.sort_unstable();
        self.active = next;
    }

    /// Expands the ROI labels to a full-size volume with the geometry of `vol`.
    pub fn to_label_volume(&self, vol: &ScalarVolume) -> Result<LabelVolume> {
        let dims = vol.dims();
        let mut out = vec![0u8; dims.len()];
        let roi = self.roi;
        for (row, chunk) in self.labels.chunks(self.grid.nx).enumerate() {
            let y = roi.min[1] + row % self.grid.ny;
            let z = roi.min[2] + row / self.grid.ny;
            let start = dims.index(roi.min[0], y, z);
            out[start..start + self.grid.nx].copy_from_slice(chunk);
        }
        vol.with_data(out)
    }
}
