//! Binary morphology for post-editing segmentations.
//!
//! All operators take `{0, 1}` masks, use the connectivity neighborhood as
//! the structuring element and treat everything outside the volume as
//! background.

mod distance;
mod interpolate;
mod pipeline;

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::growcut::Connectivity;
use crate::volgrid::{Dims, LabelVolume};

pub use distance::{signed_distance_2d, squared_distance_2d};
pub use interpolate::interpolate_slices;
pub use pipeline::{apply_pipeline, parse_pipeline, PostOp};

fn require_binary(mask: &LabelVolume) -> Result<()> {
    match mask.data().iter().position(|&l| l > 1) {
        None => Ok(()),
        Some(i) => Err(Error::Domain(format!(
            "mask must be binary, found label {} at voxel {:?}",
            mask.data()[i],
            mask.dims().coords(i)
        ))),
    }
}

fn require_iterations(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::Precondition("iterations must be at least 1".into()))
    } else {
        Ok(())
    }
}

/// Calls `f` with the linear index of every in-volume neighbor of `p`.
#[inline]
pub(crate) fn neighbors(dims: Dims, p: usize, conn: Connectivity, mut f: impl FnMut(Option<usize>)) {
    let [x, y, z] = dims.coords(p);
    for o in conn.offsets() {
        let q = [x as i64 + o[0] as i64, y as i64 + o[1] as i64, z as i64 + o[2] as i64];
        if dims.contains(q) {
            f(Some(dims.index(q[0] as usize, q[1] as usize, q[2] as usize)));
        } else {
            f(None);
        }
    }
}

fn sweep(mask: &LabelVolume, conn: Connectivity, iterations: usize, grow: bool) -> Result<LabelVolume> {
    require_binary(mask)?;
    require_iterations(iterations)?;
    let dims = mask.dims();
    let mut cur = mask.data().to_vec();
    for _ in 0..iterations {
        let next = (0..cur.len())
            .map(|p| {
                let mut hit = cur[p] == 1;
                let mut all = cur[p] == 1;
                neighbors(dims, p, conn, |q| {
                    let v = q.is_some_and(|q| cur[q] == 1);
                    hit |= v;
                    all &= v;
                });
                u8::from(if grow { hit } else { all })
            })
            .collect();
        cur = next;
    }
    mask.with_data(cur)
}

/// A voxel becomes foreground when it or any neighbor is foreground.
pub fn dilate(mask: &LabelVolume, conn: Connectivity, iterations: usize) -> Result<LabelVolume> {
    sweep(mask, conn, iterations, true)
}

/// A voxel stays foreground only when it and every neighbor are foreground.
pub fn erode(mask: &LabelVolume, conn: Connectivity, iterations: usize) -> Result<LabelVolume> {
    sweep(mask, conn, iterations, false)
}

/// Which connected components [`remove_islands`] keeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IslandPolicy {
    /// The single largest component; ties go to the component holding the
    /// smallest voxel in `(x, y, z)` lexicographic order.
    KeepLargest,
    /// Every component with at least this many voxels.
    MinSize(usize),
}

/// Connected foreground components.
#[derive(Clone, Debug)]
pub struct Components {
    /// Per-voxel component id, 0 for background, ids start at 1.
    pub ids: Vec<u32>,
    /// `sizes[id - 1]` is the voxel count of component `id`.
    pub sizes: Vec<usize>,
    /// Smallest voxel `(x, y, z)` of each component.
    pub anchors: Vec<[usize; 3]>,
}

/// Labels the connected components of a binary mask by breadth-first search.
pub fn connected_components(mask: &LabelVolume, conn: Connectivity) -> Result<Components> {
    require_binary(mask)?;
    let dims = mask.dims();
    let data = mask.data();
    let mut ids = vec![0u32; data.len()];
    let mut sizes = Vec::new();
    let mut anchors = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..data.len() {
        if data[start] == 0 || ids[start] != 0 {
            continue;
        }
        let id = sizes.len() as u32 + 1;
        ids[start] = id;
        queue.push_back(start);
        let mut size = 0;
        let mut anchor = dims.coords(start);
        while let Some(p) = queue.pop_front() {
            size += 1;
            anchor = anchor.min(dims.coords(p));
            neighbors(dims, p, conn, |q| {
                if let Some(q) = q {
                    if data[q] == 1 && ids[q] == 0 {
                        ids[q] = id;
                        queue.push_back(q);
                    }
                }
            });
        }
        sizes.push(size);
        anchors.push(anchor);
    }
    Ok(Components { ids, sizes, anchors })
}

/// Drops connected components per `policy`.
pub fn remove_islands(mask: &LabelVolume, conn: Connectivity, policy: IslandPolicy) -> Result<LabelVolume> {
    let comps = connected_components(mask, conn)?;
    let keep: Vec<bool> = match policy {
        IslandPolicy::MinSize(k) => comps.sizes.iter().map(|&s| s >= k).collect(),
        IslandPolicy::KeepLargest => {
            let best = (0..comps.sizes.len()).min_by(|&a, &b| {
                comps.sizes[b].cmp(&comps.sizes[a]).then_with(|| comps.anchors[a].cmp(&comps.anchors[b]))
            });
            (0..comps.sizes.len()).map(|i| Some(i) == best).collect()
        }
    };
    let data = comps.ids.iter().map(|&id| u8::from(id != 0 && keep[id as usize - 1])).collect();
    mask.with_data(data)
}
