use std::time::Instant;

use super::{default_max_iterations, similarity, validate_seeds, Connectivity, GrowCutConfig, RunStats};
use crate::error::Result;
use crate::volgrid::{LabelVolume, RegionOfInterest, ScalarVolume, SeedStroke};

/// Dense reference automaton.
///
/// Visits every voxel of the whole volume in every iteration, recomputes
/// similarities on the fly and runs on one thread. Only `connectivity` and
/// `max_iterations` are taken from `config`.
pub fn run_naive(vol: &ScalarVolume, seeds: &[SeedStroke], config: &GrowCutConfig) -> Result<(LabelVolume, RunStats)> {
    let started = Instant::now();
    config.validate()?;
    let dims = vol.dims();
    validate_seeds(dims, seeds)?;
    let roi = RegionOfInterest::full(dims);
    let cap = config.max_iterations.unwrap_or_else(|| default_max_iterations(&roi));

    let c = vol.data();
    let (lo, hi) = vol.intensity_range();
    let max_delta = hi - lo;
    let six = config.connectivity == Connectivity::Six;
    let [nx, ny, nz] = dims.as_array().map(|n| n as i64);

    let mut labels = vec![0u8; dims.len()];
    let mut strengths = vec![0f32; dims.len()];
    for s in seeds {
        for v in &s.voxels {
            let p = dims.index(v[0], v[1], v[2]);
            labels[p] = s.label;
            strengths[p] = 1.0;
        }
    }

    let mut changed_per_iteration = Vec::new();
    let mut converged = false;
    while changed_per_iteration.len() < cap {
        let prev_labels = labels.clone();
        let prev_strengths = strengths.clone();
        let mut changed = 0;
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    let p = (x + nx * (y + ny * z)) as usize;
                    let mut best: Option<(f32, u8)> = None;
                    for dz in -1..=1i64 {
                        for dy in -1..=1i64 {
                            for dx in -1..=1i64 {
                                let manhattan = dx.abs() + dy.abs() + dz.abs();
                                if manhattan == 0 || (six && manhattan != 1) {
                                    continue;
                                }
                                let (qx, qy, qz) = (x + dx, y + dy, z + dz);
                                if qx < 0 || qy < 0 || qz < 0 || qx >= nx || qy >= ny || qz >= nz {
                                    continue;
                                }
                                let q = (qx + nx * (qy + ny * qz)) as usize;
                                if prev_labels[q] == 0 {
                                    continue;
                                }
                                let attack = similarity(c[p], c[q], max_delta) * prev_strengths[q];
                                if attack <= prev_strengths[p] {
                                    continue;
                                }
                                best = match best {
                                    Some((a, l)) if a > attack || (a == attack && l <= prev_labels[q]) => Some((a, l)),
                                    _ => Some((attack, prev_labels[q])),
                                };
                            }
                        }
                    }
                    if let Some((attack, label)) = best {
                        labels[p] = label;
                        strengths[p] = attack;
                        changed += 1;
                    }
                }
            }
        }
        changed_per_iteration.push(changed);
        if changed == 0 {
            converged = true;
            break;
        }
    }

    Ok((
        vol.with_data(labels)?,
        RunStats {
            iterations: changed_per_iteration.len(),
            changed_per_iteration,
            wall_time: started.elapsed(),
            converged,
            roi,
        },
    ))
}
