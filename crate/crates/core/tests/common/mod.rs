#![allow(dead_code)]

use growcut3d_core::{Dims, LabelVolume};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Binary mask with each voxel set with probability `density`.
pub fn random_mask(rng: &mut ChaCha8Rng, dims: Dims, density: f64) -> LabelVolume {
    let data = (0..dims.len()).map(|_| u8::from(rng.random_bool(density))).collect();
    LabelVolume::new(dims, [1.0; 3], [0.0; 3], data).unwrap()
}

pub fn random_dims(rng: &mut ChaCha8Rng, max_side: usize) -> Dims {
    Dims::new(rng.random_range(1..=max_side), rng.random_range(1..=max_side), rng.random_range(1..=max_side))
}
