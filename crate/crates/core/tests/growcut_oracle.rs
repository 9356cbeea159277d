//! The optimized automaton against the dense reference, plus run invariants.

use growcut3d_core::growcut::{self, compute_roi, initialize};
use growcut3d_core::{Connectivity, Dims, GrowCutConfig, ScalarVolume, SeedStroke};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random volume with coarse intensity levels (so similarity ties occur)
/// and 2..=4 labels of random seed voxels.
fn random_case(seed: u64, max_side: usize) -> (ScalarVolume, Vec<SeedStroke>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dims =
        Dims::new(rng.random_range(2..=max_side), rng.random_range(2..=max_side), rng.random_range(1..=max_side));
    let levels = rng.random_range(1..=6);
    let data: Vec<f32> = (0..dims.len()).map(|_| rng.random_range(0..levels) as f32 * 12.5).collect();
    let vol = ScalarVolume::new(dims, [1.0; 3], [0.0; 3], data).unwrap();

    let mut idx: Vec<usize> = (0..dims.len()).collect();
    idx.shuffle(&mut rng);
    let labels = rng.random_range(2..=4usize).min(dims.len());
    let per = (dims.len() / (4 * labels)).max(1);
    let strokes = (0..labels)
        .map(|l| {
            let n = rng.random_range(1..=per);
            let voxels = idx.drain(..n).map(|i| dims.coords(i)).collect();
            SeedStroke::new(l as u8 + 1, voxels).unwrap()
        })
        .collect();
    (vol, strokes)
}

fn conn(six: bool) -> Connectivity {
    if six {
        Connectivity::Six
    } else {
        Connectivity::TwentySix
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn optimized_matches_naive(seed in any::<u64>(), six in any::<bool>(), precompute in any::<bool>()) {
        let (vol, strokes) = random_case(seed, 12);
        let base = GrowCutConfig {
            connectivity: conn(six),
            roi_margin: 12,
            precompute_similarity: precompute,
            workers: 1,
            ..Default::default()
        };
        let (expect, naive_stats) = growcut::run_naive(&vol, &strokes, &base).unwrap();
        prop_assert!(naive_stats.converged);
        for workers in [1, 2, 4, 8] {
            let (got, stats) = growcut::run(&vol, &strokes, &GrowCutConfig { workers, ..base.clone() }).unwrap();
            prop_assert_eq!(got.data(), expect.data(), "workers {}", workers);
            prop_assert_eq!(&stats.changed_per_iteration, &naive_stats.changed_per_iteration);
        }
    }

    #[test]
    fn seeds_keep_their_labels(seed in any::<u64>(), six in any::<bool>(), margin in 0usize..4) {
        let (vol, strokes) = random_case(seed, 10);
        let config = GrowCutConfig { connectivity: conn(six), roi_margin: margin, workers: 2, ..Default::default() };
        let (out, stats) = growcut::run(&vol, &strokes, &config).unwrap();
        prop_assert!(stats.converged);
        prop_assert_eq!(*stats.changed_per_iteration.last().unwrap(), 0);
        for s in &strokes {
            for v in &s.voxels {
                prop_assert_eq!(out.get(*v).unwrap(), s.label);
            }
        }
        let roi = compute_roi(&strokes, margin, vol.dims()).unwrap();
        let dims = vol.dims();
        for i in (0..dims.len()).filter(|&i| !roi.contains(dims.coords(i))) {
            prop_assert_eq!(out.data()[i], 0);
        }
    }

    #[test]
    fn strengths_never_decrease(seed in any::<u64>(), six in any::<bool>()) {
        let (vol, strokes) = random_case(seed, 8);
        let config = GrowCutConfig { connectivity: conn(six), ..Default::default() };
        let mut state = initialize(&vol, &strokes, &config).unwrap();
        let mut prev = state.strengths().to_vec();
        loop {
            let changed = state.step();
            let now = state.strengths().to_vec();
            prop_assert!(now.iter().zip(&prev).all(|(a, b)| a >= b));
            prop_assert!(now.iter().all(|&s| (0.0..=1.0).contains(&s)));
            if changed == 0 {
                break;
            }
            prev = now;
        }
    }
}

#[test]
fn repeated_runs_are_identical() {
    for seed in 0..8 {
        let (vol, strokes) = random_case(seed, 16);
        let config = GrowCutConfig { workers: 4, ..Default::default() };
        let first = growcut::run(&vol, &strokes, &config).unwrap().0;
        for _ in 0..2 {
            assert_eq!(growcut::run(&vol, &strokes, &config).unwrap().0, first);
        }
    }
}

#[test]
fn iteration_cap_stops_early() {
    let (vol, strokes) = random_case(3, 16);
    let config = GrowCutConfig { max_iterations: Some(1), ..Default::default() };
    let (_, stats) = growcut::run(&vol, &strokes, &config).unwrap();
    assert_eq!(stats.iterations, 1);
    assert!(!stats.converged);
}
