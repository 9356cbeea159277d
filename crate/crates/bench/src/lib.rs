//! Fixtures shared by the benchmarks.

use growcut3d_core::{
    generate_phantom, phantom_strokes, Dims, LabelVolume, PhantomShape, PhantomSpec, ScalarVolume, StrokeSet,
};

/// Noisy ball phantom of side `n` with its truth and default strokes.
pub fn ball_case(n: usize, sigma: f64) -> (ScalarVolume, LabelVolume, StrokeSet) {
    let dims = Dims::new(n, n, n);
    let spec = PhantomSpec::new(dims, PhantomShape::centered_ball(dims, n as f64 / 4.0), sigma, 1);
    let (vol, truth) = generate_phantom(&spec).expect("phantom");
    let strokes = phantom_strokes(&truth).expect("strokes");
    (vol, truth, strokes)
}

#[cfg(test)]
mod tests {
    #[test]
    fn fixture_is_seeded() {
        let (vol, truth, strokes) = super::ball_case(16, 5.0);
        assert_eq!(vol, super::ball_case(16, 5.0).0);
        assert!(truth.count_label(1) > 0);
        assert_eq!(strokes.labels(), vec![1, 2]);
    }
}
