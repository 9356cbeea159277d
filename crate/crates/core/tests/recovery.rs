use growcut3d_core::morphology::remove_islands;
use growcut3d_core::{
    dsc, generate_phantom, growcut, phantom_strokes, Connectivity, Dims, GrowCutConfig, IslandPolicy, PhantomShape,
    PhantomSpec,
};

fn recover(spec: &PhantomSpec, conn: Connectivity) -> (f64, growcut::RunStats) {
    let (vol, truth) = generate_phantom(spec).unwrap();
    let strokes = phantom_strokes(&truth).unwrap();
    let config = GrowCutConfig { connectivity: conn, ..Default::default() };
    let (labels, stats) = growcut::run(&vol, &strokes.strokes, &config).unwrap();
    let mask = remove_islands(&labels.binarize(1), conn, IslandPolicy::KeepLargest).unwrap();
    (dsc(&mask, &truth).unwrap(), stats)
}

#[test]
fn noisy_phantoms_are_recovered() {
    for dims in [Dims::new(24, 24, 24), Dims::new(32, 32, 32), Dims::new(32, 28, 20)] {
        let shapes = [
            PhantomShape::centered_cube(dims, 10),
            PhantomShape::centered_ball(dims, 6.0),
            PhantomShape::Cube { min: [2, 3, 4], size: [8, 6, 5] },
        ];
        for shape in shapes {
            for sigma in [0.0, 5.0, 10.0] {
                for seed in 0..3 {
                    for conn in [Connectivity::Six, Connectivity::TwentySix] {
                        let spec = PhantomSpec::new(dims, shape, sigma, seed);
                        let (d, stats) = recover(&spec, conn);
                        let case = format!("{dims} {shape:?} sigma={sigma} seed={seed} conn={conn}");
                        assert!(stats.converged, "{case}");
                        assert!(d >= 0.95, "{case}: dsc {d}");
                    }
                }
            }
        }
    }
}
