//! Seeded volumetric segmentation with the GrowCut cellular automaton, plus
//! the evaluation pieces around it: morphological post-editing, volume
//! formulas, Dice agreement and study statistics, NRRD and stroke I/O, and
//! synthetic phantoms.
//!
//! ```
//! use growcut3d_core::{generate_phantom, growcut, phantom_strokes, Dims, PhantomShape, PhantomSpec};
//!
//! let dims = Dims::new(12, 12, 12);
//! let spec = PhantomSpec::new(dims, PhantomShape::centered_cube(dims, 6), 0.0, 7);
//! let (vol, truth) = generate_phantom(&spec).unwrap();
//! let strokes = phantom_strokes(&truth).unwrap();
//! let (labels, stats) = growcut::run(&vol, &strokes.strokes, &Default::default()).unwrap();
//! assert!(stats.converged);
//! assert_eq!(labels.binarize(1), truth);
//! ```

pub mod error;
pub mod growcut;
pub mod imageio;
pub mod metrics;
pub mod morphology;
pub mod volgrid;
pub mod volumetry;

pub use error::{Error, Result};
pub use growcut::{run, run_naive, Connectivity, GrowCutConfig, RunStats};
pub use imageio::{
    generate_phantom, phantom_strokes, read_nrrd, read_strokes, write_nrrd, write_strokes, Encoding, PhantomShape,
    PhantomSpec, StrokeSet,
};
pub use metrics::{dsc, summarize, StudyRecord, SummaryStats};
pub use morphology::{IslandPolicy, PostOp};
pub use volgrid::{Axis, Dims, Index3, LabelVolume, RegionOfInterest, ScalarVolume, SeedStroke, Slice, Volume};
pub use volumetry::VoxelVolume;
