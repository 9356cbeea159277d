//! File formats and synthetic test data.

mod nrrd;
mod phantom;
mod strokes;

pub use nrrd::{
    encode_nrrd, parse_nrrd, read_label_volume, read_nrrd, read_scalar_volume, write_nrrd, Encoding, Nrrd, NrrdType,
    NrrdVolume,
};
pub use phantom::{generate_phantom, phantom_strokes, PhantomShape, PhantomSpec};
pub use strokes::{parse_strokes, read_strokes, write_strokes, StrokeSet};
