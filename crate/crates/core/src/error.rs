use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("index ({x}, {y}, {z}) is out of bounds for dims {dims:?}", x = index[0], y = index[1], z = index[2])]
    OutOfBounds { index: [i64; 3], dims: [usize; 3] },

    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch { left: [usize; 3], right: [usize; 3] },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("argument order: {0}")]
    ArgumentOrder(String),

    #[error("initialization error: {0}")]
    Initialization(String),

    #[error("conflicting seed labels at {} voxel(s): {}", voxels.len(), fmt_voxels(voxels))]
    SeedConflict { voxels: Vec<[usize; 3]> },

    #[error("unsupported format: field `{field}`: {detail}")]
    Unsupported { field: String, detail: String },

    #[error("corrupt file: {0}")]
    Corrupt(String),

    #[error("invalid stroke {stroke}: {detail}")]
    StrokeValidation { stroke: usize, detail: String },

    #[error("invalid stroke document: {0}")]
    StrokeDocument(String),

    #[error("invalid record: {0}")]
    Record(String),

    #[error("{}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// True for failures of the filesystem rather than of the input's content.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}

fn fmt_voxels(voxels: &[[usize; 3]]) -> String {
    const SHOWN: usize = 8;
    let mut s =
        voxels.iter().take(SHOWN).map(|v| format!("({},{},{})", v[0], v[1], v[2])).collect::<Vec<_>>().join(" ");
    if voxels.len() > SHOWN {
        s.push_str(" ...");
    }
    s
}
