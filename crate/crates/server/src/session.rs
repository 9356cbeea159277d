use std::sync::Arc;
use std::time::Instant;

use growcut3d_core::{Dims, LabelVolume, RunStats, ScalarVolume, StrokeSet};
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "state", rename_all = "lowercase")]
pub enum JobState {
    Idle,
    Running,
    Done { stats: RunStats },
    Failed { reason: String },
}

/// One uploaded volume with its strokes and latest segmentation.
pub struct Session {
    pub volume: Arc<ScalarVolume>,
    pub strokes: StrokeSet,
    pub segmentation: Option<LabelVolume>,
    /// Post-edit pipelines applied since the last segmentation.
    pub history: Vec<String>,
    pub job: JobState,
    pub last_access: Instant,
}

impl Session {
    pub fn new(volume: ScalarVolume) -> Self {
        let strokes = StrokeSet { volume_dims: volume.dims(), strokes: Vec::new() };
        Session {
            volume: Arc::new(volume),
            strokes,
            segmentation: None,
            history: Vec::new(),
            job: JobState::Idle,
            last_access: Instant::now(),
        }
    }

    pub fn dims(&self) -> Dims {
        self.volume.dims()
    }

    pub fn is_running(&self) -> bool {
        matches!(self.job, JobState::Running)
    }

    /// Stroke labels painted into a volume; unpainted voxels are 0.
    pub fn stroke_labels(&self) -> LabelVolume {
        let dims = self.dims();
        let mut data = vec![0u8; dims.len()];
        for s in &self.strokes.strokes {
            for v in &s.voxels {
                data[dims.index(v[0], v[1], v[2])] = s.label;
            }
        }
        self.volume.with_data(data).expect("same grid")
    }
}

#[derive(Serialize)]
pub struct StrokeSummary {
    pub labels: Vec<u8>,
    /// Parallel to `labels`.
    pub voxel_counts: Vec<usize>,
    pub stroke_count: usize,
}

impl StrokeSummary {
    pub fn of(set: &StrokeSet) -> Self {
        let counts = set.voxel_counts();
        StrokeSummary {
            labels: counts.keys().copied().collect(),
            voxel_counts: counts.values().copied().collect(),
            stroke_count: set.strokes.len(),
        }
    }
}
