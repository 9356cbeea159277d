//! Seed strokes as JSON:
//!
//! ```json
//! {"volume_dims": [16, 16, 8],
//!  "strokes": [{"label": 1, "voxels": [[7, 7, 4], [8, 7, 4]]},
//!              {"label": 2, "voxels": [[0, 0, 0]]}]}
//! ```
//!
//! A voxel repeated within or across strokes of the same label is kept once
//! (first occurrence); a stroke left with no voxels is dropped. The same voxel
//! under different labels is kept as written and rejected at initialization.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volgrid::{Dims, Index3, SeedStroke};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StrokeSet {
    pub volume_dims: Dims,
    pub strokes: Vec<SeedStroke>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDoc {
    volume_dims: [i64; 3],
    strokes: Vec<RawStroke>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStroke {
    label: i64,
    voxels: Vec<[i64; 3]>,
}

impl StrokeSet {
    /// Validates `strokes` against `dims` and deduplicates same-label voxels.
    pub fn new(volume_dims: Dims, strokes: Vec<SeedStroke>) -> Result<Self> {
        if volume_dims.is_empty() {
            return Err(Error::StrokeDocument(format!("volume_dims {volume_dims} is empty")));
        }
        for (i, s) in strokes.iter().enumerate() {
            s.validate(Some(volume_dims)).map_err(|e| Error::StrokeValidation { stroke: i, detail: e.to_string() })?;
        }
        Ok(StrokeSet { volume_dims, strokes: dedup(strokes) })
    }

    /// Distinct labels in ascending order.
    pub fn labels(&self) -> Vec<u8> {
        let mut l: Vec<u8> = self.strokes.iter().map(|s| s.label).collect();
        l.sort_unstable();
        l.dedup();
        l
    }

    /// Voxel count per label, keyed by label.
    pub fn voxel_counts(&self) -> BTreeMap<u8, usize> {
        let mut m = BTreeMap::new();
        for s in &self.strokes {
            *m.entry(s.label).or_insert(0) += s.voxels.len();
        }
        m
    }

    /// Voxels claimed by more than one label, sorted by `(z, y, x)`.
    pub fn conflicts(&self) -> Vec<Index3> {
        let mut owner: HashMap<Index3, u8> = HashMap::new();
        let mut out: Vec<Index3> = Vec::new();
        for s in &self.strokes {
            for &v in &s.voxels {
                if let Some(prev) = owner.insert(v, s.label) {
                    if prev != s.label {
                        out.push(v);
                    }
                }
            }
        }
        out.sort_unstable_by_key(|v| (v[2], v[1], v[0]));
        out.dedup();
        out
    }

    /// Appends `more` strokes, deduplicating against what is already held.
    pub fn extend(&mut self, more: StrokeSet) -> Result<()> {
        if more.volume_dims != self.volume_dims {
            return Err(Error::ShapeMismatch { left: self.volume_dims.into(), right: more.volume_dims.into() });
        }
        let mut all = std::mem::take(&mut self.strokes);
        all.extend(more.strokes);
        self.strokes = dedup(all);
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("strokes serialize")
    }
}

fn dedup(strokes: Vec<SeedStroke>) -> Vec<SeedStroke> {
    let mut seen: HashSet<(u8, Index3)> = HashSet::new();
    strokes
        .into_iter()
        .filter_map(|s| {
            let label = s.label;
            let voxels: Vec<Index3> = s.voxels.into_iter().filter(|v| seen.insert((label, *v))).collect();
            (!voxels.is_empty()).then_some(SeedStroke { label, voxels })
        })
        .collect()
}

pub fn parse_strokes(json: &[u8]) -> Result<StrokeSet> {
    let raw: RawDoc = serde_json::from_slice(json).map_err(|e| Error::StrokeDocument(e.to_string()))?;
    if raw.volume_dims.iter().any(|&d| d <= 0) {
        return Err(Error::StrokeDocument(format!("volume_dims {:?} must be positive", raw.volume_dims)));
    }
    let dims = Dims::from(raw.volume_dims.map(|d| d as usize));
    let mut strokes = Vec::with_capacity(raw.strokes.len());
    for (i, s) in raw.strokes.into_iter().enumerate() {
        let invalid = |detail: String| Error::StrokeValidation { stroke: i, detail };
        let label = u8::try_from(s.label)
            .ok()
            .filter(|&l| l >= 1)
            .ok_or_else(|| invalid(format!("label {} is outside 1..=255", s.label)))?;
        if s.voxels.is_empty() {
            return Err(invalid("stroke has no voxels".into()));
        }
        let mut voxels = Vec::with_capacity(s.voxels.len());
        for v in s.voxels {
            if !dims.contains(v) {
                return Err(invalid(format!("voxel {v:?} is outside volume_dims {dims}")));
            }
            voxels.push(v.map(|c| c as usize));
        }
        strokes.push(SeedStroke { label, voxels });
    }
    StrokeSet::new(dims, strokes)
}

pub fn read_strokes(path: &Path) -> Result<StrokeSet> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_strokes(&bytes)
}

pub fn write_strokes(strokes: &StrokeSet, path: &Path) -> Result<()> {
    std::fs::write(path, strokes.to_json()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let set = StrokeSet::new(
            Dims::new(4, 5, 6),
            vec![SeedStroke::new(1, vec![[1, 2, 3], [0, 0, 0]]).unwrap(), SeedStroke::new(2, vec![[3, 4, 5]]).unwrap()],
        )
        .unwrap();
        assert_eq!(parse_strokes(set.to_json().as_bytes()).unwrap(), set);
        assert_eq!(set.labels(), vec![1, 2]);
    }

    #[test]
    fn negative_voxel_names_the_stroke() {
        let doc =
            br#"{"volume_dims":[4,4,4],"strokes":[{"label":1,"voxels":[[0,0,0]]},{"label":2,"voxels":[[-1,0,0]]}]}"#;
        match parse_strokes(doc) {
            Err(Error::StrokeValidation { stroke, .. }) => assert_eq!(stroke, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn same_label_duplicates_are_merged() {
        let doc = br#"{"volume_dims":[4,4,4],"strokes":[
            {"label":1,"voxels":[[0,0,0],[1,0,0],[0,0,0]]},
            {"label":1,"voxels":[[1,0,0]]},
            {"label":2,"voxels":[[1,0,0],[3,3,3]]}]}"#;
        let set = parse_strokes(doc).unwrap();
        assert_eq!(set.strokes.len(), 2);
        assert_eq!(set.strokes[0].voxels, vec![[0, 0, 0], [1, 0, 0]]);
        assert_eq!(set.strokes[1].voxels, vec![[1, 0, 0], [3, 3, 3]]);
        assert_eq!(set.voxel_counts(), BTreeMap::from([(1, 2), (2, 2)]));
        assert_eq!(set.conflicts(), vec![[1, 0, 0]]);
    }

    #[test]
    fn malformed_documents() {
        for doc in [
            &b"not json"[..],
            br#"{"strokes":[]}"#,
            br#"{"volume_dims":[0,4,4],"strokes":[]}"#,
            br#"{"volume_dims":[4,4],"strokes":[]}"#,
        ] {
            assert!(matches!(parse_strokes(doc), Err(Error::StrokeDocument(_))), "{}", String::from_utf8_lossy(doc));
        }
        for doc in [
            &br#"{"volume_dims":[4,4,4],"strokes":[{"label":0,"voxels":[[0,0,0]]}]}"#[..],
            br#"{"volume_dims":[4,4,4],"strokes":[{"label":256,"voxels":[[0,0,0]]}]}"#,
            br#"{"volume_dims":[4,4,4],"strokes":[{"label":1,"voxels":[]}]}"#,
            br#"{"volume_dims":[4,4,4],"strokes":[{"label":1,"voxels":[[4,0,0]]}]}"#,
        ] {
            assert!(matches!(parse_strokes(doc), Err(Error::StrokeValidation { stroke: 0, .. })));
        }
    }

    #[test]
    fn extend_accumulates() {
        let d = Dims::new(3, 3, 3);
        let mut a = StrokeSet::new(d, vec![SeedStroke::new(1, vec![[0, 0, 0]]).unwrap()]).unwrap();
        let b = StrokeSet::new(d, vec![SeedStroke::new(1, vec![[0, 0, 0], [1, 1, 1]]).unwrap()]).unwrap();
        a.extend(b).unwrap();
        assert_eq!(a.voxel_counts(), BTreeMap::from([(1, 2)]));
        let other = StrokeSet::new(Dims::new(2, 2, 2), vec![SeedStroke::new(1, vec![[0, 0, 0]]).unwrap()]).unwrap();
        assert!(a.extend(other).is_err());
    }
}
