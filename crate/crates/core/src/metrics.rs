//! Agreement and study statistics.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volgrid::LabelVolume;

/// Dice similarity coefficient `2|A∩B| / (|A| + |B|)` of two binary masks,
/// as a fraction. Two empty masks agree perfectly.
pub fn dsc(a: &LabelVolume, b: &LabelVolume) -> Result<f64> {
    a.same_shape(b)?;
    if !(a.is_binary() && b.is_binary()) {
        return Err(Error::Domain("DSC needs binary masks".into()));
    }
    let (mut na, mut nb, mut both) = (0u64, 0u64, 0u64);
    for (&x, &y) in a.data().iter().zip(b.data()) {
        na += u64::from(x);
        nb += u64::from(y);
        both += u64::from(x & y);
    }
    if na + nb == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * both as f64 / (na + nb) as f64)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum StdConvention {
    /// `n - 1` denominator.
    #[default]
    Sample,
    /// `n` denominator.
    Population,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SummaryStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// Absent when the convention's denominator would be zero.
    pub std: Option<f64>,
}

/// Min, max, mean and sample standard deviation.
pub fn summarize(values: &[f64]) -> Result<SummaryStats> {
    summarize_with(values, StdConvention::Sample)
}

pub fn summarize_with(values: &[f64], convention: StdConvention) -> Result<SummaryStats> {
    if values.is_empty() {
        return Err(Error::Precondition("cannot summarize an empty list".into()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    let denom = match convention {
        StdConvention::Sample => n - 1.0,
        StdConvention::Population => n,
    };
    let std = (denom > 0.0).then(|| (ss / denom).sqrt());
    // mean can drift past an extreme by an ulp when all values are equal
    Ok(SummaryStats { min, max, mean: mean.clamp(min, max), std })
}

/// One row of a manual-versus-automatic comparison study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyRecord {
    pub case_id: u32,
    #[serde(rename = "manual_mm3")]
    pub manual_volume_mm3: f64,
    #[serde(rename = "auto_mm3")]
    pub auto_volume_mm3: f64,
    pub manual_voxels: u64,
    pub auto_voxels: u64,
    pub dsc_percent: f64,
}

impl StudyRecord {
    pub fn validate(&self) -> Result<()> {
        let finite_nonneg = |v: f64| v.is_finite() && v >= 0.0;
        if !finite_nonneg(self.manual_volume_mm3) || !finite_nonneg(self.auto_volume_mm3) {
            return Err(Error::Record(format!("case {}: volumes must be non-negative", self.case_id)));
        }
        if !(0.0..=100.0).contains(&self.dsc_percent) {
            return Err(Error::Record(format!("case {}: DSC {} is outside [0, 100]", self.case_id, self.dsc_percent)));
        }
        Ok(())
    }
}

/// Per-case rows plus summary statistics per column. Volumes are summarized in cm³.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StudyReport {
    pub records: Vec<StudyRecord>,
    pub manual_cm3: SummaryStats,
    pub auto_cm3: SummaryStats,
    pub manual_voxels: SummaryStats,
    pub auto_voxels: SummaryStats,
    pub dsc_percent: SummaryStats,
}

pub fn study_report(records: &[StudyRecord]) -> Result<StudyReport> {
    if records.is_empty() {
        return Err(Error::Precondition("study report needs at least one record".into()));
    }
    for r in records {
        r.validate()?;
    }
    let col = |f: &dyn Fn(&StudyRecord) -> f64| summarize(&records.iter().map(f).collect::<Vec<_>>());
    Ok(StudyReport {
        records: records.to_vec(),
        manual_cm3: col(&|r| r.manual_volume_mm3 / 1000.0)?,
        auto_cm3: col(&|r| r.auto_volume_mm3 / 1000.0)?,
        manual_voxels: col(&|r| r.manual_voxels as f64)?,
        auto_voxels: col(&|r| r.auto_voxels as f64)?,
        dsc_percent: col(&|r| r.dsc_percent)?,
    })
}

/// CSV with header `case_id,manual_mm3,auto_mm3,manual_voxels,auto_voxels,dsc_percent`.
pub fn read_records_csv<R: Read>(reader: R) -> Result<Vec<StudyRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let expected = ["case_id", "manual_mm3", "auto_mm3", "manual_voxels", "auto_voxels", "dsc_percent"];
    let headers = rdr.headers().map_err(|e| Error::Record(e.to_string()))?.clone();
    if headers.iter().ne(expected) {
        return Err(Error::Record(format!(
            "expected columns {}, got {}",
            expected.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<StudyRecord>().enumerate() {
        let rec = row.map_err(|e| Error::Record(format!("row {}: {e}", i + 1)))?;
        rec.validate()?;
        out.push(rec);
    }
    Ok(out)
}

pub fn load_records_csv(path: &Path) -> Result<Vec<StudyRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_records_csv(file)
}

pub fn write_records_csv<W: Write>(records: &[StudyRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(r).map_err(|e| Error::Record(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Record(e.to_string()))
}

pub fn save_records_csv(records: &[StudyRecord], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_records_csv(records, file).map_err(|e| match e {
        Error::Record(msg) => Error::io(path, std::io::Error::other(msg)),
        other => other,
    })
}

impl StudyReport {
    /// Plain-text per-case table followed by the summary table.
    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:>6}  {:>12} {:>12}  {:>10} {:>10}  {:>7}",
            "case", "manual mm3", "auto mm3", "manual vx", "auto vx", "DSC %"
        );
        for r in &self.records {
            let _ = writeln!(
                s,
                "{:>6}  {:>12.2} {:>12.2}  {:>10} {:>10}  {:>7.2}",
                r.case_id, r.manual_volume_mm3, r.auto_volume_mm3, r.manual_voxels, r.auto_voxels, r.dsc_percent
            );
        }
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "{:>6}  {:>12} {:>12}  {:>10} {:>10}  {:>13}",
            "", "manual cm3", "auto cm3", "manual vx", "auto vx", "DSC %"
        );
        let row = |s: &mut String, name: &str, pick: fn(&SummaryStats) -> f64| {
            let _ = writeln!(
                s,
                "{:>6}  {:>12.2} {:>12.2}  {:>10.0} {:>10.0}  {:>13.2}",
                name,
                pick(&self.manual_cm3),
                pick(&self.auto_cm3),
                pick(&self.manual_voxels),
                pick(&self.auto_voxels),
                pick(&self.dsc_percent)
            );
        };
        row(&mut s, "min", |v| v.min);
        row(&mut s, "max", |v| v.max);
        let pm = |v: &SummaryStats| match v.std {
            Some(sd) => format!("{:.2} ± {:.2}", v.mean, sd),
            None => format!("{:.2}", v.mean),
        };
        // voxel counts report the mean only
        let _ = writeln!(
            s,
            "{:>6}  {:>12} {:>12}  {:>10.1} {:>10.1}  {:>13}",
            "μ ± σ",
            pm(&self.manual_cm3),
            pm(&self.auto_cm3),
            self.manual_voxels.mean,
            self.auto_voxels.mean,
            pm(&self.dsc_percent)
        );
        s
    }
}
