use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use growcut3d_core::imageio::{read_label_volume, write_nrrd, write_strokes};
use growcut3d_core::morphology::{dilate, erode};
use growcut3d_core::{Connectivity, Dims, Encoding, LabelVolume, SeedStroke, StrokeSet};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_growcut3d"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

struct Phantom {
    dir: tempfile::TempDir,
}

impl Phantom {
    fn new(args: &[&str]) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let mut all = vec!["phantom"];
        all.extend_from_slice(args);
        let (v, t, s) = (dir.path().join("vol.nrrd"), dir.path().join("truth.nrrd"), dir.path().join("strokes.json"));
        all.extend(["--out-volume", p(&v), "--out-truth", p(&t), "--out-strokes", p(&s)]);
        let o = run(&all);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        Phantom { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn segment(&self, out: &str, extra: &[&str]) -> Output {
        let mut args = vec!["segment", "--volume"];
        let (v, s, o) = (self.path("vol.nrrd"), self.path("strokes.json"), self.path(out));
        args.extend([p(&v), "--strokes", p(&s), "--out", p(&o)]);
        args.extend_from_slice(extra);
        run(&args)
    }
}

#[test]
fn segment_recovers_a_noisy_cube() {
    let ph = Phantom::new(&["--dims", "24,24,24", "--size", "10", "--sigma", "10", "--seed", "4"]);
    let o = ph.segment("seg.nrrd", &[]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("converged"));
    let o = run(&[
        "postprocess",
        "--mask",
        p(&ph.path("seg.nrrd")),
        "--out",
        p(&ph.path("post.nrrd")),
        "--ops",
        "islands:keep_largest",
    ]);
    assert!(o.status.success());
    let o = run(&["dsc", "--a", p(&ph.path("post.nrrd")), "--b", p(&ph.path("truth.nrrd"))]);
    let d: f64 = stdout(&o).trim().parse().unwrap();
    assert!(d >= 0.95, "{d}");
}

#[test]
fn naive_and_optimized_write_identical_files() {
    let ph = Phantom::new(&["--dims", "16,14,12", "--shape", "ball", "--radius", "4", "--sigma", "8", "--seed", "2"]);
    assert!(ph.segment("fast.nrrd", &["--workers", "3", "--margin", "20"]).status.success());
    assert!(ph.segment("naive.nrrd", &["--naive"]).status.success());
    assert_eq!(std::fs::read(ph.path("fast.nrrd")).unwrap(), std::fs::read(ph.path("naive.nrrd")).unwrap());
}

#[test]
fn quiet_output_is_reproducible() {
    let ph = Phantom::new(&["--dims", "12,12,12", "--size", "4", "--sigma", "5"]);
    let a = ph.segment("a.nrrd", &["--quiet", "--workers", "1"]);
    let b = ph.segment("b.nrrd", &["--quiet", "--workers", "4"]);
    assert_eq!(stdout(&a), stdout(&b));
    assert!(!stdout(&a).contains(" s\n"));
    assert!(stdout(&ph.segment("c.nrrd", &[])).contains("growcut time"));
}

#[test]
fn exit_codes() {
    let ph = Phantom::new(&["--dims", "8,8,8", "--size", "2"]);
    let missing = ph.path("missing.json");
    let o = run(&[
        "segment",
        "--volume",
        p(&ph.path("vol.nrrd")),
        "--strokes",
        p(&missing),
        "--out",
        p(&ph.path("x.nrrd")),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing.json"));

    let one_label = StrokeSet::new(Dims::new(8, 8, 8), vec![SeedStroke::new(1, vec![[0, 0, 0]]).unwrap()]).unwrap();
    write_strokes(&one_label, &ph.path("one.json")).unwrap();
    let o = run(&[
        "segment",
        "--volume",
        p(&ph.path("vol.nrrd")),
        "--strokes",
        p(&ph.path("one.json")),
        "--out",
        p(&ph.path("x.nrrd")),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(String::from_utf8_lossy(&o.stderr).lines().count(), 1);

    let o = run(&[
        "postprocess",
        "--mask",
        p(&ph.path("truth.nrrd")),
        "--out",
        p(&ph.path("x.nrrd")),
        "--ops",
        "dilate:1,open:2",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("open:2"));

    let other = Phantom::new(&["--dims", "9,8,8", "--size", "2"]);
    let o = run(&["dsc", "--a", p(&ph.path("truth.nrrd")), "--b", p(&other.path("truth.nrrd"))]);
    assert_eq!(o.status.code(), Some(2));

    assert_eq!(run(&["segment", "--bogus"]).status.code(), Some(2));
    assert_eq!(
        run(&["dsc", "--a", p(&ph.path("truth.nrrd")), "--b", p(&ph.path("truth.nrrd"))]).status.code(),
        Some(0)
    );
}

fn two_blobs() -> LabelVolume {
    let d = Dims::new(10, 10, 10);
    let mut data = vec![0u8; d.len()];
    for (i, v) in data.iter_mut().enumerate() {
        let [x, y, z] = d.coords(i);
        let big = (1..5).contains(&x) && (1..5).contains(&y) && (1..5).contains(&z);
        let small = (7..9).contains(&x) && (7..9).contains(&y) && (7..9).contains(&z);
        *v = u8::from(big || small || (x, y, z) == (8, 1, 1));
    }
    LabelVolume::new(d, [0.5, 0.5, 1.0], [0.0; 3], data).unwrap()
}

#[test]
fn postprocess_pipelines() {
    let dir = tempfile::tempdir().unwrap();
    let mask = two_blobs();
    let input = dir.path().join("in.nrrd");
    write_nrrd(&mask, &input, Encoding::Gzip).unwrap();
    let out = dir.path().join("out.nrrd");
    let pp = |ops: &str| {
        let o = run(&["postprocess", "--mask", p(&input), "--out", p(&out), "--ops", ops]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        read_label_volume(&out).unwrap()
    };
    assert_eq!(pp("islands:keep_largest").count_label(1), 64);
    assert_eq!(pp(""), mask);
    let conn = Connectivity::TwentySix;
    assert_eq!(pp("erode:1,dilate:1"), dilate(&erode(&mask, conn, 1).unwrap(), conn, 1).unwrap());
    assert_eq!(pp("islands:min_size:2").count_label(1), 72);
}

#[test]
fn volume_models() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("m.nrrd");
    write_nrrd(&two_blobs(), &input, Encoding::Raw).unwrap();
    let vol = |extra: &[&str]| {
        let mut args = vec!["volume", "--mask", p(&input)];
        args.extend_from_slice(extra);
        let o = run(&args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        stdout(&o)
    };
    let v = vol(&[]);
    assert!(v.contains("voxels: 73") && v.contains("volume: 18.25 mm3"), "{v}");
    assert!(vol(&["--model", "slice", "--axis", "coronal"]).contains("volume: 18.25 mm3"));
    let s = vol(&["--model", "sphere", "--d", "2"]);
    assert!(s.contains(&format!("volume: {} mm3", std::f64::consts::PI * 8.0 / 6.0)), "{s}");
    assert!(
        vol(&["--model", "caliper", "--a", "2", "--b", "2"]).contains(&format!("{}", std::f64::consts::PI * 8.0 / 6.0))
    );
    assert!(vol(&["--model", "ellipsoid"]).contains("diameters"));
    let o = run(&["volume", "--mask", p(&input), "--model", "caliper", "--a", "1", "--b", "2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn report_prints_and_writes_summary() {
    let csv = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/study.csv");
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("summary.csv");
    let o = run(&["report", "--csv", p(&csv), "--out", p(&out)]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("81.97 ± 3.39") && text.contains("48082.1"), "{text}");
    let summary = std::fs::read_to_string(&out).unwrap();
    assert!(summary.starts_with("statistic,manual_cm3,auto_cm3,manual_voxels,auto_voxels,dsc_percent\nmin,"));
    assert_eq!(summary.lines().count(), 5);

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "case_id,manual_mm3\n1,2\n").unwrap();
    assert_eq!(run(&["report", "--csv", p(&bad)]).status.code(), Some(2));
}
