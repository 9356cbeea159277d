use std::fmt::Write as _;
use std::path::Path;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use growcut3d_core::imageio::{self, read_label_volume, read_scalar_volume};
use growcut3d_core::metrics::{load_records_csv, study_report, StudyReport};
use growcut3d_core::morphology::{apply_pipeline, parse_pipeline};
use growcut3d_core::volumetry::{
    caliper_model, ellipsoid_model, measure, slice_sum_volume, sphere_model, voxel_volume, AxisMode,
};
use growcut3d_core::{dsc, growcut, Dims, Error, GrowCutConfig, LabelVolume, PhantomShape, PhantomSpec};

use crate::*;

/// Prints a line to stdout, ignoring a closed pipe.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

/// 1 for I/O failures, 2 for everything the input or flags got wrong.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(err) = cause.downcast_ref::<Error>() {
            return if err.is_io() { 1 } else { 2 };
        }
        if cause.is::<std::io::Error>() {
            return 1;
        }
    }
    2
}

pub fn run(cli: Cli) -> Result<()> {
    let quiet = cli.quiet;
    match cli.command {
        Command::Segment(a) => segment(a, quiet),
        Command::Postprocess(a) => postprocess(a),
        Command::Volume(a) => volume(a),
        Command::Dsc(a) => dice(a),
        Command::Report(a) => report(a),
        Command::Phantom(a) => phantom(a),
        Command::Serve(a) => serve(a),
    }
}

fn timing(quiet: bool, label: &str, d: Duration) {
    if !quiet {
        say!("{label}: {:.3} s", d.as_secs_f64());
    }
}

fn read_mask(path: &Path, label: u8) -> Result<LabelVolume> {
    Ok(read_label_volume(path)?.binarize(label))
}

fn segment(a: SegmentArgs, quiet: bool) -> Result<()> {
    let started = Instant::now();
    let vol = read_scalar_volume(&a.volume)?;
    let strokes = imageio::read_strokes(&a.strokes)?;
    if strokes.volume_dims != vol.dims() {
        return Err(Error::ShapeMismatch { left: vol.dims().into(), right: strokes.volume_dims.into() })
            .context("strokes do not match the volume");
    }
    let config = GrowCutConfig {
        connectivity: a.connectivity,
        roi_margin: a.margin,
        max_iterations: a.max_iters,
        workers: a.workers.unwrap_or_else(|| GrowCutConfig::default().workers),
        precompute_similarity: !a.no_precompute,
    };
    let (labels, stats) = if a.naive {
        growcut::run_naive(&vol, &strokes.strokes, &config)?
    } else {
        growcut::run(&vol, &strokes.strokes, &config)?
    };
    imageio::write_nrrd(&labels, &a.out, a.encoding.into())?;

    let r = stats.roi;
    say!(
        "iterations: {} ({})",
        stats.iterations,
        if stats.converged { "converged" } else { "stopped at the iteration cap" }
    );
    say!("roi: {:?}..={:?} ({} voxels)", r.min, r.max, r.dims().len());
    let changed: Vec<String> = stats.changed_per_iteration.iter().map(ToString::to_string).collect();
    say!("changed per iteration: {}", changed.join(" "));
    for l in labels.labels_present() {
        say!("label {l}: {} voxels", labels.count_label(l));
    }
    timing(quiet, "growcut time", stats.wall_time);
    timing(quiet, "total time", started.elapsed());
    Ok(())
}

fn postprocess(a: PostprocessArgs) -> Result<()> {
    let ops = parse_pipeline(&a.ops)?;
    let mask = read_mask(&a.mask, a.label)?;
    let out = apply_pipeline(&mask, &ops, a.connectivity)?;
    imageio::write_nrrd(&out, &a.out, a.encoding.into())?;
    say!("voxels: {} -> {}", mask.count_label(1), out.count_label(1));
    Ok(())
}

fn volume(a: VolumeArgs) -> Result<()> {
    let mask = read_mask(&a.mask, a.label)?;
    let sp = mask.spacing();
    let v = voxel_volume(&mask, sp)?;
    say!("voxels: {}", v.voxel_count);
    let measured = || -> Result<_> { measure(&mask)?.context("mask is empty; pass the model dimensions explicitly") };
    let mm3 = match a.model {
        Model::Voxel => v.volume_mm3,
        Model::Slice => {
            let (thick, area) = match a.axis {
                Axis::Axial => (sp[2], sp[0] * sp[1]),
                Axis::Sagittal => (sp[0], sp[1] * sp[2]),
                Axis::Coronal => (sp[1], sp[0] * sp[2]),
            };
            slice_sum_volume(&mask, a.axis, a.thickness.unwrap_or(thick), a.pixel_area.unwrap_or(area))?
        }
        Model::Sphere => {
            let d = match a.d {
                Some(d) => d,
                None => measured()?.d,
            };
            say!("d: {d} mm");
            sphere_model(d)?
        }
        Model::Ellipsoid => {
            let (x, y, z, mode) = match (a.a, a.b, a.c) {
                (Some(x), Some(y), Some(z)) => {
                    (x, y, z, if a.diameters { AxisMode::Diameters } else { AxisMode::SemiAxes })
                }
                (None, None, None) => {
                    let g = measured()?;
                    (g.a, g.b, g.c, AxisMode::Diameters)
                }
                _ => bail!(Error::Precondition("ellipsoid needs all of --a, --b, --c or none".into())),
            };
            say!("axes: {x} {y} {z} mm ({})", if mode == AxisMode::Diameters { "diameters" } else { "semi-axes" });
            ellipsoid_model(x, y, z, mode)?
        }
        Model::Caliper => {
            let (x, y) = match (a.a, a.b) {
                (Some(x), Some(y)) => (x, y),
                (None, None) => {
                    let g = measured()?;
                    (g.d_largest, g.d_perp)
                }
                _ => bail!(Error::Precondition("caliper needs both --a and --b or neither".into())),
            };
            say!("a: {x} mm, b: {y} mm");
            caliper_model(x, y)?
        }
    };
    say!("volume: {mm3} mm3");
    say!("volume: {} cm3", mm3 / 1000.0);
    Ok(())
}

fn dice(a: DscArgs) -> Result<()> {
    let (x, y) = (read_mask(&a.a, a.label)?, read_mask(&a.b, a.label)?);
    say!("{:.4}", dsc(&x, &y)?);
    Ok(())
}

fn summary_csv(r: &StudyReport) -> String {
    let mut s = String::from("statistic,manual_cm3,auto_cm3,manual_voxels,auto_voxels,dsc_percent\n");
    let cols = [&r.manual_cm3, &r.auto_cm3, &r.manual_voxels, &r.auto_voxels, &r.dsc_percent];
    type Pick = fn(&growcut3d_core::SummaryStats) -> Option<f64>;
    let rows: [(&str, Pick); 4] =
        [("min", |v| Some(v.min)), ("max", |v| Some(v.max)), ("mean", |v| Some(v.mean)), ("std", |v| v.std)];
    for (name, pick) in rows {
        let vals: Vec<String> = cols.iter().map(|c| pick(c).map(|v| v.to_string()).unwrap_or_default()).collect();
        let _ = writeln!(s, "{name},{}", vals.join(","));
    }
    s
}

fn report(a: ReportArgs) -> Result<()> {
    let records = load_records_csv(&a.csv)?;
    let r = study_report(&records)?;
    if a.json {
        say!("{}", serde_json::to_string_pretty(&r)?);
    } else {
        say!("{}", r.render_text().trim_end());
    }
    if let Some(out) = a.out {
        std::fs::write(&out, summary_csv(&r)).with_context(|| format!("writing {}", out.display()))?;
    }
    Ok(())
}

fn phantom(a: PhantomArgs) -> Result<()> {
    let dims = Dims::from(a.dims);
    let shape = match a.shape {
        ShapeArg::Cube => PhantomShape::centered_cube(dims, a.size),
        ShapeArg::Ball => PhantomShape::centered_ball(dims, a.radius),
    };
    let spec = PhantomSpec {
        dims,
        shape,
        fg_intensity: a.fg,
        bg_intensity: a.bg,
        noise_sigma: a.sigma,
        rng_seed: a.seed,
        spacing: a.spacing,
    };
    let (vol, truth) = imageio::generate_phantom(&spec)?;
    imageio::write_nrrd(&vol, &a.out_volume, a.encoding.into())?;
    if let Some(p) = &a.out_truth {
        imageio::write_nrrd(&truth, p, a.encoding.into())?;
    }
    if let Some(p) = &a.out_strokes {
        imageio::write_strokes(&imageio::phantom_strokes(&truth)?, p)?;
    }
    say!("phantom {dims}: {} foreground voxels", truth.count_label(1));
    Ok(())
}

fn serve(a: ServeArgs) -> Result<()> {
    let addr = std::net::SocketAddr::new(a.host, a.port);
    let config =
        growcut3d_server::ServerConfig { idle_timeout: Duration::from_secs(a.idle_timeout), ..Default::default() };
    let rt = tokio::runtime::Runtime::new().context("starting the async runtime")?;
    eprintln!("listening on http://{addr}");
    rt.block_on(growcut3d_server::serve(addr, config)).with_context(|| format!("serving on {addr}"))
}
