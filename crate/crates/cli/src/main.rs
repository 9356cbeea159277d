mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use growcut3d_core::{Axis, Connectivity, Encoding};

#[derive(Parser)]
#[command(name = "growcut3d", version, about = "GrowCut segmentation of 3D volumes")]
struct Cli {
    /// Suppress timing lines so output is reproducible.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Segment a volume from seed strokes and write the label volume.
    Segment(SegmentArgs),
    /// Apply morphological post-editing to a mask.
    Postprocess(PostprocessArgs),
    /// Measure a mask's volume, directly or by a geometric model.
    Volume(VolumeArgs),
    /// Dice similarity of two masks.
    Dsc(DscArgs),
    /// Summary statistics of a manual vs automatic study.
    Report(ReportArgs),
    /// Generate a synthetic test volume, its ground truth and seed strokes.
    Phantom(PhantomArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum EncodingArg {
    Raw,
    Gzip,
}

impl From<EncodingArg> for Encoding {
    fn from(e: EncodingArg) -> Self {
        match e {
            EncodingArg::Raw => Encoding::Raw,
            EncodingArg::Gzip => Encoding::Gzip,
        }
    }
}

fn parse_connectivity(s: &str) -> Result<Connectivity, String> {
    s.parse().map_err(|e: growcut3d_core::Error| e.to_string())
}

fn parse_triple<T: std::str::FromStr + Copy>(s: &str) -> Result<[T; 3], String> {
    let v: Vec<T> = s
        .split(',')
        .map(|t| t.trim().parse::<T>().map_err(|_| format!("`{t}` is not a number")))
        .collect::<Result<_, _>>()?;
    <[T; 3]>::try_from(v).map_err(|v| format!("expected 3 comma-separated values, got {}", v.len()))
}

fn parse_axis(s: &str) -> Result<Axis, String> {
    s.parse().map_err(|e: growcut3d_core::Error| e.to_string())
}

#[derive(Args)]
struct SegmentArgs {
    #[arg(long)]
    volume: PathBuf,
    #[arg(long)]
    strokes: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Voxels added around the seed bounding box.
    #[arg(long, default_value_t = 5)]
    margin: usize,
    /// Neighborhood: 6 or 26.
    #[arg(long, default_value = "26", value_parser = parse_connectivity)]
    connectivity: Connectivity,
    /// Worker threads [default: available cores].
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long = "max-iters")]
    max_iters: Option<usize>,
    /// Use the dense single-threaded reference implementation.
    #[arg(long)]
    naive: bool,
    /// Disable the precomputed similarity table.
    #[arg(long)]
    no_precompute: bool,
    #[arg(long, value_enum, default_value = "gzip")]
    encoding: EncodingArg,
}

#[derive(Args)]
struct PostprocessArgs {
    #[arg(long)]
    mask: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated pipeline: dilate:N, erode:N, islands:keep_largest, islands:min_size:K.
    #[arg(long, default_value = "")]
    ops: String,
    #[arg(long, default_value = "26", value_parser = parse_connectivity)]
    connectivity: Connectivity,
    /// Foreground label of a multi-label input.
    #[arg(long, default_value_t = 1)]
    label: u8,
    #[arg(long, value_enum, default_value = "gzip")]
    encoding: EncodingArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Voxel,
    Slice,
    Sphere,
    Ellipsoid,
    Caliper,
}

#[derive(Args)]
struct VolumeArgs {
    #[arg(long)]
    mask: PathBuf,
    #[arg(long, value_enum, default_value = "voxel")]
    model: Model,
    #[arg(long, default_value_t = 1)]
    label: u8,
    /// Slice model: slicing axis.
    #[arg(long, default_value = "axial", value_parser = parse_axis)]
    axis: Axis,
    /// Slice model: slice thickness in mm [default: spacing along the axis].
    #[arg(long)]
    thickness: Option<f64>,
    /// Slice model: pixel area in mm² [default: in-plane spacing product].
    #[arg(long)]
    pixel_area: Option<f64>,
    /// Sphere model diameter in mm [default: measured from the mask].
    #[arg(long)]
    d: Option<f64>,
    /// Ellipsoid extents or caliper diameters in mm [default: measured].
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    /// Ellipsoid extents are diameters rather than semi-axes.
    #[arg(long)]
    diameters: bool,
}

#[derive(Args)]
struct DscArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    #[arg(long, default_value_t = 1)]
    label: u8,
}

#[derive(Args)]
struct ReportArgs {
    /// Records with columns case_id,manual_mm3,auto_mm3,manual_voxels,auto_voxels,dsc_percent.
    #[arg(long)]
    csv: PathBuf,
    /// Write the summary table as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print JSON instead of text tables.
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ShapeArg {
    Cube,
    Ball,
}

#[derive(Args)]
struct PhantomArgs {
    /// nx,ny,nz
    #[arg(long, default_value = "32,32,32", value_parser = parse_triple::<usize>)]
    dims: [usize; 3],
    #[arg(long, value_enum, default_value = "cube")]
    shape: ShapeArg,
    /// Cube side in voxels, centered.
    #[arg(long, default_value_t = 12)]
    size: usize,
    /// Ball radius in voxels, centered.
    #[arg(long, default_value_t = 8.0)]
    radius: f64,
    #[arg(long, default_value_t = 100.0)]
    fg: f32,
    #[arg(long, default_value_t = 0.0)]
    bg: f32,
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// sx,sy,sz in mm
    #[arg(long, default_value = "1,1,1", value_parser = parse_triple::<f64>)]
    spacing: [f64; 3],
    #[arg(long)]
    out_volume: PathBuf,
    #[arg(long)]
    out_truth: Option<PathBuf>,
    #[arg(long)]
    out_strokes: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "gzip")]
    encoding: EncodingArg,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: std::net::IpAddr,
    /// Drop sessions idle for this many seconds.
    #[arg(long, default_value_t = 1800)]
    idle_timeout: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
