use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use voxmesh::config::{Config, Mode};
use voxmesh::error::Error;
use voxmesh::geometry::PointCloud;
use voxmesh::halfedge::HalfEdgeMesh;
use voxmesh::io::{
    load_mesh, load_point_cloud, save_histogram_csv, save_mesh, save_point_cloud, save_report, save_text,
    MeshWriteOptions, ReportDocument, RunMetadata,
};
use voxmesh::metrics::{mean_quality, mesh_report, QualityReport};
use voxmesh::optimizer::{isotropic_remesh, RemeshParams};
use voxmesh::pipeline::{self, StageError};

#[derive(Parser)]
#[command(name = "voxmesh", version, about = "Point cloud to isotropic triangle mesh reconstruction")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// TOML configuration file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline on a point cloud.
    Reconstruct(ReconstructArgs),
    /// Quality report of a mesh against a reference cloud.
    Metrics(MetricsArgs),
    /// Smoothing and density adjustment only.
    Preprocess(PreprocessArgs),
    /// Feature-aware resampling only.
    Resample(ResampleArgs),
    /// Isotropic remeshing of an existing mesh.
    Remesh(RemeshArgs),
}

#[derive(Args)]
struct SamplingFlags {
    /// Output vertex count.
    #[arg(long)]
    points: Option<usize>,
    /// Sampling classes: none, edges or curvature.
    #[arg(long, value_parser = parse_mode)]
    mode: Option<Mode>,
    /// Class rates, e.g. 7:3 (edge:ordinary) or 2:3:4:5:6.
    #[arg(long)]
    rates: Option<String>,
    /// Voxel box edge length (default derived from the target count).
    #[arg(long)]
    v_scale: Option<f64>,
}

#[derive(Args)]
struct ReportFlags {
    /// JSON report path.
    #[arg(long)]
    report: Option<PathBuf>,
    /// CSV angle histogram path.
    #[arg(long)]
    histogram: Option<PathBuf>,
    /// PLY mesh colored by per-vertex minimum angle.
    #[arg(long)]
    colormap: Option<PathBuf>,
}

#[derive(Args)]
struct ReconstructArgs {
    input: PathBuf,
    /// Output mesh (.ply or .obj).
    #[arg(short, long)]
    output: PathBuf,
    #[command(flatten)]
    sampling: SamplingFlags,
    /// Remeshing iterations (default 5).
    #[arg(long)]
    iterations: Option<usize>,
    /// Keep openings wider than a voxel box as boundaries.
    #[arg(long)]
    keep_internal_edges: bool,
    /// Curvature-adaptive target edge lengths.
    #[arg(long)]
    adaptive: bool,
    #[command(flatten)]
    reports: ReportFlags,
}

#[derive(Args)]
struct MetricsArgs {
    mesh: PathBuf,
    /// Reference point cloud for the MLS error.
    cloud: PathBuf,
    #[command(flatten)]
    reports: ReportFlags,
}

#[derive(Args)]
struct PreprocessArgs {
    input: PathBuf,
    /// Output point cloud.
    #[arg(short, long)]
    output: PathBuf,
    /// Smoothing neighbors.
    #[arg(long)]
    k: Option<usize>,
    /// Smoothing passes (default 1).
    #[arg(long)]
    passes: Option<usize>,
    /// Octree cube edge (default: mean nearest-neighbor distance).
    #[arg(long)]
    octree_scale: Option<f64>,
    /// Up-sample when fewer than twice this many points remain.
    #[arg(long)]
    points: Option<usize>,
}

#[derive(Args)]
struct ResampleArgs {
    input: PathBuf,
    /// Output point cloud.
    #[arg(short, long)]
    output: PathBuf,
    #[command(flatten)]
    sampling: SamplingFlags,
}

#[derive(Args)]
struct RemeshArgs {
    input: PathBuf,
    /// Output mesh (.ply or .obj).
    #[arg(short, long)]
    output: PathBuf,
    /// Remeshing iterations (default 5).
    #[arg(long)]
    iterations: Option<usize>,
    /// Curvature-adaptive target edge lengths.
    #[arg(long)]
    adaptive: bool,
    /// Output vertex count (default: the input count).
    #[arg(long)]
    points: Option<usize>,
    /// Keep external-edge vertices stored in the input `class` property.
    #[arg(long)]
    preserve_edges: bool,
    /// Reference cloud for the MLS error in the report.
    #[arg(long)]
    reference: Option<PathBuf>,
    #[command(flatten)]
    reports: ReportFlags,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

enum Failure {
    Usage(String),
    Input(String),
    Stage(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Input(_) => 3,
            Failure::Stage(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Input(m) | Failure::Stage(m) => m,
        }
    }
}

impl From<StageError> for Failure {
    fn from(e: StageError) -> Self {
        Failure::Stage(e.to_string())
    }
}

fn input(path: &Path) -> impl FnOnce(Error) -> Failure + '_ {
    move |e| Failure::Input(format!("{}: {e}", path.display()))
}

fn stage(name: &'static str) -> impl FnOnce(Error) -> Failure {
    move |e| Failure::Stage(format!("{name}: {e}"))
}

fn output(path: &Path) -> impl FnOnce(Error) -> Failure + '_ {
    move |e| Failure::Stage(format!("writing {}: {e}", path.display()))
}

fn load_config(path: Option<&Path>) -> Result<Config, Failure> {
    let Some(path) = path else {
        return Ok(Config::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn apply_sampling(cfg: &mut Config, s: &SamplingFlags) {
    if let Some(p) = s.points {
        cfg.resample.points = Some(p);
    }
    if let Some(m) = s.mode {
        cfg.resample.mode = m;
    }
    if let Some(r) = &s.rates {
        cfg.resample.rates = Some(r.clone());
    }
    if let Some(v) = s.v_scale {
        cfg.grid.v_scale = Some(v);
    }
}

fn validate(cfg: &Config) -> Result<(), Failure> {
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))
}

fn run_metadata(cfg: &Config, input: &Path, reference: Option<&Path>) -> RunMetadata {
    RunMetadata {
        input: Some(input.display().to_string()),
        reference: reference.map(|p| p.display().to_string()),
        target: cfg.resample.points,
        config_hash: Some(cfg.hash()),
        seed: cfg.resample.seed,
        config: Some(cfg.to_json_value()),
    }
}

/// `out.ply` -> `out.<suffix>`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn write_reports(
    doc: &ReportDocument,
    report: &QualityReport,
    mesh: &HalfEdgeMesh,
    flags: &ReportFlags,
    default_base: Option<&Path>,
) -> Result<(), Failure> {
    let report_path = flags.report.clone().or_else(|| default_base.map(|b| sibling(b, "report.json")));
    let hist_path = flags.histogram.clone().or_else(|| default_base.map(|b| sibling(b, "hist.csv")));
    match &report_path {
        Some(p) => save_report(doc, p).map_err(output(p))?,
        None => print!("{}", doc.to_json()),
    }
    if let Some(p) = &hist_path {
        save_histogram_csv(&report.histogram, p).map_err(output(p))?;
    }
    if let Some(p) = &flags.colormap {
        let colors = report.vertex_colors();
        let opts = MeshWriteOptions {
            colors: Some(&colors),
            ..Default::default()
        };
        save_mesh(mesh, p, opts).map_err(output(p))?;
    }
    Ok(())
}

fn reconstruct(cli: &Cli, a: &ReconstructArgs) -> Result<(), Failure> {
    let mut cfg = load_config(cli.config.as_deref())?;
    apply_sampling(&mut cfg, &a.sampling);
    if let Some(i) = a.iterations {
        cfg.remesh.iterations = i;
    }
    cfg.remesh.keep_internal_edges |= a.keep_internal_edges;
    cfg.remesh.adaptive |= a.adaptive;
    let cloud = load_point_cloud(&a.input, None).map_err(input(&a.input))?;
    if cfg.resample.points.is_none() {
        cfg.resample.points = Some(cloud.len());
    }
    validate(&cfg)?;

    let out = pipeline::run(&cloud, &cfg)?;
    let mut doc = ReportDocument::new(&out.report, Some(&out.mesh), run_metadata(&cfg, &a.input, Some(&a.input)));
    doc.stages = Some(serde_json::to_value(&out.summary).expect("summary serializes"));

    let opts = MeshWriteOptions {
        classes: cfg.resample.mode == Mode::Edges,
        ..Default::default()
    };
    save_mesh(&out.mesh, &a.output, opts).map_err(output(&a.output))?;
    write_reports(&doc, &out.report, &out.mesh, &a.reports, Some(&a.output))?;
    // Wall-clock times vary between runs, so they stay out of the report.
    let timings: serde_json::Map<String, serde_json::Value> =
        out.timings.iter().map(|(s, t)| (s.to_string(), json!(t))).collect();
    let tp = sibling(&a.output, "timings.json");
    let text = serde_json::to_string_pretty(&json!({ "seconds": timings })).expect("timings serialize") + "\n";
    save_text(&tp, &text).map_err(output(&tp))?;
    log::info!(
        "{} vertices, {} faces, Q_avg {:?}",
        out.mesh.n_vertices(),
        out.mesh.n_faces(),
        out.report.q_avg.value
    );
    Ok(())
}

fn metrics(cli: &Cli, a: &MetricsArgs) -> Result<(), Failure> {
    let cfg = load_config(cli.config.as_deref())?;
    validate(&cfg)?;
    let mesh = load_mesh(&a.mesh)
        .and_then(|m| m.into_halfedge())
        .map_err(input(&a.mesh))?;
    let cloud = load_point_cloud(&a.cloud, None).map_err(input(&a.cloud))?;
    let report = mesh_report(&mesh, Some(&cloud), cfg.metrics.mls_k).map_err(stage("metrics"))?;
    let mut meta = run_metadata(&cfg, &a.mesh, Some(&a.cloud));
    meta.target = None;
    let doc = ReportDocument::new(&report, Some(&mesh), meta);
    write_reports(&doc, &report, &mesh, &a.reports, None)?;
    Ok(())
}

fn preprocess(cli: &Cli, a: &PreprocessArgs) -> Result<(), Failure> {
    let mut cfg = load_config(cli.config.as_deref())?;
    if let Some(k) = a.k {
        cfg.preprocess.k = k;
    }
    if let Some(p) = a.passes {
        cfg.preprocess.passes = p;
    }
    if let Some(s) = a.octree_scale {
        cfg.preprocess.octree_scale = Some(s);
    }
    validate(&cfg)?;
    let cloud = load_point_cloud(&a.input, None).map_err(input(&a.input))?;
    let target = a.points.unwrap_or(0);
    let (out, summary) = pipeline::preprocess_cloud(&cloud, &cfg, target).map_err(stage("preprocess"))?;
    save_point_cloud(&out, &a.output, None).map_err(output(&a.output))?;
    log::info!("{} -> {} points", summary.input_points, summary.candidate_points);
    Ok(())
}

fn resample_cmd(cli: &Cli, a: &ResampleArgs) -> Result<(), Failure> {
    let mut cfg = load_config(cli.config.as_deref())?;
    apply_sampling(&mut cfg, &a.sampling);
    validate(&cfg)?;
    let target = cfg
        .resample
        .points
        .ok_or_else(|| Failure::Usage("--points is required".into()))?;
    let cloud = load_point_cloud(&a.input, None).map_err(input(&a.input))?;
    let out = pipeline::sample(&cloud, &cfg, target)?.cloud;
    save_point_cloud(&out, &a.output, None).map_err(output(&a.output))?;
    Ok(())
}

fn remesh(cli: &Cli, a: &RemeshArgs) -> Result<(), Failure> {
    let mut cfg = load_config(cli.config.as_deref())?;
    if let Some(i) = a.iterations {
        cfg.remesh.iterations = i;
    }
    cfg.remesh.adaptive |= a.adaptive;
    if a.preserve_edges {
        cfg.remesh.preserve_edges = Some(true);
    }
    validate(&cfg)?;
    let mesh = load_mesh(&a.input)
        .and_then(|m| m.into_halfedge())
        .map_err(input(&a.input))?;
    let reference: Option<PointCloud> = match &a.reference {
        Some(p) => Some(load_point_cloud(p, None).map_err(input(p))?),
        None => None,
    };
    let before = mean_quality(&mesh);
    let params = RemeshParams {
        iterations: cfg.remesh.iterations,
        preserve_edges: cfg.remesh.preserve_edges.unwrap_or(false),
        adaptive: cfg.remesh.adaptive,
        guard_two_neighbors: cfg.remesh.guard_two_neighbors,
        target_vertices: a.points,
        ..Default::default()
    };
    let (out, stats) = isotropic_remesh(&mesh, &params).map_err(stage("remesh"))?;
    let report = mesh_report(&out, reference.as_ref(), cfg.metrics.mls_k).map_err(stage("metrics"))?;
    let mut meta = run_metadata(&cfg, &a.input, a.reference.as_deref());
    meta.target = Some(stats.target_vertices);
    let mut doc = ReportDocument::new(&report, Some(&out), meta);
    doc.stages = Some(json!({ "q_avg_before": before, "remesh": stats }));
    let opts = MeshWriteOptions {
        classes: params.preserve_edges,
        ..Default::default()
    };
    save_mesh(&out, &a.output, opts).map_err(output(&a.output))?;
    write_reports(&doc, &report, &out, &a.reports, Some(&a.output))?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::Reconstruct(a) => reconstruct(&cli, a),
        Command::Metrics(a) => metrics(&cli, a),
        Command::Preprocess(a) => preprocess(&cli, a),
        Command::Resample(a) => resample_cmd(&cli, a),
        Command::Remesh(a) => remesh(&cli, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
