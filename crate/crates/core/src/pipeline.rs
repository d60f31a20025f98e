//! End-to-end reconstruction: preprocess, grid, classify, plan, resample,
//! initial mesh, internal edges, remesh and metrics.

use std::fmt;

use serde::Serialize;

use crate::config::{Config, Mode};
use crate::error::{Error, Result};
use crate::geometry::{bounding_box, PointCloud};
use crate::halfedge::{HalfEdgeMesh, VertexClass};
use crate::mesher::{fill_holes, reconstruct_initial, MesherParams, MeshingReport};
use crate::metrics::{mesh_report, QualityReport};
use crate::optimizer::{isotropic_remesh, rebuild_internal_edges, RemeshParams, RemeshStats};
use crate::preprocess::{mls_smooth, octree_uniform, upsample_delaunay, SmoothingParams};
use crate::resample::{classify_by_curvature, classify_edge_points, plan_allocation, resample};
use crate::voxel::{build_grid, scale_for_count, VoxelGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Preprocess,
    Grid,
    Classify,
    Plan,
    Resample,
    Mesh,
    InternalEdges,
    Remesh,
    Metrics,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Preprocess => "preprocess",
            Stage::Grid => "grid",
            Stage::Classify => "classify",
            Stage::Plan => "plan",
            Stage::Resample => "resample",
            Stage::Mesh => "mesh",
            Stage::InternalEdges => "internal-edges",
            Stage::Remesh => "remesh",
            Stage::Metrics => "metrics",
        };
        f.write_str(s)
    }
}

/// A failure tagged with the stage that raised it.
#[derive(Debug, thiserror::Error)]
#[error("{stage}: {source}")]
pub struct StageError {
    pub stage: Stage,
    #[source]
    pub source: Error,
}

trait AtStage<T> {
    fn at(self, stage: Stage) -> std::result::Result<T, StageError>;
}

impl<T> AtStage<T> for Result<T> {
    fn at(self, stage: Stage) -> std::result::Result<T, StageError> {
        self.map_err(|source| StageError { stage, source })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StageSummary {
    pub input_points: usize,
    pub octree_points: usize,
    /// Point count after up-sampling, when the octree output was too
    /// sparse for the target.
    pub upsampled_points: Option<usize>,
    pub candidate_points: usize,
    pub v_scale: f64,
    pub occupied_boxes: usize,
    /// Candidate points per class id.
    pub class_counts: Vec<usize>,
    pub resampled_points: usize,
    pub meshing: MeshingReport,
    /// Boundary loops left after rebuilding internal edges.
    pub internal_edge_loops: Option<usize>,
    pub holes_filled: usize,
    pub remesh: RemeshStats,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub mesh: HalfEdgeMesh,
    pub report: QualityReport,
    pub summary: StageSummary,
    /// The resampled cloud the mesh was built from.
    pub resampled: PointCloud,
    /// Wall-clock seconds per stage; empty where no clock is available.
    pub timings: Vec<(Stage, f64)>,
}

struct Stopwatch {
    #[cfg(not(target_arch = "wasm32"))]
    start: std::time::Instant,
}

impl Stopwatch {
    fn start() -> Self {
        Stopwatch {
            #[cfg(not(target_arch = "wasm32"))]
            start: std::time::Instant::now(),
        }
    }

    fn lap(&mut self, stage: Stage, out: &mut Vec<(Stage, f64)>) {
        #[cfg(not(target_arch = "wasm32"))]
        {
            let now = std::time::Instant::now();
            out.push((stage, (now - self.start).as_secs_f64()));
            self.start = now;
        }
        #[cfg(target_arch = "wasm32")]
        let _ = (stage, out);
    }
}

/// Smoothing passes followed by octree density adjustment; up-samples and
/// re-runs the octree when fewer than twice `target` points remain.
pub fn preprocess_cloud(cloud: &PointCloud, cfg: &Config, target: usize) -> Result<(PointCloud, StageSummary)> {
    let mut summary = StageSummary {
        input_points: cloud.len(),
        ..Default::default()
    };
    let mut smoothed = cloud.clone();
    let params = SmoothingParams {
        k: cfg.preprocess.k,
        h: None,
    };
    for _ in 0..cfg.preprocess.passes {
        smoothed = mls_smooth(&smoothed, &params)?;
    }
    let mut candidates = octree_uniform(&smoothed, cfg.preprocess.octree_scale)?;
    summary.octree_points = candidates.len();
    if candidates.len() < 2 * target && cfg.preprocess.upsample_s > 0 {
        let up = upsample_delaunay(&smoothed, cfg.preprocess.upsample_s)?;
        summary.upsampled_points = Some(up.len());
        let again = octree_uniform(&up, cfg.preprocess.octree_scale)?;
        if again.len() > candidates.len() {
            candidates = again;
        }
    }
    summary.candidate_points = candidates.len();
    Ok((candidates, summary))
}

/// Feature labels for `mode`. Labels already on the cloud are used as
/// given, except in uniform mode.
pub fn classify(cloud: &PointCloud, cfg: &Config) -> Result<Vec<u32>> {
    let rc = &cfg.resample;
    match rc.mode {
        Mode::None => Ok(vec![0; cloud.len()]),
        _ if cloud.labels().is_some() => Ok(cloud.labels().expect("checked").to_vec()),
        Mode::Edges => classify_edge_points(cloud, rc.feature_k, rc.edge_threshold),
        Mode::Curvature => classify_by_curvature(cloud, rc.feature_k, rc.curvature_classes),
    }
}

/// Output of the sampling stages.
#[derive(Debug, Clone)]
pub struct Sampled {
    /// Resampled points carrying their class labels.
    pub cloud: PointCloud,
    /// Grid over the input points.
    pub grid: VoxelGrid,
    /// Input points per class id.
    pub class_counts: Vec<usize>,
}

/// Grid, classify, plan and resample `cloud` down to `target` points.
pub fn sample(cloud: &PointCloud, cfg: &Config, target: usize) -> std::result::Result<Sampled, StageError> {
    sample_timed(cloud, cfg, target, &mut Stopwatch::start(), &mut Vec::new())
}

fn sample_timed(
    cloud: &PointCloud,
    cfg: &Config,
    target: usize,
    clock: &mut Stopwatch,
    timings: &mut Vec<(Stage, f64)>,
) -> std::result::Result<Sampled, StageError> {
    let v_scale = match cfg.grid.v_scale {
        Some(s) => s,
        None => {
            let l = bounding_box(cloud).at(Stage::Grid)?.longest_border();
            scale_for_count(l, target).at(Stage::Grid)?
        }
    };
    let grid = build_grid(cloud, v_scale).at(Stage::Grid)?;
    clock.lap(Stage::Grid, timings);

    let labels = classify(cloud, cfg).at(Stage::Classify)?;
    let rates = cfg.resample.class_rates().at(Stage::Classify)?;
    let mut class_counts = vec![0; rates.len()];
    for &l in &labels {
        if let Some(c) = class_counts.get_mut(l as usize) {
            *c += 1;
        }
    }
    clock.lap(Stage::Classify, timings);

    let plan = plan_allocation(&grid, &labels, target, &rates).at(Stage::Plan)?;
    clock.lap(Stage::Plan, timings);

    let mut labelled = cloud.clone();
    labelled.set_labels(Some(labels)).at(Stage::Resample)?;
    let resampled = resample(&labelled, &grid, &plan).at(Stage::Resample)?;
    clock.lap(Stage::Resample, timings);
    Ok(Sampled {
        cloud: resampled,
        grid,
        class_counts,
    })
}

/// Run every stage on `cloud`.
pub fn run(cloud: &PointCloud, cfg: &Config) -> std::result::Result<PipelineOutput, StageError> {
    cfg.validate().at(Stage::Preprocess)?;
    let target = cfg
        .resample
        .points
        .ok_or_else(|| Error::InvalidParam("resample.points (the output vertex count) is required".into()))
        .at(Stage::Plan)?;
    let mut timings = Vec::new();
    let mut clock = Stopwatch::start();

    let (candidates, mut summary) = preprocess_cloud(cloud, cfg, target).at(Stage::Preprocess)?;
    clock.lap(Stage::Preprocess, &mut timings);

    let sampled = sample_timed(&candidates, cfg, target, &mut clock, &mut timings)?;
    summary.v_scale = sampled.grid.scale();
    summary.occupied_boxes = sampled.grid.occupied();
    summary.class_counts = sampled.class_counts;
    summary.resampled_points = sampled.cloud.len();
    let (grid, resampled) = (sampled.grid, sampled.cloud);

    let mesh_grid = grid.rebucket(resampled.points()).at(Stage::Mesh)?;
    let mesher = MesherParams {
        k: cfg.mesh.k,
        hole_fill_max: cfg.mesh.hole_fill_max,
    };
    let (mesh, meshing) = reconstruct_initial(&resampled, &mesh_grid, &mesher).at(Stage::Mesh)?;
    summary.meshing = meshing;
    let classes: Vec<VertexClass> = (0..resampled.len())
        .map(|i| {
            if cfg.resample.mode == Mode::Edges && resampled.label(i) == 1 {
                VertexClass::ExternalEdge
            } else {
                VertexClass::Ordinary
            }
        })
        .collect();
    let mesh = mesh.with_classes(classes);
    clock.lap(Stage::Mesh, &mut timings);

    let mesh = if cfg.remesh.keep_internal_edges {
        let rebuilt = rebuild_internal_edges(&mesh, &mesh_grid).at(Stage::InternalEdges)?;
        // Close only the openings that can be closed without crossing
        // non-adjacent boxes.
        let legal_grid = mesh_grid.rebucket(rebuilt.positions()).at(Stage::InternalEdges)?;
        let (filled, n) = fill_holes(&rebuilt, None, Some(&legal_grid)).at(Stage::InternalEdges)?;
        summary.holes_filled = n;
        summary.internal_edge_loops = Some(filled.boundary_loops().len());
        filled
    } else {
        let (filled, n) = fill_holes(&mesh, None, None).at(Stage::InternalEdges)?;
        summary.holes_filled = n;
        filled
    };
    clock.lap(Stage::InternalEdges, &mut timings);

    let remesh = RemeshParams {
        iterations: cfg.remesh.iterations,
        preserve_edges: cfg
            .remesh
            .preserve_edges
            .unwrap_or(cfg.resample.mode == Mode::Edges),
        adaptive: cfg.remesh.adaptive,
        guard_two_neighbors: cfg.remesh.guard_two_neighbors,
        target_vertices: Some(resampled.len()),
        ..Default::default()
    };
    let (mesh, stats) = isotropic_remesh(&mesh, &remesh).at(Stage::Remesh)?;
    summary.remesh = stats;
    clock.lap(Stage::Remesh, &mut timings);

    let report = mesh_report(&mesh, Some(cloud), cfg.metrics.mls_k).at(Stage::Metrics)?;
    clock.lap(Stage::Metrics, &mut timings);

    Ok(PipelineOutput {
        mesh,
        report,
        summary,
        resampled,
        timings,
    })
}
