//! Browser bindings: generate a synthetic cloud, resample it and
//! reconstruct a mesh, handing flat arrays back to JavaScript.

use std::f64::consts::TAU;

use wasm_bindgen::prelude::*;
use voxmesh::config::{Config, Mode};
use voxmesh::io::{ReportDocument, RunMetadata};
use voxmesh::metrics::QualityReport;
use voxmesh::{pipeline, HalfEdgeMesh, Point, PointCloud, VertexClass};

const GOLDEN: f64 = 0.618_033_988_749_894_9;
const PLASTIC_A: f64 = 0.754_877_666_246_692_7;
const PLASTIC_B: f64 = 0.569_840_290_998_053_2;

/// Point `i` of the 2D additive recurrence, in the unit square.
fn r2(i: usize) -> (f64, f64) {
    let i = i as f64 + 0.5;
    ((i * PLASTIC_A).fract(), (i * PLASTIC_B).fract())
}

fn sphere(n: usize) -> Vec<Point> {
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let rho = (1.0 - z * z).sqrt();
            let phi = TAU * (i as f64 * GOLDEN).fract();
            Point::new(rho * phi.cos(), rho * phi.sin(), z)
        })
        .collect()
}

fn cube(n: usize) -> Vec<Point> {
    (0..n)
        .map(|i| {
            let face = i % 6;
            let (u, v) = r2(i / 6);
            let mut c = [0.0; 3];
            let axis = face / 2;
            c[axis] = if face % 2 == 0 { -0.5 } else { 0.5 };
            c[(axis + 1) % 3] = u - 0.5;
            c[(axis + 2) % 3] = v - 0.5;
            Point::new(c[0], c[1], c[2])
        })
        .collect()
}

fn torus(n: usize) -> Vec<Point> {
    let (big, r) = (1.0, 0.35);
    let mut out = Vec::with_capacity(n);
    let mut i = 0;
    while out.len() < n {
        let (a, b) = r2(i);
        let w = ((i as f64 + 0.5) * GOLDEN).fract();
        i += 1;
        let (u, v) = (TAU * a, TAU * b);
        let rho = big + r * v.cos();
        // Keep the density uniform over the surface.
        if w * (big + r) <= rho {
            out.push(Point::new(rho * u.cos(), rho * u.sin(), r * v.sin()));
        }
    }
    out
}

fn shape(name: &str, n: usize) -> voxmesh::Result<PointCloud> {
    let pts = match name {
        "sphere" => sphere(n),
        "cube" => cube(n),
        "torus" => torus(n),
        _ => return Err(voxmesh::Error::InvalidParam(format!("unknown shape '{name}'"))),
    };
    PointCloud::new(pts)
}

fn flat(points: &[Point]) -> Vec<f32> {
    points.iter().flat_map(|p| [p.x as f32, p.y as f32, p.z as f32]).collect()
}

fn config(target: usize, mode: &str, iterations: Option<usize>) -> voxmesh::Result<Config> {
    let mut cfg = Config::default();
    cfg.resample.points = Some(target);
    cfg.resample.mode = mode.parse::<Mode>()?;
    if let Some(it) = iterations {
        cfg.remesh.iterations = it;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub struct Demo {
    cloud: PointCloud,
    sample: Option<PointCloud>,
    mesh: Option<(HalfEdgeMesh, QualityReport)>,
}

impl Demo {
    fn build(shape_name: &str, points: usize) -> voxmesh::Result<Demo> {
        Ok(Demo {
            cloud: shape(shape_name, points)?,
            sample: None,
            mesh: None,
        })
    }

    fn try_resample(&mut self, target: usize, mode: &str) -> Result<usize, String> {
        let cfg = config(target, mode, None).map_err(|e| e.to_string())?;
        let s = pipeline::sample(&self.cloud, &cfg, target).map_err(|e| e.to_string())?;
        let n = s.cloud.len();
        self.sample = Some(s.cloud);
        Ok(n)
    }

    fn try_reconstruct(&mut self, target: usize, mode: &str, iterations: usize) -> Result<String, String> {
        let cfg = config(target, mode, Some(iterations)).map_err(|e| e.to_string())?;
        let out = pipeline::run(&self.cloud, &cfg).map_err(|e| e.to_string())?;
        let run = RunMetadata {
            target: Some(target),
            config_hash: Some(cfg.hash()),
            ..Default::default()
        };
        let mut doc = ReportDocument::new(&out.report, Some(&out.mesh), run);
        doc.stages = serde_json::to_value(&out.summary).ok();
        self.sample = Some(out.resampled);
        self.mesh = Some((out.mesh, out.report));
        Ok(doc.to_json())
    }
}

#[wasm_bindgen]
impl Demo {
    /// `shape` is one of `sphere`, `cube` or `torus`.
    #[wasm_bindgen(constructor)]
    pub fn new(shape: &str, points: usize) -> Result<Demo, JsError> {
        Demo::build(shape, points).map_err(js_err)
    }

    pub fn input_points(&self) -> Vec<f32> {
        flat(self.cloud.points())
    }

    /// Resample the input; returns the number of points kept.
    pub fn resample(&mut self, target: usize, mode: &str) -> Result<usize, JsError> {
        self.try_resample(target, mode).map_err(js_err)
    }

    pub fn sample_points(&self) -> Vec<f32> {
        self.sample.as_ref().map(|c| flat(c.points())).unwrap_or_default()
    }

    /// Class id per sample point; zeros when the sample is unlabeled.
    pub fn sample_labels(&self) -> Vec<u32> {
        match &self.sample {
            Some(c) => (0..c.len()).map(|i| c.label(i)).collect(),
            None => Vec::new(),
        }
    }

    /// Run the whole pipeline; returns the JSON quality report.
    pub fn reconstruct(&mut self, target: usize, mode: &str, iterations: usize) -> Result<String, JsError> {
        self.try_reconstruct(target, mode, iterations).map_err(js_err)
    }

    pub fn mesh_positions(&self) -> Vec<f32> {
        self.mesh.as_ref().map(|(m, _)| flat(m.positions())).unwrap_or_default()
    }

    pub fn mesh_faces(&self) -> Vec<u32> {
        match &self.mesh {
            Some((m, _)) => m.faces().iter().flatten().map(|&v| v as u32).collect(),
            None => Vec::new(),
        }
    }

    /// RGB per vertex from the smallest incident angle.
    pub fn mesh_colors(&self) -> Vec<u8> {
        match &self.mesh {
            Some((_, r)) => r.vertex_colors().into_iter().flatten().collect(),
            None => Vec::new(),
        }
    }

    /// 1 for external-edge vertices, 0 otherwise.
    pub fn mesh_edge_flags(&self) -> Vec<u8> {
        match &self.mesh {
            Some((m, _)) => m
                .classes()
                .iter()
                .map(|c| u8::from(*c == VertexClass::ExternalEdge))
                .collect(),
            None => Vec::new(),
        }
    }

    /// Triangle minimum-angle histogram counts.
    pub fn histogram(&self) -> Vec<u32> {
        match &self.mesh {
            Some((_, r)) => r.histogram.counts.iter().map(|&c| c as u32).collect(),
            None => Vec::new(),
        }
    }
}
