//! JSON quality reports and histogram CSV.

use serde::Serialize;

use crate::halfedge::HalfEdgeMesh;
use crate::metrics::{Histogram, MlsError, QualityReport, Stat};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramDoc {
    pub bin_edges_deg: Vec<f64>,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeshSummary {
    pub vertices: usize,
    pub edges: usize,
    pub faces: usize,
    pub boundary_loops: usize,
    pub euler_characteristic: i64,
    pub components: usize,
}

impl MeshSummary {
    pub fn of(mesh: &HalfEdgeMesh) -> Self {
        MeshSummary {
            vertices: mesh.n_vertices(),
            edges: mesh.n_edges(),
            faces: mesh.n_faces(),
            boundary_loops: mesh.boundary_loops().len(),
            euler_characteristic: mesh.euler_characteristic(),
            components: mesh.components().len(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunMetadata {
    pub input: Option<String>,
    pub reference: Option<String>,
    pub target: Option<usize>,
    pub config_hash: Option<String>,
    pub seed: Option<u64>,
    pub config: Option<serde_json::Value>,
}

/// Everything written to a JSON report, in a fixed key order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportDocument {
    pub triangle_count: usize,
    pub theta_min: Stat,
    pub theta_avg: Stat,
    pub q_min: Stat,
    pub q_avg: Stat,
    pub histogram: HistogramDoc,
    pub mls_error: Option<MlsError>,
    pub mesh: Option<MeshSummary>,
    pub run: RunMetadata,
    /// Stage-specific counters supplied by the caller.
    pub stages: Option<serde_json::Value>,
}

impl ReportDocument {
    pub fn new(report: &QualityReport, mesh: Option<&HalfEdgeMesh>, run: RunMetadata) -> Self {
        ReportDocument {
            triangle_count: report.triangle_count,
            theta_min: report.theta_min,
            theta_avg: report.theta_avg,
            q_min: report.q_min,
            q_avg: report.q_avg,
            histogram: HistogramDoc {
                bin_edges_deg: report.histogram.edges_deg.clone(),
                counts: report.histogram.counts.clone(),
            },
            mls_error: report.mls,
            mesh: mesh.map(MeshSummary::of),
            run,
            stages: None,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Rows `bin_start_deg,bin_end_deg,count` under a header line.
pub fn histogram_csv(h: &Histogram) -> String {
    let mut s = String::from("bin_start_deg,bin_end_deg,count\n");
    for (i, c) in h.counts.iter().enumerate() {
        s.push_str(&format!("{},{},{}\n", h.edges_deg[i], h.edges_deg[i + 1], c));
    }
    s
}
