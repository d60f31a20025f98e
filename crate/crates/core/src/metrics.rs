//! Mesh quality evaluation: triangle quality `Q`, minimum angles, angle
//! histograms, per-vertex color maps and MLS geometric error.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{local_frame, Point, PointCloud};
use crate::halfedge::HalfEdgeMesh;
use crate::knn::NeighborIndex;
use crate::preprocess::compute_h;

/// Triangles with `Q` below this make `Q_min` unreportable.
pub const QUALITY_FLOOR: f64 = 0.1;
/// Triangles with a minimum angle below this (degrees) make `θ_min`
/// unreportable.
pub const ANGLE_FLOOR_DEG: f64 = 5.0;

pub const HISTOGRAM_BINS: usize = 60;
pub const HISTOGRAM_MAX_DEG: f64 = 60.0;

const MLS_MAX_ITERS: usize = 20;
const MLS_TOL: f64 = 1e-6;

/// `(6/√3) · inradius / longest edge`: 1 for equilateral triangles, 0 for
/// degenerate ones.
pub fn triangle_quality(a: &Point, b: &Point, c: &Point) -> f64 {
    let la = (b - c).norm();
    let lb = (c - a).norm();
    let lc = (a - b).norm();
    let longest = la.max(lb).max(lc);
    let perimeter = la + lb + lc;
    if longest <= 0.0 {
        return 0.0;
    }
    let area = 0.5 * (b - a).cross(&(c - a)).norm();
    let inradius = 2.0 * area / perimeter;
    (6.0 / 3f64.sqrt() * inradius / longest).clamp(0.0, 1.0)
}

/// Interior angle at `p` (radians) between rays to `q` and `r`.
fn corner_angle(p: &Point, q: &Point, r: &Point) -> f64 {
    let u = q - p;
    let v = r - p;
    let nu = u.norm();
    let nv = v.norm();
    if nu == 0.0 || nv == 0.0 {
        return 0.0;
    }
    // atan2 stays accurate for angles close to 0 and π.
    u.cross(&v).norm().atan2(u.dot(&v))
}

/// Interior angles (degrees) at `a`, `b` and `c`.
pub fn corner_angles_deg(a: &Point, b: &Point, c: &Point) -> [f64; 3] {
    let area2 = (b - a).cross(&(c - a)).norm();
    if area2 <= 0.0 {
        return [0.0; 3];
    }
    [
        corner_angle(a, b, c).to_degrees(),
        corner_angle(b, c, a).to_degrees(),
        corner_angle(c, a, b).to_degrees(),
    ]
}

/// Smallest interior angle in degrees; 0 for degenerate triangles.
pub fn min_angle(a: &Point, b: &Point, c: &Point) -> f64 {
    let [x, y, z] = corner_angles_deg(a, b, c);
    x.min(y).min(z)
}

/// Why a statistic is not reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NanReason {
    BelowQualityFloor,
    EmptyMesh,
}

/// A reported number, or the marker that replaces it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub value: Option<f64>,
    pub reason: Option<NanReason>,
}

impl Stat {
    pub fn value(v: f64) -> Self {
        Stat {
            value: Some(v),
            reason: None,
        }
    }

    pub fn nan(reason: NanReason) -> Self {
        Stat {
            value: None,
            reason: Some(reason),
        }
    }

    pub fn is_nan(&self) -> bool {
        self.value.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// Bin edges in degrees; one more than the number of bins.
    pub edges_deg: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn new(bins: usize, max_deg: f64) -> Self {
        Histogram {
            edges_deg: (0..=bins)
                .map(|i| max_deg * i as f64 / bins as f64)
                .collect(),
            counts: vec![0; bins],
        }
    }

    /// Add a value; values at or past the top edge land in the last bin.
    pub fn add(&mut self, deg: f64) {
        let bins = self.counts.len();
        let max = *self.edges_deg.last().expect("histogram has edges");
        let b = ((deg / max * bins as f64).floor().max(0.0) as usize).min(bins - 1);
        self.counts[b] += 1;
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlsError {
    /// Largest displacement onto the MLS surface, over the bounding-box
    /// diagonal.
    pub max: f64,
    pub avg: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QualityReport {
    pub triangle_count: usize,
    pub q_min: Stat,
    pub q_avg: Stat,
    pub theta_min: Stat,
    pub theta_avg: Stat,
    pub histogram: Histogram,
    /// Smallest corner angle at each vertex in degrees; `None` for vertices
    /// without faces.
    pub vertex_min_angles: Vec<Option<f64>>,
    pub mls: Option<MlsError>,
}

impl QualityReport {
    /// Report for a mesh with no faces: every statistic is marked.
    pub fn empty(vertices: usize) -> Self {
        QualityReport {
            triangle_count: 0,
            q_min: Stat::nan(NanReason::EmptyMesh),
            q_avg: Stat::nan(NanReason::EmptyMesh),
            theta_min: Stat::nan(NanReason::EmptyMesh),
            theta_avg: Stat::nan(NanReason::EmptyMesh),
            histogram: Histogram::new(HISTOGRAM_BINS, HISTOGRAM_MAX_DEG),
            vertex_min_angles: vec![None; vertices],
            mls: None,
        }
    }

    /// Per-vertex RGB colors from the vertex minimum angles.
    pub fn vertex_colors(&self) -> Vec<[u8; 3]> {
        self.vertex_min_angles
            .iter()
            .map(|a| angle_color(a.unwrap_or(0.0)))
            .collect()
    }
}

/// Blue (0°) through green (30°) to red (60°), clamped.
pub fn angle_color(deg: f64) -> [u8; 3] {
    let t = (deg / HISTOGRAM_MAX_DEG).clamp(0.0, 1.0);
    let c = |x: f64| (x * 255.0).round() as u8;
    if t < 0.5 {
        let s = 2.0 * t;
        [0, c(s), c(1.0 - s)]
    } else {
        let s = 2.0 * t - 1.0;
        [c(s), c(1.0 - s), 0]
    }
}

/// Per-triangle `Q` and minimum angles.
pub fn triangle_stats(mesh: &HalfEdgeMesh) -> (Vec<f64>, Vec<f64>) {
    let p = mesh.positions();
    mesh.faces()
        .iter()
        .map(|t| {
            let (a, b, c) = (&p[t[0]], &p[t[1]], &p[t[2]]);
            (triangle_quality(a, b, c), min_angle(a, b, c))
        })
        .unzip()
}

/// Mean triangle quality; 0 for a mesh without faces.
pub fn mean_quality(mesh: &HalfEdgeMesh) -> f64 {
    let (q, _) = triangle_stats(mesh);
    if q.is_empty() {
        0.0
    } else {
        q.iter().sum::<f64>() / q.len() as f64
    }
}

/// Quality statistics of `mesh`, with MLS error against `original` when
/// given (`mls_k` neighbors per projection).
pub fn mesh_report(
    mesh: &HalfEdgeMesh,
    original: Option<&PointCloud>,
    mls_k: usize,
) -> Result<QualityReport> {
    if mesh.n_faces() == 0 {
        return Err(Error::EmptyMesh);
    }
    let (qs, thetas) = triangle_stats(mesh);
    let n = qs.len() as f64;
    let fold_min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    let q_min = fold_min(&qs);
    let theta_min = fold_min(&thetas);
    let mut histogram = Histogram::new(HISTOGRAM_BINS, HISTOGRAM_MAX_DEG);
    for &t in &thetas {
        histogram.add(t);
    }

    let p = mesh.positions();
    let mut vertex_min: Vec<Option<f64>> = vec![None; mesh.n_vertices()];
    for t in mesh.faces() {
        let angles = corner_angles_deg(&p[t[0]], &p[t[1]], &p[t[2]]);
        for k in 0..3 {
            let slot = &mut vertex_min[t[k]];
            *slot = Some(slot.map_or(angles[k], |m: f64| m.min(angles[k])));
        }
    }

    let mls = match original {
        Some(cloud) => Some(mls_error(mesh, cloud, mls_k)?),
        None => None,
    };

    let floor_stat = |v: f64, floor: f64| {
        if v < floor {
            Stat::nan(NanReason::BelowQualityFloor)
        } else {
            Stat::value(v)
        }
    };
    Ok(QualityReport {
        triangle_count: qs.len(),
        q_min: floor_stat(q_min, QUALITY_FLOOR),
        q_avg: Stat::value(qs.iter().sum::<f64>() / n),
        theta_min: floor_stat(theta_min, ANGLE_FLOOR_DEG),
        theta_avg: Stat::value(thetas.iter().sum::<f64>() / n),
        histogram,
        vertex_min_angles: vertex_min,
        mls,
    })
}

/// Distance of every mesh vertex to the MLS surface of `original`, as a
/// fraction of the cloud's bounding-box diagonal.
///
/// Each vertex is moved onto the Gaussian-weighted least-squares plane of
/// its `k` nearest cloud points until the step falls below `1e-6 · diag`
/// (at most 20 steps).
pub fn mls_error(mesh: &HalfEdgeMesh, original: &PointCloud, k: usize) -> Result<MlsError> {
    let h = compute_h(original, k)?;
    let diag = original.diag();
    if diag <= 0.0 {
        return Err(Error::DegenerateInput("reference cloud has zero extent".into()));
    }
    let index = NeighborIndex::from_cloud(original);
    let results = crate::par::map_slice(mesh.positions(), |x0| {
        project_to_mls(&index, original, x0, k, h, MLS_TOL * diag)
    });
    let total = results.len();
    let failed = results.iter().filter(|r| r.is_none()).count();
    if total > 0 && failed * 100 > total {
        return Err(Error::ProjectionUnstable { failed, total });
    }
    let mut max = 0.0f64;
    let mut sum = 0.0;
    let mut count = 0usize;
    for (x0, r) in mesh.positions().iter().zip(&results) {
        if let Some(x) = r {
            let d = (x - x0).norm() / diag;
            max = max.max(d);
            sum += d;
            count += 1;
        }
    }
    Ok(MlsError {
        max,
        avg: if count > 0 { sum / count as f64 } else { 0.0 },
    })
}

pub(crate) fn project_to_mls(
    index: &NeighborIndex,
    cloud: &PointCloud,
    x0: &Point,
    k: usize,
    h: f64,
    tol: f64,
) -> Option<Point> {
    let mut x = *x0;
    for _ in 0..MLS_MAX_ITERS {
        let nbrs = index.knn(&x, k, None);
        let d0 = nbrs.first()?.distance;
        // Shifting every exponent by the nearest distance leaves the
        // normalized weights unchanged and avoids underflow.
        let weights: Vec<f64> = nbrs
            .iter()
            .map(|n| {
                if h > 0.0 {
                    (-(n.distance * n.distance - d0 * d0) / (h * h)).exp()
                } else {
                    1.0
                }
            })
            .collect();
        let frame = local_frame(nbrs.iter().map(|n| cloud.point(n.index)), Some(&weights))?;
        let offset = (x - frame.centroid).dot(&frame.normal);
        let next = x - frame.normal * offset;
        let step = (next - x).norm();
        x = next;
        if step < tol {
            return Some(x);
        }
    }
    None
}
