//! Point cloud pre-processing: MLS denoising, octree density adjustment and
//! Delaunay-based up-sampling.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::geometry::{bounding_box, local_frame, triangle_area, Point, PointCloud};
use crate::knn::NeighborIndex;
use crate::mesher::{reconstruct_initial, MesherParams};
use crate::voxel::{build_grid, default_scale};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingParams {
    /// Neighbors per point, not counting the point itself.
    pub k: usize,
    /// Gaussian bandwidth; computed with [`compute_h`] when `None`.
    pub h: Option<f64>,
}

impl Default for SmoothingParams {
    fn default() -> Self {
        SmoothingParams { k: 8, h: None }
    }
}

/// Largest distance from any point to its `k`-th nearest neighbor.
pub fn compute_h(cloud: &PointCloud, k: usize) -> Result<f64> {
    compute_h_with(&NeighborIndex::from_cloud(cloud), k)
}

fn compute_h_with(index: &NeighborIndex, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidParam("k must be at least 1".into()));
    }
    if index.len() <= k {
        return Err(Error::InsufficientPoints {
            needed: k,
            got: index.len(),
        });
    }
    let kth = crate::par::map_range(index.len(), |i| {
        index.neighbors_of(i, k, false)[k - 1].distance
    });
    Ok(kth.into_iter().fold(0.0, f64::max))
}

/// One pass of Gaussian-weighted neighborhood averaging,
/// `p' = Σ θ(‖p − q‖) q / Σ θ(‖p − q‖)` over the `k` nearest neighbors and
/// the point itself, with `θ(d) = exp(−d²/h²)`.
pub fn mls_smooth(cloud: &PointCloud, params: &SmoothingParams) -> Result<PointCloud> {
    if let Some(h) = params.h {
        if !(h > 0.0) {
            return Err(Error::InvalidParam(format!("bandwidth must be > 0, got {h}")));
        }
    }
    let index = NeighborIndex::from_cloud(cloud);
    let h = match params.h {
        Some(h) => h,
        None => compute_h_with(&index, params.k)?,
    };
    if cloud.len() <= params.k {
        return Err(Error::InsufficientPoints {
            needed: params.k,
            got: cloud.len(),
        });
    }
    let moved = crate::par::map_range(cloud.len(), |i| {
        let p = cloud.point(i);
        let mut acc = p.coords;
        let mut total = 1.0;
        for n in index.neighbors_of(i, params.k, false) {
            let w = if h > 0.0 {
                (-(n.distance * n.distance) / (h * h)).exp()
            } else {
                1.0
            };
            acc += cloud.point(n.index).coords * w;
            total += w;
        }
        Point::from(acc / total)
    });
    cloud.with_positions(moved)
}

/// Mean distance from each point to its nearest neighbor.
pub fn mean_nn_distance(cloud: &PointCloud) -> Result<f64> {
    if cloud.len() < 2 {
        return Err(Error::InsufficientPoints {
            needed: 1,
            got: cloud.len(),
        });
    }
    let index = NeighborIndex::from_cloud(cloud);
    let d = crate::par::map_range(cloud.len(), |i| index.neighbors_of(i, 1, false)[0].distance);
    Ok(d.iter().sum::<f64>() / d.len() as f64)
}

/// Keep one point per occupied cube of edge `scale` (default: the mean
/// nearest-neighbor distance): the input point closest to the cube center.
/// Output preserves input order.
pub fn octree_uniform(cloud: &PointCloud, scale: Option<f64>) -> Result<PointCloud> {
    if cloud.is_empty() {
        return Err(Error::EmptyInput);
    }
    let scale = match scale {
        Some(s) if !(s > 0.0 && s.is_finite()) => {
            return Err(Error::InvalidParam(format!("octree scale must be > 0, got {s}")))
        }
        Some(s) => s,
        None if cloud.len() == 1 => return Ok(cloud.clone()),
        None => mean_nn_distance(cloud)?,
    };
    if scale <= 0.0 {
        // Every point coincides with its nearest neighbor.
        return Ok(cloud.subset(&[0]));
    }
    let origin = bounding_box(cloud)?.min;
    let mut best: HashMap<[i64; 3], (f64, usize)> = HashMap::new();
    for (i, p) in cloud.points().iter().enumerate() {
        let key = [0, 1, 2].map(|a| ((p[a] - origin[a]) / scale).floor() as i64);
        let center = Point::new(
            origin.x + (key[0] as f64 + 0.5) * scale,
            origin.y + (key[1] as f64 + 0.5) * scale,
            origin.z + (key[2] as f64 + 0.5) * scale,
        );
        let d = (p - center).norm_squared();
        let slot = best.entry(key).or_insert((d, i));
        if d < slot.0 {
            *slot = (d, i);
        }
    }
    let mut keep: Vec<usize> = best.into_values().map(|(_, i)| i).collect();
    keep.sort_unstable();
    Ok(cloud.subset(&keep))
}

fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor().max(0.0) as usize
}

/// Number of points inserted on one edge for an interior budget `s`:
/// `round(√(2s + 1/2) − 1/√2)`, rounding halves up.
pub fn edge_insert_count(s: usize) -> usize {
    let x = (2.0 * s as f64 + 0.5).sqrt() - std::f64::consts::FRAC_1_SQRT_2;
    // Absorb the last-bit error of sqrt so s = 0 yields exactly 0.
    round_half_up(x - 1e-12)
}

/// Insert points on the edges and inside the triangles of a provisional
/// triangulation of `cloud`.
///
/// A triangle of area `A` gets budget `s_t = round(s · A / Ā)`; its edges
/// receive `edge_insert_count(s_t)` evenly spaced points (shared edges take
/// the larger count and appear once) and its interior receives the interior
/// nodes of the matching barycentric lattice.
pub fn upsample_delaunay(cloud: &PointCloud, s: usize) -> Result<PointCloud> {
    if cloud.len() < 3 {
        return Err(Error::DegenerateInput("fewer than three points".into()));
    }
    let frame = local_frame(cloud.points(), None).ok_or(Error::EmptyInput)?;
    let spread = frame.eigenvalues[2];
    if frame.eigenvalues[1] <= 1e-12 * spread.max(f64::MIN_POSITIVE) {
        return Err(Error::DegenerateInput("points are collinear".into()));
    }
    if edge_insert_count(s) == 0 {
        return Ok(cloud.clone());
    }
    let grid = build_grid(cloud, default_scale(cloud)?)?;
    let (mesh, _) = reconstruct_initial(cloud, &grid, &MesherParams::default())?;
    let p = mesh.positions();
    let faces = mesh.faces();
    if faces.is_empty() {
        return Ok(cloud.clone());
    }
    let areas: Vec<f64> = faces
        .iter()
        .map(|t| triangle_area(&p[t[0]], &p[t[1]], &p[t[2]]))
        .collect();
    let mean_area = areas.iter().sum::<f64>() / areas.len() as f64;
    let face_sl: Vec<usize> = areas
        .iter()
        .map(|&a| {
            let st = if mean_area > 0.0 {
                round_half_up(s as f64 * a / mean_area)
            } else {
                s
            };
            edge_insert_count(st)
        })
        .collect();

    let mut edge_sl: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (t, &sl) in faces.iter().zip(&face_sl) {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            let e = edge_sl.entry((a.min(b), a.max(b))).or_insert(0);
            *e = (*e).max(sl);
        }
    }

    let mut points = cloud.points().to_vec();
    let mut labels = cloud.labels().map(<[u32]>::to_vec);
    let shared = |ids: &[usize]| -> u32 {
        let l0 = cloud.label(ids[0]);
        if ids.iter().all(|&i| cloud.label(i) == l0) {
            l0
        } else {
            0
        }
    };
    for (&(a, b), &sl) in &edge_sl {
        for i in 1..=sl {
            let t = i as f64 / (sl + 1) as f64;
            points.push(p[a] + (p[b] - p[a]) * t);
            if let Some(l) = labels.as_mut() {
                l.push(shared(&[a, b]));
            }
        }
    }
    for (t, &sl) in faces.iter().zip(&face_sl) {
        let n = sl + 1;
        for i in 1..n {
            for j in 1..n - i {
                let k = n - i - j;
                let w = [i, j, k].map(|x| x as f64 / n as f64);
                let q = p[t[0]].coords * w[0] + p[t[1]].coords * w[1] + p[t[2]].coords * w[2];
                points.push(Point::from(q));
                if let Some(l) = labels.as_mut() {
                    l.push(shared(t));
                }
            }
        }
    }
    let mut out = PointCloud::new(points)?;
    out.set_labels(labels)?;
    Ok(out)
}
