use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Point, Vector};
use crate::halfedge::{HalfEdgeMesh, VertexClass};
use crate::metrics::{corner_angles_deg, mean_quality};
use crate::resample::quantile_classes;

use super::edit::EditMesh;
use super::mean_edge_length;

const SPLIT_RATIO: f64 = 4.0 / 3.0;
const COLLAPSE_RATIO: f64 = 4.0 / 5.0;
const SMOOTHING: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct RemeshParams {
    pub iterations: usize,
    /// Protect vertices classed as external edge.
    pub preserve_edges: bool,
    /// Scale the target length per vertex by curvature class.
    pub adaptive: bool,
    /// Guard external-edge vertices with two or more external-edge
    /// neighbors instead of more than two.
    pub guard_two_neighbors: bool,
    /// Vertex count to hold; defaults to the input count.
    pub target_vertices: Option<usize>,
    pub adaptive_classes: usize,
    pub adaptive_rates: Vec<f64>,
}

impl Default for RemeshParams {
    fn default() -> Self {
        RemeshParams {
            iterations: 5,
            preserve_edges: true,
            adaptive: false,
            guard_two_neighbors: false,
            target_vertices: None,
            adaptive_classes: 5,
            adaptive_rates: vec![2.0, 3.0, 4.0, 5.0, 6.0],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IterationStats {
    pub mean_length: f64,
    pub splits: usize,
    /// Extra splits of the longest edges to reach the vertex target.
    pub fill_splits: usize,
    pub collapses: usize,
    /// Extra collapses of the shortest edges to come down to the target.
    pub trim_collapses: usize,
    pub flips: usize,
    pub vertices: usize,
    pub q_avg: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RemeshStats {
    pub initial_q_avg: f64,
    pub target_vertices: usize,
    pub iterations: Vec<IterationStats>,
    /// Output vertex count minus target; nonzero when the collapse budget
    /// could not be met.
    pub deficit: i64,
}

/// Isotropic remeshing: per iteration split long edges, collapse short ones
/// down to the vertex target, flip towards regular valence and smooth
/// tangentially. Boundary vertices never move or vanish.
pub fn isotropic_remesh(mesh: &HalfEdgeMesh, params: &RemeshParams) -> Result<(HalfEdgeMesh, RemeshStats)> {
    if params.iterations == 0 {
        return Err(Error::InvalidParam("remesh.iterations must be at least 1".into()));
    }
    if mesh.n_faces() == 0 {
        return Err(Error::EmptyMesh);
    }
    let mut em = EditMesh::from_halfedge(mesh);
    let target = params.target_vertices.unwrap_or(em.n_vertices());
    if params.adaptive {
        let l = mean_edge_length(mesh)?;
        let t = adaptive_target_length(mesh, params.adaptive_classes, &params.adaptive_rates)?;
        em.set_scales(t.into_iter().map(|x| x / l).collect());
    }
    let mut stats = RemeshStats {
        initial_q_avg: mean_quality(mesh),
        target_vertices: target,
        ..Default::default()
    };
    let mut out = mesh.clone();
    for it in 0..params.iterations {
        let mut s = IterationStats::default();
        let edges = em.edges();
        s.mean_length = edges.iter().map(|&(a, b)| em.length(a, b)).sum::<f64>() / edges.len() as f64;
        let l = free_length(&em, &edges, target, params);
        let goal = |em: &EditMesh, a: usize, b: usize| l * 0.5 * (em.scale(a) + em.scale(b));

        // Split.
        let mut long: Vec<(f64, usize, usize)> = edges
            .iter()
            .map(|&(a, b)| (em.length(a, b), a, b))
            .filter(|&(len, a, b)| len > SPLIT_RATIO * goal(&em, a, b))
            .collect();
        long.sort_by(|x, y| y.0.total_cmp(&x.0).then((x.1, x.2).cmp(&(y.1, y.2))));
        for (_, a, b) in long {
            if em.split_edge(a, b).is_some() {
                s.splits += 1;
            }
        }
        let short = target.saturating_sub(em.n_vertices());
        if short > 0 {
            let mut by_len: Vec<(f64, usize, usize)> =
                em.edges().into_iter().map(|(a, b)| (em.length(a, b), a, b)).collect();
            by_len.sort_by(|x, y| y.0.total_cmp(&x.0).then((x.1, x.2).cmp(&(y.1, y.2))));
            for (_, a, b) in by_len.into_iter().take(short) {
                if em.split_edge(a, b).is_some() {
                    s.fill_splits += 1;
                }
            }
        }

        // Collapse.
        let budget = em.n_vertices().saturating_sub(target);
        if budget > 0 {
            let mut short: Vec<(f64, usize, usize)> = em
                .edges()
                .into_iter()
                .map(|(a, b)| (em.length(a, b), a, b))
                .filter(|&(len, a, b)| len < COLLAPSE_RATIO * goal(&em, a, b))
                .collect();
            short.sort_by(|x, y| x.0.total_cmp(&y.0).then((x.1, x.2).cmp(&(y.1, y.2))));
            for (_, a, b) in short {
                if s.collapses == budget {
                    break;
                }
                if !em.is_alive(a) || !em.is_alive(b) {
                    continue;
                }
                if em.length(a, b) >= COLLAPSE_RATIO * goal(&em, a, b) {
                    continue;
                }
                if try_collapse(&mut em, a, b, l, params) {
                    s.collapses += 1;
                }
            }
        }
        let surplus = em.n_vertices().saturating_sub(target);
        if surplus > 0 {
            let mut by_len: Vec<(f64, usize, usize)> =
                em.edges().into_iter().map(|(a, b)| (em.length(a, b), a, b)).collect();
            by_len.sort_by(|x, y| x.0.total_cmp(&y.0).then((x.1, x.2).cmp(&(y.1, y.2))));
            for (_, a, b) in by_len {
                if s.trim_collapses == surplus {
                    break;
                }
                if em.is_alive(a) && em.is_alive(b) && try_collapse(&mut em, a, b, l, params) {
                    s.trim_collapses += 1;
                }
            }
        }

        // Flip.
        for (a, b) in em.edges() {
            if try_flip(&mut em, a, b, params) {
                s.flips += 1;
            }
        }

        smooth(&mut em, params);

        let (he, _) = em
            .to_halfedge()
            .map_err(|e| Error::NonManifoldInput(format!("iteration {}: {e}", it + 1)))?;
        s.vertices = he.n_vertices();
        s.q_avg = mean_quality(&he);
        log::debug!("remesh iteration {}: {s:?}", it + 1);
        stats.iterations.push(s);
        out = he;
        em = rebuild_edit(&out, &em);
    }
    stats.deficit = out.n_vertices() as i64 - target as i64;
    if stats.deficit != 0 {
        log::warn!(
            "remeshing ended with {} vertices against a target of {target}",
            out.n_vertices()
        );
    }
    Ok((out, stats))
}

/// Compact the working mesh between iterations, carrying length scales.
fn rebuild_edit(he: &HalfEdgeMesh, old: &EditMesh) -> EditMesh {
    let mut em = EditMesh::from_halfedge(he);
    let scales: Vec<f64> = (0..old.vertex_slots())
        .filter(|&v| old.is_alive(v))
        .map(|v| old.scale(v))
        .collect();
    em.set_scales(scales);
    em
}

fn is_feature(em: &EditMesh, v: usize, params: &RemeshParams) -> bool {
    params.preserve_edges && em.class(v) == VertexClass::ExternalEdge
}

fn guarded(em: &EditMesh, v: usize, params: &RemeshParams) -> bool {
    if !is_feature(em, v, params) {
        return false;
    }
    let n = em
        .neighbors(v)
        .into_iter()
        .filter(|&x| em.class(x) == VertexClass::ExternalEdge)
        .count();
    if params.guard_two_neighbors {
        n >= 2
    } else {
        n > 2
    }
}

fn try_collapse(em: &mut EditMesh, a: usize, b: usize, l: f64, params: &RemeshParams) -> bool {
    if em.is_boundary_edge(a, b) || guarded(em, a, params) || guarded(em, b, params) {
        return false;
    }
    let (ba, bb) = (em.is_boundary_vertex(a), em.is_boundary_vertex(b));
    let (fa, fb) = (is_feature(em, a, params), is_feature(em, b, params));
    let (keep, remove, to) = if ba && bb {
        return false;
    } else if ba {
        (a, b, *em.position(a))
    } else if bb {
        (b, a, *em.position(b))
    } else if fa && !fb {
        (a, b, *em.position(a))
    } else if fb && !fa {
        (b, a, *em.position(b))
    } else {
        (a, b, Point::from((em.position(a).coords + em.position(b).coords) * 0.5))
    };
    let keep_scale = if keep == a { em.scale(a) } else { em.scale(b) };
    for x in em.neighbors(remove).into_iter().chain(em.neighbors(keep)) {
        if x == keep || x == remove {
            continue;
        }
        let limit = SPLIT_RATIO * l * 0.5 * (keep_scale + em.scale(x));
        if (to - em.position(x)).norm() > limit {
            return false;
        }
    }
    // Reject collapses that turn a surviving face over.
    for v in [keep, remove] {
        for &f in em.faces_of(v) {
            let t = em.face(f);
            if t.contains(&keep) && t.contains(&remove) {
                continue;
            }
            let before = em.face_normal(f);
            let p: Vec<Point> = t
                .iter()
                .map(|&x| if x == keep || x == remove { to } else { *em.position(x) })
                .collect();
            let after = (p[1] - p[0]).cross(&(p[2] - p[0]));
            if after.norm_squared() <= 1e-24 * before.norm_squared() || before.dot(&after) <= 0.0 {
                return false;
            }
        }
    }
    em.collapse_edge(keep, remove, to)
}

/// Goal edge length that brings the vertex count to `target`. Guarded
/// vertices cannot be removed, so the length is taken over the other
/// vertices and scaled by the inverse square root of the count they must
/// reach.
fn free_length(em: &EditMesh, edges: &[(usize, usize)], target: usize, params: &RemeshParams) -> f64 {
    let alive: Vec<usize> = (0..em.vertex_slots()).filter(|&v| em.is_alive(v)).collect();
    let fixed = alive.iter().filter(|&&v| guarded(em, v, params)).count();
    let free: Vec<f64> = edges
        .iter()
        .filter(|&&(a, b)| !(guarded(em, a, params) && guarded(em, b, params)))
        .map(|&(a, b)| em.length(a, b))
        .collect();
    let mean = if free.is_empty() {
        edges.iter().map(|&(a, b)| em.length(a, b)).sum::<f64>() / edges.len() as f64
    } else {
        free.iter().sum::<f64>() / free.len() as f64
    };
    let have = (alive.len() - fixed).max(1) as f64;
    let want = target.saturating_sub(fixed).max(1) as f64;
    mean * (have / want).sqrt()
}

fn valence_target(em: &EditMesh, v: usize) -> i64 {
    if em.is_boundary_vertex(v) {
        4
    } else {
        6
    }
}

fn try_flip(em: &mut EditMesh, a: usize, b: usize, params: &RemeshParams) -> bool {
    if !em.is_alive(a) || !em.is_alive(b) {
        return false;
    }
    if is_feature(em, a, params) && is_feature(em, b, params) {
        return false;
    }
    let Some((c, d)) = em.flip_quad(a, b) else {
        return false;
    };
    let dev = |v: usize, delta: i64| {
        let x = em.valence(v) as i64 + delta - valence_target(em, v);
        x * x
    };
    let before = dev(a, 0) + dev(b, 0) + dev(c, 0) + dev(d, 0);
    let after = dev(a, -1) + dev(b, -1) + dev(c, 1) + dev(d, 1);
    if after >= before {
        return false;
    }
    let (pa, pb, pc, pd) = (*em.position(a), *em.position(b), *em.position(c), *em.position(d));
    for t in [[pc, pa, pd], [pd, pb, pc]] {
        if corner_angles_deg(&t[0], &t[1], &t[2]).iter().any(|&x| x >= 90.0) {
            return false;
        }
    }
    let old: Vector = em.edge_faces(a, b).iter().map(|&f| em.face_normal(f)).sum();
    let n1 = (pa - pc).cross(&(pd - pc));
    let n2 = (pb - pd).cross(&(pc - pd));
    if n1.dot(&old) <= 0.0 || n2.dot(&old) <= 0.0 {
        return false;
    }
    em.flip_edge(a, b)
}

/// One damped uniform-Laplacian step restricted to the tangent plane.
fn smooth(em: &mut EditMesh, params: &RemeshParams) {
    let moves: Vec<(usize, Point)> = (0..em.vertex_slots())
        .filter(|&v| em.is_alive(v) && !em.is_boundary_vertex(v) && !is_feature(em, v, params))
        .filter_map(|v| {
            let nb = em.neighbors(v);
            if nb.is_empty() {
                return None;
            }
            let c = nb.iter().fold(Vector::zeros(), |s, &x| s + em.position(x).coords) / nb.len() as f64;
            let p = *em.position(v);
            let mut d = (c - p.coords) * SMOOTHING;
            let n = em.vertex_normal(v);
            d -= n * n.dot(&d);
            Some((v, p + d))
        })
        .collect();
    for (v, p) in moves {
        em.set_position(v, p);
    }
}

/// Per-vertex target edge lengths: the mean edge length divided by the
/// vertex's curvature-class weight (relative to the mean weight).
///
/// Curvature is estimated per vertex as the mean of `|2 n·(u − v)| / |u − v|²`
/// over its neighbors `u`. When curvature barely varies (`(p90 − p10) /
/// median < 0.25`) every vertex gets the mean edge length.
pub fn adaptive_target_length(mesh: &HalfEdgeMesh, n_classes: usize, rates: &[f64]) -> Result<Vec<f64>> {
    if rates.len() != n_classes || n_classes == 0 {
        return Err(Error::InvalidParam(format!(
            "{} rates given for {n_classes} curvature classes",
            rates.len()
        )));
    }
    if rates.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::InvalidParam("curvature rates must be positive".into()));
    }
    let l = mean_edge_length(mesh)?;
    let em = EditMesh::from_halfedge(mesh);
    let n = mesh.n_vertices();
    let curv: Vec<f64> = (0..n)
        .map(|v| {
            let nb = em.neighbors(v);
            if nb.is_empty() {
                return 0.0;
            }
            let nv = em.vertex_normal(v);
            let p = em.position(v);
            nb.iter()
                .map(|&u| {
                    let d = em.position(u) - p;
                    (2.0 * nv.dot(&d)).abs() / d.norm_squared()
                })
                .sum::<f64>()
                / nb.len() as f64
        })
        .collect();
    let mut sorted: Vec<f64> = (0..n).filter(|&v| !mesh.is_isolated(v)).map(|v| curv[v]).collect();
    sorted.sort_by(f64::total_cmp);
    if sorted.is_empty() {
        return Ok(vec![l; n]);
    }
    let q = |x: f64| sorted[((sorted.len() - 1) as f64 * x).round() as usize];
    let median = q(0.5);
    if n_classes == 1 || median <= 0.0 || (q(0.9) - q(0.1)) / median < 0.25 {
        return Ok(vec![l; n]);
    }
    let classes = quantile_classes(&curv, n_classes);
    let mean_w = classes.iter().map(|&c| rates[c as usize]).sum::<f64>() / n as f64;
    Ok(classes.iter().map(|&c| l * mean_w / rates[c as usize]).collect())
}
