//! Initial triangulation of a resampled point set.
//!
//! Every point projects its box neighborhood onto its tangent plane and
//! triangulates it with a planar Delaunay triangulation. Triangles proposed
//! by all three of their vertices are accepted first, best quality first,
//! under manifold checks; triangles proposed twice are then used to close
//! remaining gaps. Small holes are ear-filled afterwards.

mod holes;
mod normals;

use std::collections::HashMap;

use serde::Serialize;
use spade::{DelaunayTriangulation, HasPosition, Point2, Triangulation};

use crate::error::{Error, Result};
use crate::geometry::{local_frame, tangent_basis, triangle_normal, Point, PointCloud, Vector};
use crate::halfedge::HalfEdgeMesh;
use crate::metrics::triangle_quality;
use crate::voxel::VoxelGrid;

pub use holes::fill_holes;
pub use normals::{estimate_normals, NormalField};
pub(crate) use normals::box_neighbors;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MesherParams {
    /// Neighbors used for normals and local triangulations.
    pub k: usize,
    /// Holes with at most this many boundary edges are filled.
    pub hole_fill_max: usize,
}

impl Default for MesherParams {
    fn default() -> Self {
        MesherParams {
            k: 16,
            hole_fill_max: 8,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MeshingReport {
    /// Distinct triangles proposed by at least one local triangulation.
    pub candidates: usize,
    /// Triangles proposed by all three vertices.
    pub consensus: usize,
    pub accepted: usize,
    /// Faces dropped to split vertices joining several fans.
    pub bowtie_removed: usize,
    pub holes_filled: usize,
    pub reattached: usize,
    /// Vertices left without any face.
    pub unattached: usize,
    /// Points whose neighborhood holds an opposing normal.
    pub mixed_normals: usize,
}

/// Triangulate `cloud`, whose points are bucketed by `grid`.
///
/// Every face joins points of identical or adjacent boxes. Fails with
/// [`Error::MeshingFailed`] when fewer than 90% of the points end up on a
/// face.
pub fn reconstruct_initial(
    cloud: &PointCloud,
    grid: &VoxelGrid,
    params: &MesherParams,
) -> Result<(HalfEdgeMesh, MeshingReport)> {
    let n = cloud.len();
    if n < 3 {
        return Err(Error::InsufficientPoints { needed: 3, got: n });
    }
    if grid.len() != n {
        return Err(Error::InvalidParam(format!(
            "grid holds {} points, cloud {n}",
            grid.len()
        )));
    }
    if params.k < 2 {
        return Err(Error::InvalidParam("mesh.k must be at least 2".into()));
    }
    let frame = local_frame(cloud.points(), None).ok_or(Error::EmptyInput)?;
    if frame.eigenvalues[1] <= 1e-12 * frame.eigenvalues[2].max(f64::MIN_POSITIVE) {
        return Err(Error::DegenerateInput("points are collinear".into()));
    }

    let neighbors = crate::par::map_range(n, |i| box_neighbors(grid, i, params.k));
    let field = normals::orient_normals(cloud, &neighbors);
    let mut report = MeshingReport {
        mixed_normals: field.mixed,
        ..Default::default()
    };
    if field.mixed > 0 {
        log::warn!(
            "{} points see opposing normals; sheets closer than the box scale may be merged",
            field.mixed
        );
    }

    let proposals = crate::par::map_range(n, |i| {
        local_star(cloud.points(), i, &neighbors[i], &field.normals[i])
    });
    let mut votes: HashMap<[usize; 3], (u8, [usize; 3])> = HashMap::new();
    for list in &proposals {
        for &t in list {
            let e = votes.entry(sorted(t)).or_insert((0, t));
            e.0 += 1;
        }
    }
    report.candidates = votes.len();

    let p = cloud.points();
    let mut ranked: Vec<(u8, f64, [usize; 3], [usize; 3])> = votes
        .into_iter()
        .filter(|(_, (c, _))| *c >= 2)
        .map(|(key, (c, t))| (c, triangle_quality(&p[t[0]], &p[t[1]], &p[t[2]]), key, t))
        .collect();
    ranked.sort_by(|a, b| {
        b.0.cmp(&a.0)
            .then(b.1.total_cmp(&a.1))
            .then(a.2.cmp(&b.2))
    });
    report.consensus = ranked.iter().filter(|r| r.0 >= 3).count();

    let mut builder = FaceSet::new(n);
    for &(count, _, _, t) in &ranked {
        if count < 3 && !builder.touches_boundary(t) {
            continue;
        }
        if builder.can_add(t, p) {
            builder.add(t);
        }
    }
    report.accepted = builder.live_count();
    report.bowtie_removed = builder.resolve_bowties();
    report.reattached = builder.reattach(p, grid, &neighbors, &field.normals);

    let faces = builder.into_faces();
    let mesh = HalfEdgeMesh::new(p.to_vec(), faces)
        .map_err(|e| Error::MeshingFailed(format!("face selection left an invalid mesh: {e}")))?;
    let limit = params.hole_fill_max;
    let (mesh, filled) = fill_holes(&mesh, Some(limit), Some(grid))?;
    report.holes_filled = filled;

    report.unattached = (0..n).filter(|&v| mesh.is_isolated(v)).count();
    let covered = n - report.unattached;
    if (covered as f64) < 0.9 * n as f64 {
        return Err(Error::MeshingFailed(format!(
            "only {covered} of {n} points received a face ({} candidates, {} consensus, {} accepted)",
            report.candidates, report.consensus, report.accepted
        )));
    }
    log::debug!("initial mesh: {report:?}");
    Ok((mesh, report))
}

/// Drop faces so that no vertex joins several fans, keeping the largest
/// fan at each. Returns the surviving faces and the number removed.
pub(crate) fn split_bowties(n_vertices: usize, faces: Vec<[usize; 3]>) -> (Vec<[usize; 3]>, usize) {
    let mut set = FaceSet::new(n_vertices);
    for t in faces {
        set.add(t);
    }
    let removed = set.resolve_bowties();
    (set.into_faces(), removed)
}

fn sorted(t: [usize; 3]) -> [usize; 3] {
    let mut s = t;
    s.sort_unstable();
    s
}

struct Site {
    pos: Point2<f64>,
    id: usize,
}

impl HasPosition for Site {
    type Scalar = f64;
    fn position(&self) -> Point2<f64> {
        self.pos
    }
}

/// Triangles incident to `center` in the Delaunay triangulation of its
/// neighborhood projected onto the plane orthogonal to `normal`, oriented
/// counter-clockwise around `normal`.
fn local_star(points: &[Point], center: usize, nbrs: &[usize], normal: &Vector) -> Vec<[usize; 3]> {
    let (u, v) = tangent_basis(normal);
    let c = points[center];
    let scale = nbrs
        .last()
        .map_or(1.0, |&j| (points[j] - c).norm())
        .max(f64::MIN_POSITIVE);
    let mut sites: Vec<Site> = Vec::with_capacity(nbrs.len() + 1);
    sites.push(Site {
        pos: Point2::new(0.0, 0.0),
        id: center,
    });
    let min_sep2 = (1e-9 * scale).powi(2);
    for &j in nbrs {
        let d = points[j] - c;
        let q = Point2::new(d.dot(&u) / scale, d.dot(&v) / scale);
        let taken = sites.iter().any(|s| {
            let (dx, dy) = (s.pos.x - q.x, s.pos.y - q.y);
            dx * dx + dy * dy <= min_sep2 / (scale * scale)
        });
        if !taken {
            sites.push(Site { pos: q, id: j });
        }
    }
    if sites.len() < 3 {
        return Vec::new();
    }
    let Ok(dt) = DelaunayTriangulation::<Site>::bulk_load_stable(sites) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for face in dt.inner_faces() {
        let ids = face.vertices().map(|vh| vh.data().id);
        let Some(pos) = ids.iter().position(|&x| x == center) else {
            continue;
        };
        let t = [ids[pos], ids[(pos + 1) % 3], ids[(pos + 2) % 3]];
        let nrm = triangle_normal(&points[t[0]], &points[t[1]], &points[t[2]]);
        let len = nrm.norm();
        // Reject triangles steeper than 60° to the tangent plane.
        if len > 0.0 && nrm.dot(normal) >= 0.5 * len {
            out.push(t);
        }
    }
    out
}

/// Incrementally built oriented face set that never holds a non-manifold
/// edge or an edge used twice in one direction. Vertices may temporarily join
/// several fans; [`FaceSet::resolve_bowties`] removes those.
struct FaceSet {
    faces: Vec<[usize; 3]>,
    alive: Vec<bool>,
    incident: Vec<Vec<usize>>,
    directed: HashMap<(usize, usize), usize>,
}

impl FaceSet {
    fn new(n: usize) -> Self {
        FaceSet {
            faces: Vec::new(),
            alive: Vec::new(),
            incident: vec![Vec::new(); n],
            directed: HashMap::new(),
        }
    }

    fn live_count(&self) -> usize {
        self.alive.iter().filter(|&&a| a).count()
    }

    fn edge_uses(&self, a: usize, b: usize) -> usize {
        self.directed.contains_key(&(a, b)) as usize + self.directed.contains_key(&(b, a)) as usize
    }

    /// True when some edge of `t` already carries exactly one face.
    fn touches_boundary(&self, t: [usize; 3]) -> bool {
        (0..3).any(|k| self.edge_uses(t[k], t[(k + 1) % 3]) == 1)
    }

    /// Link edges of `v` as `(a, b)` for each live face `(v, a, b)`.
    fn link(&self, v: usize) -> Vec<(usize, usize)> {
        self.incident[v]
            .iter()
            .map(|&f| {
                let t = self.faces[f];
                let k = t.iter().position(|&x| x == v).expect("incident face holds v");
                (t[(k + 1) % 3], t[(k + 2) % 3])
            })
            .collect()
    }

    fn can_add(&self, t: [usize; 3], p: &[Point]) -> bool {
        let nrm = triangle_normal(&p[t[0]], &p[t[1]], &p[t[2]]);
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            if self.directed.contains_key(&(a, b)) || self.edge_uses(a, b) >= 2 {
                return false;
            }
            // Folding back over the neighbor across a shared edge.
            if let Some(&f) = self.directed.get(&(b, a)) {
                let s = self.faces[f];
                let other = triangle_normal(&p[s[0]], &p[s[1]], &p[s[2]]);
                if nrm.dot(&other) <= 0.0 {
                    return false;
                }
            }
        }
        for k in 0..3 {
            let v = t[k];
            let mut link = self.link(v);
            link.push((t[(k + 1) % 3], t[(k + 2) % 3]));
            let comps = link_components(&link);
            if comps.len() > 1 && comps.iter().any(|c| c.closed) {
                return false;
            }
        }
        true
    }

    fn add(&mut self, t: [usize; 3]) {
        let f = self.faces.len();
        self.faces.push(t);
        self.alive.push(true);
        for k in 0..3 {
            self.incident[t[k]].push(f);
            self.directed.insert((t[k], t[(k + 1) % 3]), f);
        }
    }

    fn remove(&mut self, f: usize) {
        if !self.alive[f] {
            return;
        }
        self.alive[f] = false;
        let t = self.faces[f];
        for k in 0..3 {
            self.incident[t[k]].retain(|&g| g != f);
            self.directed.remove(&(t[k], t[(k + 1) % 3]));
        }
    }

    /// Keep only the largest fan at every vertex whose link has several
    /// components. Returns the number of faces removed.
    fn resolve_bowties(&mut self) -> usize {
        let mut removed = 0;
        let mut work: Vec<usize> = (0..self.incident.len()).collect();
        while let Some(v) = work.pop() {
            let link = self.link(v);
            let comps = link_components(&link);
            if comps.len() <= 1 {
                continue;
            }
            let keep = comps
                .iter()
                .enumerate()
                .max_by(|a, b| {
                    a.1.edges
                        .len()
                        .cmp(&b.1.edges.len())
                        .then(b.0.cmp(&a.0))
                })
                .map(|(i, _)| i)
                .expect("several components");
            let faces = self.incident[v].clone();
            for (ci, comp) in comps.iter().enumerate() {
                if ci == keep {
                    continue;
                }
                for &e in &comp.edges {
                    let f = faces[e];
                    let t = self.faces[f];
                    self.remove(f);
                    removed += 1;
                    work.extend(t.iter().copied().filter(|&x| x != v));
                }
            }
        }
        removed
    }

    /// Attach points without faces: inside the nearest face they project
    /// into (split in three), or onto an open edge next to them. Every new
    /// face must join adjacent boxes and keep the orientation of its
    /// surroundings.
    fn reattach(
        &mut self,
        p: &[Point],
        grid: &VoxelGrid,
        neighbors: &[Vec<usize>],
        normals: &[Vector],
    ) -> usize {
        let mut count = 0;
        for v in 0..self.incident.len() {
            if !self.incident[v].is_empty() {
                continue;
            }
            let mut cand: Vec<usize> = neighbors[v]
                .iter()
                .flat_map(|&j| self.incident[j].iter().copied())
                .collect();
            cand.sort_unstable();
            cand.dedup();
            let legal = |t: &[usize; 3]| t.iter().all(|&a| grid.points_adjacent(a, v));

            // Split a face the point projects into.
            let mut best: Option<(f64, usize)> = None;
            for &f in &cand {
                let t = self.faces[f];
                if !legal(&t) {
                    continue;
                }
                if let Some(d) = inside_distance(p, t, &p[v]) {
                    if best.is_none_or(|(bd, _)| d < bd) {
                        best = Some((d, f));
                    }
                }
            }
            if let Some((_, f)) = best {
                let [a, b, c] = self.faces[f];
                let parts = [[a, b, v], [b, c, v], [c, a, v]];
                let n0 = triangle_normal(&p[a], &p[b], &p[c]);
                if parts
                    .iter()
                    .all(|s| triangle_normal(&p[s[0]], &p[s[1]], &p[s[2]]).dot(&n0) > 0.0)
                {
                    self.remove(f);
                    for s in parts {
                        self.add(s);
                    }
                    count += 1;
                    continue;
                }
            }

            // Otherwise extend across the nearest open edge.
            let mut best_edge: Option<(f64, [usize; 3])> = None;
            for &f in &cand {
                let t = self.faces[f];
                for k in 0..3 {
                    let (a, b) = (t[k], t[(k + 1) % 3]);
                    if self.directed.contains_key(&(b, a)) {
                        continue;
                    }
                    let s = [b, a, v];
                    if !grid.points_adjacent(a, v) || !grid.points_adjacent(b, v) {
                        continue;
                    }
                    let nrm = triangle_normal(&p[b], &p[a], &p[v]);
                    if nrm.dot(&normals[v]) <= 0.0 || !self.can_add(s, p) {
                        continue;
                    }
                    let mid = Point::from((p[a].coords + p[b].coords) * 0.5);
                    let d = (p[v] - mid).norm();
                    if best_edge.is_none_or(|(bd, _)| d < bd) {
                        best_edge = Some((d, s));
                    }
                }
            }
            if let Some((_, s)) = best_edge {
                self.add(s);
                count += 1;
            }
        }
        count
    }

    fn into_faces(self) -> Vec<[usize; 3]> {
        self.faces
            .into_iter()
            .zip(self.alive)
            .filter_map(|(t, a)| a.then_some(t))
            .collect()
    }
}

/// Distance from `q` to the plane of triangle `t` when its projection lies
/// inside the triangle.
fn inside_distance(p: &[Point], t: [usize; 3], q: &Point) -> Option<f64> {
    let (a, b, c) = (p[t[0]], p[t[1]], p[t[2]]);
    let n = triangle_normal(&a, &b, &c);
    let nn = n.norm_squared();
    if nn <= 0.0 {
        return None;
    }
    let w0 = (c - b).cross(&(q - b)).dot(&n) / nn;
    let w1 = (a - c).cross(&(q - c)).dot(&n) / nn;
    let w2 = 1.0 - w0 - w1;
    let eps = 1e-9;
    (w0 > eps && w1 > eps && w2 > eps).then(|| (q - a).dot(&n).abs() / nn.sqrt())
}

struct LinkComponent {
    /// Indices into the link edge list.
    edges: Vec<usize>,
    closed: bool,
}

/// Connected components of a vertex link given as edges.
fn link_components(link: &[(usize, usize)]) -> Vec<LinkComponent> {
    let m = link.len();
    let mut comp = vec![usize::MAX; m];
    let mut out = Vec::new();
    for s in 0..m {
        if comp[s] != usize::MAX {
            continue;
        }
        let id = out.len();
        comp[s] = id;
        let mut stack = vec![s];
        let mut edges = Vec::new();
        while let Some(e) = stack.pop() {
            edges.push(e);
            let (a, b) = link[e];
            for (g, &(c, d)) in link.iter().enumerate() {
                if comp[g] == usize::MAX && (c == a || c == b || d == a || d == b) {
                    comp[g] = id;
                    stack.push(g);
                }
            }
        }
        let mut verts: Vec<usize> = edges.iter().flat_map(|&e| [link[e].0, link[e].1]).collect();
        verts.sort_unstable();
        verts.dedup();
        let closed = verts.len() == edges.len();
        edges.sort_unstable();
        out.push(LinkComponent { edges, closed });
    }
    out
}
