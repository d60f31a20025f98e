//! Validated half-edge connectivity for oriented triangle meshes.
//!
//! Every face contributes three half-edges; each edge without a second face
//! gets a boundary half-edge (no face) so that `twin` is always defined and
//! boundary loops can be walked through `next`.

use std::collections::{HashMap, VecDeque};

use crate::error::{Error, Result};
use crate::geometry::Point;

const NONE: usize = usize::MAX;

/// Feature class of a mesh vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VertexClass {
    #[default]
    Ordinary,
    ExternalEdge,
}

/// Oriented 2-manifold triangle mesh, possibly with boundary and several
/// connected components.
#[derive(Debug, Clone)]
pub struct HalfEdgeMesh {
    positions: Vec<Point>,
    classes: Vec<VertexClass>,
    faces: Vec<[usize; 3]>,
    origin: Vec<usize>,
    twin: Vec<usize>,
    next: Vec<usize>,
    face: Vec<usize>,
    vertex_out: Vec<usize>,
    /// Faces whose winding was reversed during construction.
    flipped: usize,
}

/// Topology summary of one connected component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComponentStats {
    pub vertices: usize,
    pub edges: usize,
    pub faces: usize,
    pub boundary_loops: usize,
    /// `None` when the Euler relation gives a non-integral genus.
    pub genus: Option<usize>,
}

/// Check that the faces form an edge-manifold, consistently orientable
/// complex, reversing faces as needed to agree with the first face of each
/// component (breadth-first over shared edges).
fn orient_faces(faces: &mut [[usize; 3]]) -> Result<usize> {
    let mut edge_faces: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (f, t) in faces.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            let list = edge_faces.entry((a.min(b), a.max(b))).or_default();
            list.push(f);
            if list.len() > 2 {
                return Err(Error::NonManifoldEdge(a.min(b), a.max(b)));
            }
        }
    }
    let has_directed = |t: &[usize; 3], a: usize, b: usize| {
        (0..3).any(|k| t[k] == a && t[(k + 1) % 3] == b)
    };
    let mut state = vec![false; faces.len()];
    let mut flipped = 0;
    let mut queue = VecDeque::new();
    for seed in 0..faces.len() {
        if state[seed] {
            continue;
        }
        state[seed] = true;
        queue.push_back(seed);
        while let Some(f) = queue.pop_front() {
            let t = faces[f];
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                for &g in &edge_faces[&(a.min(b), a.max(b))] {
                    if g == f {
                        continue;
                    }
                    let consistent = has_directed(&faces[g], b, a);
                    if state[g] {
                        if !consistent {
                            return Err(Error::OrientationError);
                        }
                    } else {
                        if !consistent {
                            faces[g].swap(1, 2);
                            flipped += 1;
                        }
                        state[g] = true;
                        queue.push_back(g);
                    }
                }
            }
        }
    }
    Ok(flipped)
}

/// Build validated connectivity from an indexed face list.
pub fn build_halfedge(vertices: Vec<Point>, faces: Vec<[usize; 3]>) -> Result<HalfEdgeMesh> {
    HalfEdgeMesh::new(vertices, faces)
}

impl HalfEdgeMesh {
    pub fn new(vertices: Vec<Point>, mut faces: Vec<[usize; 3]>) -> Result<Self> {
        let nv = vertices.len();
        for (f, t) in faces.iter().enumerate() {
            for &v in t {
                if v >= nv {
                    return Err(Error::InvalidIndex {
                        face: f,
                        vertex: v,
                        count: nv,
                    });
                }
            }
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(Error::DegenerateFace(f));
            }
        }
        let flipped = orient_faces(&mut faces)?;

        let nf = faces.len();
        let mut origin = Vec::with_capacity(nf * 3);
        let mut next = Vec::with_capacity(nf * 3);
        let mut face = Vec::with_capacity(nf * 3);
        let mut directed: HashMap<(usize, usize), usize> = HashMap::with_capacity(nf * 3);
        for (f, t) in faces.iter().enumerate() {
            for k in 0..3 {
                let h = 3 * f + k;
                origin.push(t[k]);
                next.push(3 * f + (k + 1) % 3);
                face.push(f);
                directed.insert((t[k], t[(k + 1) % 3]), h);
            }
        }
        let mut twin = vec![NONE; nf * 3];
        let mut boundary_out: Vec<usize> = vec![NONE; nv];
        for h in 0..nf * 3 {
            let a = origin[h];
            let b = origin[next[h]];
            if let Some(&t) = directed.get(&(b, a)) {
                twin[h] = t;
            } else {
                let bh = origin.len();
                origin.push(b);
                next.push(NONE);
                face.push(NONE);
                twin.push(h);
                twin[h] = bh;
                if boundary_out[b] != NONE {
                    return Err(Error::NonManifoldVertex(b));
                }
                boundary_out[b] = bh;
            }
        }
        for h in nf * 3..origin.len() {
            let end = origin[twin[h]];
            next[h] = boundary_out[end];
            debug_assert_ne!(next[h], NONE);
        }

        let mut vertex_out = vec![NONE; nv];
        let mut out_count = vec![0usize; nv];
        for h in 0..origin.len() {
            out_count[origin[h]] += 1;
            if vertex_out[origin[h]] == NONE {
                vertex_out[origin[h]] = h;
            }
        }
        for v in 0..nv {
            if boundary_out[v] != NONE {
                vertex_out[v] = boundary_out[v];
            }
        }

        let mesh = HalfEdgeMesh {
            classes: vec![VertexClass::Ordinary; nv],
            positions: vertices,
            faces,
            origin,
            twin,
            next,
            face,
            vertex_out,
            flipped,
        };
        // A vertex whose outgoing half-edges do not form a single fan joins
        // several surface sheets.
        for v in 0..nv {
            if mesh.vertex_out[v] != NONE && mesh.outgoing(v).count() != out_count[v] {
                return Err(Error::NonManifoldVertex(v));
            }
        }
        Ok(mesh)
    }

    pub fn with_classes(mut self, classes: Vec<VertexClass>) -> Self {
        assert_eq!(classes.len(), self.positions.len());
        self.classes = classes;
        self
    }

    pub fn set_positions(&mut self, positions: Vec<Point>) {
        assert_eq!(positions.len(), self.positions.len());
        self.positions = positions;
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    pub fn position(&self, v: usize) -> &Point {
        &self.positions[v]
    }

    pub fn classes(&self) -> &[VertexClass] {
        &self.classes
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn n_vertices(&self) -> usize {
        self.positions.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn n_halfedges(&self) -> usize {
        self.origin.len()
    }

    pub fn n_edges(&self) -> usize {
        self.origin.len() / 2
    }

    /// Number of faces reversed to obtain a consistent orientation.
    pub fn flipped_faces(&self) -> usize {
        self.flipped
    }

    pub fn origin(&self, h: usize) -> usize {
        self.origin[h]
    }

    pub fn target(&self, h: usize) -> usize {
        self.origin[self.twin[h]]
    }

    pub fn twin(&self, h: usize) -> usize {
        self.twin[h]
    }

    pub fn next(&self, h: usize) -> usize {
        self.next[h]
    }

    pub fn face(&self, h: usize) -> Option<usize> {
        (self.face[h] != NONE).then_some(self.face[h])
    }

    pub fn is_boundary_halfedge(&self, h: usize) -> bool {
        self.face[h] == NONE
    }

    /// Half-edges leaving `v`, starting from the boundary one if any.
    pub fn outgoing(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        let start = self.vertex_out[v];
        let mut cur = start;
        let mut done = start == NONE;
        std::iter::from_fn(move || {
            if done {
                return None;
            }
            let h = cur;
            // Rotate to the next outgoing half-edge around the vertex.
            let t = self.twin[h];
            cur = self.next[t];
            if cur == start || cur == NONE {
                done = true;
            }
            Some(h)
        })
    }

    pub fn vertex_neighbors(&self, v: usize) -> Vec<usize> {
        self.outgoing(v).map(|h| self.target(h)).collect()
    }

    pub fn valence(&self, v: usize) -> usize {
        self.outgoing(v).count()
    }

    pub fn is_isolated(&self, v: usize) -> bool {
        self.vertex_out[v] == NONE
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.vertex_out[v] != NONE && self.face[self.vertex_out[v]] == NONE
    }

    /// Unique undirected edges as `(a, b)` with `a < b`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.origin.len())
            .filter(|&h| h < self.twin[h])
            .map(|h| {
                let (a, b) = (self.origin[h], self.target(h));
                (a.min(b), a.max(b))
            })
            .collect()
    }

    pub fn boundary_edge_count(&self) -> usize {
        self.face.iter().filter(|&&f| f == NONE).count()
    }

    /// Vertex sequences of every boundary loop, following boundary
    /// half-edges.
    pub fn boundary_loops(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.origin.len()];
        let mut loops = Vec::new();
        for h in 3 * self.faces.len()..self.origin.len() {
            if seen[h] {
                continue;
            }
            let mut lp = Vec::new();
            let mut cur = h;
            while !seen[cur] {
                seen[cur] = true;
                lp.push(self.origin[cur]);
                cur = self.next[cur];
            }
            loops.push(lp);
        }
        loops
    }

    /// V − E + F, counting isolated vertices.
    pub fn euler_characteristic(&self) -> i64 {
        self.n_vertices() as i64 - self.n_edges() as i64 + self.n_faces() as i64
    }

    pub fn is_closed(&self) -> bool {
        self.boundary_edge_count() == 0
    }

    /// Per-component statistics over face-connected components; isolated
    /// vertices are not reported.
    pub fn components(&self) -> Vec<ComponentStats> {
        let nf = self.faces.len();
        let mut comp = vec![NONE; nf];
        let mut count = 0;
        let mut stack = Vec::new();
        for seed in 0..nf {
            if comp[seed] != NONE {
                continue;
            }
            comp[seed] = count;
            stack.push(seed);
            while let Some(f) = stack.pop() {
                for k in 0..3 {
                    let t = self.twin[3 * f + k];
                    let g = self.face[t];
                    if g != NONE && comp[g] == NONE {
                        comp[g] = count;
                        stack.push(g);
                    }
                }
            }
            count += 1;
        }
        let mut stats = vec![
            ComponentStats {
                vertices: 0,
                edges: 0,
                faces: 0,
                boundary_loops: 0,
                genus: None,
            };
            count
        ];
        let mut vert_comp = vec![NONE; self.n_vertices()];
        for (f, t) in self.faces.iter().enumerate() {
            stats[comp[f]].faces += 1;
            for &v in t {
                vert_comp[v] = comp[f];
            }
        }
        for &c in &vert_comp {
            if c != NONE {
                stats[c].vertices += 1;
            }
        }
        for h in 0..self.origin.len() {
            if h < self.twin[h] {
                let f = if self.face[h] != NONE {
                    self.face[h]
                } else {
                    self.face[self.twin[h]]
                };
                stats[comp[f]].edges += 1;
            }
        }
        for lp in self.boundary_loops() {
            stats[vert_comp[lp[0]]].boundary_loops += 1;
        }
        for s in &mut stats {
            let chi = s.vertices as i64 - s.edges as i64 + s.faces as i64;
            let twice_genus = 2 - chi - s.boundary_loops as i64;
            s.genus = (twice_genus >= 0 && twice_genus % 2 == 0).then_some(twice_genus as usize / 2);
        }
        stats
    }

    /// Plain indexed representation.
    pub fn to_face_vertex(&self) -> (Vec<Point>, Vec<[usize; 3]>) {
        (self.positions.clone(), self.faces.clone())
    }

    pub fn into_parts(self) -> (Vec<Point>, Vec<[usize; 3]>, Vec<VertexClass>) {
        (self.positions, self.faces, self.classes)
    }
}
