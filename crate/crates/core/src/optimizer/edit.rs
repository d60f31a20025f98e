use crate::error::Result;
use crate::geometry::{triangle_normal, Point, Vector};
use crate::halfedge::{HalfEdgeMesh, VertexClass};

/// Indexed triangle mesh with vertex-to-face incidence, supporting the
/// local edits of isotropic remeshing. Removed vertices and faces are
/// tombstoned until [`EditMesh::to_halfedge`] compacts them.
///
/// Every edit checks its own topological preconditions and leaves the mesh
/// 2-manifold with boundary.
#[derive(Debug, Clone)]
pub struct EditMesh {
    pos: Vec<Point>,
    class: Vec<VertexClass>,
    /// Per-vertex multiplier of the target edge length.
    scale: Vec<f64>,
    alive: Vec<bool>,
    boundary: Vec<bool>,
    faces: Vec<[usize; 3]>,
    face_alive: Vec<bool>,
    vfaces: Vec<Vec<usize>>,
}

impl EditMesh {
    pub fn from_halfedge(mesh: &HalfEdgeMesh) -> Self {
        let n = mesh.n_vertices();
        let mut vfaces = vec![Vec::new(); n];
        for (f, t) in mesh.faces().iter().enumerate() {
            for &v in t {
                vfaces[v].push(f);
            }
        }
        EditMesh {
            pos: mesh.positions().to_vec(),
            class: mesh.classes().to_vec(),
            scale: vec![1.0; n],
            alive: (0..n).map(|v| !mesh.is_isolated(v)).collect(),
            boundary: (0..n).map(|v| mesh.is_boundary_vertex(v)).collect(),
            faces: mesh.faces().to_vec(),
            face_alive: vec![true; mesh.n_faces()],
            vfaces,
        }
    }

    /// Compact into a validated half-edge mesh. Vertices keep their relative
    /// order; the returned map gives the new index of each old vertex.
    pub fn to_halfedge(&self) -> Result<(HalfEdgeMesh, Vec<Option<usize>>)> {
        let mut remap = vec![None; self.pos.len()];
        let mut pos = Vec::new();
        let mut class = Vec::new();
        for v in 0..self.pos.len() {
            if self.alive[v] {
                remap[v] = Some(pos.len());
                pos.push(self.pos[v]);
                class.push(self.class[v]);
            }
        }
        let faces = self
            .live_faces()
            .map(|t| t.map(|v| remap[v].expect("face vertex is alive")))
            .collect();
        Ok((HalfEdgeMesh::new(pos, faces)?.with_classes(class), remap))
    }

    pub fn live_faces(&self) -> impl Iterator<Item = [usize; 3]> + '_ {
        self.faces
            .iter()
            .zip(&self.face_alive)
            .filter_map(|(t, &a)| a.then_some(*t))
    }

    pub fn n_vertices(&self) -> usize {
        self.alive.iter().filter(|&&a| a).count()
    }

    pub fn n_faces(&self) -> usize {
        self.face_alive.iter().filter(|&&a| a).count()
    }

    pub fn n_edges(&self) -> usize {
        self.edges().len()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.n_vertices() as i64 - self.n_edges() as i64 + self.n_faces() as i64
    }

    pub fn vertex_slots(&self) -> usize {
        self.pos.len()
    }

    pub fn is_alive(&self, v: usize) -> bool {
        self.alive[v]
    }

    pub fn position(&self, v: usize) -> &Point {
        &self.pos[v]
    }

    pub fn set_position(&mut self, v: usize, p: Point) {
        self.pos[v] = p;
    }

    pub fn class(&self, v: usize) -> VertexClass {
        self.class[v]
    }

    pub fn scale(&self, v: usize) -> f64 {
        self.scale[v]
    }

    pub fn set_scales(&mut self, scale: Vec<f64>) {
        assert_eq!(scale.len(), self.pos.len());
        self.scale = scale;
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary[v]
    }

    /// Unique edges `(a, b)` with `a < b`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<(usize, usize)> = self
            .live_faces()
            .flat_map(|t| (0..3).map(move |k| (t[k].min(t[(k + 1) % 3]), t[k].max(t[(k + 1) % 3]))))
            .collect();
        e.sort_unstable();
        e.dedup();
        e
    }

    pub fn length(&self, a: usize, b: usize) -> f64 {
        (self.pos[a] - self.pos[b]).norm()
    }

    /// Faces holding both `a` and `b`.
    pub fn edge_faces(&self, a: usize, b: usize) -> Vec<usize> {
        self.vfaces[a]
            .iter()
            .copied()
            .filter(|&f| self.faces[f].contains(&b))
            .collect()
    }

    pub fn is_boundary_edge(&self, a: usize, b: usize) -> bool {
        self.edge_faces(a, b).len() == 1
    }

    pub fn faces_of(&self, v: usize) -> &[usize] {
        &self.vfaces[v]
    }

    pub fn face(&self, f: usize) -> [usize; 3] {
        self.faces[f]
    }

    /// Sorted distinct neighbors of `v`.
    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        let mut n: Vec<usize> = self.vfaces[v]
            .iter()
            .flat_map(|&f| self.faces[f])
            .filter(|&x| x != v)
            .collect();
        n.sort_unstable();
        n.dedup();
        n
    }

    pub fn valence(&self, v: usize) -> usize {
        self.neighbors(v).len()
    }

    pub fn face_normal(&self, f: usize) -> Vector {
        let [a, b, c] = self.faces[f];
        triangle_normal(&self.pos[a], &self.pos[b], &self.pos[c])
    }

    /// Area-weighted unit vertex normal (zero for isolated vertices).
    pub fn vertex_normal(&self, v: usize) -> Vector {
        let n: Vector = self.vfaces[v].iter().map(|&f| self.face_normal(f)).sum();
        n.try_normalize(0.0).unwrap_or_else(Vector::zeros)
    }

    /// Third vertex of face `f` opposite edge `(a, b)`.
    fn opposite(&self, f: usize, a: usize, b: usize) -> usize {
        *self.faces[f]
            .iter()
            .find(|&&x| x != a && x != b)
            .expect("triangle has a third vertex")
    }

    fn add_face(&mut self, t: [usize; 3]) -> usize {
        let f = self.faces.len();
        self.faces.push(t);
        self.face_alive.push(true);
        for v in t {
            self.vfaces[v].push(f);
        }
        f
    }

    fn kill_face(&mut self, f: usize) {
        self.face_alive[f] = false;
        for v in self.faces[f] {
            self.vfaces[v].retain(|&g| g != f);
        }
    }

    /// Insert the midpoint of edge `(a, b)`, splitting its one or two
    /// faces. Returns the new vertex.
    pub fn split_edge(&mut self, a: usize, b: usize) -> Option<usize> {
        let faces = self.edge_faces(a, b);
        if faces.is_empty() || faces.len() > 2 {
            return None;
        }
        let m = self.pos.len();
        self.pos.push(Point::from((self.pos[a].coords + self.pos[b].coords) * 0.5));
        let both_feature =
            self.class[a] == VertexClass::ExternalEdge && self.class[b] == VertexClass::ExternalEdge;
        self.class.push(if both_feature {
            VertexClass::ExternalEdge
        } else {
            VertexClass::Ordinary
        });
        self.scale.push(0.5 * (self.scale[a] + self.scale[b]));
        self.alive.push(true);
        self.boundary.push(faces.len() == 1);
        self.vfaces.push(Vec::new());
        for f in faces {
            let t = self.faces[f];
            let k = (0..3)
                .find(|&k| {
                    let (x, y) = (t[k], t[(k + 1) % 3]);
                    (x == a && y == b) || (x == b && y == a)
                })
                .expect("face holds the edge");
            let (x, y, z) = (t[k], t[(k + 1) % 3], t[(k + 2) % 3]);
            self.kill_face(f);
            self.add_face([x, m, z]);
            self.add_face([m, y, z]);
        }
        Some(m)
    }

    /// Whether removing `remove` into `keep` preserves manifoldness: the
    /// edge is interior, its endpoints share exactly the two opposite
    /// vertices, and `remove` is not on the boundary.
    pub fn can_collapse(&self, keep: usize, remove: usize) -> bool {
        let faces = self.edge_faces(keep, remove);
        if faces.len() != 2 || self.boundary[remove] {
            return false;
        }
        let opp = [
            self.opposite(faces[0], keep, remove),
            self.opposite(faces[1], keep, remove),
        ];
        if opp[0] == opp[1] {
            return false;
        }
        let nk = self.neighbors(keep);
        let nr = self.neighbors(remove);
        let common = nk.iter().filter(|x| nr.binary_search(x).is_ok()).count();
        if common != 2 {
            return false;
        }
        // Opposite vertices keep at least three neighbors, and a closed
        // tetrahedron is not reduced further.
        if opp.iter().any(|&o| self.valence(o) <= 3 && !self.boundary[o]) {
            return false;
        }
        let keep_after = nk.len() + nr.len() - 2 - 2;
        keep_after >= 3 || self.boundary[keep]
    }

    /// Collapse edge `(keep, remove)`, moving `keep` to `to`. Returns false
    /// (and changes nothing) when the collapse is not allowed.
    pub fn collapse_edge(&mut self, keep: usize, remove: usize, to: Point) -> bool {
        if !self.can_collapse(keep, remove) {
            return false;
        }
        for f in self.edge_faces(keep, remove) {
            self.kill_face(f);
        }
        let moved: Vec<usize> = self.vfaces[remove].clone();
        for f in moved {
            for v in self.faces[f].iter_mut() {
                if *v == remove {
                    *v = keep;
                }
            }
            self.vfaces[keep].push(f);
        }
        self.vfaces[remove].clear();
        self.alive[remove] = false;
        self.pos[keep] = to;
        if self.class[remove] == VertexClass::ExternalEdge {
            self.class[keep] = VertexClass::ExternalEdge;
        }
        true
    }

    /// Faces of edge `(a, b)` as `(a, b, c)` and `(b, a, d)` when it is an
    /// interior edge; returns `(c, d)`.
    pub fn flip_quad(&self, a: usize, b: usize) -> Option<(usize, usize)> {
        let faces = self.edge_faces(a, b);
        if faces.len() != 2 {
            return None;
        }
        let (f0, f1) = (faces[0], faces[1]);
        let first_has_ab = (0..3).any(|k| self.faces[f0][k] == a && self.faces[f0][(k + 1) % 3] == b);
        let (fab, fba) = if first_has_ab { (f0, f1) } else { (f1, f0) };
        Some((self.opposite(fab, a, b), self.opposite(fba, a, b)))
    }

    /// Replace edge `(a, b)` by the other diagonal of its two faces.
    pub fn flip_edge(&mut self, a: usize, b: usize) -> bool {
        let Some((c, d)) = self.flip_quad(a, b) else {
            return false;
        };
        if c == d || self.neighbors(c).binary_search(&d).is_ok() {
            return false;
        }
        if self.valence(a) <= 3 || self.valence(b) <= 3 {
            return false;
        }
        for f in self.edge_faces(a, b) {
            self.kill_face(f);
        }
        self.add_face([c, a, d]);
        self.add_face([d, b, c]);
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::halfedge::tests::octahedron;

    fn octa() -> EditMesh {
        let (v, f) = octahedron();
        EditMesh::from_halfedge(&HalfEdgeMesh::new(v, f).unwrap())
    }

    #[test]
    fn split_adds_one_vertex_three_edges_two_faces() {
        let mut m = octa();
        let (v, e, f) = (m.n_vertices(), m.n_edges(), m.n_faces());
        m.split_edge(0, 2).unwrap();
        assert_eq!((m.n_vertices(), m.n_edges(), m.n_faces()), (v + 1, e + 3, f + 2));
        assert!(m.to_halfedge().is_ok());
    }

    #[test]
    fn collapse_undoes_a_split() {
        let mut m = octa();
        m.split_edge(0, 2).unwrap();
        let chi = m.euler_characteristic();
        let (v, e, f) = (m.n_vertices(), m.n_edges(), m.n_faces());
        let mid = m.vertex_slots() - 1;
        assert!(m.collapse_edge(0, mid, *m.position(0)));
        assert_eq!((m.n_vertices(), m.n_edges(), m.n_faces()), (v - 1, e - 3, f - 2));
        assert_eq!(m.euler_characteristic(), chi);
        assert!(m.to_halfedge().is_ok());
    }

    #[test]
    fn flip_keeps_counts() {
        let mut m = octa();
        m.split_edge(0, 2).unwrap();
        m.split_edge(1, 3).unwrap();
        let before = (m.n_vertices(), m.n_edges(), m.n_faces());
        let edges = m.edges();
        let flipped = edges.iter().any(|&(a, b)| m.flip_edge(a, b));
        assert!(flipped);
        assert_eq!((m.n_vertices(), m.n_edges(), m.n_faces()), before);
        assert!(m.to_halfedge().is_ok());
    }
}
