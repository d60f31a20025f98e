use std::collections::{HashMap, HashSet};

use crate::error::Result;
use crate::geometry::{triangle_normal, Point, Vector};
use crate::halfedge::{HalfEdgeMesh, VertexClass};
use crate::voxel::VoxelGrid;

/// Cosine below which a fill triangle counts as folded over its neighbor.
const FOLD_COS: f64 = -0.9;

/// Ear-fill boundary loops of at most `max_edges` edges (all loops when
/// `None`). Without a grid, a loop that cannot be ear-clipped is fanned
/// around a new vertex at its centroid. With a grid, a loop is filled only
/// if every new triangle joins points of adjacent boxes; the grid must be
/// built over the mesh vertices. Returns the new mesh and the number of
/// loops filled.
pub fn fill_holes(
    mesh: &HalfEdgeMesh,
    max_edges: Option<usize>,
    grid: Option<&VoxelGrid>,
) -> Result<(HalfEdgeMesh, usize)> {
    let mut p = mesh.positions().to_vec();
    let mut faces = mesh.faces().to_vec();
    let mut edges: HashSet<(usize, usize)> = mesh.edges().into_iter().collect();
    let mut face_keys: HashSet<[usize; 3]> = faces.iter().map(|&t| key(t)).collect();
    let mut normals: HashMap<(usize, usize), Vector> = faces
        .iter()
        .flat_map(|t| {
            let n = unit_normal(&p, *t);
            (0..3).map(move |k| ((t[k], t[(k + 1) % 3]), n))
        })
        .collect();
    let mut filled = 0;
    for lp in mesh.boundary_loops() {
        if lp.len() < 3 || max_edges.is_some_and(|m| lp.len() > m) {
            continue;
        }
        // Triangles that fold back onto their neighbors are refused; the
        // outer rim of an open sheet has no other kind and stays open.
        let tris = match ear_clip(&p, &lp, &edges, &face_keys, &normals, grid) {
            Some(t) => t,
            None if grid.is_none() && lp.len() > 3 => match fan(&mut p, &lp, &normals) {
                Some(t) => t,
                None => continue,
            },
            None => continue,
        };
        for t in tris {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                edges.insert((a.min(b), a.max(b)));
            }
            face_keys.insert(key(t));
            let n = unit_normal(&p, t);
            for k in 0..3 {
                normals.insert((t[k], t[(k + 1) % 3]), n);
            }
            faces.push(t);
        }
        filled += 1;
    }
    if filled == 0 {
        return Ok((mesh.clone(), 0));
    }
    let mut classes = mesh.classes().to_vec();
    classes.resize(p.len(), VertexClass::Ordinary);
    let out = HalfEdgeMesh::new(p, faces)?.with_classes(classes);
    Ok((out, filled))
}

/// Triangles joining each loop edge to a new vertex at the loop centroid,
/// which is appended to `p`. `None` (and `p` untouched) if any folds.
fn fan(p: &mut Vec<Point>, lp: &[usize], normals: &HashMap<(usize, usize), Vector>) -> Option<Vec<[usize; 3]>> {
    let c = lp.iter().map(|&v| p[v].coords).sum::<Vector>() / lp.len() as f64;
    let x = p.len();
    p.push(Point::from(c));
    let tris: Vec<[usize; 3]> = (0..lp.len()).map(|i| [lp[i], lp[(i + 1) % lp.len()], x]).collect();
    if tris.iter().any(|&t| triangle_area(p, t) <= 0.0 || folds(p, t, normals)) {
        p.pop();
        return None;
    }
    Some(tris)
}

fn triangle_area(p: &[Point], t: [usize; 3]) -> f64 {
    crate::geometry::triangle_area(&p[t[0]], &p[t[1]], &p[t[2]])
}

fn unit_normal(p: &[Point], t: [usize; 3]) -> Vector {
    triangle_normal(&p[t[0]], &p[t[1]], &p[t[2]]).normalize()
}

/// Whether triangle `t` folds over a face sharing one of its edges.
fn folds(p: &[Point], t: [usize; 3], normals: &HashMap<(usize, usize), Vector>) -> bool {
    let n = unit_normal(p, t);
    (0..3).any(|k| {
        normals
            .get(&(t[(k + 1) % 3], t[k]))
            .is_some_and(|m| n.dot(m) < FOLD_COS)
    })
}

fn key(t: [usize; 3]) -> [usize; 3] {
    let mut s = t;
    s.sort_unstable();
    s
}

fn ear_clip(
    p: &[Point],
    lp: &[usize],
    edges: &HashSet<(usize, usize)>,
    face_keys: &HashSet<[usize; 3]>,
    normals: &HashMap<(usize, usize), Vector>,
    grid: Option<&VoxelGrid>,
) -> Option<Vec<[usize; 3]>> {
    let mut normals = normals.clone();
    let mut poly = lp.to_vec();
    let mut newell = Vector::zeros();
    for i in 0..poly.len() {
        let (a, b) = (p[poly[i]], p[poly[(i + 1) % poly.len()]]);
        newell += a.coords.cross(&b.coords);
    }
    let mut added: HashSet<(usize, usize)> = HashSet::new();
    let mut tris = Vec::new();
    while poly.len() > 3 {
        let m = poly.len();
        let mut best: Option<(bool, f64, usize)> = None;
        for i in 0..m {
            let (a, b, c) = (poly[(i + m - 1) % m], poly[i], poly[(i + 1) % m]);
            let d = (a.min(c), a.max(c));
            if edges.contains(&d) || added.contains(&d) {
                continue;
            }
            if grid.is_some_and(|g| !g.points_adjacent(a, c)) {
                continue;
            }
            let convex = triangle_normal(&p[a], &p[b], &p[c]).dot(&newell) > 0.0;
            if convex && poly.iter().any(|&q| q != a && q != b && q != c && in_ear(p, [a, b, c], &p[q], &newell)) {
                continue;
            }
            if folds(p, [a, b, c], &normals) {
                continue;
            }
            let (u, v) = (p[a] - p[b], p[c] - p[b]);
            let angle = u.angle(&v);
            let better = match best {
                None => true,
                Some((bc, ba, _)) => (convex && !bc) || (convex == bc && angle < ba),
            };
            if better {
                best = Some((convex, angle, i));
            }
        }
        let (_, _, i) = best?;
        let (a, b, c) = (poly[(i + m - 1) % m], poly[i], poly[(i + 1) % m]);
        let n = unit_normal(p, [a, b, c]);
        normals.insert((c, a), n);
        tris.push([a, b, c]);
        added.insert((a.min(c), a.max(c)));
        poly.remove(i);
    }
    let last = [poly[0], poly[1], poly[2]];
    if face_keys.contains(&key(last)) || folds(p, last, &normals) {
        return None;
    }
    if let Some(g) = grid {
        if !(0..3).all(|k| g.points_adjacent(last[k], last[(k + 1) % 3])) {
            return None;
        }
    }
    tris.push(last);
    Some(tris)
}

/// Whether `q` projects strictly inside triangle `t` along `n`.
fn in_ear(p: &[Point], t: [usize; 3], q: &Point, n: &Vector) -> bool {
    (0..3).all(|k| {
        let (a, b) = (p[t[k]], p[t[(k + 1) % 3]]);
        (b - a).cross(&(q - a)).dot(n) > 0.0
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::halfedge::tests::octahedron;

    #[test]
    fn removed_face_is_restored() {
        let (v, mut f) = octahedron();
        f.pop();
        let mesh = HalfEdgeMesh::new(v, f).unwrap();
        assert_eq!(mesh.boundary_loops().len(), 1);
        let (out, n) = fill_holes(&mesh, Some(8), None).unwrap();
        assert_eq!(n, 1);
        assert!(out.is_closed());
        assert_eq!(out.euler_characteristic(), 2);
    }

    #[test]
    fn square_hole_in_pyramid_pair() {
        // Octahedron without the four lower faces: a square opening.
        let (v, f) = octahedron();
        let keep: Vec<[usize; 3]> = f.into_iter().filter(|t| !t.contains(&5)).collect();
        let mesh = HalfEdgeMesh::new(v, keep).unwrap();
        let (out, n) = fill_holes(&mesh, Some(8), None).unwrap();
        assert_eq!(n, 1);
        assert_eq!(out.n_faces(), 6);
        assert!(out.is_closed());
        let (small, n) = fill_holes(&mesh, Some(3), None).unwrap();
        assert_eq!(n, 0);
        assert_eq!(small.n_faces(), 4);
    }

    fn normals_of(p: &[Point], faces: &[[usize; 3]]) -> HashMap<(usize, usize), Vector> {
        faces
            .iter()
            .flat_map(|&t| {
                let n = unit_normal(p, t);
                (0..3).map(move |k| ((t[k], t[(k + 1) % 3]), n))
            })
            .collect()
    }

    #[test]
    fn fan_closes_pyramid_opening() {
        let (v, f) = octahedron();
        let keep: Vec<[usize; 3]> = f.into_iter().filter(|t| !t.contains(&5)).collect();
        let mesh = HalfEdgeMesh::new(v.clone(), keep.clone()).unwrap();
        let lp = mesh.boundary_loops().remove(0);
        let mut p = v;
        let n = normals_of(&p, &keep);
        let tris = fan(&mut p, &lp, &n).unwrap();
        assert_eq!(tris.len(), 4);
        assert_eq!(p.len(), 7);
        assert!(p[6].coords.norm() < 1e-12);
        let mut all = keep;
        all.extend(tris);
        let out = HalfEdgeMesh::new(p, all).unwrap();
        assert_eq!(out.boundary_loops().len(), 0);
    }

    #[test]
    fn fan_refuses_sheet_rim() {
        let p0 = vec![
            Point::new(0.0, 0.0, 0.0),
            Point::new(1.0, 0.0, 0.0),
            Point::new(1.0, 1.0, 0.0),
            Point::new(0.0, 1.0, 0.0),
        ];
        let faces = vec![[0, 1, 2], [0, 2, 3]];
        let mesh = HalfEdgeMesh::new(p0.clone(), faces.clone()).unwrap();
        let lp = mesh.boundary_loops().remove(0);
        let mut p = p0;
        let n = normals_of(&p, &faces);
        assert!(fan(&mut p, &lp, &n).is_none());
        assert_eq!(p.len(), 4);
        let (out, n) = fill_holes(&mesh, None, None).unwrap();
        assert_eq!(n, 0);
        assert_eq!(out.n_faces(), 2);
    }
}
