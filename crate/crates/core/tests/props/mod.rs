//! Property checks shared by the standalone property targets and the
//! acceptance runner. Each check returns `Err` with a description of the
//! first violation.
#![allow(dead_code)]

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use voxmesh::geometry::{Point, PointCloud};
use voxmesh::halfedge::HalfEdgeMesh;
use voxmesh::knn::NeighborIndex;
use voxmesh::metrics::{min_angle, triangle_quality};
use voxmesh::optimizer::EditMesh;
use voxmesh::voxel::build_grid;

pub type Check = Result<(), TestCaseError>;

fn fail(msg: String) -> Check {
    Err(TestCaseError::fail(msg))
}

// kNN against an exhaustive scan.

/// Coordinates drawn from a coarse lattice half of the time, so that equal
/// distances (and duplicate points) are common.
pub fn point_set(max: usize) -> impl Strategy<Value = Vec<[f64; 3]>> {
    let coord = prop_oneof![(-4i32..=4).prop_map(|v| v as f64 * 0.5), -2.0f64..2.0];
    prop::collection::vec([coord.clone(), coord.clone(), coord], 1..=max)
}

pub fn brute_knn(points: &[Point], q: &Point, k: usize, exclude: Option<usize>) -> Vec<usize> {
    let mut all: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != exclude)
        .map(|(i, p)| ((p - q).norm_squared(), i))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    all.into_iter().take(k).map(|(_, i)| i).collect()
}

pub fn knn_matches_brute_force(coords: &[[f64; 3]], query: [f64; 3], k: usize) -> Check {
    let points: Vec<Point> = coords.iter().map(|c| Point::new(c[0], c[1], c[2])).collect();
    let index = NeighborIndex::new(&points);
    let q = Point::new(query[0], query[1], query[2]);
    let got: Vec<usize> = index.knn(&q, k, None).iter().map(|n| n.index).collect();
    let want = brute_knn(&points, &q, k, None);
    if got != want {
        return fail(format!("query {query:?} k={k}: got {got:?}, want {want:?}"));
    }
    let i = coords.len() / 2;
    let got: Vec<usize> = index.knn(&points[i], k, Some(i)).iter().map(|n| n.index).collect();
    let want = brute_knn(&points, &points[i], k, Some(i));
    if got != want {
        return fail(format!("point {i} k={k}: got {got:?}, want {want:?}"));
    }
    Ok(())
}

// Euler characteristic deltas of the atomic remeshing operations.

/// Closed test mesh: an octahedron refined by midpoint subdivision and
/// pushed onto the unit sphere.
pub fn subdivided_octahedron(levels: usize) -> HalfEdgeMesh {
    let mut v = vec![
        Point::new(1.0, 0.0, 0.0),
        Point::new(-1.0, 0.0, 0.0),
        Point::new(0.0, 1.0, 0.0),
        Point::new(0.0, -1.0, 0.0),
        Point::new(0.0, 0.0, 1.0),
        Point::new(0.0, 0.0, -1.0),
    ];
    let mut f: Vec<[usize; 3]> = vec![
        [0, 2, 4],
        [2, 1, 4],
        [1, 3, 4],
        [3, 0, 4],
        [2, 0, 5],
        [1, 2, 5],
        [3, 1, 5],
        [0, 3, 5],
    ];
    for _ in 0..levels {
        let mut mid = std::collections::HashMap::new();
        let mut next = Vec::new();
        for t in &f {
            let mut m = [0; 3];
            for k in 0..3 {
                let (a, b) = (t[k].min(t[(k + 1) % 3]), t[k].max(t[(k + 1) % 3]));
                m[k] = *mid.entry((a, b)).or_insert_with(|| {
                    let p = Point::from((v[a].coords + v[b].coords).normalize());
                    v.push(p);
                    v.len() - 1
                });
            }
            next.push([t[0], m[0], m[2]]);
            next.push([t[1], m[1], m[0]]);
            next.push([t[2], m[2], m[1]]);
            next.push(m);
        }
        f = next;
    }
    HalfEdgeMesh::new(v, f).expect("subdivided octahedron is manifold")
}

/// Octahedron patch with its lower half removed: an open mesh with a
/// boundary loop, for boundary-edge splits.
pub fn open_patch(levels: usize) -> HalfEdgeMesh {
    let m = subdivided_octahedron(levels);
    let faces: Vec<[usize; 3]> = m
        .faces()
        .iter()
        .copied()
        .filter(|t| t.iter().all(|&i| m.positions()[i].z >= -1e-12))
        .collect();
    let used: std::collections::BTreeSet<usize> = faces.iter().flatten().copied().collect();
    let remap: std::collections::HashMap<usize, usize> =
        used.iter().enumerate().map(|(n, &o)| (o, n)).collect();
    let v = used.iter().map(|&o| m.positions()[o]).collect();
    let f = faces.iter().map(|t| t.map(|i| remap[&i])).collect();
    HalfEdgeMesh::new(v, f).unwrap()
}

fn counts(m: &EditMesh) -> (i64, i64, i64) {
    (m.n_vertices() as i64, m.n_edges() as i64, m.n_faces() as i64)
}

/// Apply `ops` random splits, collapses and flips chosen by `seed`; every
/// applied operation must change (V, E, F) by its known delta and keep
/// V − E + F fixed.
pub fn remesh_op_deltas(open: bool, seed: u64, ops: usize) -> Check {
    let base = if open { open_patch(2) } else { subdivided_octahedron(2) };
    let mut m = EditMesh::from_halfedge(&base);
    let chi = m.euler_characteristic();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut applied_ops = [0usize; 3];
    for step in 0..ops {
        let edges = m.edges();
        let (a, b) = edges[rng.random_range(0..edges.len())];
        let before = counts(&m);
        let boundary = m.is_boundary_edge(a, b);
        let kind = rng.random_range(0..3);
        let (name, applied, delta) = match kind {
            0 => {
                let ok = m.split_edge(a, b).is_some();
                let d = if boundary { (1, 2, 1) } else { (1, 3, 2) };
                ("split", ok, d)
            }
            1 => {
                if boundary || !m.can_collapse(a, b) {
                    continue;
                }
                let mid = Point::from((m.position(a).coords + m.position(b).coords) / 2.0);
                ("collapse", m.collapse_edge(a, b, mid), (-1, -3, -2))
            }
            _ => {
                if boundary {
                    continue;
                }
                ("flip", m.flip_edge(a, b), (0, 0, 0))
            }
        };
        if !applied {
            if counts(&m) != before {
                return fail(format!("step {step}: rejected {name} changed counts"));
            }
            continue;
        }
        applied_ops[kind] += 1;
        let after = counts(&m);
        let got = (after.0 - before.0, after.1 - before.1, after.2 - before.2);
        if got != delta {
            return fail(format!("step {step}: {name} of ({a},{b}) changed (V,E,F) by {got:?}, want {delta:?}"));
        }
        if m.euler_characteristic() != chi {
            return fail(format!("step {step}: {name} changed the Euler characteristic"));
        }
    }
    if let Err(e) = m.to_halfedge() {
        return fail(format!("edited mesh is no longer a manifold: {e}"));
    }
    if ops >= 100 && applied_ops.iter().any(|&c| c == 0) {
        return fail(format!("some operation was never applied: {applied_ops:?} (split, collapse, flip)"));
    }
    Ok(())
}

// Similarity invariance of the triangle measures.

pub fn triangle() -> impl Strategy<Value = [[f64; 3]; 3]> {
    let c = -1.0f64..1.0;
    [[c.clone(), c.clone(), c.clone()], [c.clone(), c.clone(), c.clone()], [c.clone(), c.clone(), c]]
        .prop_filter("non-degenerate", |t| {
            let p = t.map(|c| Point::new(c[0], c[1], c[2]));
            min_angle(&p[0], &p[1], &p[2]) > 1.0
        })
}

/// Random similarity: unit quaternion rotation, positive scale, translation.
pub fn similarity() -> impl Strategy<Value = ([f64; 4], f64, [f64; 3])> {
    let q = [-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0]
        .prop_filter("quaternion away from zero", |q| q.iter().map(|x| x * x).sum::<f64>() > 1e-3);
    let t = -100.0f64..100.0;
    (q, 1e-3f64..1e3, [t.clone(), t.clone(), t])
}

fn transform(p: &Point, q: [f64; 4], s: f64, t: [f64; 3]) -> Point {
    let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    let (w, x, y, z) = (q[0] / n, q[1] / n, q[2] / n, q[3] / n);
    // Rotation matrix of the unit quaternion, written out by hand.
    let r = [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ];
    let v = [p.x, p.y, p.z];
    let rot = |i: usize| r[i][0] * v[0] + r[i][1] * v[1] + r[i][2] * v[2];
    Point::new(s * rot(0) + t[0], s * rot(1) + t[1], s * rot(2) + t[2])
}

pub fn similarity_invariance(tri: [[f64; 3]; 3], sim: ([f64; 4], f64, [f64; 3])) -> Check {
    let p = tri.map(|c| Point::new(c[0], c[1], c[2]));
    let (q, s, t) = sim;
    let m = p.map(|x| transform(&x, q, s, t));
    let (q0, q1) = (triangle_quality(&p[0], &p[1], &p[2]), triangle_quality(&m[0], &m[1], &m[2]));
    let (a0, a1) = (min_angle(&p[0], &p[1], &p[2]), min_angle(&m[0], &m[1], &m[2]));
    if (q0 - q1).abs() > 1e-9 {
        return fail(format!("Q changed from {q0} to {q1}"));
    }
    if (a0 - a1).abs() > 1e-7 {
        return fail(format!("min angle changed from {a0} to {a1}"));
    }
    if !(0.0..=1.0 + 1e-12).contains(&q0) {
        return fail(format!("Q = {q0} outside [0, 1]"));
    }
    Ok(())
}

// Metric axioms of the voxel intrinsic distance.

pub fn grid_points() -> impl Strategy<Value = (Vec<[f64; 3]>, f64)> {
    (prop::collection::vec([0.0f64..3.0, 0.0f64..3.0, 0.0f64..1.0], 2..40), 0.3f64..1.5)
}

pub fn intrinsic_metric_axioms(coords: &[[f64; 3]], scale: f64) -> Check {
    let cloud = PointCloud::from_slices(coords).unwrap();
    let grid = build_grid(&cloud, scale).unwrap();
    let n = coords.len().min(12);
    let p = cloud.points();
    let d: Vec<Vec<Option<f64>>> = (0..n)
        .map(|a| (0..n).map(|b| grid.intrinsic_distance(a, b)).collect())
        .collect();
    let tol = |x: f64| 1e-9 * (1.0 + x.abs());
    for a in 0..n {
        if d[a][a] != Some(0.0) {
            return fail(format!("d({a},{a}) = {:?}", d[a][a]));
        }
        for b in 0..n {
            match (d[a][b], d[b][a]) {
                (None, None) => {}
                (Some(x), Some(y)) => {
                    if (x - y).abs() > tol(x) {
                        return fail(format!("d({a},{b}) = {x} but d({b},{a}) = {y}"));
                    }
                    let e = (p[a] - p[b]).norm();
                    if x + tol(x) < e {
                        return fail(format!("d({a},{b}) = {x} shorter than the straight line {e}"));
                    }
                    if a != b && e > 0.0 && x <= 0.0 {
                        return fail(format!("d({a},{b}) = 0 for distinct positions"));
                    }
                }
                (x, y) => return fail(format!("reachability differs: d({a},{b}) = {x:?}, d({b},{a}) = {y:?}")),
            }
            for c in 0..n {
                if let (Some(ab), Some(bc)) = (d[a][b], d[b][c]) {
                    match d[a][c] {
                        Some(ac) if ac <= ab + bc + tol(ab + bc) => {}
                        other => {
                            return fail(format!(
                                "triangle inequality: d({a},{c}) = {other:?} > d({a},{b}) + d({b},{c}) = {}",
                                ab + bc
                            ))
                        }
                    }
                }
            }
        }
    }
    // Points in the same or adjacent boxes are one straight hop apart.
    for a in 0..n {
        for b in 0..n {
            if grid.points_adjacent(a, b) {
                let e = (p[a] - p[b]).norm();
                if (d[a][b].unwrap() - e).abs() > tol(e) {
                    return fail(format!("adjacent pair ({a},{b}) not at straight-line distance"));
                }
            }
        }
    }
    Ok(())
}

