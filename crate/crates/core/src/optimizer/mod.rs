//! Internal edge rebuilding and isotropic remeshing.

mod edit;
mod remesh;

use crate::error::{Error, Result};
use crate::halfedge::HalfEdgeMesh;
use crate::mesher::split_bowties;
use crate::voxel::{adjacent, VoxelGrid};

pub use edit::EditMesh;
pub use remesh::{adaptive_target_length, isotropic_remesh, IterationStats, RemeshParams, RemeshStats};

/// Mean length over unique edges.
pub fn mean_edge_length(mesh: &HalfEdgeMesh) -> Result<f64> {
    let edges = mesh.edges();
    if edges.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let p = mesh.positions();
    Ok(edges.iter().map(|&(a, b)| (p[a] - p[b]).norm()).sum::<f64>() / edges.len() as f64)
}

/// Delete every face with two vertices in non-adjacent boxes of `grid`,
/// then drop vertices left without faces. The openings left behind are the
/// rebuilt internal edges.
pub fn rebuild_internal_edges(mesh: &HalfEdgeMesh, grid: &VoxelGrid) -> Result<HalfEdgeMesh> {
    let p = mesh.positions();
    let boxes: Vec<_> = p.iter().map(|q| grid.box_of(q)).collect();
    let legal = |t: &[usize; 3]| (0..3).all(|k| adjacent(boxes[t[k]], boxes[t[(k + 1) % 3]]));
    let kept: Vec<[usize; 3]> = mesh.faces().iter().copied().filter(legal).collect();
    let dropped = mesh.n_faces() - kept.len();
    let (kept, bowties) = split_bowties(mesh.n_vertices(), kept);

    let mut used = vec![false; mesh.n_vertices()];
    for t in &kept {
        for &v in t {
            used[v] = true;
        }
    }
    let mut remap = vec![usize::MAX; used.len()];
    let mut positions = Vec::new();
    let mut classes = Vec::new();
    for v in 0..used.len() {
        if used[v] {
            remap[v] = positions.len();
            positions.push(p[v]);
            classes.push(mesh.classes()[v]);
        }
    }
    let faces: Vec<[usize; 3]> = kept.into_iter().map(|t| t.map(|v| remap[v])).collect();
    if faces.is_empty() {
        log::warn!("rebuilding internal edges removed every face");
    }
    log::debug!("internal edges: {dropped} illegal faces, {bowties} bowtie faces removed");
    Ok(HalfEdgeMesh::new(positions, faces)?.with_classes(classes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Point, PointCloud};
    use crate::voxel::build_grid;

    #[test]
    fn mean_length_cases() {
        let s3 = 3f64.sqrt();
        let tri = HalfEdgeMesh::new(
            vec![Point::new(0.0, 0.0, 0.0), Point::new(2.0, 0.0, 0.0), Point::new(1.0, s3, 0.0)],
            vec![[0, 1, 2]],
        )
        .unwrap();
        assert!((mean_edge_length(&tri).unwrap() - 2.0).abs() < 1e-12);
        let empty = HalfEdgeMesh::new(vec![Point::origin()], vec![]).unwrap();
        assert!(matches!(mean_edge_length(&empty), Err(Error::EmptyMesh)));
    }

    #[test]
    fn spanning_triangle_is_deleted() {
        let pts = vec![
            Point::new(0.1, 0.1, 0.1),
            Point::new(0.5, 0.2, 0.1),
            Point::new(3.5, 0.1, 0.1),
            Point::new(0.2, 0.6, 0.1),
        ];
        let cloud = PointCloud::new(pts.clone()).unwrap();
        let grid = build_grid(&cloud, 1.0).unwrap();
        let mesh = HalfEdgeMesh::new(pts, vec![[0, 1, 2], [0, 3, 1]]).unwrap();
        let out = rebuild_internal_edges(&mesh, &grid).unwrap();
        assert_eq!(out.n_faces(), 1);
        assert_eq!(out.n_vertices(), 3);
        let again = rebuild_internal_edges(&out, &grid).unwrap();
        assert_eq!(again.faces(), out.faces());
        assert_eq!(again.positions(), out.positions());
    }
}
