use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use crate::error::{Error, Result};
use crate::geometry::{local_frame, PointCloud, Vector};
use crate::voxel::VoxelGrid;

/// The `k` nearest points to `idx` among the points of its own and adjacent
/// boxes, nearest first (ties by index).
pub(crate) fn box_neighbors(grid: &VoxelGrid, idx: usize, k: usize) -> Vec<usize> {
    let pts = grid.points();
    let p = pts[idx];
    let mut cand: Vec<(f64, usize)> = grid
        .neighborhood_points(idx)
        .filter(|&j| j != idx)
        .map(|j| ((pts[j] - p).norm_squared(), j))
        .collect();
    let by_dist = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if cand.len() > k {
        cand.select_nth_unstable_by(k, by_dist);
        cand.truncate(k);
    }
    cand.sort_unstable_by(by_dist);
    cand.into_iter().map(|(_, j)| j).collect()
}

/// Oriented unit normals plus the number of points whose neighborhood
/// contains an opposing normal (a sign of sheets closer than the box
/// scale).
#[derive(Debug, Clone)]
pub struct NormalField {
    pub normals: Vec<Vector>,
    pub mixed: usize,
}

/// PCA normals over box-restricted neighborhoods, oriented by propagation
/// along a minimum spanning tree of the neighbor graph (edge weight
/// `1 − |n_i · n_j|`). Each connected component is seeded at its highest
/// point, whose normal is made to point up.
pub fn estimate_normals(cloud: &PointCloud, grid: &VoxelGrid, k: usize) -> Result<NormalField> {
    if cloud.len() <= k.min(2) || cloud.len() < 3 {
        return Err(Error::InsufficientPoints {
            needed: k.min(2),
            got: cloud.len(),
        });
    }
    let neighbors = crate::par::map_range(cloud.len(), |i| box_neighbors(grid, i, k));
    Ok(orient_normals(cloud, &neighbors))
}

pub(crate) fn orient_normals(cloud: &PointCloud, neighbors: &[Vec<usize>]) -> NormalField {
    let n = cloud.len();
    let mut normals = crate::par::map_range(n, |i| {
        let pts = std::iter::once(i)
            .chain(neighbors[i].iter().copied())
            .map(|j| cloud.point(j));
        match local_frame(pts, None) {
            Some(f) if neighbors[i].len() >= 2 => f.normal,
            _ => Vector::z(),
        }
    });

    let mut adj: Vec<Vec<usize>> = neighbors.to_vec();
    for (i, list) in neighbors.iter().enumerate() {
        for &j in list {
            adj[j].push(i);
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }

    #[derive(PartialEq)]
    struct Edge(f64, usize, usize);
    impl Eq for Edge {}
    impl Ord for Edge {
        fn cmp(&self, o: &Self) -> Ordering {
            o.0.total_cmp(&self.0)
                .then(o.1.cmp(&self.1))
                .then(o.2.cmp(&self.2))
        }
    }
    impl PartialOrd for Edge {
        fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
            Some(self.cmp(o))
        }
    }

    let mut component = vec![usize::MAX; n];
    let mut visited = vec![false; n];
    for start in 0..n {
        if component[start] != usize::MAX {
            continue;
        }
        let mut members = vec![start];
        component[start] = start;
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &w in &adj[u] {
                if component[w] == usize::MAX {
                    component[w] = start;
                    members.push(w);
                    queue.push_back(w);
                }
            }
        }
        let seed = *members
            .iter()
            .max_by(|&&a, &&b| {
                cloud.point(a).z.total_cmp(&cloud.point(b).z).then(b.cmp(&a))
            })
            .expect("component has a member");
        if normals[seed].z < 0.0 {
            normals[seed] = -normals[seed];
        }
        visited[seed] = true;
        let mut heap = BinaryHeap::new();
        for &w in &adj[seed] {
            heap.push(Edge(1.0 - normals[seed].dot(&normals[w]).abs(), w, seed));
        }
        while let Some(Edge(_, v, from)) = heap.pop() {
            if visited[v] {
                continue;
            }
            visited[v] = true;
            if normals[v].dot(&normals[from]) < 0.0 {
                normals[v] = -normals[v];
            }
            for &w in &adj[v] {
                if !visited[w] {
                    heap.push(Edge(1.0 - normals[v].dot(&normals[w]).abs(), w, v));
                }
            }
        }
    }

    let mixed = (0..n)
        .filter(|&i| neighbors[i].iter().any(|&j| normals[i].dot(&normals[j]) < -0.5))
        .count();
    NormalField { normals, mixed }
}
