//! Cubic voxel partition of a point cloud.
//!
//! Every point belongs to exactly one box. Two boxes are adjacent when their
//! integer indices differ by at most one on every axis (26-neighborhood plus
//! the box itself). Parity coloring splits the boxes into eight rounds in
//! which no two boxes are adjacent.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use crate::error::{Error, Result};
use crate::geometry::{bounding_box, Point, PointCloud};

/// Integer box coordinates; ordered lexicographically by `(i, j, k)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BoxIndex {
    pub i: i64,
    pub j: i64,
    pub k: i64,
}

impl BoxIndex {
    pub const fn new(i: i64, j: i64, k: i64) -> Self {
        Self { i, j, k }
    }

    /// The box itself and its 26 neighbors.
    pub fn neighborhood(self) -> impl Iterator<Item = BoxIndex> {
        (-1..=1).flat_map(move |di| {
            (-1..=1).flat_map(move |dj| {
                (-1..=1).map(move |dk| BoxIndex::new(self.i + di, self.j + dj, self.k + dk))
            })
        })
    }
}

/// True iff the boxes are identical or share a face, edge or corner.
pub fn adjacent(a: BoxIndex, b: BoxIndex) -> bool {
    (a.i - b.i).abs() <= 1 && (a.j - b.j).abs() <= 1 && (a.k - b.k).abs() <= 1
}

/// Round (0..8) in which a box is processed: the parity pattern of its
/// coordinates.
pub fn round_color(b: BoxIndex) -> usize {
    (b.i.rem_euclid(2) + 2 * b.j.rem_euclid(2) + 4 * b.k.rem_euclid(2)) as usize
}

/// Box edge length `2 l / cbrt(n)` for a cloud of `n` points whose bounding
/// box has longest side `l`.
pub fn scale_for_count(longest_border: f64, n: usize) -> Result<f64> {
    if longest_border <= 0.0 || !longest_border.is_finite() {
        return Err(Error::DegenerateInput(
            "bounding box has zero extent".into(),
        ));
    }
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    Ok(2.0 * longest_border / (n as f64).cbrt())
}

/// Default box scale of a cloud.
pub fn default_scale(cloud: &PointCloud) -> Result<f64> {
    let b = bounding_box(cloud)?;
    scale_for_count(b.longest_border(), cloud.len())
}

#[derive(Debug, Clone)]
pub struct VoxelGrid {
    origin: Point,
    scale: f64,
    dims: [i64; 3],
    boxes: BTreeMap<BoxIndex, Vec<usize>>,
    point_box: Vec<BoxIndex>,
    points: Vec<Point>,
}

/// Partition `cloud` into cubes of edge `scale` anchored at its bounding-box
/// minimum.
pub fn build_grid(cloud: &PointCloud, scale: f64) -> Result<VoxelGrid> {
    let b = bounding_box(cloud)?;
    VoxelGrid::with_frame(cloud.points(), b.min, scale, b.extent().into())
}

impl VoxelGrid {
    fn with_frame(points: &[Point], origin: Point, scale: f64, extent: [f64; 3]) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidParam(format!("voxel scale must be > 0, got {scale}")));
        }
        if points.is_empty() {
            return Err(Error::EmptyInput);
        }
        let dims = extent.map(|e| ((e / scale).ceil() as i64).max(1));
        let mut grid = VoxelGrid {
            origin,
            scale,
            dims,
            boxes: BTreeMap::new(),
            point_box: Vec::with_capacity(points.len()),
            points: points.to_vec(),
        };
        for (idx, p) in points.iter().enumerate() {
            let b = grid.box_of(p);
            grid.point_box.push(b);
            grid.boxes.entry(b).or_default().push(idx);
        }
        let limit = 8 * points.len() / grid.boxes.len();
        if let Some((b, members)) = grid.boxes.iter().find(|(_, m)| m.len() > limit) {
            log::warn!(
                "voxel box {:?} holds {} points (> {} = 8x mean occupancy); density is uneven",
                b,
                members.len(),
                limit
            );
        }
        Ok(grid)
    }

    /// Same frame (origin, scale, extents) applied to another point set,
    /// typically a subset of the original cloud.
    pub fn rebucket(&self, points: &[Point]) -> Result<VoxelGrid> {
        let extent = self.dims.map(|d| d as f64 * self.scale);
        let mut g = Self::with_frame(points, self.origin, self.scale, extent)?;
        g.dims = self.dims;
        Ok(g)
    }

    /// Box containing position `p`; positions past the far face are clamped
    /// into the last box.
    pub fn box_of(&self, p: &Point) -> BoxIndex {
        let f = |a: usize| {
            let raw = ((p[a] - self.origin[a]) / self.scale).floor() as i64;
            raw.clamp(0, self.dims[a] - 1)
        };
        BoxIndex::new(f(0), f(1), f(2))
    }

    pub fn origin(&self) -> &Point {
        &self.origin
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn dims(&self) -> [i64; 3] {
        self.dims
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Box of an indexed point.
    pub fn point_box(&self, idx: usize) -> BoxIndex {
        self.point_box[idx]
    }

    /// Occupied boxes and their members, in lexicographic box order.
    pub fn boxes(&self) -> &BTreeMap<BoxIndex, Vec<usize>> {
        &self.boxes
    }

    pub fn members(&self, b: &BoxIndex) -> &[usize] {
        self.boxes.get(b).map_or(&[], Vec::as_slice)
    }

    pub fn occupied(&self) -> usize {
        self.boxes.len()
    }

    /// Whether two indexed points lie in identical or adjacent boxes.
    pub fn points_adjacent(&self, a: usize, b: usize) -> bool {
        adjacent(self.point_box[a], self.point_box[b])
    }

    /// Indices of all points in the box of `idx` and its neighbors, in box
    /// order then member order.
    pub fn neighborhood_points(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        self.point_box[idx]
            .neighborhood()
            .flat_map(move |b| self.members(&b).iter().copied())
    }

    /// Shortest-path length between two points through hops that stay within
    /// identical or adjacent boxes. `None` when no such chain exists.
    pub fn intrinsic_distance(&self, a: usize, b: usize) -> Option<f64> {
        #[derive(PartialEq)]
        struct State(f64, usize);
        impl Eq for State {}
        impl Ord for State {
            fn cmp(&self, o: &Self) -> Ordering {
                o.0.total_cmp(&self.0).then(o.1.cmp(&self.1))
            }
        }
        impl PartialOrd for State {
            fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
                Some(self.cmp(o))
            }
        }
        if a == b {
            return Some(0.0);
        }
        let mut dist = vec![f64::INFINITY; self.points.len()];
        let mut heap = BinaryHeap::new();
        dist[a] = 0.0;
        heap.push(State(0.0, a));
        while let Some(State(d, u)) = heap.pop() {
            if u == b {
                return Some(d);
            }
            if d > dist[u] {
                continue;
            }
            for w in self.neighborhood_points(u) {
                let nd = d + (self.points[u] - self.points[w]).norm();
                if nd < dist[w] {
                    dist[w] = nd;
                    heap.push(State(nd, w));
                }
            }
        }
        None
    }
}
