//! Exact k-nearest-neighbor queries over a point snapshot.
//!
//! Results are ordered by ascending squared distance with ties broken by
//! ascending point index, so every query is fully deterministic for a fixed
//! input ordering.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::geometry::{Point, PointCloud};

const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

/// Kd-tree over a copy of the input positions.
#[derive(Debug, Clone)]
pub struct NeighborIndex {
    points: Vec<Point>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

#[derive(Clone, Copy, PartialEq)]
struct Candidate {
    dist2: f64,
    index: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist2
            .total_cmp(&other.dist2)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl NeighborIndex {
    pub fn new(points: &[Point]) -> Self {
        let mut index = NeighborIndex {
            points: points.to_vec(),
            order: (0..points.len()).collect(),
            nodes: Vec::new(),
        };
        if !points.is_empty() {
            index.build(0, points.len());
        }
        index
    }

    pub fn from_cloud(cloud: &PointCloud) -> Self {
        Self::new(cloud.points())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &Point {
        &self.points[i]
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let mut lo = self.points[self.order[start]];
        let mut hi = lo;
        for &i in &self.order[start..end] {
            let p = &self.points[i];
            for a in 0..3 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        let extent = hi - lo;
        let axis = extent.imax();
        if extent[axis] == 0.0 {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let mid = start + (end - start) / 2;
        let points = &self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points[a][axis].total_cmp(&points[b][axis]).then(a.cmp(&b))
        });
        let value = self.points[self.order[mid]][axis];
        self.nodes.push(Node::Leaf { start: 0, end: 0 });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id] = Node::Split {
            axis,
            value,
            left,
            right,
        };
        id
    }

    /// The `k` nearest points to `query`, skipping `exclude` if given.
    ///
    /// Returns `min(k, available)` neighbors, nearest first.
    pub fn knn(&self, query: &Point, k: usize, exclude: Option<usize>) -> Vec<Neighbor> {
        if k == 0 || self.points.is_empty() {
            return Vec::new();
        }
        let mut heap: BinaryHeap<Candidate> = BinaryHeap::with_capacity(k + 1);
        self.search(0, query, k, exclude, &mut heap);
        let mut found = heap.into_vec();
        found.sort();
        found
            .into_iter()
            .map(|c| Neighbor {
                index: c.index,
                distance: c.dist2.sqrt(),
            })
            .collect()
    }

    /// Neighbors of an indexed point; the point itself is listed first
    /// (at distance 0) when `include_self` is set.
    pub fn neighbors_of(&self, i: usize, k: usize, include_self: bool) -> Vec<Neighbor> {
        if include_self {
            let mut out = vec![Neighbor {
                index: i,
                distance: 0.0,
            }];
            out.extend(self.knn(&self.points[i], k.saturating_sub(1), Some(i)));
            out
        } else {
            self.knn(&self.points[i], k, Some(i))
        }
    }

    fn search(
        &self,
        node: usize,
        query: &Point,
        k: usize,
        exclude: Option<usize>,
        heap: &mut BinaryHeap<Candidate>,
    ) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    if Some(i) == exclude {
                        continue;
                    }
                    let c = Candidate {
                        dist2: (self.points[i] - query).norm_squared(),
                        index: i,
                    };
                    if heap.len() < k {
                        heap.push(c);
                    } else if c < *heap.peek().expect("heap is full") {
                        heap.pop();
                        heap.push(c);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = query[axis] - value;
                let (near, far) = if diff < 0.0 {
                    (left, right)
                } else {
                    (right, left)
                };
                self.search(near, query, k, exclude, heap);
                // Equal distances must still be visited: a tie may carry a
                // smaller index.
                if heap.len() < k || diff * diff <= heap.peek().expect("non-empty").dist2 {
                    self.search(far, query, k, exclude, heap);
                }
            }
        }
    }

    /// All points within `radius` of `query`, sorted like `knn`.
    pub fn within(&self, query: &Point, radius: f64) -> Vec<Neighbor> {
        let mut out = Vec::new();
        if !self.points.is_empty() {
            self.collect_within(0, query, radius * radius, &mut out);
        }
        out.sort();
        out.into_iter()
            .map(|c| Neighbor {
                index: c.index,
                distance: c.dist2.sqrt(),
            })
            .collect()
    }

    fn collect_within(&self, node: usize, query: &Point, r2: f64, out: &mut Vec<Candidate>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let dist2 = (self.points[i] - query).norm_squared();
                    if dist2 <= r2 {
                        out.push(Candidate { dist2, index: i });
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = query[axis] - value;
                let (near, far) = if diff < 0.0 {
                    (left, right)
                } else {
                    (right, left)
                };
                self.collect_within(near, query, r2, out);
                if diff * diff <= r2 {
                    self.collect_within(far, query, r2, out);
                }
            }
        }
    }
}
