//! Point clouds, bounding boxes and small linear-algebra helpers shared by
//! every stage.

use nalgebra::{Matrix3, Point3, SymmetricEigen, Vector3};

use crate::error::{Error, Result};

pub type Point = Point3<f64>;
pub type Vector = Vector3<f64>;

/// A set of 3D positions with optional per-point class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Point>,
    labels: Option<Vec<u32>>,
    source_diag: f64,
}

impl PointCloud {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if let Some(i) = points
            .iter()
            .position(|p| !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()))
        {
            return Err(Error::NonFinite(i));
        }
        let source_diag = Aabb::from_points(&points)
            .map(|b| b.diagonal())
            .unwrap_or(0.0);
        Ok(Self {
            points,
            labels: None,
            source_diag,
        })
    }

    pub fn with_labels(points: Vec<Point>, labels: Vec<u32>) -> Result<Self> {
        let mut cloud = Self::new(points)?;
        cloud.set_labels(Some(labels))?;
        Ok(cloud)
    }

    pub fn from_slices(coords: &[[f64; 3]]) -> Result<Self> {
        Self::new(coords.iter().map(|c| Point::new(c[0], c[1], c[2])).collect())
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &Point {
        &self.points[i]
    }

    pub fn labels(&self) -> Option<&[u32]> {
        self.labels.as_deref()
    }

    pub fn label(&self, i: usize) -> u32 {
        self.labels.as_ref().map_or(0, |l| l[i])
    }

    pub fn set_labels(&mut self, labels: Option<Vec<u32>>) -> Result<()> {
        if let Some(l) = &labels {
            if l.len() != self.points.len() {
                return Err(Error::LabelMismatch {
                    labels: l.len(),
                    points: self.points.len(),
                });
            }
        }
        self.labels = labels;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Bounding-box diagonal of the cloud as constructed.
    pub fn diag(&self) -> f64 {
        self.source_diag
    }

    /// New cloud holding the given points (and their labels) in order.
    pub fn subset(&self, indices: &[usize]) -> PointCloud {
        let points = indices.iter().map(|&i| self.points[i]).collect();
        let labels = self
            .labels
            .as_ref()
            .map(|l| indices.iter().map(|&i| l[i]).collect());
        let mut out = PointCloud::new(points).expect("subset of a finite cloud is finite");
        out.labels = labels;
        out
    }

    /// Replace positions while keeping labels. Lengths must match.
    pub(crate) fn with_positions(&self, points: Vec<Point>) -> Result<PointCloud> {
        debug_assert_eq!(points.len(), self.points.len());
        let mut out = PointCloud::new(points)?;
        out.labels = self.labels.clone();
        Ok(out)
    }

    pub fn into_points(self) -> Vec<Point> {
        self.points
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Point,
    pub max: Point,
}

impl Aabb {
    pub fn from_points(points: &[Point]) -> Option<Aabb> {
        let first = *points.first()?;
        let mut b = Aabb {
            min: first,
            max: first,
        };
        for p in &points[1..] {
            for a in 0..3 {
                b.min[a] = b.min[a].min(p[a]);
                b.max[a] = b.max[a].max(p[a]);
            }
        }
        Some(b)
    }

    pub fn extent(&self) -> Vector {
        self.max - self.min
    }

    /// Length of the longest box side.
    pub fn longest_border(&self) -> f64 {
        self.extent().max()
    }

    pub fn diagonal(&self) -> f64 {
        self.extent().norm()
    }

    pub fn center(&self) -> Point {
        nalgebra::center(&self.min, &self.max)
    }
}

pub fn bounding_box(cloud: &PointCloud) -> Result<Aabb> {
    Aabb::from_points(cloud.points()).ok_or(Error::EmptyInput)
}

/// Principal-component frame of a point set.
#[derive(Debug, Clone, Copy)]
pub struct LocalFrame {
    pub centroid: Point,
    /// Eigenvalues of the covariance, ascending.
    pub eigenvalues: [f64; 3],
    /// Unit eigenvector of the smallest eigenvalue.
    pub normal: Vector,
}

impl LocalFrame {
    /// Smallest eigenvalue over the eigenvalue sum; 0 on planes, at most 1/3.
    pub fn surface_variation(&self) -> f64 {
        let sum: f64 = self.eigenvalues.iter().sum();
        if sum <= f64::MIN_POSITIVE {
            0.0
        } else {
            (self.eigenvalues[0] / sum).max(0.0)
        }
    }
}

/// Weighted covariance analysis; `weights` of `None` means uniform.
pub fn local_frame<'a, I>(points: I, weights: Option<&[f64]>) -> Option<LocalFrame>
where
    I: IntoIterator<Item = &'a Point>,
    I::IntoIter: Clone,
{
    let iter = points.into_iter();
    let mut total = 0.0;
    let mut acc = Vector::zeros();
    for (i, p) in iter.clone().enumerate() {
        let w = weights.map_or(1.0, |w| w[i]);
        total += w;
        acc += p.coords * w;
    }
    if total <= 0.0 {
        return None;
    }
    let centroid = Point::from(acc / total);
    let mut cov = Matrix3::zeros();
    for (i, p) in iter.enumerate() {
        let w = weights.map_or(1.0, |w| w[i]);
        let d = p - centroid;
        cov += d * d.transpose() * w;
    }
    cov /= total;
    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let normal = eig.eigenvectors.column(order[0]).into_owned();
    Some(LocalFrame {
        centroid,
        eigenvalues: order.map(|i| eig.eigenvalues[i]),
        normal: normal.normalize(),
    })
}

/// Two unit vectors spanning the plane orthogonal to `n`.
pub fn tangent_basis(n: &Vector) -> (Vector, Vector) {
    let helper = if n.x.abs() < 0.9 {
        Vector::x()
    } else {
        Vector::y()
    };
    let u = n.cross(&helper).normalize();
    let v = n.cross(&u);
    (u, v)
}

pub fn triangle_normal(a: &Point, b: &Point, c: &Point) -> Vector {
    (b - a).cross(&(c - a))
}

pub fn triangle_area(a: &Point, b: &Point, c: &Point) -> f64 {
    0.5 * triangle_normal(a, b, c).norm()
}
