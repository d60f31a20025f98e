//! Synthetic point cloud fixtures shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use voxmesh::geometry::{Point, PointCloud, Vector};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn unit_vector(r: &mut ChaCha8Rng) -> Vector {
    let g = Normal::new(0.0, 1.0).unwrap();
    loop {
        let v = Vector::new(g.sample(r), g.sample(r), g.sample(r));
        let n = v.norm();
        if n > 1e-9 {
            return v / n;
        }
    }
}

/// Uniform random points on the unit sphere.
pub fn sphere(n: usize, seed: u64) -> PointCloud {
    let mut r = rng(seed);
    let pts = (0..n).map(|_| Point::from(unit_vector(&mut r))).collect();
    PointCloud::new(pts).unwrap()
}

/// Unit sphere with Gaussian noise of standard deviation `sigma` added to
/// every coordinate; also returns the clean points.
pub fn noisy_sphere(n: usize, sigma: f64, seed: u64) -> (PointCloud, PointCloud) {
    let clean = sphere(n, seed);
    let mut r = rng(seed ^ 0x9e37_79b9);
    let g = Normal::new(0.0, sigma).unwrap();
    let noisy = clean
        .points()
        .iter()
        .map(|p| p + Vector::new(g.sample(&mut r), g.sample(&mut r), g.sample(&mut r)))
        .collect();
    (PointCloud::new(noisy).unwrap(), clean)
}

/// Uniform random points on the surface of the cube `[-s, s]^3`.
pub fn cube(n: usize, s: f64, seed: u64) -> PointCloud {
    let mut r = rng(seed);
    let pts = (0..n)
        .map(|_| {
            let face = r.random_range(0..6usize);
            let axis = face / 2;
            let sign = if face % 2 == 0 { -s } else { s };
            let mut c = [r.random_range(-s..s), r.random_range(-s..s), r.random_range(-s..s)];
            c[axis] = sign;
            Point::new(c[0], c[1], c[2])
        })
        .collect();
    PointCloud::new(pts).unwrap()
}

/// Distance from `p` to the nearest of the twelve edges of `[-s, s]^3`.
pub fn cube_edge_distance(p: &Point, s: f64) -> f64 {
    let c = [p.x, p.y, p.z];
    let mut best = f64::INFINITY;
    // An edge runs along `axis`, the other two coordinates fixed at ±s.
    for axis in 0..3 {
        let (i, j) = ((axis + 1) % 3, (axis + 2) % 3);
        for si in [-s, s] {
            for sj in [-s, s] {
                let t = c[axis].clamp(-s, s);
                let d2 = (c[axis] - t).powi(2) + (c[i] - si).powi(2) + (c[j] - sj).powi(2);
                best = best.min(d2.sqrt());
            }
        }
    }
    best
}

/// Unit sphere with two antipodal polar caps removed: every point has
/// `|z| <= cos(cap)`, where `cap` is the angular radius of each cap.
pub fn open_sphere(n: usize, cap: f64, seed: u64) -> PointCloud {
    let mut r = rng(seed);
    let zmax = cap.cos();
    // Uniform on the band by Archimedes: z uniform, azimuth uniform.
    let pts = (0..n)
        .map(|_| {
            let z: f64 = r.random_range(-zmax..=zmax);
            let phi: f64 = r.random_range(0.0..std::f64::consts::TAU);
            let rho = (1.0 - z * z).sqrt();
            Point::new(rho * phi.cos(), rho * phi.sin(), z)
        })
        .collect();
    PointCloud::new(pts).unwrap()
}

/// Flat annulus in the `z = 0` plane with the given radii.
pub fn flat_annulus(n: usize, inner: f64, outer: f64, seed: u64) -> PointCloud {
    let mut r = rng(seed);
    let pts = (0..n)
        .map(|_| {
            let rad = (r.random_range(inner * inner..outer * outer) as f64).sqrt();
            let phi: f64 = r.random_range(0.0..std::f64::consts::TAU);
            Point::new(rad * phi.cos(), rad * phi.sin(), 0.0)
        })
        .collect();
    PointCloud::new(pts).unwrap()
}

/// Root mean square of `|p| - 1` over the cloud.
pub fn radial_rms(cloud: &PointCloud) -> f64 {
    let s: f64 = cloud.points().iter().map(|p| (p.coords.norm() - 1.0).powi(2)).sum();
    (s / cloud.len() as f64).sqrt()
}

/// Area-uniform points on a torus with tube radius `r` around a circle of
/// radius `big_r` in the `z = 0` plane.
pub fn torus(n: usize, big_r: f64, r: f64, seed: u64) -> PointCloud {
    let mut g = rng(seed);
    let mut pts = Vec::with_capacity(n);
    while pts.len() < n {
        let u: f64 = g.random_range(0.0..std::f64::consts::TAU);
        let v: f64 = g.random_range(0.0..std::f64::consts::TAU);
        // Accept with probability proportional to the local area element.
        let w: f64 = g.random_range(0.0..big_r + r);
        if w <= big_r + r * v.cos() {
            let rho = big_r + r * v.cos();
            pts.push(Point::new(rho * u.cos(), rho * u.sin(), r * v.sin()));
        }
    }
    PointCloud::new(pts).unwrap()
}

/// Unit sphere scaled per axis.
pub fn ellipsoid(n: usize, axes: [f64; 3], seed: u64) -> PointCloud {
    let s = sphere(n, seed);
    let pts = s
        .points()
        .iter()
        .map(|p| Point::new(p.x * axes[0], p.y * axes[1], p.z * axes[2]))
        .collect();
    PointCloud::new(pts).unwrap()
}
