//! Point cloud to isotropic triangle mesh reconstruction on a voxel
//! structure.
//!
//! The pipeline runs in stages, each usable on its own:
//!
//! 1. [`preprocess`]: MLS denoising, octree density adjustment and
//!    Delaunay-based up-sampling.
//! 2. [`voxel`]: the cubic box partition that supplies the intrinsic metric,
//!    box adjacency and the eight-round parallel schedule.
//! 3. [`resample`]: per-box quotas and round-scheduled farthest point
//!    sampling down to an exact point count, optionally weighted by feature
//!    class.
//! 4. [`mesher`]: initial triangulation from consensus of local tangent-plane
//!    Delaunay triangulations restricted to adjacent boxes.
//! 5. [`optimizer`]: internal edge rebuilding and isotropic remeshing with
//!    point-count control and feature guards.
//! 6. [`metrics`]: triangle quality, minimum angle statistics, histograms,
//!    color maps and MLS error.
//!
//! [`pipeline`] chains the stages under a [`config::Config`].

pub mod config;
pub mod error;
pub mod geometry;
pub mod halfedge;
pub mod io;
pub mod knn;
pub mod mesher;
pub mod metrics;
pub mod optimizer;
mod par;
pub mod pipeline;
pub mod preprocess;
pub mod resample;
pub mod voxel;

pub use error::{Error, Result};
pub use geometry::{bounding_box, Aabb, Point, PointCloud, Vector};
pub use halfedge::{build_halfedge, HalfEdgeMesh, VertexClass};
pub use knn::{Neighbor, NeighborIndex};
