use crate::error::{Error, Result};
use crate::geometry::{local_frame, PointCloud};
use crate::knn::NeighborIndex;

/// Surface variation of each point's `k`-neighborhood (the point included).
pub fn surface_variation(cloud: &PointCloud, k: usize) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::InvalidParam("k must be at least 1".into()));
    }
    if cloud.len() <= k {
        return Err(Error::InsufficientPoints {
            needed: k + 1,
            got: cloud.len(),
        });
    }
    let index = NeighborIndex::from_cloud(cloud);
    Ok(crate::par::map_range(cloud.len(), |i| {
        let nb = index.neighbors_of(i, k + 1, true);
        local_frame(nb.iter().map(|n| cloud.point(n.index)), None)
            .map_or(0.0, |f| f.surface_variation())
    }))
}

/// Binary labels: 1 (external edge) where surface variation exceeds
/// `threshold`, else 0.
pub fn classify_edge_points(cloud: &PointCloud, k: usize, threshold: f64) -> Result<Vec<u32>> {
    Ok(surface_variation(cloud, k)?
        .into_iter()
        .map(|s| u32::from(s > threshold))
        .collect())
}

/// Equal-population split of surface variation into `n_classes` classes,
/// class 0 the flattest. Points whose values agree within 1e-12 share the
/// lower class, so a plane yields class 0 throughout.
pub fn classify_by_curvature(cloud: &PointCloud, k: usize, n_classes: usize) -> Result<Vec<u32>> {
    if n_classes < 2 {
        return Err(Error::InvalidParam("need at least two curvature classes".into()));
    }
    let values = surface_variation(cloud, k)?;
    Ok(quantile_classes(&values, n_classes))
}

pub(crate) fn quantile_classes(values: &[f64], n_classes: usize) -> Vec<u32> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut labels = vec![0u32; n];
    let mut group_class = 0u32;
    for (rank, &i) in order.iter().enumerate() {
        let class = (rank * n_classes / n) as u32;
        let tied = rank > 0 && values[i] - values[order[rank - 1]] <= 1e-12;
        if !tied {
            group_class = class;
        }
        labels[i] = group_class;
    }
    labels
}
