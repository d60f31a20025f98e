//! Down-sampling to an exact point count.
//!
//! Quotas are allocated per (box, class) cell in proportion to the cell
//! population times its class rate. Each box then runs farthest point
//! sampling seeded with the samples already taken in adjacent boxes. Boxes
//! are processed in eight rounds by parity color so that boxes of one round
//! never touch each other and can run in parallel.

mod classify;

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::geometry::{Point, PointCloud, Vector};
use crate::voxel::{round_color, BoxIndex, VoxelGrid};

pub use classify::{classify_by_curvature, classify_edge_points, surface_variation};
pub(crate) use classify::quantile_classes;

/// Per-cell sample counts summing to `target_total`.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingPlan {
    pub target_total: usize,
    pub quotas: BTreeMap<(BoxIndex, u32), usize>,
    /// Rate weight by class id.
    pub class_rates: Vec<f64>,
}

impl SamplingPlan {
    pub fn quota(&self, b: BoxIndex, class: u32) -> usize {
        self.quotas.get(&(b, class)).copied().unwrap_or(0)
    }

    /// Total quota of one box over all classes.
    pub fn box_total(&self, b: BoxIndex) -> usize {
        self.quotas
            .range((b, 0)..=(b, u32::MAX))
            .map(|(_, &q)| q)
            .sum()
    }
}

/// Allocate `target` samples over the (box, class) cells of `grid`.
///
/// Cell `(v, c)` gets `target · w_c·|P_vc| / Σ w·|P|`, capped at its
/// population with the overflow spread over the remaining cells, then
/// rounded by largest remainder (ties in box order, then class id) so the
/// quotas sum to `target`. `labels` and `class_rates` are indexed by point
/// and class id respectively.
pub fn plan_allocation(
    grid: &VoxelGrid,
    labels: &[u32],
    target: usize,
    class_rates: &[f64],
) -> Result<SamplingPlan> {
    if labels.len() != grid.len() {
        return Err(Error::LabelMismatch {
            labels: labels.len(),
            points: grid.len(),
        });
    }
    if target < 3 {
        return Err(Error::InvalidParam(format!("target must be at least 3, got {target}")));
    }
    if target > grid.len() {
        return Err(Error::TargetExceedsInput {
            target,
            available: grid.len(),
        });
    }
    if let Some(&l) = labels.iter().find(|&&l| l as usize >= class_rates.len()) {
        return Err(Error::InvalidParam(format!(
            "class {l} has no rate ({} rates given)",
            class_rates.len()
        )));
    }
    if class_rates.iter().any(|&r| !(r >= 0.0) || !r.is_finite()) {
        return Err(Error::InvalidParam("rates must be finite and non-negative".into()));
    }

    let mut cells: Vec<((BoxIndex, u32), usize)> = Vec::new();
    for (&b, members) in grid.boxes() {
        let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
        for &i in members {
            *counts.entry(labels[i]).or_insert(0) += 1;
        }
        cells.extend(counts.into_iter().map(|(c, n)| ((b, c), n)));
    }
    let weight: Vec<f64> = cells
        .iter()
        .map(|&((_, c), n)| class_rates[c as usize] * n as f64)
        .collect();
    if weight.iter().sum::<f64>() <= 0.0 {
        return Err(Error::InvalidParam("all class rates are zero for the present classes".into()));
    }
    // Total populated capacity must hold the target.
    let capacity: usize = cells
        .iter()
        .zip(&weight)
        .filter(|(_, &w)| w > 0.0)
        .map(|(&(_, n), _)| n)
        .sum();
    if capacity < target {
        return Err(Error::TargetExceedsInput {
            target,
            available: capacity,
        });
    }

    let mut quota = vec![0usize; cells.len()];
    let mut capped = vec![false; cells.len()];
    let mut real = vec![0.0f64; cells.len()];
    loop {
        let fixed: usize = (0..cells.len()).filter(|&i| capped[i]).map(|i| quota[i]).sum();
        let remaining = (target - fixed) as f64;
        let wsum: f64 = (0..cells.len()).filter(|&i| !capped[i]).map(|i| weight[i]).sum();
        let mut changed = false;
        for i in 0..cells.len() {
            if capped[i] {
                continue;
            }
            real[i] = if wsum > 0.0 { remaining * weight[i] / wsum } else { 0.0 };
            if real[i] >= cells[i].1 as f64 {
                capped[i] = true;
                quota[i] = cells[i].1;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    // Round class totals first so each class keeps its share, then spread
    // each class total over its cells.
    let n_classes = class_rates.len();
    let mut class_real = vec![0.0f64; n_classes];
    for i in (0..cells.len()).filter(|&i| !capped[i]) {
        class_real[cells[i].0 .1 as usize] += real[i];
    }
    let fixed: usize = (0..cells.len()).filter(|&i| capped[i]).map(|i| quota[i]).sum();
    let free = target - fixed;
    let class_total = largest_remainder(&class_real, free);
    let mut left = 0;
    for c in 0..n_classes {
        let idx: Vec<usize> = (0..cells.len())
            .filter(|&i| !capped[i] && cells[i].0 .1 as usize == c)
            .collect();
        let reals: Vec<f64> = idx.iter().map(|&i| real[i]).collect();
        let shares = largest_remainder(&reals, class_total[c]);
        for (k, &i) in idx.iter().enumerate() {
            quota[i] = shares[k].min(cells[i].1);
            left += shares[k] - quota[i];
        }
    }
    // Shares above a cell population go to the first cells with room.
    for i in 0..cells.len() {
        let room = (cells[i].1 - quota[i]).min(left);
        if weight[i] > 0.0 {
            quota[i] += room;
            left -= room;
        }
    }
    debug_assert_eq!(left, 0);

    Ok(SamplingPlan {
        target_total: target,
        quotas: cells
            .into_iter()
            .zip(quota)
            .filter(|&(_, q)| q > 0)
            .map(|((key, _), q)| (key, q))
            .collect(),
        class_rates: class_rates.to_vec(),
    })
}

/// Integer shares of `total` proportional to `real` (which sums to about
/// `total`): floors plus one unit each for the largest remainders, ties to
/// the lower position.
fn largest_remainder(real: &[f64], total: usize) -> Vec<usize> {
    let mut out: Vec<usize> = real.iter().map(|r| r.max(0.0).floor() as usize).collect();
    let mut sum: usize = out.iter().sum();
    let mut order: Vec<usize> = (0..real.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = real[a] - real[a].floor();
        let rb = real[b] - real[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if sum >= total {
            break;
        }
        out[i] += 1;
        sum += 1;
    }
    // Rounding noise can overshoot; take back from the smallest remainders.
    for &i in order.iter().rev().cycle() {
        if sum <= total {
            break;
        }
        if out[i] > 0 {
            out[i] -= 1;
            sum -= 1;
        }
    }
    out
}

/// Greedy farthest point sampling of `m` of `points`.
///
/// The first pick is the point farthest from `seeds`, or from the centroid
/// of `points` when there are no seeds; each later pick maximizes the
/// distance to seeds and picks so far. Ties go to the lower index.
pub fn fps_box(points: &[Point], seeds: &[Point], m: usize) -> Result<Vec<usize>> {
    if m > points.len() {
        return Err(Error::QuotaExceedsPopulation {
            quota: m,
            population: points.len(),
        });
    }
    if m == 0 {
        return Ok(Vec::new());
    }
    let mut dist: Vec<f64> = if seeds.is_empty() {
        let c = points.iter().fold(Vector::zeros(), |a, p| a + p.coords) / points.len() as f64;
        points.iter().map(|p| (p.coords - c).norm_squared()).collect()
    } else {
        points
            .iter()
            .map(|p| seeds.iter().map(|s| (p - s).norm_squared()).fold(f64::INFINITY, f64::min))
            .collect()
    };
    let seeded = !seeds.is_empty();
    let mut chosen = Vec::with_capacity(m);
    let mut taken = vec![false; points.len()];
    for step in 0..m {
        let mut best = usize::MAX;
        for i in 0..points.len() {
            if !taken[i] && (best == usize::MAX || dist[i] > dist[best]) {
                best = i;
            }
        }
        taken[best] = true;
        chosen.push(best);
        if step == 0 && !seeded {
            dist.iter_mut().for_each(|d| *d = f64::INFINITY);
        }
        let q = points[best];
        for (i, d) in dist.iter_mut().enumerate() {
            if !taken[i] {
                *d = d.min((points[i] - q).norm_squared());
            }
        }
    }
    Ok(chosen)
}

/// Indices of the points chosen by `plan`, ascending.
pub fn resample_indices(grid: &VoxelGrid, labels: &[u32], plan: &SamplingPlan) -> Result<Vec<usize>> {
    if labels.len() != grid.len() {
        return Err(Error::LabelMismatch {
            labels: labels.len(),
            points: grid.len(),
        });
    }
    let boxes: Vec<(BoxIndex, &[usize])> = grid.boxes().iter().map(|(b, m)| (*b, m.as_slice())).collect();
    let slot: HashMap<BoxIndex, usize> = boxes.iter().enumerate().map(|(i, (b, _))| (*b, i)).collect();
    let planned: usize = plan.quotas.values().sum();
    if planned != plan.target_total {
        return Err(Error::InvalidParam(format!(
            "plan quotas sum to {planned}, target is {}",
            plan.target_total
        )));
    }
    if let Some((b, _)) = plan.quotas.keys().find(|(b, _)| !slot.contains_key(b)) {
        return Err(Error::InvalidParam(format!("plan names unoccupied box {b:?}")));
    }

    let pts = grid.points();
    let mut chosen: Vec<Vec<usize>> = vec![Vec::new(); boxes.len()];
    for round in 0..8 {
        let todo: Vec<usize> = (0..boxes.len())
            .filter(|&i| round_color(boxes[i].0) == round && plan.box_total(boxes[i].0) > 0)
            .collect();
        let results = crate::par::map_slice(&todo, |&bi| -> Result<Vec<usize>> {
            let (b, members) = boxes[bi];
            let mut seeds: Vec<Point> = b
                .neighborhood()
                .filter(|n| *n != b)
                .filter_map(|n| slot.get(&n))
                .flat_map(|&s| chosen[s].iter().map(|&i| pts[i]))
                .collect();
            let mut classes: Vec<u32> = members.iter().map(|&i| labels[i]).collect();
            classes.sort_unstable();
            classes.dedup();
            let mut picked = Vec::new();
            for &c in classes.iter().rev() {
                let m = plan.quota(b, c);
                if m == 0 {
                    continue;
                }
                let cell: Vec<usize> = members.iter().copied().filter(|&i| labels[i] == c).collect();
                let cell_pts: Vec<Point> = cell.iter().map(|&i| pts[i]).collect();
                for j in fps_box(&cell_pts, &seeds, m)? {
                    picked.push(cell[j]);
                    seeds.push(pts[cell[j]]);
                }
            }
            Ok(picked)
        });
        for (&bi, r) in todo.iter().zip(results) {
            chosen[bi] = r?;
        }
    }
    let mut all: Vec<usize> = chosen.into_iter().flatten().collect();
    all.sort_unstable();
    Ok(all)
}

/// The resampled cloud, in input order, carrying labels.
pub fn resample(cloud: &PointCloud, grid: &VoxelGrid, plan: &SamplingPlan) -> Result<PointCloud> {
    let zeros;
    let labels = match cloud.labels() {
        Some(l) => l,
        None => {
            zeros = vec![0u32; cloud.len()];
            &zeros
        }
    };
    Ok(cloud.subset(&resample_indices(grid, labels, plan)?))
}
