//! Evaluation kernels: depth (AbsRel / RMSE / delta1), semantic mIoU,
//! entity mask AP, pedestrian distance-estimation aggregation, and
//! navigation metrics (SR / SPL / NE).

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::raster::Raster;
use crate::{Error, Result};

/// Depth error summary over the valid pixel set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DepthMetrics {
    /// Mean of |pred - gt| / gt.
    pub absrel: f64,
    /// Root mean squared error, meters.
    pub rmse: f64,
    /// Fraction of pixels with max(pred/gt, gt/pred) < 1.25.
    pub delta1: f64,
}

/// Computes AbsRel, RMSE and delta1 over pixels that are selected by `mask`
/// (all pixels when absent) and have finite, positive ground truth.
pub fn depth_metrics(
    pred: &Raster<f64>,
    gt: &Raster<f64>,
    mask: Option<&Raster<bool>>,
) -> Result<DepthMetrics> {
    if !pred.same_dims(gt) || mask.is_some_and(|m| !m.same_dims(gt)) {
        return Err(Error::DimensionMismatch(
            "depth rasters and mask must share dimensions".into(),
        ));
    }
    let mut n = 0usize;
    let mut abs_sum = 0.0;
    let mut sq_sum = 0.0;
    let mut within = 0usize;
    for (i, (&p, &g)) in pred.data().iter().zip(gt.data()).enumerate() {
        if let Some(m) = mask {
            if !m.data()[i] {
                continue;
            }
        }
        if !g.is_finite() || g <= 0.0 {
            continue;
        }
        n += 1;
        let diff = p - g;
        abs_sum += diff.abs() / g;
        sq_sum += diff * diff;
        let ratio = if p > 0.0 {
            (p / g).max(g / p)
        } else {
            f64::INFINITY
        };
        if ratio < 1.25 {
            within += 1;
        }
    }
    if n == 0 {
        return Err(Error::Metrics("no valid ground-truth pixels".into()));
    }
    Ok(DepthMetrics {
        absrel: abs_sum / n as f64,
        rmse: (sq_sum / n as f64).sqrt(),
        delta1: within as f64 / n as f64,
    })
}

/// Mean intersection-over-union over the classes present in the ground
/// truth. Class ids must be < `n_classes`.
pub fn miou(pred: &Raster<u8>, gt: &Raster<u8>, n_classes: usize) -> Result<f64> {
    if !pred.same_dims(gt) {
        return Err(Error::DimensionMismatch(
            "semantic rasters must share dimensions".into(),
        ));
    }
    if gt.data().is_empty() {
        return Err(Error::Metrics("no ground-truth pixels".into()));
    }
    let mut tp = vec![0u64; n_classes];
    let mut fp = vec![0u64; n_classes];
    let mut fn_ = vec![0u64; n_classes];
    for (&p, &g) in pred.data().iter().zip(gt.data()) {
        let (p, g) = (p as usize, g as usize);
        if p >= n_classes || g >= n_classes {
            return Err(Error::Metrics(format!(
                "class id out of range: pred {p}, gt {g}, n_classes {n_classes}"
            )));
        }
        if p == g {
            tp[g] += 1;
        } else {
            fp[p] += 1;
            fn_[g] += 1;
        }
    }
    let mut sum = 0.0;
    let mut present = 0usize;
    for c in 0..n_classes {
        let support = tp[c] + fn_[c];
        if support == 0 {
            continue; // class absent from GT is excluded from the mean
        }
        present += 1;
        sum += tp[c] as f64 / (tp[c] + fp[c] + fn_[c]) as f64;
    }
    if present == 0 {
        return Err(Error::Metrics("no class present in ground truth".into()));
    }
    Ok(sum / present as f64)
}

/// The standard 10-point IoU threshold grid 0.50, 0.55, ..., 0.95.
pub fn default_iou_thresholds() -> Vec<f64> {
    (10..=19).map(|k| k as f64 / 20.0).collect()
}

/// Splits a labeled entity raster into per-id binary masks, excluding the
/// background id 0. Masks are returned in ascending id order.
pub fn entity_masks(raster: &Raster<u32>) -> Vec<(u32, Raster<bool>)> {
    let mut ids: Vec<u32> = raster
        .data()
        .iter()
        .copied()
        .filter(|&id| id != 0)
        .collect();
    ids.sort_unstable();
    ids.dedup();
    ids.into_iter()
        .map(|id| {
            let mask = Raster::from_vec(
                raster.width(),
                raster.height(),
                raster.data().iter().map(|&v| v == id).collect(),
            );
            (id, mask)
        })
        .collect()
}

fn mask_iou(a: &Raster<bool>, b: &Raster<bool>) -> f64 {
    let mut inter = 0u64;
    let mut union = 0u64;
    for (&x, &y) in a.data().iter().zip(b.data()) {
        if x && y {
            inter += 1;
        }
        if x || y {
            union += 1;
        }
    }
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Mask average precision: greedy score-ordered matching at each IoU
/// threshold, all-point precision/recall interpolation, averaged over the
/// threshold grid.
pub fn entity_ap(
    predictions: &[(Raster<bool>, f64)],
    ground_truth: &[Raster<bool>],
    thresholds: &[f64],
) -> Result<f64> {
    if ground_truth.is_empty() {
        return Err(Error::Metrics("no ground-truth entities".into()));
    }
    for (mask, _) in predictions {
        if !mask.same_dims(&ground_truth[0]) {
            return Err(Error::DimensionMismatch(
                "prediction and ground-truth masks must share dimensions".into(),
            ));
        }
    }
    // Sort predictions by descending score; stable, so input order breaks ties.
    let mut order: Vec<usize> = (0..predictions.len()).collect();
    order.sort_by(|&a, &b| {
        predictions[b]
            .1
            .partial_cmp(&predictions[a].1)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let ious: Vec<Vec<f64>> = order
        .iter()
        .map(|&p| {
            ground_truth
                .iter()
                .map(|g| mask_iou(&predictions[p].0, g))
                .collect()
        })
        .collect();

    let mut ap_sum = 0.0;
    for &thresh in thresholds {
        let mut gt_taken = vec![false; ground_truth.len()];
        let mut tps = Vec::with_capacity(order.len());
        for pred_ious in &ious {
            let mut best: Option<(usize, f64)> = None;
            for (g, &iou) in pred_ious.iter().enumerate() {
                if gt_taken[g] || iou < thresh {
                    continue;
                }
                if best.is_none_or(|(_, b)| iou > b) {
                    best = Some((g, iou));
                }
            }
            match best {
                Some((g, _)) => {
                    gt_taken[g] = true;
                    tps.push(true);
                }
                None => tps.push(false),
            }
        }
        ap_sum += all_point_ap(&tps, ground_truth.len());
    }
    Ok(ap_sum / thresholds.len() as f64)
}

/// Area under the precision-recall curve using all-point interpolation
/// (precision envelope).
fn all_point_ap(tps: &[bool], n_gt: usize) -> f64 {
    if n_gt == 0 {
        return 0.0;
    }
    let mut points = Vec::with_capacity(tps.len());
    let mut tp = 0usize;
    for (rank, &is_tp) in tps.iter().enumerate() {
        if is_tp {
            tp += 1;
        }
        points.push((tp as f64 / n_gt as f64, tp as f64 / (rank + 1) as f64));
    }
    // Precision envelope from the right.
    let mut envelope = points.clone();
    for i in (0..envelope.len().saturating_sub(1)).rev() {
        envelope[i].1 = envelope[i].1.max(envelope[i + 1].1);
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (recall, precision) in envelope {
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    ap
}

/// A pedestrian distance-estimation result set: per-sample Euclidean
/// distance error (m) and angular error (deg).
#[derive(Debug, Clone, PartialEq)]
pub struct MpdeSet {
    pub name: String,
    /// Whether this set participates in the public-only aggregate.
    pub public: bool,
    samples: Vec<(f64, f64)>,
}

impl MpdeSet {
    pub fn new(name: impl Into<String>, public: bool, samples: Vec<(f64, f64)>) -> Self {
        Self {
            name: name.into(),
            public,
            samples,
        }
    }

    /// A set of `count` identical samples; convenient when only per-set
    /// means and counts are known.
    pub fn from_means(
        name: impl Into<String>,
        public: bool,
        dist_err: f64,
        ang_err: f64,
        count: usize,
    ) -> Self {
        Self {
            name: name.into(),
            public,
            samples: vec![(dist_err, ang_err); count],
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }
}

/// Which sets participate in an MPDE aggregate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MpdeSubset {
    All,
    Public,
}

/// Sample-count-weighted mean distance and angular errors over the selected
/// sets; equivalently, the plain mean over the pooled samples.
pub fn mpde_aggregate(sets: &[MpdeSet], subset: MpdeSubset) -> Result<(f64, f64)> {
    let selected: Vec<&MpdeSet> = sets
        .iter()
        .filter(|s| subset == MpdeSubset::All || s.public)
        .collect();
    let total: usize = selected.iter().map(|s| s.len()).sum();
    if total == 0 {
        return Err(Error::Metrics("no samples in the selected subset".into()));
    }
    let mut dist_sum = 0.0;
    let mut ang_sum = 0.0;
    for set in selected {
        for &(d, a) in set.samples() {
            dist_sum += d;
            ang_sum += a;
        }
    }
    Ok((dist_sum / total as f64, ang_sum / total as f64))
}

/// One navigation episode: executed path, goal, and shortest-path length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VlnEpisode {
    pub goal: [f64; 3],
    /// Success threshold radius around the goal, meters.
    pub success_radius: f64,
    /// Executed path as a polyline of [x, y, z] points.
    pub path: Vec<[f64; 3]>,
    /// Shortest-path length from start to goal, meters.
    pub shortest_path_length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VlnMetrics {
    /// Success rate.
    pub sr: f64,
    /// Success weighted by path length.
    pub spl: f64,
    /// Navigation error: mean final distance to goal, meters.
    pub ne: f64,
}

pub fn vln_metrics(episodes: &[VlnEpisode]) -> Result<VlnMetrics> {
    if episodes.is_empty() {
        return Err(Error::Metrics("no episodes".into()));
    }
    let mut sr = 0.0;
    let mut spl = 0.0;
    let mut ne = 0.0;
    for (i, ep) in episodes.iter().enumerate() {
        if ep.path.is_empty() {
            return Err(Error::Metrics(format!("episode {i} has an empty path")));
        }
        if !ep.shortest_path_length.is_finite() || ep.shortest_path_length <= 0.0 {
            return Err(Error::Metrics(format!(
                "episode {i} has non-positive shortest-path length"
            )));
        }
        let goal = Vector3::from(ep.goal);
        let final_point = Vector3::from(*ep.path.last().unwrap());
        let final_dist = (final_point - goal).norm();
        let executed: f64 = ep
            .path
            .windows(2)
            .map(|w| (Vector3::from(w[1]) - Vector3::from(w[0])).norm())
            .sum();
        let success = final_dist <= ep.success_radius;
        if success {
            sr += 1.0;
            spl += ep.shortest_path_length / executed.max(ep.shortest_path_length);
        }
        ne += final_dist;
    }
    let n = episodes.len() as f64;
    Ok(VlnMetrics {
        sr: sr / n,
        spl: spl / n,
        ne: ne / n,
    })
}

/// Ordered named scalars, serialized as a JSON object with 6-decimal fixed
/// formatting.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricReport {
    entries: Vec<(String, f64)>,
}

impl MetricReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: impl Into<String>, value: f64) {
        self.entries.push((name.into(), value));
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn to_json(&self) -> Result<String> {
        let mut out = String::from("{\n");
        for (i, (name, value)) in self.entries.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::Metrics(format!("metric {name} is not finite")));
            }
            out.push_str(&format!("  \"{name}\": {value:.6}"));
            out.push_str(if i + 1 < self.entries.len() { ",\n" } else { "\n" });
        }
        out.push_str("}\n");
        Ok(out)
    }
}
