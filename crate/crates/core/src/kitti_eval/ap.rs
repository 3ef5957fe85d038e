//! Average precision over 11 recall positions.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::{difficulty_of, DetectionFrame, Difficulty};
use crate::geom3d::{bev_iou_rotated, iou_3d_rotated, to_bev, Box3D};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IouMetric {
    /// Rotated volume IoU.
    ThreeD,
    /// Rotated bird's-eye-view IoU.
    Bev,
}

impl IouMetric {
    pub fn iou(self, a: &Box3D, b: &Box3D) -> f64 {
        match self {
            IouMetric::ThreeD => iou_3d_rotated(a, b),
            IouMetric::Bev => bev_iou_rotated(&to_bev(a), &to_bev(b)),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            IouMetric::ThreeD => "AP_3D",
            IouMetric::Bev => "AP_BEV",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApResult {
    /// Percentage in `[0, 100]`.
    pub ap: f64,
    pub num_gt: usize,
    pub true_positives: usize,
    pub false_positives: usize,
    /// Detections matched to ignored ground truths.
    pub ignored_detections: usize,
    /// `(recall, precision)` after each counted detection, in score order.
    pub pr_curve: Vec<(f64, f64)>,
    /// No ground truth of the category at this level; `ap` is reported as 0.
    pub no_ground_truth: bool,
}

/// Recall positions `0, 0.1, ..., 1.0`.
pub fn recall_positions() -> [f64; 11] {
    std::array::from_fn(|k| k as f64 / 10.0)
}

/// Mean over the 11 recall positions of the best precision reached at or
/// beyond that recall, times 100.
pub fn interpolated_ap(pr_curve: &[(f64, f64)]) -> f64 {
    let sum: f64 = recall_positions()
        .iter()
        .map(|&r| {
            pr_curve
                .iter()
                .filter(|(rec, _)| *rec >= r)
                .map(|&(_, p)| p)
                .fold(0.0, f64::max)
        })
        .sum();
    100.0 * sum / 11.0
}

enum Outcome {
    TruePositive,
    FalsePositive,
    Ignored,
}

/// AP of one category at one IoU threshold and difficulty level.
///
/// A ground truth counts at `level` when its own difficulty is `level` or
/// easier; other ground truths of the category are ignored, and detections
/// landing on them count neither way. Detections are pooled over frames and
/// processed by descending score (ties: frame id, then detection order).
/// Each one takes the highest-IoU unmatched counted ground truth with IoU at
/// least `threshold`, falling back to an unmatched ignored one.
pub fn ap_11(
    frames: &[DetectionFrame],
    category: &str,
    threshold: f64,
    level: Difficulty,
    metric: IouMetric,
) -> ApResult {
    struct FrameGts<'a> {
        boxes: Vec<&'a Box3D>,
        counted: Vec<bool>,
        taken: Vec<bool>,
    }

    let mut per_frame: Vec<FrameGts> = frames
        .iter()
        .map(|f| {
            let gts: Vec<_> = f.gts.iter().filter(|g| g.label.category == category).collect();
            FrameGts {
                boxes: gts.iter().map(|g| &g.bbox).collect(),
                counted: gts.iter().map(|g| difficulty_of(&g.label) <= level).collect(),
                taken: vec![false; gts.len()],
            }
        })
        .collect();
    let num_gt: usize = per_frame.iter().map(|f| f.counted.iter().filter(|&&c| c).count()).sum();

    let mut order: Vec<(usize, usize)> = frames
        .iter()
        .enumerate()
        .flat_map(|(fi, f)| {
            f.dets
                .iter()
                .enumerate()
                .filter(|(_, d)| d.category == category)
                .map(move |(di, _)| (fi, di))
        })
        .collect();
    order.sort_by(|&(fa, da), &(fb, db)| {
        frames[fb].dets[db]
            .score
            .total_cmp(&frames[fa].dets[da].score)
            .then_with(|| frames[fa].id.cmp(&frames[fb].id))
            .then(fa.cmp(&fb))
            .then(da.cmp(&db))
    });

    let mut result = ApResult {
        ap: 0.0,
        num_gt,
        true_positives: 0,
        false_positives: 0,
        ignored_detections: 0,
        pr_curve: Vec::new(),
        no_ground_truth: num_gt == 0,
    };

    for (fi, di) in order {
        let det = &frames[fi].dets[di].bbox;
        let gts = &mut per_frame[fi];
        let best = |want_counted: bool| -> Option<usize> {
            let mut best: Option<(usize, f64)> = None;
            for (gi, g) in gts.boxes.iter().enumerate() {
                if gts.taken[gi] || gts.counted[gi] != want_counted {
                    continue;
                }
                let iou = metric.iou(det, g);
                if iou >= threshold && best.is_none_or(|(_, b)| iou.partial_cmp(&b) == Some(Ordering::Greater)) {
                    best = Some((gi, iou));
                }
            }
            best.map(|(gi, _)| gi)
        };
        let outcome = match best(true) {
            Some(gi) => {
                gts.taken[gi] = true;
                Outcome::TruePositive
            }
            None => match best(false) {
                Some(gi) => {
                    gts.taken[gi] = true;
                    Outcome::Ignored
                }
                None => Outcome::FalsePositive,
            },
        };
        match outcome {
            Outcome::TruePositive => result.true_positives += 1,
            Outcome::FalsePositive => result.false_positives += 1,
            Outcome::Ignored => {
                result.ignored_detections += 1;
                continue;
            }
        }
        if num_gt > 0 {
            let tp = result.true_positives as f64;
            let recall = tp / num_gt as f64;
            let precision = tp / (result.true_positives + result.false_positives) as f64;
            result.pr_curve.push((recall, precision));
        }
    }

    if result.no_ground_truth {
        log::warn!("no {category} ground truth at level {level:?}; AP reported as 0");
    } else {
        result.ap = interpolated_ap(&result.pr_curve);
    }
    result
}
