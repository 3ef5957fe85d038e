//! Training loss over matched pairs, background supervision for unmatched
//! predictions, batch normalization and deep supervision over stages.

use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use crate::geom3d::{diou_3d, Box3D};
use crate::set_matcher::{
    l1_box_cost, match_predictions, CostConfig, GroundTruth, L1Normalization, MatchResult, Prediction,
};
use crate::Result;

/// Default number of stacked refinement stages.
pub const DEFAULT_NUM_STAGES: usize = 6;

/// Predictions emitted by one refinement stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageOutput {
    pub index: usize,
    pub predictions: Vec<Prediction>,
}

/// Per-term loss values; `total` is the weighted sum of the three terms.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub cls: f64,
    pub l1: f64,
    pub diou: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn scale(&self, k: f64) -> Self {
        Self {
            cls: self.cls * k,
            l1: self.l1 * k,
            diou: self.diou * k,
            total: self.total * k,
        }
    }

    /// Every term divided by `n`.
    pub fn normalized(&self, n: f64) -> Self {
        Self {
            cls: self.cls / n,
            l1: self.l1 / n,
            diou: self.diou / n,
            total: self.total / n,
        }
    }
}

impl Add for LossBreakdown {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self {
            cls: self.cls + rhs.cls,
            l1: self.l1 + rhs.l1,
            diou: self.diou + rhs.diou,
            total: self.total + rhs.total,
        }
    }
}

impl AddAssign for LossBreakdown {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

/// Loss of one matched pair. The classification term is the positive focal
/// loss of the ground-truth label (not the signed matching cost).
pub fn matched_pair_loss(pred: &Prediction, gt: &GroundTruth, cfg: &CostConfig) -> LossBreakdown {
    let w = &cfg.weights;
    let cls = cfg.focal.positive(pred.class_probs[gt.label]);
    let l1 = l1_box_cost(&pred.bbox, &gt.bbox, &cfg.normalization);
    let diou = diou_3d(&pred.bbox, &gt.bbox);
    LossBreakdown {
        cls,
        l1,
        diou,
        total: w.cls * cls + w.l1 * l1 + w.iou * diou,
    }
}

/// No-object focal loss of an unmatched prediction, summed over categories.
pub fn background_loss(pred: &Prediction, cfg: &CostConfig) -> LossBreakdown {
    let cls: f64 = pred.class_probs.iter().map(|&p| cfg.focal.negative(p)).sum();
    LossBreakdown {
        cls,
        total: cfg.weights.cls * cls,
        ..Default::default()
    }
}

/// Unnormalized loss terms of one frame, kept itemized for reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameTerms {
    pub matching: MatchResult,
    /// One entry per matched pair, in ground-truth order.
    pub pair_losses: Vec<LossBreakdown>,
    /// `(prediction index, loss)` for every unmatched prediction.
    pub background: Vec<(usize, LossBreakdown)>,
    pub num_gts: usize,
}

impl FrameTerms {
    /// Pair losses followed by background losses, summed in that order.
    pub fn raw_sum(&self) -> LossBreakdown {
        let mut sum = LossBreakdown::default();
        for l in &self.pair_losses {
            sum += *l;
        }
        for (_, l) in &self.background {
            sum += *l;
        }
        sum
    }
}

pub fn frame_terms(preds: &[Prediction], gts: &[GroundTruth], cfg: &CostConfig) -> Result<FrameTerms> {
    let matching = match_predictions(preds, gts, cfg)?;
    let pair_losses = matching
        .pairs()
        .iter()
        .map(|&(g, p)| matched_pair_loss(&preds[p], &gts[g], cfg))
        .collect();
    let background = matching
        .unmatched
        .iter()
        .map(|&p| (p, background_loss(&preds[p], cfg)))
        .collect();
    Ok(FrameTerms {
        matching,
        pair_losses,
        background,
        num_gts: gts.len(),
    })
}

/// Divisor applied to a batch: its ground-truth count, at least 1.
pub fn normalizer(num_gts: usize) -> f64 {
    num_gts.max(1) as f64
}

/// Sum of every frame's raw loss divided by the batch ground-truth count.
pub fn batch_loss(frames: &[(&[Prediction], &[GroundTruth])], cfg: &CostConfig) -> Result<LossBreakdown> {
    let mut raw = LossBreakdown::default();
    let mut num_gts = 0;
    for (preds, gts) in frames {
        let terms = frame_terms(preds, gts, cfg)?;
        raw += terms.raw_sum();
        num_gts += terms.num_gts;
    }
    Ok(raw.normalized(normalizer(num_gts)))
}

/// Normalized loss of a single-frame batch.
pub fn frame_loss(stage: &StageOutput, gts: &[GroundTruth], cfg: &CostConfig) -> Result<LossBreakdown> {
    batch_loss(&[(&stage.predictions, gts)], cfg)
}

/// Deep supervision: every stage is matched on its own and the frame losses
/// are summed in stage order.
pub fn stacked_loss(stages: &[StageOutput], gts: &[GroundTruth], cfg: &CostConfig) -> Result<LossBreakdown> {
    let mut sum = LossBreakdown::default();
    for stage in stages {
        sum += frame_loss(stage, gts, cfg)?;
    }
    Ok(sum)
}

/// Gradient of [`l1_box_cost`] with respect to the prediction parameters
/// `(cx, cy, cz, w, l, h, yaw)`.
///
/// At a zero difference the absolute value contributes 0.
pub fn l1_grad(pred: &Box3D, gt: &Box3D, norm: &L1Normalization) -> [f64; 7] {
    let (p, g) = (pred.to_array(), gt.to_array());
    let scales = norm.scales();
    let mut grad = [0.0; 7];
    for k in 0..6 {
        let d = p[k] - g[k];
        grad[k] = if d == 0.0 { 0.0 } else { d.signum() / (6.0 * scales[k]) };
    }
    let diff = pred.yaw - gt.yaw;
    let s = diff.sin();
    let outer = if s.abs() <= 1.0 { s } else { s.signum() };
    grad[6] = outer * diff.cos();
    grad
}
