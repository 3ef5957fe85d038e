//! Bipartite matching of N predictions to M ground truths.
//!
//! The pairwise cost combines a focal classification cost, a normalized L1
//! box distance with a sine-error heading term, and `1 - IoU` of the
//! axis-aligned BEV footprints.

mod cost;
mod hungarian;

use serde::{Deserialize, Serialize};

pub use cost::{clamp_prob, focal_cls_cost, l1_box_cost, sin_error, FocalParams, L1Normalization, PROB_EPS};
pub use hungarian::{hungarian, Assignment, CostMatrix};

use crate::geom3d::{bev_iou_axis_aligned, to_bev, Box3D};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    #[serde(rename = "box")]
    pub bbox: Box3D,
    /// Independent per-category probabilities.
    pub class_probs: Vec<f64>,
}

impl Prediction {
    pub fn new(bbox: Box3D, class_probs: Vec<f64>) -> Self {
        Self { bbox, class_probs }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(p) = self
            .class_probs
            .iter()
            .find(|p| !(p.is_finite() && (0.0..=1.0).contains(*p)))
        {
            return Err(Error::InvalidInput(format!("class probability {p} outside [0, 1]")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    #[serde(rename = "box")]
    pub bbox: Box3D,
    pub label: usize,
}

impl GroundTruth {
    pub fn new(bbox: Box3D, label: usize) -> Self {
        Self { bbox, label }
    }
}

/// Coefficients of the classification, L1 and IoU terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossWeights {
    pub cls: f64,
    pub l1: f64,
    pub iou: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            cls: 2.0,
            l1: 5.0,
            iou: 2.0,
        }
    }
}

impl LossWeights {
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            cls: self.cls * k,
            l1: self.l1 * k,
            iou: self.iou * k,
        }
    }
}

/// Everything the matching cost and training losses are parameterized by.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct CostConfig {
    pub weights: LossWeights,
    pub normalization: L1Normalization,
    pub focal: FocalParams,
}

/// Cost of assigning one prediction to one ground truth.
pub fn pair_match_cost(pred: &Prediction, gt: &GroundTruth, cfg: &CostConfig) -> f64 {
    let w = &cfg.weights;
    let cls = cfg.focal.match_cost(pred.class_probs[gt.label]);
    let l1 = l1_box_cost(&pred.bbox, &gt.bbox, &cfg.normalization);
    let iou = bev_iou_axis_aligned(&to_bev(&pred.bbox), &to_bev(&gt.bbox));
    w.cls * cls + w.l1 * l1 + w.iou * (1.0 - iou)
}

fn check_inputs(preds: &[Prediction], gts: &[GroundTruth]) -> Result<()> {
    if preds.len() < gts.len() {
        return Err(Error::TooFewPredictions {
            predictions: preds.len(),
            ground_truths: gts.len(),
        });
    }
    for p in preds {
        p.validate()?;
    }
    for (i, g) in gts.iter().enumerate() {
        if let Some(p) = preds.iter().find(|p| g.label >= p.class_probs.len()) {
            return Err(Error::InvalidInput(format!(
                "ground truth {i} has label {} but a prediction carries only {} class probabilities",
                g.label,
                p.class_probs.len()
            )));
        }
    }
    Ok(())
}

/// M x N matrix of pairwise costs (rows: ground truths, columns: predictions).
pub fn match_cost_matrix(preds: &[Prediction], gts: &[GroundTruth], cfg: &CostConfig) -> Result<CostMatrix> {
    check_inputs(preds, gts)?;
    let m = CostMatrix::from_fn(gts.len(), preds.len(), |i, j| pair_match_cost(&preds[j], &gts[i], cfg));
    m.check_finite()?;
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub assignment: Assignment,
    /// Predictions left without a ground truth, ascending.
    pub unmatched: Vec<usize>,
}

impl MatchResult {
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.assignment.pairs
    }
}

/// Builds the cost matrix and solves the assignment.
pub fn match_predictions(preds: &[Prediction], gts: &[GroundTruth], cfg: &CostConfig) -> Result<MatchResult> {
    let costs = match_cost_matrix(preds, gts, cfg)?;
    let assignment = hungarian(&costs)?;
    let mut taken = vec![false; preds.len()];
    for &(_, p) in &assignment.pairs {
        taken[p] = true;
    }
    let unmatched = (0..preds.len()).filter(|&j| !taken[j]).collect();
    Ok(MatchResult { assignment, unmatched })
}
