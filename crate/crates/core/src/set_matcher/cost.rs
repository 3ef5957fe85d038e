//! Pairwise cost terms shared by matching and training losses.

use serde::{Deserialize, Serialize};

use crate::box_codec::PointCloudRange;
use crate::geom3d::Box3D;

/// Probabilities are clamped to `[PROB_EPS, 1 - PROB_EPS]` before any log.
pub const PROB_EPS: f64 = 1e-8;

pub fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_EPS, 1.0 - PROB_EPS)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FocalParams {
    pub alpha: f64,
    pub gamma: f64,
}

impl Default for FocalParams {
    fn default() -> Self {
        Self {
            alpha: 0.25,
            gamma: 2.0,
        }
    }
}

impl FocalParams {
    /// Focal loss for a positive target: `alpha (1-p)^gamma (-ln p)`.
    pub fn positive(&self, p: f64) -> f64 {
        let p = clamp_prob(p);
        self.alpha * (1.0 - p).powf(self.gamma) * -p.ln()
    }

    /// Focal loss for a negative target: `(1-alpha) p^gamma (-ln(1-p))`.
    pub fn negative(&self, p: f64) -> f64 {
        let p = clamp_prob(p);
        (1.0 - self.alpha) * p.powf(self.gamma) * -(1.0 - p).ln()
    }

    /// Signed matching cost: positive term minus negative term. Strictly
    /// decreasing in `p`, so confident correct predictions are cheapest.
    pub fn match_cost(&self, p: f64) -> f64 {
        self.positive(p) - self.negative(p)
    }
}

/// Classification matching cost of the probability assigned to `label`,
/// with the default focal parameters.
///
/// # Panics
///
/// If `label` is out of bounds for `probs`.
pub fn focal_cls_cost(probs: &[f64], label: usize) -> f64 {
    FocalParams::default().match_cost(probs[label])
}

/// Smooth-L1 (beta = 1) of `sin(theta_p - theta_g)`. Headings that differ by
/// pi cost nothing.
pub fn sin_error(theta_p: f64, theta_g: f64) -> f64 {
    smooth_l1((theta_p - theta_g).sin())
}

pub(crate) fn smooth_l1(s: f64) -> f64 {
    if s.abs() <= 1.0 {
        0.5 * s * s
    } else {
        s.abs() - 0.5
    }
}

/// How center and size differences are made dimensionless in the L1 term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum L1Normalization {
    /// Divide center coordinates by the range span of their axis, and each
    /// size by the span of the axis it runs along at zero yaw (`l` -> x,
    /// `w` -> y, `h` -> z).
    ExtentSpan { range: PointCloudRange },
    /// Plain meters.
    Raw,
}

impl Default for L1Normalization {
    fn default() -> Self {
        L1Normalization::ExtentSpan {
            range: PointCloudRange::KITTI,
        }
    }
}

impl L1Normalization {
    /// Divisors for `(cx, cy, cz, w, l, h)`.
    pub fn scales(&self) -> [f64; 6] {
        match self {
            L1Normalization::ExtentSpan { range } => {
                let [sx, sy, sz] = range.span();
                [sx, sy, sz, sy, sx, sz]
            }
            L1Normalization::Raw => [1.0; 6],
        }
    }
}

/// Mean absolute normalized difference over center and size, plus the
/// sine-error heading term.
pub fn l1_box_cost(pred: &Box3D, gt: &Box3D, norm: &L1Normalization) -> f64 {
    let (p, g) = (pred.to_array(), gt.to_array());
    let scales = norm.scales();
    let other: f64 = (0..6).map(|k| (p[k] - g[k]).abs() / scales[k]).sum::<f64>() / 6.0;
    other + sin_error(pred.yaw, gt.yaw)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_2, PI};

    use super::*;

    #[test]
    fn focal_cost_at_half() {
        let c = focal_cls_cost(&[0.5], 0);
        assert!((c - (-0.08664)).abs() < 1e-5, "{c}");
    }

    #[test]
    fn focal_cost_is_capped_at_one() {
        let at_one = focal_cls_cost(&[1.0], 0);
        assert!(at_one.is_finite());
        assert_eq!(at_one, focal_cls_cost(&[1.0 - PROB_EPS], 0));
        assert!(focal_cls_cost(&[0.0], 0).is_finite());
    }

    #[test]
    fn focal_cost_strictly_decreasing() {
        let grid: Vec<f64> = (1..1000).map(|i| i as f64 / 1000.0).collect();
        for w in grid.windows(2) {
            let (c0, c1) = (focal_cls_cost(&[w[0]], 0), focal_cls_cost(&[w[1]], 0));
            assert!(c1 < c0, "not decreasing between {} and {}", w[0], w[1]);
        }
    }

    #[test]
    fn sin_error_cases() {
        assert!(sin_error(0.0, PI) < 1e-30);
        assert!((sin_error(0.0, FRAC_PI_2) - 0.5).abs() < 1e-15);
        assert_eq!(sin_error(0.7, 0.7), 0.0);
    }

    #[test]
    fn smooth_l1_branches() {
        assert_eq!(smooth_l1(0.5), 0.125);
        assert_eq!(smooth_l1(-2.0), 1.5);
    }

    #[test]
    fn l1_cost_cases() {
        let norm = L1Normalization::default();
        let gt = Box3D::new(20.0, 1.0, -1.0, 1.6, 3.9, 1.5, 0.3);
        assert_eq!(l1_box_cost(&gt, &gt, &norm), 0.0);
        let flipped = Box3D { yaw: gt.yaw + PI, ..gt };
        assert!(l1_box_cost(&flipped, &gt, &norm) < 1e-30);
        let shifted = Box3D { cx: gt.cx + 70.4, ..gt };
        assert!((l1_box_cost(&shifted, &gt, &norm) - 1.0 / 6.0).abs() < 1e-15);
        let shifted_z = Box3D { cz: gt.cz + 4.0, ..gt };
        assert!((l1_box_cost(&shifted_z, &gt, &norm) - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn raw_normalization_uses_meters() {
        let gt = Box3D::new(0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0);
        let p = Box3D { w: 4.0, ..gt };
        assert!((l1_box_cost(&p, &gt, &L1Normalization::Raw) - 0.5).abs() < 1e-15);
    }
}
