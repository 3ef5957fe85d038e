//! Residual encoding of boxes against proposals, and proposal initialization.
//!
//! Center offsets are scaled by the proposal's BEV diagonal (x, y) or its
//! height (z); sizes are log-ratios; the heading residual is a plain
//! difference. No angle wrapping happens here.

use serde::{Deserialize, Serialize};

use crate::geom3d::Box3D;
use crate::{Error, Result};

/// Default number of proposals per frame.
pub const DEFAULT_NUM_PROPOSALS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Residual7 {
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
    pub dw: f64,
    pub dl: f64,
    pub dh: f64,
    pub dtheta: f64,
}

impl Residual7 {
    pub fn to_array(&self) -> [f64; 7] {
        [self.dx, self.dy, self.dz, self.dw, self.dl, self.dh, self.dtheta]
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

fn check_dims(b: &Box3D, what: &str) -> Result<()> {
    if b.w > 0.0 && b.l > 0.0 && b.h > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "{what} dimensions must be positive, got w={} l={} h={}",
            b.w, b.l, b.h
        )))
    }
}

/// BEV diagonal of a proposal.
fn diagonal(p: &Box3D) -> f64 {
    p.w.hypot(p.l)
}

pub fn encode(gt: &Box3D, proposal: &Box3D) -> Result<Residual7> {
    check_dims(proposal, "proposal")?;
    check_dims(gt, "ground-truth")?;
    let d = diagonal(proposal);
    Ok(Residual7 {
        dx: (gt.cx - proposal.cx) / d,
        dy: (gt.cy - proposal.cy) / d,
        dz: (gt.cz - proposal.cz) / proposal.h,
        dw: (gt.w / proposal.w).ln(),
        dl: (gt.l / proposal.l).ln(),
        dh: (gt.h / proposal.h).ln(),
        dtheta: gt.yaw - proposal.yaw,
    })
}

/// Inverse of [`encode`].
pub fn decode(r: &Residual7, proposal: &Box3D) -> Result<Box3D> {
    check_dims(proposal, "proposal")?;
    if !r.is_finite() {
        return Err(Error::Domain(format!("residual is not finite: {r:?}")));
    }
    let d = diagonal(proposal);
    Ok(Box3D {
        cx: proposal.cx + r.dx * d,
        cy: proposal.cy + r.dy * d,
        cz: proposal.cz + r.dz * proposal.h,
        w: proposal.w * r.dw.exp(),
        l: proposal.l * r.dl.exp(),
        h: proposal.h * r.dh.exp(),
        yaw: proposal.yaw + r.dtheta,
    })
}

/// Axis-aligned point-cloud extent, `[min, max)` per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointCloudRange {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl PointCloudRange {
    /// `[0, 70.4] x [-40, 40] x [-3, 1]` m, the usual KITTI front-view crop.
    pub const KITTI: PointCloudRange = PointCloudRange {
        min: [0.0, -40.0, -3.0],
        max: [70.4, 40.0, 1.0],
    };

    pub fn new(min: [f64; 3], max: [f64; 3]) -> Result<Self> {
        let r = Self { min, max };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        for k in 0..3 {
            if !(self.min[k].is_finite() && self.max[k].is_finite() && self.max[k] > self.min[k]) {
                return Err(Error::Domain(format!(
                    "range axis {k} must satisfy min < max, got [{}, {}]",
                    self.min[k], self.max[k]
                )));
            }
        }
        Ok(())
    }

    pub fn span(&self) -> [f64; 3] {
        std::array::from_fn(|k| self.max[k] - self.min[k])
    }

    pub fn center(&self) -> [f64; 3] {
        std::array::from_fn(|k| 0.5 * (self.min[k] + self.max[k]))
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        (0..3).all(|k| p[k] >= self.min[k] && p[k] < self.max[k])
    }
}

impl Default for PointCloudRange {
    fn default() -> Self {
        Self::KITTI
    }
}

/// `n` copies of the box covering the whole range, with no rotation.
///
/// With yaw 0 the heading axis is x, so `l` takes the x span and `w` the
/// y span.
pub fn init_proposals(range: &PointCloudRange, n: usize) -> Result<Vec<Box3D>> {
    range.validate()?;
    if n == 0 {
        return Err(Error::Domain("proposal count must be at least 1".into()));
    }
    let [cx, cy, cz] = range.center();
    let [sx, sy, sz] = range.span();
    Ok(vec![Box3D::new(cx, cy, cz, sy, sx, sz, 0.0); n])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hand_proposal() -> Box3D {
        Box3D::new(10.0, 5.0, -1.0, 1.6, 3.9, 1.56, 0.0)
    }

    fn hand_gt() -> Box3D {
        Box3D::new(11.0, 5.5, -0.9, 1.8, 4.2, 1.5, 0.1)
    }

    #[test]
    fn identity_encodes_to_zero() {
        let p = hand_proposal();
        assert_eq!(encode(&p, &p).unwrap(), Residual7::default());
        assert_eq!(decode(&Residual7::default(), &p).unwrap(), p);
    }

    #[test]
    fn hand_example() {
        let r = encode(&hand_gt(), &hand_proposal()).unwrap();
        let expected = [0.23722, 0.11861, 0.06410, 0.11778, 0.07411, -0.03922, 0.1];
        for (got, want) in r.to_array().iter().zip(expected) {
            assert!((got - want).abs() <= 1e-5, "{got} vs {want}");
        }
        let back = decode(&r, &hand_proposal()).unwrap();
        for (got, want) in back.to_array().iter().zip(hand_gt().to_array()) {
            assert!((got - want).abs() <= 1e-12);
        }
    }

    #[test]
    fn log_ratio_width() {
        let p = Box3D::new(0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0);
        let r = Residual7 {
            dw: 2f64.ln(),
            ..Default::default()
        };
        assert!((decode(&r, &p).unwrap().w - 2.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_positive_dimensions() {
        let bad = Box3D {
            w: 0.0,
            ..hand_proposal()
        };
        assert!(matches!(encode(&hand_gt(), &bad), Err(Error::Domain(_))));
        assert!(matches!(encode(&bad, &hand_proposal()), Err(Error::Domain(_))));
        assert!(decode(&Residual7::default(), &bad).is_err());
    }

    #[test]
    fn angle_residual_is_not_wrapped() {
        let p = hand_proposal();
        let g = Box3D { yaw: 7.0, ..p };
        assert_eq!(encode(&g, &p).unwrap().dtheta, 7.0);
    }

    #[test]
    fn kitti_proposals() {
        let boxes = init_proposals(&PointCloudRange::KITTI, DEFAULT_NUM_PROPOSALS).unwrap();
        assert_eq!(boxes.len(), 100);
        let b = boxes[0];
        assert!((b.cx - 35.2).abs() < 1e-12);
        assert_eq!((b.cy, b.cz), (0.0, -1.0));
        assert!((b.l - 70.4).abs() < 1e-12);
        assert_eq!((b.w, b.h, b.yaw), (80.0, 4.0, 0.0));
        assert!(boxes.iter().all(|x| *x == b));
    }

    #[test]
    fn single_proposal_covers_range() {
        let range = PointCloudRange::new([-1.0, 2.0, 0.0], [3.0, 5.0, 2.0]).unwrap();
        let b = init_proposals(&range, 1).unwrap()[0];
        for p in [[-1.0, 2.0, 0.0], [2.999, 4.999, 1.999], [1.0, 3.5, 1.0]] {
            assert!(b.contains(p[0], p[1], p[2]));
        }
        assert!(init_proposals(&range, 0).is_err());
    }
}
