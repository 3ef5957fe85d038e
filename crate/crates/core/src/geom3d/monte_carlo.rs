//! Rejection-sampling estimate of volume IoU, independent of the clipping
//! path. Used only to verify the analytic kernels.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Box3D;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub iou: f64,
    /// Binomial standard error of `iou`, treating it as the fraction of
    /// union samples that fall in both boxes.
    pub std_err: f64,
    pub samples: u64,
    pub in_a: u64,
    pub in_b: u64,
    pub in_both: u64,
}

/// Axis-aligned bounds of a box's corners.
fn bounds(b: &Box3D) -> ([f64; 3], [f64; 3]) {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for c in b.corners() {
        for k in 0..3 {
            lo[k] = lo[k].min(c[k]);
            hi[k] = hi[k].max(c[k]);
        }
    }
    (lo, hi)
}

struct LocalFrame {
    cx: f64,
    cy: f64,
    cz: f64,
    sin: f64,
    cos: f64,
    half: [f64; 3],
}

impl LocalFrame {
    fn new(b: &Box3D) -> Self {
        let (sin, cos) = b.yaw.sin_cos();
        Self {
            cx: b.cx,
            cy: b.cy,
            cz: b.cz,
            sin,
            cos,
            half: [0.5 * b.l, 0.5 * b.w, 0.5 * b.h],
        }
    }

    #[inline]
    fn contains(&self, p: [f64; 3]) -> bool {
        let dz = p[2] - self.cz;
        if dz.abs() > self.half[2] {
            return false;
        }
        let (dx, dy) = (p[0] - self.cx, p[1] - self.cy);
        let lx = dx * self.cos + dy * self.sin;
        let ly = -dx * self.sin + dy * self.cos;
        lx.abs() <= self.half[0] && ly.abs() <= self.half[1]
    }
}

/// Samples `n_samples` points uniformly over the joint axis-aligned bounding
/// region of both boxes and returns `|A and B| / |A or B|` over the hits.
///
/// Deterministic for a fixed `seed`.
///
/// # Panics
///
/// If `n_samples` is zero.
pub fn mc_iou_oracle(a: &Box3D, b: &Box3D, n_samples: u64, seed: u64) -> McEstimate {
    assert!(n_samples >= 1, "n_samples must be at least 1");
    let (alo, ahi) = bounds(a);
    let (blo, bhi) = bounds(b);
    let lo: [f64; 3] = std::array::from_fn(|k| alo[k].min(blo[k]));
    let span: [f64; 3] = std::array::from_fn(|k| ahi[k].max(bhi[k]) - lo[k]);
    let (fa, fb) = (LocalFrame::new(a), LocalFrame::new(b));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut in_a, mut in_b, mut in_both) = (0u64, 0u64, 0u64);
    for _ in 0..n_samples {
        let p = [
            lo[0] + span[0] * rng.gen::<f64>(),
            lo[1] + span[1] * rng.gen::<f64>(),
            lo[2] + span[2] * rng.gen::<f64>(),
        ];
        let (ia, ib) = (fa.contains(p), fb.contains(p));
        in_a += ia as u64;
        in_b += ib as u64;
        in_both += (ia && ib) as u64;
    }

    let union = in_a + in_b - in_both;
    let (iou, std_err) = if union == 0 {
        (0.0, 0.0)
    } else {
        let p = in_both as f64 / union as f64;
        (p, (p * (1.0 - p) / union as f64).sqrt())
    };
    McEstimate {
        iou,
        std_err,
        samples: n_samples,
        in_a,
        in_b,
        in_both,
    }
}
