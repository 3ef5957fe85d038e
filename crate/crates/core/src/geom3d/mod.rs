//! Oriented boxes and the IoU family used for matching, training losses and
//! evaluation.
//!
//! Axis convention: `l` is the extent along the heading direction (local x),
//! `w` the lateral extent (local y) and `h` the vertical extent. `yaw` rotates
//! the local frame counter-clockwise around the up axis.

mod iou;
mod monte_carlo;
mod polygon;

use std::cmp::Ordering;
use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

pub use iou::{bev_iou_axis_aligned, bev_iou_rotated, diou_3d, iou_3d_rotated};
pub use monte_carlo::{mc_iou_oracle, McEstimate};
pub use polygon::{Point2, Polygon2D};

/// Oriented 3D box: center, dimensions and heading around the up axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Box3D {
    pub cx: f64,
    pub cy: f64,
    pub cz: f64,
    pub w: f64,
    pub l: f64,
    pub h: f64,
    pub yaw: f64,
}

impl Box3D {
    pub const fn new(cx: f64, cy: f64, cz: f64, w: f64, l: f64, h: f64, yaw: f64) -> Self {
        Self {
            cx,
            cy,
            cz,
            w,
            l,
            h,
            yaw,
        }
    }

    /// All fields finite and all dimensions strictly positive.
    pub fn is_valid(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite()) && self.w > 0.0 && self.l > 0.0 && self.h > 0.0
    }

    /// Parameters in `(cx, cy, cz, w, l, h, yaw)` order.
    pub fn to_array(&self) -> [f64; 7] {
        [self.cx, self.cy, self.cz, self.w, self.l, self.h, self.yaw]
    }

    pub fn from_array(p: [f64; 7]) -> Self {
        Self::new(p[0], p[1], p[2], p[3], p[4], p[5], p[6])
    }

    pub fn volume(&self) -> f64 {
        self.w * self.l * self.h
    }

    pub fn z_min(&self) -> f64 {
        self.cz - 0.5 * self.h
    }

    pub fn z_max(&self) -> f64 {
        self.cz + 0.5 * self.h
    }

    /// The 8 corners: the 4 BEV corners at the bottom face, then at the top face.
    pub fn corners(&self) -> [[f64; 3]; 8] {
        let bev = to_bev(self).corners();
        let (lo, hi) = (self.z_min(), self.z_max());
        let mut out = [[0.0; 3]; 8];
        for (i, p) in bev.iter().enumerate() {
            out[i] = [p.x, p.y, lo];
            out[i + 4] = [p.x, p.y, hi];
        }
        out
    }

    /// Whether a point lies inside the box, boundary included.
    pub fn contains(&self, x: f64, y: f64, z: f64) -> bool {
        (z - self.cz).abs() <= 0.5 * self.h && to_bev(self).contains(x, y)
    }
}

/// Bird's-eye-view footprint of a [`Box3D`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BevBox {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub l: f64,
    pub yaw: f64,
}

impl BevBox {
    pub const fn new(cx: f64, cy: f64, w: f64, l: f64, yaw: f64) -> Self {
        Self { cx, cy, w, l, yaw }
    }

    pub fn area(&self) -> f64 {
        self.w * self.l
    }

    /// Corners in counter-clockwise order, starting at the front-left one.
    pub fn corners(&self) -> [Point2; 4] {
        let (s, c) = self.yaw.sin_cos();
        let (hl, hw) = (0.5 * self.l, 0.5 * self.w);
        [(hl, hw), (-hl, hw), (-hl, -hw), (hl, -hw)].map(|(lx, ly)| Point2 {
            x: self.cx + lx * c - ly * s,
            y: self.cy + lx * s + ly * c,
        })
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (s, c) = self.yaw.sin_cos();
        let (dx, dy) = (x - self.cx, y - self.cy);
        let lx = dx * c + dy * s;
        let ly = -dx * s + dy * c;
        lx.abs() <= 0.5 * self.l && ly.abs() <= 0.5 * self.w
    }

    pub fn polygon(&self) -> Polygon2D {
        Polygon2D::new(self.corners().to_vec())
    }

    /// Total order over the raw parameters, used to make pairwise kernels
    /// exactly symmetric.
    pub(crate) fn total_cmp(&self, other: &Self) -> Ordering {
        let a = [self.cx, self.cy, self.w, self.l, self.yaw];
        let b = [other.cx, other.cy, other.w, other.l, other.yaw];
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    }
}

/// Drops the vertical center and height.
pub fn to_bev(b: &Box3D) -> BevBox {
    BevBox::new(b.cx, b.cy, b.w, b.l, b.yaw)
}

/// Snaps the yaw to the nearest multiple of pi/2 and returns the equivalent
/// yaw-0 box. Odd multiples swap `w` and `l`. A yaw exactly halfway between
/// two multiples snaps to the lower one.
pub fn axis_align(b: &BevBox) -> BevBox {
    let quarter_turns = (b.yaw / FRAC_PI_2 - 0.5).ceil();
    let odd = quarter_turns.rem_euclid(2.0) == 1.0;
    let (w, l) = if odd { (b.l, b.w) } else { (b.w, b.l) };
    BevBox::new(b.cx, b.cy, w, l, 0.0)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_4, PI, TAU};

    use super::*;

    #[test]
    fn to_bev_projects_fields() {
        let b = Box3D::new(0.0, 0.0, 0.0, 2.0, 4.0, 1.5, 0.3);
        assert_eq!(to_bev(&b), BevBox::new(0.0, 0.0, 2.0, 4.0, 0.3));
        let b = Box3D::new(10.0, 5.0, -1.0, 1.6, 3.9, 1.56, 0.0);
        assert_eq!(to_bev(&b), BevBox::new(10.0, 5.0, 1.6, 3.9, 0.0));
    }

    #[test]
    fn corners_are_periodic_in_yaw() {
        let a = BevBox::new(1.0, -2.0, 2.0, 4.0, 0.0).corners();
        let b = BevBox::new(1.0, -2.0, 2.0, 4.0, TAU).corners();
        for (p, q) in a.iter().zip(b.iter()) {
            assert!((p.x - q.x).abs() < 1e-12 && (p.y - q.y).abs() < 1e-12);
        }
    }

    #[test]
    fn corners_are_counter_clockwise() {
        let poly = BevBox::new(3.0, 1.0, 1.0, 2.5, 0.7).polygon();
        assert!(poly.signed_area() > 0.0);
        assert!((poly.area() - 2.5).abs() < 1e-12);
    }

    #[test]
    fn axis_align_snaps_to_nearest_quarter_turn() {
        assert_eq!(
            axis_align(&BevBox::new(0.0, 0.0, 2.0, 4.0, 0.1)),
            BevBox::new(0.0, 0.0, 2.0, 4.0, 0.0)
        );
        assert_eq!(
            axis_align(&BevBox::new(0.0, 0.0, 2.0, 4.0, 1.5)),
            BevBox::new(0.0, 0.0, 4.0, 2.0, 0.0)
        );
        assert_eq!(
            axis_align(&BevBox::new(0.0, 0.0, 2.0, 4.0, PI)),
            BevBox::new(0.0, 0.0, 2.0, 4.0, 0.0)
        );
        assert_eq!(
            axis_align(&BevBox::new(0.0, 0.0, 2.0, 4.0, -1.5)),
            BevBox::new(0.0, 0.0, 4.0, 2.0, 0.0)
        );
    }

    #[test]
    fn axis_align_tie_goes_to_lower_multiple() {
        assert_eq!(
            axis_align(&BevBox::new(0.0, 0.0, 2.0, 4.0, FRAC_PI_4)),
            BevBox::new(0.0, 0.0, 2.0, 4.0, 0.0)
        );
        // 3pi/4 sits between pi/2 (odd, swapped) and pi (even).
        assert_eq!(
            axis_align(&BevBox::new(0.0, 0.0, 2.0, 4.0, 3.0 * FRAC_PI_4)),
            BevBox::new(0.0, 0.0, 4.0, 2.0, 0.0)
        );
    }

    #[test]
    fn axis_align_preserves_footprint_of_snapped_box() {
        let b = BevBox::new(1.0, 2.0, 1.0, 3.0, FRAC_PI_2);
        let aligned = axis_align(&b);
        // The snapped box is exactly b here, so the footprints must coincide.
        let iou = bev_iou_rotated(&b, &aligned);
        assert!((iou - 1.0).abs() < 1e-12, "{iou}");
    }

    #[test]
    fn contains_respects_heading() {
        let b = Box3D::new(0.0, 0.0, 0.0, 1.0, 4.0, 2.0, FRAC_PI_2);
        assert!(b.contains(0.0, 1.9, 0.9));
        assert!(!b.contains(1.9, 0.0, 0.0));
        assert!(!b.contains(0.0, 0.0, 1.1));
    }

    #[test]
    fn validity() {
        assert!(Box3D::new(0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0).is_valid());
        assert!(!Box3D::new(0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0).is_valid());
        assert!(!Box3D::new(f64::NAN, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0).is_valid());
    }
}
