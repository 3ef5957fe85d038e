use super::polygon::{clip_quads, signed_area};
use super::{axis_align, to_bev, BevBox, Box3D};

fn ratio(intersection: f64, union: f64) -> f64 {
    if union <= 0.0 {
        return 0.0;
    }
    (intersection / union).clamp(0.0, 1.0)
}

/// IoU of the two footprints after snapping each box to its nearest axis
/// alignment with [`axis_align`].
pub fn bev_iou_axis_aligned(a: &BevBox, b: &BevBox) -> f64 {
    let (a, b) = (axis_align(a), axis_align(b));
    let dx = overlap_1d(a.cx, a.l, b.cx, b.l);
    let dy = overlap_1d(a.cy, a.w, b.cy, b.w);
    let inter = dx * dy;
    ratio(inter, a.area() + b.area() - inter)
}

fn overlap_1d(c0: f64, len0: f64, c1: f64, len1: f64) -> f64 {
    let lo = (c0 - 0.5 * len0).max(c1 - 0.5 * len1);
    let hi = (c0 + 0.5 * len0).min(c1 + 0.5 * len1);
    (hi - lo).max(0.0)
}

/// Exact intersection area of two oriented rectangles.
///
/// The pair is put in a canonical order before clipping so the result is
/// bit-for-bit symmetric in its arguments.
pub(crate) fn bev_intersection_area(a: &BevBox, b: &BevBox) -> f64 {
    let (first, second) = if a.total_cmp(b).is_le() { (a, b) } else { (b, a) };
    let clipped = clip_quads(&first.corners(), &second.corners());
    signed_area(&clipped).max(0.0)
}

/// IoU of two oriented rectangles.
pub fn bev_iou_rotated(a: &BevBox, b: &BevBox) -> f64 {
    let inter = bev_intersection_area(a, b);
    ratio(inter, a.area() + b.area() - inter)
}

/// Volume IoU of two oriented 3D boxes (rotation about the up axis only).
pub fn iou_3d_rotated(a: &Box3D, b: &Box3D) -> f64 {
    let dz = (a.z_max().min(b.z_max()) - a.z_min().max(b.z_min())).max(0.0);
    if dz == 0.0 {
        return 0.0;
    }
    let inter = bev_intersection_area(&to_bev(a), &to_bev(b)) * dz;
    ratio(inter, a.volume() + b.volume() - inter)
}

/// Distance-IoU loss: `1 - IoU + rho^2 / c^2`.
///
/// `rho` is the distance between centers and `c` the diagonal of the
/// axis-aligned box enclosing all 16 corners of both boxes.
pub fn diou_3d(pred: &Box3D, gt: &Box3D) -> f64 {
    let iou = iou_3d_rotated(pred, gt);
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for corner in pred.corners().iter().chain(gt.corners().iter()) {
        for k in 0..3 {
            lo[k] = lo[k].min(corner[k]);
            hi[k] = hi[k].max(corner[k]);
        }
    }
    let diag_sq: f64 = (0..3).map(|k| (hi[k] - lo[k]).powi(2)).sum();
    let rho_sq = (pred.cx - gt.cx).powi(2) + (pred.cy - gt.cy).powi(2) + (pred.cz - gt.cz).powi(2);
    1.0 - iou + rho_sq / diag_sq
}
