#![allow(dead_code)]

use std::f64::consts::PI;

use detcore::kitti_eval::{DetectionFrame, DetectionResult, GtObject, KittiLabel};
use detcore::Box3D;
use proptest::prelude::*;
use rand::Rng;

pub fn arb_box() -> impl Strategy<Value = Box3D> {
    (
        -20.0..20.0f64,
        -20.0..20.0f64,
        -2.0..2.0f64,
        0.2..5.0f64,
        0.2..5.0f64,
        0.2..3.0f64,
        -PI..PI,
    )
        .prop_map(|(cx, cy, cz, w, l, h, yaw)| Box3D::new(cx, cy, cz, w, l, h, yaw))
}

/// Pairs whose centers are close enough to overlap often.
pub fn arb_near_pair() -> impl Strategy<Value = (Box3D, Box3D)> {
    (
        arb_box(),
        -1.5..1.5f64,
        -1.5..1.5f64,
        -0.8..0.8f64,
        0.2..5.0f64,
        0.2..5.0f64,
        0.2..3.0f64,
        -PI..PI,
    )
        .prop_map(|(a, dx, dy, dz, w, l, h, yaw)| (a, Box3D::new(a.cx + dx, a.cy + dy, a.cz + dz, w, l, h, yaw)))
}

pub fn random_near_pair<R: Rng>(rng: &mut R) -> (Box3D, Box3D) {
    fn one<R: Rng>(rng: &mut R, center: [f64; 3]) -> Box3D {
        Box3D::new(
            center[0],
            center[1],
            center[2],
            rng.gen_range(0.3..3.0),
            rng.gen_range(0.3..5.0),
            rng.gen_range(0.3..2.5),
            rng.gen_range(-PI..PI),
        )
    }
    let c = [
        rng.gen_range(-5.0..5.0),
        rng.gen_range(-5.0..5.0),
        rng.gen_range(-1.0..1.0),
    ];
    let a = one(rng, c);
    let c = [
        a.cx + rng.gen_range(-1.5..1.5),
        a.cy + rng.gen_range(-1.5..1.5),
        a.cz + rng.gen_range(-0.8..0.8),
    ];
    let b = one(rng, c);
    (a, b)
}

pub fn car(x: f64, y: f64) -> Box3D {
    Box3D::new(x, y, -1.0, 1.6, 3.9, 1.56, 0.0)
}

/// Label with a tall, unoccluded image box, i.e. an Easy ground truth.
pub fn easy_label(b: &Box3D) -> KittiLabel {
    KittiLabel::from_lidar_box("Car", b, [100.0, 100.0, 200.0, 180.0], None)
}

pub fn frame(id: &str, gts: &[Box3D], dets: &[(Box3D, f64)]) -> DetectionFrame {
    DetectionFrame {
        id: id.to_string(),
        gts: gts
            .iter()
            .map(|b| GtObject {
                label: easy_label(b),
                bbox: *b,
            })
            .collect(),
        dets: dets
            .iter()
            .map(|&(bbox, score)| DetectionResult {
                bbox,
                score,
                category: "Car".into(),
            })
            .collect(),
        cloud: Vec::new(),
    }
}

/// 11-point interpolated AP from per-detection outcomes listed in score
/// order (`Some(true)` true positive, `Some(false)` false positive, `None`
/// not counted), enumerating every prefix of the ranking.
pub fn brute_force_ap(outcomes: &[Option<bool>], num_gt: usize) -> f64 {
    let counted: Vec<bool> = outcomes.iter().flatten().copied().collect();
    let prefixes: Vec<(f64, f64)> = (1..=counted.len())
        .map(|k| {
            let tp = counted[..k].iter().filter(|&&t| t).count() as f64;
            (tp / num_gt as f64, tp / k as f64)
        })
        .collect();
    let mut sum = 0.0;
    for step in 0..=10 {
        let r = step as f64 / 10.0;
        let best = prefixes
            .iter()
            .filter(|(rec, _)| *rec >= r)
            .map(|(_, p)| *p)
            .fold(0.0, f64::max);
        sum += best;
    }
    sum / 11.0 * 100.0
}

/// Minimum assignment cost over every injective map from rows to columns,
/// summed in row order.
pub fn brute_force_assignment(costs: &[Vec<f64>]) -> f64 {
    fn go(costs: &[Vec<f64>], row: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64) {
        if row == costs.len() {
            *best = best.min(acc);
            return;
        }
        for c in 0..used.len() {
            if !used[c] {
                used[c] = true;
                go(costs, row + 1, used, acc + costs[row][c], best);
                used[c] = false;
            }
        }
    }
    let cols = costs.first().map_or(0, Vec::len);
    let mut best = f64::INFINITY;
    go(costs, 0, &mut vec![false; cols], 0.0, &mut best);
    if costs.is_empty() {
        0.0
    } else {
        best
    }
}
