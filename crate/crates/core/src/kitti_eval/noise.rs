//! Synthetic clutter around ground-truth boxes for robustness sweeps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::DetectionFrame;
use crate::voxel_grid::{splitmix64, PointRecord};

/// Margin (meters) by which each box is grown before sampling noise.
pub const DEFAULT_NOISE_MARGIN: f64 = 0.2;

/// FNV-1a hash of the frame id; frames get independent streams regardless
/// of the order they are processed in.
fn frame_seed(seed: u64, id: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in id.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    splitmix64(seed ^ splitmix64(h))
}

/// Returns a copy of `frame` whose cloud has `k` extra points per ground
/// truth appended after the original points.
///
/// Noise points are uniform in the box grown by `margin` on every side
/// (in its own rotated frame), with uniform intensity in `[0, 1)`.
pub fn inject_noise(frame: &DetectionFrame, k: usize, seed: u64, margin: f64) -> DetectionFrame {
    let mut out = frame.clone();
    if k == 0 {
        return out;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(frame_seed(seed, &frame.id));
    out.cloud.reserve(k * frame.gts.len());
    for gt in &frame.gts {
        let b = &gt.bbox;
        let half = [0.5 * b.l + margin, 0.5 * b.w + margin, 0.5 * b.h + margin];
        let (sin, cos) = b.yaw.sin_cos();
        for _ in 0..k {
            let lx = rng.gen_range(-half[0]..=half[0]);
            let ly = rng.gen_range(-half[1]..=half[1]);
            let lz = rng.gen_range(-half[2]..=half[2]);
            out.cloud.push(PointRecord::new(
                b.cx + lx * cos - ly * sin,
                b.cy + lx * sin + ly * cos,
                b.cz + lz,
                rng.gen::<f64>(),
            ));
        }
    }
    out
}
