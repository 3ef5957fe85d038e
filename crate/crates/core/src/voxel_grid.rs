//! Point-cloud voxelization with a per-voxel point cap and mean encoding.
//!
//! Voxels are half-open `[lo, hi)` on every axis, so a point lying exactly
//! on the range maximum is out of range. Out-of-range points are dropped
//! before any capping happens.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::box_codec::PointCloudRange;
use crate::{Error, Result};

/// Default voxel edge lengths in meters.
pub const DEFAULT_VOXEL_SIZE: [f64; 3] = [0.05, 0.05, 0.1];
/// Default maximum number of points kept per voxel.
pub const DEFAULT_MAX_POINTS_PER_VOXEL: usize = 5;

/// One LiDAR return: position in meters plus reflectance.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PointRecord {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub intensity: f64,
}

impl PointRecord {
    pub const fn new(x: f64, y: f64, z: f64, intensity: f64) -> Self {
        Self { x, y, z, intensity }
    }

    pub fn xyz(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.x, self.y, self.z, self.intensity]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoxelGridSpec {
    pub range: PointCloudRange,
    pub voxel_size: [f64; 3],
}

impl Default for VoxelGridSpec {
    fn default() -> Self {
        Self {
            range: PointCloudRange::KITTI,
            voxel_size: DEFAULT_VOXEL_SIZE,
        }
    }
}

impl VoxelGridSpec {
    pub fn new(range: PointCloudRange, voxel_size: [f64; 3]) -> Result<Self> {
        let spec = Self { range, voxel_size };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.range.validate()?;
        if let Some(k) = (0..3).find(|&k| !(self.voxel_size[k].is_finite() && self.voxel_size[k] > 0.0)) {
            return Err(Error::Domain(format!(
                "voxel size along axis {k} must be positive, got {}",
                self.voxel_size[k]
            )));
        }
        Ok(())
    }

    /// Bounds `[lo, hi)` of a voxel.
    pub fn voxel_bounds(&self, idx: VoxelIndex) -> ([f64; 3], [f64; 3]) {
        let i = idx.to_array();
        let lo = std::array::from_fn(|k| self.range.min[k] + i[k] as f64 * self.voxel_size[k]);
        let hi = std::array::from_fn(|k| self.range.min[k] + (i[k] + 1) as f64 * self.voxel_size[k]);
        (lo, hi)
    }
}

/// Number of voxels per axis: `ceil(extent / voxel_size)`.
///
/// A relative slack of 1e-9 absorbs ratios such as `0.3 / 0.1` that land a
/// rounding error above an integer.
pub fn grid_dims(spec: &VoxelGridSpec) -> Result<[usize; 3]> {
    spec.validate()?;
    let span = spec.range.span();
    Ok(std::array::from_fn(|k| {
        let ratio = span[k] / spec.voxel_size[k];
        (ratio - 1e-9 * ratio.max(1.0)).ceil().max(1.0) as usize
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VoxelIndex {
    pub x: u32,
    pub y: u32,
    pub z: u32,
}

impl VoxelIndex {
    pub fn to_array(self) -> [u32; 3] {
        [self.x, self.y, self.z]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VoxelMap {
    pub spec: VoxelGridSpec,
    pub dims: [usize; 3],
    pub max_points: usize,
    pub voxels: BTreeMap<VoxelIndex, Vec<PointRecord>>,
    pub input_points: usize,
    pub out_of_range: usize,
    /// Points discarded because their voxel exceeded the cap.
    pub capped_away: usize,
}

impl VoxelMap {
    pub fn retained_points(&self) -> usize {
        self.voxels.values().map(Vec::len).sum()
    }

    pub fn non_empty_voxels(&self) -> usize {
        self.voxels.len()
    }
}

pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Bins points into voxels, keeping at most `max_points` per voxel.
///
/// Overfull voxels keep a uniformly random subset drawn with a partial
/// Fisher-Yates shuffle. Each voxel's generator is derived from `seed` and
/// the voxel's linear index, so the result does not depend on processing
/// order.
pub fn assign_points(points: &[PointRecord], spec: &VoxelGridSpec, max_points: usize, seed: u64) -> Result<VoxelMap> {
    if max_points == 0 {
        return Err(Error::Domain("max points per voxel must be at least 1".into()));
    }
    let dims = grid_dims(spec)?;
    let mut voxels: BTreeMap<VoxelIndex, Vec<PointRecord>> = BTreeMap::new();
    let mut out_of_range = 0;
    for p in points {
        let xyz = p.xyz();
        if !spec.range.contains(xyz) {
            out_of_range += 1;
            continue;
        }
        let idx: [u32; 3] = std::array::from_fn(|k| {
            let cell = ((xyz[k] - spec.range.min[k]) / spec.voxel_size[k]).floor() as usize;
            cell.min(dims[k] - 1) as u32
        });
        voxels
            .entry(VoxelIndex {
                x: idx[0],
                y: idx[1],
                z: idx[2],
            })
            .or_default()
            .push(*p);
    }

    let mut capped_away = 0;
    for (idx, pts) in voxels.iter_mut().filter(|(_, v)| v.len() > max_points) {
        let linear = (idx.z as u64 * dims[1] as u64 + idx.y as u64) * dims[0] as u64 + idx.x as u64;
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(linear)));
        for i in 0..max_points {
            let j = rng.gen_range(i..pts.len());
            pts.swap(i, j);
        }
        capped_away += pts.len() - max_points;
        pts.truncate(max_points);
    }

    Ok(VoxelMap {
        spec: *spec,
        dims,
        max_points,
        voxels,
        input_points: points.len(),
        out_of_range,
        capped_away,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoxelFeature {
    pub index: VoxelIndex,
    /// Mean `(x, y, z, intensity)` over the retained points.
    pub mean: [f64; 4],
    pub num_points: usize,
}

/// Mean point record of every non-empty voxel, in voxel-index order.
pub fn mean_encode(vmap: &VoxelMap) -> Vec<VoxelFeature> {
    vmap.voxels
        .iter()
        .filter(|(_, pts)| !pts.is_empty())
        .map(|(&index, pts)| {
            let mut sum = [0.0; 4];
            for p in pts {
                for (s, v) in sum.iter_mut().zip(p.to_array()) {
                    *s += v;
                }
            }
            let n = pts.len() as f64;
            VoxelFeature {
                index,
                mean: sum.map(|s| s / n),
                num_points: pts.len(),
            }
        })
        .collect()
}
