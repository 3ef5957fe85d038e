//! Rotated RoIAlign over a bird's-eye-view feature grid.
//!
//! Grid value `(row, col)` sits at the cell center
//! `(origin_x + (col + 0.5) * cell, origin_y + (row + 0.5) * cell)`.
//! Rows run along y and columns along x. Neighbors that fall outside the
//! grid read as zero.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::geom3d::BevBox;
use crate::{Error, Result};

/// Default pooling resolution.
pub const DEFAULT_POOL_SIZE: usize = 7;

const GRID_MAGIC: &[u8; 4] = b"FGRD";
const GRID_VERSION: u32 = 1;
const GRID_HEADER_LEN: usize = 4 + 4 * 4 + 3 * 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureGrid {
    height: usize,
    width: usize,
    channels: usize,
    /// Row-major `height x width x channels`.
    values: Vec<f64>,
    origin: [f64; 2],
    cell_size: f64,
}

impl FeatureGrid {
    pub fn new(
        height: usize,
        width: usize,
        channels: usize,
        values: Vec<f64>,
        origin: [f64; 2],
        cell_size: f64,
    ) -> Result<Self> {
        if values.len() != height * width * channels {
            return Err(Error::InvalidInput(format!(
                "feature grid holds {} values, expected {height} x {width} x {channels}",
                values.len()
            )));
        }
        if !(cell_size.is_finite() && cell_size > 0.0) {
            return Err(Error::Domain(format!("cell size must be positive, got {cell_size}")));
        }
        if !origin.iter().all(|v| v.is_finite()) || !values.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("feature grid contains non-finite values".into()));
        }
        Ok(Self {
            height,
            width,
            channels,
            values,
            origin,
            cell_size,
        })
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        channels: usize,
        origin: [f64; 2],
        cell_size: f64,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(height * width * channels);
        for r in 0..height {
            for c in 0..width {
                for ch in 0..channels {
                    values.push(f(r, c, ch));
                }
            }
        }
        Self::new(height, width, channels, values, origin, cell_size)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize, ch: usize) -> f64 {
        self.values[(row * self.width + col) * self.channels + ch]
    }

    /// Center of a cell in meters.
    pub fn cell_center(&self, row: usize, col: usize) -> (f64, f64) {
        (
            self.origin[0] + (col as f64 + 0.5) * self.cell_size,
            self.origin[1] + (row as f64 + 0.5) * self.cell_size,
        )
    }

    /// Accumulates `weight * grid[row, col, :]` into `out`, treating
    /// out-of-range cells as zero.
    fn accumulate(&self, row: i64, col: i64, weight: f64, out: &mut [f64]) {
        if weight == 0.0 || row < 0 || col < 0 || row >= self.height as i64 || col >= self.width as i64 {
            return;
        }
        let base = (row as usize * self.width + col as usize) * self.channels;
        for (o, v) in out.iter_mut().zip(&self.values[base..base + self.channels]) {
            *o += weight * v;
        }
    }

    /// Bilinear interpolation at a metric position, written into `out`.
    pub fn bilinear(&self, x: f64, y: f64, out: &mut [f64]) {
        out.fill(0.0);
        let u = (x - self.origin[0]) / self.cell_size - 0.5;
        let v = (y - self.origin[1]) / self.cell_size - 0.5;
        let (c0, r0) = (u.floor(), v.floor());
        let (fu, fv) = (u - c0, v - r0);
        let (c0, r0) = (c0 as i64, r0 as i64);
        self.accumulate(r0, c0, (1.0 - fv) * (1.0 - fu), out);
        self.accumulate(r0, c0 + 1, (1.0 - fv) * fu, out);
        self.accumulate(r0 + 1, c0, fv * (1.0 - fu), out);
        self.accumulate(r0 + 1, c0 + 1, fv * fu, out);
    }

    /// Serializes to the binary grid format: `b"FGRD"`, then little-endian
    /// `u32` version, height, width, channels, then `f64` origin x, origin y,
    /// cell size, then the row-major values as `f64`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(GRID_HEADER_LEN + 8 * self.values.len());
        out.extend_from_slice(GRID_MAGIC);
        for v in [
            GRID_VERSION,
            self.height as u32,
            self.width as u32,
            self.channels as u32,
        ] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for v in [self.origin[0], self.origin[1], self.cell_size] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < GRID_HEADER_LEN || &bytes[..4] != GRID_MAGIC {
            return Err(Error::Format(
                "not a feature grid file (bad magic or short header)".into(),
            ));
        }
        let u32_at = |k: usize| u32::from_le_bytes(bytes[4 + 4 * k..8 + 4 * k].try_into().unwrap()) as usize;
        let f64_at = |off: usize| f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
        let version = u32_at(0);
        if version != GRID_VERSION as usize {
            return Err(Error::Format(format!("unsupported feature grid version {version}")));
        }
        let (height, width, channels) = (u32_at(1), u32_at(2), u32_at(3));
        let origin = [f64_at(20), f64_at(28)];
        let cell_size = f64_at(36);
        let body = &bytes[GRID_HEADER_LEN..];
        let expected = height * width * channels * 8;
        if body.len() != expected {
            return Err(Error::Format(format!(
                "feature grid body has {} bytes, expected {expected}",
                body.len()
            )));
        }
        let values = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::new(height, width, channels, values, origin, cell_size)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }
}

/// `size x size x channels` patch pooled under an oriented box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoiPatch {
    pub size: usize,
    pub channels: usize,
    /// Indexed `[(lateral_bin * size + heading_bin) * channels + ch]`.
    pub values: Vec<f64>,
}

impl RoiPatch {
    /// Bin `lateral` runs along the box's local y (width), bin `heading`
    /// along its local x (length).
    pub fn get(&self, lateral: usize, heading: usize, ch: usize) -> f64 {
        self.values[(lateral * self.size + heading) * self.channels + ch]
    }
}

/// Metric sampling positions of the bin centers, in patch order.
pub fn bin_centers(b: &BevBox, size: usize) -> Vec<(f64, f64)> {
    let (s, c) = b.yaw.sin_cos();
    let (step_l, step_w) = (b.l / size as f64, b.w / size as f64);
    let mut out = Vec::with_capacity(size * size);
    for iy in 0..size {
        let ly = -0.5 * b.w + (iy as f64 + 0.5) * step_w;
        for ix in 0..size {
            let lx = -0.5 * b.l + (ix as f64 + 0.5) * step_l;
            out.push((b.cx + lx * c - ly * s, b.cy + lx * s + ly * c));
        }
    }
    out
}

/// Divides the box into `size x size` bins in its own frame and samples the
/// grid bilinearly once at each bin center.
pub fn rotated_roi_align(grid: &FeatureGrid, b: &BevBox, size: usize) -> Result<RoiPatch> {
    if size == 0 {
        return Err(Error::Domain("pooling resolution must be at least 1".into()));
    }
    if !(b.w > 0.0 && b.l > 0.0) {
        return Err(Error::Domain(format!(
            "box dimensions must be positive, got w={} l={}",
            b.w, b.l
        )));
    }
    let ch = grid.channels;
    let mut values = vec![0.0; size * size * ch];
    for (k, (x, y)) in bin_centers(b, size).into_iter().enumerate() {
        grid.bilinear(x, y, &mut values[k * ch..(k + 1) * ch]);
    }
    Ok(RoiPatch {
        size,
        channels: ch,
        values,
    })
}
