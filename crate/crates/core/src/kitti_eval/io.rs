//! KITTI text labels, calibration files and velodyne point-cloud binaries.

use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Matrix3, Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::geom3d::Box3D;
use crate::voxel_grid::PointRecord;
use crate::{Error, Result};

/// One object line of a KITTI label (15 fields) or result file (16 fields,
/// the last being the score).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KittiLabel {
    pub category: String,
    pub truncation: f64,
    /// 0 fully visible .. 3 unknown; -1 on `DontCare` lines.
    pub occlusion: i32,
    pub alpha: f64,
    /// Image box `(left, top, right, bottom)` in pixels.
    pub bbox: [f64; 4],
    /// `(h, w, l)` in meters.
    pub dimensions: [f64; 3],
    /// `(x, y, z)`: bottom center in the rectified camera frame, or the box
    /// center in the LiDAR frame when no calibration is used.
    pub location: [f64; 3],
    pub rotation_y: f64,
    pub score: Option<f64>,
}

impl KittiLabel {
    pub fn bbox_height(&self) -> f64 {
        self.bbox[3] - self.bbox[1]
    }

    pub fn is_dont_care(&self) -> bool {
        self.category == "DontCare"
    }

    /// Label authored directly in the LiDAR frame (see [`label_to_box`]).
    pub fn from_lidar_box(category: &str, b: &Box3D, image_bbox: [f64; 4], score: Option<f64>) -> Self {
        Self {
            category: category.to_string(),
            truncation: 0.0,
            occlusion: 0,
            alpha: 0.0,
            bbox: image_bbox,
            dimensions: [b.h, b.w, b.l],
            location: [b.cx, b.cy, b.cz],
            rotation_y: b.yaw,
            score,
        }
    }

    /// Formats the label as one KITTI line. Floats use the shortest
    /// representation that parses back to the same value.
    pub fn to_line(&self) -> String {
        let mut s = format!(
            "{} {} {} {}",
            self.category, self.truncation, self.occlusion, self.alpha
        );
        for v in self.bbox.iter().chain(&self.dimensions).chain(&self.location) {
            write!(s, " {v}").unwrap();
        }
        write!(s, " {}", self.rotation_y).unwrap();
        if let Some(score) = self.score {
            write!(s, " {score}").unwrap();
        }
        s
    }
}

fn parse_f64(tok: &str, line: usize, field: &str) -> Result<f64> {
    tok.parse::<f64>().map_err(|_| Error::Parse {
        line,
        message: format!("field {field}: cannot parse {tok:?} as a number"),
    })
}

/// Parses a KITTI label or result file. Blank lines are skipped; line
/// numbers in errors are 1-based.
pub fn parse_label_file(text: &str) -> Result<Vec<KittiLabel>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let toks: Vec<&str> = raw.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if toks.len() != 15 && toks.len() != 16 {
            return Err(Error::Parse {
                line,
                message: format!("expected 15 fields (16 with a score), found {}", toks.len()),
            });
        }
        let num = |k: usize, name: &str| parse_f64(toks[k], line, name);
        let occlusion = toks[2]
            .parse::<f64>()
            .ok()
            .filter(|v| v.fract() == 0.0 && (-1.0..=3.0).contains(v));
        let Some(occlusion) = occlusion else {
            return Err(Error::Parse {
                line,
                message: format!("field occluded: expected an integer in -1..=3, found {:?}", toks[2]),
            });
        };
        out.push(KittiLabel {
            category: toks[0].to_string(),
            truncation: num(1, "truncated")?,
            occlusion: occlusion as i32,
            alpha: num(3, "alpha")?,
            bbox: [num(4, "left")?, num(5, "top")?, num(6, "right")?, num(7, "bottom")?],
            dimensions: [num(8, "height")?, num(9, "width")?, num(10, "length")?],
            location: [num(11, "x")?, num(12, "y")?, num(13, "z")?],
            rotation_y: num(14, "rotation_y")?,
            score: if toks.len() == 16 {
                Some(num(15, "score")?)
            } else {
                None
            },
        });
    }
    Ok(out)
}

pub fn read_label_file(path: &Path) -> Result<Vec<KittiLabel>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_label_file(&text).map_err(|e| match e {
        Error::Parse { line, message } => Error::Parse {
            line,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    })
}

/// Rectification and LiDAR-to-camera extrinsics of one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub r0_rect: Matrix3<f64>,
    /// 3x4 rigid transform stored in the top rows of a 4x4 matrix.
    pub velo_to_cam: Matrix4<f64>,
}

impl Calibration {
    /// Parses a KITTI calibration file (`KEY: v v v ...` lines). Only the
    /// rectification and velodyne-to-camera entries are used.
    pub fn parse(text: &str) -> Result<Self> {
        let mut r0 = None;
        let mut tr = None;
        for (i, raw) in text.lines().enumerate() {
            let Some((key, rest)) = raw.split_once(':') else {
                continue;
            };
            let vals: Result<Vec<f64>> = rest
                .split_whitespace()
                .map(|t| parse_f64(t, i + 1, key.trim()))
                .collect();
            match key.trim() {
                "R0_rect" | "R_rect" => r0 = Some((i + 1, vals?)),
                "Tr_velo_to_cam" | "Tr_velo_cam" => tr = Some((i + 1, vals?)),
                _ => {}
            }
        }
        let (l, r0) = r0.ok_or_else(|| Error::Format("calibration lacks R0_rect".into()))?;
        if r0.len() != 9 {
            return Err(Error::Parse {
                line: l,
                message: format!("R0_rect needs 9 values, found {}", r0.len()),
            });
        }
        let (l, tr) = tr.ok_or_else(|| Error::Format("calibration lacks Tr_velo_to_cam".into()))?;
        if tr.len() != 12 {
            return Err(Error::Parse {
                line: l,
                message: format!("Tr_velo_to_cam needs 12 values, found {}", tr.len()),
            });
        }
        let mut velo_to_cam = Matrix4::identity();
        for r in 0..3 {
            for c in 0..4 {
                velo_to_cam[(r, c)] = tr[r * 4 + c];
            }
        }
        Ok(Self {
            r0_rect: Matrix3::from_row_slice(&r0),
            velo_to_cam,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    fn velo_to_rect(&self) -> Matrix4<f64> {
        let mut r0 = Matrix4::identity();
        r0.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.r0_rect);
        r0 * self.velo_to_cam
    }

    pub fn lidar_to_rect(&self, p: [f64; 3]) -> [f64; 3] {
        let q = self.velo_to_rect() * Vector4::new(p[0], p[1], p[2], 1.0);
        [q[0], q[1], q[2]]
    }

    pub fn rect_to_lidar(&self, p: [f64; 3]) -> Result<[f64; 3]> {
        let inv = self
            .velo_to_rect()
            .try_inverse()
            .ok_or_else(|| Error::Domain("calibration transform is singular".into()))?;
        let q = inv * Vector4::new(p[0], p[1], p[2], 1.0);
        Ok([q[0], q[1], q[2]])
    }
}

/// Converts a label to a LiDAR-frame box.
///
/// With a calibration the label is read in the camera convention: the
/// location is the bottom center in rectified camera coordinates (y down)
/// and the LiDAR heading is `-rotation_y - pi/2`. Without one, the location
/// is taken as the LiDAR-frame box center and `rotation_y` as the LiDAR yaw.
pub fn label_to_box(label: &KittiLabel, calib: Option<&Calibration>) -> Result<Box3D> {
    let [h, w, l] = label.dimensions;
    let b = match calib {
        None => {
            let [x, y, z] = label.location;
            Box3D::new(x, y, z, w, l, h, label.rotation_y)
        }
        Some(calib) => {
            let [x, y, z] = label.location;
            let [cx, cy, cz] = calib.rect_to_lidar([x, y - 0.5 * h, z])?;
            Box3D::new(cx, cy, cz, w, l, h, -label.rotation_y - FRAC_PI_2)
        }
    };
    if !b.is_valid() {
        return Err(Error::InvalidInput(format!(
            "{} label does not describe a valid box: {:?}",
            label.category, b
        )));
    }
    Ok(b)
}

/// Decodes a velodyne binary: consecutive little-endian `f32` quadruples
/// `(x, y, z, intensity)`.
pub fn parse_pointcloud_bin(bytes: &[u8]) -> Result<Vec<PointRecord>> {
    if !bytes.len().is_multiple_of(16) {
        return Err(Error::Format(format!(
            "point cloud byte length {} is not a multiple of 16",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(16)
        .map(|c| {
            let f = |k: usize| f32::from_le_bytes(c[4 * k..4 * k + 4].try_into().unwrap()) as f64;
            PointRecord::new(f(0), f(1), f(2), f(3))
        })
        .collect())
}

/// Encodes points as `f32` quadruples. Values read with
/// [`parse_pointcloud_bin`] round-trip bit-exactly.
pub fn write_pointcloud_bin(points: &[PointRecord]) -> Vec<u8> {
    let mut out = Vec::with_capacity(points.len() * 16);
    for p in points {
        for v in p.to_array() {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

pub fn read_pointcloud(path: &Path) -> Result<Vec<PointRecord>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_pointcloud_bin(&bytes)
}
