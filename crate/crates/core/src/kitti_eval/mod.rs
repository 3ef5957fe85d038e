//! KITTI-style evaluation: label I/O, difficulty levels, 11-point AP, point
//! noise injection and the threshold/robustness suites.

mod ap;
mod io;
mod noise;
mod suite;

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use ap::{ap_11, interpolated_ap, recall_positions, ApResult, IouMetric};
pub use io::{
    label_to_box, parse_label_file, parse_pointcloud_bin, read_label_file, read_pointcloud, write_pointcloud_bin,
    Calibration, KittiLabel,
};
pub use noise::{inject_noise, DEFAULT_NOISE_MARGIN};
pub use suite::{
    eval_suite, robustness_sweep, ApRecord, Detector, EvalConfig, EvalReport, PassThrough, RobustnessConfig,
    RobustnessRow, DEFAULT_IOU_THRESHOLDS, DEFAULT_NOISE_LEVELS,
};

use crate::geom3d::Box3D;
use crate::voxel_grid::PointRecord;
use crate::{Error, Result};

/// Difficulty level of a ground truth; ordered from easiest to ignored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Difficulty {
    Easy,
    Moderate,
    Hard,
    Ignored,
}

impl Difficulty {
    pub const LEVELS: [Difficulty; 3] = [Difficulty::Easy, Difficulty::Moderate, Difficulty::Hard];

    pub fn name(self) -> &'static str {
        match self {
            Difficulty::Easy => "Easy",
            Difficulty::Moderate => "Moderate",
            Difficulty::Hard => "Hard",
            Difficulty::Ignored => "Ignored",
        }
    }
}

/// Easiest level whose image-height, occlusion and truncation limits the
/// label satisfies: Easy (40 px, fully visible, 15 %), Moderate (25 px,
/// partly occluded, 30 %), Hard (25 px, largely occluded, 50 %).
pub fn difficulty_of(label: &KittiLabel) -> Difficulty {
    const LIMITS: [(Difficulty, f64, i32, f64); 3] = [
        (Difficulty::Easy, 40.0, 0, 0.15),
        (Difficulty::Moderate, 25.0, 1, 0.30),
        (Difficulty::Hard, 25.0, 2, 0.50),
    ];
    if label.occlusion < 0 {
        return Difficulty::Ignored;
    }
    let height = label.bbox_height();
    LIMITS
        .iter()
        .find(|&&(_, min_h, max_occ, max_trunc)| {
            height >= min_h && label.occlusion <= max_occ && label.truncation <= max_trunc
        })
        .map_or(Difficulty::Ignored, |&(d, ..)| d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GtObject {
    pub label: KittiLabel,
    /// LiDAR-frame box.
    pub bbox: Box3D,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionResult {
    pub bbox: Box3D,
    pub score: f64,
    pub category: String,
}

/// Ground truths, detections and (optionally) the point cloud of one frame.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DetectionFrame {
    pub id: String,
    pub gts: Vec<GtObject>,
    pub dets: Vec<DetectionResult>,
    pub cloud: Vec<PointRecord>,
}

/// Locations of a KITTI-layout dataset. `calib` switches labels to the
/// camera convention; `velodyne` loads `<id>.bin` point clouds.
#[derive(Debug, Clone, Copy)]
pub struct DatasetPaths<'a> {
    pub labels: &'a Path,
    pub detections: &'a Path,
    pub calib: Option<&'a Path>,
    pub velodyne: Option<&'a Path>,
}

impl<'a> DatasetPaths<'a> {
    pub fn new(labels: &'a Path, detections: &'a Path) -> Self {
        Self {
            labels,
            detections,
            calib: None,
            velodyne: None,
        }
    }
}

fn frame_ids(dir: &Path, ext: &str) -> Result<BTreeSet<String>> {
    let mut ids = BTreeSet::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().and_then(|e| e.to_str()) == Some(ext) {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                ids.insert(stem.to_string());
            }
        }
    }
    Ok(ids)
}

/// Loads every frame present in the label directory, in ascending id order.
/// Both directories must list exactly the same frame ids. `DontCare` lines
/// are dropped from the ground truths.
pub fn load_dataset(paths: &DatasetPaths) -> Result<Vec<DetectionFrame>> {
    let gt_ids = frame_ids(paths.labels, "txt")?;
    let det_ids = frame_ids(paths.detections, "txt")?;
    let missing: Vec<String> = gt_ids.difference(&det_ids).cloned().collect();
    if !missing.is_empty() {
        return Err(Error::MissingFrames {
            side: "detections",
            ids: missing,
        });
    }
    let extra: Vec<String> = det_ids.difference(&gt_ids).cloned().collect();
    if !extra.is_empty() {
        return Err(Error::MissingFrames {
            side: "labels",
            ids: extra,
        });
    }

    let mut frames = Vec::with_capacity(gt_ids.len());
    for id in gt_ids {
        let calib = match paths.calib {
            Some(dir) => Some(Calibration::read(&dir.join(format!("{id}.txt")))?),
            None => None,
        };
        let mut gts = Vec::new();
        for label in read_label_file(&paths.labels.join(format!("{id}.txt")))? {
            if label.is_dont_care() {
                continue;
            }
            let bbox = label_to_box(&label, calib.as_ref())?;
            gts.push(GtObject { label, bbox });
        }
        let mut dets = Vec::new();
        for label in read_label_file(&paths.detections.join(format!("{id}.txt")))? {
            let score = label
                .score
                .ok_or_else(|| Error::Format(format!("detection in frame {id} for {} has no score", label.category)))?;
            dets.push(DetectionResult {
                bbox: label_to_box(&label, calib.as_ref())?,
                score,
                category: label.category,
            });
        }
        let cloud = match paths.velodyne {
            Some(dir) => read_pointcloud(&dir.join(format!("{id}.bin")))?,
            None => Vec::new(),
        };
        frames.push(DetectionFrame { id, gts, dets, cloud });
    }
    Ok(frames)
}
