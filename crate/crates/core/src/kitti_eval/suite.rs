//! Multi-threshold evaluation tables and the noise-robustness sweep.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{ap_11, inject_noise, DetectionFrame, DetectionResult, Difficulty, IouMetric, DEFAULT_NOISE_MARGIN};
use crate::voxel_grid::{assign_points, VoxelGridSpec, DEFAULT_MAX_POINTS_PER_VOXEL};
use crate::Result;

pub const DEFAULT_IOU_THRESHOLDS: [f64; 3] = [0.70, 0.75, 0.80];

/// Noise points added per ground truth in the default sweep.
pub const DEFAULT_NOISE_LEVELS: [usize; 3] = [0, 20, 100];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub categories: Vec<String>,
    pub thresholds: Vec<f64>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            categories: vec!["Car".into()],
            thresholds: DEFAULT_IOU_THRESHOLDS.to_vec(),
        }
    }
}

/// One AP value. `difficulty` is `None` for the mean over the three levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApRecord {
    pub category: String,
    pub metric: IouMetric,
    pub threshold: f64,
    pub difficulty: Option<Difficulty>,
    pub ap: f64,
    pub no_ground_truth: bool,
}

impl ApRecord {
    pub fn difficulty_name(&self) -> &'static str {
        self.difficulty.map_or("mAP", Difficulty::name)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalReport {
    pub records: Vec<ApRecord>,
}

impl EvalReport {
    pub fn get(
        &self,
        category: &str,
        metric: IouMetric,
        threshold: f64,
        difficulty: Option<Difficulty>,
    ) -> Option<f64> {
        self.records
            .iter()
            .find(|r| {
                r.category == category && r.metric == metric && r.threshold == threshold && r.difficulty == difficulty
            })
            .map(|r| r.ap)
    }

    /// One `key=value` line per record.
    pub fn to_records(&self) -> String {
        let mut s = String::new();
        for r in &self.records {
            writeln!(
                s,
                "category={} metric={} threshold={:.2} difficulty={} value={:.4} no_gt={}",
                r.category,
                r.metric.name(),
                r.threshold,
                r.difficulty_name(),
                r.ap,
                r.no_ground_truth
            )
            .unwrap();
        }
        s
    }

    /// Human-readable table: one block per category, one row per threshold.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let mut categories: Vec<&str> = Vec::new();
        let mut thresholds: Vec<f64> = Vec::new();
        for r in &self.records {
            if !categories.contains(&r.category.as_str()) {
                categories.push(&r.category);
            }
            if !thresholds.contains(&r.threshold) {
                thresholds.push(r.threshold);
            }
        }
        let levels = [
            Some(Difficulty::Easy),
            Some(Difficulty::Moderate),
            Some(Difficulty::Hard),
            None,
        ];
        for cat in categories {
            writeln!(s, "{cat}").unwrap();
            write!(s, "{:>6}", "IoU").unwrap();
            for metric in [IouMetric::ThreeD, IouMetric::Bev] {
                write!(s, " |").unwrap();
                for d in levels {
                    let head = d.map_or("mAP", |d| &d.name()[..4]);
                    write!(s, " {:>8}", format!("{}/{head}", short(metric))).unwrap();
                }
            }
            s.push('\n');
            for &t in &thresholds {
                write!(s, "{t:>6.2}").unwrap();
                for metric in [IouMetric::ThreeD, IouMetric::Bev] {
                    write!(s, " |").unwrap();
                    for d in levels {
                        match self.get(cat, metric, t, d) {
                            Some(v) => write!(s, " {v:>8.2}").unwrap(),
                            None => write!(s, " {:>8}", "-").unwrap(),
                        }
                    }
                }
                s.push('\n');
            }
        }
        s
    }
}

fn short(metric: IouMetric) -> &'static str {
    match metric {
        IouMetric::ThreeD => "3D",
        IouMetric::Bev => "BEV",
    }
}

/// AP for every category, metric, threshold and difficulty, plus the mean
/// over the three difficulty levels.
pub fn eval_suite(frames: &[DetectionFrame], cfg: &EvalConfig) -> EvalReport {
    let mut records = Vec::new();
    for cat in &cfg.categories {
        for metric in [IouMetric::ThreeD, IouMetric::Bev] {
            for &threshold in &cfg.thresholds {
                let mut sum = 0.0;
                let mut any_missing = false;
                for level in Difficulty::LEVELS {
                    let r = ap_11(frames, cat, threshold, level, metric);
                    sum += r.ap;
                    any_missing |= r.no_ground_truth;
                    records.push(ApRecord {
                        category: cat.clone(),
                        metric,
                        threshold,
                        difficulty: Some(level),
                        ap: r.ap,
                        no_ground_truth: r.no_ground_truth,
                    });
                }
                records.push(ApRecord {
                    category: cat.clone(),
                    metric,
                    threshold,
                    difficulty: None,
                    ap: sum / Difficulty::LEVELS.len() as f64,
                    no_ground_truth: any_missing,
                });
            }
        }
    }
    EvalReport { records }
}

/// Produces detections for a (possibly noise-augmented) frame.
pub trait Detector {
    fn detect(&self, frame: &DetectionFrame) -> Result<Vec<DetectionResult>>;
}

/// Returns the detections already stored in the frame.
#[derive(Debug, Clone, Copy, Default)]
pub struct PassThrough;

impl Detector for PassThrough {
    fn detect(&self, frame: &DetectionFrame) -> Result<Vec<DetectionResult>> {
        Ok(frame.dets.clone())
    }
}

impl<F> Detector for F
where
    F: Fn(&DetectionFrame) -> Result<Vec<DetectionResult>>,
{
    fn detect(&self, frame: &DetectionFrame) -> Result<Vec<DetectionResult>> {
        self(frame)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RobustnessConfig {
    pub levels: Vec<usize>,
    pub seed: u64,
    pub margin: f64,
    pub category: String,
    pub threshold: f64,
    pub voxel: VoxelGridSpec,
    pub max_points_per_voxel: usize,
}

impl Default for RobustnessConfig {
    fn default() -> Self {
        Self {
            levels: DEFAULT_NOISE_LEVELS.to_vec(),
            seed: 0,
            margin: DEFAULT_NOISE_MARGIN,
            category: "Car".into(),
            threshold: DEFAULT_IOU_THRESHOLDS[0],
            voxel: VoxelGridSpec::default(),
            max_points_per_voxel: DEFAULT_MAX_POINTS_PER_VOXEL,
        }
    }
}

/// Totals over all frames at one noise level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessRow {
    pub level: usize,
    pub original_points: usize,
    pub added_points: usize,
    /// Points inside the voxel grid after per-voxel capping.
    pub retained_points: usize,
    pub non_empty_voxels: usize,
    /// Easy, Moderate, Hard.
    pub ap_3d: [f64; 3],
    pub ap_bev: [f64; 3],
}

/// Runs `detector` on every frame at every noise level and evaluates it.
pub fn robustness_sweep(
    frames: &[DetectionFrame],
    cfg: &RobustnessConfig,
    detector: &dyn Detector,
) -> Result<Vec<RobustnessRow>> {
    let mut rows = Vec::with_capacity(cfg.levels.len());
    for &level in &cfg.levels {
        let mut evaluated = Vec::with_capacity(frames.len());
        let (mut original, mut added, mut retained, mut voxels) = (0, 0, 0, 0);
        for frame in frames {
            let mut noisy = inject_noise(frame, level, cfg.seed, cfg.margin);
            let vmap = assign_points(&noisy.cloud, &cfg.voxel, cfg.max_points_per_voxel, cfg.seed)?;
            original += frame.cloud.len();
            added += noisy.cloud.len() - frame.cloud.len();
            retained += vmap.retained_points();
            voxels += vmap.non_empty_voxels();
            noisy.dets = detector.detect(&noisy)?;
            evaluated.push(noisy);
        }
        let ap = |metric| Difficulty::LEVELS.map(|d| ap_11(&evaluated, &cfg.category, cfg.threshold, d, metric).ap);
        let row = RobustnessRow {
            level,
            original_points: original,
            added_points: added,
            retained_points: retained,
            non_empty_voxels: voxels,
            ap_3d: ap(IouMetric::ThreeD),
            ap_bev: ap(IouMetric::Bev),
        };
        log::info!("noise level {level}: {row:?}");
        rows.push(row);
    }
    Ok(rows)
}
