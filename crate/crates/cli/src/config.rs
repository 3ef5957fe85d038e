//! Run configuration: TOML file, environment variable, then flag overrides.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use detcore::bev_roi::DEFAULT_POOL_SIZE;
use detcore::box_codec::{PointCloudRange, DEFAULT_NUM_PROPOSALS};
use detcore::kitti_eval::{
    EvalConfig, RobustnessConfig, DEFAULT_IOU_THRESHOLDS, DEFAULT_NOISE_LEVELS, DEFAULT_NOISE_MARGIN,
};
use detcore::loss_engine::DEFAULT_NUM_STAGES;
use detcore::set_matcher::{CostConfig, FocalParams, L1Normalization, LossWeights};
use detcore::voxel_grid::{VoxelGridSpec, DEFAULT_MAX_POINTS_PER_VOXEL, DEFAULT_VOXEL_SIZE};
use serde::{Deserialize, Serialize};

pub const CONFIG_ENV: &str = "DETKIT_CONFIG";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum L1Scale {
    /// Divide by the point-cloud extent along the matching axis.
    #[default]
    ExtentSpan,
    Raw,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub labels: Option<PathBuf>,
    pub detections: Option<PathBuf>,
    pub calib: Option<PathBuf>,
    pub velodyne: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub range: PointCloudRange,
    pub voxel_size: [f64; 3],
    /// Points kept per voxel (T).
    pub max_points_per_voxel: usize,
    /// Learnable proposals (N).
    pub num_proposals: usize,
    /// RoI pooling resolution (S x S).
    pub pool_size: usize,
    pub num_stages: usize,
    pub weights: LossWeights,
    pub focal: FocalParams,
    pub l1_scale: L1Scale,
    pub categories: Vec<String>,
    pub iou_thresholds: Vec<f64>,
    pub noise_levels: Vec<usize>,
    pub noise_margin: f64,
    pub seed: u64,
    pub paths: PathsConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            range: PointCloudRange::KITTI,
            voxel_size: DEFAULT_VOXEL_SIZE,
            max_points_per_voxel: DEFAULT_MAX_POINTS_PER_VOXEL,
            num_proposals: DEFAULT_NUM_PROPOSALS,
            pool_size: DEFAULT_POOL_SIZE,
            num_stages: DEFAULT_NUM_STAGES,
            weights: LossWeights::default(),
            focal: FocalParams::default(),
            l1_scale: L1Scale::default(),
            categories: vec!["Car".into()],
            iou_thresholds: DEFAULT_IOU_THRESHOLDS.to_vec(),
            noise_levels: DEFAULT_NOISE_LEVELS.to_vec(),
            noise_margin: DEFAULT_NOISE_MARGIN,
            seed: 0,
            paths: PathsConfig::default(),
        }
    }
}

impl RunConfig {
    /// Reads and validates `path`, or returns the defaults.
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let cfg = match path {
            Some(p) => Self::from_file(p)?,
            None => Self::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.voxel_spec()?;
        if self.max_points_per_voxel == 0 || self.num_proposals == 0 || self.pool_size == 0 || self.num_stages == 0 {
            bail!("max_points_per_voxel, num_proposals, pool_size and num_stages must be positive");
        }
        if self.categories.is_empty() {
            bail!("at least one category is required");
        }
        if let Some(t) = self.iou_thresholds.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
            bail!("IoU threshold {t} outside (0, 1]");
        }
        if self.iou_thresholds.is_empty() {
            bail!("at least one IoU threshold is required");
        }
        if !(self.noise_margin.is_finite() && self.noise_margin >= 0.0) {
            bail!("noise margin must be non-negative, got {}", self.noise_margin);
        }
        Ok(())
    }

    pub fn voxel_spec(&self) -> anyhow::Result<VoxelGridSpec> {
        Ok(VoxelGridSpec::new(self.range, self.voxel_size)?)
    }

    pub fn cost_config(&self) -> CostConfig {
        CostConfig {
            weights: self.weights,
            normalization: match self.l1_scale {
                L1Scale::ExtentSpan => L1Normalization::ExtentSpan { range: self.range },
                L1Scale::Raw => L1Normalization::Raw,
            },
            focal: self.focal,
        }
    }

    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            categories: self.categories.clone(),
            thresholds: self.iou_thresholds.clone(),
        }
    }

    /// The sweep evaluates the first category at the first threshold.
    pub fn robustness_config(&self) -> anyhow::Result<RobustnessConfig> {
        Ok(RobustnessConfig {
            levels: self.noise_levels.clone(),
            seed: self.seed,
            margin: self.noise_margin,
            category: self.categories[0].clone(),
            threshold: self.iou_thresholds[0],
            voxel: self.voxel_spec()?,
            max_points_per_voxel: self.max_points_per_voxel,
        })
    }
}
