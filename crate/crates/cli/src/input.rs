//! Text inputs specific to the command line: prediction lists and labels
//! mapped to category indices.

use std::path::Path;

use anyhow::{bail, Context};
use detcore::kitti_eval::{label_to_box, read_label_file, Calibration};
use detcore::set_matcher::{GroundTruth, Prediction};
use detcore::Box3D;

/// Parses one prediction per line: `cx cy cz w l h yaw p_0 .. p_{C-1}`.
/// Blank lines and lines starting with `#` are skipped.
pub fn parse_predictions(text: &str, num_classes: usize) -> anyhow::Result<Vec<Prediction>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let vals = line
            .split_whitespace()
            .map(str::parse::<f64>)
            .collect::<Result<Vec<_>, _>>()
            .with_context(|| format!("line {}: expected numbers", i + 1))?;
        if vals.len() != 7 + num_classes {
            bail!(
                "line {}: expected {} values (7 box parameters and {num_classes} class probabilities), found {}",
                i + 1,
                7 + num_classes,
                vals.len()
            );
        }
        let bbox = Box3D::from_array(vals[..7].try_into().unwrap());
        if !bbox.is_valid() {
            bail!("line {}: box dimensions must be positive and finite", i + 1);
        }
        let pred = Prediction::new(bbox, vals[7..].to_vec());
        pred.validate().with_context(|| format!("line {}", i + 1))?;
        out.push(pred);
    }
    Ok(out)
}

pub fn read_predictions(path: &Path, num_classes: usize) -> anyhow::Result<Vec<Prediction>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_predictions(&text, num_classes).with_context(|| format!("parsing {}", path.display()))
}

/// Reads a KITTI label file as matching targets. `DontCare` lines and
/// categories outside `categories` are skipped.
pub fn read_ground_truths(
    path: &Path,
    calib: Option<&Calibration>,
    categories: &[String],
) -> anyhow::Result<Vec<GroundTruth>> {
    let labels = read_label_file(path)?;
    let mut out = Vec::new();
    for label in labels {
        if label.is_dont_care() {
            continue;
        }
        let Some(idx) = categories.iter().position(|c| *c == label.category) else {
            log::warn!("{}: skipping unconfigured category {}", path.display(), label.category);
            continue;
        };
        out.push(GroundTruth::new(label_to_box(&label, calib)?, idx));
    }
    Ok(out)
}
