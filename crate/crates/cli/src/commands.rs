//! Subcommand bodies. Each returns its report as text; `main` decides where
//! it goes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use detcore::geom3d::{bev_iou_rotated, BevBox};
use detcore::kitti_eval::{
    eval_suite, inject_noise, label_to_box, load_dataset, read_label_file, read_pointcloud, robustness_sweep,
    write_pointcloud_bin, Calibration, DatasetPaths, DetectionFrame, GtObject, PassThrough,
};
use detcore::loss_engine::{frame_terms, normalizer, LossBreakdown};
use detcore::set_matcher::pair_match_cost;
use detcore::voxel_grid::{assign_points, grid_dims, mean_encode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;
use crate::input::{read_ground_truths, read_predictions};

fn read_calib(path: Option<&Path>) -> anyhow::Result<Option<Calibration>> {
    path.map(|p| Calibration::read(p).with_context(|| format!("reading calibration {}", p.display())))
        .transpose()
}

fn breakdown_fields(l: &LossBreakdown) -> String {
    format!("cls={} l1={} diou={} total={}", l.cls, l.l1, l.diou, l.total)
}

pub fn voxelize(cfg: &RunConfig, input: &Path, features: Option<&Path>) -> anyhow::Result<String> {
    let points = read_pointcloud(input).with_context(|| format!("reading point cloud {}", input.display()))?;
    let spec = cfg.voxel_spec()?;
    let dims = grid_dims(&spec)?;
    let vmap = assign_points(&points, &spec, cfg.max_points_per_voxel, cfg.seed)?;

    let mut s = String::new();
    writeln!(s, "grid_dims={} {} {}", dims[0], dims[1], dims[2])?;
    writeln!(s, "max_points_per_voxel={}", cfg.max_points_per_voxel)?;
    writeln!(s, "seed={}", cfg.seed)?;
    writeln!(s, "input_points={}", vmap.input_points)?;
    writeln!(s, "out_of_range={}", vmap.out_of_range)?;
    writeln!(s, "capped_points={}", vmap.capped_away)?;
    writeln!(s, "retained_points={}", vmap.retained_points())?;
    writeln!(s, "non_empty_voxels={}", vmap.non_empty_voxels())?;

    if let Some(path) = features {
        let mut f = String::from("# ix iy iz num_points mean_x mean_y mean_z mean_intensity\n");
        for v in mean_encode(&vmap) {
            let [x, y, z, i] = v.mean;
            writeln!(
                f,
                "{} {} {} {} {x} {y} {z} {i}",
                v.index.x, v.index.y, v.index.z, v.num_points
            )?;
        }
        std::fs::write(path, f).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(s)
}

/// Every number is printed in shortest round-trip form. Pair and background
/// totals add up, in printed order, to `raw_total` bit for bit.
pub fn match_frame(
    cfg: &RunConfig,
    predictions: &[PathBuf],
    labels: &Path,
    calib: Option<&Path>,
) -> anyhow::Result<String> {
    if predictions.is_empty() {
        bail!("at least one predictions file is required");
    }
    let calib = read_calib(calib)?;
    let gts = read_ground_truths(labels, calib.as_ref(), &cfg.categories)
        .with_context(|| format!("reading labels {}", labels.display()))?;
    let cost = cfg.cost_config();

    let mut s = String::new();
    writeln!(s, "categories={}", cfg.categories.join(","))?;
    writeln!(s, "num_ground_truths={}", gts.len())?;
    let mut stacked = LossBreakdown::default();
    for (stage, path) in predictions.iter().enumerate() {
        let preds = read_predictions(path, cfg.categories.len())?;
        let terms = frame_terms(&preds, &gts, &cost).with_context(|| format!("matching {}", path.display()))?;
        writeln!(
            s,
            "stage={stage} num_predictions={} assignment_cost={}",
            preds.len(),
            terms.matching.assignment.total_cost
        )?;
        for (&(g, p), loss) in terms.matching.pairs().iter().zip(&terms.pair_losses) {
            let mc = pair_match_cost(&preds[p], &gts[g], &cost);
            writeln!(
                s,
                "pair stage={stage} gt={g} pred={p} match_cost={mc} {}",
                breakdown_fields(loss)
            )?;
        }
        for (p, loss) in &terms.background {
            writeln!(s, "background stage={stage} pred={p} {}", breakdown_fields(loss))?;
        }
        let raw = terms.raw_sum();
        let n = normalizer(terms.num_gts);
        let loss = raw.normalized(n);
        writeln!(
            s,
            "stage_loss stage={stage} raw_total={} normalizer={n} {}",
            raw.total,
            breakdown_fields(&loss)
        )?;
        stacked += loss;
    }
    writeln!(
        s,
        "stacked_loss stages={} {}",
        predictions.len(),
        breakdown_fields(&stacked)
    )?;
    Ok(s)
}

pub struct EvalInputs<'a> {
    pub labels: &'a Path,
    pub detections: &'a Path,
    pub calib: Option<&'a Path>,
    pub velodyne: Option<&'a Path>,
}

pub fn eval(cfg: &RunConfig, inputs: &EvalInputs) -> anyhow::Result<String> {
    let paths = DatasetPaths {
        labels: inputs.labels,
        detections: inputs.detections,
        calib: inputs.calib,
        velodyne: inputs.velodyne,
    };
    let frames = load_dataset(&paths)?;
    let report = eval_suite(&frames, &cfg.eval_config());
    let rcfg = cfg.robustness_config()?;
    let rows = robustness_sweep(&frames, &rcfg, &PassThrough)?;

    let mut s = String::new();
    writeln!(s, "frames={}", frames.len())?;
    s.push_str(&report.to_table());
    s.push_str(&report.to_records());
    for r in rows {
        writeln!(
            s,
            "robustness level={} category={} threshold={:.2} original_points={} added_points={} retained_points={} \
             non_empty_voxels={} ap3d_easy={:.4} ap3d_moderate={:.4} ap3d_hard={:.4} \
             apbev_easy={:.4} apbev_moderate={:.4} apbev_hard={:.4}",
            r.level,
            rcfg.category,
            rcfg.threshold,
            r.original_points,
            r.added_points,
            r.retained_points,
            r.non_empty_voxels,
            r.ap_3d[0],
            r.ap_3d[1],
            r.ap_3d[2],
            r.ap_bev[0],
            r.ap_bev[1],
            r.ap_bev[2],
        )?;
    }
    Ok(s)
}

/// Random car-sized footprint pairs with overlapping centers.
fn bench_pairs(n: usize, seed: u64) -> Vec<(BevBox, BevBox)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let random_box = |rng: &mut ChaCha8Rng| {
        BevBox::new(
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(0.5..3.0),
            rng.gen_range(0.5..5.0),
            rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
        )
    };
    (0..n).map(|_| (random_box(&mut rng), random_box(&mut rng))).collect()
}

pub fn iou_bench(pairs: usize, seed: u64) -> anyhow::Result<String> {
    if pairs == 0 {
        bail!("--pairs must be at least 1");
    }
    let boxes = bench_pairs(pairs, seed);
    let start = Instant::now();
    let mut sum = 0.0;
    for (a, b) in &boxes {
        sum += bev_iou_rotated(std::hint::black_box(a), std::hint::black_box(b));
    }
    let elapsed = start.elapsed().as_secs_f64();
    let mut s = String::new();
    writeln!(s, "pairs={pairs}")?;
    writeln!(s, "seed={seed}")?;
    writeln!(s, "mean_iou={}", sum / pairs as f64)?;
    writeln!(s, "elapsed_seconds={elapsed:.6}")?;
    writeln!(s, "evaluations_per_second={:.0}", pairs as f64 / elapsed.max(1e-12))?;
    Ok(s)
}

pub struct NoiseInputs<'a> {
    pub cloud: &'a Path,
    pub labels: &'a Path,
    pub calib: Option<&'a Path>,
    pub level: usize,
    pub output: &'a Path,
    pub frame_id: Option<&'a str>,
}

pub fn noise(cfg: &RunConfig, inputs: &NoiseInputs) -> anyhow::Result<String> {
    let calib = read_calib(inputs.calib)?;
    let mut gts = Vec::new();
    for label in read_label_file(inputs.labels)? {
        if label.is_dont_care() {
            continue;
        }
        let bbox = label_to_box(&label, calib.as_ref())?;
        gts.push(GtObject { label, bbox });
    }
    let id = match inputs.frame_id {
        Some(id) => id.to_string(),
        None => inputs
            .labels
            .file_stem()
            .and_then(|s| s.to_str())
            .context("cannot derive a frame id from the label path; pass --frame-id")?
            .to_string(),
    };
    let frame = DetectionFrame {
        id,
        gts,
        dets: Vec::new(),
        cloud: read_pointcloud(inputs.cloud)
            .with_context(|| format!("reading point cloud {}", inputs.cloud.display()))?,
    };
    let noisy = inject_noise(&frame, inputs.level, cfg.seed, cfg.noise_margin);
    std::fs::write(inputs.output, write_pointcloud_bin(&noisy.cloud))
        .with_context(|| format!("writing {}", inputs.output.display()))?;

    let mut s = String::new();
    writeln!(s, "frame={}", frame.id)?;
    writeln!(s, "level={}", inputs.level)?;
    writeln!(s, "seed={}", cfg.seed)?;
    writeln!(s, "ground_truths={}", frame.gts.len())?;
    writeln!(s, "original_points={}", frame.cloud.len())?;
    writeln!(s, "added_points={}", noisy.cloud.len() - frame.cloud.len())?;
    writeln!(s, "total_points={}", noisy.cloud.len())?;
    Ok(s)
}
