//! `eval`: score a directory of predictions against ground-truth scenes.
//!
//! Ground truth is a directory written by `synth` (`scene_*.json` plus
//! `tag_*.aehm`). Predictions are either flat files (`poses_*.json`, or
//! `labels_*.aehm` with `identifiers_*.json`) or one subdirectory per
//! scene holding `poses.json` / `labels.aehm` + `identifiers.json` as
//! written by the decode commands. Scenes pair up by sorted order and the
//! counts must match.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use aegroup::eval::{
    average_precision, grouping_accuracy_with_gt_detections, instance_match_records,
    joint_detection_records, match_poses, Metrics,
};
use aegroup::grid::io::read_tensor;
use aegroup::instance_decode::LabelMap;
use aegroup::pose_decode::PoseEstimate;
use aegroup::synth::{InstanceScene, PoseScene};

use crate::artifacts::{IdentifiersJson, PoseJson};
use crate::commands::{ensure_out_dir, sorted_dir_entries, write_text};
use crate::config::{ExperimentConfig, Mode};
use crate::CliError;

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::format(format!("{}: {e}", path.display())))
}

/// Files named `prefix_*.ext` in `dir`, or `name.ext` inside per-scene
/// subdirectories; sorted.
fn collect_predictions(dir: &Path, prefix: &str, name: &str) -> Result<Vec<PathBuf>, CliError> {
    let mut out = Vec::new();
    for entry in sorted_dir_entries(dir)? {
        let file_name = entry
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or_default()
            .to_string();
        if entry.is_dir() {
            let candidate = entry.join(name);
            if candidate.is_file() {
                out.push(candidate);
            }
        } else if file_name.starts_with(prefix) && file_name.ends_with(name.rsplit('.').next().unwrap_or("")) {
            out.push(entry);
        }
    }
    Ok(out)
}

fn collect_gt(dir: &Path, prefix: &str, ext: &str) -> Result<Vec<PathBuf>, CliError> {
    Ok(sorted_dir_entries(dir)?
        .into_iter()
        .filter(|p| {
            p.is_file()
                && p.file_name()
                    .and_then(|n| n.to_str())
                    .map(|n| n.starts_with(prefix) && n.ends_with(ext))
                    .unwrap_or(false)
        })
        .collect())
}

fn run_scenes<S, R>(jobs: usize, scenes: Vec<S>, work: impl Fn(S) -> Result<R, CliError> + Sync) -> Result<Vec<R>, CliError>
where
    S: Send,
    R: Send,
{
    if jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| CliError::io(format!("cannot start worker pool: {e}")))?;
        pool.install(|| scenes.into_par_iter().map(&work).collect())
    } else {
        scenes.into_iter().map(work).collect()
    }
}

pub fn run(
    cfg: &ExperimentConfig,
    out: &Path,
    pred_dir: &Path,
    gt_dir: &Path,
    jobs: usize,
) -> Result<(), CliError> {
    let hash = cfg.config_hash();
    println!("config_hash: {hash}");
    ensure_out_dir(out)?;

    let metrics = match cfg.mode {
        Mode::Pose => eval_pose(cfg, pred_dir, gt_dir, jobs, hash.clone())?,
        Mode::Instance => eval_instance(cfg, pred_dir, gt_dir, jobs, hash.clone())?,
    };
    write_text(&out.join("metrics.json"), &aegroup::json::to_string(&metrics)?)?;
    match cfg.mode {
        Mode::Pose => println!(
            "evaluated {} scenes: ap {:.4}, grouping accuracy {:.4}",
            metrics.n_scenes,
            metrics.ap.unwrap_or(f64::NAN),
            metrics.grouping_accuracy.unwrap_or(f64::NAN),
        ),
        Mode::Instance => println!(
            "evaluated {} scenes: mAP@0.5 {:.4}, mAP@0.7 {:.4}",
            metrics.n_scenes,
            metrics.map_50.unwrap_or(f64::NAN),
            metrics.map_70.unwrap_or(f64::NAN),
        ),
    }
    Ok(())
}

fn eval_pose(
    cfg: &ExperimentConfig,
    pred_dir: &Path,
    gt_dir: &Path,
    jobs: usize,
    hash: String,
) -> Result<Metrics, CliError> {
    let preds = collect_predictions(pred_dir, "poses_", "poses.json")?;
    let scenes = collect_gt(gt_dir, "scene_", ".json")?;
    let tags = collect_gt(gt_dir, "tag_", ".aehm")?;
    if preds.len() != scenes.len() || scenes.len() != tags.len() || scenes.is_empty() {
        return Err(CliError::config(format!(
            "scene counts disagree: {} predictions, {} scenes, {} tag tensors",
            preds.len(),
            scenes.len(),
            tags.len()
        )));
    }

    struct SceneResult {
        records: Vec<(f64, bool)>,
        gt_joints: usize,
        grouping: f64,
    }
    let inputs: Vec<(PathBuf, PathBuf, PathBuf)> = preds
        .into_iter()
        .zip(scenes)
        .zip(tags)
        .map(|((p, s), t)| (p, s, t))
        .collect();
    let dist = cfg.eval.dist_threshold_px;
    let results = run_scenes(jobs, inputs, |(pred_path, scene_path, tag_path)| {
        let poses: Vec<PoseEstimate> = parse_json::<Vec<PoseJson>>(&pred_path)?
            .into_iter()
            .map(PoseJson::into_estimate)
            .collect();
        let scene: PoseScene = parse_json(&scene_path)?;
        let tag_grids = read_tensor(&tag_path)?;
        let matches = match_poses(&poses, &scene.gt, dist);
        let (records, gt_joints) = joint_detection_records(&poses, &matches, &scene.gt);
        let k = scene.gt.num_joints().unwrap_or(tag_grids.len());
        let grouping =
            grouping_accuracy_with_gt_detections(&tag_grids, &scene.gt, &cfg.decode_config(k))?;
        Ok(SceneResult {
            records,
            gt_joints,
            grouping,
        })
    })?;

    let n_scenes = results.len();
    let mut records = Vec::new();
    let mut total_gt = 0usize;
    let mut grouping_sum = 0.0;
    for r in results {
        records.extend(r.records);
        total_gt += r.gt_joints;
        grouping_sum += r.grouping;
    }
    let ap = average_precision(&records, total_gt)?;
    Ok(Metrics {
        ap: Some(ap),
        grouping_accuracy: Some(grouping_sum / n_scenes as f64),
        map_50: None,
        map_70: None,
        n_scenes,
        config_hash: hash,
    })
}

fn eval_instance(
    cfg: &ExperimentConfig,
    pred_dir: &Path,
    gt_dir: &Path,
    jobs: usize,
    hash: String,
) -> Result<Metrics, CliError> {
    let labels = collect_predictions(pred_dir, "labels_", "labels.aehm")?;
    let sidecars = collect_predictions(pred_dir, "identifiers_", "identifiers.json")?;
    let scenes = collect_gt(gt_dir, "scene_", ".json")?;
    if labels.len() != scenes.len() || sidecars.len() != labels.len() || scenes.is_empty() {
        return Err(CliError::config(format!(
            "scene counts disagree: {} label maps, {} sidecars, {} scenes",
            labels.len(),
            sidecars.len(),
            scenes.len()
        )));
    }
    let _ = cfg;

    struct SceneResult {
        records_50: Vec<(f64, bool)>,
        records_70: Vec<(f64, bool)>,
        gt_instances: usize,
    }
    let inputs: Vec<(PathBuf, PathBuf, PathBuf)> = labels
        .into_iter()
        .zip(sidecars)
        .zip(scenes)
        .map(|((l, i), s)| (l, i, s))
        .collect();
    let results = run_scenes(jobs, inputs, |(label_path, sidecar_path, scene_path)| {
        let grids = read_tensor(&label_path)?;
        if grids.len() != 1 {
            return Err(CliError::format(format!(
                "{}: label tensor must hold one grid",
                label_path.display()
            )));
        }
        let label_map = LabelMap::from_grid(&grids[0])?;
        let sidecar: IdentifiersJson = parse_json(&sidecar_path)?;
        let scene: InstanceScene = parse_json(&scene_path)?;
        if sidecar.scores.len() != label_map.num_instances() {
            return Err(CliError::format(format!(
                "{}: {} scores for {} instances",
                sidecar_path.display(),
                sidecar.scores.len(),
                label_map.num_instances()
            )));
        }
        let pred_masks: Vec<_> = (0..label_map.num_instances() as u32)
            .map(|id| label_map.mask_of(id))
            .collect();
        Ok(SceneResult {
            records_50: instance_match_records(&pred_masks, &sidecar.scores, &scene.masks, 0.5),
            records_70: instance_match_records(&pred_masks, &sidecar.scores, &scene.masks, 0.7),
            gt_instances: scene.num_instances(),
        })
    })?;

    let n_scenes = results.len();
    let mut records_50 = Vec::new();
    let mut records_70 = Vec::new();
    let mut total_gt = 0usize;
    for r in results {
        records_50.extend(r.records_50);
        records_70.extend(r.records_70);
        total_gt += r.gt_instances;
    }
    Ok(Metrics {
        ap: None,
        grouping_accuracy: None,
        map_50: Some(average_precision(&records_50, total_gt)?),
        map_70: Some(average_precision(&records_70, total_gt)?),
        n_scenes,
        config_hash: hash,
    })
}
