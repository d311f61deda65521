//! `decode-pose`: AEHM tensors in, poses JSON out.

use std::path::{Path, PathBuf};

use aegroup::grid::io::read_tensor;
use aegroup::grid::Grid;
use aegroup::pose_decode::{decode_pose, merge_scales};

use crate::artifacts::PoseJson;
use crate::commands::{ensure_out_dir, write_text};
use crate::config::ExperimentConfig;
use crate::CliError;

/// Detection grids and tag grids of one scale.
pub type ScaleTensors = (Vec<Grid>, Vec<Grid>);

/// Collects `(det, tag)` tensor pairs from the positional inputs and the
/// repeated `--scale` pairs, validating channel counts against each other.
pub fn load_scales(
    inputs: &[PathBuf],
    scale_flags: &[PathBuf],
) -> Result<Vec<ScaleTensors>, CliError> {
    let mut pairs: Vec<(&PathBuf, &PathBuf)> = Vec::new();
    if !inputs.is_empty() {
        if inputs.len() != 2 {
            return Err(CliError::config(
                "positional inputs must be exactly DET TAG".into(),
            ));
        }
        pairs.push((&inputs[0], &inputs[1]));
    }
    for chunk in scale_flags.chunks(2) {
        if chunk.len() != 2 {
            return Err(CliError::config("--scale needs a DET TAG pair".into()));
        }
        pairs.push((&chunk[0], &chunk[1]));
    }
    if pairs.is_empty() {
        return Err(CliError::config(
            "no input tensors: pass DET TAG or at least one --scale pair".into(),
        ));
    }

    let mut scales = Vec::with_capacity(pairs.len());
    let mut k_joints = None;
    for (det_path, tag_path) in pairs {
        let det = read_tensor(det_path)?;
        let tag = read_tensor(tag_path)?;
        if det.len() != tag.len() {
            return Err(CliError::config(format!(
                "{} carries {} channels but {} carries {}",
                det_path.display(),
                det.len(),
                tag_path.display(),
                tag.len()
            )));
        }
        if *k_joints.get_or_insert(det.len()) != det.len() {
            return Err(CliError::config(format!(
                "{} disagrees with the first scale on the joint count",
                det_path.display()
            )));
        }
        scales.push((det, tag));
    }
    Ok(scales)
}

pub fn run(
    cfg: &ExperimentConfig,
    out: &Path,
    inputs: &[PathBuf],
    scale_flags: &[PathBuf],
    overlay: bool,
) -> Result<(), CliError> {
    println!("config_hash: {}", cfg.config_hash());
    ensure_out_dir(out)?;

    let scales = load_scales(inputs, scale_flags)?;
    let k = scales[0].0.len();
    let (det, tags) = if scales.len() == 1 {
        scales.into_iter().next().unwrap()
    } else {
        let (w, h) = (scales[0].0[0].width(), scales[0].0[0].height());
        merge_scales(&scales, w, h)?
    };

    let decode_cfg = cfg.decode_config(k);
    let poses = decode_pose(&det, &tags, &decode_cfg)?;
    let json_poses: Vec<PoseJson> = poses.iter().map(PoseJson::from_estimate).collect();
    write_text(&out.join("poses.json"), &aegroup::json::to_string(&json_poses)?)?;

    if overlay {
        crate::overlay::write_overlay(&out.join("overlay.ppm"), &det, &poses)
            .map_err(|e| CliError::io(format!("cannot write overlay: {e}")))?;
    }
    println!("decoded {} people", poses.len());
    Ok(())
}
