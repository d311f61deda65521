//! `decode-instance`: detection + tag tensors in, label map and
//! identifier sidecar out.

use std::path::{Path, PathBuf};

use aegroup::grid::io::write_tensor;
use aegroup::instance_decode::{decode_instances, merge_instance_scales, LabelMap};
use aegroup::grid::Grid;

use crate::artifacts::IdentifiersJson;
use crate::commands::{ensure_out_dir, write_text};
use crate::config::ExperimentConfig;
use crate::CliError;

fn instance_scores(labels: &LabelMap, det: &Grid) -> Vec<f64> {
    (0..labels.num_instances() as u32)
        .map(|id| {
            let mask = labels.mask_of(id);
            let area = mask.area();
            if area == 0 {
                0.0
            } else {
                mask.pixels().iter().map(|&(x, y)| det.get(x, y)).sum::<f64>() / area as f64
            }
        })
        .collect()
}

pub fn run(
    cfg: &ExperimentConfig,
    out: &Path,
    inputs: &[PathBuf],
    scale_flags: &[PathBuf],
) -> Result<(), CliError> {
    let hash = cfg.config_hash();
    println!("config_hash: {hash}");
    ensure_out_dir(out)?;

    let scales = super::decode_pose::load_scales(inputs, scale_flags)?;
    for (det, _) in &scales {
        if det.len() != 1 {
            return Err(CliError::config(format!(
                "instance decoding expects single-channel tensors, got {} channels",
                det.len()
            )));
        }
    }
    let decode_cfg = cfg.instance_decode_config();

    let (labels, identifiers, det0) = if scales.len() == 1 {
        let (mut det, mut tag) = scales.into_iter().next().unwrap();
        let (det, tag) = (det.remove(0), tag.remove(0));
        let (labels, identifiers) = decode_instances(&det, &tag, &decode_cfg)?;
        (labels, identifiers, det)
    } else {
        // Per-scale proposals merged by score-ranked mask NMS. All scales
        // must share one resolution.
        let mut proposals = Vec::with_capacity(scales.len());
        let mut first_det = None;
        for (mut det, mut tag) in scales {
            let (det, tag) = (det.remove(0), tag.remove(0));
            let (labels, _) = decode_instances(&det, &tag, &decode_cfg)?;
            if first_det.is_none() {
                first_det = Some(det.clone());
            }
            proposals.push((labels, det));
        }
        let labels = merge_instance_scales(&proposals, decode_cfg.overlap_iou)?;
        // Identifiers lose meaning after cross-scale merging; keep the
        // merged instance count with the mean detection score per id.
        let det = first_det.expect("at least one scale");
        let ids: Vec<f64> = (0..labels.num_instances()).map(|i| i as f64).collect();
        (labels, ids, det)
    };

    let scores = instance_scores(&labels, &det0);
    write_tensor(out.join("labels.aehm"), &[labels.to_grid()])?;
    let sidecar = IdentifiersJson {
        identifiers,
        scores,
        config_hash: hash,
    };
    write_text(
        &out.join("identifiers.json"),
        &aegroup::json::to_string(&sidecar)?,
    )?;
    println!("decoded {} instances", labels.num_instances());
    Ok(())
}
