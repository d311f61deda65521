//! `synth`: generate a batch of scenes with rendered heatmaps.

use std::path::Path;

use rayon::prelude::*;

use aegroup::grid::io::write_tensor;
use aegroup::synth::{
    generate_instance_scene, generate_pose_scene, render_instance_scene, render_pose_scene,
};

use crate::artifacts::ManifestJson;
use crate::commands::{ensure_out_dir, scene_file_name, scene_seed, write_text};
use crate::config::{ExperimentConfig, Mode};
use crate::CliError;

pub fn run(cfg: &ExperimentConfig, out: &Path, jobs: usize) -> Result<(), CliError> {
    let hash = cfg.config_hash();
    println!("config_hash: {hash}");
    ensure_out_dir(out)?;

    let indices: Vec<usize> = (0..cfg.n_scenes).collect();
    let generate = |&i: &usize| -> Result<Vec<String>, CliError> {
        let scene_cfg = cfg.scene_config(scene_seed(cfg.seed, i));
        let scene_name = scene_file_name("scene", i, "json");
        let det_name = scene_file_name("det", i, "aehm");
        let tag_name = scene_file_name("tag", i, "aehm");
        match cfg.mode {
            Mode::Pose => {
                let scene = generate_pose_scene(&scene_cfg)?;
                let (det, tags) = render_pose_scene(&scene, &scene_cfg);
                write_text(&out.join(&scene_name), &aegroup::json::to_string(&scene)?)?;
                write_tensor(out.join(&det_name), &det)?;
                write_tensor(out.join(&tag_name), &tags)?;
            }
            Mode::Instance => {
                let scene = generate_instance_scene(&scene_cfg)?;
                let (det, tag) = render_instance_scene(&scene, &scene_cfg);
                write_text(&out.join(&scene_name), &aegroup::json::to_string(&scene)?)?;
                write_tensor(out.join(&det_name), &[det])?;
                write_tensor(out.join(&tag_name), &[tag])?;
            }
        }
        Ok(vec![scene_name, det_name, tag_name])
    };

    // Results are collected in index order, so the manifest is identical
    // no matter how many workers ran.
    let per_scene: Vec<Vec<String>> = if jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| CliError::io(format!("cannot start worker pool: {e}")))?;
        pool.install(|| indices.par_iter().map(generate).collect::<Result<_, _>>())?
    } else {
        indices.iter().map(generate).collect::<Result<_, _>>()?
    };

    let manifest = ManifestJson {
        config_hash: hash,
        mode: cfg.mode.as_str().to_string(),
        n_scenes: cfg.n_scenes,
        files: per_scene.into_iter().flatten().collect(),
    };
    write_text(&out.join("manifest.json"), &aegroup::json::to_string(&manifest)?)?;
    println!("wrote {} scenes to {}", cfg.n_scenes, out.display());
    Ok(())
}
