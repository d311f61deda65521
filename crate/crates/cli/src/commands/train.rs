//! `train`: fit a free tag field to a generated scene.

use std::fmt::Write as _;
use std::path::Path;

use aegroup::grid::io::write_tensor;
use aegroup::synth::{generate_instance_scene, generate_pose_scene, sample_instance_pixels};
use aegroup::train::{train_loop, TrainTarget};

use crate::commands::{ensure_out_dir, write_text};
use crate::config::{ExperimentConfig, Mode};
use crate::CliError;

pub fn run(cfg: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    println!("config_hash: {}", cfg.config_hash());
    ensure_out_dir(out)?;

    let scene_cfg = cfg.scene_config(cfg.seed);
    let target = match cfg.mode {
        Mode::Pose => TrainTarget::Pose(generate_pose_scene(&scene_cfg)?.gt),
        Mode::Instance => {
            let scene = generate_instance_scene(&scene_cfg)?;
            let samples =
                sample_instance_pixels(&scene.masks, cfg.loss.sample_count, cfg.seed ^ 0x5A)?;
            TrainTarget::Instance(samples)
        }
    };

    let train_cfg = cfg.train_config(cfg.seed);
    let field = train_loop(scene_cfg.width, scene_cfg.height, &target, &train_cfg)?;

    let mut csv = String::from("step,loss\n");
    for (step, loss) in field.history.iter().enumerate() {
        let _ = writeln!(csv, "{step},{loss:.8e}");
    }
    write_text(&out.join("loss.csv"), &csv)?;
    write_tensor(out.join("field.aehm"), &field.grids)?;

    let first = field.history.first().copied().unwrap_or(0.0);
    let last = field.history.last().copied().unwrap_or(0.0);
    println!(
        "trained {} steps: loss {first:.6e} -> {last:.6e}",
        field.steps()
    );
    Ok(())
}
