//! `gradcheck`: verify the analytic loss gradients against central finite
//! differences on freshly generated random scenes.

use std::path::Path;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use aegroup::grid::Grid;
use aegroup::loss::{
    finite_difference_check, instance_grouping_grad, instance_grouping_loss, pose_grouping_grad,
    pose_grouping_loss, TagGradient,
};
use aegroup::synth::{generate_instance_scene, generate_pose_scene, sample_instance_pixels};

use crate::artifacts::GradcheckReport;
use crate::commands::{ensure_out_dir, write_text};
use crate::config::ExperimentConfig;
use crate::CliError;

const SCENES_PER_LOSS: usize = 100;
const EPS: f64 = 1e-4;
const THRESHOLD: f64 = 1e-4;

fn random_grids(rng: &mut ChaCha8Rng, channels: usize, w: usize, h: usize) -> Vec<Grid> {
    (0..channels)
        .map(|_| {
            let mut g = Grid::zeros(w, h).expect("fixed dims");
            for v in g.values_mut() {
                *v = rng.random_range(-1.0..1.0);
            }
            g
        })
        .collect()
}

fn dense(grad: &TagGradient, coords: &[(usize, usize, usize)]) -> Vec<f64> {
    coords
        .iter()
        .map(|&(c, x, y)| {
            grad.entries
                .iter()
                .find(|e| (e.channel, e.x, e.y) == (c, x, y))
                .map_or(0.0, |e| e.value)
        })
        .collect()
}

fn poke(grids: &[Grid], coords: &[(usize, usize, usize)], values: &[f64]) -> Vec<Grid> {
    let mut out = grids.to_vec();
    for (&(c, x, y), &v) in coords.iter().zip(values) {
        out[c].set(x, y, v);
    }
    out
}

pub fn run(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<(), CliError> {
    let hash = cfg.config_hash();
    println!("config_hash: {hash}");
    let started = Instant::now();
    let params = cfg.loss_params();

    let mut pose_max: f64 = 0.0;
    for i in 0..SCENES_PER_LOSS as u64 {
        let mut scene_cfg = cfg.scene_config(cfg.seed.wrapping_add(1000 + i));
        scene_cfg.width = 40;
        scene_cfg.height = 40;
        scene_cfg.count_min = 1;
        scene_cfg.count_max = 5;
        scene_cfg.k_joints = 3 + (i as usize * 7) % 15;
        scene_cfg.visibility_rate = 0.85;
        let scene = generate_pose_scene(&scene_cfg)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(9000 + i));
        let tags = random_grids(&mut rng, scene_cfg.k_joints, scene_cfg.width, scene_cfg.height);

        let coords: Vec<(usize, usize, usize)> = pose_grouping_grad(&tags, &scene.gt, &params)?
            .entries
            .iter()
            .map(|e| (e.channel, e.x, e.y))
            .collect();
        let point: Vec<f64> = coords.iter().map(|&(c, x, y)| tags[c].get(x, y)).collect();
        let gt = &scene.gt;
        let loss = |vals: &[f64]| pose_grouping_loss(&poke(&tags, &coords, vals), gt, &params).unwrap();
        let grad = |vals: &[f64]| {
            dense(
                &pose_grouping_grad(&poke(&tags, &coords, vals), gt, &params).unwrap(),
                &coords,
            )
        };
        pose_max = pose_max.max(finite_difference_check(loss, grad, &point, EPS));
    }

    let mut instance_max: f64 = 0.0;
    for i in 0..SCENES_PER_LOSS as u64 {
        let mut scene_cfg = cfg.scene_config(cfg.seed.wrapping_add(2000 + i));
        scene_cfg.width = 32;
        scene_cfg.height = 32;
        scene_cfg.count_min = 1;
        scene_cfg.count_max = 5;
        let scene = generate_instance_scene(&scene_cfg)?;
        let samples = sample_instance_pixels(
            &scene.masks,
            params.sample_count,
            cfg.seed.wrapping_add(3000 + i),
        )?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(4000 + i));
        let tag = random_grids(&mut rng, 1, scene_cfg.width, scene_cfg.height);

        let coords: Vec<(usize, usize, usize)> =
            samples.sets.iter().flatten().map(|&(x, y)| (0, x, y)).collect();
        let point: Vec<f64> = coords.iter().map(|&(_, x, y)| tag[0].get(x, y)).collect();
        let loss = |vals: &[f64]| {
            instance_grouping_loss(&poke(&tag, &coords, vals)[0], &samples, &params).unwrap()
        };
        let grad = |vals: &[f64]| {
            dense(
                &instance_grouping_grad(&poke(&tag, &coords, vals)[0], &samples, &params).unwrap(),
                &coords,
            )
        };
        instance_max = instance_max.max(finite_difference_check(loss, grad, &point, EPS));
    }

    let passed = pose_max < THRESHOLD && instance_max < THRESHOLD;
    println!(
        "pose loss: max relative error {pose_max:.3e} over {SCENES_PER_LOSS} scenes (eps {EPS:.0e})"
    );
    println!(
        "instance loss: max relative error {instance_max:.3e} over {SCENES_PER_LOSS} scenes (eps {EPS:.0e})"
    );
    println!(
        "gradcheck {} in {:.2}s (threshold {THRESHOLD:.0e})",
        if passed { "passed" } else { "FAILED" },
        started.elapsed().as_secs_f64()
    );

    if let Some(out) = out {
        ensure_out_dir(out)?;
        let report = GradcheckReport {
            pose_max_rel_err: pose_max,
            instance_max_rel_err: instance_max,
            scenes_per_loss: SCENES_PER_LOSS,
            eps: EPS,
            threshold: THRESHOLD,
            passed,
            config_hash: hash,
        };
        write_text(&out.join("gradcheck.json"), &aegroup::json::to_string(&report)?)?;
    }

    if passed {
        Ok(())
    } else {
        Err(CliError::check_failed(format!(
            "gradient check failed: pose {pose_max:.3e}, instance {instance_max:.3e} \
             (threshold {THRESHOLD:.0e})"
        )))
    }
}
