//! Pose scene generation and rendering.

use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::{paint_gaussian_max, Grid};
use crate::loss::{JointAnnotation, PersonAnnotation, PoseGroundTruth};
use crate::synth::{add_noise, SceneConfig, MAX_PLACEMENT_RETRIES, MIN_SAME_JOINT_SEPARATION};

/// A generated pose scene: annotation plus the true tag value per person.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseScene {
    pub width: usize,
    pub height: usize,
    pub gt: PoseGroundTruth,
    pub true_tags: Vec<f64>,
}

/// Samples a random pose scene.
///
/// People are placed with limb-length coherence: all joints of a person lie
/// within a bounded radius of its center. Visible joints of the same type
/// keep a minimum separation across people so every rendered peak stays a
/// strict local maximum. Visibility is Bernoulli per joint with at least
/// one visible joint forced per person. True tags are spaced at least
/// `tag_gap` apart. Fully determined by `cfg.seed`.
pub fn generate_pose_scene(cfg: &SceneConfig) -> Result<PoseScene> {
    cfg.validate()?;
    let mut rng = cfg.generator_rng();
    let n = rng.random_range(cfg.count_min..=cfg.count_max);
    let true_tags = crate::synth::spaced_tags(&mut rng, n, cfg.tag_gap);

    let radius = (cfg.width.min(cfg.height) as f64 / 6.0).max(3.0);
    let mut persons: Vec<PersonAnnotation> = Vec::with_capacity(n);

    for person_idx in 0..n {
        let cx = rng.random_range(0.0..cfg.width as f64);
        let cy = rng.random_range(0.0..cfg.height as f64);

        let mut visible: Vec<bool> = (0..cfg.k_joints)
            .map(|_| rng.random::<f64>() < cfg.visibility_rate)
            .collect();
        if !visible.iter().any(|&v| v) {
            let forced = rng.random_range(0..cfg.k_joints);
            visible[forced] = true;
        }

        let mut joints = Vec::with_capacity(cfg.k_joints);
        for (k, &vis) in visible.iter().enumerate() {
            let mut placed = None;
            for _try in 0..MAX_PLACEMENT_RETRIES {
                let jx = (cx + rng.random_range(-radius..radius))
                    .round()
                    .clamp(0.0, (cfg.width - 1) as f64) as usize;
                let jy = (cy + rng.random_range(-radius..radius))
                    .round()
                    .clamp(0.0, (cfg.height - 1) as f64) as usize;
                let ok = !vis
                    || persons.iter().all(|other| {
                        let o = &other.joints[k];
                        !o.visible || chebyshev(o.x, o.y, jx, jy) >= MIN_SAME_JOINT_SEPARATION
                    });
                if ok {
                    placed = Some((jx, jy));
                    break;
                }
            }
            let (x, y) = placed.ok_or_else(|| {
                Error::Generation(format!(
                    "could not place joint {k} of person {person_idx} after \
                     {MAX_PLACEMENT_RETRIES} tries ({n} people on a {}x{} grid)",
                    cfg.width, cfg.height
                ))
            })?;
            joints.push(JointAnnotation { x, y, visible: vis });
        }
        persons.push(PersonAnnotation { joints });
    }

    Ok(PoseScene {
        width: cfg.width,
        height: cfg.height,
        gt: PoseGroundTruth { persons },
        true_tags,
    })
}

fn chebyshev(ax: usize, ay: usize, bx: usize, by: usize) -> i64 {
    let dx = (ax as i64 - bx as i64).abs();
    let dy = (ay as i64 - by as i64).abs();
    dx.max(dy)
}

/// Renders a pose scene into `K` detection grids and `K` tag grids.
///
/// Detection grids are max-composed unit Gaussians at the visible joints.
/// Each tag grid carries, per pixel, the true tag of the nearest visible
/// same-type joint within an influence radius of `3 * keypoint_sigma_px`
/// (ties go to the lower person index); pixels outside any influence
/// radius sit at zero. Gaussian noise of `det_noise_std` / `tag_noise_std`
/// is then added pixelwise from the render stream of `cfg.seed`.
pub fn render_pose_scene(scene: &PoseScene, cfg: &SceneConfig) -> (Vec<Grid>, Vec<Grid>) {
    let k_joints = scene.gt.num_joints().unwrap_or(cfg.k_joints);
    let (w, h) = (scene.width, scene.height);
    let mut rng = cfg.render_rng();

    let mut det: Vec<Grid> = (0..k_joints)
        .map(|_| Grid::zeros(w, h).expect("scene dims validated"))
        .collect();
    for person in &scene.gt.persons {
        for (k, joint) in person.joints.iter().enumerate() {
            if joint.visible {
                paint_gaussian_max(
                    &mut det[k],
                    (joint.x as f64, joint.y as f64),
                    cfg.keypoint_sigma_px,
                );
            }
        }
    }

    let influence = 3.0 * cfg.keypoint_sigma_px;
    let influence_sq = influence * influence;
    let mut tags: Vec<Grid> = Vec::with_capacity(k_joints);
    for k in 0..k_joints {
        let centers: Vec<(f64, f64, f64)> = scene
            .gt
            .persons
            .iter()
            .zip(&scene.true_tags)
            .filter(|(p, _)| p.joints[k].visible)
            .map(|(p, &tag)| (p.joints[k].x as f64, p.joints[k].y as f64, tag))
            .collect();
        let mut grid = Grid::zeros(w, h).expect("scene dims validated");
        if !centers.is_empty() {
            for y in 0..h {
                for x in 0..w {
                    let mut best = f64::INFINITY;
                    let mut value = 0.0;
                    for &(cx, cy, tag) in &centers {
                        let dx = x as f64 - cx;
                        let dy = y as f64 - cy;
                        let d = dx * dx + dy * dy;
                        if d < best {
                            best = d;
                            value = tag;
                        }
                    }
                    if best <= influence_sq {
                        grid.set(x, y, value);
                    }
                }
            }
        }
        tags.push(grid);
    }

    for g in &mut det {
        add_noise(&mut rng, g.values_mut(), cfg.det_noise_std);
    }
    for g in &mut tags {
        add_noise(&mut rng, g.values_mut(), cfg.tag_noise_std);
    }

    (det, tags)
}
