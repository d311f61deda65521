//! Instance scene generation, rendering and pixel sampling.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::loss::InstanceSamples;
use crate::mask::Mask;
use crate::synth::{add_noise, SceneConfig, MAX_PLACEMENT_RETRIES, MIN_INSTANCE_AREA};

/// A generated instance scene: disjoint masks plus a true tag per instance.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceScene {
    pub width: usize,
    pub height: usize,
    pub masks: Vec<Mask>,
    pub true_tags: Vec<f64>,
}

impl InstanceScene {
    pub fn num_instances(&self) -> usize {
        self.masks.len()
    }

    /// Union of all instance masks.
    pub fn foreground(&self) -> Mask {
        let mut fg = Mask::empty(self.width, self.height).expect("scene dims validated");
        for m in &self.masks {
            for (x, y) in m.pixels() {
                fg.set(x, y, true);
            }
        }
        fg
    }
}

#[derive(Clone, Copy)]
enum Shape {
    Ellipse { cx: f64, cy: f64, a: f64, b: f64 },
    Rect { x0: usize, y0: usize, x1: usize, y1: usize },
}

impl Shape {
    fn contains(&self, x: usize, y: usize) -> bool {
        match *self {
            Shape::Ellipse { cx, cy, a, b } => {
                let dx = (x as f64 - cx) / a;
                let dy = (y as f64 - cy) / b;
                dx * dx + dy * dy <= 1.0
            }
            Shape::Rect { x0, y0, x1, y1 } => x >= x0 && x <= x1 && y >= y0 && y <= y1,
        }
    }
}

/// Samples a random instance scene.
///
/// Instances are random ellipses and rectangles; later shapes occlude
/// earlier ones, so the final masks are disjoint by construction. Layouts
/// where occlusion shrinks any instance below a minimum area are resampled
/// within a retry budget. True tags are spaced at least `tag_gap` apart.
pub fn generate_instance_scene(cfg: &SceneConfig) -> Result<InstanceScene> {
    cfg.validate()?;
    let mut rng = cfg.generator_rng();
    let n = rng.random_range(cfg.count_min..=cfg.count_max);
    let true_tags = crate::synth::spaced_tags(&mut rng, n, cfg.tag_gap);
    let (w, h) = (cfg.width, cfg.height);

    if n == 0 {
        return Ok(InstanceScene {
            width: w,
            height: h,
            masks: Vec::new(),
            true_tags,
        });
    }

    let max_semi = (w.min(h) as f64 / 5.0).max(4.0);
    for _attempt in 0..MAX_PLACEMENT_RETRIES {
        let shapes: Vec<Shape> = (0..n)
            .map(|_| {
                if rng.random::<f64>() < 0.5 {
                    Shape::Ellipse {
                        cx: rng.random_range(0.0..w as f64),
                        cy: rng.random_range(0.0..h as f64),
                        a: rng.random_range(4.0..=max_semi),
                        b: rng.random_range(4.0..=max_semi),
                    }
                } else {
                    let rw = rng.random_range(7..=(2.0 * max_semi) as usize);
                    let rh = rng.random_range(7..=(2.0 * max_semi) as usize);
                    let x0 = rng.random_range(0..w);
                    let y0 = rng.random_range(0..h);
                    Shape::Rect {
                        x0,
                        y0,
                        x1: (x0 + rw).min(w - 1),
                        y1: (y0 + rh).min(h - 1),
                    }
                }
            })
            .collect();

        // Ownership by the last (topmost) shape covering a pixel.
        let mut owner: Vec<Option<usize>> = vec![None; w * h];
        for (idx, shape) in shapes.iter().enumerate() {
            for y in 0..h {
                for x in 0..w {
                    if shape.contains(x, y) {
                        owner[y * w + x] = Some(idx);
                    }
                }
            }
        }
        let mut masks: Vec<Mask> = (0..n).map(|_| Mask::empty(w, h).unwrap()).collect();
        for y in 0..h {
            for x in 0..w {
                if let Some(idx) = owner[y * w + x] {
                    masks[idx].set(x, y, true);
                }
            }
        }
        if masks.iter().all(|m| m.area() >= MIN_INSTANCE_AREA) {
            return Ok(InstanceScene {
                width: w,
                height: h,
                masks,
                true_tags,
            });
        }
    }
    Err(Error::Generation(format!(
        "could not place {n} instances of at least {MIN_INSTANCE_AREA} px on a {w}x{h} grid \
         within {MAX_PLACEMENT_RETRIES} attempts"
    )))
}

/// Renders an instance scene into a detection grid and a tag grid.
///
/// The detection grid is 1 on any instance and 0 elsewhere; the tag grid
/// carries each instance's true tag on its mask and 0 on background.
/// Pixelwise Gaussian noise is added per `cfg`.
pub fn render_instance_scene(scene: &InstanceScene, cfg: &SceneConfig) -> (Grid, Grid) {
    let (w, h) = (scene.width, scene.height);
    let mut rng = cfg.render_rng();

    let mut det = Grid::zeros(w, h).expect("scene dims validated");
    let mut tag = Grid::zeros(w, h).expect("scene dims validated");
    for (mask, &t) in scene.masks.iter().zip(&scene.true_tags) {
        for (x, y) in mask.pixels() {
            det.set(x, y, 1.0);
            tag.set(x, y, t);
        }
    }
    add_noise(&mut rng, det.values_mut(), cfg.det_noise_std);
    add_noise(&mut rng, tag.values_mut(), cfg.tag_noise_std);
    (det, tag)
}

/// Uniformly samples `sample_count` pixels without replacement from each
/// mask. Deterministic under `seed`; sets are returned sorted. A mask with
/// fewer pixels than `sample_count` is a degenerate input.
pub fn sample_instance_pixels(
    masks: &[Mask],
    sample_count: usize,
    seed: u64,
) -> Result<InstanceSamples> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sets = Vec::with_capacity(masks.len());
    for (idx, mask) in masks.iter().enumerate() {
        let mut pixels = mask.pixels();
        if pixels.len() < sample_count {
            return Err(Error::degenerate(format!(
                "instance {idx} has {} pixels, needs at least {sample_count}",
                pixels.len()
            )));
        }
        pixels.shuffle(&mut rng);
        pixels.truncate(sample_count);
        pixels.sort_unstable();
        sets.push(pixels);
    }
    Ok(InstanceSamples { sets })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(seed: u64) -> SceneConfig {
        SceneConfig {
            count_min: 1,
            count_max: 4,
            seed,
            ..SceneConfig::default()
        }
    }

    #[test]
    fn masks_are_disjoint_and_cover_the_foreground() {
        for seed in 0..50u64 {
            let scene = generate_instance_scene(&cfg(seed)).unwrap();
            let total: usize = scene.masks.iter().map(|m| m.area()).sum();
            assert_eq!(total, scene.foreground().area(), "seed {seed}");
            for m in &scene.masks {
                assert!(m.area() >= MIN_INSTANCE_AREA);
            }
        }
    }

    #[test]
    fn single_instance_mask_equals_rendered_foreground() {
        let scene = generate_instance_scene(&SceneConfig {
            count_min: 1,
            count_max: 1,
            seed: 3,
            ..SceneConfig::default()
        })
        .unwrap();
        let (det, _) = render_instance_scene(&scene, &cfg(3));
        assert_eq!(Mask::from_grid(&det), scene.masks[0]);
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_instance_scene(&cfg(11)).unwrap();
        let b = generate_instance_scene(&cfg(11)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn noiseless_tags_match_true_tags_on_masks() {
        let scene = generate_instance_scene(&cfg(5)).unwrap();
        let (_, tag) = render_instance_scene(&scene, &cfg(5));
        for (mask, &t) in scene.masks.iter().zip(&scene.true_tags) {
            for (x, y) in mask.pixels() {
                assert_eq!(tag.get(x, y), t);
            }
        }
    }

    #[test]
    fn sampling_is_deterministic_and_inside_masks() {
        let scene = generate_instance_scene(&cfg(9)).unwrap();
        let a = sample_instance_pixels(&scene.masks, 10, 77).unwrap();
        let b = sample_instance_pixels(&scene.masks, 10, 77).unwrap();
        assert_eq!(a, b);
        for (mask, set) in scene.masks.iter().zip(&a.sets) {
            assert_eq!(set.len(), 10);
            for &(x, y) in set {
                assert!(mask.get(x, y));
            }
        }
        a.validate(scene.width, scene.height).unwrap();
    }

    #[test]
    fn exact_size_mask_samples_every_pixel() {
        let mut mask = Mask::empty(8, 8).unwrap();
        for i in 0..5 {
            mask.set(i, 2, true);
        }
        let samples = sample_instance_pixels(&[mask.clone()], 5, 0).unwrap();
        assert_eq!(samples.sets[0], mask.pixels());
    }

    #[test]
    fn undersized_mask_is_degenerate() {
        let mut mask = Mask::empty(8, 8).unwrap();
        mask.set(1, 1, true);
        assert!(matches!(
            sample_instance_pixels(&[mask], 5, 0),
            Err(Error::Degenerate(_))
        ));
    }
}
