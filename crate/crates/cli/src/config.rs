//! Experiment configuration: a flat key-value text format with one
//! section per module.
//!
//! The format is line-based and diff-friendly: `[section]` headers,
//! `key = value` entries, `#` comments. Every command canonicalizes the
//! effective configuration (all keys, sections and keys sorted) and hashes
//! it, so identical settings always carry the same `config_hash` no matter
//! how sparse the input file was.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use aegroup::instance_decode::InstanceDecodeConfig;
use aegroup::loss::LossParams;
use aegroup::pose_decode::DecodeConfig;
use aegroup::synth::SceneConfig;
use aegroup::train::TrainConfig;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Pose,
    Instance,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Pose => "pose",
            Mode::Instance => "instance",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub n_scenes: usize,
    pub seed: u64,

    pub scene: SceneSection,
    pub loss: LossSection,
    pub decode: DecodeSection,
    pub instance_decode: InstanceDecodeSection,
    pub train: TrainSection,
    pub eval: EvalSection,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSection {
    pub width: usize,
    pub height: usize,
    pub count_min: usize,
    pub count_max: usize,
    pub k_joints: usize,
    pub keypoint_sigma_px: f64,
    pub tag_gap: f64,
    pub tag_noise_std: f64,
    pub det_noise_std: f64,
    pub visibility_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossSection {
    pub sigma: f64,
    pub grouping_weight: f64,
    pub sample_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeSection {
    pub detection_threshold: f64,
    pub nms_window: usize,
    pub tag_threshold: f64,
    pub score_weight: f64,
    pub max_people: usize,
    /// Comma-separated permutation; empty means identity order.
    pub joint_order: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceDecodeSection {
    pub mask_threshold: f64,
    pub bin_width: f64,
    pub min_separation: f64,
    pub min_mass: usize,
    pub overlap_iou: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSection {
    pub learning_rate: f64,
    pub steps: usize,
    pub init_std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSection {
    pub dist_threshold_px: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            mode: Mode::Pose,
            n_scenes: 1,
            seed: 0,
            scene: SceneSection {
                width: 64,
                height: 64,
                count_min: 1,
                count_max: 4,
                k_joints: 8,
                keypoint_sigma_px: 1.0,
                tag_gap: 1.0,
                tag_noise_std: 0.0,
                det_noise_std: 0.0,
                visibility_rate: 1.0,
            },
            loss: LossSection {
                sigma: 1.0,
                grouping_weight: 1e-3,
                sample_count: 10,
            },
            decode: DecodeSection {
                detection_threshold: 0.3,
                nms_window: 3,
                tag_threshold: 1.0,
                score_weight: 1.0,
                max_people: 30,
                joint_order: Vec::new(),
            },
            instance_decode: InstanceDecodeSection {
                mask_threshold: 0.5,
                bin_width: 0.1,
                min_separation: 1.0,
                min_mass: 10,
                overlap_iou: 0.5,
            },
            train: TrainSection {
                learning_rate: 0.1,
                steps: 500,
                init_std: 2.0,
            },
            eval: EvalSection {
                dist_threshold_px: 3.0,
            },
        }
    }
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::config(msg.into())
}

fn parse<T: std::str::FromStr>(section: &str, key: &str, value: &str) -> Result<T, CliError> {
    value.parse().map_err(|_| {
        config_err(format!(
            "[{section}] {key}: cannot parse {value:?} as {}",
            std::any::type_name::<T>()
        ))
    })
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse_text(&text)
    }

    pub fn parse_text(text: &str) -> Result<Self, CliError> {
        let mut cfg = ExperimentConfig::default();
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| config_err(format!("line {}: malformed section header", lineno + 1)))?;
                section = name.trim().to_string();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| config_err(format!("line {}: expected `key = value`", lineno + 1)))?;
            cfg.set(&section, key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    fn set(&mut self, section: &str, key: &str, value: &str) -> Result<(), CliError> {
        let unknown =
            || config_err(format!("unknown configuration key [{section}] {key}"));
        match section {
            "run" => match key {
                "mode" => {
                    self.mode = match value {
                        "pose" => Mode::Pose,
                        "instance" => Mode::Instance,
                        other => {
                            return Err(config_err(format!(
                                "[run] mode must be `pose` or `instance`, got {other:?}"
                            )))
                        }
                    }
                }
                "n_scenes" => self.n_scenes = parse(section, key, value)?,
                "seed" => self.seed = parse(section, key, value)?,
                _ => return Err(unknown()),
            },
            "scene" => {
                let s = &mut self.scene;
                match key {
                    "width" => s.width = parse(section, key, value)?,
                    "height" => s.height = parse(section, key, value)?,
                    "count_min" => s.count_min = parse(section, key, value)?,
                    "count_max" => s.count_max = parse(section, key, value)?,
                    "k_joints" => s.k_joints = parse(section, key, value)?,
                    "keypoint_sigma_px" => s.keypoint_sigma_px = parse(section, key, value)?,
                    "tag_gap" => s.tag_gap = parse(section, key, value)?,
                    "tag_noise_std" => s.tag_noise_std = parse(section, key, value)?,
                    "det_noise_std" => s.det_noise_std = parse(section, key, value)?,
                    "visibility_rate" => s.visibility_rate = parse(section, key, value)?,
                    _ => return Err(unknown()),
                }
            }
            "loss" => {
                let l = &mut self.loss;
                match key {
                    "sigma" => l.sigma = parse(section, key, value)?,
                    "grouping_weight" => l.grouping_weight = parse(section, key, value)?,
                    "sample_count" => l.sample_count = parse(section, key, value)?,
                    _ => return Err(unknown()),
                }
            }
            "decode" => {
                let d = &mut self.decode;
                match key {
                    "detection_threshold" => d.detection_threshold = parse(section, key, value)?,
                    "nms_window" => d.nms_window = parse(section, key, value)?,
                    "tag_threshold" => d.tag_threshold = parse(section, key, value)?,
                    "score_weight" => d.score_weight = parse(section, key, value)?,
                    "max_people" => d.max_people = parse(section, key, value)?,
                    "joint_order" => {
                        d.joint_order = if value.is_empty() {
                            Vec::new()
                        } else {
                            value
                                .split(',')
                                .map(|v| parse(section, key, v.trim()))
                                .collect::<Result<_, _>>()?
                        }
                    }
                    _ => return Err(unknown()),
                }
            }
            "instance_decode" => {
                let d = &mut self.instance_decode;
                match key {
                    "mask_threshold" => d.mask_threshold = parse(section, key, value)?,
                    "bin_width" => d.bin_width = parse(section, key, value)?,
                    "min_separation" => d.min_separation = parse(section, key, value)?,
                    "min_mass" => d.min_mass = parse(section, key, value)?,
                    "overlap_iou" => d.overlap_iou = parse(section, key, value)?,
                    _ => return Err(unknown()),
                }
            }
            "train" => {
                let t = &mut self.train;
                match key {
                    "learning_rate" => t.learning_rate = parse(section, key, value)?,
                    "steps" => t.steps = parse(section, key, value)?,
                    "init_std" => t.init_std = parse(section, key, value)?,
                    _ => return Err(unknown()),
                }
            }
            "eval" => match key {
                "dist_threshold_px" => self.eval.dist_threshold_px = parse(section, key, value)?,
                _ => return Err(unknown()),
            },
            other => return Err(config_err(format!("unknown configuration section [{other}]"))),
        }
        Ok(())
    }

    /// Canonical text form: every key of every section, sections and keys
    /// in a fixed sorted order. Identical effective settings produce
    /// identical text.
    pub fn canonical_text(&self) -> String {
        let joint_order = self
            .decode
            .joint_order
            .iter()
            .map(|j| j.to_string())
            .collect::<Vec<_>>()
            .join(",");
        let sections: Vec<(&str, Vec<(&str, String)>)> = vec![
            (
                "decode",
                vec![
                    ("detection_threshold", self.decode.detection_threshold.to_string()),
                    ("joint_order", joint_order),
                    ("max_people", self.decode.max_people.to_string()),
                    ("nms_window", self.decode.nms_window.to_string()),
                    ("score_weight", self.decode.score_weight.to_string()),
                    ("tag_threshold", self.decode.tag_threshold.to_string()),
                ],
            ),
            (
                "eval",
                vec![("dist_threshold_px", self.eval.dist_threshold_px.to_string())],
            ),
            (
                "instance_decode",
                vec![
                    ("bin_width", self.instance_decode.bin_width.to_string()),
                    ("mask_threshold", self.instance_decode.mask_threshold.to_string()),
                    ("min_mass", self.instance_decode.min_mass.to_string()),
                    ("min_separation", self.instance_decode.min_separation.to_string()),
                    ("overlap_iou", self.instance_decode.overlap_iou.to_string()),
                ],
            ),
            (
                "loss",
                vec![
                    ("grouping_weight", self.loss.grouping_weight.to_string()),
                    ("sample_count", self.loss.sample_count.to_string()),
                    ("sigma", self.loss.sigma.to_string()),
                ],
            ),
            (
                "run",
                vec![
                    ("mode", self.mode.as_str().to_string()),
                    ("n_scenes", self.n_scenes.to_string()),
                    ("seed", self.seed.to_string()),
                ],
            ),
            (
                "scene",
                vec![
                    ("count_max", self.scene.count_max.to_string()),
                    ("count_min", self.scene.count_min.to_string()),
                    ("det_noise_std", self.scene.det_noise_std.to_string()),
                    ("height", self.scene.height.to_string()),
                    ("k_joints", self.scene.k_joints.to_string()),
                    ("keypoint_sigma_px", self.scene.keypoint_sigma_px.to_string()),
                    ("tag_gap", self.scene.tag_gap.to_string()),
                    ("tag_noise_std", self.scene.tag_noise_std.to_string()),
                    ("visibility_rate", self.scene.visibility_rate.to_string()),
                    ("width", self.scene.width.to_string()),
                ],
            ),
            (
                "train",
                vec![
                    ("init_std", self.train.init_std.to_string()),
                    ("learning_rate", self.train.learning_rate.to_string()),
                    ("steps", self.train.steps.to_string()),
                ],
            ),
        ];
        let mut out = String::new();
        for (name, keys) in sections {
            let _ = writeln!(out, "[{name}]");
            for (key, value) in keys {
                let _ = writeln!(out, "{key} = {value}");
            }
            let _ = writeln!(out);
        }
        out
    }

    /// Stable digest of the canonical configuration: first 16 hex digits
    /// of its SHA-256.
    pub fn config_hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_text().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn scene_config(&self, seed: u64) -> SceneConfig {
        SceneConfig {
            width: self.scene.width,
            height: self.scene.height,
            count_min: self.scene.count_min,
            count_max: self.scene.count_max,
            k_joints: self.scene.k_joints,
            keypoint_sigma_px: self.scene.keypoint_sigma_px,
            tag_gap: self.scene.tag_gap,
            tag_noise_std: self.scene.tag_noise_std,
            det_noise_std: self.scene.det_noise_std,
            visibility_rate: self.scene.visibility_rate,
            seed,
        }
    }

    pub fn decode_config(&self, k_joints: usize) -> DecodeConfig {
        let joint_order = if self.decode.joint_order.is_empty() {
            (0..k_joints).collect()
        } else {
            self.decode.joint_order.clone()
        };
        DecodeConfig {
            detection_threshold: self.decode.detection_threshold,
            nms_window: self.decode.nms_window,
            tag_threshold: self.decode.tag_threshold,
            score_weight: self.decode.score_weight,
            joint_order,
            max_people: self.decode.max_people,
        }
    }

    pub fn loss_params(&self) -> LossParams {
        LossParams {
            sigma: self.loss.sigma,
            grouping_weight: self.loss.grouping_weight,
            sample_count: self.loss.sample_count,
        }
    }

    pub fn instance_decode_config(&self) -> InstanceDecodeConfig {
        InstanceDecodeConfig {
            mask_threshold: self.instance_decode.mask_threshold,
            bin_width: self.instance_decode.bin_width,
            min_separation: self.instance_decode.min_separation,
            min_mass: self.instance_decode.min_mass,
            overlap_iou: self.instance_decode.overlap_iou,
        }
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            learning_rate: self.train.learning_rate,
            steps: self.train.steps,
            params: self.loss_params(),
            seed,
            init_std: self.train.init_std,
        }
    }
}
