//! On-disk JSON artifact schemas shared by the commands.

use serde::{Deserialize, Serialize};

use aegroup::pose_decode::{PoseEstimate, Slot};

/// One pose in the poses JSON: `K` nullable slots, the pose's reference
/// tag vector and its mean member score.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoseJson {
    pub slots: Vec<Option<SlotJson>>,
    pub ref_tag: Vec<f64>,
    pub person_score: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SlotJson {
    pub joint: usize,
    pub x: usize,
    pub y: usize,
    pub score: f64,
}

impl PoseJson {
    pub fn from_estimate(pose: &PoseEstimate) -> Self {
        PoseJson {
            slots: pose
                .slots
                .iter()
                .enumerate()
                .map(|(joint, slot)| {
                    slot.map(|s| SlotJson {
                        joint,
                        x: s.x,
                        y: s.y,
                        score: s.score,
                    })
                })
                .collect(),
            ref_tag: pose.ref_tag.clone(),
            person_score: pose.person_score,
        }
    }

    pub fn into_estimate(self) -> PoseEstimate {
        PoseEstimate {
            slots: self
                .slots
                .into_iter()
                .map(|slot| {
                    slot.map(|s| Slot {
                        x: s.x,
                        y: s.y,
                        score: s.score,
                    })
                })
                .collect(),
            ref_tag: self.ref_tag,
            person_score: self.person_score,
        }
    }
}

/// Sidecar for a decoded label map: identifier tag per instance id plus a
/// ranking score (mean detection value over the instance's pixels).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdentifiersJson {
    pub identifiers: Vec<f64>,
    pub scores: Vec<f64>,
    pub config_hash: String,
}

/// Batch manifest written by `synth`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestJson {
    pub config_hash: String,
    pub mode: String,
    pub n_scenes: usize,
    pub files: Vec<String>,
}

/// Report written by `gradcheck`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GradcheckReport {
    pub pose_max_rel_err: f64,
    pub instance_max_rel_err: f64,
    pub scenes_per_loss: usize,
    pub eps: f64,
    pub threshold: f64,
    pub passed: bool,
    pub config_hash: String,
}
