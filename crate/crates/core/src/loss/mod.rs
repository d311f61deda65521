//! Grouping and detection losses with hand-derived gradients.
//!
//! Tags are supervised only through differences: a *pull* term draws every
//! member of a group toward the group's reference tag, and a *push* term
//! penalizes pairs of distinct groups with a Gaussian kernel of their
//! reference gap, decaying to zero as groups separate. Absolute tag values
//! are free.
//!
//! Two variants exist: the pose loss reads tags at annotated joint
//! locations and forms per-person reference embeddings; the instance loss
//! compares tags pairwise over a small set of pixels sampled inside each
//! instance. Both come with exact sparse gradients, verified against
//! central finite differences (see [`finite_difference_check`]).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

mod gradcheck;
mod instance;
mod pose;

pub use gradcheck::finite_difference_check;
pub use instance::{instance_grouping_grad, instance_grouping_loss};
pub use pose::{pose_grouping_grad, pose_grouping_loss, reference_embeddings};

/// One annotated joint slot of one person.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct JointAnnotation {
    pub x: usize,
    pub y: usize,
    pub visible: bool,
}

/// One annotated person: exactly one slot per joint type.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersonAnnotation {
    pub joints: Vec<JointAnnotation>,
}

impl PersonAnnotation {
    /// Indices of the visible joints.
    pub fn visible_joints(&self) -> impl Iterator<Item = usize> + '_ {
        self.joints
            .iter()
            .enumerate()
            .filter(|(_, j)| j.visible)
            .map(|(k, _)| k)
    }

    pub fn visible_count(&self) -> usize {
        self.joints.iter().filter(|j| j.visible).count()
    }
}

/// Ground-truth annotation for a pose scene: `N` people with `K` joint
/// slots each.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoseGroundTruth {
    pub persons: Vec<PersonAnnotation>,
}

impl PoseGroundTruth {
    pub fn num_persons(&self) -> usize {
        self.persons.len()
    }

    /// Joint count per person; `None` when the annotation is empty.
    pub fn num_joints(&self) -> Option<usize> {
        self.persons.first().map(|p| p.joints.len())
    }

    pub fn total_visible_joints(&self) -> usize {
        self.persons.iter().map(|p| p.visible_count()).sum()
    }

    /// Checks structural consistency against a `K`-channel tag stack of the
    /// given shape: uniform joint counts, in-bounds visible locations and
    /// at least one visible joint per listed person.
    pub fn validate(&self, k_joints: usize, width: usize, height: usize) -> Result<()> {
        for (n, person) in self.persons.iter().enumerate() {
            if person.joints.len() != k_joints {
                return Err(Error::shape(format!(
                    "person {n} has {} joint slots, expected {k_joints}",
                    person.joints.len()
                )));
            }
            if person.visible_count() == 0 {
                return Err(Error::degenerate(format!(
                    "person {n} has no visible joints"
                )));
            }
            for (k, joint) in person.joints.iter().enumerate() {
                if joint.visible && (joint.x >= width || joint.y >= height) {
                    return Err(Error::parameter(format!(
                        "person {n} joint {k} at ({}, {}) lies outside {width}x{height}",
                        joint.x, joint.y
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Pixel locations sampled inside each instance mask, disjoint across
/// instances.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InstanceSamples {
    pub sets: Vec<Vec<(usize, usize)>>,
}

impl InstanceSamples {
    pub fn num_instances(&self) -> usize {
        self.sets.len()
    }

    /// Checks bounds and cross-instance disjointness.
    pub fn validate(&self, width: usize, height: usize) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for (n, set) in self.sets.iter().enumerate() {
            for &(x, y) in set {
                if x >= width || y >= height {
                    return Err(Error::parameter(format!(
                        "instance {n} sample ({x}, {y}) lies outside {width}x{height}"
                    )));
                }
                if !seen.insert((x, y)) {
                    return Err(Error::parameter(format!(
                        "sample ({x}, {y}) appears in more than one instance"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Loss hyper-parameters.
///
/// `grouping_weight` is the factor applied to the grouping loss when it is
/// combined with the detection loss; it is carried here so configurations
/// round-trip, the grouping losses themselves are unweighted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossParams {
    /// Bandwidth of the push-term Gaussian kernel.
    pub sigma: f64,
    /// Weight of the grouping loss relative to the detection loss.
    pub grouping_weight: f64,
    /// Pixels sampled per instance for the instance loss.
    pub sample_count: usize,
}

impl LossParams {
    /// Defaults for pose training: the grouping term is weighted 1e-3
    /// relative to the detection MSE.
    pub fn pose() -> Self {
        LossParams {
            sigma: 1.0,
            grouping_weight: 1e-3,
            sample_count: 10,
        }
    }

    /// Defaults for instance training, where the grouping weight is
    /// lowered to 1e-4.
    pub fn instances() -> Self {
        LossParams {
            grouping_weight: 1e-4,
            ..Self::pose()
        }
    }

    pub fn validate(&self) -> Result<()> {
        Error::require_positive(self.sigma, "sigma")?;
        if self.sample_count < 2 {
            return Err(Error::parameter(format!(
                "sample_count must be at least 2, got {}",
                self.sample_count
            )));
        }
        Ok(())
    }
}

impl Default for LossParams {
    fn default() -> Self {
        Self::pose()
    }
}

/// One entry of a sparse tag-field gradient: channel (joint index for pose
/// fields, 0 for single-channel instance fields), pixel location, value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradEntry {
    pub channel: usize,
    pub x: usize,
    pub y: usize,
    pub value: f64,
}

/// Sparse gradient of a grouping loss with respect to the tag values read
/// at ground-truth or sampled locations. Every other pixel has zero
/// gradient. Entries are unique per location (contributions through
/// coinciding reads are summed) and sorted by `(channel, y, x)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TagGradient {
    pub entries: Vec<GradEntry>,
}

impl TagGradient {
    pub(crate) fn from_map(map: std::collections::BTreeMap<(usize, usize, usize), f64>) -> Self {
        TagGradient {
            entries: map
                .into_iter()
                .map(|((channel, y, x), value)| GradEntry {
                    channel,
                    x,
                    y,
                    value,
                })
                .collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.value.abs())
            .fold(0.0, f64::max)
    }

    /// Applies this gradient as a descent step on a tag grid stack.
    pub fn apply_step(&self, grids: &mut [Grid], learning_rate: f64) {
        for &GradEntry { channel, x, y, value } in &self.entries {
            let updated = grids[channel].get(x, y) - learning_rate * value;
            grids[channel].set(x, y, updated);
        }
    }
}

/// Sums terms in value order, so the result does not depend on the order
/// persons or instances were listed in.
pub(crate) fn stable_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.into_iter().sum()
}

/// Mean squared error between predicted and ground-truth detection
/// heatmaps, averaged over all `K * W * H` unmasked pixels.
///
/// `mask`, when given, must match the grid shape; pixels where the mask is
/// zero are excluded from both the numerator and the denominator.
pub fn detection_loss(pred: &[Grid], gt: &[Grid], mask: Option<&Grid>) -> Result<f64> {
    if pred.len() != gt.len() {
        return Err(Error::shape(format!(
            "{} predicted heatmaps vs {} ground-truth heatmaps",
            pred.len(),
            gt.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::degenerate("no heatmaps to compare".to_string()));
    }
    let first = &pred[0];
    for g in pred.iter().chain(gt.iter()) {
        if !g.same_shape(first) {
            return Err(Error::shape(
                "all heatmaps must share one shape".to_string(),
            ));
        }
    }
    if let Some(m) = mask {
        if !m.same_shape(first) {
            return Err(Error::shape(format!(
                "mask is {}x{}, heatmaps are {}x{}",
                m.width(),
                m.height(),
                first.width(),
                first.height()
            )));
        }
    }

    let mut sum = 0.0;
    let mut count = 0usize;
    for (p, g) in pred.iter().zip(gt.iter()) {
        for i in 0..p.values().len() {
            if let Some(m) = mask {
                if m.values()[i] == 0.0 {
                    continue;
                }
            }
            let d = p.values()[i] - g.values()[i];
            sum += d * d;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::degenerate("every pixel is masked out".to_string()));
    }
    Ok(sum / count as f64)
}
