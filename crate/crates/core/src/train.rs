//! Gradient descent on a directly parameterized tag field.
//!
//! A free parameter per pixel stands in for a network's tag output: the
//! point under test is that the grouping loss alone shapes an arbitrary
//! field into a valid grouping. Plain descent, no momentum, exact sparse
//! gradients; only ground-truth or sampled locations ever receive updates.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::loss::{
    instance_grouping_grad, instance_grouping_loss, pose_grouping_grad, pose_grouping_loss,
    InstanceSamples, LossParams, PoseGroundTruth, TagGradient,
};

/// Training stops once the loss drops below this.
pub const CONVERGENCE_EPS: f64 = 1e-6;

/// A trainable tag field: `K` grids for pose scenes, one grid for
/// instance scenes, plus the loss history (one entry per evaluated step).
#[derive(Debug, Clone, PartialEq)]
pub struct TagField {
    pub grids: Vec<Grid>,
    pub history: Vec<f64>,
}

impl TagField {
    pub fn steps(&self) -> usize {
        self.history.len()
    }
}

/// Optimization settings.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub steps: usize,
    pub params: LossParams,
    pub seed: u64,
    /// Standard deviation of the Gaussian initialization.
    pub init_std: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.1,
            steps: 500,
            params: LossParams::pose(),
            seed: 0,
            init_std: 2.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        Error::require_positive(self.learning_rate, "learning_rate")?;
        if self.steps == 0 {
            return Err(Error::parameter("steps must be at least 1"));
        }
        if self.init_std < 0.0 {
            return Err(Error::parameter("init_std must be non-negative"));
        }
        self.params.validate()
    }
}

/// What the field is being fitted to.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainTarget {
    Pose(PoseGroundTruth),
    Instance(InstanceSamples),
}

impl TrainTarget {
    /// Channels the tag field needs for this target.
    pub fn channels(&self) -> usize {
        match self {
            TrainTarget::Pose(gt) => gt.num_joints().unwrap_or(1),
            TrainTarget::Instance(_) => 1,
        }
    }

    fn loss(&self, grids: &[Grid], params: &LossParams) -> Result<f64> {
        match self {
            TrainTarget::Pose(gt) => pose_grouping_loss(grids, gt, params),
            TrainTarget::Instance(samples) => instance_grouping_loss(&grids[0], samples, params),
        }
    }

    fn grad(&self, grids: &[Grid], params: &LossParams) -> Result<TagGradient> {
        match self {
            TrainTarget::Pose(gt) => pose_grouping_grad(grids, gt, params),
            TrainTarget::Instance(samples) => instance_grouping_grad(&grids[0], samples, params),
        }
    }
}

/// Fresh tag field with i.i.d. Gaussian(0, `init_std`) parameters, fully
/// determined by the seed. `init_std` of zero gives an all-zero field.
pub fn init_tag_field(
    width: usize,
    height: usize,
    channels: usize,
    cfg: &TrainConfig,
) -> Result<TagField> {
    cfg.validate()?;
    if channels == 0 {
        return Err(Error::parameter("need at least one channel"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut grids = Vec::with_capacity(channels);
    for _ in 0..channels {
        let mut grid = Grid::zeros(width, height)?;
        if cfg.init_std > 0.0 {
            let normal = rand_distr::Normal::new(0.0, cfg.init_std).expect("validated");
            for v in grid.values_mut() {
                *v = rng.sample(normal);
            }
        }
        grids.push(grid);
    }
    Ok(TagField {
        grids,
        history: Vec::new(),
    })
}

/// One descent step: evaluates the grouping loss, records it in the
/// history, applies `params -= learning_rate * grad`, and returns the loss
/// that was evaluated (i.e. before the update). A non-finite loss aborts
/// with a divergence error carrying diagnostics.
pub fn train_step(field: &mut TagField, target: &TrainTarget, cfg: &TrainConfig) -> Result<f64> {
    cfg.validate()?;
    let loss = target.loss(&field.grids, &cfg.params)?;
    if !loss.is_finite() {
        return Err(Error::Divergence(format!(
            "loss {loss} at step {} (learning_rate {}, max |param| {:.3e})",
            field.history.len(),
            cfg.learning_rate,
            field
                .grids
                .iter()
                .flat_map(|g| g.values())
                .fold(0.0f64, |m, &v| m.max(v.abs())),
        )));
    }
    let grad = target.grad(&field.grids, &cfg.params)?;
    grad.apply_step(&mut field.grids, cfg.learning_rate);
    field.history.push(loss);
    Ok(loss)
}

/// Runs up to `cfg.steps` descent steps from a fresh seeded field,
/// stopping early once the loss falls below [`CONVERGENCE_EPS`]. The
/// returned history holds every evaluated loss including the one that
/// triggered the stop.
pub fn train_loop(
    width: usize,
    height: usize,
    target: &TrainTarget,
    cfg: &TrainConfig,
) -> Result<TagField> {
    let mut field = init_tag_field(width, height, target.channels(), cfg)?;
    for _ in 0..cfg.steps {
        let loss = target.loss(&field.grids, &cfg.params)?;
        if !loss.is_finite() {
            return Err(Error::Divergence(format!(
                "loss {loss} at step {}",
                field.history.len()
            )));
        }
        if loss < CONVERGENCE_EPS {
            field.history.push(loss);
            break;
        }
        let grad = target.grad(&field.grids, &cfg.params)?;
        grad.apply_step(&mut field.grids, cfg.learning_rate);
        field.history.push(loss);
    }
    Ok(field)
}
