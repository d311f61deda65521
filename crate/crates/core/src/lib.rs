//! Joint detection and grouping on dense 2D fields.
//!
//! A network (or, at desk scale, a synthetic renderer or a free parameter
//! field) produces two aligned per-pixel outputs: a *detection heatmap*
//! whose peaks mark candidate detections, and a *tag map* whose values
//! carry identity. Tags have no absolute meaning; detections whose tags
//! are close belong to the same group. This crate implements the pieces
//! around that idea:
//!
//! - [`grid`]: dense field primitives, Gaussian rendering, peak NMS,
//!   resizing and tensor file I/O;
//! - [`loss`]: the pull/push grouping losses for poses and instances with
//!   hand-derived gradients and a finite-difference checker;
//! - [`pose_decode`]: peaks + tags -> per-person keypoint estimates,
//!   including multi-scale merging;
//! - [`instance_decode`]: foreground mask + tag histogram -> instance
//!   label map;
//! - [`synth`]: seeded synthetic scene generation and rendering, the
//!   ground-truth oracle for every decoder and trainer test;
//! - [`train`]: gradient descent on a directly parameterized tag field;
//! - [`eval`]: average precision, grouping accuracy given ground-truth
//!   detections, and instance mAP.

pub mod error;
pub mod eval;
pub mod grid;
pub mod instance_decode;
pub mod json;
pub mod loss;
pub mod mask;
pub mod matching;
pub mod pose_decode;
pub mod synth;
pub mod train;

pub use error::{Error, Result};
pub use grid::{nms_peaks, render_gaussian, resize_bilinear, Grid, Peak};
pub use loss::{InstanceSamples, JointAnnotation, LossParams, PersonAnnotation, PoseGroundTruth};
pub use mask::Mask;
pub use pose_decode::{decode_pose, DecodeConfig, Detection, PoseEstimate};
pub use synth::SceneConfig;
