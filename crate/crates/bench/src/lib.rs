//! Shared fixtures for the grouping benchmarks.

use aegroup::grid::Grid;
use aegroup::loss::{InstanceSamples, PoseGroundTruth};
use aegroup::synth::{
    generate_instance_scene, generate_pose_scene, render_instance_scene, render_pose_scene,
    sample_instance_pixels, SceneConfig,
};

/// A crowded pose scene at decoder-benchmark scale: 17 joints, 30 people,
/// 128x128 grids.
pub fn crowded_pose_fixture() -> (Vec<Grid>, Vec<Grid>, PoseGroundTruth) {
    let cfg = SceneConfig {
        width: 128,
        height: 128,
        count_min: 30,
        count_max: 30,
        k_joints: 17,
        seed: 99,
        ..SceneConfig::default()
    };
    let scene = generate_pose_scene(&cfg).expect("fixture scene generates");
    let (det, tags) = render_pose_scene(&scene, &cfg);
    (det, tags, scene.gt)
}

/// A five-instance scene with sampled pixels for the instance loss.
pub fn instance_fixture() -> (Grid, Grid, InstanceSamples) {
    let cfg = SceneConfig {
        width: 64,
        height: 64,
        count_min: 5,
        count_max: 5,
        tag_gap: 1.25,
        seed: 5,
        ..SceneConfig::default()
    };
    let scene = generate_instance_scene(&cfg).expect("fixture scene generates");
    let samples = sample_instance_pixels(&scene.masks, 10, 17).expect("masks are large enough");
    let (det, tag) = render_instance_scene(&scene, &cfg);
    (det, tag, samples)
}
