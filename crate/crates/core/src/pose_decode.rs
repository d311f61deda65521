//! Multi-person pose decoding: peaks plus tags in, person estimates out.
//!
//! Per joint, peaks of the detection heatmap become candidate detections
//! carrying the tag vector read at the same pixel. Joints are then visited
//! in a fixed order; each joint's detections are matched against the
//! current pool of people by maximum-weight bipartite matching on
//! `score_weight * score - tag_distance`, gated by a tag-distance
//! threshold. Unmatched detections start new people, so a lone visible
//! hand still yields a (partial) pose. Tag distances are per-dimension RMS
//! so the same thresholds work for scalar tags and for multi-scale tag
//! vectors.

use crate::error::{Error, Result};
use crate::grid::{nms_peaks, resize_bilinear, Grid};
use crate::matching::max_cardinality_max_weight;

/// One keypoint candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub joint: usize,
    pub x: usize,
    pub y: usize,
    pub score: f64,
    /// Tag vector; length 1 for single scale, one entry per scale after
    /// multi-scale merging.
    pub tag: Vec<f64>,
}

/// One filled joint slot of a pose estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slot {
    pub x: usize,
    pub y: usize,
    pub score: f64,
}

/// A decoded person: one optional slot per joint, the running mean tag of
/// its members and the mean member score.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseEstimate {
    pub slots: Vec<Option<Slot>>,
    pub ref_tag: Vec<f64>,
    pub person_score: f64,
}

impl PoseEstimate {
    pub fn filled_slots(&self) -> usize {
        self.slots.iter().filter(|s| s.is_some()).count()
    }
}

/// Decoder configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeConfig {
    /// Minimum heatmap value for a peak to become a detection.
    pub detection_threshold: f64,
    /// NMS neighborhood size, odd and >= 3.
    pub nms_window: usize,
    /// Maximum RMS tag distance for a detection to join an existing person.
    pub tag_threshold: f64,
    /// Weight of the detection score against the tag distance in the
    /// matching objective.
    pub score_weight: f64,
    /// Order in which joints are matched; a permutation of `0..K`. For
    /// 17-keypoint layouts ordered nose, eyes, ears, shoulders, elbows,
    /// wrists, hips, knees, ankles this is the identity: head and torso
    /// first, limbs later.
    pub joint_order: Vec<usize>,
    /// Hard cap on the person pool; surplus unmatched detections are
    /// dropped.
    pub max_people: usize,
}

impl DecodeConfig {
    /// Defaults for a `k`-joint layout with identity joint order.
    pub fn for_joints(k: usize) -> Self {
        DecodeConfig {
            detection_threshold: 0.3,
            nms_window: 3,
            tag_threshold: 1.0,
            score_weight: 1.0,
            joint_order: (0..k).collect(),
            max_people: 30,
        }
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        Error::require_positive(self.tag_threshold, "tag_threshold")?;
        if self.max_people == 0 {
            return Err(Error::parameter("max_people must be at least 1"));
        }
        let mut seen = vec![false; k];
        if self.joint_order.len() != k {
            return Err(Error::parameter(format!(
                "joint_order has {} entries for {k} joints",
                self.joint_order.len()
            )));
        }
        for &j in &self.joint_order {
            if j >= k || seen[j] {
                return Err(Error::parameter(format!(
                    "joint_order is not a permutation of 0..{k}"
                )));
            }
            seen[j] = true;
        }
        Ok(())
    }
}

/// Per-dimension RMS distance between two tag vectors.
///
/// Equals the absolute difference for scalar tags; for a scene duplicated
/// across identical scales it reproduces the scalar distance exactly, so
/// the same gate and weights admit the same matches.
pub fn tag_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let sum: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (sum / a.len() as f64).sqrt()
}

/// Runs peak NMS on every detection grid and reads the tag vector at each
/// peak. `tags` holds `m * K` grids for `m` scales, scale-major: the tag
/// of joint `k` at scale `s` lives at index `s * K + k`.
pub fn extract_detections(
    det: &[Grid],
    tags: &[Grid],
    cfg: &DecodeConfig,
) -> Result<Vec<Vec<Detection>>> {
    let k = det.len();
    if k == 0 {
        return Err(Error::shape("no detection grids"));
    }
    if tags.is_empty() || !tags.len().is_multiple_of(k) {
        return Err(Error::shape(format!(
            "{} tag grids cannot cover {k} joints at a whole number of scales",
            tags.len()
        )));
    }
    let scales = tags.len() / k;
    for g in det.iter().chain(tags.iter()) {
        if !g.same_shape(&det[0]) {
            return Err(Error::shape("detection and tag grids must share one shape"));
        }
    }
    cfg.validate(k)?;

    let mut out = Vec::with_capacity(k);
    for (joint, grid) in det.iter().enumerate() {
        let peaks = nms_peaks(grid, cfg.nms_window, cfg.detection_threshold)?;
        let detections = peaks
            .into_iter()
            .map(|p| Detection {
                joint,
                x: p.x,
                y: p.y,
                score: p.score,
                tag: (0..scales)
                    .map(|s| tags[s * k + joint].get(p.x, p.y))
                    .collect(),
            })
            .collect();
        out.push(detections);
    }
    Ok(out)
}

struct PersonBuilder {
    slots: Vec<Option<Slot>>,
    tag_sum: Vec<f64>,
    score_sum: f64,
    members: usize,
}

impl PersonBuilder {
    fn new(k: usize, d: &Detection) -> Self {
        let mut p = PersonBuilder {
            slots: vec![None; k],
            tag_sum: vec![0.0; d.tag.len()],
            score_sum: 0.0,
            members: 0,
        };
        p.add(d);
        p
    }

    fn add(&mut self, d: &Detection) {
        debug_assert!(self.slots[d.joint].is_none());
        self.slots[d.joint] = Some(Slot {
            x: d.x,
            y: d.y,
            score: d.score,
        });
        for (acc, &t) in self.tag_sum.iter_mut().zip(&d.tag) {
            *acc += t;
        }
        self.score_sum += d.score;
        self.members += 1;
    }

    fn ref_tag(&self) -> Vec<f64> {
        let m = self.members as f64;
        self.tag_sum.iter().map(|&s| s / m).collect()
    }

    fn finish(self) -> PoseEstimate {
        let ref_tag = self.ref_tag();
        PoseEstimate {
            slots: self.slots,
            ref_tag,
            person_score: self.score_sum / self.members as f64,
        }
    }
}

/// Groups per-joint detections into person estimates.
///
/// Joints are visited in `cfg.joint_order`. The first joint with any
/// detections seeds the person pool; for every later joint a bipartite
/// matching assigns detections to people, maximizing first the number of
/// matches and then the total of `score_weight * score - tag_distance`.
/// Pairs with tag distance above `tag_threshold` are forbidden. Every
/// unmatched detection starts a new person while the pool is below
/// `max_people`. Deterministic for identical inputs.
pub fn group_detections(dets: &[Vec<Detection>], cfg: &DecodeConfig) -> Result<Vec<PoseEstimate>> {
    let k = dets.len();
    cfg.validate(k)?;
    if let Some(tag_len) = dets.iter().flatten().map(|d| d.tag.len()).next() {
        if dets.iter().flatten().any(|d| d.tag.len() != tag_len) {
            return Err(Error::shape("tag vectors must share one length"));
        }
    }

    let mut people: Vec<PersonBuilder> = Vec::new();
    for &joint in &cfg.joint_order {
        let detections = &dets[joint];
        if detections.is_empty() {
            continue;
        }
        if people.is_empty() {
            for d in detections {
                if people.len() < cfg.max_people {
                    people.push(PersonBuilder::new(k, d));
                }
            }
            continue;
        }

        let refs: Vec<Vec<f64>> = people.iter().map(|p| p.ref_tag()).collect();
        let weight = |di: usize, pi: usize| {
            let d = &detections[di];
            let dist = tag_distance(&d.tag, &refs[pi]);
            if dist > cfg.tag_threshold {
                None
            } else {
                Some(cfg.score_weight * d.score - dist)
            }
        };
        let assignment = max_cardinality_max_weight(detections.len(), people.len(), weight);
        for (d, assigned) in detections.iter().zip(assignment) {
            match assigned {
                Some(pi) => people[pi].add(d),
                None => {
                    if people.len() < cfg.max_people {
                        people.push(PersonBuilder::new(k, d));
                    }
                }
            }
        }
    }
    Ok(people.into_iter().map(PersonBuilder::finish).collect())
}

/// Full decode: extraction followed by grouping.
pub fn decode_pose(det: &[Grid], tags: &[Grid], cfg: &DecodeConfig) -> Result<Vec<PoseEstimate>> {
    let detections = extract_detections(det, tags, cfg)?;
    group_detections(&detections, cfg)
}

/// Merges per-scale heatmaps to a common resolution.
///
/// Every scale contributes `K` detection grids and `K` tag grids. All
/// grids are bilinearly resized to the target shape; detection grids are
/// averaged pointwise, tag grids are stacked scale-major so each pixel
/// carries an `m`-vector. The output feeds [`extract_detections`]
/// unchanged: the decoder only ever compares tag-vector distances.
pub fn merge_scales(
    per_scale: &[(Vec<Grid>, Vec<Grid>)],
    target_w: usize,
    target_h: usize,
) -> Result<(Vec<Grid>, Vec<Grid>)> {
    if per_scale.is_empty() {
        return Err(Error::parameter("need at least one scale"));
    }
    let k = per_scale[0].0.len();
    if k == 0 {
        return Err(Error::shape("no detection grids"));
    }
    for (det, tags) in per_scale {
        if det.len() != k || tags.len() != k {
            return Err(Error::shape(format!(
                "every scale must carry {k} detection and {k} tag grids"
            )));
        }
    }
    let m = per_scale.len() as f64;

    let mut det_acc: Vec<Grid> = Vec::with_capacity(k);
    for joint in 0..k {
        let mut acc = Grid::zeros(target_w, target_h)?;
        for (det, _) in per_scale {
            let resized = resize_bilinear(&det[joint], target_w, target_h)?;
            for (a, v) in acc.values_mut().iter_mut().zip(resized.values()) {
                *a += v;
            }
        }
        for a in acc.values_mut() {
            *a /= m;
        }
        det_acc.push(acc);
    }

    let mut tag_stack: Vec<Grid> = Vec::with_capacity(per_scale.len() * k);
    for (_, tags) in per_scale {
        for tag in tags {
            tag_stack.push(resize_bilinear(tag, target_w, target_h)?);
        }
    }
    Ok((det_acc, tag_stack))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::render_gaussian;

    fn detection(joint: usize, x: usize, score: f64, tag: f64) -> Detection {
        Detection {
            joint,
            x,
            y: 0,
            score,
            tag: vec![tag],
        }
    }

    #[test]
    fn two_well_separated_people_group_cleanly() {
        // K=3, tags 0 and 5, all scores 1: separation far above the gate.
        let dets: Vec<Vec<Detection>> = (0..3)
            .map(|j| vec![detection(j, 1, 1.0, 0.0), detection(j, 5, 1.0, 5.0)])
            .collect();
        let cfg = DecodeConfig::for_joints(3);
        let poses = group_detections(&dets, &cfg).unwrap();
        assert_eq!(poses.len(), 2);
        for pose in &poses {
            assert_eq!(pose.filled_slots(), 3);
            let x = pose.slots[0].unwrap().x;
            assert!(pose.slots.iter().all(|s| s.unwrap().x == x));
        }
    }

    #[test]
    fn single_detection_spawns_a_single_partial_pose() {
        let mut dets: Vec<Vec<Detection>> = vec![Vec::new(); 4];
        dets[2] = vec![detection(2, 3, 0.8, 1.0)];
        let cfg = DecodeConfig::for_joints(4);
        let poses = group_detections(&dets, &cfg).unwrap();
        assert_eq!(poses.len(), 1);
        assert_eq!(poses[0].filled_slots(), 1);
        assert!(poses[0].slots[2].is_some());
        assert_eq!(poses[0].person_score, 0.8);
    }

    #[test]
    fn empty_input_is_empty_output() {
        let dets: Vec<Vec<Detection>> = vec![Vec::new(); 3];
        let cfg = DecodeConfig::for_joints(3);
        assert!(group_detections(&dets, &cfg).unwrap().is_empty());
    }

    #[test]
    fn gate_blocks_distant_tags_and_spawns_a_new_person() {
        let dets = vec![
            vec![detection(0, 1, 1.0, 0.0)],
            vec![detection(1, 2, 1.0, 3.0)], // 3.0 away, gate is 1.0
        ];
        let cfg = DecodeConfig::for_joints(2);
        let poses = group_detections(&dets, &cfg).unwrap();
        assert_eq!(poses.len(), 2);
        assert_eq!(poses[0].filled_slots(), 1);
        assert_eq!(poses[1].filled_slots(), 1);
    }

    #[test]
    fn max_people_caps_the_pool() {
        let dets = vec![(0..10).map(|i| detection(0, i, 1.0, i as f64 * 10.0)).collect()];
        let mut cfg = DecodeConfig::for_joints(1);
        cfg.max_people = 4;
        let poses = group_detections(&dets, &cfg).unwrap();
        assert_eq!(poses.len(), 4);
    }

    #[test]
    fn ref_tag_is_the_running_mean() {
        let dets = vec![
            vec![detection(0, 1, 1.0, 0.0)],
            vec![detection(1, 2, 0.5, 0.4)],
        ];
        let cfg = DecodeConfig::for_joints(2);
        let poses = group_detections(&dets, &cfg).unwrap();
        assert_eq!(poses.len(), 1);
        assert!((poses[0].ref_tag[0] - 0.2).abs() < 1e-15);
        assert!((poses[0].person_score - 0.75).abs() < 1e-15);
    }

    #[test]
    fn decode_is_deterministic() {
        let grid = Grid::zeros(16, 16).unwrap();
        let det = vec![
            render_gaussian(&grid, (4.0, 4.0), 1.0).unwrap(),
            render_gaussian(&grid, (9.0, 9.0), 1.0).unwrap(),
        ];
        let tags = vec![Grid::filled(16, 16, 0.3).unwrap(); 2];
        let cfg = DecodeConfig::for_joints(2);
        let a = decode_pose(&det, &tags, &cfg).unwrap();
        let b = decode_pose(&det, &tags, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 1);
    }

    #[test]
    fn tag_translation_preserves_the_partition() {
        let mk = |shift: f64| -> Vec<Vec<Detection>> {
            (0..3)
                .map(|j| {
                    vec![
                        detection(j, 1, 0.9, 0.1 + shift),
                        detection(j, 7, 0.8, 1.9 + shift),
                    ]
                })
                .collect()
        };
        let cfg = DecodeConfig::for_joints(3);
        let a = group_detections(&mk(0.0), &cfg).unwrap();
        let b = group_detections(&mk(123.0), &cfg).unwrap();
        let slots = |poses: &[PoseEstimate]| -> Vec<Vec<Option<Slot>>> {
            poses.iter().map(|p| p.slots.clone()).collect()
        };
        assert_eq!(slots(&a), slots(&b));
    }

    #[test]
    fn each_detection_lands_in_exactly_one_pose() {
        let dets: Vec<Vec<Detection>> = (0..4)
            .map(|j| {
                (0..3)
                    .map(|i| detection(j, i * 3 + j, 0.5 + 0.1 * i as f64, i as f64 * 1.7))
                    .collect()
            })
            .collect();
        let cfg = DecodeConfig::for_joints(4);
        let poses = group_detections(&dets, &cfg).unwrap();
        let mut seen = std::collections::HashSet::new();
        let mut total = 0usize;
        for pose in &poses {
            for (j, slot) in pose.slots.iter().enumerate() {
                if let Some(s) = slot {
                    assert!(seen.insert((j, s.x, s.y)), "detection assigned twice");
                    total += 1;
                }
            }
        }
        assert_eq!(total, 12);
    }

    #[test]
    fn noisy_grouping_matches_the_nearest_true_tag_oracle() {
        // Independent oracle: assign every detection to the person whose
        // true tag is nearest to the detection's tag read. At noise well
        // below the tag gap the decoder must produce the same partition.
        use crate::synth::{generate_pose_scene, render_pose_scene, SceneConfig};
        use std::collections::BTreeSet;

        for seed in 0..20u64 {
            let cfg = SceneConfig {
                count_min: 2,
                count_max: 4,
                k_joints: 6,
                tag_gap: 1.0,
                tag_noise_std: 0.05,
                visibility_rate: 0.9,
                seed: 600 + seed,
                ..SceneConfig::default()
            };
            let scene = generate_pose_scene(&cfg).unwrap();
            let (det, tags) = render_pose_scene(&scene, &cfg);
            let mut decode_cfg = DecodeConfig::for_joints(6);
            decode_cfg.detection_threshold = 0.5;
            let detections = extract_detections(&det, &tags, &decode_cfg).unwrap();

            let mut oracle: Vec<BTreeSet<(usize, usize, usize)>> =
                vec![BTreeSet::new(); scene.true_tags.len()];
            for d in detections.iter().flatten() {
                let nearest = scene
                    .true_tags
                    .iter()
                    .enumerate()
                    .min_by(|(_, a), (_, b)| {
                        (d.tag[0] - *a).abs().total_cmp(&(d.tag[0] - *b).abs())
                    })
                    .map(|(n, _)| n)
                    .unwrap();
                oracle[nearest].insert((d.joint, d.x, d.y));
            }
            let mut oracle: Vec<_> = oracle.into_iter().filter(|s| !s.is_empty()).collect();

            let poses = group_detections(&detections, &decode_cfg).unwrap();
            let mut decoded: Vec<BTreeSet<(usize, usize, usize)>> = poses
                .iter()
                .map(|p| {
                    p.slots
                        .iter()
                        .enumerate()
                        .filter_map(|(k, s)| s.map(|s| (k, s.x, s.y)))
                        .collect()
                })
                .collect();
            oracle.sort();
            decoded.sort();
            assert_eq!(decoded, oracle, "seed {seed}");
        }
    }

    #[test]
    fn extract_reads_tags_at_peaks() {
        let zero = Grid::zeros(12, 12).unwrap();
        let det = vec![render_gaussian(&zero, (3.0, 4.0), 1.0).unwrap()];
        let mut tag = Grid::zeros(12, 12).unwrap();
        tag.set(3, 4, 0.77);
        let cfg = DecodeConfig::for_joints(1);
        let dets = extract_detections(&det, &[tag], &cfg).unwrap();
        assert_eq!(dets[0].len(), 1);
        assert_eq!(dets[0][0].tag, vec![0.77]);
        assert_eq!((dets[0][0].x, dets[0][0].y), (3, 4));
    }

    #[test]
    fn extract_on_zero_grids_is_empty_per_joint() {
        let det = vec![Grid::zeros(8, 8).unwrap(); 3];
        let tags = vec![Grid::zeros(8, 8).unwrap(); 3];
        let cfg = DecodeConfig::for_joints(3);
        let dets = extract_detections(&det, &tags, &cfg).unwrap();
        assert_eq!(dets.len(), 3);
        assert!(dets.iter().all(|d| d.is_empty()));
    }

    #[test]
    fn extract_rejects_mismatched_tag_count() {
        let det = vec![Grid::zeros(8, 8).unwrap(); 3];
        let tags = vec![Grid::zeros(8, 8).unwrap(); 4];
        let cfg = DecodeConfig::for_joints(3);
        assert!(matches!(
            extract_detections(&det, &tags, &cfg),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn merge_single_scale_at_same_size_is_identity() {
        let zero = Grid::zeros(10, 10).unwrap();
        let det = vec![render_gaussian(&zero, (5.0, 5.0), 1.0).unwrap()];
        let tags = vec![Grid::filled(10, 10, 0.4).unwrap()];
        let (md, mt) = merge_scales(&[(det.clone(), tags.clone())], 10, 10).unwrap();
        assert_eq!(md, det);
        assert_eq!(mt, tags);
    }

    #[test]
    fn merge_duplicate_scales_reproduces_scalar_distances() {
        let zero = Grid::zeros(10, 10).unwrap();
        let det = vec![render_gaussian(&zero, (5.0, 5.0), 1.0).unwrap()];
        let tags = vec![Grid::filled(10, 10, 0.4).unwrap()];
        let scale = (det.clone(), tags.clone());
        let (md, mt) = merge_scales(&[scale.clone(), scale], 10, 10).unwrap();
        assert_eq!(md, det, "averaging identical grids is the identity");
        assert_eq!(mt.len(), 2);
        // Each pixel now carries the pair (t, t); RMS distance between two
        // duplicated vectors equals the scalar distance exactly.
        let a = vec![0.4, 0.4];
        let b = vec![1.1, 1.1];
        assert_eq!(tag_distance(&a, &b), tag_distance(&[0.4], &[1.1]));
    }

    #[test]
    fn merge_resizes_coarse_scales_to_the_target() {
        // Second scale at half resolution, peak at the same normalized
        // position; merging keeps one detection near the full-resolution
        // peak.
        let fine = render_gaussian(&Grid::zeros(15, 15).unwrap(), (4.0, 4.0), 1.0).unwrap();
        let coarse = render_gaussian(&Grid::zeros(8, 8).unwrap(), (2.0, 2.0), 0.6).unwrap();
        let tags_fine = vec![Grid::filled(15, 15, 0.2).unwrap()];
        let tags_coarse = vec![Grid::filled(8, 8, 0.2).unwrap()];
        let (md, mt) =
            merge_scales(&[(vec![fine], tags_fine), (vec![coarse], tags_coarse)], 15, 15).unwrap();
        assert_eq!(md.len(), 1);
        assert_eq!(mt.len(), 2);
        assert_eq!((md[0].width(), md[0].height()), (15, 15));
        assert_eq!((mt[1].width(), mt[1].height()), (15, 15));
        let peaks = nms_peaks(&md[0], 3, 0.3).unwrap();
        assert!(!peaks.is_empty());
        assert!(peaks[0].x.abs_diff(4) <= 1 && peaks[0].y.abs_diff(4) <= 1);
    }

    #[test]
    fn merge_zero_scales_is_a_parameter_error() {
        assert!(matches!(
            merge_scales(&[], 8, 8),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn joint_order_validation() {
        let mut cfg = DecodeConfig::for_joints(3);
        cfg.joint_order = vec![0, 0, 1];
        assert!(cfg.validate(3).is_err());
        cfg.joint_order = vec![2, 1, 0];
        assert!(cfg.validate(3).is_ok());
    }
}
