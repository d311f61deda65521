//! Desk-scale evaluation: keypoint average precision, grouping accuracy
//! given ground-truth detections, and instance mAP at IoU thresholds.
//!
//! Joint correctness uses plain pixel distance against the matched
//! person's annotation; the default threshold is tied to the rendering
//! bandwidth via [`default_distance_threshold`].

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::instance_decode::LabelMap;
use crate::loss::PoseGroundTruth;
use crate::mask::Mask;
use crate::matching::max_cardinality_max_weight;
use crate::pose_decode::{group_detections, DecodeConfig, Detection, PoseEstimate};

/// Result of matching predicted poses against an annotation.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    /// Matched ground-truth person per predicted pose, if any.
    pub pred_to_gt: Vec<Option<usize>>,
    /// Whether each ground-truth person was claimed by some prediction.
    pub gt_covered: Vec<bool>,
    /// Per predicted pose, per joint: correct under the distance threshold.
    /// Joints of unmatched poses are all incorrect.
    pub joint_correct: Vec<Vec<bool>>,
}

/// Pixel-distance threshold tied to the rendering bandwidth:
/// `0.5 * sigma * 6`, i.e. three sigma.
pub fn default_distance_threshold(keypoint_sigma_px: f64) -> f64 {
    0.5 * keypoint_sigma_px * 6.0
}

fn correct_joints(
    pred: &PoseEstimate,
    gt: &crate::loss::PersonAnnotation,
    dist_threshold_px: f64,
) -> Vec<bool> {
    pred.slots
        .iter()
        .enumerate()
        .map(|(k, slot)| match (slot, gt.joints.get(k)) {
            (Some(s), Some(j)) if j.visible => {
                let dx = s.x as f64 - j.x as f64;
                let dy = s.y as f64 - j.y as f64;
                (dx * dx + dy * dy).sqrt() <= dist_threshold_px
            }
            _ => false,
        })
        .collect()
}

/// Greedy matching of predicted poses to ground-truth people.
///
/// Predictions are visited by descending `person_score` (ties: input
/// order). Each claims the still-uncovered person with the most correct
/// joints (ties: lower person index); predictions with zero correct joints
/// against every uncovered person stay unmatched. The matching is
/// injective in both directions.
pub fn match_poses(
    preds: &[PoseEstimate],
    gt: &PoseGroundTruth,
    dist_threshold_px: f64,
) -> MatchResult {
    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| preds[b].person_score.total_cmp(&preds[a].person_score).then(a.cmp(&b)));

    let mut pred_to_gt = vec![None; preds.len()];
    let mut gt_covered = vec![false; gt.persons.len()];
    let mut joint_correct: Vec<Vec<bool>> = preds
        .iter()
        .map(|p| vec![false; p.slots.len()])
        .collect();

    for &pi in &order {
        let mut best: Option<(usize, usize, Vec<bool>)> = None; // (count, gt index, flags)
        for (gi, person) in gt.persons.iter().enumerate() {
            if gt_covered[gi] {
                continue;
            }
            let flags = correct_joints(&preds[pi], person, dist_threshold_px);
            let count = flags.iter().filter(|&&f| f).count();
            if count == 0 {
                continue;
            }
            let better = match &best {
                None => true,
                Some((bc, bg, _)) => count > *bc || (count == *bc && gi < *bg),
            };
            if better {
                best = Some((count, gi, flags));
            }
        }
        if let Some((_, gi, flags)) = best {
            pred_to_gt[pi] = Some(gi);
            gt_covered[gi] = true;
            joint_correct[pi] = flags;
        }
    }
    MatchResult {
        pred_to_gt,
        gt_covered,
        joint_correct,
    }
}

/// Flattens matched poses into scored joint detections for AP pooling:
/// one `(score, correct)` record per filled slot, plus the scene's visible
/// joint count.
pub fn joint_detection_records(
    preds: &[PoseEstimate],
    matches: &MatchResult,
    gt: &PoseGroundTruth,
) -> (Vec<(f64, bool)>, usize) {
    let mut records = Vec::new();
    for (pi, pose) in preds.iter().enumerate() {
        for (k, slot) in pose.slots.iter().enumerate() {
            if let Some(s) = slot {
                records.push((s.score, matches.joint_correct[pi][k]));
            }
        }
    }
    (records, gt.total_visible_joints())
}

/// Average precision over scored detections with known correctness.
///
/// Detections are ranked by descending score (ties: input order) and the
/// area under the precision-recall curve is taken with all-point
/// interpolation: precision at recall `r` is the maximum precision at any
/// recall `>= r`.
pub fn average_precision(records: &[(f64, bool)], total_gt: usize) -> Result<f64> {
    if total_gt == 0 {
        return Err(Error::degenerate(
            "average precision needs at least one ground-truth item",
        ));
    }
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by(|&a, &b| records[b].0.total_cmp(&records[a].0).then(a.cmp(&b)));

    // Precision/recall after each detection.
    let mut tp = 0usize;
    let mut precisions = Vec::with_capacity(records.len());
    let mut recalls = Vec::with_capacity(records.len());
    for (rank, &i) in order.iter().enumerate() {
        if records[i].1 {
            tp += 1;
        }
        precisions.push(tp as f64 / (rank + 1) as f64);
        recalls.push(tp as f64 / total_gt as f64);
    }
    // Interpolate: running maximum of precision from the right.
    let mut interp = precisions.clone();
    for i in (0..interp.len().saturating_sub(1)).rev() {
        interp[i] = interp[i].max(interp[i + 1]);
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (p, r) in interp.iter().zip(&recalls) {
        ap += (r - prev_recall) * p;
        prev_recall = *r;
    }
    Ok(ap)
}

/// Grouping quality in isolation from detection quality: detections are
/// placed at the exact ground-truth joint locations (score 1) with tags
/// read from the tag grids, grouped by the regular decoder, and scored as
/// the fraction of joints assigned to the right person under the best
/// bijection between predicted poses and ground-truth people (maximum
/// total agreement, solved exactly).
///
/// `tags` holds `m * K` grids scale-major, as in
/// [`crate::pose_decode::extract_detections`]. An empty annotation scores
/// 1.0 vacuously.
pub fn grouping_accuracy_with_gt_detections(
    tags: &[Grid],
    gt: &PoseGroundTruth,
    cfg: &DecodeConfig,
) -> Result<f64> {
    let Some(k) = gt.num_joints() else {
        return Ok(1.0);
    };
    if tags.is_empty() || !tags.len().is_multiple_of(k) {
        return Err(Error::shape(format!(
            "{} tag grids cannot cover {k} joints at a whole number of scales",
            tags.len()
        )));
    }
    let scales = tags.len() / k;
    gt.validate(k, tags[0].width(), tags[0].height())?;

    let mut dets: Vec<Vec<Detection>> = vec![Vec::new(); k];
    for person in &gt.persons {
        for (joint, j) in person.joints.iter().enumerate() {
            if j.visible {
                dets[joint].push(Detection {
                    joint,
                    x: j.x,
                    y: j.y,
                    score: 1.0,
                    tag: (0..scales).map(|s| tags[s * k + joint].get(j.x, j.y)).collect(),
                });
            }
        }
    }
    let poses = group_detections(&dets, cfg)?;
    let total = gt.total_visible_joints();
    if total == 0 {
        return Ok(1.0);
    }

    // Agreement counts between each predicted pose and each person:
    // joints whose slot sits exactly at that person's annotated location.
    let agreement = |pi: usize, gi: usize| -> usize {
        let person = &gt.persons[gi];
        poses[pi]
            .slots
            .iter()
            .enumerate()
            .filter(|(kk, slot)| {
                if let Some(s) = slot {
                    let j = &person.joints[*kk];
                    j.visible && j.x == s.x && j.y == s.y
                } else {
                    false
                }
            })
            .count()
    };
    let assignment = max_cardinality_max_weight(poses.len(), gt.persons.len(), |pi, gi| {
        Some(agreement(pi, gi) as f64)
    });
    let agreed: usize = assignment
        .iter()
        .enumerate()
        .filter_map(|(pi, gi)| gi.map(|gi| agreement(pi, gi)))
        .sum();
    Ok(agreed as f64 / total as f64)
}

/// Average precision of predicted instances at each IoU threshold.
///
/// `scores` ranks the predicted instances (one per label id). A prediction
/// matches the unmatched ground-truth mask of largest IoU when that IoU
/// reaches the threshold (comparison is `>=`).
pub fn instance_map(
    pred: &LabelMap,
    scores: &[f64],
    gt_masks: &[Mask],
    iou_thresholds: &[f64],
) -> Result<Vec<f64>> {
    if gt_masks.is_empty() {
        return Err(Error::degenerate(
            "instance mAP needs at least one ground-truth mask",
        ));
    }
    if scores.len() != pred.num_instances() {
        return Err(Error::shape(format!(
            "{} scores for {} predicted instances",
            scores.len(),
            pred.num_instances()
        )));
    }
    let pred_masks: Vec<Mask> = (0..pred.num_instances() as u32)
        .map(|id| pred.mask_of(id))
        .collect();

    let mut out = Vec::with_capacity(iou_thresholds.len());
    for &threshold in iou_thresholds {
        let records = instance_match_records(&pred_masks, scores, gt_masks, threshold);
        out.push(average_precision(&records, gt_masks.len())?);
    }
    Ok(out)
}

/// Greedy score-ranked matching of predicted masks to ground-truth masks
/// at one IoU threshold; returns `(score, matched)` per prediction in
/// ranked order, ready for [`average_precision`].
pub fn instance_match_records(
    pred_masks: &[Mask],
    scores: &[f64],
    gt_masks: &[Mask],
    iou_threshold: f64,
) -> Vec<(f64, bool)> {
    let mut order: Vec<usize> = (0..pred_masks.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));

    let mut gt_used = vec![false; gt_masks.len()];
    let mut records = Vec::with_capacity(pred_masks.len());
    for &pi in &order {
        let mut best: Option<(f64, usize)> = None;
        for (gi, gm) in gt_masks.iter().enumerate() {
            if gt_used[gi] {
                continue;
            }
            let iou = pred_masks[pi].iou(gm);
            if iou >= iou_threshold {
                let better = match best {
                    None => true,
                    Some((bi, _)) => iou > bi,
                };
                if better {
                    best = Some((iou, gi));
                }
            }
        }
        if let Some((_, gi)) = best {
            gt_used[gi] = true;
            records.push((scores[pi], true));
        } else {
            records.push((scores[pi], false));
        }
    }
    records
}

/// Aggregated metrics, serialized as the metrics JSON artifact.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Metrics {
    pub ap: Option<f64>,
    pub grouping_accuracy: Option<f64>,
    pub map_50: Option<f64>,
    pub map_70: Option<f64>,
    pub n_scenes: usize,
    pub config_hash: String,
}

/// The grouping structure of decoded poses: per pose, the set of
/// `(joint, x, y)` detections it owns. Order-independent comparison via
/// [`partitions_match`].
pub fn pose_partition(poses: &[PoseEstimate]) -> Vec<BTreeSet<(usize, usize, usize)>> {
    poses
        .iter()
        .map(|p| {
            p.slots
                .iter()
                .enumerate()
                .filter_map(|(k, s)| s.map(|s| (k, s.x, s.y)))
                .collect()
        })
        .collect()
}

/// Ground-truth partition: per person, the set of visible
/// `(joint, x, y)` locations.
pub fn gt_partition(gt: &PoseGroundTruth) -> Vec<BTreeSet<(usize, usize, usize)>> {
    gt.persons
        .iter()
        .map(|p| {
            p.joints
                .iter()
                .enumerate()
                .filter(|(_, j)| j.visible)
                .map(|(k, j)| (k, j.x, j.y))
                .collect()
        })
        .collect()
}

/// Whether two partitions contain the same groups, ignoring order.
pub fn partitions_match(
    a: &[BTreeSet<(usize, usize, usize)>],
    b: &[BTreeSet<(usize, usize, usize)>],
) -> bool {
    let mut a: Vec<_> = a.to_vec();
    let mut b: Vec<_> = b.to_vec();
    a.sort();
    b.sort();
    a == b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::{JointAnnotation, PersonAnnotation};
    use crate::pose_decode::Slot;

    fn gt_two_people() -> PoseGroundTruth {
        PoseGroundTruth {
            persons: vec![
                PersonAnnotation {
                    joints: vec![
                        JointAnnotation { x: 2, y: 2, visible: true },
                        JointAnnotation { x: 4, y: 3, visible: true },
                    ],
                },
                PersonAnnotation {
                    joints: vec![
                        JointAnnotation { x: 10, y: 10, visible: true },
                        JointAnnotation { x: 12, y: 11, visible: true },
                    ],
                },
            ],
        }
    }

    fn pose(slots: &[Option<(usize, usize, f64)>], score: f64) -> PoseEstimate {
        PoseEstimate {
            slots: slots
                .iter()
                .map(|s| s.map(|(x, y, sc)| Slot { x, y, score: sc }))
                .collect(),
            ref_tag: vec![0.0],
            person_score: score,
        }
    }

    #[test]
    fn exact_predictions_match_everything() {
        let gt = gt_two_people();
        let preds = vec![
            pose(&[Some((2, 2, 1.0)), Some((4, 3, 1.0))], 1.0),
            pose(&[Some((10, 10, 1.0)), Some((12, 11, 1.0))], 0.9),
        ];
        let m = match_poses(&preds, &gt, 2.0);
        assert_eq!(m.pred_to_gt, vec![Some(0), Some(1)]);
        assert!(m.gt_covered.iter().all(|&c| c));
        assert!(m.joint_correct.iter().flatten().all(|&c| c));
    }

    #[test]
    fn no_predictions_no_matches() {
        let gt = gt_two_people();
        let m = match_poses(&[], &gt, 2.0);
        assert!(m.pred_to_gt.is_empty());
        assert!(m.gt_covered.iter().all(|&c| !c));
    }

    #[test]
    fn one_pixel_jitter_within_threshold_counts() {
        let gt = gt_two_people();
        let preds = vec![
            pose(&[Some((3, 2, 1.0)), Some((4, 4, 1.0))], 1.0),
            pose(&[Some((10, 11, 1.0)), Some((11, 11, 1.0))], 0.9),
        ];
        let m = match_poses(&preds, &gt, 2.0);
        assert!(m.joint_correct.iter().flatten().all(|&c| c));
    }

    #[test]
    fn matching_is_injective() {
        let gt = gt_two_people();
        // Both predictions sit on person 0; only one may claim it.
        let preds = vec![
            pose(&[Some((2, 2, 1.0)), Some((4, 3, 1.0))], 1.0),
            pose(&[Some((2, 2, 1.0)), Some((4, 3, 1.0))], 0.5),
        ];
        let m = match_poses(&preds, &gt, 2.0);
        assert_eq!(m.pred_to_gt[0], Some(0));
        assert_eq!(m.pred_to_gt[1], None);
    }

    #[test]
    fn ap_all_correct_is_one() {
        let records = vec![(0.9, true), (0.8, true), (0.7, true)];
        assert_eq!(average_precision(&records, 3).unwrap(), 1.0);
    }

    #[test]
    fn ap_all_incorrect_is_zero() {
        let records = vec![(0.9, false), (0.8, false)];
        assert_eq!(average_precision(&records, 2).unwrap(), 0.0);
    }

    #[test]
    fn ap_interpolated_half() {
        // Correct at rank 1, incorrect at rank 2, two ground-truth joints:
        // PR points (0.5, 1.0) and (0.5, 0.5); area = 0.5.
        let records = vec![(0.8, false), (0.9, true)];
        assert_eq!(average_precision(&records, 2).unwrap(), 0.5);
    }

    #[test]
    fn ap_is_scale_invariant_in_scores() {
        let records = vec![(0.9, true), (0.8, false), (0.7, true), (0.1, false)];
        let scaled: Vec<(f64, bool)> = records.iter().map(|&(s, c)| (s * 7.5, c)).collect();
        assert_eq!(
            average_precision(&records, 3).unwrap(),
            average_precision(&scaled, 3).unwrap()
        );
    }

    #[test]
    fn ap_zero_ground_truth_is_degenerate() {
        assert!(matches!(
            average_precision(&[], 0),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn grouping_accuracy_single_person_is_perfect_with_open_gate() {
        // Wild tag values split nothing when the gate is disabled; any
        // grouping of a single person's joints maps onto that person.
        let gt = PoseGroundTruth {
            persons: vec![PersonAnnotation {
                joints: vec![
                    JointAnnotation { x: 1, y: 1, visible: true },
                    JointAnnotation { x: 3, y: 3, visible: true },
                    JointAnnotation { x: 5, y: 5, visible: true },
                ],
            }],
        };
        let mut tags = vec![Grid::zeros(8, 8).unwrap(); 3];
        tags[0].set(1, 1, -40.0);
        tags[1].set(3, 3, 17.0);
        tags[2].set(5, 5, 3.0);
        let mut cfg = DecodeConfig::for_joints(3);
        cfg.tag_threshold = f64::INFINITY;
        let acc = grouping_accuracy_with_gt_detections(&tags, &gt, &cfg).unwrap();
        assert_eq!(acc, 1.0);
    }

    #[test]
    fn grouping_accuracy_perfect_for_separated_tags() {
        let gt = gt_two_people();
        let mut tags = vec![Grid::zeros(16, 16).unwrap(); 2];
        for (k, t) in [(0usize, 0.0f64), (1, 0.0)] {
            let j = &gt.persons[0].joints[k];
            tags[k].set(j.x, j.y, t);
        }
        for (k, t) in [(0usize, 5.0f64), (1, 5.0)] {
            let j = &gt.persons[1].joints[k];
            tags[k].set(j.x, j.y, t);
        }
        let cfg = DecodeConfig::for_joints(2);
        let acc = grouping_accuracy_with_gt_detections(&tags, &gt, &cfg).unwrap();
        assert_eq!(acc, 1.0);
    }

    #[test]
    fn grouping_accuracy_detects_a_swap() {
        // Tags of joint 1 are crossed between the two people, so the
        // decoder reliably attaches each joint-1 detection to the wrong
        // pool entry: every pose agrees with its person on one joint of
        // two.
        let gt = gt_two_people();
        let mut tags = vec![Grid::zeros(16, 16).unwrap(); 2];
        tags[0].set(2, 2, 0.0); // person 0 joint 0
        tags[0].set(10, 10, 5.0); // person 1 joint 0
        tags[1].set(4, 3, 5.0); // person 0 joint 1 carries person 1's tag
        tags[1].set(12, 11, 0.0); // and vice versa
        let mut cfg = DecodeConfig::for_joints(2);
        cfg.tag_threshold = 10.0;
        let acc = grouping_accuracy_with_gt_detections(&tags, &gt, &cfg).unwrap();
        assert_eq!(acc, 0.5);
    }

    #[test]
    fn grouping_accuracy_is_translation_and_relabel_invariant() {
        let gt = gt_two_people();
        let mut tags = vec![Grid::zeros(16, 16).unwrap(); 2];
        for (k, j) in gt.persons[0].joints.iter().enumerate() {
            tags[k].set(j.x, j.y, 0.3);
        }
        for (k, j) in gt.persons[1].joints.iter().enumerate() {
            tags[k].set(j.x, j.y, 2.7);
        }
        let cfg = DecodeConfig::for_joints(2);
        let base = grouping_accuracy_with_gt_detections(&tags, &gt, &cfg).unwrap();

        let shifted: Vec<Grid> = tags
            .iter()
            .map(|g| {
                let mut out = g.clone();
                for v in out.values_mut() {
                    *v += 41.5;
                }
                out
            })
            .collect();
        assert_eq!(
            grouping_accuracy_with_gt_detections(&shifted, &gt, &cfg).unwrap(),
            base
        );

        let relabeled = PoseGroundTruth {
            persons: vec![gt.persons[1].clone(), gt.persons[0].clone()],
        };
        assert_eq!(
            grouping_accuracy_with_gt_detections(&tags, &relabeled, &cfg).unwrap(),
            base
        );
    }

    #[test]
    fn match_poses_is_injective_on_random_inputs() {
        // Dense random predictions against few people: no person may be
        // claimed twice, no prediction matched twice.
        let gt = gt_two_people();
        let mut state = 0x1234_5678_9ABC_DEF0u64;
        let mut rnd = move |m: usize| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 17) as usize % m
        };
        for _ in 0..200 {
            let preds: Vec<PoseEstimate> = (0..4)
                .map(|i| {
                    pose(
                        &[
                            Some((rnd(16), rnd(16), 1.0)),
                            Some((rnd(16), rnd(16), 1.0)),
                        ],
                        1.0 - 0.1 * i as f64,
                    )
                })
                .collect();
            let m = match_poses(&preds, &gt, 3.0);
            let mut used = std::collections::HashSet::new();
            for gi in m.pred_to_gt.iter().flatten() {
                assert!(used.insert(*gi), "person {gi} matched twice");
            }
            for (pi, gi) in m.pred_to_gt.iter().enumerate() {
                if gi.is_some() {
                    assert!(
                        m.joint_correct[pi].iter().any(|&c| c),
                        "matched pose without any correct joint"
                    );
                }
            }
        }
    }

    fn mask_of(points: &[(usize, usize)]) -> Mask {
        let mut m = Mask::empty(16, 16).unwrap();
        for &(x, y) in points {
            m.set(x, y, true);
        }
        m
    }

    #[test]
    fn perfect_instances_score_one_at_both_thresholds() {
        let gt = vec![
            mask_of(&[(1, 1), (2, 1), (1, 2), (2, 2)]),
            mask_of(&[(10, 10), (11, 10)]),
        ];
        let mut labels = Grid::filled(16, 16, -1.0).unwrap();
        for (id, m) in gt.iter().enumerate() {
            for (x, y) in m.pixels() {
                labels.set(x, y, id as f64);
            }
        }
        let pred = LabelMap::from_grid(&labels).unwrap();
        let maps = instance_map(&pred, &[1.0, 0.9], &gt, &[0.5, 0.7]).unwrap();
        assert_eq!(maps, vec![1.0, 1.0]);
    }

    #[test]
    fn empty_prediction_scores_zero() {
        let gt = vec![mask_of(&[(1, 1)])];
        let pred = LabelMap::background(16, 16).unwrap();
        let maps = instance_map(&pred, &[], &gt, &[0.5]).unwrap();
        assert_eq!(maps, vec![0.0]);
    }

    #[test]
    fn half_overlap_counts_at_fifty_not_seventy() {
        // Prediction covers half of a 4-pixel ground truth plus 0 extra:
        // IoU = 2/4 = 0.5 -> counts at 0.5 (>=), not at 0.7.
        let gt = vec![mask_of(&[(1, 1), (2, 1), (3, 1), (4, 1)])];
        let mut labels = Grid::filled(16, 16, -1.0).unwrap();
        labels.set(1, 1, 0.0);
        labels.set(2, 1, 0.0);
        let pred = LabelMap::from_grid(&labels).unwrap();
        let maps = instance_map(&pred, &[1.0], &gt, &[0.5, 0.7]).unwrap();
        assert_eq!(maps, vec![1.0, 0.0]);
    }

    #[test]
    fn zero_gt_instances_is_degenerate() {
        let pred = LabelMap::background(8, 8).unwrap();
        assert!(matches!(
            instance_map(&pred, &[], &[], &[0.5]),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn partitions_compare_up_to_order() {
        let gt = gt_two_people();
        let parts = gt_partition(&gt);
        let mut reversed = parts.clone();
        reversed.reverse();
        assert!(partitions_match(&parts, &reversed));
        assert!(!partitions_match(&parts, &parts[..1]));
    }
}
