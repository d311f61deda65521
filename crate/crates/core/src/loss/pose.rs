//! Pose grouping loss: pull toward per-person reference embeddings, push
//! between reference embeddings of distinct people.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::loss::{LossParams, PoseGroundTruth, TagGradient};

/// Reference embedding per person: the mean of the person's tag values
/// read at its visible joint locations.
///
/// People without annotated joints would have no reference; a person with
/// zero visible joints is a degenerate input.
pub fn reference_embeddings(tags: &[Grid], gt: &PoseGroundTruth) -> Result<Vec<f64>> {
    if tags.is_empty() {
        return Err(Error::shape("no tag grids".to_string()));
    }
    gt.validate(tags.len(), tags[0].width(), tags[0].height())?;
    for g in tags {
        if !g.same_shape(&tags[0]) {
            return Err(Error::shape("tag grids must share one shape".to_string()));
        }
    }
    Ok(gt
        .persons
        .iter()
        .map(|person| {
            let mut sum = 0.0;
            let mut count = 0usize;
            for (k, joint) in person.joints.iter().enumerate() {
                if joint.visible {
                    sum += tags[k].get(joint.x, joint.y);
                    count += 1;
                }
            }
            sum / count as f64
        })
        .collect())
}

/// The pose grouping loss.
///
/// With reference embeddings `r_n` and tag reads `v_nk` over each person's
/// visible joints:
///
/// ```text
/// L = 1/N * sum_n sum_k (r_n - v_nk)^2
///   + 1/N^2 * sum_{n != n'} exp(-(r_n - r_n')^2 / (2 sigma^2))
/// ```
///
/// The push sum runs over ordered pairs, so each unordered pair counts
/// twice. Pairs with `n = n'` are excluded: they would contribute a
/// constant `1/N` with zero gradient. An empty annotation has loss 0.
pub fn pose_grouping_loss(tags: &[Grid], gt: &PoseGroundTruth, params: &LossParams) -> Result<f64> {
    params.validate()?;
    if gt.persons.is_empty() {
        return Ok(0.0);
    }
    let refs = reference_embeddings(tags, gt)?;
    let n = refs.len() as f64;

    // Per-person subtotals summed in value order: the loss is bit-stable
    // under person reordering.
    let pull_terms: Vec<f64> = gt
        .persons
        .iter()
        .zip(&refs)
        .map(|(person, &r)| {
            person
                .joints
                .iter()
                .enumerate()
                .filter(|(_, j)| j.visible)
                .map(|(k, joint)| {
                    let d = r - tags[k].get(joint.x, joint.y);
                    d * d
                })
                .sum()
        })
        .collect();
    let pull = crate::loss::stable_sum(pull_terms) / n;

    let inv_two_sigma_sq = 1.0 / (2.0 * params.sigma * params.sigma);
    let mut push_terms = Vec::with_capacity(refs.len() * refs.len());
    for (a, &ra) in refs.iter().enumerate() {
        for (b, &rb) in refs.iter().enumerate() {
            if a != b {
                let d = ra - rb;
                push_terms.push((-d * d * inv_two_sigma_sq).exp());
            }
        }
    }
    let push = crate::loss::stable_sum(push_terms) / (n * n);

    Ok(pull + push)
}

/// Exact gradient of [`pose_grouping_loss`] with respect to every tag
/// value read at a ground-truth location.
///
/// For person `m` with `c_m` visible joints, the derivative with respect
/// to the read `v_mj` is
///
/// ```text
/// 2/N * (v_mj - r_m)
///   + 1/c_m * 2/(N^2 sigma^2)
///       * sum_{n' != m} exp(-(r_m - r_n')^2 / (2 sigma^2)) * (r_n' - r_m)
/// ```
///
/// The pull term's dependence through `r_m` cancels because the residuals
/// of a person sum to zero against their own mean. When two people share a
/// ground-truth pixel on the same joint, their contributions add.
pub fn pose_grouping_grad(
    tags: &[Grid],
    gt: &PoseGroundTruth,
    params: &LossParams,
) -> Result<TagGradient> {
    params.validate()?;
    if gt.persons.is_empty() {
        return Ok(TagGradient::default());
    }
    let refs = reference_embeddings(tags, gt)?;
    let n = refs.len() as f64;
    let inv_sigma_sq = 1.0 / (params.sigma * params.sigma);
    let inv_two_sigma_sq = 0.5 * inv_sigma_sq;

    let mut acc: BTreeMap<(usize, usize, usize), f64> = BTreeMap::new();
    for (m, (person, &rm)) in gt.persons.iter().zip(&refs).enumerate() {
        let visible = person.visible_count() as f64;

        // Push force on the reference embedding, shared by every member.
        let mut push_force = 0.0;
        for (other, &ro) in refs.iter().enumerate() {
            if other != m {
                let d = rm - ro;
                push_force += (-d * d * inv_two_sigma_sq).exp() * (ro - rm);
            }
        }
        let per_member_push = push_force * 2.0 / (n * n) * inv_sigma_sq / visible;

        for (k, joint) in person.joints.iter().enumerate() {
            if !joint.visible {
                continue;
            }
            let v = tags[k].get(joint.x, joint.y);
            let g = 2.0 / n * (v - rm) + per_member_push;
            *acc.entry((k, joint.y, joint.x)).or_insert(0.0) += g;
        }
    }
    Ok(TagGradient::from_map(acc))
}
