//! Instance decoding: detection heatmap plus tag map into a label map.
//!
//! The pipeline follows the tag distribution: threshold the detection
//! heatmap into a foreground mask, histogram the tags inside the mask,
//! extract one identifier tag per mode by greedy NMS over bins, then label
//! every foreground pixel with its nearest identifier.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::mask::Mask;

/// Configuration for instance decoding.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceDecodeConfig {
    /// Foreground threshold on the detection heatmap.
    pub mask_threshold: f64,
    /// Histogram bin width over tag values.
    pub bin_width: f64,
    /// Minimum distance between accepted identifiers.
    pub min_separation: f64,
    /// Minimum pixel count for a bin to yield an identifier.
    pub min_mass: usize,
    /// IoU above which multi-scale proposals are considered duplicates.
    pub overlap_iou: f64,
}

impl Default for InstanceDecodeConfig {
    fn default() -> Self {
        InstanceDecodeConfig {
            mask_threshold: 0.5,
            bin_width: 0.1,
            min_separation: 1.0,
            min_mass: 10,
            overlap_iou: 0.5,
        }
    }
}

/// Histogram of tag values over the foreground mask.
///
/// Bins are half-open `[origin + i * bin_width, origin + (i+1) * bin_width)`
/// with the origin snapped to a multiple of the bin width at or below the
/// smallest foreground tag, so bin totals always equal the foreground pixel
/// count.
#[derive(Debug, Clone, PartialEq)]
pub struct TagHistogram {
    pub bin_width: f64,
    pub origin: f64,
    pub counts: Vec<usize>,
}

impl TagHistogram {
    pub fn bin_center(&self, index: usize) -> f64 {
        self.origin + (index as f64 + 0.5) * self.bin_width
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// Per-pixel instance labels: background or an id in `[0, M)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMap {
    width: usize,
    height: usize,
    labels: Vec<i32>,
    num_instances: usize,
}

pub const BACKGROUND: i32 = -1;

impl LabelMap {
    pub fn background(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::parameter("label map dimensions must be positive"));
        }
        Ok(LabelMap {
            width,
            height,
            labels: vec![BACKGROUND; width * height],
            num_instances: 0,
        })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    /// Number of instance ids (labels lie in `[0, num_instances)`).
    pub fn num_instances(&self) -> usize {
        self.num_instances
    }

    /// Label at a pixel, `None` for background.
    #[inline]
    pub fn label(&self, x: usize, y: usize) -> Option<u32> {
        let v = self.labels[y * self.width + x];
        (v >= 0).then_some(v as u32)
    }

    fn set_label(&mut self, x: usize, y: usize, id: u32) {
        self.labels[y * self.width + x] = id as i32;
    }

    /// Mask of one instance id.
    pub fn mask_of(&self, id: u32) -> Mask {
        let bits = self.labels.iter().map(|&l| l == id as i32).collect();
        Mask::from_bits(self.width, self.height, bits).expect("label map dims are valid")
    }

    /// Labels as a real-valued grid with background encoded as -1.
    pub fn to_grid(&self) -> Grid {
        let values = self.labels.iter().map(|&l| l as f64).collect();
        Grid::from_values(self.width, self.height, values).expect("label map dims are valid")
    }

    /// Inverse of [`LabelMap::to_grid`]: values must be -1 or integers in
    /// a contiguous range starting at 0.
    pub fn from_grid(grid: &Grid) -> Result<Self> {
        let mut labels = Vec::with_capacity(grid.values().len());
        let mut max_id: i32 = -1;
        for &v in grid.values() {
            let r = v.round();
            if (v - r).abs() > 1e-9 || r < -1.0 || r > i32::MAX as f64 {
                return Err(Error::Format(format!("value {v} is not a valid label")));
            }
            let l = r as i32;
            max_id = max_id.max(l);
            labels.push(l);
        }
        Ok(LabelMap {
            width: grid.width(),
            height: grid.height(),
            labels,
            num_instances: (max_id + 1) as usize,
        })
    }
}

/// Binary foreground mask: pixel is 1 iff the detection value is `>= t`.
pub fn threshold_mask(det: &Grid, t: f64) -> Grid {
    let values = det
        .values()
        .iter()
        .map(|&v| if v >= t { 1.0 } else { 0.0 })
        .collect();
    Grid::from_values(det.width(), det.height(), values).expect("same dims")
}

/// Histograms the tag values of foreground pixels (mask non-zero).
pub fn tag_histogram(tag: &Grid, mask: &Grid, bin_width: f64) -> Result<TagHistogram> {
    Error::require_positive(bin_width, "bin_width")?;
    if !tag.same_shape(mask) {
        return Err(Error::shape("tag and mask must share one shape"));
    }
    let fg: Vec<f64> = tag
        .values()
        .iter()
        .zip(mask.values())
        .filter(|(_, &m)| m != 0.0)
        .map(|(&v, _)| v)
        .collect();
    if fg.is_empty() {
        return Err(Error::degenerate("empty foreground mask"));
    }
    let min = fg.iter().copied().fold(f64::INFINITY, f64::min);
    let origin = (min / bin_width).floor() * bin_width;
    let mut counts: Vec<usize> = Vec::new();
    for v in fg {
        let idx = ((v - origin) / bin_width).floor().max(0.0) as usize;
        if idx >= counts.len() {
            counts.resize(idx + 1, 0);
        }
        counts[idx] += 1;
    }
    Ok(TagHistogram {
        bin_width,
        origin,
        counts,
    })
}

/// Greedy NMS over histogram bins: visit bins by descending count and
/// accept a bin center as an identifier when its mass reaches `min_mass`
/// and its center keeps `min_separation` from every accepted identifier.
/// Returns identifiers sorted ascending; may be empty.
pub fn extract_identifiers(hist: &TagHistogram, min_separation: f64, min_mass: usize) -> Vec<f64> {
    assert!(
        min_separation >= hist.bin_width,
        "min_separation ({min_separation}) must be at least one bin width ({})",
        hist.bin_width
    );
    let mut order: Vec<usize> = (0..hist.counts.len())
        .filter(|&i| hist.counts[i] > 0)
        .collect();
    order.sort_by(|&a, &b| hist.counts[b].cmp(&hist.counts[a]).then(a.cmp(&b)));

    let mut accepted: Vec<f64> = Vec::new();
    for i in order {
        if hist.counts[i] < min_mass {
            break; // descending order: nothing later can qualify
        }
        let center = hist.bin_center(i);
        if accepted.iter().all(|&c| (center - c).abs() >= min_separation) {
            accepted.push(center);
        }
    }
    accepted.sort_by(f64::total_cmp);
    accepted
}

/// Labels every foreground pixel with the nearest identifier (ties go to
/// the lower identifier index). Background pixels stay background.
pub fn assign_pixels(tag: &Grid, mask: &Grid, identifiers: &[f64]) -> Result<LabelMap> {
    if !tag.same_shape(mask) {
        return Err(Error::shape("tag and mask must share one shape"));
    }
    let mut out = LabelMap::background(tag.width(), tag.height())?;
    out.num_instances = identifiers.len();
    for y in 0..tag.height() {
        for x in 0..tag.width() {
            if mask.get(x, y) == 0.0 {
                continue;
            }
            if identifiers.is_empty() {
                return Err(Error::parameter(
                    "non-empty mask but no identifiers to assign",
                ));
            }
            let v = tag.get(x, y);
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (i, &id) in identifiers.iter().enumerate() {
                let d = (v - id).abs();
                if d < best_d {
                    best_d = d;
                    best = i;
                }
            }
            out.set_label(x, y, best as u32);
        }
    }
    Ok(out)
}

/// Full instance decode: threshold, histogram, identifier NMS, nearest-tag
/// assignment. Returns the label map together with the identifiers (one
/// per label id).
pub fn decode_instances(
    det: &Grid,
    tag: &Grid,
    cfg: &InstanceDecodeConfig,
) -> Result<(LabelMap, Vec<f64>)> {
    let mask = threshold_mask(det, cfg.mask_threshold);
    let hist = tag_histogram(tag, &mask, cfg.bin_width)?;
    let identifiers = extract_identifiers(&hist, cfg.min_separation, cfg.min_mass);
    let labels = assign_pixels(tag, &mask, &identifiers)?;
    Ok((labels, identifiers))
}

/// Merges per-scale label-map proposals into a single label map.
///
/// Every instance of every scale becomes a proposal scored by its mean
/// detection value over its mask. Proposals are visited by descending
/// score (ties: scale, then id) and greedily suppressed when their mask
/// IoU with an already accepted proposal exceeds `overlap_iou`. Accepted
/// proposals are rasterized in score order; earlier proposals keep
/// contested pixels. All inputs must share one resolution.
pub fn merge_instance_scales(
    per_scale: &[(LabelMap, Grid)],
    overlap_iou: f64,
) -> Result<LabelMap> {
    if per_scale.is_empty() {
        return Err(Error::parameter("need at least one scale"));
    }
    let (w, h) = (per_scale[0].0.width(), per_scale[0].0.height());
    for (lm, det) in per_scale {
        if lm.width() != w || lm.height() != h || det.width() != w || det.height() != h {
            return Err(Error::shape(
                "all proposals must share one resolution",
            ));
        }
    }

    struct Proposal {
        scale: usize,
        id: u32,
        score: f64,
        mask: Mask,
    }
    let mut proposals: Vec<Proposal> = Vec::new();
    for (scale, (lm, det)) in per_scale.iter().enumerate() {
        for id in 0..lm.num_instances() as u32 {
            let mask = lm.mask_of(id);
            let area = mask.area();
            if area == 0 {
                continue;
            }
            let sum: f64 = mask.pixels().iter().map(|&(x, y)| det.get(x, y)).sum();
            proposals.push(Proposal {
                scale,
                id,
                score: sum / area as f64,
                mask,
            });
        }
    }
    proposals.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.scale.cmp(&b.scale))
            .then(a.id.cmp(&b.id))
    });

    let mut accepted: Vec<&Proposal> = Vec::new();
    for p in &proposals {
        if accepted.iter().all(|a| a.mask.iou(&p.mask) <= overlap_iou) {
            accepted.push(p);
        }
    }

    let mut out = LabelMap::background(w, h)?;
    out.num_instances = accepted.len();
    for (new_id, p) in accepted.iter().enumerate() {
        for (x, y) in p.mask.pixels() {
            if out.label(x, y).is_none() {
                out.set_label(x, y, new_id as u32);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_all_zero_stays_zero() {
        let det = Grid::zeros(6, 6).unwrap();
        let mask = threshold_mask(&det, 0.5);
        assert!(mask.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn threshold_zero_includes_everything() {
        let det = Grid::zeros(3, 3).unwrap();
        let mask = threshold_mask(&det, 0.0);
        assert!(mask.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn threshold_keeps_a_rendered_disk() {
        let mut det = Grid::filled(8, 8, 0.05).unwrap();
        let mut expect = Mask::empty(8, 8).unwrap();
        for y in 2..6 {
            for x in 3..7 {
                det.set(x, y, 0.9);
                expect.set(x, y, true);
            }
        }
        let mask = threshold_mask(&det, 0.5);
        assert_eq!(Mask::from_grid(&mask), expect);
    }

    fn uniform_tag_grid(tags: &[(f64, usize)]) -> (Grid, Grid) {
        // Builds a tag grid with the given (value, count) clusters laid out
        // row-major and a matching all-ones mask grid sized to fit.
        let total: usize = tags.iter().map(|&(_, c)| c).sum();
        let mut values = Vec::with_capacity(total);
        for &(v, c) in tags {
            values.extend(std::iter::repeat_n(v, c));
        }
        let tag = Grid::from_values(total, 1, values).unwrap();
        let mask = Grid::filled(total, 1, 1.0).unwrap();
        (tag, mask)
    }

    #[test]
    fn histogram_single_cluster_single_bin() {
        let (tag, mask) = uniform_tag_grid(&[(0.0, 100)]);
        let hist = tag_histogram(&tag, &mask, 0.1).unwrap();
        assert_eq!(hist.total(), 100);
        assert_eq!(hist.counts.iter().filter(|&&c| c > 0).count(), 1);
        assert_eq!(hist.counts[0], 100);
    }

    #[test]
    fn histogram_two_disjoint_clusters() {
        let (tag, mask) = uniform_tag_grid(&[(0.0, 100), (3.0, 120)]);
        let hist = tag_histogram(&tag, &mask, 0.1).unwrap();
        let nonzero: Vec<usize> = hist.counts.iter().copied().filter(|&c| c > 0).collect();
        assert_eq!(nonzero, vec![100, 120]);
        assert_eq!(hist.total(), 220);
    }

    #[test]
    fn histogram_empty_mask_is_degenerate() {
        let tag = Grid::zeros(4, 4).unwrap();
        let mask = Grid::zeros(4, 4).unwrap();
        assert!(matches!(
            tag_histogram(&tag, &mask, 0.1),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn identifiers_for_two_clusters() {
        let (tag, mask) = uniform_tag_grid(&[(0.0, 100), (3.0, 120)]);
        let hist = tag_histogram(&tag, &mask, 0.1).unwrap();
        let ids = extract_identifiers(&hist, 1.0, 10);
        // Greedy NMS by hand: bin of 3.0 (count 120) first, then bin of 0.0
        // (count 100); both accepted, centers at half a bin above the value.
        assert_eq!(ids.len(), 2);
        assert!((ids[0] - 0.05).abs() < 1e-9);
        assert!((ids[1] - 3.05).abs() < 1e-9);
    }

    #[test]
    fn identifiers_of_empty_histogram() {
        let hist = TagHistogram {
            bin_width: 0.1,
            origin: 0.0,
            counts: vec![],
        };
        assert!(extract_identifiers(&hist, 1.0, 10).is_empty());
    }

    #[test]
    fn one_cluster_one_identifier() {
        let (tag, mask) = uniform_tag_grid(&[(1.0, 50)]);
        let hist = tag_histogram(&tag, &mask, 0.1).unwrap();
        assert_eq!(extract_identifiers(&hist, 1.0, 10).len(), 1);
    }

    #[test]
    fn min_mass_filters_small_bins() {
        let (tag, mask) = uniform_tag_grid(&[(0.0, 100), (3.0, 5)]);
        let hist = tag_histogram(&tag, &mask, 0.1).unwrap();
        assert_eq!(extract_identifiers(&hist, 1.0, 10).len(), 1);
    }

    #[test]
    fn assign_single_identifier_labels_everything_zero() {
        let (tag, mask) = uniform_tag_grid(&[(0.3, 7)]);
        let lm = assign_pixels(&tag, &mask, &[0.35]).unwrap();
        for x in 0..7 {
            assert_eq!(lm.label(x, 0), Some(0));
        }
        assert_eq!(lm.num_instances(), 1);
    }

    #[test]
    fn assign_uses_the_midpoint_rule() {
        let mut tag = Grid::zeros(2, 1).unwrap();
        tag.set(0, 0, 1.4);
        tag.set(1, 0, 1.6);
        let mask = Grid::filled(2, 1, 1.0).unwrap();
        let lm = assign_pixels(&tag, &mask, &[0.0, 3.0]).unwrap();
        assert_eq!(lm.label(0, 0), Some(0));
        assert_eq!(lm.label(1, 0), Some(1));
    }

    #[test]
    fn assign_tie_goes_to_lower_identifier() {
        let mut tag = Grid::zeros(1, 1).unwrap();
        tag.set(0, 0, 1.5);
        let mask = Grid::filled(1, 1, 1.0).unwrap();
        let lm = assign_pixels(&tag, &mask, &[0.0, 3.0]).unwrap();
        assert_eq!(lm.label(0, 0), Some(0));
    }

    #[test]
    fn assign_never_labels_background() {
        let tag = Grid::filled(4, 4, 0.2).unwrap();
        let mut mask = Grid::zeros(4, 4).unwrap();
        mask.set(1, 1, 1.0);
        let lm = assign_pixels(&tag, &mask, &[0.2]).unwrap();
        for y in 0..4 {
            for x in 0..4 {
                assert_eq!(lm.label(x, y).is_some(), (x, y) == (1, 1));
            }
        }
    }

    #[test]
    fn assign_rejects_foreground_without_identifiers() {
        let tag = Grid::filled(2, 2, 0.2).unwrap();
        let mask = Grid::filled(2, 2, 1.0).unwrap();
        assert!(matches!(
            assign_pixels(&tag, &mask, &[]),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn label_map_grid_roundtrip() {
        let mut tag = Grid::zeros(3, 1).unwrap();
        tag.set(0, 0, 0.0);
        tag.set(1, 0, 5.0);
        tag.set(2, 0, 5.1);
        let mut mask = Grid::filled(3, 1, 1.0).unwrap();
        mask.set(0, 0, 0.0); // background
        let lm = assign_pixels(&tag, &mask, &[0.0, 5.05]).unwrap();
        let back = LabelMap::from_grid(&lm.to_grid()).unwrap();
        assert_eq!(lm.label(0, 0), back.label(0, 0));
        assert_eq!(lm.label(1, 0), back.label(1, 0));
        assert_eq!(back.to_grid().get(0, 0), -1.0);
    }

    fn two_instance_maps() -> (LabelMap, Grid) {
        // Two 2x2 blocks labeled 0 and 1 on an 8x4 canvas.
        let mut tag = Grid::zeros(8, 4).unwrap();
        let mut det = Grid::zeros(8, 4).unwrap();
        for y in 1..3 {
            for x in 1..3 {
                tag.set(x, y, 0.0);
                det.set(x, y, 1.0);
            }
            for x in 5..7 {
                tag.set(x, y, 4.0);
                det.set(x, y, 1.0);
            }
        }
        let mask = threshold_mask(&det, 0.5);
        let lm = assign_pixels(&tag, &mask, &[0.05, 4.05]).unwrap();
        (lm, det)
    }

    #[test]
    fn merge_single_scale_is_identity() {
        let (lm, det) = two_instance_maps();
        let merged = merge_instance_scales(&[(lm.clone(), det)], 0.5).unwrap();
        assert_eq!(merged, lm);
    }

    #[test]
    fn merge_duplicate_scales_suppresses_duplicates() {
        let (lm, det) = two_instance_maps();
        let merged = merge_instance_scales(
            &[(lm.clone(), det.clone()), (lm.clone(), det)],
            0.5,
        )
        .unwrap();
        assert_eq!(merged, lm);
    }

    #[test]
    fn merge_recovers_instances_missing_from_one_scale() {
        let (full, det) = two_instance_maps();
        // Second scale only found instance 0.
        let tag = full.to_grid();
        let mut partial_labels = Grid::zeros(8, 4).unwrap();
        for y in 0..4 {
            for x in 0..8 {
                partial_labels.set(x, y, if tag.get(x, y) == 0.0 { 0.0 } else { -1.0 });
            }
        }
        let partial = LabelMap::from_grid(&partial_labels).unwrap();
        let merged =
            merge_instance_scales(&[(partial, det.clone()), (full.clone(), det)], 0.5).unwrap();
        assert_eq!(merged.num_instances(), 2);
        // Partition equality up to id permutation.
        for id in 0..2u32 {
            let m = merged.mask_of(id);
            assert!(
                m == full.mask_of(0) || m == full.mask_of(1),
                "merged instance {id} matches neither original"
            );
        }
    }

    #[test]
    fn histogram_argmax_bin_contains_the_cluster_mean() {
        use rand::Rng;
        use rand::SeedableRng;
        // 500 pixels drawn around 1.0 with sigma 0.05: the heaviest bin
        // must cover the mean.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(123);
        let normal = rand_distr::Normal::new(1.0, 0.05).unwrap();
        let values: Vec<f64> = (0..500).map(|_| rng.sample(normal)).collect();
        let tag = Grid::from_values(500, 1, values).unwrap();
        let mask = Grid::filled(500, 1, 1.0).unwrap();
        let hist = tag_histogram(&tag, &mask, 0.1).unwrap();
        let argmax = (0..hist.counts.len())
            .max_by_key(|&i| hist.counts[i])
            .unwrap();
        let lo = hist.origin + argmax as f64 * hist.bin_width;
        assert!(
            (lo..lo + hist.bin_width).contains(&1.0),
            "argmax bin [{lo}, {}) misses the mean",
            lo + hist.bin_width
        );
    }

    #[test]
    fn decode_instances_composes_the_stages() {
        let (lm, det) = two_instance_maps();
        let tag_values: Vec<f64> = lm
            .to_grid()
            .values()
            .iter()
            .map(|&l| if l < 0.0 { 0.0 } else { l * 4.0 })
            .collect();
        let tag = Grid::from_values(8, 4, tag_values).unwrap();
        let cfg = InstanceDecodeConfig {
            min_mass: 2,
            ..InstanceDecodeConfig::default()
        };
        let (decoded, ids) = decode_instances(&det, &tag, &cfg).unwrap();
        assert_eq!(ids.len(), 2);
        assert_eq!(decoded.num_instances(), 2);
        for y in 0..4 {
            for x in 0..8 {
                assert_eq!(decoded.label(x, y).is_some(), lm.label(x, y).is_some());
            }
        }
    }

    mod properties {
        use super::super::*;
        use proptest::prelude::*;
        use rand::Rng;
        use rand::SeedableRng;

        /// Clustered tag values over an all-ones mask: `masses[i]` pixels
        /// around `centers[i]` with Gaussian noise `sigma`.
        fn clustered_grid(
            centers: &[f64],
            masses: &[usize],
            sigma: f64,
            seed: u64,
        ) -> (Grid, Grid) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut values = Vec::new();
            for (&c, &m) in centers.iter().zip(masses) {
                for _ in 0..m {
                    let noise = if sigma > 0.0 {
                        rng.sample(rand_distr::Normal::new(0.0, sigma).unwrap())
                    } else {
                        0.0
                    };
                    values.push(c + noise);
                }
            }
            let n = values.len();
            let tag = Grid::from_values(n, 1, values).unwrap();
            let mask = Grid::filled(n, 1, 1.0).unwrap();
            (tag, mask)
        }

        proptest! {
            /// Clusters separated by the NMS radius (plus two bins of
            /// histogram quantization slack) each produce exactly one
            /// identifier.
            #[test]
            fn well_separated_clusters_give_exactly_k_identifiers(
                k in 1usize..=4,
                first in -3.0f64..3.0,
                extra in prop::collection::vec(0.0f64..1.0, 4),
                // Heavy enough that the mode bin clears min_mass even when
                // the noise spreads a cluster across several bins.
                masses in prop::collection::vec(60usize..150, 4),
                sigma in prop::sample::select(vec![0.0f64, 0.02, 0.05]),
                seed in any::<u64>(),
            ) {
                let bin = 0.1f64;
                let min_sep = 1.0f64;
                let gap = (4.0 * sigma).max(min_sep) + 2.0 * bin;
                let centers: Vec<f64> = (0..k)
                    .scan(first, |acc, i| {
                        let c = *acc;
                        *acc += gap + extra[i];
                        Some(c)
                    })
                    .collect();
                let (tag, mask) = clustered_grid(&centers, &masses[..k], sigma, seed);
                let hist = tag_histogram(&tag, &mask, bin).unwrap();
                let ids = extract_identifiers(&hist, min_sep, 10);
                prop_assert_eq!(ids.len(), k, "centers {:?}", centers);
            }

            /// Shifting every tag by a constant shifts the identifiers by
            /// the same constant (within one bin) and leaves the pixel
            /// partition unchanged.
            #[test]
            fn tag_translation_shifts_identifiers_and_preserves_labels(
                shift in -5.0f64..5.0,
                seed in any::<u64>(),
            ) {
                let centers = [0.0, 1.3, 2.9];
                let masses = [40usize, 50, 60];
                let (tag, mask) = clustered_grid(&centers, &masses, 0.03, seed);
                let hist = tag_histogram(&tag, &mask, 0.1).unwrap();
                let ids = extract_identifiers(&hist, 1.0, 10);
                let labels = assign_pixels(&tag, &mask, &ids).unwrap();

                let mut shifted = tag.clone();
                for v in shifted.values_mut() {
                    *v += shift;
                }
                let hist2 = tag_histogram(&shifted, &mask, 0.1).unwrap();
                let ids2 = extract_identifiers(&hist2, 1.0, 10);
                let labels2 = assign_pixels(&shifted, &mask, &ids2).unwrap();

                prop_assert_eq!(ids.len(), ids2.len());
                for (a, b) in ids.iter().zip(&ids2) {
                    prop_assert!(((b - a) - shift).abs() <= 0.1 + 1e-9);
                }
                prop_assert_eq!(labels, labels2);
            }
        }
    }
}
