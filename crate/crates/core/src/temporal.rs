//! Temporal grounding metrics over (query, referent) pairs: R@k, mAP and
//! mIoU at fixed IoU thresholds, with optional greedy NMS of candidates.

use crate::id_mapping::TemporalPair;
use crate::model::{ScoredSegment, Tau, TemporalMetrics, TemporalSegment, ThresholdMap};

/// NMS threshold used by default when evaluating submissions.
pub const DEFAULT_NMS_THRESHOLD: f64 = 0.7;

/// Cut-offs reported for recall.
pub const RECALL_KS: [usize; 3] = [1, 5, 10];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TemporalError {
    #[error("no referents in scope")]
    NoPairs,
    #[error("NMS threshold {0} outside [0, 1]")]
    BadThreshold(f64),
}

fn overlap(a: &TemporalSegment, b: &TemporalSegment) -> (u64, u64) {
    let lo = a.start().max(b.start());
    let hi = a.end().min(b.end());
    let inter = if hi >= lo { u64::from(hi - lo + 1) } else { 0 };
    let union = u64::from(a.len()) + u64::from(b.len()) - inter;
    (inter, union)
}

/// Frame-level IoU with inclusive endpoints.
pub fn temporal_iou(a: &TemporalSegment, b: &TemporalSegment) -> f64 {
    let (inter, union) = overlap(a, b);
    inter as f64 / union as f64
}

/// Exact `temporal_iou(a, b) >= tau`, decided on integers.
fn reaches(a: &TemporalSegment, b: &TemporalSegment, tau: Tau) -> bool {
    let (inter, union) = overlap(a, b);
    inter * 1000 >= u64::from(tau.millis()) * union
}

/// Greedy non-maximum suppression: walking candidates in rank order, keep one
/// unless its IoU with an already kept candidate exceeds `threshold`.
pub fn nms(
    candidates: &[ScoredSegment],
    threshold: f64,
) -> Result<Vec<ScoredSegment>, TemporalError> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(TemporalError::BadThreshold(threshold));
    }
    let mut sorted = candidates.to_vec();
    sorted.sort_by(|a, b| a.rank_cmp(b));
    let mut kept: Vec<ScoredSegment> = Vec::with_capacity(sorted.len());
    for c in sorted {
        if kept
            .iter()
            .all(|k| temporal_iou(k.segment(), c.segment()) <= threshold)
        {
            kept.push(c);
        }
    }
    Ok(kept)
}

fn hit_in_top_k(pair: &TemporalPair, k: usize, tau: Tau) -> bool {
    pair.predictions().iter().take(k).any(|c| {
        pair.gt_segments
            .iter()
            .any(|g| reaches(c.segment(), g, tau))
    })
}

/// Fraction of pairs with a candidate among the top `k` reaching `tau`
/// against some ground-truth segment.
pub fn recall_at_k(pairs: &[TemporalPair], k: usize, tau: Tau) -> Result<f64, TemporalError> {
    if pairs.is_empty() {
        return Err(TemporalError::NoPairs);
    }
    let hits = pairs.iter().filter(|p| hit_in_top_k(p, k, tau)).count();
    Ok(hits as f64 / pairs.len() as f64)
}

/// Ranked-retrieval AP of one pair. Each candidate, in rank order, claims the
/// unclaimed ground-truth segment it overlaps most (if it reaches `tau`).
pub fn average_precision(pair: &TemporalPair, tau: Tau) -> f64 {
    let gts = &pair.gt_segments;
    if gts.is_empty() {
        return 0.0;
    }
    let mut claimed = vec![false; gts.len()];
    let mut hits = 0usize;
    let mut precision_sum = 0.0;
    for (rank0, c) in pair.predictions().iter().enumerate() {
        let mut best: Option<(usize, f64)> = None;
        for (gi, g) in gts.iter().enumerate() {
            if claimed[gi] || !reaches(c.segment(), g, tau) {
                continue;
            }
            let iou = temporal_iou(c.segment(), g);
            if best.is_none_or(|(_, b)| iou > b) {
                best = Some((gi, iou));
            }
        }
        if let Some((gi, _)) = best {
            claimed[gi] = true;
            hits += 1;
            precision_sum += hits as f64 / (rank0 + 1) as f64;
            if hits == gts.len() {
                break;
            }
        }
    }
    precision_sum / gts.len() as f64
}

pub fn map_at(pairs: &[TemporalPair], tau: Tau) -> Result<f64, TemporalError> {
    if pairs.is_empty() {
        return Err(TemporalError::NoPairs);
    }
    let sum: f64 = pairs.iter().map(|p| average_precision(p, tau)).sum();
    Ok(sum / pairs.len() as f64)
}

/// Best IoU of the top-ranked candidate against any ground-truth segment;
/// 0 without candidates.
pub fn top1_iou(pair: &TemporalPair) -> f64 {
    let Some(top) = pair.predictions().first() else {
        return 0.0;
    };
    pair.gt_segments
        .iter()
        .map(|g| temporal_iou(top.segment(), g))
        .fold(0.0, f64::max)
}

pub fn miou(pairs: &[TemporalPair]) -> Result<f64, TemporalError> {
    if pairs.is_empty() {
        return Err(TemporalError::NoPairs);
    }
    let sum: f64 = pairs.iter().map(top1_iou).sum();
    Ok(sum / pairs.len() as f64)
}

/// All temporal metrics at the default thresholds.
pub fn evaluate_temporal(
    pairs: &[TemporalPair],
    nms_threshold: Option<f64>,
) -> Result<TemporalMetrics, TemporalError> {
    evaluate_temporal_at(pairs, nms_threshold, &Tau::defaults())
}

/// All temporal metrics at `taus`, after per-pair NMS when a threshold is given.
pub fn evaluate_temporal_at(
    pairs: &[TemporalPair],
    nms_threshold: Option<f64>,
    taus: &[Tau],
) -> Result<TemporalMetrics, TemporalError> {
    if pairs.is_empty() {
        return Err(TemporalError::NoPairs);
    }
    let suppressed;
    let pairs = match nms_threshold {
        Some(t) => {
            suppressed = pairs
                .iter()
                .map(|p| Ok(p.with_predictions(nms(p.predictions(), t)?)))
                .collect::<Result<Vec<_>, TemporalError>>()?;
            &suppressed[..]
        }
        None => pairs,
    };
    let per_tau =
        |f: &dyn Fn(Tau) -> Result<f64, TemporalError>| -> Result<ThresholdMap, TemporalError> {
            taus.iter().map(|t| Ok((*t, f(*t)?))).collect()
        };
    Ok(TemporalMetrics {
        r1: per_tau(&|t| recall_at_k(pairs, RECALL_KS[0], t))?,
        r5: per_tau(&|t| recall_at_k(pairs, RECALL_KS[1], t))?,
        r10: per_tau(&|t| recall_at_k(pairs, RECALL_KS[2], t))?,
        map_at: per_tau(&|t| map_at(pairs, t))?,
        miou: miou(pairs)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn seg(s: u32, e: u32) -> TemporalSegment {
        TemporalSegment::new(s, e).unwrap()
    }

    fn cand(s: u32, e: u32, score: f64) -> ScoredSegment {
        ScoredSegment::new(seg(s, e), score).unwrap()
    }

    fn pair(gts: &[(u32, u32)], cands: Vec<ScoredSegment>) -> TemporalPair {
        TemporalPair::new("q", 1, gts.iter().map(|&(s, e)| seg(s, e)).collect(), cands)
    }

    const HALF: Tau = Tau::from_millis(500);

    #[test]
    fn iou_examples() {
        assert_eq!(temporal_iou(&seg(3, 9), &seg(3, 9)), 1.0);
        assert_eq!(temporal_iou(&seg(1, 10), &seg(20, 30)), 0.0);
        // inter 5, union 15
        assert_abs_diff_eq!(
            temporal_iou(&seg(1, 10), &seg(6, 15)),
            1.0 / 3.0,
            epsilon = 1e-15
        );
        assert_eq!(temporal_iou(&seg(4, 4), &seg(4, 4)), 1.0);
    }

    #[test]
    fn nms_examples() {
        let one = vec![cand(1, 5, 0.3)];
        assert_eq!(nms(&one, 0.7).unwrap(), one);
        let dup = vec![cand(1, 10, 0.8), cand(1, 10, 0.9)];
        assert_eq!(nms(&dup, 0.7).unwrap(), vec![cand(1, 10, 0.9)]);
        let apart = vec![cand(1, 10, 0.9), cand(6, 15, 0.8)];
        assert_eq!(nms(&apart, 0.7).unwrap(), apart);
        assert!(matches!(
            nms(&apart, 1.5),
            Err(TemporalError::BadThreshold(_))
        ));
        assert!(nms(&apart, -0.1).is_err());
        // threshold 0 keeps only mutually disjoint candidates
        assert_eq!(nms(&apart, 0.0).unwrap(), vec![cand(1, 10, 0.9)]);
    }

    #[test]
    fn recall_examples() {
        let exact = pair(&[(10, 20)], vec![cand(10, 20, 0.9)]);
        assert_eq!(
            recall_at_k(std::slice::from_ref(&exact), 1, HALF).unwrap(),
            1.0
        );

        let empty = pair(&[(10, 20)], vec![]);
        for k in RECALL_KS {
            for t in Tau::defaults() {
                assert_eq!(
                    recall_at_k(&[empty.clone(), empty.clone()], k, t).unwrap(),
                    0.0
                );
            }
        }

        let miss = cand(100, 120, 0.5);
        let rank1 = pair(&[(10, 20)], vec![cand(10, 20, 0.9), miss]);
        let rank3 = pair(
            &[(10, 20)],
            vec![cand(100, 120, 0.9), cand(200, 220, 0.8), cand(10, 20, 0.7)],
        );
        let none = pair(&[(10, 20)], vec![cand(100, 120, 0.9)]);
        let ps = [rank1, rank3, none];
        assert_abs_diff_eq!(recall_at_k(&ps, 1, HALF).unwrap(), 1.0 / 3.0);
        assert_abs_diff_eq!(recall_at_k(&ps, 5, HALF).unwrap(), 2.0 / 3.0);
        assert_abs_diff_eq!(recall_at_k(&ps, 10, HALF).unwrap(), 2.0 / 3.0);

        assert_eq!(recall_at_k(&[], 1, HALF), Err(TemporalError::NoPairs));
    }

    #[test]
    fn ap_examples() {
        let top = pair(&[(10, 20)], vec![cand(10, 20, 0.9), cand(50, 60, 0.1)]);
        assert_eq!(average_precision(&top, HALF), 1.0);

        let third = pair(
            &[(10, 20)],
            vec![cand(50, 60, 0.9), cand(70, 80, 0.8), cand(10, 20, 0.7)],
        );
        assert_abs_diff_eq!(average_precision(&third, HALF), 1.0 / 3.0);

        // hits at ranks 1 and 4: (1/2)(1/1 + 2/4)
        let two = pair(
            &[(10, 20), (40, 50)],
            vec![
                cand(10, 20, 0.9),
                cand(60, 70, 0.8),
                cand(80, 90, 0.7),
                cand(40, 50, 0.6),
            ],
        );
        assert_eq!(average_precision(&two, HALF), 0.75);

        // the same gt segment cannot be claimed twice
        let dup = pair(&[(10, 20)], vec![cand(10, 20, 0.9), cand(10, 20, 0.8)]);
        assert_eq!(average_precision(&dup, HALF), 1.0);

        assert_eq!(average_precision(&pair(&[(1, 2)], vec![]), HALF), 0.0);

        assert_abs_diff_eq!(
            map_at(&[top, third, two], HALF).unwrap(),
            (1.0 + 1.0 / 3.0 + 0.75) / 3.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!((1.0 + 1.0 / 3.0 + 0.75) / 3.0, 0.694444, epsilon = 1e-6);
    }

    #[test]
    fn map_mean() {
        let hit = pair(&[(10, 20)], vec![cand(10, 20, 0.9)]);
        let miss = pair(&[(10, 20)], vec![cand(40, 50, 0.9)]);
        assert_eq!(map_at(&[hit.clone(), hit.clone()], HALF).unwrap(), 1.0);
        assert_eq!(map_at(&[hit, miss], HALF).unwrap(), 0.5);
    }

    #[test]
    fn miou_examples() {
        let exact = pair(&[(10, 20)], vec![cand(10, 20, 0.9)]);
        assert_eq!(miou(&[exact.clone(), exact]).unwrap(), 1.0);
        let partial = pair(&[(6, 15)], vec![cand(1, 10, 0.9)]);
        assert_abs_diff_eq!(miou(&[partial]).unwrap(), 1.0 / 3.0, epsilon = 1e-15);
        let empty = pair(&[(6, 15)], vec![]);
        assert_eq!(miou(&[empty.clone(), empty]).unwrap(), 0.0);
        assert_eq!(miou(&[]), Err(TemporalError::NoPairs));
    }

    #[test]
    fn perfect_pairs_score_one_everywhere() {
        let ps = vec![
            pair(&[(10, 20)], vec![cand(10, 20, 1.0)]),
            pair(&[(3, 4), (8, 9)], vec![cand(3, 4, 1.0), cand(8, 9, 1.0)]),
        ];
        let m = evaluate_temporal(&ps, Some(DEFAULT_NMS_THRESHOLD)).unwrap();
        assert_eq!(m, TemporalMetrics::constant(&Tau::defaults(), 1.0));
    }

    #[test]
    fn nms_lifts_a_hit_buried_under_duplicates() {
        // five copies of one miss ranked above the true hit at rank 6
        let mut cands: Vec<_> = (0..5)
            .map(|i| cand(100, 140, 0.9 - 0.01 * f64::from(i)))
            .collect();
        cands.push(cand(10, 20, 0.5));
        let ps = vec![pair(&[(10, 20)], cands)];
        let plain = evaluate_temporal(&ps, None).unwrap();
        let sup = evaluate_temporal(&ps, Some(0.7)).unwrap();
        for t in Tau::defaults() {
            assert_eq!(plain.r5[&t], 0.0);
            assert_eq!(sup.r5[&t], 1.0);
            assert!(sup.map_at[&t] > plain.map_at[&t]);
        }
        assert_eq!(plain.r1, sup.r1);
        assert_eq!(plain.miou, sup.miou);
    }
}
