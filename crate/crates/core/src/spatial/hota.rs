use std::collections::BTreeMap;

use super::matching::{AlphaMatchResult, FrameTable};
use crate::model::{HotaComponents, Track, TrackId};

/// Number of localisation thresholds in the sweep.
pub const ALPHA_STEPS: usize = 19;

/// Index of alpha = 0.5 within [`alphas`].
pub const HALF_ALPHA_INDEX: usize = 9;

/// The sweep 0.05, 0.10, ..., 0.95, each the nearest double to k/20.
pub fn alphas() -> [f64; ALPHA_STEPS] {
    std::array::from_fn(|i| (i + 1) as f64 / 20.0)
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// HOTA components from one threshold's matching.
///
/// Association terms are accumulated per (gt, pred) pair in ascending id
/// order; LocA sums IoU frame by frame in ascending gt id order.
pub fn hota_at_alpha(result: &AlphaMatchResult) -> HotaComponents {
    let mut tp = 0u64;
    let mut fn_ = 0u64;
    let mut fp = 0u64;
    let mut iou_sum = 0.0;
    let mut gt_count: BTreeMap<TrackId, u64> = BTreeMap::new();
    let mut pred_count: BTreeMap<TrackId, u64> = BTreeMap::new();
    let mut pair_tp: BTreeMap<(TrackId, TrackId), u64> = BTreeMap::new();

    for f in &result.frames {
        for m in &f.matched {
            tp += 1;
            iou_sum += m.iou;
            *gt_count.entry(m.gt_id).or_default() += 1;
            *pred_count.entry(m.pred_id).or_default() += 1;
            *pair_tp.entry((m.gt_id, m.pred_id)).or_default() += 1;
        }
        for g in &f.unmatched_gt {
            fn_ += 1;
            *gt_count.entry(*g).or_default() += 1;
        }
        for p in &f.unmatched_pred {
            fp += 1;
            *pred_count.entry(*p).or_default() += 1;
        }
    }

    if tp + fn_ + fp == 0 {
        return HotaComponents {
            hota: 1.0,
            det_a: 1.0,
            ass_a: 1.0,
            det_re: 1.0,
            det_pr: 1.0,
            ass_re: 1.0,
            ass_pr: 1.0,
            loc_a: 1.0,
            ..HotaComponents::ZERO
        };
    }

    let tp_f = tp as f64;
    let det_a = tp_f / (tp + fn_ + fp) as f64;
    let det_re = ratio(tp_f, (tp + fn_) as f64);
    let det_pr = ratio(tp_f, (tp + fp) as f64);

    let (ass_a, ass_re, ass_pr, loc_a) = if tp == 0 {
        (0.0, 0.0, 0.0, 0.0)
    } else {
        let mut a_sum = 0.0;
        let mut re_sum = 0.0;
        let mut pr_sum = 0.0;
        for (&(g, p), &tpa) in &pair_tp {
            let gl = gt_count[&g];
            let pl = pred_count[&p];
            let w = tpa as f64;
            a_sum += w * (w / (gl + pl - tpa) as f64);
            re_sum += w * (w / gl as f64);
            pr_sum += w * (w / pl as f64);
        }
        (a_sum / tp_f, re_sum / tp_f, pr_sum / tp_f, iou_sum / tp_f)
    };

    HotaComponents {
        hota: (det_a * ass_a).sqrt(),
        det_a,
        ass_a,
        det_re,
        det_pr,
        ass_re,
        ass_pr,
        loc_a,
        tp: tp as f64,
        fn_: fn_ as f64,
        fp: fp as f64,
    }
}

/// Everything computed while sweeping the thresholds for one scope.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// Field-wise mean over the sweep; `hota` is the mean of per-threshold HOTA.
    pub mean: HotaComponents,
    pub per_alpha: Vec<HotaComponents>,
    /// The matching at alpha = 0.5, kept for identity mapping.
    pub match_at_half: AlphaMatchResult,
}

pub fn evaluate_sweep(gt_tracks: &[Track], pred_tracks: &[Track]) -> SweepResult {
    let table = FrameTable::new(gt_tracks, pred_tracks);
    let mut per_alpha = Vec::with_capacity(ALPHA_STEPS);
    let mut match_at_half = AlphaMatchResult::default();
    for (i, alpha) in alphas().into_iter().enumerate() {
        let alignment = table.alignment(alpha);
        let matched = table.match_frames(alpha, &alignment);
        per_alpha.push(hota_at_alpha(&matched));
        if i == HALF_ALPHA_INDEX {
            match_at_half = matched;
        }
    }
    let mean = HotaComponents::mean(&per_alpha).expect("sweep is non-empty");
    SweepResult {
        mean,
        per_alpha,
        match_at_half,
    }
}

/// HOTA components averaged over the threshold sweep.
pub fn hota_sweep(gt_tracks: &[Track], pred_tracks: &[Track]) -> HotaComponents {
    evaluate_sweep(gt_tracks, pred_tracks).mean
}
