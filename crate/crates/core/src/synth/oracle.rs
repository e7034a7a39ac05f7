//! Brute-force reference implementations.
//!
//! Slow and written without the engine's helpers: per-frame matchings are
//! found by enumerating every injective assignment, candidate ranks are found
//! by counting, and NMS is quadratic. Floating-point reductions follow the
//! same documented order as the engine so results compare with `==`:
//!
//! * association sums run over (gt, pred) pairs in ascending id order, each
//!   pair contributing `tpa * (tpa / denominator)`;
//! * LocA sums IoU frame by frame, gt ids ascending within a frame;
//! * sweep means add thresholds in ascending order, then divide by 19;
//! * temporal means add pairs in input order, then divide by the pair count.
//!
//! When two assignments tie exactly on (cardinality, score) the oracle keeps
//! the lexicographically smallest list of (gt, pred) pairs. The engine's
//! solver does not promise that, so cross-checks use inputs where exact ties
//! have probability zero.

use std::collections::{BTreeMap, BTreeSet};

use crate::id_mapping::TemporalPair;
use crate::model::{
    BoundingBox, Frame, HotaComponents, ScoredSegment, Tau, TemporalMetrics, TemporalSegment,
    Track, TrackId,
};

pub const ORACLE_MAX_TRACKS: usize = 4;
pub const ORACLE_MAX_FRAMES: usize = 10;

const CUTOFFS: [usize; 3] = [1, 5, 10];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("{side} side has {count} tracks, oracle handles at most {ORACLE_MAX_TRACKS}")]
    TooManyTracks { side: &'static str, count: usize },
    #[error("{0} frames, oracle handles at most {ORACLE_MAX_FRAMES}")]
    TooManyFrames(usize),
    #[error("NMS threshold {0} outside [0, 1]")]
    BadThreshold(f64),
    #[error("no pairs")]
    NoPairs,
}

fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let (ax2, ay2) = (a.x() + a.w(), a.y() + a.h());
    let (bx2, by2) = (b.x() + b.w(), b.y() + b.h());
    let iw = ax2.min(bx2) - a.x().max(b.x());
    let ih = ay2.min(by2) - a.y().max(b.y());
    if iw <= 0.0 || ih <= 0.0 {
        return 0.0;
    }
    let inter = iw * ih;
    let v = inter / (a.w() * a.h() + b.w() * b.h() - inter);
    v.clamp(0.0, 1.0)
}

type Boxes = BTreeMap<Frame, BTreeMap<TrackId, BoundingBox>>;

fn by_frame(tracks: &[Track]) -> Boxes {
    let mut out: Boxes = BTreeMap::new();
    for t in tracks {
        for d in t.detections() {
            out.entry(d.frame())
                .or_default()
                .insert(t.track_id(), *d.bbox());
        }
    }
    out
}

fn frames_of(tracks: &[Track]) -> BTreeMap<TrackId, BTreeSet<Frame>> {
    tracks
        .iter()
        .map(|t| {
            (
                t.track_id(),
                t.detections().iter().map(|d| d.frame()).collect(),
            )
        })
        .collect()
}

#[derive(Clone)]
struct Candidate {
    pairs: Vec<(TrackId, TrackId)>,
    score: f64,
}

/// Every injective partial map from `gts` into `preds` over feasible edges.
fn enumerate(
    gts: &[TrackId],
    preds: &[TrackId],
    feasible: &dyn Fn(TrackId, TrackId) -> bool,
    edge: &dyn Fn(TrackId, TrackId) -> f64,
    used: &mut Vec<TrackId>,
    current: &mut Vec<(TrackId, TrackId)>,
    out: &mut Vec<Candidate>,
) {
    let Some((&g, rest)) = gts.split_first() else {
        let score = current.iter().map(|&(g, p)| edge(g, p)).sum();
        out.push(Candidate {
            pairs: current.clone(),
            score,
        });
        return;
    };
    enumerate(rest, preds, feasible, edge, used, current, out);
    for &p in preds {
        if used.contains(&p) || !feasible(g, p) {
            continue;
        }
        used.push(p);
        current.push((g, p));
        enumerate(rest, preds, feasible, edge, used, current, out);
        current.pop();
        used.pop();
    }
}

fn best_assignment(candidates: Vec<Candidate>) -> Vec<(TrackId, TrackId)> {
    let mut best: Option<Candidate> = None;
    for c in candidates {
        let better = match &best {
            None => true,
            Some(b) => {
                (c.pairs.len(), c.score) > (b.pairs.len(), b.score)
                    || (c.pairs.len() == b.pairs.len() && c.score == b.score && c.pairs < b.pairs)
            }
        };
        if better {
            best = Some(c);
        }
    }
    best.map(|c| c.pairs).unwrap_or_default()
}

fn components_at(
    gt_boxes: &Boxes,
    pred_boxes: &Boxes,
    gt_frames: &BTreeMap<TrackId, BTreeSet<Frame>>,
    pred_frames: &BTreeMap<TrackId, BTreeSet<Frame>>,
    all_frames: &BTreeSet<Frame>,
    alpha: f64,
) -> HotaComponents {
    let empty = BTreeMap::new();
    let pair_iou = |f: Frame, g: TrackId, p: TrackId| -> Option<f64> {
        let gb = gt_boxes.get(&f)?.get(&g)?;
        let pb = pred_boxes.get(&f)?.get(&p)?;
        Some(iou(gb, pb))
    };

    // alignment: frames with IoU >= alpha over the union of the two frame sets
    let mut align: BTreeMap<(TrackId, TrackId), f64> = BTreeMap::new();
    for (g, gf) in gt_frames {
        for (p, pf) in pred_frames {
            let hits = gf
                .intersection(pf)
                .filter(|&&f| pair_iou(f, *g, *p).is_some_and(|v| v >= alpha))
                .count();
            let union = gf.union(pf).count();
            let a = if hits == 0 {
                0.0
            } else {
                hits as f64 / union as f64
            };
            align.insert((*g, *p), a);
        }
    }

    let mut tp = 0u64;
    let mut fn_ = 0u64;
    let mut fp = 0u64;
    let mut loc_sum = 0.0;
    let mut pair_tp: BTreeMap<(TrackId, TrackId), u64> = BTreeMap::new();
    for &f in all_frames {
        let gmap = gt_boxes.get(&f).unwrap_or(&empty);
        let pmap = pred_boxes.get(&f).unwrap_or(&empty);
        let gs: Vec<TrackId> = gmap.keys().copied().collect();
        let ps: Vec<TrackId> = pmap.keys().copied().collect();
        let feasible = |g: TrackId, p: TrackId| iou(&gmap[&g], &pmap[&p]) >= alpha;
        let edge = |g: TrackId, p: TrackId| align[&(g, p)] + 1e-4 * iou(&gmap[&g], &pmap[&p]);
        let mut all = Vec::new();
        enumerate(
            &gs,
            &ps,
            &feasible,
            &edge,
            &mut Vec::new(),
            &mut Vec::new(),
            &mut all,
        );
        let mut chosen = best_assignment(all);
        chosen.sort();
        tp += chosen.len() as u64;
        fn_ += (gs.len() - chosen.len()) as u64;
        fp += (ps.len() - chosen.len()) as u64;
        for &(g, p) in &chosen {
            loc_sum += iou(&gmap[&g], &pmap[&p]);
            *pair_tp.entry((g, p)).or_default() += 1;
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
            tp: 0.0,
            fn_: 0.0,
            fp: 0.0,
        };
    }
    let div = |n: u64, d: u64| if d == 0 { 0.0 } else { n as f64 / d as f64 };
    let det_a = div(tp, tp + fn_ + fp);
    let (mut ass_a, mut ass_re, mut ass_pr, mut loc_a) = (0.0, 0.0, 0.0, 0.0);
    if tp > 0 {
        let (mut a, mut r, mut p_sum) = (0.0, 0.0, 0.0);
        for (&(g, p), &tpa) in &pair_tp {
            let gl = gt_frames[&g].len() as u64;
            let pl = pred_frames[&p].len() as u64;
            let fna = gl - tpa;
            let fpa = pl - tpa;
            let w = tpa as f64;
            a += w * (w / (tpa + fna + fpa) as f64);
            r += w * (w / (tpa + fna) as f64);
            p_sum += w * (w / (tpa + fpa) as f64);
        }
        let t = tp as f64;
        ass_a = a / t;
        ass_re = r / t;
        ass_pr = p_sum / t;
        loc_a = loc_sum / t;
    }
    HotaComponents {
        hota: (det_a * ass_a).sqrt(),
        det_a,
        ass_a,
        det_re: div(tp, tp + fn_),
        det_pr: div(tp, tp + fp),
        ass_re,
        ass_pr,
        loc_a,
        tp: tp as f64,
        fn_: fn_ as f64,
        fp: fp as f64,
    }
}

/// HOTA components averaged over alpha = 1/20 .. 19/20, by exhaustive search.
pub fn oracle_hota(gt: &[Track], pred: &[Track]) -> Result<HotaComponents, OracleError> {
    for (side, tracks) in [("gt", gt), ("pred", pred)] {
        if tracks.len() > ORACLE_MAX_TRACKS {
            return Err(OracleError::TooManyTracks {
                side,
                count: tracks.len(),
            });
        }
    }
    let gt_boxes = by_frame(gt);
    let pred_boxes = by_frame(pred);
    let all_frames: BTreeSet<Frame> = gt_boxes.keys().chain(pred_boxes.keys()).copied().collect();
    if all_frames.len() > ORACLE_MAX_FRAMES {
        return Err(OracleError::TooManyFrames(all_frames.len()));
    }
    let gt_frames = frames_of(gt);
    let pred_frames = frames_of(pred);

    let mut acc = [0.0f64; 11];
    for k in 1..=19u32 {
        let alpha = f64::from(k) / 20.0;
        let c = components_at(
            &gt_boxes,
            &pred_boxes,
            &gt_frames,
            &pred_frames,
            &all_frames,
            alpha,
        );
        let vals = [
            c.hota, c.det_a, c.ass_a, c.det_re, c.det_pr, c.ass_re, c.ass_pr, c.loc_a, c.tp, c.fn_,
            c.fp,
        ];
        for (a, v) in acc.iter_mut().zip(vals) {
            *a += v;
        }
    }
    let m = acc.map(|a| a / 19.0);
    Ok(HotaComponents {
        hota: m[0],
        det_a: m[1],
        ass_a: m[2],
        det_re: m[3],
        det_pr: m[4],
        ass_re: m[5],
        ass_pr: m[6],
        loc_a: m[7],
        tp: m[8],
        fn_: m[9],
        fp: m[10],
    })
}

fn seg_iou(a: &TemporalSegment, b: &TemporalSegment) -> f64 {
    let inter = (i64::from(a.end().min(b.end())) - i64::from(a.start().max(b.start())) + 1).max(0);
    let len = |s: &TemporalSegment| i64::from(s.end()) - i64::from(s.start()) + 1;
    inter as f64 / (len(a) + len(b) - inter) as f64
}

fn precedes(a: &ScoredSegment, ai: usize, b: &ScoredSegment, bi: usize) -> bool {
    let key = |c: &ScoredSegment, i: usize| (c.segment().start(), c.segment().end(), i);
    a.score() > b.score() || (a.score() == b.score() && key(a, ai) < key(b, bi))
}

/// Candidates in rank order, found by counting how many precede each one.
fn ranked(cands: &[ScoredSegment]) -> Vec<ScoredSegment> {
    let mut out = vec![None; cands.len()];
    for (i, c) in cands.iter().enumerate() {
        let rank = cands
            .iter()
            .enumerate()
            .filter(|(j, o)| precedes(o, *j, c, i))
            .count();
        out[rank] = Some(*c);
    }
    out.into_iter()
        .map(|c| c.expect("ranks are a permutation"))
        .collect()
}

fn oracle_ap(gts: &[TemporalSegment], ranked: &[ScoredSegment], tau: f64) -> f64 {
    let mut claimed = vec![false; gts.len()];
    let mut hits = 0.0;
    let mut sum = 0.0;
    for (r, c) in ranked.iter().enumerate() {
        let mut best: Option<usize> = None;
        for (gi, g) in gts.iter().enumerate() {
            let v = seg_iou(c.segment(), g);
            if !claimed[gi] && v >= tau && best.is_none_or(|b| v > seg_iou(c.segment(), &gts[b])) {
                best = Some(gi);
            }
        }
        if let Some(gi) = best {
            claimed[gi] = true;
            hits += 1.0;
            sum += hits / (r + 1) as f64;
        }
    }
    sum / gts.len() as f64
}

/// Temporal metrics at the default thresholds by direct enumeration.
pub fn oracle_temporal(
    pairs: &[TemporalPair],
    nms: Option<f64>,
) -> Result<TemporalMetrics, OracleError> {
    if pairs.is_empty() {
        return Err(OracleError::NoPairs);
    }
    if let Some(t) = nms {
        if !(0.0..=1.0).contains(&t) {
            return Err(OracleError::BadThreshold(t));
        }
    }
    let lists: Vec<Vec<ScoredSegment>> = pairs
        .iter()
        .map(|p| {
            let r = ranked(p.predictions());
            match nms {
                None => r,
                Some(t) => {
                    let mut kept: Vec<ScoredSegment> = Vec::new();
                    for c in r {
                        if kept.iter().all(|k| seg_iou(k.segment(), c.segment()) <= t) {
                            kept.push(c);
                        }
                    }
                    kept
                }
            }
        })
        .collect();

    let n = pairs.len() as f64;
    let taus = Tau::defaults();
    let mut out = TemporalMetrics::constant(&taus, 0.0);
    for tau in &taus {
        let tv = tau.value();
        for (k, map) in CUTOFFS.iter().zip([&mut out.r1, &mut out.r5, &mut out.r10]) {
            let mut hits = 0usize;
            for (p, list) in pairs.iter().zip(&lists) {
                let hit = list
                    .iter()
                    .take(*k)
                    .any(|c| p.gt_segments.iter().any(|g| seg_iou(c.segment(), g) >= tv));
                if hit {
                    hits += 1;
                }
            }
            map.insert(*tau, hits as f64 / n);
        }
        let mut ap_sum = 0.0;
        for (p, list) in pairs.iter().zip(&lists) {
            ap_sum += oracle_ap(&p.gt_segments, list, tv);
        }
        out.map_at.insert(*tau, ap_sum / n);
    }
    let mut miou_sum = 0.0;
    for (p, list) in pairs.iter().zip(&lists) {
        if let Some(top) = list.first() {
            let mut best = 0.0;
            for g in &p.gt_segments {
                best = f64::max(best, seg_iou(top.segment(), g));
            }
            miou_sum += best;
        }
    }
    out.miou = miou_sum / n;
    Ok(out)
}
