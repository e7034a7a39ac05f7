use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::assignment::max_weight_assignment;
use super::box_iou;
use crate::model::{BoundingBox, Frame, Track, TrackId};

/// Weight of IoU relative to alignment in the per-frame matching objective.
pub const IOU_TIEBREAK: f64 = 1e-4;

/// Jaccard alignment over frames for every (gt, pred) pair at one threshold:
/// frames where the pair's IoU reaches the threshold, over frames where
/// either track is present. Absent pairs have alignment 0.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PairAlignment {
    pub alpha: f64,
    pub values: BTreeMap<(TrackId, TrackId), f64>,
}

impl PairAlignment {
    pub fn get(&self, gt: TrackId, pred: TrackId) -> f64 {
        self.values.get(&(gt, pred)).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub gt_id: TrackId,
    pub pred_id: TrackId,
    pub iou: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FrameMatch {
    pub frame: Frame,
    /// Sorted by gt id.
    pub matched: Vec<MatchedPair>,
    pub unmatched_gt: Vec<TrackId>,
    pub unmatched_pred: Vec<TrackId>,
}

/// Per-frame one-to-one matching at a single localisation threshold.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AlphaMatchResult {
    pub alpha: f64,
    /// Every frame in which a gt or predicted detection appears, ascending.
    pub frames: Vec<FrameMatch>,
}

struct FrameEntry {
    frame: Frame,
    /// (track index, box), ascending by index
    gts: Vec<(usize, BoundingBox)>,
    preds: Vec<(usize, BoundingBox)>,
    /// row-major gts x preds
    iou: Vec<f64>,
}

/// Detections of one scope regrouped by frame, with every IoU computed once.
pub(crate) struct FrameTable {
    gt_ids: Vec<TrackId>,
    pred_ids: Vec<TrackId>,
    gt_len: Vec<u32>,
    pred_len: Vec<u32>,
    /// row-major gt x pred: frames where both tracks are present
    cooccur: Vec<u32>,
    frames: Vec<FrameEntry>,
}

impl FrameTable {
    pub(crate) fn new(gt_tracks: &[Track], pred_tracks: &[Track]) -> Self {
        let mut gts: Vec<&Track> = gt_tracks.iter().collect();
        let mut preds: Vec<&Track> = pred_tracks.iter().collect();
        gts.sort_by_key(|t| t.track_id());
        preds.sort_by_key(|t| t.track_id());

        type Slot = (Vec<(usize, BoundingBox)>, Vec<(usize, BoundingBox)>);
        let mut by_frame: BTreeMap<Frame, Slot> = BTreeMap::new();
        for (i, t) in gts.iter().enumerate() {
            for d in t.detections() {
                by_frame
                    .entry(d.frame())
                    .or_default()
                    .0
                    .push((i, *d.bbox()));
            }
        }
        for (j, t) in preds.iter().enumerate() {
            for d in t.detections() {
                by_frame
                    .entry(d.frame())
                    .or_default()
                    .1
                    .push((j, *d.bbox()));
            }
        }

        let np = preds.len();
        let mut cooccur = vec![0u32; gts.len() * np];
        let frames = by_frame
            .into_iter()
            .map(|(frame, (g, p))| {
                let mut iou = Vec::with_capacity(g.len() * p.len());
                for (gi, gb) in &g {
                    for (pj, pb) in &p {
                        cooccur[gi * np + pj] += 1;
                        iou.push(box_iou(gb, pb));
                    }
                }
                FrameEntry {
                    frame,
                    gts: g,
                    preds: p,
                    iou,
                }
            })
            .collect();

        Self {
            gt_ids: gts.iter().map(|t| t.track_id()).collect(),
            pred_ids: preds.iter().map(|t| t.track_id()).collect(),
            gt_len: gts.iter().map(|t| t.len() as u32).collect(),
            pred_len: preds.iter().map(|t| t.len() as u32).collect(),
            cooccur,
            frames,
        }
    }

    /// Dense row-major gt x pred alignment at `alpha`.
    pub(crate) fn alignment(&self, alpha: f64) -> Vec<f64> {
        let np = self.pred_ids.len();
        let mut hits = vec![0u32; self.gt_ids.len() * np];
        for f in &self.frames {
            let cols = f.preds.len();
            for (r, (gi, _)) in f.gts.iter().enumerate() {
                for (c, (pj, _)) in f.preds.iter().enumerate() {
                    if f.iou[r * cols + c] >= alpha {
                        hits[gi * np + pj] += 1;
                    }
                }
            }
        }
        hits.iter()
            .enumerate()
            .map(|(k, &h)| {
                if h == 0 {
                    return 0.0;
                }
                let (gi, pj) = (k / np, k % np);
                let union = self.gt_len[gi] + self.pred_len[pj] - self.cooccur[k];
                f64::from(h) / f64::from(union)
            })
            .collect()
    }

    pub(crate) fn alignment_map(&self, alpha: f64, dense: &[f64]) -> PairAlignment {
        let np = self.pred_ids.len();
        let values = dense
            .iter()
            .enumerate()
            .filter(|(_, &a)| a > 0.0)
            .map(|(k, &a)| ((self.gt_ids[k / np], self.pred_ids[k % np]), a))
            .collect();
        PairAlignment { alpha, values }
    }

    pub(crate) fn dense_from_map(&self, alignment: &PairAlignment) -> Vec<f64> {
        let mut dense = Vec::with_capacity(self.gt_ids.len() * self.pred_ids.len());
        for g in &self.gt_ids {
            for p in &self.pred_ids {
                dense.push(alignment.get(*g, *p));
            }
        }
        dense
    }

    pub(crate) fn match_frames(&self, alpha: f64, alignment: &[f64]) -> AlphaMatchResult {
        let np = self.pred_ids.len();
        let frames = self
            .frames
            .iter()
            .map(|f| {
                let rows = f.gts.len();
                let cols = f.preds.len();
                let big = rows.min(cols) as f64 * (1.0 + IOU_TIEBREAK) + 1.0;
                let weights: Vec<f64> = (0..rows * cols)
                    .map(|k| {
                        let iou = f.iou[k];
                        if iou >= alpha {
                            let (gi, pj) = (f.gts[k / cols].0, f.preds[k % cols].0);
                            big + alignment[gi * np + pj] + IOU_TIEBREAK * iou
                        } else {
                            0.0
                        }
                    })
                    .collect();
                let assigned = max_weight_assignment(&weights, rows, cols);
                let mut gt_used = vec![false; rows];
                let mut pred_used = vec![false; cols];
                let matched = assigned
                    .iter()
                    .map(|&(r, c)| {
                        gt_used[r] = true;
                        pred_used[c] = true;
                        MatchedPair {
                            gt_id: self.gt_ids[f.gts[r].0],
                            pred_id: self.pred_ids[f.preds[c].0],
                            iou: f.iou[r * cols + c],
                        }
                    })
                    .collect();
                FrameMatch {
                    frame: f.frame,
                    matched,
                    unmatched_gt: (0..rows)
                        .filter(|&r| !gt_used[r])
                        .map(|r| self.gt_ids[f.gts[r].0])
                        .collect(),
                    unmatched_pred: (0..cols)
                        .filter(|&c| !pred_used[c])
                        .map(|c| self.pred_ids[f.preds[c].0])
                        .collect(),
                }
            })
            .collect();
        AlphaMatchResult { alpha, frames }
    }
}

/// Alignment of every (gt, pred) pair at `alpha`.
pub fn global_alignment(gt_tracks: &[Track], pred_tracks: &[Track], alpha: f64) -> PairAlignment {
    let table = FrameTable::new(gt_tracks, pred_tracks);
    let dense = table.alignment(alpha);
    table.alignment_map(alpha, &dense)
}

/// Per frame, a maximum-cardinality one-to-one matching among pairs with
/// IoU at least `alpha`; among those, the one maximising
/// `sum(alignment + IOU_TIEBREAK * iou)`.
pub fn match_at_alpha(
    gt_tracks: &[Track],
    pred_tracks: &[Track],
    alpha: f64,
    alignment: &PairAlignment,
) -> AlphaMatchResult {
    let table = FrameTable::new(gt_tracks, pred_tracks);
    let dense = table.dense_from_map(alignment);
    table.match_frames(alpha, &dense)
}

impl AlphaMatchResult {
    /// Checks the structural invariants: matched IoU reaches alpha and every
    /// id appears at most once per frame.
    pub fn is_consistent(&self) -> bool {
        self.frames.iter().all(|f| {
            let mut g = BTreeSet::new();
            let mut p = BTreeSet::new();
            f.matched
                .iter()
                .all(|m| m.iou >= self.alpha && g.insert(m.gt_id) && p.insert(m.pred_id))
                && f.unmatched_gt.iter().all(|id| g.insert(*id))
                && f.unmatched_pred.iter().all(|id| p.insert(*id))
        })
    }
}
