//! Bridges spatial matching to temporal evaluation: each ground-truth track
//! is mapped to the predicted identity it was matched with most often at
//! alpha = 0.5, and that identity's scored segments become its temporal
//! candidates.

use std::collections::BTreeMap;

use crate::model::{PredictionSet, Query, ScoredSegment, TemporalSegment, TrackId};
use crate::spatial::AlphaMatchResult;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IdMap {
    /// gt id -> winning predicted id
    pub mapping: BTreeMap<TrackId, TrackId>,
    /// gt id -> (predicted id -> matched frames)
    pub votes: BTreeMap<TrackId, BTreeMap<TrackId, u64>>,
}

impl IdMap {
    pub fn get(&self, gt: TrackId) -> Option<TrackId> {
        self.mapping.get(&gt).copied()
    }

    /// Predicted ids that won the vote for more than one gt id.
    pub fn shared_winners(&self) -> BTreeMap<TrackId, Vec<TrackId>> {
        let mut by_pred: BTreeMap<TrackId, Vec<TrackId>> = BTreeMap::new();
        for (g, p) in &self.mapping {
            by_pred.entry(*p).or_default().push(*g);
        }
        by_pred.retain(|_, gts| gts.len() > 1);
        by_pred
    }
}

/// Majority vote over the alpha = 0.5 matching. Ties go to the smaller
/// predicted id. A predicted id may win for several gt ids.
pub fn build_id_map(match_at_half: &AlphaMatchResult) -> IdMap {
    let mut votes: BTreeMap<TrackId, BTreeMap<TrackId, u64>> = BTreeMap::new();
    for f in &match_at_half.frames {
        for m in &f.matched {
            *votes
                .entry(m.gt_id)
                .or_default()
                .entry(m.pred_id)
                .or_default() += 1;
        }
    }
    let mapping = votes
        .iter()
        .filter_map(|(g, tally)| {
            // BTreeMap iterates ascending, so the first maximum is the smallest id
            let mut best: Option<(TrackId, u64)> = None;
            for (p, n) in tally {
                if best.is_none_or(|(_, b)| *n > b) {
                    best = Some((*p, *n));
                }
            }
            best.map(|(p, _)| (*g, p))
        })
        .collect();
    IdMap { mapping, votes }
}

/// Ground-truth segments of one referent with the ranked candidates of its
/// mapped predicted track.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalPair {
    pub query_id: String,
    pub gt_track_id: TrackId,
    pub gt_segments: Vec<TemporalSegment>,
    predictions: Vec<ScoredSegment>,
}

impl TemporalPair {
    /// Candidates are sorted by descending score, then ascending start and end.
    pub fn new(
        query_id: impl Into<String>,
        gt_track_id: TrackId,
        gt_segments: Vec<TemporalSegment>,
        mut predictions: Vec<ScoredSegment>,
    ) -> Self {
        predictions.sort_by(|a, b| a.rank_cmp(b));
        Self {
            query_id: query_id.into(),
            gt_track_id,
            gt_segments,
            predictions,
        }
    }

    pub fn predictions(&self) -> &[ScoredSegment] {
        &self.predictions
    }

    pub(crate) fn with_predictions(&self, predictions: Vec<ScoredSegment>) -> Self {
        Self::new(
            self.query_id.clone(),
            self.gt_track_id,
            self.gt_segments.clone(),
            predictions,
        )
    }
}

/// One pair per referent of `query`; referents without a mapped identity,
/// or whose identity has no temporal entry, get an empty candidate list.
pub fn build_temporal_pairs(
    id_map: &IdMap,
    query: &Query,
    preds: Option<&PredictionSet>,
) -> Vec<TemporalPair> {
    query
        .referents()
        .iter()
        .map(|r| {
            let candidates = id_map
                .get(r.gt_track_id())
                .and_then(|p| preds?.temporal().get(&p))
                .cloned()
                .unwrap_or_default();
            TemporalPair::new(
                query.query_id(),
                r.gt_track_id(),
                r.gt_segments().to_vec(),
                candidates,
            )
        })
        .collect()
}
