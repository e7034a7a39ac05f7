//! Spatial tracking quality: the HOTA family, swept over localisation
//! thresholds and averaged per query.

mod assignment;
mod hota;
mod matching;

use rayon::prelude::*;

pub use self::assignment::max_weight_assignment;
pub use self::hota::{
    alphas, evaluate_sweep, hota_at_alpha, hota_sweep, SweepResult, ALPHA_STEPS, HALF_ALPHA_INDEX,
};
pub use self::matching::{
    global_alignment, match_at_alpha, AlphaMatchResult, FrameMatch, MatchedPair, PairAlignment,
    IOU_TIEBREAK,
};

use crate::ingest::{DatasetSplit, Diagnostic, DiagnosticKind, VideoGroundTruth};
use crate::model::{BoundingBox, HotaComponents, Query, Track};

/// Intersection over union of two boxes; 0 when they do not overlap.
pub fn box_iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let iw = a.right().min(b.right()) - a.x().max(b.x());
    let ih = a.bottom().min(b.bottom()) - a.y().max(b.y());
    if iw <= 0.0 || ih <= 0.0 {
        return 0.0;
    }
    let inter = iw * ih;
    let union = a.area() + b.area() - inter;
    (inter / union).clamp(0.0, 1.0)
}

/// Ground truth for one query: each referent's track restricted to the
/// frames covered by its action segments. Referents without a resolvable
/// track, or with no detection inside their segments, contribute nothing.
pub fn query_ground_truth(video: &VideoGroundTruth, query: &Query) -> Vec<Track> {
    query
        .referents()
        .iter()
        .filter_map(|r| {
            let track = video.track(r.gt_track_id())?;
            let restricted = track.filter_frames(|f| r.covers(f));
            (!restricted.is_empty()).then_some(restricted)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuerySpatial {
    pub video_id: String,
    pub query_id: String,
    pub components: HotaComponents,
    pub has_prediction: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitSpatial {
    pub per_query: Vec<QuerySpatial>,
    /// Unweighted mean over queries.
    pub dataset: HotaComponents,
    pub diagnostics: Vec<Diagnostic>,
}

/// Per-query HOTA over a split and its unweighted mean.
///
/// Every predicted detection of a query takes part in matching, so boxes on
/// non-referent objects (or on referents outside their segments) end up as
/// false positives. Queries without a prediction score zero.
pub fn per_query_hota(split: &DatasetSplit) -> SplitSpatial {
    let jobs: Vec<(&String, &VideoGroundTruth, &Query)> = split
        .bundle
        .videos
        .iter()
        .flat_map(|(vid, video)| video.queries.iter().map(move |q| (vid, video, q)))
        .collect();
    let per_query: Vec<QuerySpatial> = jobs
        .par_iter()
        .map(|(vid, video, q)| {
            let pred = split.prediction_for(vid, q.query_id());
            let components = match pred {
                Some(p) => hota_sweep(&query_ground_truth(video, q), p.tracks()),
                None => HotaComponents::ZERO,
            };
            QuerySpatial {
                video_id: vid.to_string(),
                query_id: q.query_id().to_string(),
                components,
                has_prediction: pred.is_some(),
            }
        })
        .collect();
    let mut diagnostics: Vec<Diagnostic> = per_query
        .iter()
        .filter(|q| !q.has_prediction)
        .map(|q| {
            Diagnostic::warning(
                DiagnosticKind::MissingPrediction,
                format!(
                    "{}/{} query {} has no prediction; scored 0",
                    split.name, q.video_id, q.query_id
                ),
            )
        })
        .collect();
    for p in &split.predictions {
        let known = split
            .bundle
            .videos
            .get(p.video_id())
            .is_some_and(|v| v.queries.iter().any(|q| q.query_id() == p.query_id()));
        if !known {
            diagnostics.push(Diagnostic::warning(
                DiagnosticKind::OrphanPrediction,
                format!(
                    "{}/{} prediction for unknown query_id {:?} skipped",
                    split.name,
                    p.video_id(),
                    p.query_id()
                ),
            ));
        }
    }
    let dataset = HotaComponents::mean(per_query.iter().map(|q| &q.components))
        .unwrap_or(HotaComponents::ZERO);
    SplitSpatial {
        per_query,
        dataset,
        diagnostics,
    }
}
