//! Parsing and validation of ground-truth and prediction files.
//!
//! On-disk layout:
//!
//! ```text
//! <gt_root>/<dataset>/<video_id>/gt.txt                         frame,track_id,x,y,w,h
//! <gt_root>/<dataset>/<video_id>/queries.json
//! <pred_root>/<dataset>/<video_id>/<query_id>/pred.txt          frame,track_id,x,y,w,h,score
//! <pred_root>/<dataset>/<video_id>/<query_id>/pred_temporal.json
//! ```

mod csv;
mod json;
mod layout;
mod stats;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

pub use self::csv::{parse_track_csv, parse_track_csv_str, write_track_csv};
pub use self::json::{
    parse_prediction_bundle, parse_query_json, parse_query_json_str, prediction_from_parts,
    write_prediction_temporal_json, write_query_json,
};
pub use self::layout::{
    load_ground_truth, load_predictions, load_split, write_ground_truth, write_predictions,
    GT_TRACKS_FILE, PRED_TEMPORAL_FILE, PRED_TRACKS_FILE, QUERIES_FILE,
};
pub use self::stats::{compute_stats, BundleStats};

use crate::model::{PredictionSet, Query, Track};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {message} at line {line}{}", path.display(), field.map(|f| format!(" (field {f})")).unwrap_or_default())]
    Line {
        path: PathBuf,
        line: usize,
        field: Option<&'static str>,
        message: String,
    },
    #[error("{}: {message} at {}", path.display(), if json_path.is_empty() { "<root>" } else { json_path.as_str() })]
    Json {
        path: PathBuf,
        json_path: String,
        message: String,
    },
    #[error("{0}")]
    Empty(String),
}

impl IngestError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        IngestError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn line(
        path: &Path,
        line: usize,
        field: Option<&'static str>,
        message: String,
    ) -> Self {
        IngestError::Line {
            path: path.to_path_buf(),
            line,
            field,
            message,
        }
    }

    pub(crate) fn json(path: &Path, json_path: String, message: String) -> Self {
        IngestError::Json {
            path: path.to_path_buf(),
            json_path,
            message,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum DiagnosticKind {
    UnresolvedReferent,
    OrphanPrediction,
    VideoWithoutQueries,
    SegmentPastTrackEnd,
    DanglingTemporalEntry,
    MissingPrediction,
    SharedPredictedIdentity,
}

impl fmt::Display for DiagnosticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DiagnosticKind::UnresolvedReferent => "unresolved referent",
            DiagnosticKind::OrphanPrediction => "orphan prediction",
            DiagnosticKind::VideoWithoutQueries => "video without queries",
            DiagnosticKind::SegmentPastTrackEnd => "segment past track end",
            DiagnosticKind::DanglingTemporalEntry => "dangling temporal entry",
            DiagnosticKind::MissingPrediction => "missing prediction",
            DiagnosticKind::SharedPredictedIdentity => "shared predicted identity",
        })
    }
}

/// A cross-file inconsistency. Errors block evaluation, warnings do not.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Diagnostic {
    pub severity: Severity,
    pub kind: DiagnosticKind,
    pub message: String,
}

impl Diagnostic {
    pub fn warning(kind: DiagnosticKind, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Warning,
            kind,
            message: message.into(),
        }
    }

    pub fn error(kind: DiagnosticKind, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Error,
            kind,
            message: message.into(),
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{sev}: {}: {}", self.kind, self.message)
    }
}

/// Ground truth of one video: every annotated object plus the queries over them.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VideoGroundTruth {
    pub tracks: Vec<Track>,
    pub queries: Vec<Query>,
}

impl VideoGroundTruth {
    pub fn track(&self, id: crate::model::TrackId) -> Option<&Track> {
        self.tracks
            .binary_search_by_key(&id, |t| t.track_id())
            .ok()
            .map(|i| &self.tracks[i])
    }
}

/// Ground truth of a dataset, keyed by video id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroundTruthBundle {
    pub videos: BTreeMap<String, VideoGroundTruth>,
}

/// One dataset's ground truth together with a submission's predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub name: String,
    pub bundle: GroundTruthBundle,
    pub predictions: Vec<PredictionSet>,
}

impl DatasetSplit {
    /// Prediction set for `(video_id, query_id)`, if one was submitted.
    pub fn prediction_for(&self, video_id: &str, query_id: &str) -> Option<&PredictionSet> {
        self.predictions
            .iter()
            .find(|p| p.video_id() == video_id && p.query_id() == query_id)
    }
}

/// Reports every cross-file inconsistency in `split`. An empty result means
/// the split is clean.
pub fn validate_split(split: &DatasetSplit) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let ds = &split.name;
    for (video_id, video) in &split.bundle.videos {
        if video.queries.is_empty() {
            out.push(Diagnostic::warning(
                DiagnosticKind::VideoWithoutQueries,
                format!("{ds}/{video_id} has no queries"),
            ));
        }
        for q in &video.queries {
            for r in q.referents() {
                let Some(track) = video.track(r.gt_track_id()) else {
                    out.push(Diagnostic::error(
                        DiagnosticKind::UnresolvedReferent,
                        format!(
                            "{ds}/{video_id} query {} references track_id {} absent from GT tracks",
                            q.query_id(),
                            r.gt_track_id()
                        ),
                    ));
                    continue;
                };
                let last = track.last_frame().unwrap_or(0);
                for s in r.gt_segments() {
                    if s.end() > last {
                        out.push(Diagnostic::warning(
                            DiagnosticKind::SegmentPastTrackEnd,
                            format!(
                                "{ds}/{video_id} query {} referent {}: segment [{}, {}] extends past last annotated frame {last}",
                                q.query_id(),
                                r.gt_track_id(),
                                s.start(),
                                s.end()
                            ),
                        ));
                    }
                }
            }
        }
    }
    let known: BTreeSet<(&str, &str)> = split
        .bundle
        .videos
        .iter()
        .flat_map(|(v, g)| g.queries.iter().map(move |q| (v.as_str(), q.query_id())))
        .collect();
    for p in &split.predictions {
        if !known.contains(&(p.video_id(), p.query_id())) {
            out.push(Diagnostic::warning(
                DiagnosticKind::OrphanPrediction,
                format!(
                    "{ds}/{} prediction for query_id {:?} with no such GT query",
                    p.video_id(),
                    p.query_id()
                ),
            ));
        }
    }
    out
}
