//! Evaluation of multi-referent spatio-temporal video action grounding.
//!
//! * [`spatial`]: HOTA-family tracking metrics swept over localisation thresholds
//! * [`id_mapping`]: majority-vote mapping of gt tracks to predicted identities
//! * [`temporal`]: R@k, mAP and mIoU of ranked segment candidates
//! * [`report`]: per-dataset and cross-dataset aggregation, m-HIoU, JSON output
//! * [`ingest`]: reading, writing and validating ground truth and predictions
//! * [`pipeline`]: the full evaluation of one or more datasets
//! * [`synth`]: synthetic scenarios and brute-force reference metrics

pub mod id_mapping;
pub mod ingest;
pub mod model;
pub mod numfmt;
pub mod pipeline;
pub mod report;
pub mod spatial;
pub mod synth;
pub mod temporal;

pub use id_mapping::{build_id_map, build_temporal_pairs, IdMap, TemporalPair};
pub use ingest::{DatasetSplit, Diagnostic, DiagnosticKind, GroundTruthBundle, VideoGroundTruth};
pub use model::{
    BoundingBox, Detection, Frame, HotaComponents, ModelError, PredictionSet, Query, Referent,
    ScoredSegment, Tau, TemporalMetrics, TemporalSegment, Track, TrackId,
};
pub use pipeline::{evaluate_all, evaluate_split, PipelineError};
pub use report::{DatasetReport, FinalReport};
pub use spatial::{hota_sweep, per_query_hota};
pub use temporal::{evaluate_temporal, DEFAULT_NMS_THRESHOLD};
