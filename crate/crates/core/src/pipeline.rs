//! End-to-end evaluation of datasets: spatial sweep per query, identity
//! mapping, pooled temporal metrics, then cross-dataset aggregation.

use rayon::prelude::*;

use crate::id_mapping::{build_id_map, build_temporal_pairs, IdMap, TemporalPair};
use crate::ingest::{validate_split, DatasetSplit, Diagnostic, DiagnosticKind};
use crate::model::{HotaComponents, Tau};
use crate::report::{DatasetReport, FinalReport, ReportError};
use crate::spatial::{evaluate_sweep, query_ground_truth};
use crate::temporal::{evaluate_temporal_at, TemporalError};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("{dataset}: {} validation error(s), first: {}", .errors.len(), .errors[0])]
    Invalid {
        dataset: String,
        errors: Vec<Diagnostic>,
    },
    #[error("{0}: no queries to evaluate")]
    NoQueries(String),
    #[error("{dataset}: {source}")]
    Temporal {
        dataset: String,
        #[source]
        source: TemporalError,
    },
    #[error(transparent)]
    Report(#[from] ReportError),
}

struct QueryOutcome {
    spatial: HotaComponents,
    pairs: Vec<TemporalPair>,
    notes: Vec<Diagnostic>,
}

/// Evaluates one dataset. Queries are visited video by video (ascending id)
/// in file order, and temporal pairs are pooled in that order.
pub fn evaluate_split(
    split: &DatasetSplit,
    nms_threshold: Option<f64>,
    taus: &[Tau],
) -> Result<(DatasetReport, Vec<Diagnostic>), PipelineError> {
    let mut diagnostics = validate_split(split);
    let errors: Vec<Diagnostic> = diagnostics
        .iter()
        .filter(|d| d.is_error())
        .cloned()
        .collect();
    if !errors.is_empty() {
        return Err(PipelineError::Invalid {
            dataset: split.name.clone(),
            errors,
        });
    }

    let jobs: Vec<_> = split
        .bundle
        .videos
        .iter()
        .flat_map(|(vid, video)| video.queries.iter().map(move |q| (vid, video, q)))
        .collect();
    if jobs.is_empty() {
        return Err(PipelineError::NoQueries(split.name.clone()));
    }

    let outcomes: Vec<QueryOutcome> = jobs
        .par_iter()
        .map(|(vid, video, q)| {
            let pred = split.prediction_for(vid, q.query_id());
            let mut notes = Vec::new();
            let (spatial, id_map) = match pred {
                Some(p) => {
                    let sweep = evaluate_sweep(&query_ground_truth(video, q), p.tracks());
                    (sweep.mean, build_id_map(&sweep.match_at_half))
                }
                None => {
                    notes.push(Diagnostic::warning(
                        DiagnosticKind::MissingPrediction,
                        format!("{}/{vid} query {} has no prediction; scored 0", split.name, q.query_id()),
                    ));
                    (HotaComponents::ZERO, IdMap::default())
                }
            };
            for (p, gts) in id_map.shared_winners() {
                notes.push(Diagnostic::warning(
                    DiagnosticKind::SharedPredictedIdentity,
                    format!(
                        "{}/{vid} query {}: predicted track {p} is the majority match of gt tracks {gts:?}",
                        split.name,
                        q.query_id()
                    ),
                ));
            }
            QueryOutcome {
                spatial,
                pairs: build_temporal_pairs(&id_map, q, pred),
                notes,
            }
        })
        .collect();

    let spatial = HotaComponents::mean(outcomes.iter().map(|o| &o.spatial)).expect("queries exist");
    let mut pairs = Vec::new();
    for o in outcomes {
        pairs.extend(o.pairs);
        diagnostics.extend(o.notes);
    }
    let temporal = evaluate_temporal_at(&pairs, nms_threshold, taus).map_err(|source| {
        PipelineError::Temporal {
            dataset: split.name.clone(),
            source,
        }
    })?;
    log::debug!(
        "{}: {} queries, {} referents",
        split.name,
        jobs.len(),
        pairs.len()
    );
    Ok((
        DatasetReport {
            dataset: split.name.clone(),
            spatial,
            temporal,
            query_count: jobs.len(),
            referent_count: pairs.len(),
        },
        diagnostics,
    ))
}

/// Evaluates every split and aggregates them into the final report.
pub fn evaluate_all(
    splits: &[DatasetSplit],
    nms_threshold: Option<f64>,
    taus: &[Tau],
) -> Result<(FinalReport, Vec<Diagnostic>), PipelineError> {
    let mut reports = Vec::with_capacity(splits.len());
    let mut diagnostics = Vec::new();
    for s in splits {
        let (r, d) = evaluate_split(s, nms_threshold, taus)?;
        reports.push(r);
        diagnostics.extend(d);
    }
    Ok((FinalReport::new(reports)?, diagnostics))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_split, ScenarioSpec};

    fn splits(spec: &ScenarioSpec) -> Vec<DatasetSplit> {
        generate_split(spec, &["mot17", "ovis"], 3)
            .unwrap()
            .into_iter()
            .map(|(name, bundle, predictions)| DatasetSplit {
                name,
                bundle,
                predictions,
            })
            .collect()
    }

    #[test]
    fn perfect_predictions_score_one() {
        let s = splits(&ScenarioSpec::default());
        let (report, diags) = evaluate_all(&s, Some(0.7), &Tau::defaults()).unwrap();
        assert!(diags.is_empty(), "{diags:?}");
        assert_eq!(report.datasets[0].dataset, "ovis");
        assert_eq!(report.m_hiou, 1.0);
        assert_eq!(report.mean.spatial.hota, 1.0);
        assert!(report.mean.temporal.map_at.values().all(|v| *v == 1.0));
    }

    #[test]
    fn missing_predictions_score_zero() {
        let mut s = splits(&ScenarioSpec::default());
        for split in &mut s {
            split.predictions.clear();
        }
        let (report, diags) = evaluate_all(&s, None, &Tau::defaults()).unwrap();
        assert_eq!(report.m_hiou, 0.0);
        assert!(diags
            .iter()
            .all(|d| d.kind == DiagnosticKind::MissingPrediction));
    }

    #[test]
    fn empty_dataset_is_an_error() {
        let split = DatasetSplit {
            name: "ovis".into(),
            bundle: Default::default(),
            predictions: vec![],
        };
        assert!(matches!(
            evaluate_split(&split, None, &Tau::defaults()),
            Err(PipelineError::NoQueries(_))
        ));
    }
}
