use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::{
    csv, json, DatasetSplit, Diagnostic, GroundTruthBundle, IngestError, VideoGroundTruth,
};
use crate::model::PredictionSet;

pub const GT_TRACKS_FILE: &str = "gt.txt";
pub const QUERIES_FILE: &str = "queries.json";
pub const PRED_TRACKS_FILE: &str = "pred.txt";
pub const PRED_TEMPORAL_FILE: &str = "pred_temporal.json";

/// Sorted names of the subdirectories of `dir`.
fn subdirs(dir: &Path) -> Result<Vec<String>, IngestError> {
    let mut names = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| IngestError::io(dir, e))? {
        let entry = entry.map_err(|e| IngestError::io(dir, e))?;
        let ft = entry
            .file_type()
            .map_err(|e| IngestError::io(&entry.path(), e))?;
        if ft.is_dir() {
            names.push(entry.file_name().to_string_lossy().into_owned());
        }
    }
    names.sort();
    Ok(names)
}

fn load_video(dir: &Path, video_id: &str) -> Result<VideoGroundTruth, IngestError> {
    let mut tracks = csv::parse_track_csv(&dir.join(GT_TRACKS_FILE), false)?;
    tracks.sort_by_key(|t| t.track_id());
    let qpath = dir.join(QUERIES_FILE);
    let (declared, queries) = json::parse_query_json(&qpath)?;
    if declared != video_id {
        return Err(IngestError::json(
            &qpath,
            "video_id".into(),
            format!("video_id {declared:?} does not match directory {video_id:?}"),
        ));
    }
    let mut seen = BTreeSet::new();
    for (i, q) in queries.iter().enumerate() {
        if !seen.insert(q.query_id()) {
            return Err(IngestError::json(
                &qpath,
                format!("queries[{i}].query_id"),
                format!("duplicate query_id {:?}", q.query_id()),
            ));
        }
    }
    Ok(VideoGroundTruth { tracks, queries })
}

/// Loads every video under `<gt_root>/<dataset>/`.
pub fn load_ground_truth(gt_root: &Path, dataset: &str) -> Result<GroundTruthBundle, IngestError> {
    let root = gt_root.join(dataset);
    let names = subdirs(&root)?;
    let loaded: Vec<Result<(String, VideoGroundTruth), IngestError>> = names
        .into_par_iter()
        .map(|name| {
            let video = load_video(&root.join(&name), &name)?;
            Ok((name, video))
        })
        .collect();
    let mut bundle = GroundTruthBundle::default();
    for r in loaded {
        let (name, video) = r?;
        bundle.videos.insert(name, video);
    }
    Ok(bundle)
}

/// Loads every prediction directory under `<pred_root>/<dataset>/`. A missing
/// dataset directory yields no predictions.
pub fn load_predictions(
    pred_root: &Path,
    dataset: &str,
) -> Result<(Vec<PredictionSet>, Vec<Diagnostic>), IngestError> {
    let root = pred_root.join(dataset);
    if !root.is_dir() {
        return Ok((Vec::new(), Vec::new()));
    }
    let mut jobs: Vec<(String, String, PathBuf)> = Vec::new();
    for video in subdirs(&root)? {
        let vdir = root.join(&video);
        for query in subdirs(&vdir)? {
            let qdir = vdir.join(&query);
            jobs.push((video.clone(), query, qdir));
        }
    }
    let loaded: Vec<Result<(PredictionSet, Vec<Diagnostic>), IngestError>> = jobs
        .into_par_iter()
        .map(|(video, query, qdir)| {
            let tpath = qdir.join(PRED_TEMPORAL_FILE);
            let (set, warnings) =
                json::parse_prediction_bundle(&qdir.join(PRED_TRACKS_FILE), &tpath)?;
            if set.video_id() != video {
                return Err(IngestError::json(
                    &tpath,
                    "video_id".into(),
                    format!(
                        "video_id {:?} does not match directory {video:?}",
                        set.video_id()
                    ),
                ));
            }
            if set.query_id() != query {
                return Err(IngestError::json(
                    &tpath,
                    "query_id".into(),
                    format!(
                        "query_id {:?} does not match directory {query:?}",
                        set.query_id()
                    ),
                ));
            }
            Ok((set, warnings))
        })
        .collect();
    let mut sets = Vec::with_capacity(loaded.len());
    let mut diags = Vec::new();
    for r in loaded {
        let (set, w) = r?;
        sets.push(set);
        diags.extend(w);
    }
    Ok((sets, diags))
}

/// Loads ground truth and, when `pred_root` is given, predictions for one dataset.
/// Returned diagnostics are load-time warnings only; see [`super::validate_split`].
pub fn load_split(
    gt_root: &Path,
    pred_root: Option<&Path>,
    dataset: &str,
) -> Result<(DatasetSplit, Vec<Diagnostic>), IngestError> {
    let bundle = load_ground_truth(gt_root, dataset)?;
    let (predictions, diags) = match pred_root {
        Some(p) => load_predictions(p, dataset)?,
        None => (Vec::new(), Vec::new()),
    };
    Ok((
        DatasetSplit {
            name: dataset.to_string(),
            bundle,
            predictions,
        },
        diags,
    ))
}

fn write_file(path: &Path, contents: &str) -> Result<(), IngestError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| IngestError::io(parent, e))?;
    }
    std::fs::write(path, contents).map_err(|e| IngestError::io(path, e))
}

/// Writes `bundle` under `<gt_root>/<dataset>/` in the ingest formats.
pub fn write_ground_truth(
    gt_root: &Path,
    dataset: &str,
    bundle: &GroundTruthBundle,
) -> Result<(), IngestError> {
    for (video_id, video) in &bundle.videos {
        let dir = gt_root.join(dataset).join(video_id);
        write_file(
            &dir.join(GT_TRACKS_FILE),
            &csv::write_track_csv(&video.tracks, false),
        )?;
        write_file(
            &dir.join(QUERIES_FILE),
            &json::write_query_json(video_id, &video.queries),
        )?;
    }
    Ok(())
}

/// Writes each prediction set under `<pred_root>/<dataset>/<video_id>/<query_id>/`.
pub fn write_predictions(
    pred_root: &Path,
    dataset: &str,
    predictions: &[PredictionSet],
) -> Result<(), IngestError> {
    for set in predictions {
        let dir = pred_root
            .join(dataset)
            .join(set.video_id())
            .join(set.query_id());
        write_file(
            &dir.join(PRED_TRACKS_FILE),
            &csv::write_track_csv(set.tracks(), true),
        )?;
        write_file(
            &dir.join(PRED_TEMPORAL_FILE),
            &json::write_prediction_temporal_json(set),
        )?;
    }
    Ok(())
}
