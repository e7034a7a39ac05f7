//! Query files and predicted temporal candidate files.

use std::collections::BTreeMap;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{Diagnostic, DiagnosticKind, IngestError};
use crate::model::{
    Frame, PredictionSet, Query, Referent, ScoredSegment, TemporalSegment, Track, TrackId,
};

#[derive(Debug, Serialize, Deserialize)]
struct QueryFile {
    video_id: String,
    queries: Vec<QueryEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct QueryEntry {
    query_id: String,
    text: String,
    referents: Vec<ReferentEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ReferentEntry {
    track_id: TrackId,
    segments: Vec<(Frame, Frame)>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TemporalFile {
    query_id: String,
    video_id: String,
    tracks: Vec<TemporalTrackEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TemporalTrackEntry {
    track_id: TrackId,
    segments: Vec<ScoredSegmentEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ScoredSegmentEntry {
    start: Frame,
    end: Frame,
    score: f64,
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, IngestError> {
    let text = std::fs::read_to_string(path).map_err(|e| IngestError::io(path, e))?;
    decode_json(&text, path)
}

fn decode_json<T: DeserializeOwned>(text: &str, path: &Path) -> Result<T, IngestError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let json_path = e.path().to_string();
        IngestError::json(path, json_path, e.into_inner().to_string())
    })
}

fn segment_at(
    path: &Path,
    json_path: String,
    start: Frame,
    end: Frame,
) -> Result<TemporalSegment, IngestError> {
    TemporalSegment::new(start, end).map_err(|e| IngestError::json(path, json_path, e.reason))
}

/// Reads a `queries.json` file.
pub fn parse_query_json(path: &Path) -> Result<(String, Vec<Query>), IngestError> {
    let file: QueryFile = read_json(path)?;
    build_queries(file, path)
}

/// Parses `queries.json` contents; `path` is only used in error messages.
/// Returns the declared video id with its queries.
pub fn parse_query_json_str(text: &str, path: &Path) -> Result<(String, Vec<Query>), IngestError> {
    let file: QueryFile = decode_json(text, path)?;
    build_queries(file, path)
}

fn build_queries(file: QueryFile, path: &Path) -> Result<(String, Vec<Query>), IngestError> {
    let mut queries = Vec::with_capacity(file.queries.len());
    for (qi, q) in file.queries.into_iter().enumerate() {
        if q.referents.is_empty() {
            return Err(IngestError::json(
                path,
                format!("queries[{qi}].referents"),
                "empty referents".into(),
            ));
        }
        let mut referents = Vec::with_capacity(q.referents.len());
        for (ri, r) in q.referents.into_iter().enumerate() {
            let base = format!("queries[{qi}].referents[{ri}]");
            if r.segments.is_empty() {
                return Err(IngestError::json(
                    path,
                    format!("{base}.segments"),
                    "empty segments".into(),
                ));
            }
            let mut segs = Vec::with_capacity(r.segments.len());
            for (si, (s, e)) in r.segments.into_iter().enumerate() {
                segs.push(segment_at(path, format!("{base}.segments[{si}]"), s, e)?);
            }
            let referent = Referent::new(r.track_id, segs)
                .map_err(|e| IngestError::json(path, format!("{base}.segments"), e.reason))?;
            referents.push(referent);
        }
        let query = Query::new(q.query_id, file.video_id.clone(), q.text, referents)
            .map_err(|e| IngestError::json(path, format!("queries[{qi}].referents"), e.reason))?;
        queries.push(query);
    }
    Ok((file.video_id, queries))
}

/// Serializes queries for one video in the `queries.json` shape.
pub fn write_query_json(video_id: &str, queries: &[Query]) -> String {
    let file = QueryFile {
        video_id: video_id.to_string(),
        queries: queries
            .iter()
            .map(|q| QueryEntry {
                query_id: q.query_id().to_string(),
                text: q.text().to_string(),
                referents: q
                    .referents()
                    .iter()
                    .map(|r| ReferentEntry {
                        track_id: r.gt_track_id(),
                        segments: r
                            .gt_segments()
                            .iter()
                            .map(|s| (s.start(), s.end()))
                            .collect(),
                    })
                    .collect(),
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&file).expect("query file serializes");
    s.push('\n');
    s
}

/// Reads a predicted track file and its temporal candidates.
///
/// Temporal entries naming a track absent from the CSV are dropped and
/// reported as warnings.
pub fn parse_prediction_bundle(
    track_csv_path: &Path,
    temporal_json_path: &Path,
) -> Result<(PredictionSet, Vec<Diagnostic>), IngestError> {
    let tracks = super::csv::parse_track_csv(track_csv_path, true)?;
    let text = std::fs::read_to_string(temporal_json_path)
        .map_err(|e| IngestError::io(temporal_json_path, e))?;
    prediction_from_parts(tracks, &text, temporal_json_path)
}

/// Assembles a prediction set from parsed tracks and temporal JSON text.
pub fn prediction_from_parts(
    tracks: Vec<Track>,
    temporal_json: &str,
    path: &Path,
) -> Result<(PredictionSet, Vec<Diagnostic>), IngestError> {
    let file: TemporalFile = decode_json(temporal_json, path)?;
    let mut temporal: BTreeMap<TrackId, Vec<ScoredSegment>> = BTreeMap::new();
    for (ti, t) in file.tracks.into_iter().enumerate() {
        let base = format!("tracks[{ti}]");
        if temporal.contains_key(&t.track_id) {
            return Err(IngestError::json(
                path,
                format!("{base}.track_id"),
                format!("duplicate track_id {}", t.track_id),
            ));
        }
        let mut cands = Vec::with_capacity(t.segments.len());
        for (si, s) in t.segments.into_iter().enumerate() {
            let jp = format!("{base}.segments[{si}]");
            let seg = segment_at(path, jp.clone(), s.start, s.end)?;
            let scored = ScoredSegment::new(seg, s.score)
                .map_err(|e| IngestError::json(path, format!("{jp}.score"), e.reason))?;
            cands.push(scored);
        }
        temporal.insert(t.track_id, cands);
    }
    let (set, dropped) = PredictionSet::new(file.query_id, file.video_id, tracks, temporal)
        .map_err(|e| IngestError::json(path, "tracks".into(), e.reason))?;
    let warnings = dropped
        .into_iter()
        .map(|id| {
            Diagnostic::warning(
                DiagnosticKind::DanglingTemporalEntry,
                format!(
                    "{}: temporal entry for track_id {id} has no predicted track; dropped",
                    path.display()
                ),
            )
        })
        .collect();
    Ok((set, warnings))
}

/// Serializes a prediction set's temporal candidates in the `pred_temporal.json` shape.
pub fn write_prediction_temporal_json(set: &PredictionSet) -> String {
    let file = TemporalFile {
        query_id: set.query_id().to_string(),
        video_id: set.video_id().to_string(),
        tracks: set
            .temporal()
            .iter()
            .map(|(id, cands)| TemporalTrackEntry {
                track_id: *id,
                segments: cands
                    .iter()
                    .map(|c| ScoredSegmentEntry {
                        start: c.segment().start(),
                        end: c.segment().end(),
                        score: c.score(),
                    })
                    .collect(),
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&file).expect("temporal file serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BoundingBox, Detection};

    fn parse(text: &str) -> Result<(String, Vec<Query>), IngestError> {
        parse_query_json_str(text, Path::new("queries.json"))
    }

    #[test]
    fn single_referent_query() {
        let (video, qs) = parse(
            r#"{"video_id": "v1", "queries": [{"query_id": "q1", "text": "a person walks",
                "referents": [{"track_id": 4, "segments": [[2543, 2782]]}]}]}"#,
        )
        .unwrap();
        assert_eq!(video, "v1");
        assert_eq!(qs.len(), 1);
        let r = &qs[0].referents()[0];
        assert_eq!(r.gt_track_id(), 4);
        assert_eq!(
            r.gt_segments(),
            &[TemporalSegment::new(2543, 2782).unwrap()]
        );
    }

    #[test]
    fn inverted_segment_names_its_path() {
        let err = parse(
            r#"{"video_id": "v", "queries": [{"query_id": "q", "text": "t",
                "referents": [{"track_id": 1, "segments": [[10, 5]]}]}]}"#,
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("segment start exceeds end"), "{msg}");
        assert!(msg.contains("queries[0].referents[0].segments[0]"), "{msg}");
    }

    #[test]
    fn duplicate_referent_is_rejected() {
        let err = parse(
            r#"{"video_id": "v", "queries": [{"query_id": "q", "text": "t",
                "referents": [{"track_id": 1, "segments": [[1, 5]]},
                              {"track_id": 1, "segments": [[7, 9]]}]}]}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("duplicate referent track_id"));
    }

    #[test]
    fn missing_field_and_empty_referents() {
        let err = parse(
            r#"{"video_id": "v", "queries": [{"query_id": "q", "text": "t",
                "referents": [{"segments": [[1, 5]]}]}]}"#,
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("track_id"), "{msg}");
        assert!(msg.contains("queries[0].referents[0]"), "{msg}");

        let err = parse(
            r#"{"video_id": "v", "queries": [{"query_id": "q", "text": "t", "referents": []}]}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("empty referents"));
    }

    #[test]
    fn unknown_fields_are_ignored() {
        let (_, qs) = parse(
            r#"{"video_id": "v", "extra": 1, "queries": [{"query_id": "q", "text": "t", "lang": "en",
                "referents": [{"track_id": 1, "segments": [[1, 5]], "note": null}]}]}"#,
        )
        .unwrap();
        assert_eq!(qs.len(), 1);
    }

    fn track(id: TrackId) -> Track {
        let b = BoundingBox::new(0.0, 0.0, 1.0, 1.0).unwrap();
        Track::new(id, vec![Detection::new(1, id, b, Some(1.0)).unwrap()]).unwrap()
    }

    #[test]
    fn dangling_temporal_entry_is_dropped_with_warning() {
        let json = r#"{"query_id": "q", "video_id": "v", "tracks": [
            {"track_id": 7, "segments": [{"start": 1, "end": 3, "score": 0.5}]}]}"#;
        let (set, warnings) =
            prediction_from_parts(vec![track(5)], json, Path::new("pred_temporal.json")).unwrap();
        assert!(set.temporal().is_empty());
        assert_eq!(warnings.len(), 1);
        assert_eq!(warnings[0].kind, DiagnosticKind::DanglingTemporalEntry);
    }

    #[test]
    fn empty_segment_list_is_accepted() {
        let json =
            r#"{"query_id": "q", "video_id": "v", "tracks": [{"track_id": 5, "segments": []}]}"#;
        let (set, warnings) =
            prediction_from_parts(vec![track(5)], json, Path::new("p.json")).unwrap();
        assert!(warnings.is_empty());
        assert_eq!(set.temporal()[&5], vec![]);
    }

    #[test]
    fn well_formed_pair_is_intact() {
        let json = r#"{"query_id": "q", "video_id": "v", "tracks": [
            {"track_id": 5, "segments": [{"start": 1, "end": 3, "score": 0.5}, {"start": 2, "end": 9, "score": 0.25}]}]}"#;
        let (set, _) = prediction_from_parts(vec![track(5)], json, Path::new("p.json")).unwrap();
        assert_eq!(set.tracks().len(), 1);
        assert_eq!(set.temporal()[&5].len(), 2);
        assert_eq!(set.temporal()[&5][1].score(), 0.25);
        let written = write_prediction_temporal_json(&set);
        let (again, _) =
            prediction_from_parts(vec![track(5)], &written, Path::new("p.json")).unwrap();
        assert_eq!(again, set);
        assert_eq!(write_prediction_temporal_json(&again), written);
    }

    #[test]
    fn bad_score_names_its_path() {
        let json = r#"{"query_id": "q", "video_id": "v", "tracks": [
            {"track_id": 5, "segments": [{"start": 1, "end": 3}]}]}"#;
        let err = prediction_from_parts(vec![track(5)], json, Path::new("p.json")).unwrap_err();
        assert!(err.to_string().contains("tracks[0].segments[0]"), "{err}");
    }
}
