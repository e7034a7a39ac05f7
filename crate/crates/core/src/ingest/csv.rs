//! MOT-style track files: `frame,track_id,x,y,w,h[,score]`, one detection per line.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::IngestError;
use crate::model::{BoundingBox, Detection, Frame, Track, TrackId};

const FIELDS: [&str; 7] = ["frame", "track_id", "x", "y", "w", "h", "score"];

/// Reads and parses a track file. With `with_score` a 7th score column is
/// accepted; without it every line must have exactly 6 columns.
pub fn parse_track_csv(path: &Path, with_score: bool) -> Result<Vec<Track>, IngestError> {
    let text = std::fs::read_to_string(path).map_err(|e| IngestError::io(path, e))?;
    parse_track_csv_str(&text, path, with_score)
}

/// Parses track-file contents; `path` is only used in error messages.
pub fn parse_track_csv_str(
    text: &str,
    path: &Path,
    with_score: bool,
) -> Result<Vec<Track>, IngestError> {
    let mut by_id: BTreeMap<TrackId, Vec<(usize, Detection)>> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let err = |field: Option<&'static str>, message: String| {
            IngestError::line(path, line_no, field, message)
        };
        let cols: Vec<&str> = raw.split(',').map(str::trim).collect();
        let allowed = if with_score { 6..=7 } else { 6..=6 };
        if !allowed.contains(&cols.len()) {
            return Err(err(
                None,
                format!(
                    "expected {} columns, found {}",
                    if with_score { "6 or 7" } else { "6" },
                    cols.len()
                ),
            ));
        }
        let frame: Frame = cols[0]
            .parse()
            .map_err(|_| err(Some(FIELDS[0]), format!("invalid frame {:?}", cols[0])))?;
        if frame < 1 {
            return Err(err(Some(FIELDS[0]), "frame index must be >= 1".into()));
        }
        let track_id: TrackId = cols[1]
            .parse()
            .map_err(|_| err(Some(FIELDS[1]), format!("invalid track_id {:?}", cols[1])))?;
        let mut nums = [0.0f64; 4];
        for (k, slot) in nums.iter_mut().enumerate() {
            *slot = parse_real(cols[k + 2]).ok_or_else(|| {
                err(
                    Some(FIELDS[k + 2]),
                    format!("invalid number {:?}", cols[k + 2]),
                )
            })?;
        }
        let [x, y, w, h] = nums;
        if w <= 0.0 {
            return Err(err(Some("w"), "non-positive width".into()));
        }
        if h <= 0.0 {
            return Err(err(Some("h"), "non-positive height".into()));
        }
        let score = match cols.get(6) {
            Some(s) => {
                let v = parse_real(s)
                    .ok_or_else(|| err(Some("score"), format!("invalid number {s:?}")))?;
                if !(0.0..=1.0).contains(&v) {
                    return Err(err(Some("score"), format!("score {v} outside [0, 1]")));
                }
                Some(v)
            }
            None => None,
        };
        let bbox = BoundingBox::new(x, y, w, h).map_err(|e| err(Some(e.field), e.reason))?;
        let det = Detection::new(frame, track_id, bbox, score)
            .map_err(|e| err(Some(e.field), e.reason))?;
        by_id.entry(track_id).or_default().push((line_no, det));
    }

    let mut tracks = Vec::with_capacity(by_id.len());
    for (track_id, mut dets) in by_id {
        dets.sort_by_key(|(line, d)| (d.frame(), *line));
        for w in dets.windows(2) {
            if w[0].1.frame() == w[1].1.frame() {
                return Err(IngestError::line(
                    path,
                    w[1].0,
                    Some("frame"),
                    format!(
                        "duplicate detection for frame {} and track_id {} (first at line {})",
                        w[1].1.frame(),
                        track_id,
                        w[0].0
                    ),
                ));
            }
        }
        let track = Track::new(track_id, dets.into_iter().map(|(_, d)| d).collect())
            .map_err(|e| IngestError::line(path, 0, Some(e.field), e.reason))?;
        tracks.push(track);
    }
    Ok(tracks)
}

fn parse_real(s: &str) -> Option<f64> {
    let v: f64 = s.parse().ok()?;
    v.is_finite().then_some(v)
}

/// Serializes tracks sorted by (frame, track_id). Scores are written only when
/// `with_score` is set and the detection carries one.
pub fn write_track_csv(tracks: &[Track], with_score: bool) -> String {
    let mut dets: Vec<&Detection> = tracks.iter().flat_map(|t| t.detections()).collect();
    dets.sort_by_key(|d| (d.frame(), d.track_id()));
    let mut out = String::new();
    for d in dets {
        let b = d.bbox();
        let _ = write!(
            out,
            "{},{},{},{},{},{}",
            d.frame(),
            d.track_id(),
            b.x(),
            b.y(),
            b.w(),
            b.h()
        );
        if let (true, Some(s)) = (with_score, d.score()) {
            let _ = write!(out, ",{s}");
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, with_score: bool) -> Result<Vec<Track>, IngestError> {
        parse_track_csv_str(text, Path::new("gt.txt"), with_score)
    }

    #[test]
    fn single_line_track() {
        let tracks = parse("1,3,10,20,30,40", false).unwrap();
        assert_eq!(tracks.len(), 1);
        assert_eq!(tracks[0].track_id(), 3);
        let d = &tracks[0].detections()[0];
        assert_eq!(d.frame(), 1);
        assert_eq!(*d.bbox(), BoundingBox::new(10.0, 20.0, 30.0, 40.0).unwrap());
    }

    #[test]
    fn zero_width_is_rejected_with_line() {
        let err = parse("1,3,10,20,0,40", false).unwrap_err();
        assert!(
            err.to_string().contains("non-positive width at line 1"),
            "{err}"
        );
        assert!(err.to_string().contains("gt.txt"));
    }

    #[test]
    fn duplicate_frame_is_rejected() {
        let err = parse("1,3,10,20,30,40\n1,3,11,20,30,40\n", false).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("duplicate detection"), "{msg}");
        assert!(msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn crlf_and_trailing_newline_are_accepted() {
        let tracks = parse("2,1,0,0,1,1\r\n1,1,0,0,1,1\r\n1,2,5,5,1,1\r\n", false).unwrap();
        assert_eq!(tracks.len(), 2);
        let frames: Vec<_> = tracks[0].detections().iter().map(|d| d.frame()).collect();
        assert_eq!(frames, vec![1, 2]);
    }

    #[test]
    fn malformed_field_names_column() {
        let err = parse("1,3,abc,20,30,40", false).unwrap_err();
        match err {
            IngestError::Line { line, field, .. } => {
                assert_eq!(line, 1);
                assert_eq!(field, Some("x"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse("1,3,1,2,3,4,0.5", false).is_err());
        assert!(parse("1,3,1,2,3,4,1.5", true).is_err());
        assert!(parse("0,3,1,2,3,4", false).is_err());
        assert!(parse("1,-3,1,2,3,4", false).is_err());
        assert!(parse("1,3,1,2,3,4\n\n2,3,1,2,3,4", false).is_err());
    }

    #[test]
    fn scores_survive_a_write_parse_cycle() {
        let text = "1,5,0.5,-2,10,20,0.75\n2,5,1,1,10,20,1\n";
        let tracks = parse(text, true).unwrap();
        assert_eq!(write_track_csv(&tracks, true), text);
    }
}
