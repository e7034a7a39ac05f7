//! Domain types shared by ingest, spatial and temporal evaluation, and reporting.
//!
//! Every constructor validates its invariants and returns a [`ModelError`]
//! naming the offending field. Frame indices are 1-based and segment
//! endpoints are inclusive everywhere.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Identity of a ground-truth or predicted track within one (video, query) scope.
pub type TrackId = u64;

/// 1-based frame index.
pub type Frame = u32;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid {field}: {reason}")]
pub struct ModelError {
    pub field: &'static str,
    pub reason: String,
}

impl ModelError {
    pub(crate) fn new(field: &'static str, reason: impl Into<String>) -> Self {
        Self {
            field,
            reason: reason.into(),
        }
    }
}

/// Axis-aligned box in pixels, top-left anchored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    x: f64,
    y: f64,
    w: f64,
    h: f64,
}

impl BoundingBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Result<Self, ModelError> {
        for (field, v) in [("x", x), ("y", y), ("w", w), ("h", h)] {
            if !v.is_finite() {
                return Err(ModelError::new(field, format!("{v} is not finite")));
            }
        }
        if w <= 0.0 {
            return Err(ModelError::new("w", format!("non-positive width {w}")));
        }
        if h <= 0.0 {
            return Err(ModelError::new("h", format!("non-positive height {h}")));
        }
        Ok(Self { x, y, w, h })
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    /// Same box shifted by `(dx, dy)`.
    pub fn translated(&self, dx: f64, dy: f64) -> Result<Self, ModelError> {
        Self::new(self.x + dx, self.y + dy, self.w, self.h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    frame: Frame,
    track_id: TrackId,
    bbox: BoundingBox,
    score: Option<f64>,
}

impl Detection {
    pub fn new(
        frame: Frame,
        track_id: TrackId,
        bbox: BoundingBox,
        score: Option<f64>,
    ) -> Result<Self, ModelError> {
        if frame < 1 {
            return Err(ModelError::new("frame", "frame index must be >= 1"));
        }
        if let Some(s) = score {
            if !(0.0..=1.0).contains(&s) {
                return Err(ModelError::new("score", format!("{s} outside [0, 1]")));
            }
        }
        Ok(Self {
            frame,
            track_id,
            bbox,
            score,
        })
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn track_id(&self) -> TrackId {
        self.track_id
    }

    pub fn bbox(&self) -> &BoundingBox {
        &self.bbox
    }

    pub fn score(&self) -> Option<f64> {
        self.score
    }

    pub(crate) fn with_track_id(mut self, track_id: TrackId) -> Self {
        self.track_id = track_id;
        self
    }
}

/// Frame-ordered detections sharing one identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    track_id: TrackId,
    detections: Vec<Detection>,
}

impl Track {
    /// Detections must be strictly ascending by frame and carry `track_id`.
    pub fn new(track_id: TrackId, detections: Vec<Detection>) -> Result<Self, ModelError> {
        for d in &detections {
            if d.track_id != track_id {
                return Err(ModelError::new(
                    "detections",
                    format!(
                        "detection at frame {} has track_id {} but track is {}",
                        d.frame, d.track_id, track_id
                    ),
                ));
            }
        }
        for w in detections.windows(2) {
            if w[0].frame == w[1].frame {
                return Err(ModelError::new(
                    "detections",
                    format!("duplicate frame {} in track {}", w[0].frame, track_id),
                ));
            }
            if w[0].frame > w[1].frame {
                return Err(ModelError::new(
                    "detections",
                    format!("frames not ascending in track {track_id}"),
                ));
            }
        }
        Ok(Self {
            track_id,
            detections,
        })
    }

    pub fn track_id(&self) -> TrackId {
        self.track_id
    }

    pub fn detections(&self) -> &[Detection] {
        &self.detections
    }

    pub fn len(&self) -> usize {
        self.detections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detections.is_empty()
    }

    pub fn first_frame(&self) -> Option<Frame> {
        self.detections.first().map(|d| d.frame)
    }

    pub fn last_frame(&self) -> Option<Frame> {
        self.detections.last().map(|d| d.frame)
    }

    /// Keeps only the detections whose frame satisfies `keep`.
    pub fn filter_frames(&self, mut keep: impl FnMut(Frame) -> bool) -> Track {
        Track {
            track_id: self.track_id,
            detections: self
                .detections
                .iter()
                .copied()
                .filter(|d| keep(d.frame))
                .collect(),
        }
    }

    /// Same detections under a different identity.
    pub fn relabeled(&self, track_id: TrackId) -> Track {
        Track {
            track_id,
            detections: self
                .detections
                .iter()
                .map(|d| d.with_track_id(track_id))
                .collect(),
        }
    }
}

/// Inclusive frame interval; `[k, k]` is one frame long.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TemporalSegment {
    start: Frame,
    end: Frame,
}

impl TemporalSegment {
    pub fn new(start: Frame, end: Frame) -> Result<Self, ModelError> {
        if start < 1 {
            return Err(ModelError::new("start", "frame index must be >= 1"));
        }
        if start > end {
            return Err(ModelError::new(
                "start",
                format!("segment start exceeds end ({start} > {end})"),
            ));
        }
        Ok(Self { start, end })
    }

    pub fn start(&self) -> Frame {
        self.start
    }

    pub fn end(&self) -> Frame {
        self.end
    }

    pub fn len(&self) -> u32 {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, frame: Frame) -> bool {
        self.start <= frame && frame <= self.end
    }

    pub fn overlaps(&self, other: &TemporalSegment) -> bool {
        self.start <= other.end && other.start <= self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredSegment {
    segment: TemporalSegment,
    score: f64,
}

impl ScoredSegment {
    pub fn new(segment: TemporalSegment, score: f64) -> Result<Self, ModelError> {
        if !score.is_finite() {
            return Err(ModelError::new("score", format!("{score} is not finite")));
        }
        Ok(Self { segment, score })
    }

    pub fn segment(&self) -> &TemporalSegment {
        &self.segment
    }

    pub fn score(&self) -> f64 {
        self.score
    }

    /// Ranking order: descending score, then ascending start, then ascending end.
    pub fn rank_cmp(&self, other: &ScoredSegment) -> std::cmp::Ordering {
        other
            .score
            .total_cmp(&self.score)
            .then(self.segment.start.cmp(&other.segment.start))
            .then(self.segment.end.cmp(&other.segment.end))
    }
}

/// One ground-truth object satisfying a query, with the intervals in which
/// it performs the queried action.
#[derive(Debug, Clone, PartialEq)]
pub struct Referent {
    gt_track_id: TrackId,
    gt_segments: Vec<TemporalSegment>,
}

impl Referent {
    pub fn new(
        gt_track_id: TrackId,
        mut gt_segments: Vec<TemporalSegment>,
    ) -> Result<Self, ModelError> {
        if gt_segments.is_empty() {
            return Err(ModelError::new(
                "gt_segments",
                "at least one segment required",
            ));
        }
        gt_segments.sort();
        for w in gt_segments.windows(2) {
            if w[0].overlaps(&w[1]) {
                return Err(ModelError::new(
                    "gt_segments",
                    format!(
                        "overlapping segments [{}, {}] and [{}, {}]",
                        w[0].start, w[0].end, w[1].start, w[1].end
                    ),
                ));
            }
        }
        Ok(Self {
            gt_track_id,
            gt_segments,
        })
    }

    pub fn gt_track_id(&self) -> TrackId {
        self.gt_track_id
    }

    /// Sorted by start frame.
    pub fn gt_segments(&self) -> &[TemporalSegment] {
        &self.gt_segments
    }

    pub fn covers(&self, frame: Frame) -> bool {
        self.gt_segments.iter().any(|s| s.contains(frame))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    query_id: String,
    video_id: String,
    text: String,
    referents: Vec<Referent>,
}

impl Query {
    pub fn new(
        query_id: impl Into<String>,
        video_id: impl Into<String>,
        text: impl Into<String>,
        referents: Vec<Referent>,
    ) -> Result<Self, ModelError> {
        if referents.is_empty() {
            return Err(ModelError::new(
                "referents",
                "at least one referent required",
            ));
        }
        let mut seen = BTreeSet::new();
        for r in &referents {
            if !seen.insert(r.gt_track_id) {
                return Err(ModelError::new(
                    "referents",
                    format!("duplicate referent track_id {}", r.gt_track_id),
                ));
            }
        }
        Ok(Self {
            query_id: query_id.into(),
            video_id: video_id.into(),
            text: text.into(),
            referents,
        })
    }

    pub fn query_id(&self) -> &str {
        &self.query_id
    }

    pub fn video_id(&self) -> &str {
        &self.video_id
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn referents(&self) -> &[Referent] {
        &self.referents
    }
}

/// A system's output for one query: predicted tracks plus scored temporal
/// candidates keyed by predicted track id.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    query_id: String,
    video_id: String,
    tracks: Vec<Track>,
    temporal: BTreeMap<TrackId, Vec<ScoredSegment>>,
}

impl PredictionSet {
    /// Builds the set, dropping temporal entries whose key names no track.
    /// The dropped ids are returned alongside so callers can warn.
    pub fn new(
        query_id: impl Into<String>,
        video_id: impl Into<String>,
        mut tracks: Vec<Track>,
        mut temporal: BTreeMap<TrackId, Vec<ScoredSegment>>,
    ) -> Result<(Self, Vec<TrackId>), ModelError> {
        tracks.sort_by_key(|t| t.track_id);
        for w in tracks.windows(2) {
            if w[0].track_id == w[1].track_id {
                return Err(ModelError::new(
                    "tracks",
                    format!("duplicate track_id {}", w[0].track_id),
                ));
            }
        }
        let known: BTreeSet<TrackId> = tracks.iter().map(|t| t.track_id).collect();
        let dangling: Vec<TrackId> = temporal
            .keys()
            .copied()
            .filter(|id| !known.contains(id))
            .collect();
        for id in &dangling {
            temporal.remove(id);
        }
        Ok((
            Self {
                query_id: query_id.into(),
                video_id: video_id.into(),
                tracks,
                temporal,
            },
            dangling,
        ))
    }

    pub fn query_id(&self) -> &str {
        &self.query_id
    }

    pub fn video_id(&self) -> &str {
        &self.video_id
    }

    /// Sorted by track id.
    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    pub fn temporal(&self) -> &BTreeMap<TrackId, Vec<ScoredSegment>> {
        &self.temporal
    }
}

/// HOTA family at one localisation threshold, or averaged over a sweep.
///
/// Ratios are fractions in `[0, 1]`. The counts are plain integers at a single
/// threshold and become means once averaged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HotaComponents {
    pub hota: f64,
    pub det_a: f64,
    pub ass_a: f64,
    pub det_re: f64,
    pub det_pr: f64,
    pub ass_re: f64,
    pub ass_pr: f64,
    pub loc_a: f64,
    pub tp: f64,
    #[serde(rename = "fn")]
    pub fn_: f64,
    pub fp: f64,
}

impl HotaComponents {
    pub const ZERO: HotaComponents = HotaComponents {
        hota: 0.0,
        det_a: 0.0,
        ass_a: 0.0,
        det_re: 0.0,
        det_pr: 0.0,
        ass_re: 0.0,
        ass_pr: 0.0,
        loc_a: 0.0,
        tp: 0.0,
        fn_: 0.0,
        fp: 0.0,
    };

    pub(crate) fn fields(&self) -> [f64; 11] {
        [
            self.hota,
            self.det_a,
            self.ass_a,
            self.det_re,
            self.det_pr,
            self.ass_re,
            self.ass_pr,
            self.loc_a,
            self.tp,
            self.fn_,
            self.fp,
        ]
    }

    pub(crate) fn from_fields(f: [f64; 11]) -> Self {
        Self {
            hota: f[0],
            det_a: f[1],
            ass_a: f[2],
            det_re: f[3],
            det_pr: f[4],
            ass_re: f[5],
            ass_pr: f[6],
            loc_a: f[7],
            tp: f[8],
            fn_: f[9],
            fp: f[10],
        }
    }

    /// Names of the ratio fields, in declaration order.
    pub const RATIO_NAMES: [&'static str; 8] = [
        "hota", "det_a", "ass_a", "det_re", "det_pr", "ass_re", "ass_pr", "loc_a",
    ];

    pub fn ratios(&self) -> [f64; 8] {
        let f = self.fields();
        [f[0], f[1], f[2], f[3], f[4], f[5], f[6], f[7]]
    }

    /// Field-wise arithmetic mean. `None` for an empty input.
    pub fn mean<'a>(items: impl IntoIterator<Item = &'a HotaComponents>) -> Option<Self> {
        let mut acc = [0.0; 11];
        let mut n = 0usize;
        for c in items {
            for (a, v) in acc.iter_mut().zip(c.fields()) {
                *a += v;
            }
            n += 1;
        }
        if n == 0 {
            return None;
        }
        Some(Self::from_fields(acc.map(|a| a / n as f64)))
    }
}

/// Temporal IoU threshold stored in thousandths, so `0.3` is exactly 300/1000.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Tau(u16);

impl Tau {
    pub const fn from_millis(millis: u16) -> Self {
        assert!(millis <= 1000);
        Tau(millis)
    }

    pub fn millis(&self) -> u16 {
        self.0
    }

    pub fn value(&self) -> f64 {
        f64::from(self.0) / 1000.0
    }

    /// The thresholds reported by default: 0.1, 0.3 and 0.5.
    pub fn defaults() -> Vec<Tau> {
        vec![Tau(100), Tau(300), Tau(500)]
    }
}

impl fmt::Display for Tau {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

impl FromStr for Tau {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let v: f64 = s
            .trim()
            .parse()
            .map_err(|_| ModelError::new("tau", format!("not a number: {s:?}")))?;
        Tau::try_from(v)
    }
}

impl TryFrom<f64> for Tau {
    type Error = ModelError;

    fn try_from(v: f64) -> Result<Self, Self::Error> {
        if !(0.0..=1.0).contains(&v) {
            return Err(ModelError::new("tau", format!("{v} outside [0, 1]")));
        }
        let millis = (v * 1000.0).round();
        if (millis / 1000.0 - v).abs() > 1e-12 {
            return Err(ModelError::new(
                "tau",
                format!("{v} is not a multiple of 0.001"),
            ));
        }
        Ok(Tau(millis as u16))
    }
}

impl Serialize for Tau {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Tau {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A metric value per temporal IoU threshold.
pub type ThresholdMap = BTreeMap<Tau, f64>;

/// Temporal grounding metrics over a set of (query, referent) pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalMetrics {
    pub r1: ThresholdMap,
    pub r5: ThresholdMap,
    pub r10: ThresholdMap,
    #[serde(rename = "map")]
    pub map_at: ThresholdMap,
    pub miou: f64,
}

impl TemporalMetrics {
    /// All maps hold `value` at every threshold in `taus`.
    pub fn constant(taus: &[Tau], value: f64) -> Self {
        let m: ThresholdMap = taus.iter().map(|t| (*t, value)).collect();
        Self {
            r1: m.clone(),
            r5: m.clone(),
            r10: m.clone(),
            map_at: m,
            miou: value,
        }
    }

    pub fn taus(&self) -> Vec<Tau> {
        self.r1.keys().copied().collect()
    }

    /// Field-wise arithmetic mean; `None` for an empty input or mismatched thresholds.
    pub fn mean<'a>(items: impl IntoIterator<Item = &'a TemporalMetrics>) -> Option<Self> {
        let items: Vec<&TemporalMetrics> = items.into_iter().collect();
        let first = items.first()?;
        let taus = first.taus();
        let n = items.len() as f64;
        let mean_map = |get: fn(&TemporalMetrics) -> &ThresholdMap| -> Option<ThresholdMap> {
            let mut out = ThresholdMap::new();
            for t in &taus {
                let mut sum = 0.0;
                for m in &items {
                    sum += get(m).get(t)?;
                }
                out.insert(*t, sum / n);
            }
            Some(out)
        };
        Some(Self {
            r1: mean_map(|m| &m.r1)?,
            r5: mean_map(|m| &m.r5)?,
            r10: mean_map(|m| &m.r10)?,
            map_at: mean_map(|m| &m.map_at)?,
            miou: items.iter().map(|m| m.miou).sum::<f64>() / n,
        })
    }
}
