//! Synthetic scenarios with controllable corruption, plus exhaustive
//! reference implementations of the metrics for cross-checking.
//!
//! # Random stream
//!
//! All randomness comes from ChaCha8 seeded through `rand_core`'s
//! `seed_from_u64` (PCG32 key expansion). Only raw 64-bit words are drawn, and
//! every derived quantity uses a fixed recipe so another implementation can
//! reproduce a scenario from its seed:
//!
//! * uniform in `[0, 1)`: `(word >> 11) * 2^-53`
//! * integer in `[lo, hi]`: `lo + word % (hi - lo + 1)`
//! * standard normal: Box-Muller cosine branch, `u1 = 1 - uniform`, `u2 = uniform`
//!
//! Draws happen in the order the code below makes them.

pub mod oracle;

use std::collections::BTreeMap;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::id_mapping::TemporalPair;
use crate::ingest::{GroundTruthBundle, VideoGroundTruth};
use crate::model::{
    BoundingBox, Detection, Frame, PredictionSet, Query, Referent, ScoredSegment, TemporalSegment,
    Track, TrackId,
};

pub use self::oracle::{oracle_hota, oracle_temporal, OracleError};

/// Largest scenario the generator accepts.
pub const MAX_FRAMES: u32 = 50;
pub const MAX_GT_TRACKS: u32 = 4;

/// First identity handed out when a predicted track switches id.
const SWITCH_ID_BASE: TrackId = 1000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid scenario: {0}")]
pub struct ScenarioError(String);

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub seed: u64,
    pub frames: u32,
    pub gt_tracks: u32,
    pub queries: u32,
    /// Std-dev in pixels of the noise added to predicted box coordinates.
    pub box_jitter: f64,
    /// Per-frame chance that a predicted track continues under a new id.
    pub id_switch_prob: f64,
    /// Per-detection chance that a predicted detection is dropped.
    pub drop_prob: f64,
    /// Max frames by which predicted segment endpoints are shifted.
    pub segment_noise: u32,
    /// Visible objects referenced by no query. Predictions track them too,
    /// so every distractor becomes a source of false positives.
    pub distractor_tracks: u32,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            frames: 30,
            gt_tracks: 3,
            queries: 4,
            box_jitter: 0.0,
            id_switch_prob: 0.0,
            drop_prob: 0.0,
            segment_noise: 0,
            distractor_tracks: 0,
        }
    }
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let fail = |m: String| Err(ScenarioError(m));
        if !(1..=MAX_FRAMES).contains(&self.frames) {
            return fail(format!(
                "frames must be in 1..={MAX_FRAMES}, got {}",
                self.frames
            ));
        }
        if !(1..=MAX_GT_TRACKS).contains(&self.gt_tracks) {
            return fail(format!(
                "gt_tracks must be in 1..={MAX_GT_TRACKS}, got {}",
                self.gt_tracks
            ));
        }
        if self.queries == 0 {
            return fail("queries must be positive".into());
        }
        for (name, p) in [
            ("id_switch_prob", self.id_switch_prob),
            ("drop_prob", self.drop_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return fail(format!("{name} must be in [0, 1], got {p}"));
            }
        }
        if !(self.box_jitter.is_finite() && self.box_jitter >= 0.0) {
            return fail(format!("box_jitter must be >= 0, got {}", self.box_jitter));
        }
        Ok(())
    }
}

/// The portable random stream described in the module docs.
pub struct ScenarioRng(ChaCha8Rng);

impl ScenarioRng {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn word(&mut self) -> u64 {
        self.0.next_u64()
    }

    pub fn uniform(&mut self) -> f64 {
        (self.word() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn int(&mut self, lo: u64, hi: u64) -> u64 {
        lo + self.word() % (hi - lo + 1)
    }

    pub fn chance(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

fn moving_track(rng: &mut ScenarioRng, id: TrackId, frames: u32) -> Track {
    let w = round2(rng.range(20.0, 60.0));
    let h = round2(rng.range(40.0, 120.0));
    let x0 = rng.range(0.0, 600.0);
    let y0 = rng.range(0.0, 400.0);
    let vx = rng.range(-5.0, 5.0);
    let vy = rng.range(-5.0, 5.0);
    let dets = (1..=frames)
        .map(|f| {
            let t = f64::from(f - 1);
            let b = BoundingBox::new(round2(x0 + vx * t), round2(y0 + vy * t), w, h)
                .expect("positive size");
            Detection::new(f, id, b, None).expect("valid frame")
        })
        .collect();
    Track::new(id, dets).expect("ascending frames")
}

fn random_segments(rng: &mut ScenarioRng, frames: u32) -> Vec<TemporalSegment> {
    let seg = |rng: &mut ScenarioRng, lo: u32, hi: u32| {
        let s = rng.int(u64::from(lo), u64::from(hi)) as u32;
        let e = rng.int(u64::from(s), u64::from(hi)) as u32;
        TemporalSegment::new(s, e).expect("ordered")
    };
    if frames >= 6 && rng.chance(0.25) {
        let mid = frames / 2;
        vec![seg(rng, 1, mid), seg(rng, mid + 1, frames)]
    } else {
        vec![seg(rng, 1, frames)]
    }
}

/// Partial Fisher-Yates: `k` distinct values from `1..=n`, in draw order.
fn choose_ids(rng: &mut ScenarioRng, n: u32, k: u32) -> Vec<TrackId> {
    let mut pool: Vec<TrackId> = (1..=TrackId::from(n)).collect();
    for i in 0..k as usize {
        let j = rng.int(i as u64, (pool.len() - 1) as u64) as usize;
        pool.swap(i, j);
    }
    pool.truncate(k as usize);
    pool
}

/// Copies `track` under corruption. Returns the fragments keyed by the id
/// each one was emitted under.
fn corrupt_track(
    rng: &mut ScenarioRng,
    spec: &ScenarioSpec,
    track: &Track,
    next_id: &mut TrackId,
) -> Vec<Track> {
    let mut fragments: BTreeMap<TrackId, Vec<Detection>> = BTreeMap::new();
    let mut current = track.track_id();
    for (i, d) in track.detections().iter().enumerate() {
        if i > 0 && rng.chance(spec.id_switch_prob) {
            current = *next_id;
            *next_id += 1;
        }
        let drop = rng.chance(spec.drop_prob);
        let b = d.bbox();
        let dx = spec.box_jitter * rng.normal();
        let dy = spec.box_jitter * rng.normal();
        let dw = spec.box_jitter * rng.normal();
        let dh = spec.box_jitter * rng.normal();
        if drop {
            continue;
        }
        let bbox = if spec.box_jitter > 0.0 {
            BoundingBox::new(
                round2(b.x() + dx),
                round2(b.y() + dy),
                round2((b.w() + dw).max(1.0)),
                round2((b.h() + dh).max(1.0)),
            )
            .expect("clamped size")
        } else {
            *b
        };
        let det = Detection::new(d.frame(), current, bbox, Some(1.0)).expect("valid detection");
        fragments.entry(current).or_default().push(det);
    }
    fragments
        .into_iter()
        .map(|(id, dets)| Track::new(id, dets).expect("ascending frames"))
        .collect()
}

fn corrupt_segment(
    rng: &mut ScenarioRng,
    noise: u32,
    frames: u32,
    s: &TemporalSegment,
) -> TemporalSegment {
    if noise == 0 {
        return *s;
    }
    let shift = |rng: &mut ScenarioRng, v: u32| -> u32 {
        let delta = rng.int(0, 2 * u64::from(noise)) as i64 - i64::from(noise);
        (i64::from(v) + delta).clamp(1, i64::from(frames)) as u32
    };
    let a = shift(rng, s.start());
    let b = shift(rng, s.end());
    TemporalSegment::new(a.min(b), a.max(b)).expect("ordered")
}

/// Generates one video with its queries and one prediction set per query.
pub fn generate_video(
    spec: &ScenarioSpec,
    video_id: &str,
) -> Result<(VideoGroundTruth, Vec<PredictionSet>), ScenarioError> {
    spec.validate()?;
    let mut rng = ScenarioRng::new(spec.seed);
    let objects = spec.gt_tracks + spec.distractor_tracks;
    let tracks: Vec<Track> = (1..=TrackId::from(objects))
        .map(|id| moving_track(&mut rng, id, spec.frames))
        .collect();

    let mut queries = Vec::with_capacity(spec.queries as usize);
    let mut predictions = Vec::with_capacity(spec.queries as usize);
    for qi in 0..spec.queries {
        let n_ref = rng.int(1, u64::from(spec.gt_tracks)) as u32;
        let ids = choose_ids(&mut rng, spec.gt_tracks, n_ref);
        let referents: Vec<Referent> = ids
            .iter()
            .map(|&id| Referent::new(id, random_segments(&mut rng, spec.frames)).expect("disjoint"))
            .collect();
        let query_id = format!("q{qi:03}");
        let query = Query::new(
            &query_id,
            video_id,
            format!("synthetic action {qi}"),
            referents,
        )
        .expect("distinct referents");

        let mut next_id = SWITCH_ID_BASE;
        let mut pred_tracks = Vec::new();
        let mut temporal: BTreeMap<TrackId, Vec<ScoredSegment>> = BTreeMap::new();
        for r in query.referents() {
            let gt = &tracks[(r.gt_track_id() - 1) as usize];
            let visible = gt.filter_frames(|f| r.covers(f));
            let candidates: Vec<ScoredSegment> = r
                .gt_segments()
                .iter()
                .map(|s| {
                    let seg = corrupt_segment(&mut rng, spec.segment_noise, spec.frames, s);
                    ScoredSegment::new(seg, 1.0).expect("finite")
                })
                .collect();
            for frag in corrupt_track(&mut rng, spec, &visible, &mut next_id) {
                temporal.insert(frag.track_id(), candidates.clone());
                pred_tracks.push(frag);
            }
        }
        for d in spec.gt_tracks + 1..=objects {
            let gt = &tracks[(d - 1) as usize];
            pred_tracks.extend(corrupt_track(&mut rng, spec, gt, &mut next_id));
        }
        let (set, _) = PredictionSet::new(&query_id, video_id, pred_tracks, temporal)
            .expect("distinct predicted ids");
        queries.push(query);
        predictions.push(set);
    }
    Ok((VideoGroundTruth { tracks, queries }, predictions))
}

/// One-video bundle; the video id is `synth`.
pub fn generate(
    spec: &ScenarioSpec,
) -> Result<(GroundTruthBundle, Vec<PredictionSet>), ScenarioError> {
    let (video, preds) = generate_video(spec, "synth")?;
    let mut bundle = GroundTruthBundle::default();
    bundle.videos.insert("synth".into(), video);
    Ok((bundle, preds))
}

/// A multi-video bundle per dataset. Video `v` of dataset `d` uses seed
/// `spec.seed + 1_000_000 * d + v` (wrapping) and id `<dataset>-<vvvv>`.
pub fn generate_split(
    spec: &ScenarioSpec,
    datasets: &[&str],
    videos: u32,
) -> Result<Vec<(String, GroundTruthBundle, Vec<PredictionSet>)>, ScenarioError> {
    let mut out = Vec::with_capacity(datasets.len());
    for (d, name) in datasets.iter().enumerate() {
        let mut bundle = GroundTruthBundle::default();
        let mut preds = Vec::new();
        for v in 0..videos {
            let sub = ScenarioSpec {
                seed: spec
                    .seed
                    .wrapping_add((d as u64).wrapping_mul(1_000_000))
                    .wrapping_add(u64::from(v)),
                ..spec.clone()
            };
            let vid = format!("{name}-{v:04}");
            let (video, p) = generate_video(&sub, &vid)?;
            bundle.videos.insert(vid, video);
            preds.extend(p);
        }
        out.push((name.to_string(), bundle, preds));
    }
    Ok(out)
}

/// A tiny tracking instance for oracle cross-checks: up to `max_tracks`
/// tracks per side over up to `max_frames` frames, each present on a random
/// subset of frames. Predicted boxes are continuous perturbations of gt
/// boxes (or free-floating), giving IoUs spread across the sweep.
pub fn random_tracking_instance(
    rng: &mut ScenarioRng,
    max_tracks: u32,
    max_frames: u32,
) -> (Vec<Track>, Vec<Track>) {
    let frames = rng.int(1, u64::from(max_frames)) as Frame;
    let n_gt = rng.int(0, u64::from(max_tracks)) as usize;
    let n_pred = rng.int(0, u64::from(max_tracks)) as usize;
    let mut gt_boxes: Vec<Vec<Option<BoundingBox>>> = Vec::new();
    let mut gts = Vec::new();
    for g in 0..n_gt {
        let id = (g + 1) as TrackId;
        let x0 = rng.range(0.0, 40.0);
        let y0 = rng.range(0.0, 40.0);
        let w = rng.range(8.0, 16.0);
        let h = rng.range(8.0, 16.0);
        let mut per_frame = Vec::new();
        let mut dets = Vec::new();
        for f in 1..=frames {
            if rng.chance(0.8) {
                let b =
                    BoundingBox::new(x0 + rng.range(-3.0, 3.0), y0 + rng.range(-3.0, 3.0), w, h)
                        .expect("positive size");
                dets.push(Detection::new(f, id, b, None).expect("valid"));
                per_frame.push(Some(b));
            } else {
                per_frame.push(None);
            }
        }
        gt_boxes.push(per_frame);
        if !dets.is_empty() {
            gts.push(Track::new(id, dets).expect("ascending"));
        }
    }
    let mut preds = Vec::new();
    for p in 0..n_pred {
        let id = (10 * (p + 1)) as TrackId;
        let mut dets = Vec::new();
        for f in 1..=frames {
            if !rng.chance(0.8) {
                continue;
            }
            let anchor = if n_gt > 0 {
                let g = rng.int(0, (n_gt - 1) as u64) as usize;
                gt_boxes[g][(f - 1) as usize]
            } else {
                None
            };
            let b = match anchor {
                Some(a) => {
                    let s = rng.range(0.0, 6.0);
                    BoundingBox::new(
                        a.x() + rng.range(-s, s),
                        a.y() + rng.range(-s, s),
                        a.w() * rng.range(0.7, 1.3),
                        a.h() * rng.range(0.7, 1.3),
                    )
                }
                None => BoundingBox::new(
                    rng.range(0.0, 50.0),
                    rng.range(0.0, 50.0),
                    rng.range(8.0, 16.0),
                    rng.range(8.0, 16.0),
                ),
            }
            .expect("positive size");
            dets.push(Detection::new(f, id, b, Some(1.0)).expect("valid"));
        }
        if !dets.is_empty() {
            preds.push(Track::new(id, dets).expect("ascending"));
        }
    }
    (gts, preds)
}

/// Random temporal pairs: 1-2 disjoint gt segments per pair and up to
/// `max_candidates` candidates with coarse scores, so score ties occur.
pub fn random_temporal_pairs(
    rng: &mut ScenarioRng,
    max_pairs: u32,
    max_candidates: u32,
) -> Vec<TemporalPair> {
    let n = rng.int(1, u64::from(max_pairs));
    (0..n)
        .map(|i| {
            let gts = if rng.chance(0.3) {
                let a = rng.int(1, 40) as u32;
                let b = a + rng.int(0, 20) as u32;
                let c = b + 1 + rng.int(0, 20) as u32;
                let d = c + rng.int(0, 20) as u32;
                vec![
                    TemporalSegment::new(a, b).unwrap(),
                    TemporalSegment::new(c, d).unwrap(),
                ]
            } else {
                let a = rng.int(1, 60) as u32;
                vec![TemporalSegment::new(a, a + rng.int(0, 30) as u32).unwrap()]
            };
            let k = rng.int(0, u64::from(max_candidates));
            let cands = (0..k).map(|_| random_candidate(rng, &gts)).collect();
            TemporalPair::new(format!("q{i}"), i + 1, gts, cands)
        })
        .collect()
}

/// A candidate near (or far from) one of `gts`, scored on a coarse grid.
pub fn random_candidate(rng: &mut ScenarioRng, gts: &[TemporalSegment]) -> ScoredSegment {
    let g = gts[rng.int(0, (gts.len() - 1) as u64) as usize];
    let seg = if rng.chance(0.7) {
        let s = (i64::from(g.start()) + rng.int(0, 12) as i64 - 6).max(1) as u32;
        let e = (i64::from(g.end()) + rng.int(0, 12) as i64 - 6).max(i64::from(s)) as u32;
        TemporalSegment::new(s, e).unwrap()
    } else {
        let s = rng.int(1, 100) as u32;
        TemporalSegment::new(s, s + rng.int(0, 30) as u32).unwrap()
    };
    let score = rng.int(0, 10) as f64 / 10.0;
    ScoredSegment::new(seg, score).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_bundle() {
        let spec = ScenarioSpec {
            seed: 42,
            box_jitter: 2.0,
            id_switch_prob: 0.1,
            drop_prob: 0.2,
            segment_noise: 3,
            distractor_tracks: 2,
            ..Default::default()
        };
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        let other = ScenarioSpec {
            seed: 43,
            ..spec.clone()
        };
        assert_ne!(generate(&spec).unwrap(), generate(&other).unwrap());
    }

    #[test]
    fn zero_corruption_copies_ground_truth() {
        let spec = ScenarioSpec {
            seed: 7,
            ..Default::default()
        };
        let (bundle, preds) = generate(&spec).unwrap();
        let video = &bundle.videos["synth"];
        for (q, p) in video.queries.iter().zip(&preds) {
            assert_eq!(q.query_id(), p.query_id());
            assert_eq!(p.tracks().len(), q.referents().len());
            for r in q.referents() {
                let gt = video
                    .track(r.gt_track_id())
                    .unwrap()
                    .filter_frames(|f| r.covers(f));
                let pt = p
                    .tracks()
                    .iter()
                    .find(|t| t.track_id() == r.gt_track_id())
                    .unwrap();
                let boxes = |t: &Track| {
                    t.detections()
                        .iter()
                        .map(|d| (d.frame(), *d.bbox()))
                        .collect::<Vec<_>>()
                };
                assert_eq!(boxes(&gt), boxes(pt));
                let segs: Vec<_> = p.temporal()[&r.gt_track_id()]
                    .iter()
                    .map(|c| *c.segment())
                    .collect();
                assert_eq!(segs, r.gt_segments());
            }
        }
    }

    #[test]
    fn full_drop_empties_predictions() {
        let spec = ScenarioSpec {
            seed: 3,
            drop_prob: 1.0,
            ..Default::default()
        };
        let (_, preds) = generate(&spec).unwrap();
        assert!(preds
            .iter()
            .all(|p| p.tracks().is_empty() && p.temporal().is_empty()));
    }

    #[test]
    fn spec_bounds_are_enforced() {
        let bad = [
            ScenarioSpec {
                frames: 0,
                ..Default::default()
            },
            ScenarioSpec {
                frames: 51,
                ..Default::default()
            },
            ScenarioSpec {
                gt_tracks: 5,
                ..Default::default()
            },
            ScenarioSpec {
                queries: 0,
                ..Default::default()
            },
            ScenarioSpec {
                drop_prob: 1.5,
                ..Default::default()
            },
            ScenarioSpec {
                box_jitter: -1.0,
                ..Default::default()
            },
        ];
        for s in bad {
            assert!(generate(&s).is_err(), "{s:?}");
        }
    }

    #[test]
    fn rng_recipes_are_stable() {
        let mut a = ScenarioRng::new(1);
        let mut b = ScenarioRng::new(1);
        for _ in 0..100 {
            let u = a.uniform();
            assert!((0.0..1.0).contains(&u));
            assert_eq!(u, b.uniform());
            let k = a.int(3, 5);
            assert!((3..=5).contains(&k));
            assert_eq!(k, b.int(3, 5));
            assert!(a.normal().is_finite());
            b.normal();
        }
    }
}
