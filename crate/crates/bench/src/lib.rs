//! Fixtures shared by the benchmarks.

use svageval::ingest::DatasetSplit;
use svageval::synth::{generate_split, random_temporal_pairs, ScenarioRng, ScenarioSpec};
use svageval::{BoundingBox, Detection, TemporalPair, Track};

/// `n` gt tracks drifting across `frames` frames and noisy predictions of
/// them, with every third predicted track switching identity halfway.
pub fn tracking_scope(n: u64, frames: u32, seed: u64) -> (Vec<Track>, Vec<Track>) {
    let mut rng = ScenarioRng::new(seed);
    let mut gt = Vec::new();
    let mut pred = Vec::new();
    for id in 1..=n {
        let (x0, y0) = (rng.range(0.0, 800.0), rng.range(0.0, 600.0));
        let (vx, vy) = (rng.range(-3.0, 3.0), rng.range(-3.0, 3.0));
        let mut g = Vec::new();
        let mut p: Vec<Detection> = Vec::new();
        let mut q: Vec<Detection> = Vec::new();
        for f in 1..=frames {
            let t = f64::from(f);
            let b = BoundingBox::new(x0 + vx * t, y0 + vy * t, 40.0, 80.0).unwrap();
            g.push(Detection::new(f, id, b, None).unwrap());
            if rng.chance(0.1) {
                continue;
            }
            let jb = BoundingBox::new(
                b.x() + 4.0 * rng.normal(),
                b.y() + 4.0 * rng.normal(),
                40.0,
                80.0,
            )
            .unwrap();
            let switched = id % 3 == 0 && f > frames / 2;
            let pid = if switched { 10_000 + id } else { 1_000 + id };
            let d = Detection::new(f, pid, jb, Some(1.0)).unwrap();
            if switched {
                q.push(d);
            } else {
                p.push(d);
            }
        }
        gt.push(Track::new(id, g).unwrap());
        for dets in [p, q] {
            if let Some(first) = dets.first() {
                pred.push(Track::new(first.track_id(), dets).unwrap());
            }
        }
    }
    (gt, pred)
}

/// Exactly `pairs` random pairs with up to 20 candidates each.
pub fn temporal_pairs(seed: u64, pairs: usize) -> Vec<TemporalPair> {
    let mut rng = ScenarioRng::new(seed);
    let mut out = Vec::with_capacity(pairs);
    while out.len() < pairs {
        out.extend(random_temporal_pairs(&mut rng, 8, 20));
    }
    out.truncate(pairs);
    out
}

/// A corrupted synthetic dataset of `videos` videos.
pub fn synthetic_split(videos: u32) -> DatasetSplit {
    let spec = ScenarioSpec {
        seed: 1,
        frames: 50,
        gt_tracks: 4,
        queries: 6,
        box_jitter: 2.0,
        id_switch_prob: 0.05,
        drop_prob: 0.1,
        segment_noise: 3,
        distractor_tracks: 3,
    };
    let (name, bundle, predictions) = generate_split(&spec, &["ovis"], videos)
        .expect("valid scenario")
        .remove(0);
    DatasetSplit {
        name,
        bundle,
        predictions,
    }
}
