use std::path::Path;
use svageval::ingest::{
    load_split, parse_query_json_str, parse_track_csv_str, write_ground_truth, write_predictions,
    write_query_json, write_track_csv,
};
use svageval::synth::{generate_split, ScenarioSpec};

fn noisy(seed: u64) -> ScenarioSpec {
    ScenarioSpec {
        seed,
        box_jitter: 2.5,
        id_switch_prob: 0.1,
        drop_prob: 0.2,
        segment_noise: 3,
        distractor_tracks: 1,
        ..Default::default()
    }
}

#[test]
fn written_files_parse_back_to_the_same_bytes() {
    for seed in 0..20 {
        for (_, bundle, _) in generate_split(&noisy(seed), &["ovis"], 2).unwrap() {
            for (vid, video) in &bundle.videos {
                let csv = write_track_csv(&video.tracks, false);
                let tracks = parse_track_csv_str(&csv, Path::new("gt.txt"), false).unwrap();
                assert_eq!(tracks, video.tracks);
                assert_eq!(write_track_csv(&tracks, false), csv);

                let json = write_query_json(vid, &video.queries);
                let (v, queries) = parse_query_json_str(&json, Path::new("queries.json")).unwrap();
                assert_eq!(&v, vid);
                assert_eq!(queries, video.queries);
                assert_eq!(write_query_json(&v, &queries), json);
            }
        }
    }
}

#[test]
fn split_survives_a_trip_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let (gt, pred) = (dir.path().join("gt"), dir.path().join("pred"));
    for (name, bundle, preds) in generate_split(&noisy(3), &["mot17"], 3).unwrap() {
        write_ground_truth(&gt, &name, &bundle).unwrap();
        write_predictions(&pred, &name, &preds).unwrap();
        let (split, warnings) = load_split(&gt, Some(&pred), &name).unwrap();
        assert!(warnings.is_empty(), "{warnings:?}");
        assert_eq!(split.bundle, bundle);
        let mut loaded = split.predictions.clone();
        let mut expected = preds.clone();
        let key =
            |p: &svageval::PredictionSet| (p.video_id().to_string(), p.query_id().to_string());
        loaded.sort_by_key(key);
        expected.sort_by_key(key);
        assert_eq!(loaded, expected);
    }
}
