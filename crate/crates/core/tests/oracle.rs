use svageval::spatial::{evaluate_sweep, hota_sweep};
use svageval::synth::{
    oracle_hota, oracle_temporal, random_temporal_pairs, random_tracking_instance, ScenarioRng,
};
use svageval::temporal::evaluate_temporal;

#[test]
fn hota_matches_brute_force() {
    for seed in 0..1000u64 {
        let mut rng = ScenarioRng::new(seed);
        let (gt, pred) = random_tracking_instance(&mut rng, 3, 5);
        let engine = hota_sweep(&gt, &pred);
        let oracle = oracle_hota(&gt, &pred).unwrap();
        assert_eq!(engine, oracle, "seed {seed}");
    }
}

#[test]
fn hota_matches_brute_force_at_oracle_limits() {
    for seed in 0..200u64 {
        let mut rng = ScenarioRng::new(10_000 + seed);
        let (gt, pred) = random_tracking_instance(&mut rng, 4, 10);
        assert_eq!(
            hota_sweep(&gt, &pred),
            oracle_hota(&gt, &pred).unwrap(),
            "seed {seed}"
        );
    }
}

#[test]
fn per_alpha_hota_is_geometric_mean() {
    for seed in 0..1000u64 {
        let mut rng = ScenarioRng::new(seed);
        let (gt, pred) = random_tracking_instance(&mut rng, 3, 5);
        for c in evaluate_sweep(&gt, &pred).per_alpha {
            assert!(
                (c.hota * c.hota - c.det_a * c.ass_a).abs() <= 1e-9,
                "seed {seed}"
            );
        }
    }
}

#[test]
fn temporal_matches_brute_force() {
    for seed in 0..1000u64 {
        let mut rng = ScenarioRng::new(seed);
        let pairs = random_temporal_pairs(&mut rng, 6, 20);
        for nms in [None, Some(0.7), Some(0.3), Some(0.0), Some(1.0)] {
            assert_eq!(
                evaluate_temporal(&pairs, nms).unwrap(),
                oracle_temporal(&pairs, nms).unwrap(),
                "seed {seed} nms {nms:?}"
            );
        }
    }
}
