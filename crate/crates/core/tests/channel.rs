use roadwatch::harness::{error_breakdown, ErrorTolerance, ExperimentConfig};
use roadwatch::obs::{estimate_kinematics, observe, CameraModel, CameraPose, NoiseModel};
use roadwatch::sim::{run_scenario, GroundTruthTrace, SimConfig};

fn setup(seed: u64) -> (SimConfig, GroundTruthTrace, CameraModel) {
    let cfg = SimConfig { seed, duration_ticks: 60, ..SimConfig::default() };
    let g = cfg.geometry();
    let cam = CameraModel::roadside(&CameraPose::default(), g.fps, g.ring_length_m, g.road_width_m()).unwrap();
    (cfg.clone(), run_scenario(&cfg).unwrap(), cam)
}

#[test]
fn zero_noise_channel_is_transparent() {
    let (cfg, trace, cam) = setup(4);
    let g = cfg.geometry();
    let obs = observe(&trace, &cam, &NoiseModel::zero(), &g, 1).unwrap();
    assert_eq!(obs.len(), trace.len());
    for (o, r) in obs.iter().zip(&trace.records) {
        assert_eq!((o.frame, o.track_id), (r.frame, r.vehicle_id));
        assert!(!o.is_switched());
        assert!((o.ground_pos_est.0 - r.cell * g.cell_length_m).abs() < 1e-9);
        assert!((o.ground_pos_est.1 - g.y_of(r.lane, r.lateral_offset)).abs() < 1e-9);
    }
    let est = estimate_kinematics(&obs, &NoiseModel::zero(), &g);
    // The trace lane is the automaton's lane, which switches mid-transition;
    // the physical lateral position is what must survive the channel.
    for (e, r) in est.records.iter().zip(&trace.records) {
        let y_true = g.y_of(r.lane, r.lateral_offset);
        if e.lateral_offset.abs() < 1.25 {
            assert!((g.y_of(e.lane, e.lateral_offset) - y_true).abs() < 1e-9);
        }
        if r.lateral_offset.abs() < 0.9 {
            assert_eq!(e.lane, r.lane, "frame {}", r.frame);
        }
    }
    let counts = error_breakdown(&trace, &obs, &est, &ErrorTolerance::default(), cfg.speed_limit_mps).unwrap();
    assert_eq!(counts.switched_frames, 0);
    assert!(counts.estimation_error_rate() < 0.01, "{}", counts.estimation_error_rate());
}

#[test]
fn estimation_error_grows_with_pixel_noise() {
    let mut last = -1.0;
    for sigma in [0.0, 2.0, 5.0, 10.0] {
        let mut counts = roadwatch::harness::ErrorCounts::default();
        for seed in 0..4 {
            let (cfg, trace, cam) = setup(seed);
            let noise = NoiseModel { pos_noise_sigma_px: sigma, ..NoiseModel::default() };
            let obs = observe(&trace, &cam, &noise, &cfg.geometry(), 99 + seed).unwrap();
            let est = estimate_kinematics(&obs, &noise, &cfg.geometry());
            counts.add(&error_breakdown(&trace, &obs, &est, &ErrorTolerance::default(), cfg.speed_limit_mps).unwrap());
        }
        let rate = counts.estimation_error_rate();
        assert!(rate > last, "sigma {sigma}: {rate} not above {last}");
        last = rate;
    }
}

#[test]
fn tracking_error_follows_switch_probability() {
    let (cfg, trace, cam) = setup(8);
    let rate = |p: f64| {
        let noise = NoiseModel { id_switch_prob: p, pos_noise_sigma_px: 0.0, ..NoiseModel::default() };
        let obs = observe(&trace, &cam, &noise, &cfg.geometry(), 5).unwrap();
        roadwatch::obs::switched_frame_rate(&obs).unwrap()
    };
    assert_eq!(rate(0.0), 0.0);
    let r = rate(0.2);
    assert!((r - 0.2).abs() < 0.03, "{r}");
}

#[test]
fn channel_is_deterministic_per_seed() {
    let (cfg, trace, cam) = setup(2);
    let n = NoiseModel::default();
    let a = observe(&trace, &cam, &n, &cfg.geometry(), 11).unwrap();
    let b = observe(&trace, &cam, &n, &cfg.geometry(), 11).unwrap();
    let c = observe(&trace, &cam, &n, &cfg.geometry(), 12).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn default_noise_is_the_experiment_default() {
    assert_eq!(ExperimentConfig::default().noise, NoiseModel::default());
}
