use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::camera::CameraModel;
use crate::error::{Error, Result};
use crate::label::VehicleId;
use crate::sim::{GroundTruthTrace, RoadGeometry};

/// Detection and tracking noise of the roadside channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseModel {
    pub pos_noise_sigma_px: f64,
    /// Probability per frame that the two nearest tracks swap ids for that frame.
    pub id_switch_prob: f64,
    pub miss_prob: f64,
    /// Centered moving-average window for kinematic estimation, in frames.
    pub smoothing_window: usize,
    /// Position samples farther than this from the local median are dropped and re-interpolated.
    pub outlier_gate_m: f64,
    /// Headings are scaled toward zero below this estimated speed.
    pub heading_min_speed_mps: f64,
    /// Lane-boundary hysteresis for the estimated lane.
    pub lane_hysteresis_m: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            pos_noise_sigma_px: 4.3,
            id_switch_prob: 0.0057,
            miss_prob: 0.005,
            smoothing_window: 15,
            outlier_gate_m: 1.5,
            heading_min_speed_mps: 3.0,
            lane_hysteresis_m: 0.15,
        }
    }
}

impl NoiseModel {
    /// Transparent channel: no noise, no misses, no smoothing.
    pub fn zero() -> Self {
        NoiseModel {
            pos_noise_sigma_px: 0.0,
            id_switch_prob: 0.0,
            miss_prob: 0.0,
            smoothing_window: 1,
            outlier_gate_m: f64::INFINITY,
            heading_min_speed_mps: 0.0,
            lane_hysteresis_m: 0.0,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.pos_noise_sigma_px == 0.0 && self.id_switch_prob == 0.0 && self.miss_prob == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("id_switch_prob", self.id_switch_prob), ("miss_prob", self.miss_prob)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::config(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        if !(self.pos_noise_sigma_px >= 0.0 && self.pos_noise_sigma_px.is_finite()) {
            return Err(Error::config("pos_noise_sigma_px must be finite and >= 0"));
        }
        if self.smoothing_window == 0 {
            return Err(Error::config("smoothing_window must be >= 1"));
        }
        if !(self.outlier_gate_m > 0.0) || self.heading_min_speed_mps < 0.0 || self.lane_hysteresis_m < 0.0 {
            return Err(Error::config("outlier gate must be positive; heading and lane guards non-negative"));
        }
        Ok(())
    }
}

/// One roadside detection. `source` is the simulator's bookkeeping of which
/// vehicle produced it; the estimator never reads it.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackedObservation {
    pub frame: u64,
    pub track_id: VehicleId,
    pub source: VehicleId,
    pub ground_pos_est: (f64, f64),
}

impl TrackedObservation {
    pub fn is_switched(&self) -> bool {
        self.track_id != self.source
    }
}

/// Observes every frame of `trace`: drops detections with `miss_prob`,
/// perturbs the projected pixel with isotropic Gaussian noise, maps it back
/// with IPM, and with `id_switch_prob` swaps the ids of the two nearest
/// detections for that frame. Output is ordered by frame then track id.
pub fn observe(
    trace: &GroundTruthTrace,
    camera: &CameraModel,
    noise: &NoiseModel,
    road: &RoadGeometry,
    seed: u64,
) -> Result<Vec<TrackedObservation>> {
    noise.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gauss = Normal::new(0.0, noise.pos_noise_sigma_px.max(f64::MIN_POSITIVE)).expect("finite sigma");
    let mut out = Vec::with_capacity(trace.len());
    let mut frame_obs: Vec<TrackedObservation> = Vec::new();
    let mut truth: Vec<(f64, f64)> = Vec::new();
    let mut i = 0;
    let recs = &trace.records;
    while i < recs.len() {
        let frame = recs[i].frame;
        frame_obs.clear();
        truth.clear();
        while i < recs.len() && recs[i].frame == frame {
            let r = &recs[i];
            i += 1;
            let miss = rng.random::<f64>() < noise.miss_prob;
            let (nu, nv) = (gauss.sample(&mut rng), gauss.sample(&mut rng));
            if miss {
                continue;
            }
            let ground = (r.cell * road.cell_length_m, road.y_of(r.lane, r.lateral_offset));
            let est = if noise.pos_noise_sigma_px == 0.0 {
                ground
            } else {
                let (u, v) = camera.project_to_image(ground)?;
                camera.ipm_to_ground((u + nu, v + nv))?
            };
            frame_obs.push(TrackedObservation { frame, track_id: r.vehicle_id, source: r.vehicle_id, ground_pos_est: est });
            truth.push(ground);
        }
        if rng.random::<f64>() < noise.id_switch_prob {
            if let Some((a, b)) = nearest_pair(&truth, road.ring_length_m) {
                let ta = frame_obs[a].track_id;
                frame_obs[a].track_id = frame_obs[b].track_id;
                frame_obs[b].track_id = ta;
            }
        }
        frame_obs.sort_by_key(|o| o.track_id);
        out.append(&mut frame_obs);
    }
    Ok(out)
}

fn nearest_pair(points: &[(f64, f64)], ring: f64) -> Option<(usize, usize)> {
    let mut best: Option<(f64, usize, usize)> = None;
    for a in 0..points.len() {
        for b in a + 1..points.len() {
            let mut dx = (points[a].0 - points[b].0).abs();
            if ring > 0.0 {
                dx = dx.min(ring - dx);
            }
            let d = dx.hypot(points[a].1 - points[b].1);
            if best.is_none_or(|(bd, _, _)| d < bd) {
                best = Some((d, a, b));
            }
        }
    }
    best.map(|(_, a, b)| (a, b))
}

/// Fraction of frames in which at least one detection carries a wrong id.
pub fn switched_frame_rate(obs: &[TrackedObservation]) -> Option<f64> {
    let mut frames = 0usize;
    let mut bad = 0usize;
    let mut i = 0;
    while i < obs.len() {
        let f = obs[i].frame;
        let mut any = false;
        while i < obs.len() && obs[i].frame == f {
            any |= obs[i].is_switched();
            i += 1;
        }
        frames += 1;
        bad += any as usize;
    }
    (frames > 0).then(|| bad as f64 / frames as f64)
}
