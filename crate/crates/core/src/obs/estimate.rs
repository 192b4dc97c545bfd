use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::channel::{NoiseModel, TrackedObservation};
use crate::label::VehicleId;
use crate::sim::{Braking, RoadGeometry, HARD_BRAKE_DECEL_MPS2, NORMAL_BRAKE_DECEL_MPS2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Confidence {
    High,
    Low,
}

/// Re-estimated kinematics of one track in one frame. Field order is the
/// on-disk column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatedRecord {
    pub frame: u64,
    pub track_id: VehicleId,
    pub lane: u8,
    pub cell: f64,
    pub lateral_offset: f64,
    pub speed_mps: f64,
    pub accel_mps2: f64,
    pub steering_deg: f64,
    pub braking: Braking,
    pub orientation_deg: f64,
    pub confidence: Confidence,
}

/// Roadside estimate of a scenario, ordered by frame and then track id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EstimatedTrace {
    pub records: Vec<EstimatedRecord>,
}

impl EstimatedTrace {
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn by_track(&self) -> Vec<(VehicleId, Vec<&EstimatedRecord>)> {
        let mut map: BTreeMap<VehicleId, Vec<&EstimatedRecord>> = BTreeMap::new();
        for r in &self.records {
            map.entry(r.track_id).or_default().push(r);
        }
        map.into_iter().collect()
    }
}

/// Smooths each track's ground positions and differentiates them into
/// speed, heading and acceleration. Gaps from missed detections are
/// linearly interpolated; samples far from the local median (id swaps) are
/// dropped and re-interpolated first. Tracks shorter than the smoothing window are
/// estimated unsmoothed and flagged low-confidence.
pub fn estimate_kinematics(obs: &[TrackedObservation], noise: &NoiseModel, road: &RoadGeometry) -> EstimatedTrace {
    let mut tracks: BTreeMap<VehicleId, Vec<(u64, (f64, f64))>> = BTreeMap::new();
    for o in obs {
        tracks.entry(o.track_id).or_default().push((o.frame, o.ground_pos_est));
    }
    let mut records = Vec::with_capacity(obs.len());
    for (id, mut pts) in tracks {
        pts.sort_by_key(|p| p.0);
        pts.dedup_by_key(|p| p.0);
        records.extend(estimate_track(id, &pts, noise, road));
    }
    records.sort_by_key(|r| (r.frame, r.track_id));
    EstimatedTrace { records }
}

fn estimate_track(id: VehicleId, pts: &[(u64, (f64, f64))], noise: &NoiseModel, road: &RoadGeometry) -> Vec<EstimatedRecord> {
    if pts.is_empty() {
        return Vec::new();
    }
    let ring = road.ring_length_m;
    let dt = 1.0 / road.fps;
    let first = pts[0].0;
    let n = (pts[pts.len() - 1].0 - first + 1) as usize;

    // Unwrap x around the ring, then fill missed frames.
    let mut xs = vec![f64::NAN; n];
    let mut ys = vec![f64::NAN; n];
    let mut prev_x: Option<f64> = None;
    for &(f, (x, y)) in pts {
        let mut ux = x;
        if let Some(p) = prev_x {
            ux += ((p - x) / ring).round() * ring;
        }
        prev_x = Some(ux);
        xs[(f - first) as usize] = ux;
        ys[(f - first) as usize] = y;
    }
    fill_gaps(&mut xs);
    fill_gaps(&mut ys);

    let low = n < noise.smoothing_window || n < 3;
    let window = if low { 1 } else { noise.smoothing_window };
    if noise.outlier_gate_m.is_finite() {
        hampel(&mut xs, &mut ys, 3, noise.outlier_gate_m);
    }
    let xs = moving_average(&xs, window);
    let ys = moving_average(&ys, window);
    let k = (window / 2).max(1);

    let mut speed = vec![0.0; n];
    let mut heading = vec![0.0; n];
    for i in 0..n {
        let (a, b) = span(i, n, k);
        if a == b {
            continue;
        }
        let dx = xs[b] - xs[a];
        let dy = ys[b] - ys[a];
        let t = (b - a) as f64 * dt;
        speed[i] = (dx / t).max(0.0);
        if dx != 0.0 || dy != 0.0 {
            // Headings of slow tracks are mostly noise; fade them toward zero.
            let fade = if noise.heading_min_speed_mps > 0.0 {
                (speed[i] / noise.heading_min_speed_mps).min(1.0)
            } else {
                1.0
            };
            heading[i] = fade * dy.atan2(dx).to_degrees();
        }
    }
    // Acceleration is a second derivative; a wider span keeps pixel noise
    // from reading as hard braking.
    let ka = 2 * k;
    let mut accel = vec![0.0; n];
    for (i, a_i) in accel.iter_mut().enumerate() {
        let (a, b) = span(i, n, ka);
        if a != b {
            *a_i = (speed[b] - speed[a]) / ((b - a) as f64 * dt);
        }
    }

    let w = road.lane_width_m;
    let mut lane = road.lane_of(ys[0]);
    let confidence = if low { Confidence::Low } else { Confidence::High };
    (0..n)
        .map(|i| {
            let y = ys[i];
            lane = match lane {
                1 if y > w + noise.lane_hysteresis_m => 2,
                2 if y < w - noise.lane_hysteresis_m => 1,
                l => l,
            };
            EstimatedRecord {
                frame: first + i as u64,
                track_id: id,
                lane,
                cell: xs[i].rem_euclid(ring) / road.cell_length_m,
                lateral_offset: road.offset_in(lane, y).clamp(-1.25, 1.25),
                speed_mps: speed[i],
                accel_mps2: accel[i],
                steering_deg: heading[i],
                braking: Braking::classify(accel[i], HARD_BRAKE_DECEL_MPS2, NORMAL_BRAKE_DECEL_MPS2),
                orientation_deg: heading[i],
                confidence,
            }
        })
        .collect()
}

/// Symmetric difference span around `i`, shrunk at the series ends and
/// falling back to a one-sided step at the very first and last sample.
fn span(i: usize, n: usize, k: usize) -> (usize, usize) {
    if n < 2 {
        return (i, i);
    }
    let h = k.min(i).min(n - 1 - i);
    if h > 0 {
        (i - h, i + h)
    } else if i == 0 {
        (0, 1)
    } else {
        (i - 1, i)
    }
}

fn fill_gaps(v: &mut [f64]) {
    let mut last: Option<usize> = None;
    for i in 0..v.len() {
        if v[i].is_nan() {
            continue;
        }
        if let Some(l) = last {
            for j in l + 1..i {
                let t = (j - l) as f64 / (i - l) as f64;
                v[j] = v[l] + (v[i] - v[l]) * t;
            }
        }
        last = Some(i);
    }
}

/// Drops samples farther than `gate` from the median of their `±half`
/// neighbourhood and re-interpolates them from the surviving neighbours.
fn hampel(xs: &mut [f64], ys: &mut [f64], half: usize, gate: f64) {
    let n = xs.len();
    let (ox, oy) = (xs.to_vec(), ys.to_vec());
    let mut bx = Vec::with_capacity(2 * half + 1);
    let mut by = Vec::with_capacity(2 * half + 1);
    for i in 0..n {
        let lo = i.saturating_sub(half);
        let hi = (i + half).min(n - 1);
        bx.clear();
        by.clear();
        bx.extend_from_slice(&ox[lo..=hi]);
        by.extend_from_slice(&oy[lo..=hi]);
        let (mx, my) = (median(&mut bx), median(&mut by));
        if (ox[i] - mx).hypot(oy[i] - my) > gate {
            xs[i] = f64::NAN;
            ys[i] = f64::NAN;
        }
    }
    for v in [xs, ys] {
        // Leading or trailing outliers have one neighbour side only.
        if let Some(first) = v.iter().position(|x| !x.is_nan()) {
            let last = v.iter().rposition(|x| !x.is_nan()).unwrap_or(first);
            let (a, b) = (v[first], v[last]);
            v[..first].fill(a);
            v[last + 1..].fill(b);
            fill_gaps(v);
        }
    }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

/// Centered moving average, with the window shrunk symmetrically near the
/// ends so linear motion passes through unchanged.
fn moving_average(v: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    if half == 0 {
        return v.to_vec();
    }
    let n = v.len();
    let mut prefix = vec![0.0; n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] + v[i];
    }
    (0..n)
        .map(|i| {
            let h = half.min(i).min(n - 1 - i);
            (prefix[i + h + 1] - prefix[i - h]) / (2 * h + 1) as f64
        })
        .collect()
}
