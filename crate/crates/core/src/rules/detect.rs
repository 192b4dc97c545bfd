use std::collections::BTreeMap;

use super::params::DetectorParams;
use crate::ec::{Interval, IntervalSet, TimePoint};
use crate::error::{Error, Result};
use crate::obs::EstimatedRecord;
use crate::sim::TraceRecord;

/// The kinematic columns the detectors read, common to ground-truth and
/// roadside traces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinematicSample {
    pub frame: u64,
    pub lane: u8,
    pub lateral_offset: f64,
    pub speed_mps: f64,
    pub accel_mps2: f64,
    pub steering_deg: f64,
}

impl From<&TraceRecord> for KinematicSample {
    fn from(r: &TraceRecord) -> Self {
        KinematicSample {
            frame: r.frame,
            lane: r.lane,
            lateral_offset: r.lateral_offset,
            speed_mps: r.speed_mps,
            accel_mps2: r.accel_mps2,
            steering_deg: r.steering_deg,
        }
    }
}

impl From<&EstimatedRecord> for KinematicSample {
    fn from(r: &EstimatedRecord) -> Self {
        KinematicSample {
            frame: r.frame,
            lane: r.lane,
            lateral_offset: r.lateral_offset,
            speed_mps: r.speed_mps,
            accel_mps2: r.accel_mps2,
            steering_deg: r.steering_deg,
        }
    }
}

/// Events, input-fluent intervals and change-driven scalar samples of one
/// vehicle.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PrimitiveStream {
    /// `(frame, event name)`, ordered by frame.
    pub events: Vec<(TimePoint, &'static str)>,
    pub intervals: BTreeMap<&'static str, IntervalSet>,
    pub scalars: BTreeMap<&'static str, Vec<(TimePoint, f64)>>,
}

impl PrimitiveStream {
    pub fn event_frames(&self, name: &str) -> Vec<TimePoint> {
        self.events.iter().filter(|(_, n)| *n == name).map(|(t, _)| *t).collect()
    }

    pub fn interval(&self, name: &str) -> IntervalSet {
        self.intervals.get(name).cloned().unwrap_or_default()
    }
}

/// Turns one vehicle's kinematic series into primitive events and fluents.
pub fn detect_primitives(series: &[KinematicSample], p: &DetectorParams) -> Result<PrimitiveStream> {
    for w in series.windows(2) {
        if w[1].frame <= w[0].frame {
            return Err(Error::NonMonotonicFrames { series: "kinematic".into(), prev: w[0].frame, next: w[1].frame });
        }
    }
    let mut out = PrimitiveStream::default();
    if series.is_empty() {
        return Ok(out);
    }
    let end = series[series.len() - 1].frame + 1;

    // Lanes and lane transitions.
    let mut lane1 = Vec::new();
    let mut lane2 = Vec::new();
    let mut transitions = Vec::new();
    let mut run_start = series[0].frame;
    for (i, s) in series.iter().enumerate() {
        let last = i + 1 == series.len();
        if i > 0 && s.lane != series[i - 1].lane {
            transitions.push(s.frame);
            out.events.push((s.frame, if s.lane == 1 { "changeLane1" } else { "changeLane2" }));
        }
        if last || series[i + 1].lane != s.lane {
            let iv = Interval::new(run_start, if last { end } else { series[i + 1].frame });
            if s.lane == 1 { lane1.push(iv) } else { lane2.push(iv) }
            if !last {
                run_start = series[i + 1].frame;
            }
        }
    }
    for (k, &f) in transitions.iter().enumerate() {
        let settle = f + p.lane_change_hold_frames;
        if transitions.get(k + 1).is_none_or(|&next| next > settle) && settle < end {
            out.events.push((settle, "laneChangeSettled"));
        }
    }
    out.intervals.insert("atLane1", IntervalSet::from_intervals(lane1));
    out.intervals.insert("atLane2", IntervalSet::from_intervals(lane2));

    // A lane change still in progress at either end of the series cannot be
    // told apart from a lateral excursion, so the ends are masked as well.
    let m = p.lane_change_mask_frames;
    let begin = series[0].frame;
    let mask = IntervalSet::from_intervals(
        transitions
            .iter()
            .map(|&f| Interval::new(f.saturating_sub(m), f + m + 1))
            .chain([Interval::new(begin, begin + m), Interval::new(end.saturating_sub(m), end)]),
    );
    let masked = |f: u64| mask.contains(f);
    let offset = |s: &KinematicSample| if masked(s.frame) { 0.0 } else { s.lateral_offset };

    // Proximity crossings, clearing, and weave alternations.
    let mut side = 0i8;
    let mut crossings: Vec<(u64, i8)> = Vec::new();
    for s in series {
        let o = offset(s);
        let now = if o < -p.proximity_offset {
            -1
        } else if o > p.proximity_offset {
            1
        } else {
            0
        };
        if now != side {
            if now == 0 {
                out.events.push((s.frame, "proximityCleared"));
            } else {
                out.events.push((s.frame, if now < 0 { "proximityLeft" } else { "proximityRight" }));
                crossings.push((s.frame, now));
                let alternations = count_alternations(&crossings, s.frame, p.weave_window_frames);
                if alternations >= p.weave_alternations {
                    out.events.push((s.frame, "weaving"));
                }
            }
            side = now;
        }
    }

    // Drift and straddle intervals.
    let runs = |threshold: f64, min_len: u64| -> IntervalSet {
        let mut ivs = Vec::new();
        let mut start: Option<u64> = None;
        let mut prev_frame = 0;
        for s in series {
            let above = offset(s).abs() > threshold;
            let contiguous = s.frame == prev_frame + 1;
            if let Some(st) = start {
                if !above || !contiguous {
                    if prev_frame + 1 - st >= min_len {
                        ivs.push(Interval::new(st, prev_frame + 1));
                    }
                    start = None;
                }
            }
            if above && start.is_none() {
                start = Some(s.frame);
            }
            prev_frame = s.frame;
        }
        if let Some(st) = start {
            if end - st >= min_len {
                ivs.push(Interval::new(st, end));
            }
        }
        IntervalSet::from_intervals(ivs)
    };
    out.intervals.insert("laneDrifting", runs(p.drift_offset, p.drift_min_frames.max(1)));
    out.intervals.insert("straddling", runs(p.straddle_offset, 1));

    // Sudden steering.
    for w in series.windows(2) {
        if w[1].frame == w[0].frame + 1
            && !masked(w[0].frame)
            && !masked(w[1].frame)
            && (w[1].steering_deg - w[0].steering_deg).abs() >= p.sudden_steer_deg_per_frame
        {
            out.events.push((w[1].frame, "suddenSteer"));
        }
    }

    // Stopping: speed strictly decreasing over the frames after a braking onset.
    let mut stopping = Vec::new();
    let n = p.stopping_frames as usize;
    for i in 0..series.len() {
        let onset = series[i].accel_mps2 <= p.nbd && (i == 0 || series[i - 1].accel_mps2 > p.nbd);
        if onset && i + n < series.len() && (i + 1..=i + n).all(|j| series[j].speed_mps < series[j - 1].speed_mps) {
            stopping.push(Interval::new(series[i].frame, series[i + n].frame + 1));
        }
    }
    out.intervals.insert("stopping", IntervalSet::from_intervals(stopping));

    // Change-driven scalar samples.
    let mut speed = Vec::new();
    let mut accel = Vec::new();
    let mut decel = Vec::new();
    for s in series {
        push_changed(&mut speed, s.frame, s.speed_mps);
        push_changed(&mut accel, s.frame, s.accel_mps2);
        push_changed(&mut decel, s.frame, (-s.accel_mps2).max(0.0));
    }
    out.scalars.insert("speed", speed);
    out.scalars.insert("acceleration", accel);
    out.scalars.insert("deceleration", decel);

    out.events.sort_by_key(|(t, _)| *t);
    Ok(out)
}

fn push_changed(v: &mut Vec<(TimePoint, f64)>, t: TimePoint, x: f64) {
    if v.last().is_none_or(|&(_, last)| last != x) {
        v.push((t, x));
    }
}

/// Side changes among the crossings inside `(now - window, now]`.
fn count_alternations(crossings: &[(u64, i8)], now: u64, window: u64) -> usize {
    let recent: Vec<i8> = crossings.iter().filter(|(f, _)| f + window > now).map(|&(_, s)| s).collect();
    recent.windows(2).filter(|w| w[0] != w[1]).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(n: u64, f: impl Fn(u64) -> KinematicSample) -> Vec<KinematicSample> {
        (0..n).map(f).collect()
    }

    /// Defaults without the lane-change and series-end masks.
    fn unmasked() -> DetectorParams {
        DetectorParams { lane_change_mask_frames: 0, ..DetectorParams::default() }
    }

    fn base(frame: u64) -> KinematicSample {
        KinematicSample { frame, lane: 1, lateral_offset: 0.0, speed_mps: 30.0, accel_mps2: 0.0, steering_deg: 0.0 }
    }

    #[test]
    fn proximity_left_at_first_crossing() {
        let s = series(40, |f| KinematicSample { lateral_offset: -0.07 * f as f64, ..base(f) });
        let out = detect_primitives(&s, &unmasked()).unwrap();
        // -0.07 * 9 = -0.63 is the first value below -0.6.
        assert_eq!(out.event_frames("proximityLeft"), vec![9]);
        assert!(out.event_frames("proximityRight").is_empty());
    }

    #[test]
    fn weaving_needs_fast_alternation() {
        let square = |half: u64| {
            series(600, move |f| KinematicSample {
                lateral_offset: if (f / half) % 2 == 0 { 0.7 } else { -0.7 },
                ..base(f)
            })
        };
        let p = unmasked();
        assert!(!detect_primitives(&square(30), &p).unwrap().event_frames("weaving").is_empty());
        assert!(detect_primitives(&square(120), &p).unwrap().event_frames("weaving").is_empty());
    }

    #[test]
    fn drift_requires_duration() {
        let p = unmasked();
        let short = series(100, |f| KinematicSample { lateral_offset: if (10..30).contains(&f) { 0.4 } else { 0.0 }, ..base(f) });
        assert!(detect_primitives(&short, &p).unwrap().interval("laneDrifting").is_empty());
        let long = series(100, |f| KinematicSample { lateral_offset: if (10..50).contains(&f) { 0.4 } else { 0.0 }, ..base(f) });
        let iv = detect_primitives(&long, &p).unwrap().interval("laneDrifting");
        assert_eq!(iv.as_slice(), &[Interval::new(10, 50)]);
    }

    #[test]
    fn lane_transition_emits_change_and_settle_and_masks_offsets() {
        let s = series(200, |f| {
            let lane = if f < 100 { 1 } else { 2 };
            // The crossing itself looks like straddling, but it is masked.
            let lateral_offset = if (95..105).contains(&f) { if f < 100 { 1.0 } else { -1.0 } } else { 0.0 };
            KinematicSample { lane, lateral_offset, ..base(f) }
        });
        let out = detect_primitives(&s, &DetectorParams::default()).unwrap();
        assert_eq!(out.event_frames("changeLane2"), vec![100]);
        assert_eq!(out.event_frames("laneChangeSettled"), vec![160]);
        assert!(out.interval("straddling").is_empty());
        assert!(out.event_frames("proximityRight").is_empty());
        assert_eq!(out.interval("atLane1").as_slice(), &[Interval::new(0, 100)]);
        assert_eq!(out.interval("atLane2").as_slice(), &[Interval::new(100, 200)]);
    }

    #[test]
    fn series_ends_are_masked() {
        let s = series(100, |f| KinematicSample { lateral_offset: if f >= 80 { 0.95 } else { 0.0 }, ..base(f) });
        let out = detect_primitives(&s, &DetectorParams::default()).unwrap();
        assert!(out.interval("straddling").is_empty());
        assert!(out.event_frames("proximityRight").is_empty());
        let out = detect_primitives(&s, &unmasked()).unwrap();
        assert_eq!(out.interval("straddling").as_slice(), &[Interval::new(80, 100)]);
    }

    #[test]
    fn sudden_steer_threshold() {
        let s = series(10, |f| KinematicSample { steering_deg: if f >= 5 { 1.5 } else { 0.0 }, ..base(f) });
        assert_eq!(detect_primitives(&s, &unmasked()).unwrap().event_frames("suddenSteer"), vec![5]);
        let s = series(10, |f| KinematicSample { steering_deg: f as f64 * 1.4, ..base(f) });
        assert!(detect_primitives(&s, &unmasked()).unwrap().event_frames("suddenSteer").is_empty());
    }

    #[test]
    fn stopping_after_braking() {
        let s = series(60, |f| {
            let braking = (20..40).contains(&f);
            KinematicSample {
                accel_mps2: if braking { -4.0 } else { 0.0 },
                speed_mps: if f < 20 { 20.0 } else if braking { 20.0 - (f - 19) as f64 * 0.5 } else { 10.0 },
                ..base(f)
            }
        });
        let out = detect_primitives(&s, &DetectorParams::default()).unwrap();
        assert_eq!(out.interval("stopping").as_slice(), &[Interval::new(20, 36)]);
    }

    #[test]
    fn scalars_are_change_driven() {
        let s = series(10, |f| KinematicSample { speed_mps: if f < 5 { 10.0 } else { 12.0 }, ..base(f) });
        let out = detect_primitives(&s, &DetectorParams::default()).unwrap();
        assert_eq!(out.scalars["speed"], vec![(0, 10.0), (5, 12.0)]);
        assert_eq!(out.scalars["acceleration"], vec![(0, 0.0)]);
    }

    #[test]
    fn non_monotonic_frames_are_rejected() {
        let s = vec![base(3), base(2)];
        assert!(matches!(detect_primitives(&s, &DetectorParams::default()), Err(Error::NonMonotonicFrames { .. })));
    }
}
