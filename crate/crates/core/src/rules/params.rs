use serde::{Deserialize, Serialize};

use crate::ec::ParamTable;
use crate::error::{Error, Result};

/// Overspeed threshold for roads with a given speed limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoadTypeOverride {
    pub speed_limit_mps: f64,
    pub os_mps: f64,
}

/// Detector thresholds. Offsets are in half-lane units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorParams {
    /// Overspeed threshold as a multiple of the speed limit, unless a road
    /// type override matches.
    pub os_factor: f64,
    pub slow_factor: f64,
    pub hbd: f64,
    pub nbd: f64,
    pub drift_offset: f64,
    pub drift_min_frames: u64,
    pub proximity_offset: f64,
    pub straddle_offset: f64,
    pub weave_alternations: usize,
    pub weave_window_frames: u64,
    pub sudden_steer_deg_per_frame: f64,
    pub behavior_min_frames: u64,
    /// Lateral detectors ignore frames this close to a lane transition.
    pub lane_change_mask_frames: u64,
    /// `laneChange` holds this long after a lane transition.
    pub lane_change_hold_frames: u64,
    pub stopping_frames: u64,
    pub road_types: Vec<RoadTypeOverride>,
}

impl Default for DetectorParams {
    fn default() -> Self {
        DetectorParams {
            os_factor: 1.1,
            slow_factor: 0.5,
            hbd: -8.0,
            nbd: -3.0,
            drift_offset: 0.3,
            drift_min_frames: 30,
            proximity_offset: 0.6,
            straddle_offset: 0.9,
            weave_alternations: 2,
            weave_window_frames: 90,
            sudden_steer_deg_per_frame: 1.5,
            behavior_min_frames: 30,
            lane_change_mask_frames: 35,
            lane_change_hold_frames: 60,
            stopping_frames: 15,
            road_types: Vec::new(),
        }
    }
}

impl DetectorParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.hbd < self.nbd && self.nbd < 0.0) {
            return Err(Error::config("detector thresholds need hbd < nbd < 0"));
        }
        if !(0.0 < self.drift_offset
            && self.drift_offset < self.proximity_offset
            && self.proximity_offset < self.straddle_offset
            && self.straddle_offset <= 1.25)
        {
            return Err(Error::config(
                "detector offsets need 0 < drift < proximity < straddle <= 1.25",
            ));
        }
        if !(self.slow_factor > 0.0 && self.slow_factor < 1.0) || self.os_factor <= 0.0 {
            return Err(Error::config("need os > 0 and 0 < slow_factor < 1"));
        }
        if self.weave_alternations == 0 || self.weave_window_frames == 0 || self.sudden_steer_deg_per_frame <= 0.0 {
            return Err(Error::config("weave and sudden-steer thresholds must be positive"));
        }
        if self.road_types.iter().any(|r| r.os_mps <= 0.0 || r.speed_limit_mps <= 0.0) {
            return Err(Error::config("road type thresholds must be positive"));
        }
        Ok(())
    }

    /// Overspeed threshold for a road with `speed_limit_mps`.
    pub fn os_for(&self, speed_limit_mps: f64) -> f64 {
        self.road_types
            .iter()
            .find(|r| (r.speed_limit_mps - speed_limit_mps).abs() < 1e-9)
            .map_or(self.os_factor * speed_limit_mps, |r| r.os_mps)
    }

    /// Parameter table read by the rule library's `th(...)` literals.
    pub fn param_table(&self, speed_limit_mps: f64) -> ParamTable {
        let os = self.os_for(speed_limit_mps);
        [("os", os), ("slow", self.slow_factor * os), ("hbd", self.hbd), ("nbd", self.nbd)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect()
    }
}
