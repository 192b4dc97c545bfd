use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::Behavior;

/// Per-tick probabilities of starting each injected micro-behavior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct Propensities {
    pub weave_rate: f64,
    pub sudden_steer_rate: f64,
    pub hard_brake_rate: f64,
    pub drift_rate: f64,
    pub straddle_rate: f64,
    pub overspeed_rate: f64,
    pub slow_speed_rate: f64,
}

impl Propensities {
    pub fn get(&self, m: MicroBehavior) -> f64 {
        match m {
            MicroBehavior::Weave => self.weave_rate,
            MicroBehavior::SuddenSteer => self.sudden_steer_rate,
            MicroBehavior::HardBrake => self.hard_brake_rate,
            MicroBehavior::Drift => self.drift_rate,
            MicroBehavior::Straddle => self.straddle_rate,
            MicroBehavior::Overspeed => self.overspeed_rate,
            MicroBehavior::SlowSpeed => self.slow_speed_rate,
        }
    }

    pub fn get_mut(&mut self, m: MicroBehavior) -> &mut f64 {
        match m {
            MicroBehavior::Weave => &mut self.weave_rate,
            MicroBehavior::SuddenSteer => &mut self.sudden_steer_rate,
            MicroBehavior::HardBrake => &mut self.hard_brake_rate,
            MicroBehavior::Drift => &mut self.drift_rate,
            MicroBehavior::Straddle => &mut self.straddle_rate,
            MicroBehavior::Overspeed => &mut self.overspeed_rate,
            MicroBehavior::SlowSpeed => &mut self.slow_speed_rate,
        }
    }
}

/// Injectable micro-behaviors, one per propensity knob.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MicroBehavior {
    Overspeed,
    SlowSpeed,
    HardBrake,
    Drift,
    Straddle,
    Weave,
    SuddenSteer,
}

impl MicroBehavior {
    pub const ALL: [MicroBehavior; 7] = [
        MicroBehavior::Overspeed,
        MicroBehavior::SlowSpeed,
        MicroBehavior::HardBrake,
        MicroBehavior::Drift,
        MicroBehavior::Straddle,
        MicroBehavior::Weave,
        MicroBehavior::SuddenSteer,
    ];

    /// Name used in trace flags and on the command line.
    pub fn as_str(self) -> &'static str {
        match self {
            MicroBehavior::Overspeed => "overspeed",
            MicroBehavior::SlowSpeed => "slow_speed",
            MicroBehavior::HardBrake => "hard_brake",
            MicroBehavior::Drift => "drift",
            MicroBehavior::Straddle => "straddle",
            MicroBehavior::Weave => "weave",
            MicroBehavior::SuddenSteer => "sudden_steer",
        }
    }

    /// The recognition assertion this knob feeds.
    pub fn assertion(self) -> &'static str {
        match self {
            MicroBehavior::Overspeed => "overSpeed",
            MicroBehavior::SlowSpeed => "slowSpeed",
            MicroBehavior::HardBrake => "hardBraking",
            MicroBehavior::Drift => "laneDrifting",
            MicroBehavior::Straddle => "straddling",
            MicroBehavior::Weave => "weaving",
            MicroBehavior::SuddenSteer => "suddenSteer",
        }
    }

    pub fn bit(self) -> u8 {
        1 << (self as u8)
    }

    pub fn is_lateral(self) -> bool {
        matches!(
            self,
            MicroBehavior::Drift | MicroBehavior::Straddle | MicroBehavior::Weave | MicroBehavior::SuddenSteer
        )
    }
}

impl fmt::Display for MicroBehavior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MicroBehavior {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.trim().chars().filter(|c| *c != '_' && *c != '-').collect::<String>().to_lowercase();
        Ok(match key.as_str() {
            "overspeed" | "speeding" => MicroBehavior::Overspeed,
            "slowspeed" | "slow" => MicroBehavior::SlowSpeed,
            "hardbrake" | "hardbraking" => MicroBehavior::HardBrake,
            "drift" | "lanedrifting" | "drifting" => MicroBehavior::Drift,
            "straddle" | "straddling" => MicroBehavior::Straddle,
            "weave" | "weaving" => MicroBehavior::Weave,
            "suddensteer" | "suddensteering" => MicroBehavior::SuddenSteer,
            _ => return Err(Error::UnknownMicroBehavior(s.to_string())),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriverProfile {
    pub label: Behavior,
    #[serde(default)]
    pub propensities: Propensities,
    /// Overspeed target as a multiple of the speed limit.
    #[serde(default = "default_overspeed_factor")]
    pub overspeed_factor: f64,
    /// Weave period, in ticks.
    #[serde(default = "default_oscillation_period")]
    pub lateral_oscillation_period: u32,
}

fn default_overspeed_factor() -> f64 {
    1.4
}

fn default_oscillation_period() -> u32 {
    2
}

impl DriverProfile {
    pub fn safe() -> Self {
        Self::with(Behavior::Safe, Propensities::default())
    }

    pub fn distracted() -> Self {
        Self::with(
            Behavior::Distracted,
            Propensities { drift_rate: 0.05, straddle_rate: 0.04, slow_speed_rate: 0.05, ..Default::default() },
        )
    }

    pub fn aggressive() -> Self {
        Self::with(
            Behavior::Aggressive,
            Propensities {
                overspeed_rate: 0.10,
                hard_brake_rate: 0.05,
                weave_rate: 0.08,
                sudden_steer_rate: 0.08,
                ..Default::default()
            },
        )
    }

    pub fn for_label(label: Behavior) -> Self {
        match label {
            Behavior::Safe => Self::safe(),
            Behavior::Distracted => Self::distracted(),
            Behavior::Aggressive => Self::aggressive(),
        }
    }

    fn with(label: Behavior, propensities: Propensities) -> Self {
        DriverProfile {
            label,
            propensities,
            overspeed_factor: default_overspeed_factor(),
            lateral_oscillation_period: default_oscillation_period(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.propensities;
        for m in MicroBehavior::ALL {
            let r = p.get(m);
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::config(format!("{} rate {r} is not a probability", m)));
            }
        }
        let required: &[MicroBehavior] = match self.label {
            Behavior::Safe => &[],
            Behavior::Distracted => &[MicroBehavior::Drift, MicroBehavior::Straddle, MicroBehavior::SlowSpeed],
            Behavior::Aggressive => &[
                MicroBehavior::Overspeed,
                MicroBehavior::HardBrake,
                MicroBehavior::Weave,
                MicroBehavior::SuddenSteer,
            ],
        };
        for m in MicroBehavior::ALL {
            let r = p.get(m);
            match (self.label, required.contains(&m)) {
                (Behavior::Safe, _) if r != 0.0 => {
                    return Err(Error::config(format!("safe profile has nonzero {m} rate")));
                }
                (_, true) if r <= 0.0 => {
                    return Err(Error::config(format!("{} profile needs a positive {m} rate", self.label)));
                }
                _ => {}
            }
        }
        if !(self.overspeed_factor > 1.0) {
            return Err(Error::config("overspeed_factor must exceed 1"));
        }
        if self.lateral_oscillation_period == 0 {
            return Err(Error::config("lateral_oscillation_period must be at least one tick"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub lanes: u8,
    pub cells_per_lane: u32,
    pub cell_length_m: f64,
    pub lane_width_m: f64,
    pub tick_s: f64,
    /// Frames rendered per tick.
    pub subtick_frames: u32,
    /// Free-flow maximum speed, cells per tick.
    pub v_max: u32,
    pub slowdown_prob: f64,
    pub speed_limit_mps: f64,
    pub duration_ticks: u32,
    pub seed: u64,
    /// Minimum ticks between two lane changes of one vehicle.
    pub lane_change_cooldown_ticks: u32,
    pub drivers: Vec<DriverProfile>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            lanes: 2,
            cells_per_lane: 35,
            cell_length_m: 7.5,
            lane_width_m: 3.5,
            tick_s: 1.0,
            subtick_frames: 30,
            v_max: 5,
            slowdown_prob: 0.1,
            speed_limit_mps: 37.5,
            duration_ticks: 120,
            seed: 0,
            lane_change_cooldown_ticks: 2,
            drivers: [Behavior::Safe, Behavior::Distracted, Behavior::Aggressive]
                .iter()
                .cycle()
                .take(6)
                .map(|b| DriverProfile::for_label(*b))
                .collect(),
        }
    }
}

impl SimConfig {
    pub fn vehicle_count(&self) -> usize {
        self.drivers.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.lanes != 2 {
            return Err(Error::config(format!("only two lanes are supported, got {}", self.lanes)));
        }
        if self.v_max == 0 || self.cells_per_lane < 2 * self.v_max {
            return Err(Error::config(format!(
                "cells_per_lane ({}) must be at least 2 * v_max ({})",
                self.cells_per_lane, self.v_max
            )));
        }
        let capacity = self.lanes as usize * self.cells_per_lane as usize;
        if self.vehicle_count() > capacity {
            return Err(Error::config(format!(
                "{} vehicles do not fit on {} cells",
                self.vehicle_count(),
                capacity
            )));
        }
        if !(0.0..=1.0).contains(&self.slowdown_prob) {
            return Err(Error::config("slowdown_prob must be in [0, 1]"));
        }
        for (what, v) in [
            ("cell_length_m", self.cell_length_m),
            ("lane_width_m", self.lane_width_m),
            ("tick_s", self.tick_s),
            ("speed_limit_mps", self.speed_limit_mps),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("{what} must be positive")));
            }
        }
        if self.subtick_frames == 0 {
            return Err(Error::config("subtick_frames must be positive"));
        }
        for (i, d) in self.drivers.iter().enumerate() {
            d.validate().map_err(|e| e.context(format!("driver {i}")))?;
        }
        Ok(())
    }

    /// Metres per second of one cell per tick.
    pub fn cell_speed_mps(&self) -> f64 {
        self.cell_length_m / self.tick_s
    }

    pub fn fps(&self) -> f64 {
        self.subtick_frames as f64 / self.tick_s
    }

    pub fn ring_length_m(&self) -> f64 {
        self.cells_per_lane as f64 * self.cell_length_m
    }

    pub fn total_frames(&self) -> u64 {
        self.duration_ticks as u64 * self.subtick_frames as u64
    }

    pub fn geometry(&self) -> RoadGeometry {
        RoadGeometry {
            ring_length_m: self.ring_length_m(),
            cell_length_m: self.cell_length_m,
            lane_width_m: self.lane_width_m,
            fps: self.fps(),
            speed_limit_mps: self.speed_limit_mps,
        }
    }

    /// Scales one propensity of every driver by `factor`.
    pub fn scale_propensity(&mut self, m: MicroBehavior, factor: f64) {
        for d in &mut self.drivers {
            *d.propensities.get_mut(m) *= factor;
        }
    }
}

/// Road layout shared by the simulator, the camera and the estimator.
///
/// Lane 1 spans `y` in `[0, w)` and lane 2 spans `[w, 2w)`; lateral offsets
/// are measured from the lane centre in half-widths, positive toward
/// larger `y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoadGeometry {
    pub ring_length_m: f64,
    pub cell_length_m: f64,
    pub lane_width_m: f64,
    pub fps: f64,
    pub speed_limit_mps: f64,
}

impl Default for RoadGeometry {
    fn default() -> Self {
        SimConfig::default().geometry()
    }
}

impl RoadGeometry {
    pub fn lane_center(&self, lane: u8) -> f64 {
        (lane as f64 - 0.5) * self.lane_width_m
    }

    pub fn lane_of(&self, y: f64) -> u8 {
        if y < self.lane_width_m {
            1
        } else {
            2
        }
    }

    pub fn offset_in(&self, lane: u8, y: f64) -> f64 {
        (y - self.lane_center(lane)) / (self.lane_width_m / 2.0)
    }

    /// Lateral position in metres of a lane-relative offset.
    pub fn y_of(&self, lane: u8, offset: f64) -> f64 {
        self.lane_center(lane) + offset * self.lane_width_m / 2.0
    }

    pub fn road_width_m(&self) -> f64 {
        2.0 * self.lane_width_m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        SimConfig::default().validate().unwrap();
    }

    #[test]
    fn overfull_road_is_rejected() {
        let mut c = SimConfig::default();
        c.drivers = vec![DriverProfile::safe(); 71];
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        c.drivers.truncate(70);
        c.validate().unwrap();
    }

    #[test]
    fn profile_composition_is_enforced() {
        let mut p = DriverProfile::safe();
        p.propensities.weave_rate = 0.1;
        assert!(p.validate().is_err());
        let mut a = DriverProfile::aggressive();
        a.propensities.sudden_steer_rate = 0.0;
        assert!(a.validate().is_err());
        let mut d = DriverProfile::distracted();
        d.propensities.slow_speed_rate = 1.5;
        assert!(d.validate().is_err());
    }

    #[test]
    fn micro_behavior_names() {
        for m in MicroBehavior::ALL {
            assert_eq!(m.as_str().parse::<MicroBehavior>().unwrap(), m);
            assert_eq!(m.assertion().parse::<MicroBehavior>().unwrap(), m);
        }
        assert_eq!("speeding".parse::<MicroBehavior>().unwrap(), MicroBehavior::Overspeed);
        assert!(matches!("tailgating".parse::<MicroBehavior>(), Err(Error::UnknownMicroBehavior(_))));
    }

    #[test]
    fn lane_geometry() {
        let g = RoadGeometry::default();
        assert_eq!(g.lane_of(3.49), 1);
        assert_eq!(g.lane_of(3.5), 2);
        assert!((g.offset_in(1, g.y_of(1, 0.7)) - 0.7).abs() < 1e-12);
    }
}
