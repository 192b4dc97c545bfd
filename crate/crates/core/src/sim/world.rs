use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{DriverProfile, MicroBehavior, SimConfig};
use super::trace::{Braking, InjectedFlags, TraceRecord};
use crate::error::{Error, Result};
use crate::label::VehicleId;

/// Deceleration requested by a hard-brake directive (m/s^2).
pub const HARD_BRAKE_DECEL_MPS2: f64 = -8.0;
/// Upper edge of the normal-braking band (m/s^2).
pub const NORMAL_BRAKE_DECEL_MPS2: f64 = -3.0;
/// Slow episodes target at most this fraction of the speed limit.
pub const SLOW_FRACTION: f64 = 0.5;

const OVERSPEED_TICKS: u32 = 6;
const SLOW_TICKS: u32 = 8;

// Lateral overlay shapes, in frames at full phase rate and in half-lane units.
const DRIFT_FRAMES: f64 = 180.0;
const DRIFT_AMPLITUDE: f64 = 0.55;
const STRADDLE_RAMP: f64 = 60.0;
const STRADDLE_HOLD: f64 = 60.0;
const STRADDLE_AMPLITUDE: f64 = 0.95;
const WEAVE_AMPLITUDE: f64 = 0.85;
const WEAVE_CYCLES: f64 = 3.0;
const STEER_SLOPE: f64 = 0.0625;
const STEER_RISE: f64 = 5.0;
const STEER_RECOVER: f64 = 30.0;
const LANE_CHANGE_FRAMES: f64 = 60.0;
/// Summed overlays are softly limited so a vehicle never leaves its lane.
const SATURATION_KNEE: f64 = 0.9;
const SATURATION_SPAN: f64 = 0.08;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpeedDirective {
    Overspeed { target_mps: f64 },
    Slow { target_mps: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LateralManeuver {
    pub kind: MicroBehavior,
    /// +1 toward larger y, -1 toward smaller y.
    pub side: f64,
}

/// What a driver personality asks for in one tick.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ManeuverDirective {
    pub speed: Option<SpeedDirective>,
    /// Requested deceleration for this tick (hard brake).
    pub brake_mps2: Option<f64>,
    pub lateral: Vec<LateralManeuver>,
}

impl ManeuverDirective {
    pub fn is_empty(&self) -> bool {
        self.speed.is_none() && self.brake_mps2.is_none() && self.lateral.is_empty()
    }
}

/// Tick-level kinematic snapshot of one vehicle.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleState {
    pub vehicle_id: VehicleId,
    pub lane: u8,
    pub cell: u32,
    pub lateral_offset: f64,
    /// Cells per tick.
    pub speed: u32,
    pub speed_mps: f64,
    pub accel_mps2: f64,
    pub steering_deg: f64,
    pub braking: Braking,
    pub orientation_deg: f64,
}

/// Samples a directive. Exactly eight uniforms are drawn whatever the
/// outcome, so changing one rate leaves every other draw unchanged.
pub fn apply_personality<R: Rng + ?Sized>(
    profile: &DriverProfile,
    state: &VehicleState,
    speed_limit_mps: f64,
    rng: &mut R,
) -> ManeuverDirective {
    let p = &profile.propensities;
    let mut u = [0.0f64; 8];
    for x in &mut u {
        *x = rng.random();
    }
    let side = if u[7] < 0.5 { -1.0 } else { 1.0 };
    let mut d = ManeuverDirective::default();
    if u[0] < p.overspeed_rate {
        d.speed = Some(SpeedDirective::Overspeed { target_mps: profile.overspeed_factor * speed_limit_mps });
    } else if u[1] < p.slow_speed_rate {
        d.speed = Some(SpeedDirective::Slow { target_mps: SLOW_FRACTION * speed_limit_mps });
    }
    if u[2] < p.hard_brake_rate && state.speed >= 2 {
        d.brake_mps2 = Some(HARD_BRAKE_DECEL_MPS2);
    }
    let lateral = [
        (MicroBehavior::Drift, p.drift_rate, u[3]),
        (MicroBehavior::Straddle, p.straddle_rate, u[4]),
        (MicroBehavior::Weave, p.weave_rate, u[5]),
        (MicroBehavior::SuddenSteer, p.sudden_steer_rate, u[6]),
    ];
    for (kind, rate, draw) in lateral {
        if draw < rate && (kind != MicroBehavior::SuddenSteer || state.speed >= 2) {
            d.lateral.push(LateralManeuver { kind, side });
        }
    }
    d
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum EpisodeKind {
    Overspeed,
    Slow,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct SpeedEpisode {
    kind: EpisodeKind,
    target: u32,
    ticks_left: u32,
}

#[derive(Debug, Clone, PartialEq)]
struct Overlay {
    kind: MicroBehavior,
    side: f64,
    phase: f64,
    /// Weave period in frames.
    period: f64,
}

impl Overlay {
    fn duration(&self) -> f64 {
        match self.kind {
            MicroBehavior::Drift => DRIFT_FRAMES,
            MicroBehavior::Straddle => 2.0 * STRADDLE_RAMP + STRADDLE_HOLD,
            MicroBehavior::Weave => WEAVE_CYCLES * self.period,
            MicroBehavior::SuddenSteer => STEER_RISE + STEER_RECOVER,
            _ => 0.0,
        }
    }

    fn offset(&self) -> f64 {
        let s = self.phase;
        let raised = |x: f64| (1.0 - (PI * x.clamp(0.0, 1.0)).cos()) / 2.0;
        let v = match self.kind {
            MicroBehavior::Drift => DRIFT_AMPLITUDE * (1.0 - (2.0 * PI * s / DRIFT_FRAMES).cos()) / 2.0,
            MicroBehavior::Straddle => {
                let up = raised(s / STRADDLE_RAMP);
                let down = raised((s - STRADDLE_RAMP - STRADDLE_HOLD) / STRADDLE_RAMP);
                STRADDLE_AMPLITUDE * (up - down)
            }
            MicroBehavior::Weave => {
                let half = self.period / 2.0;
                let d = self.duration();
                let env = raised(s / half).min(raised((d - s) / half));
                WEAVE_AMPLITUDE * env * (2.0 * PI * s / self.period).sin()
            }
            MicroBehavior::SuddenSteer => {
                if s <= STEER_RISE {
                    STEER_SLOPE * s
                } else {
                    STEER_SLOPE * STEER_RISE * (1.0 - (s - STEER_RISE) / STEER_RECOVER).max(0.0)
                }
            }
            _ => 0.0,
        };
        self.side * v
    }
}

fn saturate(x: f64) -> f64 {
    let a = x.abs();
    if a <= SATURATION_KNEE {
        x
    } else {
        x.signum() * (SATURATION_KNEE + SATURATION_SPAN * ((a - SATURATION_KNEE) / SATURATION_SPAN).tanh())
    }
}

#[derive(Debug, Clone, PartialEq)]
struct LaneTransition {
    from_y: f64,
    to_y: f64,
    frame: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vehicle {
    pub id: VehicleId,
    pub profile: DriverProfile,
    pub lane: u8,
    pub cell: u32,
    /// Cells per tick.
    pub v: u32,
    /// Continuous position in cells; lags the CA cell by `v / 2`.
    pos: f64,
    last_accel: f64,
    episode: Option<SpeedEpisode>,
    last_lane_change: Option<u64>,
    overlays: Vec<Overlay>,
    transition: Option<LaneTransition>,
    y_track: f64,
    prev_xy: Option<(f64, f64)>,
    orientation_deg: f64,
    lateral_offset: f64,
}

/// Two-lane ring road state.
#[derive(Debug, Clone)]
pub struct WorldState {
    config: SimConfig,
    tick: u64,
    vehicles: Vec<Vehicle>,
    /// `occupancy[lane - 1][cell]` holds a vehicle index.
    occupancy: [Vec<Option<usize>>; 2],
    rng: ChaCha8Rng,
}

/// Places every configured driver on a distinct (lane, cell) with a random
/// initial speed in `0..=v_max`.
pub fn init_world(config: &SimConfig) -> Result<WorldState> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let cells = config.cells_per_lane;
    let mut slots: Vec<(u8, u32)> = (1..=2u8).flat_map(|l| (0..cells).map(move |c| (l, c))).collect();
    slots.shuffle(&mut rng);
    let placements: Vec<(u8, u32, u32)> = slots
        .into_iter()
        .take(config.vehicle_count())
        .map(|(l, c)| (l, c, rng.random_range(0..=config.v_max)))
        .collect();
    WorldState::build(config.clone(), &placements, rng)
}

impl WorldState {
    /// World with explicit `(lane, cell, speed)` placements, one per driver.
    pub fn with_placements(config: &SimConfig, placements: &[(u8, u32, u32)]) -> Result<WorldState> {
        config.validate()?;
        if placements.len() != config.vehicle_count() {
            return Err(Error::config(format!(
                "{} placements for {} drivers",
                placements.len(),
                config.vehicle_count()
            )));
        }
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        WorldState::build(config.clone(), placements, rng)
    }

    fn build(config: SimConfig, placements: &[(u8, u32, u32)], rng: ChaCha8Rng) -> Result<WorldState> {
        let cells = config.cells_per_lane as usize;
        let mut occupancy = [vec![None; cells], vec![None; cells]];
        let geom = config.geometry();
        let mut vehicles = Vec::with_capacity(placements.len());
        for (i, (&(lane, cell, v), profile)) in placements.iter().zip(&config.drivers).enumerate() {
            if !(1..=2).contains(&lane) || cell as usize >= cells {
                return Err(Error::config(format!("placement ({lane}, {cell}) is off the road")));
            }
            if v > config.v_max {
                return Err(Error::config(format!("initial speed {v} exceeds v_max")));
            }
            let slot = &mut occupancy[lane as usize - 1][cell as usize];
            if slot.is_some() {
                return Err(Error::config(format!("cell ({lane}, {cell}) is occupied twice")));
            }
            *slot = Some(i);
            vehicles.push(Vehicle {
                id: VehicleId(i as u32),
                profile: profile.clone(),
                lane,
                cell,
                v,
                pos: (cell as f64 - v as f64 / 2.0).rem_euclid(cells as f64),
                last_accel: 0.0,
                episode: None,
                last_lane_change: None,
                overlays: Vec::new(),
                transition: None,
                y_track: geom.lane_center(lane),
                prev_xy: None,
                orientation_deg: 0.0,
                lateral_offset: 0.0,
            });
        }
        Ok(WorldState { config, tick: 0, vehicles, occupancy, rng })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn vehicles(&self) -> &[Vehicle] {
        &self.vehicles
    }

    pub fn occupant(&self, lane: u8, cell: u32) -> Option<VehicleId> {
        self.occupancy[lane as usize - 1][cell as usize].map(|i| self.vehicles[i].id)
    }

    pub fn state(&self, id: VehicleId) -> Option<VehicleState> {
        self.vehicles.get(id.0 as usize).map(|v| self.state_of(v))
    }

    pub fn states(&self) -> Vec<VehicleState> {
        self.vehicles.iter().map(|v| self.state_of(v)).collect()
    }

    fn state_of(&self, v: &Vehicle) -> VehicleState {
        let accel = v.last_accel;
        VehicleState {
            vehicle_id: v.id,
            lane: v.lane,
            cell: v.cell,
            lateral_offset: v.lateral_offset,
            speed: v.v,
            speed_mps: v.v as f64 * self.config.cell_speed_mps(),
            accel_mps2: accel,
            steering_deg: v.orientation_deg,
            braking: Braking::classify(accel, HARD_BRAKE_DECEL_MPS2, NORMAL_BRAKE_DECEL_MPS2),
            orientation_deg: v.orientation_deg,
        }
    }

    fn cells(&self) -> u32 {
        self.config.cells_per_lane
    }

    /// Free cells ahead of `cell` in `lane` before the next occupied cell.
    pub fn gap_ahead(&self, lane: u8, cell: u32) -> u32 {
        let n = self.cells();
        let row = &self.occupancy[lane as usize - 1];
        (1..n).find(|d| row[((cell + d) % n) as usize].is_some()).map_or(n - 1, |d| d - 1)
    }

    /// Free cells behind `cell` in `lane` before the previous occupied cell.
    pub fn gap_behind(&self, lane: u8, cell: u32) -> u32 {
        let n = self.cells();
        let row = &self.occupancy[lane as usize - 1];
        (1..n).find(|d| row[((cell + n - d) % n) as usize].is_some()).map_or(n - 1, |d| d - 1)
    }

    fn effective_vmax(&self, v: &Vehicle) -> u32 {
        match v.episode {
            Some(SpeedEpisode { target, .. }) => target,
            None => self.config.v_max,
        }
    }

    /// Target lane if the vehicle should change lanes this tick.
    ///
    /// A change needs: an incentive (the current gap stops it from reaching
    /// its desired speed), a strictly larger gap ahead in the other lane that
    /// also covers the current speed, `v_max` free cells behind, a free
    /// target cell, and the cooldown since its last change. Equal gaps stay.
    pub fn decide_lane_change(&self, id: VehicleId) -> Option<u8> {
        let v = self.vehicles.get(id.0 as usize)?;
        if let Some(last) = v.last_lane_change {
            if self.tick < last + self.config.lane_change_cooldown_ticks as u64 {
                return None;
            }
        }
        let other = 3 - v.lane;
        if self.occupancy[other as usize - 1][v.cell as usize].is_some() {
            return None;
        }
        let gap_current = self.gap_ahead(v.lane, v.cell);
        let desired = (v.v + 1).min(self.effective_vmax(v));
        if gap_current >= desired {
            return None;
        }
        let gap_target = self.gap_ahead(other, v.cell);
        let gap_back = self.gap_behind(other, v.cell);
        (gap_target > gap_current && gap_target >= v.v && gap_back >= self.config.v_max).then_some(other)
    }

    /// Advances one tick and returns the rendered frames of the transition,
    /// ordered by frame and then vehicle id.
    pub fn step(&mut self) -> Vec<TraceRecord> {
        let n = self.vehicles.len();
        let cfg = self.config.clone();
        let cells = cfg.cells_per_lane;

        // Personality directives and slowdown draws, in id order.
        let mut directives = Vec::with_capacity(n);
        let mut slowdown = Vec::with_capacity(n);
        for i in 0..n {
            let st = self.state_of(&self.vehicles[i]);
            let d = apply_personality(&self.vehicles[i].profile, &st, cfg.speed_limit_mps, &mut self.rng);
            directives.push(d);
            slowdown.push(self.rng.random::<f64>() < cfg.slowdown_prob);
        }
        let cell_speed = cfg.cell_speed_mps();
        let mut brake_drop = vec![None; n];
        for (i, d) in directives.iter().enumerate() {
            let veh = &mut self.vehicles[i];
            match d.speed {
                Some(SpeedDirective::Overspeed { target_mps }) => {
                    if !matches!(veh.episode, Some(SpeedEpisode { kind: EpisodeKind::Overspeed, .. })) {
                        let target = (target_mps / cell_speed + 1e-9).floor() as u32;
                        veh.episode = Some(SpeedEpisode { kind: EpisodeKind::Overspeed, target, ticks_left: OVERSPEED_TICKS });
                    }
                }
                Some(SpeedDirective::Slow { target_mps }) => {
                    if !matches!(veh.episode, Some(SpeedEpisode { kind: EpisodeKind::Slow, .. })) {
                        let target = ((target_mps / cell_speed + 1e-9).floor() as u32).min(cfg.v_max);
                        veh.episode = Some(SpeedEpisode { kind: EpisodeKind::Slow, target, ticks_left: SLOW_TICKS });
                    }
                }
                None => {}
            }
            if let Some(decel) = d.brake_mps2 {
                let drop = (-decel * cfg.tick_s * cfg.tick_s / cfg.cell_length_m - 1e-9).ceil().max(1.0) as u32;
                if veh.v >= drop {
                    brake_drop[i] = Some(drop);
                }
            }
            for m in &d.lateral {
                if veh.overlays.iter().any(|o| o.kind == m.kind) {
                    continue;
                }
                let side = veh.overlays.first().map_or(m.side, |o| o.side);
                let period = (veh.profile.lateral_oscillation_period * cfg.subtick_frames) as f64;
                veh.overlays.push(Overlay { kind: m.kind, side, phase: 0.0, period });
            }
        }

        // Lane changes, decided on the same snapshot and applied together.
        let decisions: Vec<Option<u8>> = (0..n).map(|i| self.decide_lane_change(self.vehicles[i].id)).collect();
        let geom = cfg.geometry();
        for (i, target) in decisions.into_iter().enumerate() {
            if let Some(lane) = target {
                let veh = &mut self.vehicles[i];
                self.occupancy[veh.lane as usize - 1][veh.cell as usize] = None;
                self.occupancy[lane as usize - 1][veh.cell as usize] = Some(i);
                veh.transition = Some(LaneTransition { from_y: veh.y_track, to_y: geom.lane_center(lane), frame: 0.0 });
                veh.lane = lane;
                veh.last_lane_change = Some(self.tick);
            }
        }

        // Longitudinal update, leader first (decreasing cell), on the live grid.
        let prev_v: Vec<u32> = self.vehicles.iter().map(|v| v.v).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            let (va, vb) = (&self.vehicles[a], &self.vehicles[b]);
            vb.cell.cmp(&va.cell).then(va.lane.cmp(&vb.lane)).then(a.cmp(&b))
        });
        for i in order {
            let eff = self.effective_vmax(&self.vehicles[i]);
            let (lane, cell) = (self.vehicles[i].lane, self.vehicles[i].cell);
            let mut v = prev_v[i];
            v = if v > eff { v - 1 } else { (v + 1).min(eff) };
            v = v.min(self.gap_ahead(lane, cell));
            if let Some(drop) = brake_drop[i] {
                v = v.min(prev_v[i] - drop);
            } else if slowdown[i] {
                v = v.saturating_sub(1);
            }
            let new_cell = (cell + v) % cells;
            self.occupancy[lane as usize - 1][cell as usize] = None;
            self.occupancy[lane as usize - 1][new_cell as usize] = Some(i);
            let veh = &mut self.vehicles[i];
            veh.cell = new_cell;
            veh.v = v;
        }

        let records = self.render(&prev_v, &brake_drop);

        for veh in &mut self.vehicles {
            if let Some(ep) = &mut veh.episode {
                ep.ticks_left -= 1;
                if ep.ticks_left == 0 {
                    veh.episode = None;
                }
            }
        }
        self.tick += 1;
        records
    }

    fn render(&mut self, prev_v: &[u32], brake_drop: &[Option<u32>]) -> Vec<TraceRecord> {
        let cfg = &self.config;
        let geom = cfg.geometry();
        let frames = cfg.subtick_frames;
        let ring_cells = cfg.cells_per_lane as f64;
        let ring_m = cfg.ring_length_m();
        let cell_speed = cfg.cell_speed_mps();
        let half_width = cfg.lane_width_m / 2.0;
        let base_frame = self.tick * frames as u64;
        let mut out = Vec::with_capacity(frames as usize * self.vehicles.len());
        let mut per_vehicle: Vec<Vec<TraceRecord>> = Vec::with_capacity(self.vehicles.len());

        for (i, veh) in self.vehicles.iter_mut().enumerate() {
            let v0 = prev_v[i] as f64;
            let v1 = veh.v as f64;
            let dv = v1 - v0;
            let accel = dv * cfg.cell_length_m / (cfg.tick_s * cfg.tick_s);
            let slow_target = match veh.episode {
                Some(SpeedEpisode { kind: EpisodeKind::Slow, target, .. }) => Some(target as f64),
                _ => None,
            };
            let mut rows = Vec::with_capacity(frames as usize);
            for j in 0..frames {
                let tau = j as f64 / frames as f64;
                let x_cells = (veh.pos + v0 * tau + dv * tau * tau / 2.0).rem_euclid(ring_cells);
                let speed_cells = v0 + dv * tau;
                let speed_mps = speed_cells * cell_speed;

                if let Some(tr) = &mut veh.transition {
                    let s = (tr.frame / LANE_CHANGE_FRAMES).min(1.0);
                    veh.y_track = tr.from_y + (tr.to_y - tr.from_y) * (1.0 - (PI * s).cos()) / 2.0;
                    tr.frame += 1.0;
                    if tr.frame > LANE_CHANGE_FRAMES {
                        veh.transition = None;
                    }
                }
                let mut flags = InjectedFlags::NONE;
                let mut lateral = 0.0;
                for o in &veh.overlays {
                    lateral += o.offset();
                    flags.insert(o.kind);
                }
                let rate = (speed_mps / cell_speed).min(1.0);
                for o in &mut veh.overlays {
                    o.phase += rate;
                }
                veh.overlays.retain(|o| o.phase < o.duration());

                let y = veh.y_track + saturate(lateral) * half_width;
                let x_m = x_cells * cfg.cell_length_m;
                let orientation = match veh.prev_xy {
                    Some((px, py)) => {
                        let mut dx = x_m - px;
                        if dx < -ring_m / 2.0 {
                            dx += ring_m;
                        }
                        let dy = y - py;
                        if dx == 0.0 && dy == 0.0 {
                            0.0
                        } else {
                            dy.atan2(dx).to_degrees()
                        }
                    }
                    None => 0.0,
                };
                veh.prev_xy = Some((x_m, y));
                veh.orientation_deg = orientation;

                if speed_cells > cfg.v_max as f64 + 1e-9 {
                    flags.insert(MicroBehavior::Overspeed);
                }
                if slow_target.is_some_and(|t| speed_cells <= t + 1e-9) {
                    flags.insert(MicroBehavior::SlowSpeed);
                }
                if brake_drop[i].is_some() {
                    flags.insert(MicroBehavior::HardBrake);
                }
                let lane = geom.lane_of(y);
                let offset = geom.offset_in(lane, y);
                veh.lateral_offset = offset;
                rows.push(TraceRecord {
                    frame: base_frame + j as u64,
                    vehicle_id: veh.id,
                    lane,
                    cell: x_cells,
                    lateral_offset: offset,
                    speed_mps,
                    accel_mps2: accel,
                    steering_deg: orientation,
                    braking: Braking::classify(accel, HARD_BRAKE_DECEL_MPS2, NORMAL_BRAKE_DECEL_MPS2),
                    orientation_deg: orientation,
                    injected_flags: flags,
                    label: veh.profile.label,
                });
            }
            veh.pos = (veh.pos + (v0 + v1) / 2.0).rem_euclid(ring_cells);
            veh.last_accel = accel;
            per_vehicle.push(rows);
        }
        for j in 0..frames as usize {
            for rows in &per_vehicle {
                out.push(rows[j].clone());
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::Behavior;

    fn config(drivers: usize, p: f64) -> SimConfig {
        SimConfig { slowdown_prob: p, drivers: vec![DriverProfile::safe(); drivers], ..SimConfig::default() }
    }

    #[test]
    fn two_vehicles_on_distinct_cells() {
        let c = SimConfig { seed: 7, ..config(2, 0.1) };
        let w = init_world(&c).unwrap();
        let s = w.states();
        assert_ne!((s[0].lane, s[0].cell), (s[1].lane, s[1].cell));
    }

    #[test]
    fn seventy_one_vehicles_do_not_fit() {
        assert!(matches!(init_world(&config(71, 0.1)), Err(Error::Config(_))));
    }

    #[test]
    fn init_is_deterministic() {
        let c = SimConfig { seed: 99, ..SimConfig::default() };
        let a = init_world(&c).unwrap();
        let b = init_world(&c).unwrap();
        assert_eq!(a.vehicles(), b.vehicles());
    }

    #[test]
    fn lone_vehicle_accelerates_and_advances() {
        let mut w = WorldState::with_placements(&config(1, 0.0), &[(1, 0, 3)]).unwrap();
        w.step();
        assert_eq!(w.vehicles()[0].v, 4);
        assert_eq!(w.vehicles()[0].cell, 4);
    }

    #[test]
    fn follower_is_gap_limited() {
        let mut w = WorldState::with_placements(&config(2, 0.0), &[(1, 0, 4), (1, 3, 0)]).unwrap();
        // Keep both in lane 1: block lane 2 changes with the cooldown.
        for v in &mut w.vehicles {
            v.last_lane_change = Some(0);
        }
        w.step();
        // Leader at cell 3 moves first (0 -> 1 cell), so the follower sees 3 free cells.
        assert_eq!(w.vehicles()[1].cell, 4);
        assert_eq!(w.vehicles()[0].v, 3);
    }

    #[test]
    fn certain_slowdown_cancels_acceleration() {
        let mut w = WorldState::with_placements(&config(1, 1.0), &[(1, 0, 4)]).unwrap();
        w.step();
        assert_eq!(w.vehicles()[0].v, 4);
    }

    #[test]
    fn free_flow_reaches_vmax_and_stays() {
        let mut w = WorldState::with_placements(&config(1, 0.0), &[(2, 5, 1)]).unwrap();
        for t in 1..=10u32 {
            w.step();
            assert_eq!(w.vehicles()[0].v, (1 + t).min(5));
        }
    }

    #[test]
    fn lane_change_rules() {
        // Blocked ahead, other lane empty: change.
        let w = WorldState::with_placements(&config(2, 0.0), &[(1, 0, 2), (1, 1, 0)]).unwrap();
        assert_eq!(w.decide_lane_change(VehicleId(0)), Some(2));
        // Target cell occupied: stay.
        let w = WorldState::with_placements(&config(3, 0.0), &[(1, 0, 2), (1, 1, 0), (2, 0, 0)]).unwrap();
        assert_eq!(w.decide_lane_change(VehicleId(0)), None);
        // Equal gaps: stay.
        let w = WorldState::with_placements(&config(3, 0.0), &[(1, 0, 2), (1, 2, 0), (2, 2, 0)]).unwrap();
        assert_eq!(w.decide_lane_change(VehicleId(0)), None);
    }

    #[test]
    fn safe_profile_never_directs() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = WorldState::with_placements(&config(1, 0.0), &[(1, 0, 5)]).unwrap();
        let st = w.states().remove(0);
        for _ in 0..1000 {
            assert!(apply_personality(&DriverProfile::safe(), &st, 37.5, &mut rng).is_empty());
        }
    }

    #[test]
    fn hard_brake_directive_yields_hard_deceleration() {
        let mut profile = DriverProfile::aggressive();
        profile.propensities.hard_brake_rate = 1.0;
        let c = SimConfig { slowdown_prob: 0.0, drivers: vec![profile], ..SimConfig::default() };
        let mut w = WorldState::with_placements(&c, &[(1, 0, 5)]).unwrap();
        let frames = w.step();
        assert!(frames.iter().all(|r| r.accel_mps2 <= HARD_BRAKE_DECEL_MPS2));
        assert!(frames.iter().all(|r| r.braking == Braking::Hard));
        assert!(frames[0].injected_flags.contains(MicroBehavior::HardBrake));
        assert_eq!(frames[0].label, Behavior::Aggressive);
    }

    #[test]
    fn drift_passes_threshold_within_two_ticks() {
        let mut profile = DriverProfile::distracted();
        profile.propensities.drift_rate = 1.0;
        let c = SimConfig { slowdown_prob: 0.0, drivers: vec![profile], ..SimConfig::default() };
        let mut w = WorldState::with_placements(&c, &[(1, 0, 5)]).unwrap();
        let mut frames = w.step();
        frames.extend(w.step());
        assert!(frames.iter().any(|r| r.lateral_offset.abs() > 0.3));
    }

    #[test]
    fn saturation_is_smooth_and_bounded() {
        assert_eq!(saturate(0.5), 0.5);
        assert!(saturate(5.0) < 0.98 + 1e-12);
        let eps = 1e-6;
        let slope = (saturate(SATURATION_KNEE + eps) - saturate(SATURATION_KNEE)) / eps;
        assert!((slope - 1.0).abs() < 1e-3);
    }
}
