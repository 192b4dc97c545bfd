//! Two-lane ring-road traffic with driver personalities.
//!
//! Longitudinal motion follows a stochastic cellular automaton on a ring of
//! cells; each tick is rendered into camera-rate frames with smooth speed
//! ramps and lateral maneuvers layered on top of the lane center.

mod config;
mod trace;
mod world;

pub use config::{DriverProfile, MicroBehavior, Propensities, RoadGeometry, SimConfig};
pub use trace::{Braking, GroundTruthTrace, InjectedFlags, TraceRecord};
pub use world::{
    apply_personality, init_world, LateralManeuver, ManeuverDirective, SpeedDirective, Vehicle,
    VehicleState, WorldState, HARD_BRAKE_DECEL_MPS2, NORMAL_BRAKE_DECEL_MPS2, SLOW_FRACTION,
};

use crate::error::Result;

/// Runs one scenario for `duration_ticks` ticks.
pub fn run_scenario(config: &SimConfig) -> Result<GroundTruthTrace> {
    let mut world = init_world(config)?;
    let mut records = Vec::with_capacity(config.total_frames() as usize * config.vehicle_count());
    for _ in 0..config.duration_ticks {
        records.extend(world.step());
    }
    Ok(GroundTruthTrace { records })
}
