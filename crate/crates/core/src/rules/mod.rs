//! Micro-behavior detectors, the rule library and per-vehicle recognition.
//!
//! Kinematic series become primitive events (proximity crossings, lane
//! changes, weaving, sudden steering), input fluents (lane membership,
//! drifting, straddling) and scalar samples (speed, acceleration). The
//! event-calculus engine derives the Table-style fluents from them, and
//! each window step is classified by the weighted hard/soft specs.

mod detect;
mod library;
mod params;
mod recognize;

pub use detect::{detect_primitives, KinematicSample, PrimitiveStream};
pub use library::{full_program, micro_rule_set, BEHAVIOR_RULES, MICRO_RULES};
pub use params::{DetectorParams, RoadTypeOverride};
pub use recognize::{Recognizer, StepVerdict, VehicleVerdict};
