//! Roadside driver-behavior testbed.
//!
//! A two-lane cellular-automaton simulator injects driver personalities,
//! a virtual roadside camera observes the traffic through a noisy channel,
//! and an event-calculus engine plus a weighted partial MaxSAT classifier
//! label each vehicle as safe, distracted or aggressive.
//!
//! Modules map onto the pipeline stages:
//!
//! - [`sim`]: cellular-automaton traffic with personality overlays.
//! - [`obs`]: homography camera, inverse perspective mapping, noise and
//!   kinematic re-estimation.
//! - [`ec`]: run-time event calculus over integer time.
//! - [`rules`]: detectors and the rule library for micro-behaviors.
//! - [`wpm`]: dependency graph, closure, CNF encoding and MaxSAT solving.
//! - [`harness`]: experiment driver, metrics and the feedback analysis.

pub mod ec;
pub mod error;
pub mod harness;
pub mod obs;
pub mod rules;
pub mod sim;
pub mod trace_io;
pub mod wpm;

mod label;

pub use error::{Error, Result};
pub use label::{Behavior, VehicleId};
