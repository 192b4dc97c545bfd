//! Virtual roadside camera.
//!
//! Ground positions are projected through a ground-plane homography,
//! perturbed in pixel space, mapped back with inverse perspective mapping
//! and re-differentiated into speed, heading and acceleration. Detection
//! misses and identity swaps between neighbouring tracks model the tracker.

mod camera;
mod channel;
mod estimate;

pub use camera::{ipm_to_ground, project_to_image, CameraModel, CameraPose, GroundRect, Mat3, DET_EPS};
pub use channel::{observe, switched_frame_rate, NoiseModel, TrackedObservation};
pub use estimate::{estimate_kinematics, Confidence, EstimatedRecord, EstimatedTrace};
