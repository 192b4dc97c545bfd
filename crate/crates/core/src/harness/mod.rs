//! Experiment driver.
//!
//! Generates scenario sets from a master seed, runs them through the
//! in-vehicle and roadside pipelines in parallel, scores the labels, breaks
//! down channel errors, runs the propensity-reduction feedback analysis
//! and writes deterministic reports.

mod calibrate;
mod config;
mod experiment;
mod feedback;
mod metrics;
mod report;

pub use calibrate::{calibrate_pixel_noise, measure_channel, ChannelRates};
pub use config::{derive_seed, ErrorTolerance, ExperimentConfig, SeedStream};
pub use experiment::{
    classify_estimated, classify_ground_truth, roadside_estimate, run_experiment, run_scenario_job,
    ExperimentReport, Pipeline, RunResult, ScenarioOutcome,
};
pub use feedback::{feedback_experiment, FeedbackRow, FeedbackTable, FEEDBACK_CLASSES};
pub use metrics::{error_breakdown, metrics, ClassMetrics, ClassificationReport, ErrorCounts};
pub use report::{
    render_csv, render_feedback_csv, render_feedback_text, render_text, write_feedback, write_report,
};
