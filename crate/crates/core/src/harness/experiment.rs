use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::metrics::{error_breakdown, metrics, ClassificationReport, ErrorCounts};
use crate::error::{Error, Result, ResultExt};
use crate::label::Behavior;
use crate::obs::{estimate_kinematics, observe, EstimatedTrace, TrackedObservation};
use crate::rules::{KinematicSample, Recognizer, VehicleVerdict};
use crate::sim::{run_scenario, GroundTruthTrace, SimConfig};

/// Where the recognizer gets its kinematics from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pipeline {
    /// Exact simulator kinematics.
    InVehicle,
    /// Camera observation, noise and re-estimation.
    Roadside,
}

impl Pipeline {
    pub fn as_str(self) -> &'static str {
        match self {
            Pipeline::InVehicle => "in-vehicle",
            Pipeline::Roadside => "roadside",
        }
    }
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Pipeline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "in-vehicle" | "invehicle" => Ok(Pipeline::InVehicle),
            "roadside" => Ok(Pipeline::Roadside),
            _ => Err(Error::config(format!("unknown pipeline `{s}` (in-vehicle | roadside)"))),
        }
    }
}

/// Classifies every vehicle from its exact kinematics.
pub fn classify_ground_truth(trace: &GroundTruthTrace, recognizer: &Recognizer) -> Result<Vec<VehicleVerdict>> {
    trace
        .by_vehicle()
        .into_iter()
        .map(|(id, recs)| {
            let s: Vec<KinematicSample> = recs.iter().map(|r| KinematicSample::from(*r)).collect();
            recognizer.classify_series(id, &s)
        })
        .collect()
}

/// Classifies every track of a roadside estimate.
pub fn classify_estimated(est: &EstimatedTrace, recognizer: &Recognizer) -> Result<Vec<VehicleVerdict>> {
    est.by_track()
        .into_iter()
        .map(|(id, recs)| {
            let s: Vec<KinematicSample> = recs.iter().map(|r| KinematicSample::from(*r)).collect();
            recognizer.classify_series(id, &s)
        })
        .collect()
}

/// Observes a trace through the configured camera and noise, then
/// re-estimates kinematics.
pub fn roadside_estimate(
    trace: &GroundTruthTrace,
    scenario: &SimConfig,
    config: &ExperimentConfig,
    channel_seed: u64,
) -> Result<(Vec<TrackedObservation>, EstimatedTrace)> {
    let camera = config.camera_for(scenario)?;
    let road = scenario.geometry();
    let obs = observe(trace, &camera, &config.noise, &road, channel_seed)?;
    let est = estimate_kinematics(&obs, &config.noise, &road);
    Ok((obs, est))
}

/// Predicted label of each true vehicle; a vehicle without a track is safe.
fn labels_for(truth: &[(crate::VehicleId, Behavior)], verdicts: &[VehicleVerdict]) -> Vec<Behavior> {
    truth
        .iter()
        .map(|(id, _)| verdicts.iter().find(|v| v.vehicle == *id).map_or(Behavior::Safe, |v| v.label))
        .collect()
}

/// Outcome of one scenario under both pipelines.
#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub run: usize,
    pub index: usize,
    pub seed: u64,
    pub truth: Vec<Behavior>,
    pub in_vehicle: Vec<Behavior>,
    pub roadside: Vec<Behavior>,
    pub errors: ErrorCounts,
}

/// Runs one scenario through both pipelines.
pub fn run_scenario_job(config: &ExperimentConfig, run: usize, index: usize, scenario: &SimConfig) -> Result<ScenarioOutcome> {
    let recognizer = config.recognizer(scenario.speed_limit_mps)?;
    let trace = run_scenario(scenario)?;
    let truth: Vec<_> = trace.by_vehicle().into_iter().map(|(id, recs)| (id, recs[0].label)).collect();
    let iv = classify_ground_truth(&trace, &recognizer)?;
    let (obs, est) = roadside_estimate(&trace, scenario, config, config.channel_seed(run, index))?;
    let rs = classify_estimated(&est, &recognizer)?;
    let errors = error_breakdown(&trace, &obs, &est, &config.tolerance, scenario.speed_limit_mps)?;
    Ok(ScenarioOutcome {
        run,
        index,
        seed: scenario.seed,
        truth: truth.iter().map(|(_, b)| *b).collect(),
        in_vehicle: labels_for(&truth, &iv),
        roadside: labels_for(&truth, &rs),
        errors,
    })
}

/// Scores of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub run: usize,
    pub vehicles: usize,
    pub in_vehicle: ClassificationReport,
    pub roadside: ClassificationReport,
    pub errors: ErrorCounts,
}

/// Per-run results and their averages.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub seed: u64,
    pub scenarios_per_run: usize,
    pub runs: Vec<RunResult>,
    pub in_vehicle: ClassificationReport,
    pub roadside: ClassificationReport,
    pub errors: ErrorCounts,
}

impl ExperimentReport {
    /// In-vehicle minus roadside accuracy, in percentage points.
    pub fn accuracy_gap_points(&self) -> f64 {
        100.0 * (self.in_vehicle.accuracy - self.roadside.accuracy)
    }
}

/// Every (run, scenario) job, in order.
fn jobs(config: &ExperimentConfig) -> Vec<(usize, usize, SimConfig)> {
    (0..config.runs)
        .flat_map(|run| config.scenarios_for_run(run).into_iter().enumerate().map(move |(i, s)| (run, i, s)))
        .collect()
}

/// Runs every scenario of every run through both pipelines (in parallel,
/// collected in order) and scores them.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let outcomes: Vec<ScenarioOutcome> = jobs(config)
        .par_iter()
        .map(|(run, i, s)| run_scenario_job(config, *run, *i, s).context(|| format!("run {run} scenario {i}")))
        .collect::<Result<_>>()?;

    let mut runs = Vec::with_capacity(config.runs);
    for run in 0..config.runs {
        let mine: Vec<&ScenarioOutcome> = outcomes.iter().filter(|o| o.run == run).collect();
        let truth: Vec<Behavior> = mine.iter().flat_map(|o| o.truth.iter().copied()).collect();
        let iv: Vec<Behavior> = mine.iter().flat_map(|o| o.in_vehicle.iter().copied()).collect();
        let rs: Vec<Behavior> = mine.iter().flat_map(|o| o.roadside.iter().copied()).collect();
        let mut errors = ErrorCounts::default();
        for o in &mine {
            errors.add(&o.errors);
        }
        runs.push(RunResult {
            run,
            vehicles: truth.len(),
            in_vehicle: metrics(&truth, &iv)?,
            roadside: metrics(&truth, &rs)?,
            errors,
        });
    }
    let iv: Vec<_> = runs.iter().map(|r| r.in_vehicle.clone()).collect();
    let rs: Vec<_> = runs.iter().map(|r| r.roadside.clone()).collect();
    let mut errors = ErrorCounts::default();
    for r in &runs {
        errors.add(&r.errors);
    }
    Ok(ExperimentReport {
        seed: config.seed,
        scenarios_per_run: config.scenarios_per_run(),
        in_vehicle: ClassificationReport::mean_of(&iv),
        roadside: ClassificationReport::mean_of(&rs),
        runs,
        errors,
    })
}
