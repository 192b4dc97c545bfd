use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::experiment::{classify_estimated, classify_ground_truth, roadside_estimate, Pipeline};
use crate::error::{Error, Result, ResultExt};
use crate::label::Behavior;
use crate::sim::{run_scenario, MicroBehavior};

/// Classes a feedback row reports on.
pub const FEEDBACK_CLASSES: [Behavior; 2] = [Behavior::Aggressive, Behavior::Distracted];

/// Effect of scaling one micro-behavior propensity down.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackRow {
    pub micro: MicroBehavior,
    /// Recognized window steps per class before and after the reduction,
    /// or `None` when the class spec does not mention the micro-behavior.
    pub counts: [Option<(u64, u64)>; 2],
}

impl FeedbackRow {
    /// After/before instance ratio per class; `None` is reported as N/A.
    pub fn ratio(&self, b: Behavior) -> Option<f64> {
        let i = FEEDBACK_CLASSES.iter().position(|c| *c == b)?;
        self.counts[i].map(|(before, after)| if before == 0 { 1.0 } else { after as f64 / before as f64 })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackTable {
    pub reduction: f64,
    pub pipeline: Pipeline,
    pub rows: Vec<FeedbackRow>,
}

/// Recognized window steps per feedback class (before precedence), summed
/// over every vehicle of every scenario of every run.
fn count_instances(config: &ExperimentConfig, pipeline: Pipeline) -> Result<[u64; 2]> {
    let jobs: Vec<(usize, usize)> = (0..config.runs)
        .flat_map(|run| (0..config.scenarios_per_run()).map(move |i| (run, i)))
        .collect();
    let per_job: Vec<[u64; 2]> = jobs
        .par_iter()
        .map(|&(run, i)| -> Result<[u64; 2]> {
            let scenario = &config.scenarios_for_run(run)[i];
            let recognizer = config.recognizer(scenario.speed_limit_mps)?;
            let trace = run_scenario(scenario)?;
            let verdicts = match pipeline {
                Pipeline::InVehicle => classify_ground_truth(&trace, &recognizer)?,
                Pipeline::Roadside => {
                    let (_, est) = roadside_estimate(&trace, scenario, config, config.channel_seed(run, i))?;
                    classify_estimated(&est, &recognizer)?
                }
            };
            let mut c = [0u64; 2];
            for v in &verdicts {
                for (k, b) in FEEDBACK_CLASSES.iter().enumerate() {
                    c[k] += v.recognized_steps(*b) as u64;
                }
            }
            Ok(c)
        })
        .collect::<Result<_>>()?;
    Ok(per_job.iter().fold([0, 0], |acc, c| [acc[0] + c[0], acc[1] + c[1]]))
}

/// Config with one propensity scaled by `1 - reduction` in every scenario.
fn reduced(config: &ExperimentConfig, micro: MicroBehavior, reduction: f64) -> ExperimentConfig {
    let mut c = config.clone();
    c.scenario.scale_propensity(micro, 1.0 - reduction);
    for s in &mut c.scenarios {
        s.scale_propensity(micro, 1.0 - reduction);
    }
    c
}

/// Reruns every scenario with one propensity reduced and compares the
/// number of recognized instances per class. Seeds are shared with the
/// baseline, so only the reduced knob differs.
pub fn feedback_experiment(
    config: &ExperimentConfig,
    micros: &[MicroBehavior],
    reduction: f64,
    pipeline: Pipeline,
) -> Result<FeedbackTable> {
    if !(0.0..1.0).contains(&reduction) {
        return Err(Error::config(format!("reduction must lie in [0, 1), got {reduction}")));
    }
    config.validate()?;
    let in_spec = |m: MicroBehavior, b: Behavior| config.behaviors.get(b).is_some_and(|s| s.mentions(m.assertion()));
    let baseline = count_instances(config, pipeline).context(|| "baseline".to_string())?;
    let mut rows = Vec::with_capacity(micros.len());
    for &m in micros {
        let after = if reduction == 0.0 {
            baseline
        } else {
            count_instances(&reduced(config, m, reduction), pipeline).context(|| format!("reducing {m}"))?
        };
        let mut counts = [None; 2];
        for (k, b) in FEEDBACK_CLASSES.iter().enumerate() {
            if in_spec(m, *b) {
                counts[k] = Some((baseline[k], after[k]));
            }
        }
        rows.push(FeedbackRow { micro: m, counts });
    }
    Ok(FeedbackTable { reduction, pipeline, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig { runs: 1, scenario_count: 2, ..ExperimentConfig::default() }
    }

    #[test]
    fn zero_reduction_gives_unit_ratios() {
        let t = feedback_experiment(&small(), &MicroBehavior::ALL, 0.0, Pipeline::InVehicle).unwrap();
        for row in &t.rows {
            for b in FEEDBACK_CLASSES {
                if let Some(r) = row.ratio(b) {
                    assert_eq!(r, 1.0);
                }
            }
        }
    }

    #[test]
    fn out_of_spec_rows_are_not_applicable() {
        let t = feedback_experiment(&small(), &[MicroBehavior::Overspeed], 0.0, Pipeline::InVehicle).unwrap();
        assert!(t.rows[0].ratio(Behavior::Aggressive).is_some());
        assert_eq!(t.rows[0].ratio(Behavior::Distracted), None);
    }

    #[test]
    fn full_removal_is_rejected() {
        assert!(feedback_experiment(&small(), &MicroBehavior::ALL, 1.0, Pipeline::InVehicle).is_err());
    }
}
