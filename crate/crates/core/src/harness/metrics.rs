use std::collections::{HashMap, HashSet};

use super::config::ErrorTolerance;
use crate::error::{Error, Result};
use crate::label::Behavior;
use crate::obs::{EstimatedTrace, TrackedObservation};
use crate::sim::GroundTruthTrace;

/// One-vs-rest scores of a class.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub accuracy: f64,
}

/// Confusion matrix (`[truth][predicted]`, indexed by [`Behavior::index`])
/// and the scores derived from it.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ClassificationReport {
    pub confusion: [[u64; 3]; 3],
    pub accuracy: f64,
    pub per_class: [ClassMetrics; 3],
}

impl ClassificationReport {
    pub fn total(&self) -> u64 {
        self.confusion.iter().flatten().sum()
    }

    pub fn class(&self, b: Behavior) -> &ClassMetrics {
        &self.per_class[b.index()]
    }

    fn from_confusion(confusion: [[u64; 3]; 3]) -> Self {
        let n: u64 = confusion.iter().flatten().sum();
        let correct: u64 = (0..3).map(|i| confusion[i][i]).sum();
        let ratio = |a: u64, b: u64| if b == 0 { 1.0 } else { a as f64 / b as f64 };
        let mut per_class = [ClassMetrics::default(); 3];
        for (k, m) in per_class.iter_mut().enumerate() {
            let tp = confusion[k][k];
            let predicted: u64 = (0..3).map(|t| confusion[t][k]).sum();
            let actual: u64 = confusion[k].iter().sum();
            let fp = predicted - tp;
            let fn_ = actual - tp;
            // No predictions of a class: perfect only if the class is absent too.
            m.precision = if predicted == 0 { if actual == 0 { 1.0 } else { 0.0 } } else { ratio(tp, predicted) };
            m.recall = ratio(tp, actual);
            m.accuracy = ratio(n - fp - fn_, n);
        }
        ClassificationReport { confusion, accuracy: ratio(correct, n), per_class }
    }

    /// Scores of the summed confusion matrix are not the mean of per-run
    /// scores; this keeps the sum for counts and averages the scores.
    pub fn mean_of(reports: &[ClassificationReport]) -> ClassificationReport {
        let mut out = ClassificationReport::default();
        if reports.is_empty() {
            return out;
        }
        let k = reports.len() as f64;
        for r in reports {
            for t in 0..3 {
                for p in 0..3 {
                    out.confusion[t][p] += r.confusion[t][p];
                }
            }
            out.accuracy += r.accuracy / k;
            for (o, c) in out.per_class.iter_mut().zip(&r.per_class) {
                o.precision += c.precision / k;
                o.recall += c.recall / k;
                o.accuracy += c.accuracy / k;
            }
        }
        out
    }
}

/// Scores predictions against truth, pairwise.
pub fn metrics(truth: &[Behavior], predicted: &[Behavior]) -> Result<ClassificationReport> {
    if truth.len() != predicted.len() {
        return Err(Error::config(format!(
            "{} true labels but {} predictions",
            truth.len(),
            predicted.len()
        )));
    }
    let mut confusion = [[0u64; 3]; 3];
    for (t, p) in truth.iter().zip(predicted) {
        confusion[t.index()][p.index()] += 1;
    }
    Ok(ClassificationReport::from_confusion(confusion))
}

/// Tracking and estimation error counts; add them up across scenarios
/// before taking rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ErrorCounts {
    /// Frames with at least one detection.
    pub frames: u64,
    /// Frames in which some detection carries another vehicle's id.
    pub switched_frames: u64,
    /// Estimated records matched to a ground-truth record.
    pub estimates: u64,
    /// Matched estimates outside the speed or heading tolerance.
    pub bad_estimates: u64,
}

impl ErrorCounts {
    pub fn tracking_error_rate(&self) -> f64 {
        if self.frames == 0 { 0.0 } else { self.switched_frames as f64 / self.frames as f64 }
    }

    pub fn estimation_error_rate(&self) -> f64 {
        if self.estimates == 0 { 0.0 } else { self.bad_estimates as f64 / self.estimates as f64 }
    }

    pub fn add(&mut self, o: &ErrorCounts) {
        self.frames += o.frames;
        self.switched_frames += o.switched_frames;
        self.estimates += o.estimates;
        self.bad_estimates += o.bad_estimates;
    }
}

/// Counts id switches per frame and compares every estimate with the
/// ground-truth record of the same frame and vehicle id.
pub fn error_breakdown(
    truth: &GroundTruthTrace,
    observations: &[TrackedObservation],
    estimates: &EstimatedTrace,
    tolerance: &ErrorTolerance,
    speed_limit_mps: f64,
) -> Result<ErrorCounts> {
    let truth_frames: HashSet<u64> = truth.records.iter().map(|r| r.frame).collect();
    if !estimates.records.iter().any(|e| truth_frames.contains(&e.frame)) {
        return Err(Error::NoOverlap);
    }
    let mut c = ErrorCounts::default();
    let mut i = 0;
    while i < observations.len() {
        let f = observations[i].frame;
        let mut switched = false;
        while i < observations.len() && observations[i].frame == f {
            switched |= observations[i].is_switched();
            i += 1;
        }
        c.frames += 1;
        c.switched_frames += switched as u64;
    }
    let by_key: HashMap<(u64, u32), _> = truth.records.iter().map(|r| ((r.frame, r.vehicle_id.0), r)).collect();
    let speed_tol = tolerance.speed_frac_of_limit * speed_limit_mps;
    for e in &estimates.records {
        if let Some(t) = by_key.get(&(e.frame, e.track_id.0)) {
            c.estimates += 1;
            let bad = (e.speed_mps - t.speed_mps).abs() > speed_tol
                || (e.orientation_deg - t.orientation_deg).abs() > tolerance.orientation_deg;
            c.bad_estimates += bad as u64;
        }
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use Behavior::*;

    #[test]
    fn perfect_predictions() {
        let t = [Safe, Distracted, Aggressive, Safe];
        let r = metrics(&t, &t).unwrap();
        assert_eq!(r.accuracy, 1.0);
        for c in &r.per_class {
            assert_eq!((c.precision, c.recall, c.accuracy), (1.0, 1.0, 1.0));
        }
    }

    #[test]
    fn precision_without_predictions() {
        // Nothing predicted distracted, and one vehicle truly is.
        let r = metrics(&[Safe, Distracted], &[Safe, Safe]).unwrap();
        assert_eq!(r.class(Distracted).precision, 0.0);
        assert_eq!(r.class(Distracted).recall, 0.0);
        // Aggressive is neither predicted nor present.
        assert_eq!(r.class(Aggressive).precision, 1.0);
        assert_eq!(r.class(Safe).precision, 0.5);
        assert_eq!(r.accuracy, 0.5);
        assert_eq!(r.class(Distracted).accuracy, 0.5);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        assert!(metrics(&[Safe], &[]).is_err());
    }

    #[test]
    fn mean_averages_scores_and_sums_counts() {
        let a = metrics(&[Safe, Safe], &[Safe, Safe]).unwrap();
        let b = metrics(&[Safe, Safe], &[Safe, Aggressive]).unwrap();
        let m = ClassificationReport::mean_of(&[a, b]);
        assert_eq!(m.accuracy, 0.75);
        assert_eq!(m.total(), 4);
        assert_eq!(m.confusion[0][2], 1);
    }

    #[test]
    fn disjoint_frames_have_no_overlap() {
        use crate::obs::{Confidence, EstimatedRecord};
        use crate::sim::{run_scenario, Braking, SimConfig};
        let trace = run_scenario(&SimConfig { duration_ticks: 1, ..SimConfig::default() }).unwrap();
        let est = EstimatedTrace {
            records: vec![EstimatedRecord {
                frame: 10_000,
                track_id: crate::VehicleId(0),
                lane: 1,
                cell: 0.0,
                lateral_offset: 0.0,
                speed_mps: 0.0,
                accel_mps2: 0.0,
                steering_deg: 0.0,
                braking: Braking::None,
                orientation_deg: 0.0,
                confidence: Confidence::High,
            }],
        };
        let r = error_breakdown(&trace, &[], &est, &ErrorTolerance::default(), 37.5);
        assert!(matches!(r, Err(Error::NoOverlap)));
    }
}
