use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::experiment::ExperimentReport;
use super::feedback::{FeedbackTable, FEEDBACK_CLASSES};
use super::metrics::ClassificationReport;
use crate::error::{Error, Result, ResultExt};
use crate::label::Behavior;

fn class_table(out: &mut String, title: &str, r: &ClassificationReport) {
    let _ = writeln!(out, "{title}: accuracy {:.4} over {} vehicles", r.accuracy, r.total());
    let _ = writeln!(out, "  {:<11} {:>9} {:>9} {:>9}", "class", "precision", "recall", "accuracy");
    for b in Behavior::ALL {
        let c = r.class(b);
        let _ = writeln!(out, "  {:<11} {:>9.4} {:>9.4} {:>9.4}", b.as_str(), c.precision, c.recall, c.accuracy);
    }
    let _ = writeln!(out, "  confusion (rows truth, columns predicted: safe distracted aggressive)");
    for b in Behavior::ALL {
        let row = r.confusion[b.index()];
        let _ = writeln!(out, "  {:<11} {:>6} {:>6} {:>6}", b.as_str(), row[0], row[1], row[2]);
    }
}

/// Human-readable summary. Contains no timing or host information, so equal
/// inputs give byte-identical output.
pub fn render_text(r: &ExperimentReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "seed {}  runs {}  scenarios/run {}", r.seed, r.runs.len(), r.scenarios_per_run);
    let _ = writeln!(out);
    class_table(&mut out, "in-vehicle (mean over runs)", &r.in_vehicle);
    let _ = writeln!(out);
    class_table(&mut out, "roadside (mean over runs)", &r.roadside);
    let _ = writeln!(out);
    let _ = writeln!(out, "accuracy gap (in-vehicle - roadside): {:.4} points", r.accuracy_gap_points());
    let _ = writeln!(
        out,
        "tracking error: {:.4}% of {} frames",
        100.0 * r.errors.tracking_error_rate(),
        r.errors.frames
    );
    let _ = writeln!(
        out,
        "estimation error: {:.4}% of {} estimates",
        100.0 * r.errors.estimation_error_rate(),
        r.errors.estimates
    );
    let _ = writeln!(out);
    let _ = writeln!(out, "per run: run in_vehicle_acc roadside_acc tracking_err% estimation_err%");
    for run in &r.runs {
        let _ = writeln!(
            out,
            "  {:>3} {:.4} {:.4} {:.4} {:.4}",
            run.run,
            run.in_vehicle.accuracy,
            run.roadside.accuracy,
            100.0 * run.errors.tracking_error_rate(),
            100.0 * run.errors.estimation_error_rate()
        );
    }
    out
}

/// Machine-readable report: one `scope,run,pipeline,class,metric,value`
/// record per line. `run` is `mean` for averaged rows.
pub fn render_csv(r: &ExperimentReport) -> String {
    let mut out = String::from("scope,run,pipeline,class,metric,value\n");
    let mut classes = |run: &str, pipeline: &str, c: &ClassificationReport| {
        let _ = writeln!(out, "classification,{run},{pipeline},all,accuracy,{:.6}", c.accuracy);
        for b in Behavior::ALL {
            let m = c.class(b);
            for (name, v) in [("precision", m.precision), ("recall", m.recall), ("accuracy", m.accuracy)] {
                let _ = writeln!(out, "classification,{run},{pipeline},{b},{name},{v:.6}");
            }
            for p in Behavior::ALL {
                let _ = writeln!(
                    out,
                    "confusion,{run},{pipeline},{b},predicted_{p},{}",
                    c.confusion[b.index()][p.index()]
                );
            }
        }
    };
    classes("mean", "in-vehicle", &r.in_vehicle);
    classes("mean", "roadside", &r.roadside);
    for run in &r.runs {
        let id = run.run.to_string();
        classes(&id, "in-vehicle", &run.in_vehicle);
        classes(&id, "roadside", &run.roadside);
    }
    let mut errs = |run: &str, e: &super::metrics::ErrorCounts| {
        let _ = writeln!(out, "errors,{run},roadside,all,tracking_error_rate,{:.6}", e.tracking_error_rate());
        let _ = writeln!(out, "errors,{run},roadside,all,estimation_error_rate,{:.6}", e.estimation_error_rate());
        let _ = writeln!(out, "errors,{run},roadside,all,frames,{}", e.frames);
        let _ = writeln!(out, "errors,{run},roadside,all,estimates,{}", e.estimates);
    };
    errs("mean", &r.errors);
    for run in &r.runs {
        errs(&run.run.to_string(), &run.errors);
    }
    out
}

pub fn render_feedback_text(t: &FeedbackTable) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "propensity reduction {:.0}% ({} pipeline)", 100.0 * t.reduction, t.pipeline);
    let _ = writeln!(out, "{:<13} {:>11} {:>11}", "micro", "aggressive", "distracted");
    for row in &t.rows {
        let cell = |b| row.ratio(b).map_or("N/A".to_string(), |r| format!("{r:.4}"));
        let _ = writeln!(
            out,
            "{:<13} {:>11} {:>11}",
            row.micro.as_str(),
            cell(Behavior::Aggressive),
            cell(Behavior::Distracted)
        );
    }
    out
}

/// One `micro,class,before,after,ratio` record per line; N/A rows have
/// empty counts.
pub fn render_feedback_csv(t: &FeedbackTable) -> String {
    let mut out = String::from("micro,class,before,after,ratio\n");
    for row in &t.rows {
        for (k, b) in FEEDBACK_CLASSES.iter().enumerate() {
            match row.counts[k] {
                Some((before, after)) => {
                    let _ = writeln!(
                        out,
                        "{},{b},{before},{after},{:.6}",
                        row.micro,
                        row.ratio(*b).unwrap_or(1.0)
                    );
                }
                None => {
                    let _ = writeln!(out, "{},{b},,,N/A", row.micro);
                }
            }
        }
    }
    out
}

fn write_pair(dir: &Path, stem: &str, text: &str, csv: &str) -> Result<()> {
    fs::create_dir_all(dir).map_err(Error::from).context(|| format!("creating {}", dir.display()))?;
    for (ext, body) in [("txt", text), ("csv", csv)] {
        let path = dir.join(format!("{stem}.{ext}"));
        fs::write(&path, body).map_err(Error::from).context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

/// Writes `report.txt` and `report.csv` into `dir`.
pub fn write_report(dir: &Path, r: &ExperimentReport) -> Result<()> {
    write_pair(dir, "report", &render_text(r), &render_csv(r))
}

/// Writes `feedback.txt` and `feedback.csv` into `dir`.
pub fn write_feedback(dir: &Path, t: &FeedbackTable) -> Result<()> {
    write_pair(dir, "feedback", &render_feedback_text(t), &render_feedback_csv(t))
}
