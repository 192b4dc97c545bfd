use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use roadwatch::harness::{
    calibrate_pixel_noise, classify_estimated, classify_ground_truth, feedback_experiment, render_feedback_text,
    render_text, roadside_estimate, run_experiment, write_feedback, write_report, ExperimentConfig, Pipeline,
};
use roadwatch::sim::{run_scenario, MicroBehavior};
use roadwatch::trace_io::{self, TraceKind};
use roadwatch::{Error, Result};

#[derive(Parser)]
#[command(name = "roadwatch", version, about = "Roadside driver-behavior testbed")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML). Defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the scenarios of one run and write ground-truth traces.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Which run's scenario seeds to use.
        #[arg(long, default_value_t = 0)]
        run: usize,
    },
    /// Label every vehicle of a trace file.
    Classify {
        #[command(flatten)]
        common: Common,
        /// Ground-truth or estimated trace (CSV).
        #[arg(long)]
        trace: PathBuf,
        /// in-vehicle or roadside. Roadside on a ground-truth trace observes
        /// it through the configured camera and noise first.
        #[arg(long, default_value = "in-vehicle", value_parser = parse_pipeline)]
        pipeline: Pipeline,
    },
    /// Run every scenario through both pipelines and write report.txt / report.csv.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Number of runs; overrides the config.
        #[arg(long)]
        runs: Option<usize>,
    },
    /// Reduce each micro-behavior propensity and report instance ratios.
    Feedback {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        runs: Option<usize>,
        /// Fraction removed from each propensity, in [0, 1).
        #[arg(long, default_value_t = 0.5)]
        reduction: f64,
        /// Restrict to these micro-behaviors (comma separated).
        #[arg(long, value_delimiter = ',')]
        micro: Vec<String>,
        #[arg(long, default_value = "in-vehicle", value_parser = parse_pipeline)]
        pipeline: Pipeline,
    },
    /// Fit the pixel noise to a target estimation error rate.
    Calibrate {
        #[command(flatten)]
        common: Common,
        /// Target estimation error rate, in percent.
        #[arg(long, default_value_t = 1.33)]
        target_percent: f64,
        #[arg(long, default_value_t = 20.0)]
        max_sigma_px: f64,
        #[arg(long, default_value_t = 12)]
        iterations: usize,
    },
}

fn parse_pipeline(s: &str) -> std::result::Result<Pipeline, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn write_labels(out: &mut impl Write, verdicts: &[roadwatch::rules::VehicleVerdict]) -> Result<()> {
    writeln!(out, "vehicle_id,label")?;
    for v in verdicts {
        writeln!(out, "{},{}", v.vehicle, v.label)?;
    }
    Ok(())
}

fn simulate(common: &Common, run: usize) -> Result<()> {
    let cfg = common.load()?;
    std::fs::create_dir_all(&common.out)?;
    for (i, s) in cfg.scenarios_for_run(run).iter().enumerate() {
        let trace = run_scenario(s)?;
        let path = common.out.join(format!("scenario_{i:03}.csv"));
        trace_io::save_ground_truth(&path, &trace)?;
        println!("{}", path.display());
    }
    Ok(())
}

fn classify(common: &Common, trace: &Path, pipeline: Pipeline) -> Result<()> {
    let cfg = common.load()?;
    let recognizer = cfg.recognizer(cfg.scenario.speed_limit_mps)?;
    let verdicts = match (trace_io::detect_kind(trace)?, pipeline) {
        (TraceKind::GroundTruth, Pipeline::InVehicle) => {
            classify_ground_truth(&trace_io::load_ground_truth(trace)?, &recognizer)?
        }
        (TraceKind::GroundTruth, Pipeline::Roadside) => {
            let gt = trace_io::load_ground_truth(trace)?;
            let (_, est) = roadside_estimate(&gt, &cfg.scenario, &cfg, cfg.channel_seed(0, 0))?;
            std::fs::create_dir_all(&common.out)?;
            trace_io::save_estimated(&common.out.join("estimated.csv"), &est)?;
            classify_estimated(&est, &recognizer)?
        }
        (TraceKind::Estimated, Pipeline::Roadside) => classify_estimated(&trace_io::load_estimated(trace)?, &recognizer)?,
        (TraceKind::Estimated, Pipeline::InVehicle) => {
            return Err(Error::config("an estimated trace can only be classified with --pipeline roadside"));
        }
    };
    write_labels(&mut std::io::stdout().lock(), &verdicts)
}

fn evaluate(common: &Common, runs: Option<usize>) -> Result<()> {
    let mut cfg = common.load()?;
    if let Some(r) = runs {
        cfg.runs = r;
    }
    let report = run_experiment(&cfg)?;
    write_report(&common.out, &report)?;
    print!("{}", render_text(&report));
    Ok(())
}

fn feedback(common: &Common, runs: Option<usize>, reduction: f64, micro: &[String], pipeline: Pipeline) -> Result<()> {
    let mut cfg = common.load()?;
    if let Some(r) = runs {
        cfg.runs = r;
    }
    let micros: Vec<MicroBehavior> = if micro.is_empty() {
        MicroBehavior::ALL.to_vec()
    } else {
        micro.iter().map(|m| m.parse()).collect::<Result<_>>()?
    };
    let table = feedback_experiment(&cfg, &micros, reduction, pipeline)?;
    write_feedback(&common.out, &table)?;
    print!("{}", render_feedback_text(&table));
    Ok(())
}

fn calibrate(common: &Common, target_percent: f64, max_sigma_px: f64, iterations: usize) -> Result<()> {
    let cfg = common.load()?;
    let r = calibrate_pixel_noise(&cfg, target_percent / 100.0, max_sigma_px, iterations)?;
    println!(
        "pos_noise_sigma_px = {:.3}  (estimation error {:.4}%, tracking error {:.4}%)",
        r.pos_noise_sigma_px,
        100.0 * r.counts.estimation_error_rate(),
        100.0 * r.counts.tracking_error_rate()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate { common, run } => simulate(common, *run),
        Command::Classify { common, trace, pipeline } => classify(common, trace, *pipeline),
        Command::Evaluate { common, runs } => evaluate(common, *runs),
        Command::Feedback { common, runs, reduction, micro, pipeline } => {
            feedback(common, *runs, *reduction, micro, *pipeline)
        }
        Command::Calibrate { common, target_percent, max_sigma_px, iterations } => {
            calibrate(common, *target_percent, *max_sigma_px, *iterations)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
