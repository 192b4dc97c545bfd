use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::experiment::roadside_estimate;
use super::metrics::{error_breakdown, ErrorCounts};
use crate::error::{Error, Result};
use crate::sim::run_scenario;

/// Error rates of the roadside channel for one noise setting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelRates {
    pub pos_noise_sigma_px: f64,
    pub counts: ErrorCounts,
}

/// Measures tracking and estimation error over the first run's scenarios.
pub fn measure_channel(config: &ExperimentConfig) -> Result<ChannelRates> {
    config.validate()?;
    let scenarios = config.scenarios_for_run(0);
    let counts: Vec<ErrorCounts> = scenarios
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let trace = run_scenario(s)?;
            let (obs, est) = roadside_estimate(&trace, s, config, config.channel_seed(0, i))?;
            error_breakdown(&trace, &obs, &est, &config.tolerance, s.speed_limit_mps)
        })
        .collect::<Result<_>>()?;
    let mut total = ErrorCounts::default();
    for c in &counts {
        total.add(c);
    }
    Ok(ChannelRates { pos_noise_sigma_px: config.noise.pos_noise_sigma_px, counts: total })
}

/// Bisects the pixel noise so the estimation error rate approaches
/// `target_rate`. Seeds are fixed across probes, so the measured rate is a
/// deterministic, near-monotone function of sigma.
pub fn calibrate_pixel_noise(config: &ExperimentConfig, target_rate: f64, max_sigma_px: f64, iterations: usize) -> Result<ChannelRates> {
    if !(target_rate > 0.0 && target_rate < 1.0 && max_sigma_px > 0.0) {
        return Err(Error::config("calibration needs 0 < target < 1 and a positive sigma bound"));
    }
    let probe = |sigma: f64| {
        let mut c = config.clone();
        c.noise.pos_noise_sigma_px = sigma;
        measure_channel(&c)
    };
    let (mut lo, mut hi) = (0.0, max_sigma_px);
    let mut best = probe(hi)?;
    if best.counts.estimation_error_rate() < target_rate {
        return Err(Error::config(format!("target rate not reached at sigma {max_sigma_px} px")));
    }
    for _ in 0..iterations {
        let mid = 0.5 * (lo + hi);
        let r = probe(mid)?;
        let err = r.counts.estimation_error_rate();
        if (err - target_rate).abs() < (best.counts.estimation_error_rate() - target_rate).abs() {
            best = r;
        }
        if err < target_rate {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(best)
}
