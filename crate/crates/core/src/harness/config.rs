use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ec::WindowConfig;
use crate::error::{Error, Result, ResultExt};
use crate::obs::{CameraModel, CameraPose, NoiseModel};
use crate::rules::{DetectorParams, Recognizer};
use crate::sim::SimConfig;
use crate::wpm::BehaviorSpecs;

/// When an estimate counts as wrong against ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ErrorTolerance {
    /// Allowed speed error as a fraction of the speed limit.
    pub speed_frac_of_limit: f64,
    pub orientation_deg: f64,
}

impl Default for ErrorTolerance {
    fn default() -> Self {
        ErrorTolerance { speed_frac_of_limit: 0.05, orientation_deg: 5.0 }
    }
}

/// Everything one experiment needs. Every section is optional in TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed; scenario and channel seeds are derived from it.
    pub seed: u64,
    /// Independent repetitions, each with fresh scenario and channel seeds.
    pub runs: usize,
    /// Scenarios per run generated from `scenario` when `scenarios` is empty.
    pub scenario_count: usize,
    /// Template scenario.
    pub scenario: SimConfig,
    /// Explicit scenario list; their `seed` fields are replaced by derived seeds.
    pub scenarios: Vec<SimConfig>,
    pub camera: CameraPose,
    pub noise: NoiseModel,
    pub detector: DetectorParams,
    pub behaviors: BehaviorSpecs,
    pub window: WindowConfig,
    pub tolerance: ErrorTolerance,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            runs: 5,
            scenario_count: 50,
            scenario: SimConfig::default(),
            scenarios: Vec::new(),
            camera: CameraPose::default(),
            noise: NoiseModel::default(),
            detector: DetectorParams::default(),
            behaviors: BehaviorSpecs::default(),
            window: WindowConfig::default(),
            tolerance: ErrorTolerance::default(),
        }
    }
}

/// Streams of derived seeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedStream {
    Scenario = 1,
    Channel = 2,
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for scenario `index` of `run`, independent across streams.
pub fn derive_seed(master: u64, run: usize, index: usize, stream: SeedStream) -> u64 {
    mix64(mix64(mix64(master ^ stream as u64) ^ run as u64) ^ index as u64)
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(Error::from)
            .context(|| format!("reading {}", path.display()))?;
        Self::from_toml_str(&text).context(|| format!("parsing {}", path.display()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::config("runs must be at least 1"));
        }
        if self.scenarios.is_empty() && self.scenario_count == 0 {
            return Err(Error::config("experiment needs at least one scenario"));
        }
        for (i, s) in self.scenario_list().iter().enumerate() {
            s.validate().context(|| format!("scenario {i}"))?;
        }
        self.noise.validate()?;
        self.detector.validate()?;
        self.behaviors.validate()?;
        self.window.validate()?;
        if !(self.tolerance.speed_frac_of_limit > 0.0 && self.tolerance.orientation_deg > 0.0) {
            return Err(Error::config("error tolerances must be positive"));
        }
        Ok(())
    }

    fn scenario_list(&self) -> Vec<&SimConfig> {
        if self.scenarios.is_empty() {
            vec![&self.scenario; self.scenario_count]
        } else {
            self.scenarios.iter().collect()
        }
    }

    pub fn scenarios_per_run(&self) -> usize {
        if self.scenarios.is_empty() {
            self.scenario_count
        } else {
            self.scenarios.len()
        }
    }

    /// Scenario configs of one run, with derived seeds.
    pub fn scenarios_for_run(&self, run: usize) -> Vec<SimConfig> {
        self.scenario_list()
            .into_iter()
            .enumerate()
            .map(|(i, s)| SimConfig { seed: derive_seed(self.seed, run, i, SeedStream::Scenario), ..s.clone() })
            .collect()
    }

    pub fn channel_seed(&self, run: usize, index: usize) -> u64 {
        derive_seed(self.seed, run, index, SeedStream::Channel)
    }

    pub fn recognizer(&self, speed_limit_mps: f64) -> Result<Recognizer> {
        Recognizer::new(self.detector.clone(), self.behaviors.clone(), self.window, speed_limit_mps)
    }

    pub fn camera_for(&self, scenario: &SimConfig) -> Result<CameraModel> {
        let g = scenario.geometry();
        CameraModel::roadside(&self.camera, g.fps, g.ring_length_m, g.road_width_m())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_toml_is_the_default() {
        assert_eq!(ExperimentConfig::from_toml_str("").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn toml_roundtrip() {
        let cfg = ExperimentConfig { seed: 9, runs: 2, ..ExperimentConfig::default() };
        let text = cfg.to_toml_string().unwrap();
        assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_and_empty_sets_are_rejected() {
        assert!(ExperimentConfig::from_toml_str("sed = 1").is_err());
        assert!(ExperimentConfig::from_toml_str("scenario_count = 0").is_err());
        assert!(ExperimentConfig::from_toml_str("[noise]\nmiss_prob = 2.0").is_err());
    }

    #[test]
    fn derived_seeds_differ_by_run_index_and_stream() {
        let a = derive_seed(1, 0, 0, SeedStream::Scenario);
        assert_ne!(a, derive_seed(1, 1, 0, SeedStream::Scenario));
        assert_ne!(a, derive_seed(1, 0, 1, SeedStream::Scenario));
        assert_ne!(a, derive_seed(1, 0, 0, SeedStream::Channel));
        assert_ne!(a, derive_seed(2, 0, 0, SeedStream::Scenario));
        assert_eq!(a, derive_seed(1, 0, 0, SeedStream::Scenario));
    }
}
