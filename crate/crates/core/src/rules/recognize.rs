use std::collections::BTreeSet;
use std::sync::Arc;

use super::detect::{detect_primitives, KinematicSample, PrimitiveStream};
use super::library::{full_program, micro_rule_set};
use super::params::DetectorParams;
use crate::ec::{Engine, EventInstance, Interval, RuleDef, RuleSet, WindowConfig};
use crate::error::Result;
use crate::label::{Behavior, VehicleId};
use crate::wpm::{classify, select_relevant_rules, BehaviorSpecs, Classification, DependencyGraph, Snapshot};

/// Event assertions read directly from the primitive stream.
const SNAPSHOT_EVENTS: [&str; 2] = ["weaving", "suddenSteer"];
/// Fluent assertions read from the engine or the input intervals.
const SNAPSHOT_FLUENTS: [&str; 8] = [
    "overSpeed",
    "slowSpeed",
    "hardBraking",
    "normalBraking",
    "laneChange",
    "proximity",
    "laneDrifting",
    "straddling",
];

/// Classification of one window step.
#[derive(Debug, Clone)]
pub struct StepVerdict {
    pub range: Interval,
    pub snapshot: Snapshot,
    pub classification: Classification,
}

impl StepVerdict {
    pub fn label(&self) -> Behavior {
        self.classification.label
    }
}

/// Per-vehicle outcome: one verdict per window step and the aggregated label.
#[derive(Debug, Clone)]
pub struct VehicleVerdict {
    pub vehicle: VehicleId,
    pub label: Behavior,
    pub steps: Vec<StepVerdict>,
}

impl VehicleVerdict {
    /// Frames labelled `b` after precedence.
    pub fn frames_labelled(&self, b: Behavior) -> u64 {
        self.steps.iter().filter(|s| s.label() == b).map(|s| s.range.len()).sum()
    }

    /// Window steps in which `b` was recognized, before precedence.
    pub fn recognized_steps(&self, b: Behavior) -> usize {
        self.steps.iter().filter(|s| s.classification.recognized(b)).count()
    }
}

/// Detector thresholds, rule library and behavior specs bound together for
/// classifying vehicle series.
#[derive(Debug, Clone)]
pub struct Recognizer {
    rules: Arc<RuleSet>,
    definitions: Vec<RuleDef>,
    closure: DependencyGraph,
    params: DetectorParams,
    specs: BehaviorSpecs,
    window: WindowConfig,
    speed_limit_mps: f64,
}

impl Recognizer {
    pub fn new(params: DetectorParams, specs: BehaviorSpecs, window: WindowConfig, speed_limit_mps: f64) -> Result<Self> {
        params.validate()?;
        specs.validate()?;
        window.validate()?;
        let program = full_program()?;
        let closure = DependencyGraph::from_rules(&program.rules).transitive_closure();
        Ok(Recognizer {
            rules: micro_rule_set()?,
            definitions: program.rules,
            closure,
            params,
            specs,
            window,
            speed_limit_mps,
        })
    }

    pub fn params(&self) -> &DetectorParams {
        &self.params
    }

    pub fn specs(&self) -> &BehaviorSpecs {
        &self.specs
    }

    /// Full rule program (micro-behaviors and behavior definitions).
    pub fn definitions(&self) -> &[RuleDef] {
        &self.definitions
    }

    pub fn closure(&self) -> &DependencyGraph {
        &self.closure
    }

    /// Whether a behavior definition is reachable from the active
    /// assertions of a snapshot.
    fn behavior_relevant(&self, snapshot: &Snapshot, b: Behavior) -> bool {
        let active: BTreeSet<String> = snapshot.iter().filter(|(_, v)| **v).map(|(k, _)| k.clone()).collect();
        select_relevant_rules(&self.definitions, &self.closure, &active)
            .into_iter()
            .any(|i| self.definitions[i].head.name == b.fluent())
    }

    /// Runs detectors, the windowed engine and the weighted classifier over
    /// one vehicle's series.
    pub fn classify_series(&self, vehicle: VehicleId, series: &[KinematicSample]) -> Result<VehicleVerdict> {
        let stream = detect_primitives(series, &self.params)?;
        let steps = match series.last() {
            Some(last) => self.run_windows(vehicle, &stream, last.frame + 1)?,
            None => Vec::new(),
        };
        let mut v = VehicleVerdict { vehicle, label: Behavior::Safe, steps };
        v.label = self.aggregate(&v);
        Ok(v)
    }

    /// Longest of aggressive and distracted after precedence, if it spans
    /// at least `behavior_min_frames`; ties go to aggressive.
    fn aggregate(&self, v: &VehicleVerdict) -> Behavior {
        let a = v.frames_labelled(Behavior::Aggressive);
        let d = v.frames_labelled(Behavior::Distracted);
        let min = self.params.behavior_min_frames.max(1);
        if a >= d && a >= min {
            Behavior::Aggressive
        } else if d > a && d >= min {
            Behavior::Distracted
        } else {
            Behavior::Safe
        }
    }

    fn run_windows(&self, vehicle: VehicleId, stream: &PrimitiveStream, end: u64) -> Result<Vec<StepVerdict>> {
        let entity = vehicle.to_string();
        let mut engine = Engine::new(
            Arc::clone(&self.rules),
            self.params.param_table(self.speed_limit_mps),
            self.window,
        )?;
        engine.register_entity(&entity);
        for (name, set) in &stream.intervals {
            engine.assert_happens_for(name, &entity, set.iter().copied())?;
        }
        let step = self.window.step;
        let mut fed_until = 0;
        let mut verdicts = Vec::new();
        let mut next_step_start = 0;
        loop {
            let w = engine.window();
            let feed = Interval::new(fed_until, w.end.min(end));
            for &(t, name) in &stream.events {
                if feed.contains(t) {
                    engine.assert_happens_at(&EventInstance::new(name, &entity, t))?;
                }
            }
            for (name, samples) in &stream.scalars {
                for &(t, x) in samples {
                    if feed.contains(t) {
                        engine.assert_scalar(name, &entity, t, x)?;
                    }
                }
            }
            fed_until = feed.end.max(fed_until);
            engine.evaluate();

            // Classify every pending step that ends inside this window.
            while next_step_start < end && (next_step_start + step).min(end) <= w.end {
                let range = Interval::new(next_step_start, (next_step_start + step).min(end));
                verdicts.push(self.classify_step(&engine, stream, &entity, range)?);
                next_step_start = range.end;
            }
            if w.end >= end {
                break;
            }
            engine.advance_window([])?;
        }
        Ok(verdicts)
    }

    fn classify_step(&self, engine: &Engine, stream: &PrimitiveStream, entity: &str, range: Interval) -> Result<StepVerdict> {
        let snapshot = self.snapshot(engine, stream, entity, range)?;
        let mut classification = classify(&snapshot, &self.specs)?;
        for b in [Behavior::Aggressive, Behavior::Distracted] {
            if !self.behavior_relevant(&snapshot, b) {
                match b {
                    Behavior::Aggressive => classification.aggressive.recognized = false,
                    _ => classification.distracted.recognized = false,
                }
            }
        }
        classification.label = precedence(&classification);
        Ok(StepVerdict { range, snapshot, classification })
    }

    /// "Assertion true" = the event occurred, or the fluent held, anywhere
    /// in `range`.
    fn snapshot(&self, engine: &Engine, stream: &PrimitiveStream, entity: &str, range: Interval) -> Result<Snapshot> {
        let mut s = Snapshot::new();
        for name in SNAPSHOT_EVENTS {
            s.insert(name.to_string(), stream.events.iter().any(|&(t, n)| n == name && range.contains(t)));
        }
        for name in SNAPSHOT_FLUENTS {
            let held = engine.holds_for(name, entity, true)?;
            s.insert(name.to_string(), held.overlaps(range));
        }
        Ok(s)
    }
}

fn precedence(c: &Classification) -> Behavior {
    if c.aggressive.recognized {
        Behavior::Aggressive
    } else if c.distracted.recognized {
        Behavior::Distracted
    } else {
        Behavior::Safe
    }
}
