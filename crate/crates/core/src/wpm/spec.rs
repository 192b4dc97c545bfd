use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::formula::{CnfFormula, Lit};
use super::solver::{solve, SolveResult};
use crate::error::{Error, Result};
use crate::label::Behavior;

/// Truth value of each micro-behavior assertion over one window step.
pub type Snapshot = BTreeMap<String, bool>;

/// Hard set `H`, weighted soft set `S` and threshold `W` for one behavior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BehaviorSpec {
    pub hard: Vec<String>,
    pub soft: BTreeMap<String, f64>,
    pub threshold: f64,
}

impl BehaviorSpec {
    pub fn validate(&self) -> Result<()> {
        for h in &self.hard {
            if self.soft.contains_key(h) {
                return Err(Error::config(format!("`{h}` is both hard and soft")));
            }
        }
        for (name, w) in &self.soft {
            if !(*w > 0.0 && w.is_finite()) {
                return Err(Error::config(format!("weight of `{name}` must be positive, got {w}")));
            }
        }
        let total: f64 = self.soft.values().sum();
        if !(self.threshold >= 0.0) || self.threshold > total {
            return Err(Error::config(format!(
                "threshold {} must lie in [0, {total}]",
                self.threshold
            )));
        }
        Ok(())
    }

    /// Whether `name` is a hard or soft member.
    pub fn mentions(&self, name: &str) -> bool {
        self.hard.iter().any(|h| h == name) || self.soft.contains_key(name)
    }

    pub fn scaled(&self, k: f64) -> BehaviorSpec {
        BehaviorSpec {
            hard: self.hard.clone(),
            soft: self.soft.iter().map(|(n, w)| (n.clone(), w * k)).collect(),
            threshold: self.threshold * k,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BehaviorSpecs {
    pub aggressive: BehaviorSpec,
    pub distracted: BehaviorSpec,
}

impl Default for BehaviorSpecs {
    fn default() -> Self {
        let soft = |pairs: &[(&str, f64)]| pairs.iter().map(|(n, w)| (n.to_string(), *w)).collect();
        BehaviorSpecs {
            aggressive: BehaviorSpec {
                hard: vec!["hardBraking".into()],
                soft: soft(&[
                    ("overSpeed", 2.0),
                    ("weaving", 2.0),
                    ("suddenSteer", 2.0),
                    ("laneChange", 1.0),
                    ("proximity", 1.0),
                ]),
                threshold: 3.0,
            },
            distracted: BehaviorSpec {
                hard: vec!["laneDrifting".into()],
                soft: soft(&[
                    ("straddling", 2.0),
                    ("slowSpeed", 2.0),
                    ("normalBraking", 1.0),
                    ("laneChange", 1.0),
                ]),
                threshold: 2.0,
            },
        }
    }
}

impl BehaviorSpecs {
    pub fn validate(&self) -> Result<()> {
        self.aggressive.validate().map_err(|e| e.context("aggressive spec"))?;
        self.distracted.validate().map_err(|e| e.context("distracted spec"))
    }

    pub fn get(&self, b: Behavior) -> Option<&BehaviorSpec> {
        match b {
            Behavior::Aggressive => Some(&self.aggressive),
            Behavior::Distracted => Some(&self.distracted),
            Behavior::Safe => None,
        }
    }

    /// Every assertion name mentioned by either spec, sorted.
    pub fn assertions(&self) -> Vec<String> {
        let mut out: Vec<String> = [&self.aggressive, &self.distracted]
            .iter()
            .flat_map(|s| s.hard.iter().chain(s.soft.keys()).cloned())
            .collect();
        out.sort();
        out.dedup();
        out
    }
}

/// Active spec table plus an optional staged replacement that becomes active
/// only when [`SpecTable::at_boundary`] is called.
#[derive(Debug, Clone)]
pub struct SpecTable {
    active: BehaviorSpecs,
    staged: Option<BehaviorSpecs>,
}

impl SpecTable {
    pub fn new(specs: BehaviorSpecs) -> Self {
        SpecTable { active: specs, staged: None }
    }

    pub fn active(&self) -> &BehaviorSpecs {
        &self.active
    }

    pub fn stage(&mut self, specs: BehaviorSpecs) -> Result<()> {
        specs.validate()?;
        self.staged = Some(specs);
        Ok(())
    }

    pub fn at_boundary(&mut self) {
        if let Some(s) = self.staged.take() {
            self.active = s;
        }
    }
}

/// CNF for the hypothesis "the vehicle shows behavior k".
#[derive(Debug, Clone)]
pub struct Encoding {
    pub behavior: Behavior,
    pub formula: CnfFormula,
    pub threshold: f64,
    /// `(assertion, variable, weight)` for each soft member.
    pub soft_vars: Vec<(String, usize, f64)>,
}

/// Encodes `spec` against `snapshot`:
///
/// - hard unit clauses fixing every assertion to its snapshot value,
/// - hard unit clauses for each `H` member,
/// - one behavior variable per class, pairwise exclusive, with the
///   hypothesis `k` asserted,
/// - one weighted soft unit clause per `S` member.
pub fn encode(behavior: Behavior, spec: &BehaviorSpec, snapshot: &Snapshot) -> Result<Encoding> {
    let mut f = CnfFormula::new();
    let value = |name: &str| {
        snapshot.get(name).copied().ok_or_else(|| Error::MissingSnapshot(name.to_string()))
    };

    let mut hard_vars = Vec::new();
    for h in &spec.hard {
        let v = f.new_var(Some(h));
        hard_vars.push((v, value(h)?));
    }
    let mut soft_vars = Vec::new();
    for (s, w) in &spec.soft {
        let v = f.new_var(Some(s));
        soft_vars.push((s.clone(), v, *w, value(s)?));
    }
    let classes: Vec<(Behavior, usize)> =
        Behavior::ALL.iter().map(|b| (*b, f.new_var(Some(b.fluent())))).collect();

    for &(v, observed) in &hard_vars {
        f.add_hard(vec![Lit::new(v, observed)]);
        f.add_hard(vec![Lit::pos(v)]);
    }
    for (_, v, _, observed) in &soft_vars {
        f.add_hard(vec![Lit::new(*v, *observed)]);
    }
    for (i, (_, a)) in classes.iter().enumerate() {
        for (_, b) in &classes[i + 1..] {
            f.add_hard(vec![Lit::neg(*a), Lit::neg(*b)]);
        }
    }
    let hyp = classes.iter().find(|(b, _)| *b == behavior).unwrap().1;
    f.add_hard(vec![Lit::pos(hyp)]);
    for (_, v, w, _) in &soft_vars {
        f.add_soft(vec![Lit::pos(*v)], *w)?;
    }
    Ok(Encoding {
        behavior,
        formula: f,
        threshold: spec.threshold,
        soft_vars: soft_vars.into_iter().map(|(n, v, w, _)| (n, v, w)).collect(),
    })
}

#[derive(Debug, Clone)]
pub struct SpecOutcome {
    pub behavior: Behavior,
    pub result: SolveResult,
    /// Total weight of satisfied soft assertions.
    pub satisfied_weight: f64,
    pub threshold: f64,
    pub recognized: bool,
    /// Names of the soft assertions counted toward the threshold.
    pub core_soft: Vec<String>,
}

/// Solves one encoding and applies the recognition rule: every hard member
/// holds and the satisfied soft weight strictly exceeds the threshold.
pub fn decide(enc: &Encoding) -> Result<SpecOutcome> {
    let result = solve(&enc.formula)?;
    let (satisfied_weight, core_soft) = if result.is_sat() {
        let mut w = 0.0;
        let mut names = Vec::new();
        for (name, v, weight) in &enc.soft_vars {
            if result.assignment[*v] {
                w += weight;
                names.push(name.clone());
            }
        }
        (w, names)
    } else {
        (0.0, Vec::new())
    };
    let recognized = result.is_sat() && satisfied_weight > enc.threshold;
    Ok(SpecOutcome {
        behavior: enc.behavior,
        result,
        satisfied_weight,
        threshold: enc.threshold,
        recognized,
        core_soft,
    })
}

#[derive(Debug, Clone)]
pub struct Classification {
    pub label: Behavior,
    pub aggressive: SpecOutcome,
    pub distracted: SpecOutcome,
}

impl Classification {
    pub fn recognized(&self, b: Behavior) -> bool {
        match b {
            Behavior::Aggressive => self.aggressive.recognized,
            Behavior::Distracted => self.distracted.recognized,
            Behavior::Safe => !self.aggressive.recognized && !self.distracted.recognized,
        }
    }
}

/// Labels one snapshot. Assertions absent from the snapshot count as false.
/// Aggressive takes precedence over distracted; neither means safe.
pub fn classify(snapshot: &Snapshot, specs: &BehaviorSpecs) -> Result<Classification> {
    let mut full = snapshot.clone();
    for name in specs.assertions() {
        full.entry(name).or_insert(false);
    }
    let aggressive = decide(&encode(Behavior::Aggressive, &specs.aggressive, &full)?)?;
    let distracted = decide(&encode(Behavior::Distracted, &specs.distracted, &full)?)?;
    let label = if aggressive.recognized {
        Behavior::Aggressive
    } else if distracted.recognized {
        Behavior::Distracted
    } else {
        Behavior::Safe
    };
    Ok(Classification { label, aggressive, distracted })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn snap(pairs: &[(&str, bool)]) -> Snapshot {
        pairs.iter().map(|(n, v)| (n.to_string(), *v)).collect()
    }

    fn aggressive_only() -> BehaviorSpec {
        BehaviorSpec {
            hard: vec!["hardBraking".into()],
            soft: [("overSpeed", 2.0), ("weaving", 2.0), ("suddenSteer", 2.0), ("laneChange", 1.0)]
                .iter()
                .map(|(n, w)| (n.to_string(), *w))
                .collect(),
            threshold: 3.0,
        }
    }

    #[test]
    fn all_true_violates_nothing() {
        let s = snap(&[
            ("hardBraking", true),
            ("overSpeed", true),
            ("weaving", true),
            ("suddenSteer", true),
            ("laneChange", true),
        ]);
        let out = decide(&encode(Behavior::Aggressive, &aggressive_only(), &s).unwrap()).unwrap();
        assert!(out.result.is_sat());
        assert_eq!(out.result.violated_soft_weight, 0.0);
        assert!(out.recognized);
    }

    #[test]
    fn missing_hard_member_is_unsat() {
        let s = snap(&[
            ("hardBraking", false),
            ("overSpeed", true),
            ("weaving", true),
            ("suddenSteer", true),
            ("laneChange", true),
        ]);
        let out = decide(&encode(Behavior::Aggressive, &aggressive_only(), &s).unwrap()).unwrap();
        assert!(!out.result.is_sat());
        assert!(!out.recognized);
    }

    #[test]
    fn missing_snapshot_value_is_an_error() {
        let err = encode(Behavior::Aggressive, &aggressive_only(), &snap(&[("hardBraking", true)]))
            .unwrap_err();
        assert!(matches!(err, Error::MissingSnapshot(_)));
    }

    #[test]
    fn threshold_is_strict() {
        let specs = BehaviorSpecs::default();
        // laneDrifting + straddling = 2 = W: not recognized.
        let c = classify(&snap(&[("laneDrifting", true), ("straddling", true)]), &specs).unwrap();
        assert_eq!(c.label, Behavior::Safe);
        let c = classify(
            &snap(&[("laneDrifting", true), ("slowSpeed", true), ("normalBraking", true)]),
            &specs,
        )
        .unwrap();
        assert_eq!(c.label, Behavior::Distracted);
        assert_eq!(c.distracted.satisfied_weight, 3.0);
    }

    #[test]
    fn empty_snapshot_is_safe_and_precedence_applies() {
        let specs = BehaviorSpecs::default();
        assert_eq!(classify(&Snapshot::new(), &specs).unwrap().label, Behavior::Safe);
        let both = snap(&[
            ("hardBraking", true),
            ("overSpeed", true),
            ("weaving", true),
            ("laneDrifting", true),
            ("slowSpeed", true),
            ("normalBraking", true),
        ]);
        let c = classify(&both, &specs).unwrap();
        assert!(c.aggressive.recognized && c.distracted.recognized);
        assert_eq!(c.label, Behavior::Aggressive);
    }

    #[test]
    fn default_specs_are_valid() {
        BehaviorSpecs::default().validate().unwrap();
        let mut bad = BehaviorSpecs::default();
        bad.aggressive.soft.insert("hardBraking".into(), 1.0);
        assert!(bad.validate().is_err());
    }

    #[test]
    fn staged_specs_apply_at_boundary() {
        let mut t = SpecTable::new(BehaviorSpecs::default());
        let mut next = BehaviorSpecs::default();
        next.aggressive.threshold = 1.0;
        t.stage(next).unwrap();
        assert_eq!(t.active().aggressive.threshold, 3.0);
        t.at_boundary();
        assert_eq!(t.active().aggressive.threshold, 1.0);
    }
}
