use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::interval::{Interval, IntervalSet, TimePoint};
use super::rule::*;
use super::ruleset::RuleSet;
use crate::error::{Error, Result};

/// Named numeric parameters read by `th(...)` literals.
pub type ParamTable = BTreeMap<String, f64>;

/// Global facts (zero-argument atoms) are stored under this entity.
pub const GLOBAL: &str = "";

type Key = (String, String);

/// `hA(name(entity), t)`, optionally carrying a value.
#[derive(Debug, Clone, PartialEq)]
pub struct EventInstance {
    pub name: String,
    pub entity: String,
    pub t: TimePoint,
    pub value: Option<f64>,
}

impl EventInstance {
    pub fn new(name: &str, entity: &str, t: TimePoint) -> Self {
        EventInstance { name: name.to_string(), entity: entity.to_string(), t, value: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowConfig {
    pub window_len: u64,
    pub step: u64,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig { window_len: 900, step: 450 }
    }
}

impl WindowConfig {
    pub fn validate(&self) -> Result<()> {
        if self.step == 0 || self.step > self.window_len {
            return Err(Error::config(format!(
                "window step must be in 1..={}, got {}",
                self.window_len, self.step
            )));
        }
        Ok(())
    }
}

/// Windowed event-calculus evaluator.
///
/// Facts are keyed by `(name, entity)`, so one engine can serve many
/// vehicles; rules with a variable head are evaluated once per known entity.
/// Intervals are right-open and clipped to the current window.
#[derive(Debug, Clone)]
pub struct Engine {
    rules: Arc<RuleSet>,
    params: ParamTable,
    staged: Option<ParamTable>,
    window: WindowConfig,
    start: TimePoint,
    entities: BTreeSet<String>,
    events: BTreeMap<Key, BTreeSet<TimePoint>>,
    inputs: BTreeMap<Key, IntervalSet>,
    scalars: BTreeMap<Key, BTreeMap<TimePoint, f64>>,
    /// Derived fluent value at `start - 1`; missing keys fall back to `initially`.
    carry: BTreeMap<Key, bool>,
    derived: BTreeMap<Key, IntervalSet>,
    /// Keys computed by the last evaluation, including those that hold nowhere.
    evaluated: BTreeSet<Key>,
    dirty: bool,
}

impl Engine {
    pub fn new(rules: Arc<RuleSet>, params: ParamTable, window: WindowConfig) -> Result<Self> {
        window.validate()?;
        check_params(&rules, &params)?;
        Ok(Engine {
            rules,
            params,
            staged: None,
            window,
            start: 0,
            entities: BTreeSet::new(),
            events: BTreeMap::new(),
            inputs: BTreeMap::new(),
            scalars: BTreeMap::new(),
            carry: BTreeMap::new(),
            derived: BTreeMap::new(),
            evaluated: BTreeSet::new(),
            dirty: true,
        })
    }

    pub fn rules(&self) -> &RuleSet {
        &self.rules
    }

    pub fn params(&self) -> &ParamTable {
        &self.params
    }

    pub fn window_config(&self) -> WindowConfig {
        self.window
    }

    /// Current window `[start, start + window_len)`.
    pub fn window(&self) -> Interval {
        Interval::new(self.start, self.start + self.window.window_len)
    }

    pub fn entities(&self) -> impl Iterator<Item = &str> {
        self.entities.iter().map(String::as_str)
    }

    /// Makes an entity known even before any fact mentions it, so that
    /// `initially` declarations and negation-only rules apply to it.
    pub fn register_entity(&mut self, entity: &str) {
        if self.entities.insert(entity.to_string()) {
            self.dirty = true;
        }
    }

    fn check_time(&self, name: &str, t: TimePoint) -> Result<()> {
        let w = self.window();
        if t < w.start {
            return Err(Error::StaleEvent { name: name.to_string(), t, window_start: w.start });
        }
        if t >= w.end {
            return Err(Error::OutOfWindow { t, start: w.start, end: w.end });
        }
        Ok(())
    }

    fn expect_kind(&self, name: &str, kind: SymbolKind) -> Result<()> {
        match self.rules.kind_of(name) {
            Some(k) if k == kind => Ok(()),
            Some(k) => Err(Error::InvalidRule(format!("`{name}` is declared {k:?}, not {kind:?}"))),
            None => Err(Error::Undeclared(name.to_string())),
        }
    }

    /// `hA(e, t)`. Duplicate assertions are idempotent.
    pub fn assert_happens_at(&mut self, e: &EventInstance) -> Result<()> {
        self.expect_kind(&e.name, SymbolKind::Event)?;
        self.check_time(&e.name, e.t)?;
        self.register_entity(&e.entity);
        self.events.entry((e.name.clone(), e.entity.clone())).or_default().insert(e.t);
        self.dirty = true;
        Ok(())
    }

    /// `hF(fluent(entity)=true, intervals)` for an input fluent. Input is
    /// normalized; parts before the window start are dropped.
    pub fn assert_happens_for<I>(&mut self, fluent: &str, entity: &str, intervals: I) -> Result<()>
    where
        I: IntoIterator<Item = Interval>,
    {
        self.expect_kind(fluent, SymbolKind::Fluent)?;
        if self.rules.is_derived(fluent) {
            return Err(Error::InvalidRule(format!(
                "`{fluent}` is derived by rules and cannot be asserted"
            )));
        }
        let set = IntervalSet::from_intervals(intervals)
            .clip(Interval::new(self.start, TimePoint::MAX));
        if set.is_empty() {
            return Ok(());
        }
        self.register_entity(entity);
        let slot = self.inputs.entry((fluent.to_string(), entity.to_string())).or_default();
        *slot = slot.union(&set);
        self.dirty = true;
        Ok(())
    }

    /// Scalar sample: the value holds from `t` until the next sample.
    pub fn assert_scalar(&mut self, name: &str, entity: &str, t: TimePoint, value: f64) -> Result<()> {
        self.expect_kind(name, SymbolKind::Scalar)?;
        self.check_time(name, t)?;
        self.register_entity(entity);
        self.scalars.entry((name.to_string(), entity.to_string())).or_default().insert(t, value);
        self.dirty = true;
        Ok(())
    }

    /// Stages a new parameter table; it takes effect at the next window
    /// boundary, so every evaluation sees one consistent table.
    pub fn stage_params(&mut self, params: ParamTable) -> Result<()> {
        check_params(&self.rules, &params)?;
        self.staged = Some(params);
        Ok(())
    }

    /// Recomputes every derived fluent over the current window, stratum by
    /// stratum.
    pub fn evaluate(&mut self) {
        let bounds = self.window();
        self.derived.clear();
        self.evaluated.clear();
        let rules = Arc::clone(&self.rules);
        for fluent in rules.strata() {
            let (inits, terms) = rules.rules_for(fluent);
            for entity in self.head_entities(&rules, inits, terms) {
                let init = self.points_for(&rules, inits, &entity, bounds);
                let term = self.points_for(&rules, terms, &entity, bounds);
                let key = (fluent.clone(), entity);
                let prev = match self.carry.get(&key) {
                    Some(&held) => held,
                    None => rules.initially(&key.0, &key.1),
                };
                let held = sweep(prev, &init, &term, bounds);
                self.evaluated.insert(key.clone());
                if !held.is_empty() {
                    self.derived.insert(key, held);
                }
            }
        }
        self.dirty = false;
    }

    fn head_entities(&self, rules: &RuleSet, inits: &[usize], terms: &[usize]) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for &i in inits.iter().chain(terms) {
            match &rules.rules()[i].head.entity {
                Some(Term::Var(_)) => out.extend(self.entities.iter().cloned()),
                Some(Term::Const(c)) => {
                    out.insert(c.clone());
                }
                None => {
                    out.insert(GLOBAL.to_string());
                }
            }
        }
        out
    }

    fn points_for(&self, rules: &RuleSet, idx: &[usize], entity: &str, bounds: Interval) -> IntervalSet {
        let mut acc = IntervalSet::new();
        for &i in idx {
            let rule = &rules.rules()[i];
            if let Some(Term::Const(c)) = &rule.head.entity {
                if c != entity {
                    continue;
                }
            }
            acc = acc.union(&self.body_points(rule, entity, bounds));
        }
        acc
    }

    fn resolve<'a>(&self, atom: &'a Atom, entity: &'a str) -> Key {
        let e = match &atom.entity {
            Some(Term::Var(_)) => entity,
            Some(Term::Const(c)) => c.as_str(),
            None => GLOBAL,
        };
        (atom.name.clone(), e.to_string())
    }

    /// Set of time points in `bounds` at which the rule body holds.
    pub(crate) fn body_points(&self, rule: &RuleDef, entity: &str, bounds: Interval) -> IntervalSet {
        let mut acc = IntervalSet::single(bounds);
        let mut scalar_lits = Vec::new();
        let mut thresholds = Vec::new();
        for lit in &rule.body {
            let part = match lit {
                Literal::Happens(atom) => {
                    let key = self.resolve(atom, entity);
                    match self.events.get(&key) {
                        Some(ts) => IntervalSet::from_points(ts.range(bounds.start..bounds.end).copied()),
                        None => IntervalSet::new(),
                    }
                }
                Literal::Holds { atom, value, negated } => {
                    let key = self.resolve(atom, entity);
                    let held = self.fluent_set(&key).clip(bounds);
                    if *value != *negated {
                        held
                    } else {
                        held.complement_within(bounds)
                    }
                }
                Literal::Scalar { atom, var } => {
                    scalar_lits.push((self.resolve(atom, entity), var.as_str()));
                    continue;
                }
                Literal::Threshold { cmp, .. } => {
                    thresholds.push(cmp);
                    continue;
                }
            };
            acc = acc.intersect(&part);
            if acc.is_empty() {
                return acc;
            }
        }
        if !scalar_lits.is_empty() || !thresholds.is_empty() {
            acc = acc.intersect(&self.scalar_points(&scalar_lits, &thresholds, bounds));
        }
        acc
    }

    /// Joint piecewise-constant segments of all bound scalars, filtered by the
    /// thresholds. A scalar with no sample yet is unbound and the body fails.
    fn scalar_points(&self, bound: &[(Key, &str)], thresholds: &[&Comparison], bounds: Interval) -> IntervalSet {
        let series: Vec<Option<&BTreeMap<TimePoint, f64>>> =
            bound.iter().map(|(k, _)| self.scalars.get(k)).collect();
        let mut cuts = BTreeSet::from([bounds.start]);
        for s in series.iter().flatten() {
            cuts.extend(s.range(bounds.start + 1..bounds.end).map(|(t, _)| *t));
        }
        let cuts: Vec<TimePoint> = cuts.into_iter().collect();
        let mut out = Vec::new();
        let mut env: Vec<(&str, f64)> = Vec::with_capacity(bound.len());
        for (k, &seg_start) in cuts.iter().enumerate() {
            let seg_end = cuts.get(k + 1).copied().unwrap_or(bounds.end);
            env.clear();
            let mut ok = true;
            for ((_, var), s) in bound.iter().zip(&series) {
                match s.and_then(|s| s.range(..=seg_start).next_back()) {
                    Some((_, &v)) => env.push((var, v)),
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok && thresholds.iter().all(|c| self.compare(c, &env)) {
                out.push(Interval::new(seg_start, seg_end));
            }
        }
        IntervalSet::from_intervals(out)
    }

    fn operand(&self, op: &Operand, env: &[(&str, f64)]) -> f64 {
        match op {
            Operand::Num(x) => *x,
            Operand::Param(p) => self.params[p],
            Operand::Var(v) => env.iter().find(|(n, _)| n == v).map(|(_, x)| *x).unwrap_or(f64::NAN),
        }
    }

    fn compare(&self, cmp: &Comparison, env: &[(&str, f64)]) -> bool {
        cmp.op.eval(self.operand(&cmp.lhs, env), self.operand(&cmp.rhs, env))
    }

    fn fluent_set(&self, key: &Key) -> IntervalSet {
        self.derived
            .get(key)
            .or_else(|| self.inputs.get(key))
            .cloned()
            .unwrap_or_default()
    }

    /// `hoF(fluent(entity)=value, I)` within the current window.
    pub fn holds_for(&self, fluent: &str, entity: &str, value: bool) -> Result<IntervalSet> {
        self.expect_kind(fluent, SymbolKind::Fluent)?;
        let w = self.window();
        let held = self.fluent_set(&(fluent.to_string(), entity.to_string())).clip(w);
        Ok(if value { held } else { held.complement_within(w) })
    }

    /// `hoA(fluent(entity)=value, t)`.
    pub fn holds_at(&self, fluent: &str, entity: &str, value: bool, t: TimePoint) -> Result<bool> {
        self.expect_kind(fluent, SymbolKind::Fluent)?;
        let w = self.window();
        if !w.contains(t) {
            return Err(Error::OutOfWindow { t, start: w.start, end: w.end });
        }
        Ok(self.fluent_set(&(fluent.to_string(), entity.to_string())).contains(t) == value)
    }

    /// Whether the event occurred anywhere in `range`.
    pub fn happened_in(&self, event: &str, entity: &str, range: Interval) -> bool {
        self.events
            .get(&(event.to_string(), entity.to_string()))
            .is_some_and(|ts| ts.range(range.start..range.end).next().is_some())
    }

    /// Every derived fluent interval of the current window.
    pub fn derived(&self) -> impl Iterator<Item = (&str, &str, &IntervalSet)> {
        self.derived.iter().map(|((f, e), s)| (f.as_str(), e.as_str(), s))
    }

    pub fn needs_evaluation(&self) -> bool {
        self.dirty
    }

    /// Slides the window by one step. Derived fluents holding just before the
    /// new start are carried over; events before it are discarded; staged
    /// parameters become active; then `new_events` are asserted.
    pub fn advance_window<I>(&mut self, new_events: I) -> Result<()>
    where
        I: IntoIterator<Item = EventInstance>,
    {
        if self.dirty {
            self.evaluate();
        }
        let new_start = self.start + self.window.step;
        let carry = self
            .evaluated
            .iter()
            .map(|key| {
                let held = self.derived.get(key).is_some_and(|s| s.contains(new_start - 1));
                (key.clone(), held)
            })
            .collect();
        self.carry = carry;
        self.start = new_start;

        for ts in self.events.values_mut() {
            *ts = ts.split_off(&new_start);
        }
        self.events.retain(|_, ts| !ts.is_empty());
        let keep = Interval::new(new_start, TimePoint::MAX);
        for set in self.inputs.values_mut() {
            *set = set.clip(keep);
        }
        self.inputs.retain(|_, s| !s.is_empty());
        for series in self.scalars.values_mut() {
            let last_before = series.range(..new_start).next_back().map(|(_, v)| *v);
            *series = series.split_off(&new_start);
            if let Some(v) = last_before {
                series.entry(new_start).or_insert(v);
            }
        }
        if let Some(p) = self.staged.take() {
            self.params = p;
        }
        self.derived.clear();
        self.evaluated.clear();
        self.dirty = true;
        for e in new_events {
            self.assert_happens_at(&e)?;
        }
        Ok(())
    }
}

fn check_params(rules: &RuleSet, params: &ParamTable) -> Result<()> {
    for p in rules.params_used() {
        if !params.contains_key(&p) {
            return Err(Error::config(format!("no value for parameter `{p}`")));
        }
    }
    Ok(())
}

/// Maximal holding intervals from initiation and termination points:
/// `h(t) = init(t) or (h(t-1) and not term(t))`, with `h(start-1) = prev`.
pub fn sweep(prev: bool, init: &IntervalSet, term: &IntervalSet, bounds: Interval) -> IntervalSet {
    let ends = term.difference(init, bounds);
    let mut out = Vec::new();
    let mut open = prev.then_some(bounds.start);
    let mut t = bounds.start;
    loop {
        match open {
            Some(s) => match next_point(&ends, t) {
                Some(tau) if tau < bounds.end => {
                    out.push(Interval::new(s, tau));
                    open = None;
                    t = tau + 1;
                }
                _ => {
                    out.push(Interval::new(s, bounds.end));
                    break;
                }
            },
            None => match next_point(init, t) {
                Some(i) if i < bounds.end => {
                    open = Some(i);
                    t = i;
                }
                _ => break,
            },
        }
    }
    IntervalSet::from_intervals(out)
}

fn next_point(set: &IntervalSet, t: TimePoint) -> Option<TimePoint> {
    let spans = set.as_slice();
    let idx = spans.partition_point(|iv| iv.end <= t);
    spans.get(idx).map(|iv| iv.start.max(t))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn engine(src: &str, params: &[(&str, f64)], window: u64, step: u64) -> Engine {
        let rules = Arc::new(RuleSet::parse(src).unwrap());
        let params = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        Engine::new(rules, params, WindowConfig { window_len: window, step }).unwrap()
    }

    const OVERSPEED: &str = "
        scalar(speed). fluent(atLane1, atLane2, overSpeed). param(os).
        inA(overSpeed(V)=true, T) :- hoA(speed(V,S),T), hoA(atLane1(V)=true,T), not hoA(atLane2(V)=true,T), th(os, S >= os).
        tA(overSpeed(V)=true, T) :- hoA(speed(V,S),T), th(os, S < os).
    ";

    #[test]
    fn overspeed_interval_from_speed_crossings() {
        let mut e = engine(OVERSPEED, &[("os", 10.0)], 200, 100);
        e.assert_happens_for("atLane1", "v1", [Interval::new(0, 200)]).unwrap();
        e.assert_scalar("speed", "v1", 0, 5.0).unwrap();
        e.assert_scalar("speed", "v1", 10, 12.0).unwrap();
        e.assert_scalar("speed", "v1", 50, 8.0).unwrap();
        e.evaluate();
        assert_eq!(e.holds_for("overSpeed", "v1", true).unwrap().as_slice(), &[Interval::new(10, 50)]);
    }

    #[test]
    fn overspeed_needs_a_lane() {
        let mut e = engine(OVERSPEED, &[("os", 10.0)], 100, 50);
        e.assert_scalar("speed", "v1", 0, 12.0).unwrap();
        e.evaluate();
        assert!(e.holds_for("overSpeed", "v1", true).unwrap().is_empty());
    }

    #[test]
    fn happens_at_is_idempotent_and_windowed() {
        let mut e = engine("event(hardBraking). fluent(hb). inA(hb(V)=true,T) :- hA(hardBraking(V),T).", &[], 100, 50);
        let ev = EventInstance::new("hardBraking", "id6", 60);
        e.assert_happens_at(&ev).unwrap();
        e.assert_happens_at(&ev).unwrap();
        e.evaluate();
        assert!(e.holds_at("hb", "id6", true, 60).unwrap());
        assert!(!e.holds_at("hb", "id6", true, 59).unwrap());
        e.advance_window([]).unwrap();
        let err = e.assert_happens_at(&EventInstance::new("hardBraking", "id6", 10)).unwrap_err();
        assert!(matches!(err, Error::StaleEvent { t: 10, window_start: 50, .. }));
    }

    #[test]
    fn happens_for_input_and_right_open_queries() {
        let mut e = engine("fluent(laneDrifting).", &[], 400, 200);
        e.assert_happens_for("laneDrifting", "id3", [Interval::new(0, 60), Interval::new(210, 280)])
            .unwrap();
        assert!(e.holds_at("laneDrifting", "id3", true, 30).unwrap());
        assert!(!e.holds_at("laneDrifting", "id3", true, 100).unwrap());
        assert!(e.holds_at("laneDrifting", "id3", true, 59).unwrap());
        assert!(!e.holds_at("laneDrifting", "id3", true, 60).unwrap());
        e.assert_happens_for("laneDrifting", "id3", []).unwrap();
        assert!(matches!(e.holds_at("nope", "id3", true, 1), Err(Error::Undeclared(_))));
    }

    #[test]
    fn initially_holds_everywhere_without_terminations() {
        let mut e = engine(
            "event(x). fluent(f). initially(f(V)=true). tA(f(V)=true,T) :- hA(x(V),T).",
            &[],
            100,
            50,
        );
        e.register_entity("a");
        e.evaluate();
        assert_eq!(e.holds_for("f", "a", true).unwrap().as_slice(), &[Interval::new(0, 100)]);
    }

    #[test]
    fn interval_spanning_boundary_is_carried() {
        let mut e = engine("event(on, off). fluent(f). inA(f(V)=true,T) :- hA(on(V),T). tA(f(V)=true,T) :- hA(off(V),T).", &[], 100, 50);
        e.assert_happens_at(&EventInstance::new("on", "a", 20)).unwrap();
        e.evaluate();
        e.advance_window([EventInstance::new("off", "a", 120)]).unwrap();
        e.evaluate();
        assert!(e.holds_at("f", "a", true, 50).unwrap());
        assert_eq!(e.holds_for("f", "a", true).unwrap().as_slice(), &[Interval::new(50, 120)]);
    }

    #[test]
    fn all_events_expire() {
        let mut e = engine("event(on). fluent(f). inA(f(V)=true,T) :- hA(on(V),T).", &[], 10, 10);
        e.assert_happens_at(&EventInstance::new("on", "a", 3)).unwrap();
        e.advance_window([]).unwrap();
        assert!(!e.happened_in("on", "a", Interval::new(0, 100)));
    }

    #[test]
    fn parameters_swap_at_window_boundary() {
        let src = "scalar(s). fluent(hi). param(p).
                   inA(hi(V)=true,T) :- hoA(s(V,X),T), th(p, X > p).
                   tA(hi(V)=true,T) :- hoA(s(V,X),T), th(p, X =< p).";
        let mut e = engine(src, &[("p", 10.0)], 100, 100);
        e.assert_scalar("s", "a", 0, 15.0).unwrap();
        e.stage_params([("p".to_string(), 20.0)].into()).unwrap();
        e.evaluate();
        assert!(e.holds_at("hi", "a", true, 99).unwrap());
        e.advance_window([]).unwrap();
        e.evaluate();
        assert!(!e.holds_at("hi", "a", true, 100).unwrap());
    }

    #[test]
    fn sweep_ignores_termination_at_initiation_point() {
        let b = Interval::new(0, 20);
        let init = IntervalSet::from_points([5, 12]);
        let term = IntervalSet::from_points([5, 9, 12]);
        let s = sweep(false, &init, &term, b);
        assert_eq!(s.as_slice(), &[Interval::new(5, 9), Interval::new(12, 20)]);
        assert_eq!(sweep(true, &IntervalSet::new(), &IntervalSet::from_points([0]), b), IntervalSet::new());
    }
}
