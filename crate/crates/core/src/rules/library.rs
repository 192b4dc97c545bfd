use std::sync::{Arc, OnceLock};

use crate::ec::{parse_program, RuleProgram, RuleSet};
use crate::error::Result;

/// Micro-behavior fluents over detector primitives. These are evaluated by
/// the event-calculus engine.
pub const MICRO_RULES: &str = r"
% Primitive events and fluents produced by the detectors.
event(proximityLeft, proximityRight, proximityCleared, weaving, suddenSteer,
      changeLane1, changeLane2, laneChangeSettled).
fluent(atLane1, atLane2, laneDrifting, straddling, stopping).
scalar(speed, acceleration, deceleration).
param(os, slow, hbd, nbd).

fluent(overSpeed, slowSpeed, hardBraking, normalBraking, laneChange, proximity).

% Overspeeding needs a definite lane; one pair per lane.
inA(overSpeed(V)=true, T) :- hoA(speed(V,S),T), hoA(atLane1(V)=true,T),
    \+ hoA(atLane2(V)=true,T), th(os, S >= os).
tA(overSpeed(V)=true, T) :- hoA(speed(V,S),T), hoA(atLane1(V)=true,T), th(os, S < os).
inA(overSpeed(V)=true, T) :- hoA(speed(V,S),T), hoA(atLane2(V)=true,T),
    \+ hoA(atLane1(V)=true,T), th(os, S >= os).
tA(overSpeed(V)=true, T) :- hoA(speed(V,S),T), hoA(atLane2(V)=true,T), th(os, S < os).

inA(slowSpeed(V)=true, T) :- hoA(speed(V,S),T), th(slow, S =< slow).
tA(slowSpeed(V)=true, T) :- hoA(speed(V,S),T), th(slow, S > slow).

inA(hardBraking(V)=true, T) :- hoA(acceleration(V,A),T), th(hbd, A =< hbd).
tA(hardBraking(V)=true, T) :- hoA(acceleration(V,A),T), th(hbd, A > hbd).

inA(normalBraking(V)=true, T) :- hoA(acceleration(V,A),T), th(hbd, A > hbd), th(nbd, A =< nbd).
tA(normalBraking(V)=true, T) :- hoA(acceleration(V,A),T), th(nbd, A > nbd).
tA(normalBraking(V)=true, T) :- hoA(acceleration(V,A),T), th(hbd, A =< hbd).

inA(laneChange(V)=true, T) :- hA(changeLane1(V),T).
inA(laneChange(V)=true, T) :- hA(changeLane2(V),T).
tA(laneChange(V)=true, T) :- hA(laneChangeSettled(V),T).

inA(proximity(V)=true, T) :- hA(proximityLeft(V),T).
inA(proximity(V)=true, T) :- hA(proximityRight(V),T).
tA(proximity(V)=true, T) :- hA(proximityCleared(V),T).
";

/// Behavior-class definitions. The three classes refer to each other, so
/// this program is not stratifiable: it feeds the dependency graph, while
/// the weighted classifier decides recognition.
pub const BEHAVIOR_RULES: &str = r"
fluent(aggressiveDriving, distractedDriving, safeDriving).

inA(aggressiveDriving(V)=true, T) :- hoA(atLane1(V)=true,T), \+ hoA(atLane2(V)=true,T),
    hoA(hardBraking(V)=true,T), hoA(laneChange(V)=true,T), hoA(overSpeed(V)=true,T),
    hA(weaving(V),T), hA(suddenSteer(V),T), hoA(proximity(V)=true,T),
    \+ hoA(safeDriving(V)=true,T), \+ hoA(distractedDriving(V)=true,T).
inA(aggressiveDriving(V)=true, T) :- hoA(atLane2(V)=true,T), \+ hoA(atLane1(V)=true,T),
    hoA(hardBraking(V)=true,T), hoA(laneChange(V)=true,T), hoA(overSpeed(V)=true,T),
    hA(weaving(V),T), hA(suddenSteer(V),T), hoA(proximity(V)=true,T),
    \+ hoA(safeDriving(V)=true,T), \+ hoA(distractedDriving(V)=true,T).

inA(distractedDriving(V)=true, T) :- hoA(atLane1(V)=true,T), \+ hoA(atLane2(V)=true,T),
    hoA(laneDrifting(V)=true,T), hoA(straddling(V)=true,T), hoA(laneChange(V)=true,T),
    hoA(slowSpeed(V)=true,T), hoA(normalBraking(V)=true,T), \+ hoA(safeDriving(V)=true,T).
inA(distractedDriving(V)=true, T) :- hoA(atLane2(V)=true,T), \+ hoA(atLane1(V)=true,T),
    hoA(laneDrifting(V)=true,T), hoA(straddling(V)=true,T), hoA(laneChange(V)=true,T),
    hoA(slowSpeed(V)=true,T), hoA(normalBraking(V)=true,T), \+ hoA(safeDriving(V)=true,T).

inA(safeDriving(V)=true, T) :- \+ hoA(aggressiveDriving(V)=true,T),
    \+ hoA(distractedDriving(V)=true,T).
tA(safeDriving(V)=true, T) :- hoA(aggressiveDriving(V)=true,T).
tA(safeDriving(V)=true, T) :- hoA(distractedDriving(V)=true,T).
";

/// Compiled micro-behavior rules, shared by every engine instance.
pub fn micro_rule_set() -> Result<Arc<RuleSet>> {
    static CACHE: OnceLock<Arc<RuleSet>> = OnceLock::new();
    if let Some(rs) = CACHE.get() {
        return Ok(Arc::clone(rs));
    }
    let rs = Arc::new(RuleSet::parse(MICRO_RULES)?);
    Ok(Arc::clone(CACHE.get_or_init(|| rs)))
}

/// Micro-behavior rules followed by the behavior definitions, as one
/// program for dependency analysis.
pub fn full_program() -> Result<RuleProgram> {
    let mut program = parse_program(MICRO_RULES)?;
    program.extend(parse_program(BEHAVIOR_RULES)?);
    Ok(program)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ec::RuleKind;
    use crate::error::Error;

    #[test]
    fn micro_rules_compile() {
        let rs = micro_rule_set().unwrap();
        assert_eq!(rs.strata().len(), 6);
        assert!(rs.is_derived("overSpeed"));
        assert!(!rs.is_derived("atLane1"));
    }

    #[test]
    fn overspeed_pair_per_lane() {
        let rs = micro_rule_set().unwrap();
        let over: Vec<_> = rs.rules().iter().filter(|r| r.head.name == "overSpeed").collect();
        assert_eq!(over.iter().filter(|r| r.kind == RuleKind::Initiates).count(), 2);
        assert_eq!(over.iter().filter(|r| r.kind == RuleKind::Terminates).count(), 2);
    }

    #[test]
    fn behavior_definitions_are_cyclic() {
        let prog = full_program().unwrap();
        assert!(matches!(RuleSet::compile(prog), Err(Error::Unstratifiable(_))));
    }
}
