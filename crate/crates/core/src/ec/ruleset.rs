use std::collections::{BTreeMap, BTreeSet};

use super::rule::*;
use crate::error::{Error, Result};

/// A validated, stratified rule program ready for evaluation.
#[derive(Debug, Clone)]
pub struct RuleSet {
    program: RuleProgram,
    /// Derived fluents in evaluation order.
    strata: Vec<String>,
    by_head: BTreeMap<String, (Vec<usize>, Vec<usize>)>,
}

impl RuleSet {
    pub fn parse(src: &str) -> Result<Self> {
        Self::compile(super::parse_program(src)?)
    }

    /// Checks declarations and variable use, then orders derived fluents so
    /// that each is evaluated after every fluent its rules read.
    pub fn compile(mut program: RuleProgram) -> Result<Self> {
        for rule in &mut program.rules {
            normalize_scalars(rule, &program.symbols);
        }
        for rule in &program.rules {
            check_rule(rule, &program)?;
        }
        for a in &program.initially {
            if program.kind_of(&a.name) != Some(SymbolKind::Fluent) {
                return Err(Error::Undeclared(a.name.clone()));
            }
        }

        let derived = program.derived_fluents();
        let mut deps: BTreeMap<String, BTreeSet<String>> =
            derived.iter().map(|f| (f.clone(), BTreeSet::new())).collect();
        let mut by_head: BTreeMap<String, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
        for (i, rule) in program.rules.iter().enumerate() {
            let entry = by_head.entry(rule.head.name.clone()).or_default();
            match rule.kind {
                RuleKind::Initiates => entry.0.push(i),
                RuleKind::Terminates => entry.1.push(i),
            }
            for lit in &rule.body {
                if let Literal::Holds { atom, .. } = lit {
                    if derived.contains(&atom.name) {
                        deps.get_mut(&rule.head.name).unwrap().insert(atom.name.clone());
                    }
                }
            }
        }
        let strata = topo_order(&deps)?;
        Ok(RuleSet { program, strata, by_head })
    }

    pub fn program(&self) -> &RuleProgram {
        &self.program
    }

    pub fn rules(&self) -> &[RuleDef] {
        &self.program.rules
    }

    pub fn strata(&self) -> &[String] {
        &self.strata
    }

    pub fn kind_of(&self, name: &str) -> Option<SymbolKind> {
        self.program.kind_of(name)
    }

    pub fn is_derived(&self, name: &str) -> bool {
        self.by_head.contains_key(name)
    }

    pub(crate) fn rules_for(&self, head: &str) -> (&[usize], &[usize]) {
        self.by_head
            .get(head)
            .map_or((&[][..], &[][..]), |(i, t)| (i.as_slice(), t.as_slice()))
    }

    /// Params referenced by any threshold.
    pub fn params_used(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for r in &self.program.rules {
            for lit in &r.body {
                if let Literal::Threshold { param, cmp } = lit {
                    out.insert(param.clone());
                    for op in [&cmp.lhs, &cmp.rhs] {
                        if let Operand::Param(p) = op {
                            out.insert(p.clone());
                        }
                    }
                }
            }
        }
        out
    }

    pub(crate) fn initially(&self, fluent: &str, entity: &str) -> bool {
        self.program.initially.iter().any(|a| {
            a.name == fluent
                && match &a.entity {
                    None | Some(Term::Var(_)) => true,
                    Some(Term::Const(c)) => c == entity,
                }
        })
    }
}

/// `hoA(s(V),T)` on a declared scalar parses as a boolean read; rewrite it
/// as a zero-entity scalar binding of `V`.
fn normalize_scalars(rule: &mut RuleDef, symbols: &BTreeMap<String, SymbolKind>) {
    for lit in &mut rule.body {
        if let Literal::Holds { atom, value: true, negated: false } = lit {
            if symbols.get(&atom.name) == Some(&SymbolKind::Scalar) {
                if let Some(Term::Var(v)) = &atom.entity {
                    *lit = Literal::Scalar { atom: Atom::new(&atom.name, None), var: v.clone() };
                }
            }
        }
    }
}

fn check_rule(rule: &RuleDef, prog: &RuleProgram) -> Result<()> {
    let bad = |msg: String| Err(Error::InvalidRule(format!("{msg} in `{rule}`")));
    match prog.kind_of(&rule.head.name) {
        Some(SymbolKind::Fluent) => {}
        Some(_) => return bad(format!("head `{}` is not a fluent", rule.head.name)),
        None => return Err(Error::Undeclared(rule.head.name.clone())),
    }
    let head_var = match &rule.head.entity {
        Some(Term::Var(v)) => Some(v.as_str()),
        _ => None,
    };
    let mut scalar_vars = BTreeSet::new();
    for lit in &rule.body {
        let (name, want) = match lit {
            Literal::Happens(a) => (&a.name, SymbolKind::Event),
            Literal::Holds { atom, .. } => (&atom.name, SymbolKind::Fluent),
            Literal::Scalar { atom, var } => {
                if !scalar_vars.insert(var.as_str()) {
                    return bad(format!("variable {var} bound twice"));
                }
                if Some(var.as_str()) == head_var {
                    return bad(format!("variable {var} is both entity and value"));
                }
                (&atom.name, SymbolKind::Scalar)
            }
            Literal::Threshold { param, .. } => (param, SymbolKind::Param),
        };
        match prog.kind_of(name) {
            Some(k) if k == want => {}
            Some(k) => return bad(format!("`{name}` is declared {k:?}, used as {want:?}")),
            None => return Err(Error::Undeclared(name.clone())),
        }
        let entity = match lit {
            Literal::Happens(a) | Literal::Holds { atom: a, .. } | Literal::Scalar { atom: a, .. } => {
                a.entity.as_ref()
            }
            Literal::Threshold { .. } => None,
        };
        if let Some(Term::Var(v)) = entity {
            if Some(v.as_str()) != head_var {
                return bad(format!("entity variable {v} is not bound by the head"));
            }
        }
    }
    for lit in &rule.body {
        if let Literal::Threshold { cmp, .. } = lit {
            for op in [&cmp.lhs, &cmp.rhs] {
                match op {
                    Operand::Var(v) if !scalar_vars.contains(v.as_str()) => {
                        return bad(format!("variable {v} is not bound by a scalar"));
                    }
                    Operand::Param(p) if prog.kind_of(p) != Some(SymbolKind::Param) => {
                        return Err(Error::Undeclared(p.clone()));
                    }
                    _ => {}
                }
            }
        }
    }
    Ok(())
}

/// Kahn's algorithm over `node -> dependencies`; lexicographic among ready
/// nodes so the order is stable.
fn topo_order(deps: &BTreeMap<String, BTreeSet<String>>) -> Result<Vec<String>> {
    let mut pending: BTreeMap<&str, usize> =
        deps.iter().map(|(k, d)| (k.as_str(), d.len())).collect();
    let mut order = Vec::with_capacity(deps.len());
    let mut ready: BTreeSet<&str> =
        pending.iter().filter(|(_, &n)| n == 0).map(|(k, _)| *k).collect();
    while let Some(next) = ready.pop_first() {
        pending.remove(next);
        order.push(next.to_string());
        for (k, d) in deps {
            if d.contains(next) {
                let n = pending.get_mut(k.as_str()).unwrap();
                *n -= 1;
                if *n == 0 {
                    ready.insert(k);
                }
            }
        }
    }
    if !pending.is_empty() {
        let names: Vec<&str> = pending.keys().copied().collect();
        return Err(Error::Unstratifiable(names.join(", ")));
    }
    Ok(order)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strata_respect_dependencies() {
        let rs = RuleSet::parse(
            "event(e). fluent(a, b, c).
             inA(c(V)=true,T) :- hoA(b(V)=true,T).
             inA(b(V)=true,T) :- hoA(a(V)=true,T).
             inA(a(V)=true,T) :- hA(e(V),T).",
        )
        .unwrap();
        assert_eq!(rs.strata(), &["a", "b", "c"]);
    }

    #[test]
    fn cycle_is_rejected() {
        let err = RuleSet::parse(
            "fluent(a, b).
             inA(a(V)=true,T) :- not hoA(b(V)=true,T).
             inA(b(V)=true,T) :- not hoA(a(V)=true,T).",
        )
        .unwrap_err();
        assert!(matches!(err, Error::Unstratifiable(_)), "{err}");
    }

    #[test]
    fn undeclared_and_unbound_are_rejected() {
        assert!(matches!(
            RuleSet::parse("fluent(a). inA(a(V)=true,T) :- hA(e(V),T).").unwrap_err(),
            Error::Undeclared(n) if n == "e"
        ));
        assert!(matches!(
            RuleSet::parse("fluent(a). scalar(s). param(p). inA(a(V)=true,T) :- hoA(s(V,X),T), th(p, Y > p).")
                .unwrap_err(),
            Error::InvalidRule(_)
        ));
        assert!(matches!(
            RuleSet::parse("fluent(a). event(e). inA(a(V)=true,T) :- hA(e(W),T).").unwrap_err(),
            Error::InvalidRule(_)
        ));
    }

    #[test]
    fn scalar_without_entity_is_normalized() {
        let rs = RuleSet::parse(
            "fluent(a). scalar(s). param(p). inA(a=true,T) :- hoA(s(X),T), th(p, X > p).",
        )
        .unwrap();
        assert!(matches!(&rs.rules()[0].body[0], Literal::Scalar { var, atom } if var == "X" && atom.entity.is_none()));
    }
}
