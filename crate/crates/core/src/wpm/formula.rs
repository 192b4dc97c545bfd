use std::fmt::{self, Write as _};

use crate::error::{Error, Result};

/// Signed variable in DIMACS convention: `+v` is the variable, `-v` its
/// negation. Variables are numbered from 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(i32);

impl Lit {
    pub fn pos(var: usize) -> Self {
        assert!(var >= 1, "variables are numbered from 1");
        Lit(var as i32)
    }

    pub fn neg(var: usize) -> Self {
        -Lit::pos(var)
    }

    pub fn new(var: usize, positive: bool) -> Self {
        if positive {
            Lit::pos(var)
        } else {
            Lit::neg(var)
        }
    }

    pub fn from_dimacs(v: i32) -> Self {
        assert!(v != 0);
        Lit(v)
    }

    pub fn var(self) -> usize {
        self.0.unsigned_abs() as usize
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }

    pub fn dimacs(self) -> i32 {
        self.0
    }

    /// Truth of this literal under `assignment` (indexed by variable).
    pub fn eval(self, assignment: &[bool]) -> bool {
        assignment[self.var()] == self.is_positive()
    }
}

impl std::ops::Neg for Lit {
    type Output = Lit;

    fn neg(self) -> Lit {
        Lit(-self.0)
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A disjunction of literals. Hard clauses have no weight.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedClause {
    pub lits: Vec<Lit>,
    pub weight: Option<f64>,
}

impl WeightedClause {
    pub fn hard(lits: Vec<Lit>) -> Self {
        WeightedClause { lits, weight: None }
    }

    pub fn soft(lits: Vec<Lit>, weight: f64) -> Self {
        WeightedClause { lits, weight: Some(weight) }
    }

    pub fn is_hard(&self) -> bool {
        self.weight.is_none()
    }

    pub fn satisfied(&self, assignment: &[bool]) -> bool {
        self.lits.iter().any(|l| l.eval(assignment))
    }
}

/// Weighted partial CNF.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CnfFormula {
    num_vars: usize,
    clauses: Vec<WeightedClause>,
    names: Vec<Option<String>>,
}

impl CnfFormula {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_vars(n: usize) -> Self {
        CnfFormula { num_vars: n, clauses: Vec::new(), names: vec![None; n + 1] }
    }

    /// Allocates a fresh variable, optionally named.
    pub fn new_var(&mut self, name: Option<&str>) -> usize {
        self.num_vars += 1;
        self.names.resize(self.num_vars + 1, None);
        self.names[self.num_vars] = name.map(str::to_string);
        self.num_vars
    }

    pub fn var_name(&self, var: usize) -> Option<&str> {
        self.names.get(var).and_then(|n| n.as_deref())
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn clauses(&self) -> &[WeightedClause] {
        &self.clauses
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    fn reserve_lits(&mut self, lits: &[Lit]) {
        if let Some(m) = lits.iter().map(|l| l.var()).max() {
            if m > self.num_vars {
                self.num_vars = m;
                self.names.resize(m + 1, None);
            }
        }
    }

    pub fn add_hard(&mut self, lits: Vec<Lit>) {
        self.reserve_lits(&lits);
        self.clauses.push(WeightedClause::hard(lits));
    }

    /// Adds a soft clause. Weights must be positive and finite.
    pub fn add_soft(&mut self, lits: Vec<Lit>, weight: f64) -> Result<()> {
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::config(format!("soft weight must be positive, got {weight}")));
        }
        self.reserve_lits(&lits);
        self.clauses.push(WeightedClause::soft(lits, weight));
        Ok(())
    }

    pub fn total_soft_weight(&self) -> f64 {
        self.clauses.iter().filter_map(|c| c.weight).sum()
    }

    /// Whether every hard clause holds under `assignment` (index 0 unused).
    pub fn hard_satisfied(&self, assignment: &[bool]) -> bool {
        self.clauses.iter().filter(|c| c.is_hard()).all(|c| c.satisfied(assignment))
    }

    /// Sum of weights of violated soft clauses, in clause order.
    pub fn violated_weight(&self, assignment: &[bool]) -> f64 {
        let mut w = 0.0;
        for c in &self.clauses {
            if let Some(cw) = c.weight {
                if !c.satisfied(assignment) {
                    w += cw;
                }
            }
        }
        w
    }

    /// Top weight used to mark hard clauses in WCNF output.
    pub fn top_weight(&self) -> f64 {
        self.total_soft_weight().ceil() + 1.0
    }

    /// Weighted DIMACS: `p wcnf <vars> <clauses> <top>`, one clause per line,
    /// weight first, hard clauses carrying the top weight.
    pub fn to_wcnf(&self) -> String {
        let top = self.top_weight();
        let mut out = String::new();
        for (v, name) in self.names.iter().enumerate() {
            if let Some(n) = name {
                let _ = writeln!(out, "c var {v} {n}");
            }
        }
        let _ = writeln!(out, "p wcnf {} {} {}", self.num_vars, self.clauses.len(), top);
        for c in &self.clauses {
            let _ = write!(out, "{}", c.weight.unwrap_or(top));
            for l in &c.lits {
                let _ = write!(out, " {l}");
            }
            out.push_str(" 0\n");
        }
        out
    }

    /// Parses the format written by [`CnfFormula::to_wcnf`]. Clauses whose
    /// weight is at least the declared top are hard.
    pub fn from_wcnf(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: &str| Error::Parse { line, msg: msg.to_string() };
        let mut f = CnfFormula::new();
        let mut top = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let ln = i + 1;
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('c') {
                let parts: Vec<&str> = rest.split_whitespace().collect();
                if let ["var", v, name] = parts.as_slice() {
                    let v: usize = v.parse().map_err(|_| bad(ln, "bad variable index"))?;
                    if v > f.num_vars {
                        f.num_vars = v;
                        f.names.resize(v + 1, None);
                    }
                    f.names[v] = Some(name.to_string());
                }
                continue;
            }
            if let Some(rest) = line.strip_prefix('p') {
                let parts: Vec<&str> = rest.split_whitespace().collect();
                if parts.len() != 4 || parts[0] != "wcnf" {
                    return Err(bad(ln, "expected `p wcnf <vars> <clauses> <top>`"));
                }
                let n: usize = parts[1].parse().map_err(|_| bad(ln, "bad variable count"))?;
                if n > f.num_vars {
                    f.num_vars = n;
                    f.names.resize(n + 1, None);
                }
                top = Some(parts[3].parse::<f64>().map_err(|_| bad(ln, "bad top weight"))?);
                continue;
            }
            let top = top.ok_or_else(|| bad(ln, "clause before header"))?;
            let mut nums = line.split_whitespace();
            let w: f64 = nums
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad(ln, "bad clause weight"))?;
            let mut lits = Vec::new();
            for tok in nums {
                let v: i32 = tok.parse().map_err(|_| bad(ln, "bad literal"))?;
                if v == 0 {
                    break;
                }
                lits.push(Lit::from_dimacs(v));
            }
            if w >= top {
                f.add_hard(lits);
            } else {
                f.add_soft(lits, w).map_err(|_| bad(ln, "non-positive weight"))?;
            }
        }
        Ok(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wcnf_roundtrip() {
        let mut f = CnfFormula::new();
        let x = f.new_var(Some("hardBraking"));
        let y = f.new_var(None);
        f.add_hard(vec![Lit::pos(x)]);
        f.add_soft(vec![Lit::neg(x), Lit::pos(y)], 2.5).unwrap();
        let text = f.to_wcnf();
        assert!(text.contains("p wcnf 2 2 4"));
        assert_eq!(CnfFormula::from_wcnf(&text).unwrap(), f);
    }

    #[test]
    fn rejects_non_positive_weight() {
        let mut f = CnfFormula::new();
        assert!(f.add_soft(vec![Lit::pos(1)], 0.0).is_err());
        assert!(f.add_soft(vec![Lit::pos(1)], f64::NAN).is_err());
    }
}
