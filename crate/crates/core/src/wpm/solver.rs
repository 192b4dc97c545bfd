use super::formula::CnfFormula;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Sat,
    UnsatHard,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Indexed by variable; index 0 is unused. Empty when `UnsatHard`.
    pub assignment: Vec<bool>,
    pub violated_soft_weight: f64,
    /// Clause indices substantiating the answer: every hard clause plus the
    /// satisfied soft clauses.
    pub core: Vec<usize>,
}

impl SolveResult {
    pub fn is_sat(&self) -> bool {
        self.status == SolveStatus::Sat
    }

    pub fn value(&self, var: usize) -> Option<bool> {
        self.assignment.get(var).copied()
    }
}

const UNSET: i8 = -1;

struct Search<'a> {
    f: &'a CnfFormula,
    vals: Vec<i8>,
    order: Vec<usize>,
    best: Option<(f64, Vec<i8>)>,
}

impl Search<'_> {
    fn lit_val(&self, dimacs: i32) -> i8 {
        let v = self.vals[dimacs.unsigned_abs() as usize];
        match (v, dimacs > 0) {
            (UNSET, _) => UNSET,
            (x, true) => x,
            (x, false) => 1 - x,
        }
    }

    /// Unit propagation over hard clauses. Returns false on conflict; pushes
    /// every assigned variable onto `trail`.
    fn propagate(&mut self, trail: &mut Vec<usize>) -> bool {
        loop {
            let mut changed = false;
            for c in self.f.clauses().iter().filter(|c| c.is_hard()) {
                let mut unset = None;
                let mut n_unset = 0;
                let mut sat = false;
                for l in &c.lits {
                    match self.lit_val(l.dimacs()) {
                        1 => {
                            sat = true;
                            break;
                        }
                        UNSET => {
                            n_unset += 1;
                            unset = Some(*l);
                        }
                        _ => {}
                    }
                }
                if sat {
                    continue;
                }
                match (n_unset, unset) {
                    (0, _) => return false,
                    (1, Some(l)) => {
                        self.vals[l.var()] = l.is_positive() as i8;
                        trail.push(l.var());
                        changed = true;
                    }
                    _ => {}
                }
            }
            if !changed {
                return true;
            }
        }
    }

    /// Weight of soft clauses already falsified by the partial assignment.
    fn lower_bound(&self) -> f64 {
        let mut w = 0.0;
        for c in self.f.clauses() {
            if let Some(cw) = c.weight {
                if c.lits.iter().all(|l| self.lit_val(l.dimacs()) == 0) {
                    w += cw;
                }
            }
        }
        w
    }

    /// Soft weight gained by setting `var` to `value` (clauses it satisfies).
    fn gain(&self, var: usize, value: bool) -> f64 {
        let mut w = 0.0;
        for c in self.f.clauses() {
            if let Some(cw) = c.weight {
                if c.lits.iter().any(|l| l.var() == var && l.is_positive() == value) {
                    w += cw;
                }
            }
        }
        w
    }

    fn run(&mut self) {
        let mut trail = Vec::new();
        if !self.propagate(&mut trail) {
            self.undo(&trail);
            return;
        }
        let lb = self.lower_bound();
        if self.best.as_ref().is_some_and(|(b, _)| lb >= *b) {
            self.undo(&trail);
            return;
        }
        match self.order.iter().copied().find(|&v| self.vals[v] == UNSET) {
            None => {
                let full: Vec<bool> = self.vals.iter().map(|&v| v == 1).collect();
                let cost = self.f.violated_weight(&full);
                if self.best.as_ref().is_none_or(|(b, _)| cost < *b) {
                    self.best = Some((cost, self.vals.clone()));
                }
            }
            Some(var) => {
                let first = self.gain(var, true) >= self.gain(var, false);
                for value in [first, !first] {
                    self.vals[var] = value as i8;
                    self.run();
                    self.vals[var] = UNSET;
                }
            }
        }
        self.undo(&trail);
    }

    fn undo(&mut self, trail: &[usize]) {
        for &v in trail {
            self.vals[v] = UNSET;
        }
    }
}

/// Weighted partial MaxSAT by branch and bound: satisfies every hard clause
/// and minimizes the total weight of violated soft clauses.
///
/// Variables that occur in no clause are set to false.
pub fn solve(f: &CnfFormula) -> Result<SolveResult> {
    if f.is_empty() {
        return Err(Error::EmptyFormula);
    }
    let n = f.num_vars();
    let mut occurrences = vec![0usize; n + 1];
    for c in f.clauses() {
        for l in &c.lits {
            occurrences[l.var()] += 1;
        }
    }
    let mut order: Vec<usize> = (1..=n).filter(|&v| occurrences[v] > 0).collect();
    order.sort_by(|a, b| occurrences[*b].cmp(&occurrences[*a]).then(a.cmp(b)));

    let mut vals = vec![UNSET; n + 1];
    vals[0] = 0;
    for v in 1..=n {
        if occurrences[v] == 0 {
            vals[v] = 0;
        }
    }
    let mut search = Search { f, vals, order, best: None };
    search.run();

    Ok(match search.best {
        None => SolveResult {
            status: SolveStatus::UnsatHard,
            assignment: Vec::new(),
            violated_soft_weight: 0.0,
            core: Vec::new(),
        },
        Some((cost, vals)) => {
            let assignment: Vec<bool> = vals.iter().map(|&v| v == 1).collect();
            let core = f
                .clauses()
                .iter()
                .enumerate()
                .filter(|(_, c)| c.is_hard() || c.satisfied(&assignment))
                .map(|(i, _)| i)
                .collect();
            SolveResult { status: SolveStatus::Sat, assignment, violated_soft_weight: cost, core }
        }
    })
}
