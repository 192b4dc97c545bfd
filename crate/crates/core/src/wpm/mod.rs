//! Weighted hard/soft recognition of behavior classes.
//!
//! A behavior is recognized in a window step when all its hard assertions
//! hold and the weight of its satisfied soft assertions strictly exceeds its
//! threshold. The check is posed as a weighted partial MaxSAT instance and
//! solved by branch and bound; the dependency graph and its transitive
//! closure select which rules matter for the currently active events.

mod formula;
mod graph;
mod solver;
mod spec;

pub use formula::{CnfFormula, Lit, WeightedClause};
pub use graph::{select_relevant_rules, DependencyGraph};
pub use solver::{solve, SolveResult, SolveStatus};
pub use spec::{
    classify, decide, encode, BehaviorSpec, BehaviorSpecs, Classification, Encoding, Snapshot,
    SpecOutcome, SpecTable,
};
