//! Run-time event calculus over integer time.
//!
//! Rules are written in an RTEC-like text format (see [`parse_program`]),
//! compiled into a stratified [`RuleSet`], and evaluated by a windowed
//! [`Engine`]. A fluent initiated at `T` holds from `T`; a termination at
//! `T` ends it at `T` (right-open intervals). A termination at the same
//! point as an initiation does not cancel it.

mod engine;
mod interval;
mod parser;
mod rule;
mod ruleset;

pub use engine::{sweep, Engine, EventInstance, ParamTable, WindowConfig, GLOBAL};
pub use interval::{Interval, IntervalSet, TimePoint};
pub use parser::parse_program;
pub use rule::{
    Atom, CmpOp, Comparison, Literal, Operand, RuleDef, RuleKind, RuleProgram, SymbolKind, Term,
};
pub use ruleset::RuleSet;
