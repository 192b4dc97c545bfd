use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Argument in an atom: a variable (capitalised) or a constant entity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Const(String),
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) | Term::Const(v) => f.write_str(v),
        }
    }
}

/// `name(entity)`; zero-argument atoms refer to the global entity.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Atom {
    pub name: String,
    pub entity: Option<Term>,
}

impl Atom {
    pub fn new(name: &str, entity: Option<Term>) -> Self {
        Atom { name: name.to_string(), entity }
    }

    pub fn var(name: &str, var: &str) -> Self {
        Atom::new(name, Some(Term::Var(var.to_string())))
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.entity {
            Some(t) => write!(f, "{}({})", self.name, t),
            None => f.write_str(&self.name),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CmpOp {
    pub fn eval(self, a: f64, b: f64) -> bool {
        match self {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "=<",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "=:=",
            CmpOp::Ne => "=\\=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Operand {
    Var(String),
    Param(String),
    Num(f64),
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Var(v) | Operand::Param(v) => f.write_str(v),
            Operand::Num(x) => write!(f, "{x}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub lhs: Operand,
    pub op: CmpOp,
    pub rhs: Operand,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    /// `hA(event(E), T)`
    Happens(Atom),
    /// `hoA(fluent(E)=value, T)`, optionally negated.
    Holds { atom: Atom, value: bool, negated: bool },
    /// `hoA(scalar(E, S), T)` binds `S` to the scalar's value at `T`.
    Scalar { atom: Atom, var: String },
    /// `th(param, lhs op rhs)`
    Threshold { param: String, cmp: Comparison },
}

impl Literal {
    /// Name of the event or fluent this literal reads, if any.
    pub fn referenced(&self) -> Option<&str> {
        match self {
            Literal::Happens(a) | Literal::Holds { atom: a, .. } | Literal::Scalar { atom: a, .. } => {
                Some(&a.name)
            }
            Literal::Threshold { .. } => None,
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Happens(a) => write!(f, "hA({a},T)"),
            Literal::Holds { atom, value, negated } => {
                if *negated {
                    f.write_str("not ")?;
                }
                write!(f, "hoA({atom}={value},T)")
            }
            Literal::Scalar { atom, var } => match &atom.entity {
                Some(e) => write!(f, "hoA({}({},{}),T)", atom.name, e, var),
                None => write!(f, "hoA({}({}),T)", atom.name, var),
            },
            Literal::Threshold { param, cmp } => {
                write!(f, "th({}, {} {} {})", param, cmp.lhs, cmp.op.symbol(), cmp.rhs)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RuleKind {
    Initiates,
    Terminates,
}

/// One initiation (`inA`) or termination (`tA`) rule for a boolean fluent.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleDef {
    pub kind: RuleKind,
    pub head: Atom,
    pub head_value: bool,
    pub body: Vec<Literal>,
}

impl fmt::Display for RuleDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kw = match self.kind {
            RuleKind::Initiates => "inA",
            RuleKind::Terminates => "tA",
        };
        write!(f, "{kw}({}={}, T) :- ", self.head, self.head_value)?;
        for (i, l) in self.body.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{l}")?;
        }
        f.write_str(".")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SymbolKind {
    Event,
    Fluent,
    Scalar,
    Param,
}

/// Parsed rule text: declarations plus rules, not yet validated.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RuleProgram {
    pub symbols: BTreeMap<String, SymbolKind>,
    /// `initially(f(E)=true)` declarations.
    pub initially: Vec<Atom>,
    pub rules: Vec<RuleDef>,
}

impl RuleProgram {
    pub fn declare(&mut self, name: &str, kind: SymbolKind) {
        self.symbols.insert(name.to_string(), kind);
    }

    pub fn kind_of(&self, name: &str) -> Option<SymbolKind> {
        self.symbols.get(name).copied()
    }

    /// Fluents that appear as a rule head.
    pub fn derived_fluents(&self) -> BTreeSet<String> {
        self.rules.iter().map(|r| r.head.name.clone()).collect()
    }

    pub fn extend(&mut self, other: RuleProgram) {
        self.symbols.extend(other.symbols);
        self.initially.extend(other.initially);
        self.rules.extend(other.rules);
    }
}

impl fmt::Display for RuleProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, kind) in &self.symbols {
            let kw = match kind {
                SymbolKind::Event => "event",
                SymbolKind::Fluent => "fluent",
                SymbolKind::Scalar => "scalar",
                SymbolKind::Param => "param",
            };
            writeln!(f, "{kw}({name}).")?;
        }
        for a in &self.initially {
            writeln!(f, "initially({a}=true).")?;
        }
        for r in &self.rules {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}
