//! Text format for rules, mirroring RTEC syntax:
//!
//! ```text
//! event(hardBraking).  fluent(atLane1).  scalar(speed).  param(os).
//! initially(safeDriving(V)=true).
//! inA(overSpeed(V)=true, T) :- hoA(speed(V,S),T), hoA(atLane1(V)=true,T),
//!     not hoA(atLane2(V)=true,T), th(os, S >= os).
//! ```
//!
//! `%` starts a line comment. Negation may be written `not`, `\+` or `¬`.

use super::rule::*;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    LParen,
    RParen,
    Comma,
    Dot,
    Neck,
    Eq,
    Cmp(CmpOp),
    Not,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
}

impl<'a> Lexer<'a> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse { line: self.line, msg: msg.into() }
    }

    fn peek_byte(&self, off: usize) -> Option<u8> {
        self.src.get(self.pos + off).copied()
    }

    fn tokens(mut self) -> Result<Vec<(Tok, usize)>> {
        let mut out = Vec::new();
        while let Some(c) = self.peek_byte(0) {
            let line = self.line;
            match c {
                b'\n' => {
                    self.line += 1;
                    self.pos += 1;
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                b'%' => {
                    while self.peek_byte(0).is_some_and(|c| c != b'\n') {
                        self.pos += 1;
                    }
                }
                b'(' => {
                    out.push((Tok::LParen, line));
                    self.pos += 1;
                }
                b')' => {
                    out.push((Tok::RParen, line));
                    self.pos += 1;
                }
                b',' => {
                    out.push((Tok::Comma, line));
                    self.pos += 1;
                }
                b'.' => {
                    out.push((Tok::Dot, line));
                    self.pos += 1;
                }
                b':' if self.peek_byte(1) == Some(b'-') => {
                    out.push((Tok::Neck, line));
                    self.pos += 2;
                }
                b'\\' if self.peek_byte(1) == Some(b'+') => {
                    out.push((Tok::Not, line));
                    self.pos += 2;
                }
                0xC2 if self.peek_byte(1) == Some(0xAC) => {
                    out.push((Tok::Not, line));
                    self.pos += 2;
                }
                b'<' | b'>' | b'=' | b'!' => {
                    let (tok, len) = self.operator()?;
                    out.push((tok, line));
                    self.pos += len;
                }
                b'-' | b'0'..=b'9' => {
                    let start = self.pos;
                    self.pos += 1;
                    while self
                        .peek_byte(0)
                        .is_some_and(|c| c.is_ascii_digit() || c == b'e' || c == b'E')
                        || (self.peek_byte(0) == Some(b'.')
                            && self.peek_byte(1).is_some_and(|c| c.is_ascii_digit()))
                        || (self.peek_byte(0) == Some(b'-')
                            && matches!(self.src[self.pos - 1], b'e' | b'E'))
                    {
                        self.pos += 1;
                    }
                    let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                    let v: f64 = text.parse().map_err(|_| self.err(format!("bad number `{text}`")))?;
                    out.push((Tok::Num(v), line));
                }
                c if c.is_ascii_alphabetic() || c == b'_' => {
                    let start = self.pos;
                    while self.peek_byte(0).is_some_and(|c| c.is_ascii_alphanumeric() || c == b'_') {
                        self.pos += 1;
                    }
                    let word = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                    if word == "not" {
                        out.push((Tok::Not, line));
                    } else {
                        out.push((Tok::Ident(word.to_string()), line));
                    }
                }
                other => return Err(self.err(format!("unexpected character `{}`", other as char))),
            }
        }
        Ok(out)
    }

    fn operator(&self) -> Result<(Tok, usize)> {
        let rest = &self.src[self.pos..];
        let table: [(&[u8], Tok); 11] = [
            (b"=:=", Tok::Cmp(CmpOp::Eq)),
            (b"=\\=", Tok::Cmp(CmpOp::Ne)),
            (b">=", Tok::Cmp(CmpOp::Ge)),
            (b"=<", Tok::Cmp(CmpOp::Le)),
            (b"<=", Tok::Cmp(CmpOp::Le)),
            (b"==", Tok::Cmp(CmpOp::Eq)),
            (b"!=", Tok::Cmp(CmpOp::Ne)),
            (b"<", Tok::Cmp(CmpOp::Lt)),
            (b">", Tok::Cmp(CmpOp::Gt)),
            (b"=", Tok::Eq),
            (b"!", Tok::Not),
        ];
        for (pat, tok) in table {
            if rest.starts_with(pat) {
                return Ok((tok, pat.len()));
            }
        }
        Err(self.err("bad operator"))
    }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

fn is_var(name: &str) -> bool {
    name.starts_with(|c: char| c.is_ascii_uppercase() || c == '_')
}

impl Parser {
    fn line(&self) -> usize {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map_or(1, |t| t.1)
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse { line: self.line(), msg: msg.into() }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn next(&mut self) -> Result<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.0.clone()).ok_or_else(|| self.err("unexpected end of input"))?;
        self.pos += 1;
        Ok(t)
    }

    fn expect(&mut self, want: Tok) -> Result<()> {
        let got = self.next()?;
        if got == want {
            Ok(())
        } else {
            self.pos -= 1;
            Err(self.err(format!("expected {want:?}, found {got:?}")))
        }
    }

    fn ident(&mut self) -> Result<String> {
        match self.next()? {
            Tok::Ident(s) => Ok(s),
            other => {
                self.pos -= 1;
                Err(self.err(format!("expected identifier, found {other:?}")))
            }
        }
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    /// `name`, `name(A)` or `name(A,B)`; returns the name and argument words.
    fn compound(&mut self) -> Result<(String, Vec<String>)> {
        let name = self.ident()?;
        let mut args = Vec::new();
        if self.eat(&Tok::LParen) {
            loop {
                args.push(self.ident()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::RParen)?;
        }
        Ok((name, args))
    }

    fn term(word: String) -> Term {
        if is_var(&word) {
            Term::Var(word)
        } else {
            Term::Const(word)
        }
    }

    fn atom_from(&self, name: String, mut args: Vec<String>, max: usize) -> Result<(Atom, Vec<String>)> {
        if args.len() > max {
            return Err(self.err(format!("`{name}` takes at most {max} arguments")));
        }
        let rest = if args.len() > 1 { args.split_off(1) } else { Vec::new() };
        let entity = args.pop().map(Self::term);
        Ok((Atom { name, entity }, rest))
    }

    /// `f(E)=true` or `f(E)` (value defaults to true).
    fn fluent_value(&mut self) -> Result<(Atom, bool)> {
        let (name, args) = self.compound()?;
        let (atom, _) = self.atom_from(name, args, 1)?;
        let value = if self.eat(&Tok::Eq) {
            match self.ident()?.as_str() {
                "true" => true,
                "false" => false,
                other => return Err(self.err(format!("fluent value must be true/false, got `{other}`"))),
            }
        } else {
            true
        };
        Ok((atom, value))
    }

    fn time_var(&mut self) -> Result<()> {
        self.expect(Tok::Comma)?;
        let t = self.ident()?;
        if !is_var(&t) {
            return Err(self.err("time argument must be a variable"));
        }
        Ok(())
    }

    fn operand(&mut self) -> Result<Operand> {
        match self.next()? {
            Tok::Num(v) => Ok(Operand::Num(v)),
            Tok::Ident(s) if is_var(&s) => Ok(Operand::Var(s)),
            Tok::Ident(s) => Ok(Operand::Param(s)),
            other => {
                self.pos -= 1;
                Err(self.err(format!("expected operand, found {other:?}")))
            }
        }
    }

    fn literal(&mut self) -> Result<Literal> {
        let negated = self.eat(&Tok::Not);
        let head = self.ident()?;
        self.expect(Tok::LParen)?;
        let lit = match head.as_str() {
            "hA" | "happensAt" => {
                if negated {
                    return Err(self.err("negated events are not supported"));
                }
                let (name, args) = self.compound()?;
                let (atom, _) = self.atom_from(name, args, 1)?;
                self.time_var()?;
                Literal::Happens(atom)
            }
            "hoA" | "holdsAt" => {
                let (name, args) = self.compound()?;
                if self.peek() == Some(&Tok::Eq) || args.len() <= 1 {
                    let (atom, _) = self.atom_from(name, args, 1)?;
                    let value = if self.eat(&Tok::Eq) {
                        match self.ident()?.as_str() {
                            "true" => true,
                            "false" => false,
                            v => return Err(self.err(format!("bad fluent value `{v}`"))),
                        }
                    } else {
                        true
                    };
                    self.time_var()?;
                    Literal::Holds { atom, value, negated }
                } else {
                    if negated {
                        return Err(self.err("scalar bindings cannot be negated"));
                    }
                    let (atom, rest) = self.atom_from(name, args, 2)?;
                    let var = rest.into_iter().next().unwrap();
                    if !is_var(&var) {
                        return Err(self.err("scalar value must be bound to a variable"));
                    }
                    self.time_var()?;
                    Literal::Scalar { atom, var }
                }
            }
            "th" => {
                if negated {
                    return Err(self.err("negate a threshold by flipping its comparison"));
                }
                let param = self.ident()?;
                self.expect(Tok::Comma)?;
                let lhs = self.operand()?;
                let op = match self.next()? {
                    Tok::Cmp(op) => op,
                    other => return Err(self.err(format!("expected comparison, found {other:?}"))),
                };
                let rhs = self.operand()?;
                Literal::Threshold { param, cmp: Comparison { lhs, op, rhs } }
            }
            other => return Err(self.err(format!("unknown body predicate `{other}`"))),
        };
        self.expect(Tok::RParen)?;
        Ok(lit)
    }

    fn clause(&mut self, prog: &mut RuleProgram) -> Result<()> {
        let head = self.ident()?;
        let kind = match head.as_str() {
            "event" => Some(SymbolKind::Event),
            "fluent" => Some(SymbolKind::Fluent),
            "input" => Some(SymbolKind::Fluent),
            "scalar" => Some(SymbolKind::Scalar),
            "param" => Some(SymbolKind::Param),
            _ => None,
        };
        self.expect(Tok::LParen)?;
        if let Some(kind) = kind {
            loop {
                let name = self.ident()?;
                prog.declare(&name, kind);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::RParen)?;
            return self.expect(Tok::Dot);
        }
        match head.as_str() {
            "initially" => {
                let (atom, value) = self.fluent_value()?;
                self.expect(Tok::RParen)?;
                if value {
                    prog.initially.push(atom);
                }
                self.expect(Tok::Dot)
            }
            "inA" | "initiatedAt" | "tA" | "terminatedAt" => {
                let kind = if head.starts_with('i') { RuleKind::Initiates } else { RuleKind::Terminates };
                let (atom, value) = self.fluent_value()?;
                self.time_var()?;
                self.expect(Tok::RParen)?;
                let mut body = Vec::new();
                if self.eat(&Tok::Neck) {
                    loop {
                        body.push(self.literal()?);
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                }
                self.expect(Tok::Dot)?;
                // f=false rules are the opposite rule on f=true.
                let kind = match (kind, value) {
                    (k, true) => k,
                    (RuleKind::Initiates, false) => RuleKind::Terminates,
                    (RuleKind::Terminates, false) => RuleKind::Initiates,
                };
                prog.rules.push(RuleDef { kind, head: atom, head_value: true, body });
                Ok(())
            }
            other => Err(self.err(format!("unknown clause `{other}`"))),
        }
    }
}

/// Parses rule text into a [`RuleProgram`]. No semantic checks are made here;
/// see [`super::RuleSet::compile`].
pub fn parse_program(src: &str) -> Result<RuleProgram> {
    let toks = Lexer { src: src.as_bytes(), pos: 0, line: 1 }.tokens()?;
    let mut p = Parser { toks, pos: 0 };
    let mut prog = RuleProgram::default();
    while p.peek().is_some() {
        p.clause(&mut prog)?;
    }
    Ok(prog)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_definition_style_rule() {
        let src = "
            % lane-1 half of the overspeed definition
            scalar(speed). fluent(atLane1, atLane2, overSpeed). param(os).
            inA(overSpeed(V)=true, T) :- hoA(speed(V,S),T), hoA(atLane1(V)=true,T),
                \\+ hoA(atLane2(V)=true,T), th(os, S >= os).
        ";
        let prog = parse_program(src).unwrap();
        assert_eq!(prog.rules.len(), 1);
        let r = &prog.rules[0];
        assert_eq!(r.kind, RuleKind::Initiates);
        assert_eq!(r.head.name, "overSpeed");
        assert_eq!(r.body.len(), 4);
        assert!(matches!(&r.body[0], Literal::Scalar { var, .. } if var == "S"));
        assert!(matches!(&r.body[2], Literal::Holds { negated: true, .. }));
        assert!(matches!(
            &r.body[3],
            Literal::Threshold { cmp: Comparison { op: CmpOp::Ge, .. }, .. }
        ));
    }

    #[test]
    fn negative_and_fractional_numbers() {
        let prog = parse_program(
            "scalar(acceleration). param(hbd). fluent(hb).
             inA(hb(V)=true,T) :- hoA(acceleration(V,A),T), th(hbd, A =< -8.5).",
        )
        .unwrap();
        match &prog.rules[0].body[1] {
            Literal::Threshold { cmp, .. } => assert_eq!(cmp.rhs, Operand::Num(-8.5)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn display_roundtrips() {
        let src = "event(e). fluent(f, g). scalar(s). param(p).
                   initially(g(V)=true).
                   inA(f(V)=true,T) :- hA(e(V),T), not hoA(g(V)=true,T), hoA(s(V,X),T), th(p, X > p).
                   tA(f(V)=true,T) :- hoA(s(V,X),T), th(p, X =< 2.5).";
        let prog = parse_program(src).unwrap();
        let again = parse_program(&prog.to_string()).unwrap();
        assert_eq!(prog, again);
    }

    #[test]
    fn false_head_flips_rule_kind() {
        let prog = parse_program("event(e). fluent(f). inA(f=false, T) :- hA(e, T).").unwrap();
        assert_eq!(prog.rules[0].kind, RuleKind::Terminates);
        assert_eq!(prog.rules[0].head.entity, None);
    }

    #[test]
    fn reports_line_of_error() {
        let err = parse_program("event(e).\n\ninA(f(V)=maybe, T).").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }
}
