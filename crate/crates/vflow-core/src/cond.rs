//! Guard atoms and boolean conditions.
//!
//! Guards on value-flow edges are conjunctions of *atoms*; path conditions
//! and property state conditions combine atoms with the usual boolean
//! connectives. Atoms are deliberately restricted to three linear shapes
//! over bounded integers so that satisfiability stays decidable by
//! enumeration and variable elimination stays exact:
//!
//! - `var CMP constant`
//! - `var CMP var`
//! - `var + var CMP constant`

use alloc::borrow::ToOwned;
use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Comparison operator of an atom.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Cmp {
    Lt,
    Le,
    Eq,
    Ne,
    Ge,
    Gt,
}

impl Cmp {
    pub fn eval(self, lhs: i64, rhs: i64) -> bool {
        match self {
            Cmp::Lt => lhs < rhs,
            Cmp::Le => lhs <= rhs,
            Cmp::Eq => lhs == rhs,
            Cmp::Ne => lhs != rhs,
            Cmp::Ge => lhs >= rhs,
            Cmp::Gt => lhs > rhs,
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            Cmp::Lt => "<",
            Cmp::Le => "<=",
            Cmp::Eq => "==",
            Cmp::Ne => "!=",
            Cmp::Ge => ">=",
            Cmp::Gt => ">",
        }
    }
}

/// A single linear comparison over program variables.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Atom {
    /// `var CMP k`
    VarConst { var: String, cmp: Cmp, k: i64 },
    /// `lhs CMP rhs`
    VarVar { lhs: String, cmp: Cmp, rhs: String },
    /// `a + b CMP k`
    SumConst { a: String, b: String, cmp: Cmp, k: i64 },
}

impl Atom {
    pub fn var_const(var: &str, cmp: Cmp, k: i64) -> Atom {
        Atom::VarConst { var: var.to_owned(), cmp, k }
    }

    pub fn var_var(lhs: &str, cmp: Cmp, rhs: &str) -> Atom {
        Atom::VarVar { lhs: lhs.to_owned(), cmp, rhs: rhs.to_owned() }
    }

    pub fn sum_const(a: &str, b: &str, cmp: Cmp, k: i64) -> Atom {
        Atom::SumConst { a: a.to_owned(), b: b.to_owned(), cmp, k }
    }

    /// Variables mentioned by the atom, in sorted order.
    pub fn vars(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        match self {
            Atom::VarConst { var, .. } => {
                out.insert(var.as_str());
            }
            Atom::VarVar { lhs, rhs, .. } => {
                out.insert(lhs.as_str());
                out.insert(rhs.as_str());
            }
            Atom::SumConst { a, b, .. } => {
                out.insert(a.as_str());
                out.insert(b.as_str());
            }
        }
        out
    }

    /// Evaluate under a complete assignment. Panics if a variable is
    /// missing; callers enumerate over the full variable set.
    pub fn eval(&self, env: &BTreeMap<&str, i64>) -> bool {
        match self {
            Atom::VarConst { var, cmp, k } => cmp.eval(env[var.as_str()], *k),
            Atom::VarVar { lhs, cmp, rhs } => cmp.eval(env[lhs.as_str()], env[rhs.as_str()]),
            Atom::SumConst { a, b, cmp, k } => cmp.eval(env[a.as_str()] + env[b.as_str()], *k),
        }
    }

    /// Evaluate under a partial assignment; `None` when some mentioned
    /// variable is unassigned.
    pub fn eval_partial(&self, env: &BTreeMap<&str, i64>) -> Option<bool> {
        let get = |v: &str| env.get(v).copied();
        match self {
            Atom::VarConst { var, cmp, k } => Some(cmp.eval(get(var)?, *k)),
            Atom::VarVar { lhs, cmp, rhs } => Some(cmp.eval(get(lhs)?, get(rhs)?)),
            Atom::SumConst { a, b, cmp, k } => Some(cmp.eval(get(a)? + get(b)?, *k)),
        }
    }

    /// Rename every occurrence of variable `from` to `to`.
    pub fn rename_var(&self, from: &str, to: &str) -> Atom {
        let sub = |v: &String| if v == from { to.to_owned() } else { v.clone() };
        match self {
            Atom::VarConst { var, cmp, k } => Atom::VarConst { var: sub(var), cmp: *cmp, k: *k },
            Atom::VarVar { lhs, cmp, rhs } => {
                Atom::VarVar { lhs: sub(lhs), cmp: *cmp, rhs: sub(rhs) }
            }
            Atom::SumConst { a, b, cmp, k } => {
                Atom::SumConst { a: sub(a), b: sub(b), cmp: *cmp, k: *k }
            }
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::VarConst { var, cmp, k } => write!(f, "{} {} {}", var, cmp.token(), k),
            Atom::VarVar { lhs, cmp, rhs } => write!(f, "{} {} {}", lhs, cmp.token(), rhs),
            Atom::SumConst { a, b, cmp, k } => write!(f, "{} + {} {} {}", a, b, cmp.token(), k),
        }
    }
}

/// Boolean combination of atoms. `True`/`False` exist so that empty
/// conjunctions and empty disjunctions have a direct spelling.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Condition {
    True,
    False,
    Atom(Atom),
    And(Box<Condition>, Box<Condition>),
    Or(Box<Condition>, Box<Condition>),
    Not(Box<Condition>),
}

impl Condition {
    /// Right-nested conjunction of `parts`; `True` when empty.
    pub fn conj<I: IntoIterator<Item = Condition>>(parts: I) -> Condition {
        let mut items: Vec<Condition> = parts.into_iter().collect();
        let Some(mut acc) = items.pop() else { return Condition::True };
        while let Some(c) = items.pop() {
            acc = Condition::And(Box::new(c), Box::new(acc));
        }
        acc
    }

    /// Right-nested disjunction of `parts`; `False` when empty.
    pub fn disj<I: IntoIterator<Item = Condition>>(parts: I) -> Condition {
        let mut items: Vec<Condition> = parts.into_iter().collect();
        let Some(mut acc) = items.pop() else { return Condition::False };
        while let Some(c) = items.pop() {
            acc = Condition::Or(Box::new(c), Box::new(acc));
        }
        acc
    }

    pub fn conj_atoms<'a, I: IntoIterator<Item = &'a Atom>>(atoms: I) -> Condition {
        Condition::conj(atoms.into_iter().cloned().map(Condition::Atom))
    }

    pub fn and(self, other: Condition) -> Condition {
        match (self, other) {
            (Condition::True, c) | (c, Condition::True) => c,
            (a, b) => Condition::And(Box::new(a), Box::new(b)),
        }
    }

    pub fn negate(self) -> Condition {
        Condition::Not(Box::new(self))
    }

    pub fn vars(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            Condition::True | Condition::False => {}
            Condition::Atom(a) => out.extend(a.vars()),
            Condition::And(a, b) | Condition::Or(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Condition::Not(a) => a.collect_vars(out),
        }
    }

    pub fn eval(&self, env: &BTreeMap<&str, i64>) -> bool {
        match self {
            Condition::True => true,
            Condition::False => false,
            Condition::Atom(a) => a.eval(env),
            Condition::And(a, b) => a.eval(env) && b.eval(env),
            Condition::Or(a, b) => a.eval(env) || b.eval(env),
            Condition::Not(a) => !a.eval(env),
        }
    }

    /// Three-valued evaluation under a partial assignment. Short-circuits:
    /// a conjunction with one `false` arm is `false` even if the other arm
    /// is still unknown, which is what lets the solver prune early.
    pub fn eval_partial(&self, env: &BTreeMap<&str, i64>) -> Option<bool> {
        match self {
            Condition::True => Some(true),
            Condition::False => Some(false),
            Condition::Atom(a) => a.eval_partial(env),
            Condition::And(a, b) => match (a.eval_partial(env), b.eval_partial(env)) {
                (Some(false), _) | (_, Some(false)) => Some(false),
                (Some(true), Some(true)) => Some(true),
                _ => None,
            },
            Condition::Or(a, b) => match (a.eval_partial(env), b.eval_partial(env)) {
                (Some(true), _) | (_, Some(true)) => Some(true),
                (Some(false), Some(false)) => Some(false),
                _ => None,
            },
            Condition::Not(a) => a.eval_partial(env).map(|v| !v),
        }
    }

    pub fn rename_var(&self, from: &str, to: &str) -> Condition {
        match self {
            Condition::True => Condition::True,
            Condition::False => Condition::False,
            Condition::Atom(a) => Condition::Atom(a.rename_var(from, to)),
            Condition::And(a, b) => Condition::And(
                Box::new(a.rename_var(from, to)),
                Box::new(b.rename_var(from, to)),
            ),
            Condition::Or(a, b) => Condition::Or(
                Box::new(a.rename_var(from, to)),
                Box::new(b.rename_var(from, to)),
            ),
            Condition::Not(a) => Condition::Not(Box::new(a.rename_var(from, to))),
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::True => write!(f, "true"),
            Condition::False => write!(f, "false"),
            Condition::Atom(a) => write!(f, "{}", a),
            Condition::And(a, b) => write!(f, "({} && {})", a, b),
            Condition::Or(a, b) => write!(f, "({} || {})", a, b),
            Condition::Not(a) => write!(f, "!({})", a),
        }
    }
}

/// Error from [`parse_atom`] / [`parse_atom_list`]: a human-readable
/// message plus the byte offset inside the given text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AtomParseError {
    pub message: String,
    pub offset: usize,
}

impl fmt::Display for AtomParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (at offset {})", self.message, self.offset)
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '#' || c == '.'
}

struct AtomLexer<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> AtomLexer<'a> {
    fn skip_ws(&mut self) {
        while self.text[self.pos..].starts_with(|c: char| c == ' ' || c == '\t') {
            self.pos += 1;
        }
    }

    fn error(&self, message: &str) -> AtomParseError {
        AtomParseError { message: message.to_owned(), offset: self.pos }
    }

    fn ident(&mut self) -> Result<&'a str, AtomParseError> {
        self.skip_ws();
        let rest = &self.text[self.pos..];
        let mut chars = rest.chars();
        match chars.next() {
            Some(c) if is_ident_start(c) => {}
            _ => return Err(self.error("expected a variable name")),
        }
        let len = rest.chars().take_while(|c| is_ident_char(*c)).map(char::len_utf8).sum();
        let name = &rest[..len];
        self.pos += len;
        Ok(name)
    }

    fn int(&mut self) -> Result<i64, AtomParseError> {
        self.skip_ws();
        let rest = &self.text[self.pos..];
        let mut len = 0;
        if rest.starts_with('-') {
            len = 1;
        }
        len += rest[len..].chars().take_while(char::is_ascii_digit).count();
        if len == 0 || (len == 1 && rest.starts_with('-')) {
            return Err(self.error("expected an integer"));
        }
        let value: i64 = rest[..len]
            .parse()
            .map_err(|_| self.error("integer out of range"))?;
        self.pos += len;
        Ok(value)
    }

    fn cmp(&mut self) -> Result<Cmp, AtomParseError> {
        self.skip_ws();
        let rest = &self.text[self.pos..];
        let (cmp, len) = if rest.starts_with("<=") {
            (Cmp::Le, 2)
        } else if rest.starts_with(">=") {
            (Cmp::Ge, 2)
        } else if rest.starts_with("==") {
            (Cmp::Eq, 2)
        } else if rest.starts_with("!=") {
            (Cmp::Ne, 2)
        } else if rest.starts_with('<') {
            (Cmp::Lt, 1)
        } else if rest.starts_with('>') {
            (Cmp::Gt, 1)
        } else {
            return Err(self.error("expected a comparison operator"));
        };
        self.pos += len;
        Ok(cmp)
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.text[self.pos..].chars().next()
    }
}

/// Parse a single atom, e.g. `x > 0`, `p == q`, `a + b <= 3`.
pub fn parse_atom(text: &str) -> Result<Atom, AtomParseError> {
    let mut lex = AtomLexer { text, pos: 0 };
    let atom = parse_atom_inner(&mut lex)?;
    if lex.peek().is_some() {
        return Err(lex.error("trailing input after atom"));
    }
    Ok(atom)
}

fn parse_atom_inner(lex: &mut AtomLexer<'_>) -> Result<Atom, AtomParseError> {
    let first = lex.ident()?.to_owned();
    if lex.peek() == Some('+') {
        lex.pos += 1;
        let second = lex.ident()?.to_owned();
        let cmp = lex.cmp()?;
        let k = lex.int()?;
        return Ok(Atom::SumConst { a: first, b: second, cmp, k });
    }
    let cmp = lex.cmp()?;
    match lex.peek() {
        Some(c) if is_ident_start(c) => {
            let rhs = lex.ident()?.to_owned();
            Ok(Atom::VarVar { lhs: first, cmp, rhs })
        }
        _ => {
            let k = lex.int()?;
            Ok(Atom::VarConst { var: first, cmp, k })
        }
    }
}

/// Parse a `;`-separated atom list (a guard conjunction). The empty list
/// is not accepted here; an absent guard is spelled by omitting the clause.
pub fn parse_atom_list(text: &str) -> Result<Vec<Atom>, AtomParseError> {
    let mut out = Vec::new();
    let mut lex = AtomLexer { text, pos: 0 };
    loop {
        let atom = parse_atom_inner(&mut lex)?;
        out.push(atom);
        match lex.peek() {
            None => return Ok(out),
            Some(';') => {
                lex.pos += 1;
            }
            Some(_) => return Err(lex.error("expected `;` between atoms")),
        }
    }
}

/// Render an atom list in the form accepted by [`parse_atom_list`].
pub fn format_atom_list(atoms: &[Atom]) -> String {
    let mut out = String::new();
    for (i, a) in atoms.iter().enumerate() {
        if i > 0 {
            out.push_str("; ");
        }
        out.push_str(&alloc::format!("{}", a));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atom_round_trip() {
        for text in ["x > 0", "x <= -5", "p == q", "a + b > 3", "v != 0"] {
            let atom = parse_atom(text).unwrap();
            assert_eq!(alloc::format!("{}", atom), text);
        }
    }

    #[test]
    fn atom_list_round_trip() {
        let atoms = parse_atom_list("x > 0; a + b <= 3; p != q").unwrap();
        assert_eq!(atoms.len(), 3);
        assert_eq!(format_atom_list(&atoms), "x > 0; a + b <= 3; p != q");
    }

    #[test]
    fn partial_eval_short_circuits() {
        let c = Condition::Atom(parse_atom("x > 0").unwrap())
            .and(Condition::Atom(parse_atom("y > 0").unwrap()));
        let mut env = BTreeMap::new();
        env.insert("x", -1i64);
        // y unassigned, but x > 0 is already false
        assert_eq!(c.eval_partial(&env), Some(false));
    }
}
