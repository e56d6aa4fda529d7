//! Property specifications: what counts as a source, what counts as a
//! sink, the state condition a witness must satisfy, and how witnesses
//! aggregate into a verdict.
//!
//! The `.prop` text format holds one `prop NAME { ... }` block per
//! property:
//!
//! ```text
//! prop null-deref {
//!   src: call malloc ret;
//!   sink: load operand, store address;
//!   psc: v == 0;
//!   agg: never;
//! }
//! ```
//!
//! `psc` is a template over the placeholder variable `v`; it is
//! instantiated by substituting the source vertex's variable, once per
//! source. Properties are numbered by file order, and that number is the
//! property's bit in every label and set throughout the analysis.

use alloc::borrow::ToOwned;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::cond::{parse_atom, Condition};
use crate::graph::{CallPos, LoadPos, StatementKind, StorePos, ValueFlowGraph, VertexId};

/// Vertex pattern of a source or sink clause.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Pattern {
    CallRet { callee: String },
    /// `index: None` is the `arg _` wildcard.
    CallArg { callee: String, index: Option<u32> },
    Load(LoadPos),
    Store(StorePos),
    Assign,
    Global,
}

impl Pattern {
    pub fn matches(&self, statement: &StatementKind) -> bool {
        match (self, statement) {
            (Pattern::CallRet { callee }, StatementKind::Call { callee: c, position: CallPos::Ret, .. }) => {
                callee == c
            }
            (
                Pattern::CallArg { callee, index },
                StatementKind::Call { callee: c, position: CallPos::Arg(k), .. },
            ) => callee == c && index.map_or(true, |i| i == *k),
            (Pattern::Load(p), StatementKind::Load(q)) => p == q,
            (Pattern::Store(p), StatementKind::Store(q)) => p == q,
            (Pattern::Assign, StatementKind::Assign) => true,
            (Pattern::Global, StatementKind::Global) => true,
            _ => false,
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pattern::CallRet { callee } => write!(f, "call {} ret", callee),
            Pattern::CallArg { callee, index: Some(k) } => write!(f, "call {} arg {}", callee, k),
            Pattern::CallArg { callee, index: None } => write!(f, "call {} arg _", callee),
            Pattern::Load(LoadPos::Result) => write!(f, "load result"),
            Pattern::Load(LoadPos::Operand) => write!(f, "load operand"),
            Pattern::Store(StorePos::Stored) => write!(f, "store stored"),
            Pattern::Store(StorePos::Address) => write!(f, "store address"),
            Pattern::Assign => write!(f, "assign"),
            Pattern::Global => write!(f, "global"),
        }
    }
}

/// How feasible witness paths of one property combine into bug verdicts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AggKind {
    /// Each feasible source-to-sink path is its own bug.
    Never,
    /// Two distinct feasible paths from one source, jointly feasible with
    /// the state condition, form a bug (double-free shape).
    NeverSim,
    /// A source where avoiding every sink is still possible is a bug
    /// (leak shape).
    Must,
}

impl AggKind {
    pub fn token(self) -> &'static str {
        match self {
            AggKind::Never => "never",
            AggKind::NeverSim => "never-sim",
            AggKind::Must => "must",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PropertySpec {
    pub name: String,
    pub src: Pattern,
    pub sinks: Vec<Pattern>,
    /// Template over the placeholder `v`; `Condition::True` when absent.
    pub psc: Condition,
    pub agg: AggKind,
    /// File-order index; also this property's bit position.
    pub bit: u32,
}

impl PropertySpec {
    pub fn source_vertices(&self, g: &ValueFlowGraph) -> Vec<VertexId> {
        g.vertices
            .iter()
            .filter(|v| self.src.matches(&v.statement))
            .map(|v| v.id)
            .collect()
    }

    pub fn sink_vertices(&self, g: &ValueFlowGraph) -> BTreeSet<VertexId> {
        g.vertices
            .iter()
            .filter(|v| self.sinks.iter().any(|p| p.matches(&v.statement)))
            .map(|v| v.id)
            .collect()
    }

    /// The state condition at a concrete source: `v` becomes the source
    /// vertex's variable.
    pub fn instantiate_psc(&self, g: &ValueFlowGraph, source: VertexId) -> Condition {
        self.psc.rename_var("v", &g.vertex(source).variable)
    }
}

/// Set of property bits; at most 64 properties per run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct PropSet {
    bits: u64,
}

pub const MAX_PROPERTIES: usize = 64;

impl PropSet {
    pub fn empty() -> PropSet {
        PropSet { bits: 0 }
    }

    pub fn all(n: usize) -> PropSet {
        debug_assert!(n <= MAX_PROPERTIES);
        if n == 64 {
            PropSet { bits: u64::MAX }
        } else {
            PropSet { bits: (1u64 << n) - 1 }
        }
    }

    pub fn single(bit: u32) -> PropSet {
        PropSet { bits: 1u64 << bit }
    }

    pub fn insert(&mut self, bit: u32) {
        self.bits |= 1u64 << bit;
    }

    pub fn remove(&mut self, bit: u32) {
        self.bits &= !(1u64 << bit);
    }

    pub fn contains(&self, bit: u32) -> bool {
        self.bits & (1u64 << bit) != 0
    }

    pub fn is_empty(&self) -> bool {
        self.bits == 0
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn union(self, other: PropSet) -> PropSet {
        PropSet { bits: self.bits | other.bits }
    }

    pub fn intersect(self, other: PropSet) -> PropSet {
        PropSet { bits: self.bits & other.bits }
    }

    pub fn raw(self) -> u64 {
        self.bits
    }

    pub fn from_raw(bits: u64) -> PropSet {
        PropSet { bits }
    }

    /// Ascending bit iterator.
    pub fn iter(self) -> impl Iterator<Item = u32> {
        (0..64u32).filter(move |b| self.contains(*b))
    }
}

impl fmt::Display for PropSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Binary with the lowest property bit rightmost, like 0b110.
        write!(f, "0b")?;
        let width = 64 - self.bits.leading_zeros().min(63);
        for i in (0..width.max(1)).rev() {
            write!(f, "{}", if self.contains(i) { '1' } else { '0' })?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PropParseError {
    pub message: String,
    pub line: usize,
}

impl fmt::Display for PropParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.line, self.message)
    }
}

struct Scanner<'a> {
    text: &'a str,
    pos: usize,
    line: usize,
}

impl<'a> Scanner<'a> {
    fn new(text: &'a str) -> Scanner<'a> {
        Scanner { text, pos: 0, line: 1 }
    }

    fn skip_ws(&mut self) {
        loop {
            let rest = &self.text[self.pos..];
            if rest.starts_with("//") || rest.starts_with('#') {
                let skip = rest.find('\n').unwrap_or(rest.len());
                self.pos += skip;
                continue;
            }
            match rest.chars().next() {
                Some(c) if c.is_whitespace() => {
                    if c == '\n' {
                        self.line += 1;
                    }
                    self.pos += c.len_utf8();
                }
                _ => return,
            }
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.text[self.pos..].chars().next()
    }

    fn word(&mut self) -> Option<&'a str> {
        self.skip_ws();
        let rest = &self.text[self.pos..];
        let len: usize = rest
            .chars()
            .take_while(|c| !c.is_whitespace() && !matches!(c, '{' | '}' | ';' | ':' | ','))
            .map(char::len_utf8)
            .sum();
        if len == 0 {
            return None;
        }
        self.pos += len;
        Some(&rest[..len])
    }

    fn expect(&mut self, c: char) -> Result<(), PropParseError> {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            Ok(())
        } else {
            Err(self.error(format!("expected `{}`", c)))
        }
    }

    /// Raw text up to the next `;`, which is consumed.
    fn until_semicolon(&mut self) -> Result<&'a str, PropParseError> {
        self.skip_ws();
        let rest = &self.text[self.pos..];
        let Some(end) = rest.find(';') else {
            return Err(self.error("missing `;` after clause".to_owned()));
        };
        let chunk = &rest[..end];
        if chunk.contains('}') || chunk.contains('{') {
            return Err(self.error("missing `;` after clause".to_owned()));
        }
        self.line += chunk.matches('\n').count();
        self.pos += end + 1;
        Ok(chunk.trim())
    }

    fn error(&self, message: String) -> PropParseError {
        PropParseError { message, line: self.line }
    }
}

fn parse_pattern(text: &str, line: usize) -> Result<Pattern, PropParseError> {
    let words: Vec<&str> = text.split_whitespace().collect();
    let fail = |m: String| Err(PropParseError { message: m, line });
    match words.as_slice() {
        ["call", callee, "ret"] => Ok(Pattern::CallRet { callee: (*callee).to_owned() }),
        ["call", callee, "arg", "_"] => {
            Ok(Pattern::CallArg { callee: (*callee).to_owned(), index: None })
        }
        ["call", callee, "arg", k] => match k.parse() {
            Ok(i) => Ok(Pattern::CallArg { callee: (*callee).to_owned(), index: Some(i) }),
            Err(_) => fail(format!("bad argument index `{}`", k)),
        },
        ["load", "result"] => Ok(Pattern::Load(LoadPos::Result)),
        ["load", "operand"] => Ok(Pattern::Load(LoadPos::Operand)),
        ["store", "stored"] => Ok(Pattern::Store(StorePos::Stored)),
        ["store", "address"] => Ok(Pattern::Store(StorePos::Address)),
        ["assign"] => Ok(Pattern::Assign),
        ["global"] => Ok(Pattern::Global),
        _ => fail(format!("unknown pattern `{}`", text)),
    }
}

/// Parse a `.prop` file into specs numbered by file order.
pub fn parse_props(text: &str) -> Result<Vec<PropertySpec>, PropParseError> {
    let mut scan = Scanner::new(text);
    let mut out: Vec<PropertySpec> = Vec::new();
    let mut names: BTreeSet<String> = BTreeSet::new();
    while scan.peek().is_some() {
        match scan.word() {
            Some("prop") => {}
            Some(w) => return Err(scan.error(format!("expected `prop`, found `{}`", w))),
            None => return Err(scan.error("expected `prop`".to_owned())),
        }
        let Some(name) = scan.word() else {
            return Err(scan.error("expected a property name".to_owned()));
        };
        if !names.insert(name.to_owned()) {
            return Err(scan.error(format!("duplicate property `{}`", name)));
        }
        if out.len() >= MAX_PROPERTIES {
            return Err(scan.error(format!("at most {} properties per file", MAX_PROPERTIES)));
        }
        scan.expect('{')?;
        let mut src: Option<Pattern> = None;
        let mut sinks: Option<Vec<Pattern>> = None;
        let mut psc: Option<Condition> = None;
        let mut agg: Option<AggKind> = None;
        loop {
            if scan.peek() == Some('}') {
                scan.pos += 1;
                break;
            }
            let Some(key) = scan.word() else {
                return Err(scan.error("unterminated property block".to_owned()));
            };
            scan.expect(':')?;
            let line = scan.line;
            let value = scan.until_semicolon()?;
            match key {
                "src" => {
                    if src.replace(parse_pattern(value, line)?).is_some() {
                        return Err(scan.error("duplicate `src` clause".to_owned()));
                    }
                }
                "sink" => {
                    let mut pats = Vec::new();
                    for part in value.split(',') {
                        pats.push(parse_pattern(part.trim(), line)?);
                    }
                    if sinks.replace(pats).is_some() {
                        return Err(scan.error("duplicate `sink` clause".to_owned()));
                    }
                }
                "psc" => {
                    let c = if value == "true" {
                        Condition::True
                    } else {
                        let atom = parse_atom(value).map_err(|e| PropParseError {
                            message: e.message,
                            line,
                        })?;
                        let vars = atom.vars();
                        if vars.len() != 1 || !vars.contains("v") {
                            return Err(PropParseError {
                                message: "psc templates constrain the placeholder `v` only"
                                    .to_owned(),
                                line,
                            });
                        }
                        Condition::Atom(atom)
                    };
                    if psc.replace(c).is_some() {
                        return Err(scan.error("duplicate `psc` clause".to_owned()));
                    }
                }
                "agg" => {
                    let kind = match value {
                        "never" => AggKind::Never,
                        "never-sim" => AggKind::NeverSim,
                        "must" => AggKind::Must,
                        other => {
                            return Err(PropParseError {
                                message: format!("unknown aggregation `{}`", other),
                                line,
                            })
                        }
                    };
                    if agg.replace(kind).is_some() {
                        return Err(scan.error("duplicate `agg` clause".to_owned()));
                    }
                }
                other => return Err(scan.error(format!("unknown clause `{}`", other))),
            }
        }
        let missing = |what: &str| PropParseError {
            message: format!("property `{}` is missing its `{}` clause", name, what),
            line: scan.line,
        };
        out.push(PropertySpec {
            name: name.to_owned(),
            src: src.ok_or_else(|| missing("src"))?,
            sinks: sinks.ok_or_else(|| missing("sink"))?,
            psc: psc.ok_or_else(|| missing("psc"))?,
            agg: agg.ok_or_else(|| missing("agg"))?,
            bit: out.len() as u32,
        });
    }
    Ok(out)
}

/// Render specs back into `.prop` text.
pub fn print_props(specs: &[PropertySpec]) -> String {
    let mut out = String::new();
    for s in specs {
        out.push_str(&format!("prop {} {{\n", s.name));
        out.push_str(&format!("  src: {};\n", s.src));
        let sinks: Vec<String> = s.sinks.iter().map(|p| format!("{}", p)).collect();
        out.push_str(&format!("  sink: {};\n", sinks.join(", ")));
        match &s.psc {
            Condition::True => out.push_str("  psc: true;\n"),
            Condition::Atom(a) => out.push_str(&format!("  psc: {};\n", a)),
            other => out.push_str(&format!("  psc: {};\n", other)),
        }
        out.push_str(&format!("  agg: {};\n", s.agg.token()));
        out.push_str("}\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_program;

    const DEMO: &str = "\
prop null-deref {
  src: call malloc ret;
  sink: load operand, store address;
  psc: v == 0;
  agg: never;
}
prop double-free {
  src: call malloc ret;
  sink: call free arg _;
  psc: v != 0;
  agg: never-sim;
}
";

    #[test]
    fn parse_and_reprint() {
        let specs = parse_props(DEMO).unwrap();
        assert_eq!(specs.len(), 2);
        assert_eq!(specs[0].bit, 0);
        assert_eq!(specs[1].bit, 1);
        assert_eq!(specs[1].agg, AggKind::NeverSim);
        let again = parse_props(&print_props(&specs)).unwrap();
        assert_eq!(specs, again);
    }

    #[test]
    fn duplicate_names_are_rejected() {
        let text = "prop a { src: assign; sink: global; psc: true; agg: never; }\n\
                    prop a { src: assign; sink: global; psc: true; agg: never; }";
        assert!(parse_props(text).unwrap_err().message.contains("duplicate property"));
    }

    #[test]
    fn psc_instantiates_on_the_source_variable() {
        let g = parse_program(
            "func main(0) {\n  v p ptr call malloc ret\n}\nfunc malloc(0) { }\n",
        )
        .unwrap();
        let specs = parse_props(DEMO).unwrap();
        let src = g.vertex_by_name("p").unwrap();
        let c = specs[0].instantiate_psc(&g, src);
        assert_eq!(alloc::format!("{}", c), "ptr == 0");
    }

    #[test]
    fn patterns_respect_positions() {
        let g = parse_program(
            "func main(0) {\n  v x x call free arg 0\n  v y y call free ret\n}\nfunc free(1) { }\n",
        )
        .unwrap();
        let any = parse_pattern("call free arg _", 1).unwrap();
        let ret = parse_pattern("call free ret", 1).unwrap();
        assert!(any.matches(&g.vertex(g.vertex_by_name("x").unwrap()).statement));
        assert!(!any.matches(&g.vertex(g.vertex_by_name("y").unwrap()).statement));
        assert!(ret.matches(&g.vertex(g.vertex_by_name("y").unwrap()).statement));
    }

    #[test]
    fn prop_sets_render_like_binary_literals() {
        let mut s = PropSet::empty();
        s.insert(1);
        s.insert(2);
        assert_eq!(alloc::format!("{}", s), "0b110");
        assert_eq!(PropSet::all(3).raw(), 0b111);
    }
}
