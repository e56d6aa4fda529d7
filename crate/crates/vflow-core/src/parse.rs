//! The `.vfg` program text format.
//!
//! A program is a list of function blocks. Inside a block, `v` lines
//! declare vertices, `e` lines declare intra-function flow edges, and
//! `loop { ... }` groups are unrolled into two copies before anything else
//! happens. Inter-procedural bind edges are never written down; the parser
//! synthesizes them from `call` vertices and the callee's formal
//! parameter/return vertices, so the two stay consistent by construction.
//!
//! ```text
//! func main(0) {
//!   v p p call malloc ret cond x1 > 0
//!   v a a assign
//!   e p -> a guard x1 > 0
//! }
//! func malloc(0) { }
//! ```
//!
//! Vertex kinds: `call CALLEE[@SITE] (ret | arg K)`, `load [result|operand]`
//! (operand when omitted), `store [stored|address]` (address when omitted),
//! `assign`, `global`, `param K`, `ret`, `other TAG`. All `arg`/`ret`
//! vertices naming the same callee with the same site tag belong to one
//! call statement; omitting the tag means "the one untagged call to that
//! callee in this function".
//!
//! `loop` unrolling renames inner ids with `#1`/`#2` suffixes. Edges whose
//! target is declared no later than their source inside the block are back
//! edges: they connect the first copy to the second and are dropped after
//! it. Edges entering the block from outside go to the first copy; edges
//! leaving it exist from both copies.
//!
//! `//` and `#` start line comments (only at the start of a line or after
//! whitespace, so unrolled names like `x#1` survive). [`print_program`]
//! renders the unrolled, normalized form; parse-print-parse is identity
//! on graphs.

use alloc::borrow::ToOwned;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::cond::{format_atom_list, parse_atom_list, Atom, Condition};
use crate::graph::{
    CallPos, Edge, EdgeId, EdgeKind, FnId, FunctionInfo, LoadPos, SiteId, SiteInfo, StatementKind,
    StorePos, Vertex, VertexId, ValueFlowGraph,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub message: String,
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

/// Byte offset where a `//` or `#` line comment begins, if any. A marker
/// only opens a comment at the start of the line or after whitespace;
/// a `#` inside a word stays part of it (unrolled names like `x#1`).
pub(crate) fn comment_start(line: &str) -> Option<usize> {
    let mut after_space = true;
    let mut it = line.char_indices().peekable();
    while let Some((i, c)) = it.next() {
        if after_space {
            if c == '#' {
                return Some(i);
            }
            if c == '/' && matches!(it.peek(), Some((_, '/'))) {
                return Some(i);
            }
        }
        after_space = c.is_whitespace();
    }
    None
}

fn err<T>(message: impl Into<String>, line: usize, col: usize) -> Result<T, ParseError> {
    Err(ParseError { message: message.into(), line, col })
}

#[derive(Clone, Debug)]
enum RawKind {
    Call { callee: String, tag: String, pos: CallPos },
    Load(LoadPos),
    Store(StorePos),
    Assign,
    Global,
    Param(u32),
    Ret,
    Other(String),
}

#[derive(Clone, Debug)]
struct RawVertex {
    name: String,
    var: String,
    kind: RawKind,
    cond: Vec<Atom>,
    line: usize,
}

#[derive(Clone, Debug)]
struct RawEdge {
    src: String,
    dst: String,
    guard: Vec<Atom>,
    line: usize,
}

#[derive(Clone, Debug)]
enum RawItem {
    V(RawVertex),
    E(RawEdge),
    Loop(Vec<RawItem>),
}

struct RawFunc {
    name: String,
    arity: u32,
    items: Vec<RawItem>,
    line: usize,
}

/// Split a line into words with their 1-based starting columns.
fn words_with_cols(line: &str) -> Vec<(&str, usize)> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, c) in line.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((&line[s..i], s + 1));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((&line[s..], s + 1));
    }
    out
}

fn parse_atoms_at(text: &str, line: usize, col: usize) -> Result<Vec<Atom>, ParseError> {
    parse_atom_list(text)
        .map_err(|e| ParseError { message: e.message, line, col: col + e.offset })
}

/// Parse `.vfg` text into a checked, loop-free value-flow graph.
pub fn parse_program(text: &str) -> Result<ValueFlowGraph, ParseError> {
    let raw_funcs = scan_blocks(text)?;
    build_graph(raw_funcs)
}

// ---------------------------------------------------------------------------
// Pass 1: line scanning into nested raw items.

fn scan_blocks(text: &str) -> Result<Vec<RawFunc>, ParseError> {
    let mut funcs: Vec<RawFunc> = Vec::new();
    // Stack of open item lists: index 0 is the current function body, the
    // rest are nested loop bodies.
    let mut stack: Vec<Vec<RawItem>> = Vec::new();
    let mut current: Option<RawFunc> = None;

    for (lineno0, raw_line) in text.lines().enumerate() {
        let lineno = lineno0 + 1;
        let line = match comment_start(raw_line) {
            Some(i) => &raw_line[..i],
            None => raw_line,
        };
        // Brace-only handling stays simple if braces become words.
        let spaced = line.replace('{', " { ").replace('}', " } ");
        let words = words_with_cols(&spaced);
        if words.is_empty() {
            continue;
        }
        let (head, head_col) = words[0];
        match head {
            "func" => {
                if current.is_some() {
                    return err("nested `func` blocks are not allowed", lineno, head_col);
                }
                let Some(&(sig, sig_col)) = words.get(1) else {
                    return err("expected `func NAME(ARITY) {`", lineno, head_col);
                };
                let (name, arity) = parse_func_sig(sig, lineno, sig_col)?;
                if words.get(2).map(|w| w.0) != Some("{") {
                    return err("expected `{` after function signature", lineno, sig_col);
                }
                current = Some(RawFunc { name, arity, items: Vec::new(), line: lineno });
                stack.push(Vec::new());
                // Allow `func f(0) { }` on one line.
                if words.get(3).map(|w| w.0) == Some("}") {
                    let body = stack.pop().unwrap();
                    let mut f = current.take().unwrap();
                    f.items = body;
                    funcs.push(f);
                }
            }
            "loop" => {
                if current.is_none() {
                    return err("`loop` outside a function block", lineno, head_col);
                }
                if words.get(1).map(|w| w.0) != Some("{") {
                    return err("expected `{` after `loop`", lineno, head_col);
                }
                stack.push(Vec::new());
            }
            "}" => {
                if stack.is_empty() {
                    return err("unmatched `}`", lineno, head_col);
                }
                let body = stack.pop().unwrap();
                if stack.is_empty() {
                    let mut f = current.take().expect("function open while stack nonempty");
                    f.items = body;
                    funcs.push(f);
                } else {
                    stack.last_mut().unwrap().push(RawItem::Loop(body));
                }
            }
            "v" => {
                if stack.is_empty() {
                    return err("vertex declaration outside a function block", lineno, head_col);
                }
                let item = parse_vertex_line(&words, &spaced, lineno)?;
                stack.last_mut().unwrap().push(RawItem::V(item));
            }
            "e" => {
                if stack.is_empty() {
                    return err("edge declaration outside a function block", lineno, head_col);
                }
                let item = parse_edge_line(&words, &spaced, lineno)?;
                stack.last_mut().unwrap().push(RawItem::E(item));
            }
            other => {
                return err(format!("unrecognized line head `{}`", other), lineno, head_col);
            }
        }
    }
    if current.is_some() || !stack.is_empty() {
        return err("unexpected end of input inside a block", text.lines().count(), 1);
    }
    Ok(funcs)
}

fn parse_func_sig(sig: &str, line: usize, col: usize) -> Result<(String, u32), ParseError> {
    let Some(open) = sig.find('(') else {
        return err("expected `NAME(ARITY)` in function signature", line, col);
    };
    if !sig.ends_with(')') || open == 0 {
        return err("expected `NAME(ARITY)` in function signature", line, col);
    }
    let name = sig[..open].to_owned();
    let arity: u32 = match sig[open + 1..sig.len() - 1].parse() {
        Ok(a) => a,
        Err(_) => return err("function arity must be a small integer", line, col + open),
    };
    Ok((name, arity))
}

fn parse_vertex_line(
    words: &[(&str, usize)],
    line_text: &str,
    lineno: usize,
) -> Result<RawVertex, ParseError> {
    // v ID VAR KIND... [cond ATOMS]
    if words.len() < 4 {
        return err("expected `v ID VAR KIND`", lineno, words[0].1);
    }
    let name = words[1].0.to_owned();
    let var = words[2].0.to_owned();
    let cond_at = words.iter().position(|w| w.0 == "cond");
    let kind_words = &words[3..cond_at.unwrap_or(words.len())];
    let kind = parse_kind(kind_words, lineno)?;
    let cond = match cond_at {
        None => Vec::new(),
        Some(i) => {
            let col = words[i].1 + words[i].0.len();
            parse_atoms_at(&line_text[col - 1..], lineno, col)?
        }
    };
    Ok(RawVertex { name, var, kind, cond, line: lineno })
}

fn parse_kind(words: &[(&str, usize)], lineno: usize) -> Result<RawKind, ParseError> {
    let Some(&(head, head_col)) = words.first() else {
        return err("missing vertex kind", lineno, 1);
    };
    let index_arg = |w: &(&str, usize)| -> Result<u32, ParseError> {
        w.0.parse().map_err(|_| ParseError {
            message: "expected a position index".to_string(),
            line: lineno,
            col: w.1,
        })
    };
    match head {
        "call" => {
            let Some(&(target, target_col)) = words.get(1) else {
                return err("expected callee name after `call`", lineno, head_col);
            };
            let (callee, tag) = match target.split_once('@') {
                Some((c, t)) => (c.to_owned(), t.to_owned()),
                None => (target.to_owned(), String::new()),
            };
            if callee.is_empty() {
                return err("empty callee name", lineno, target_col);
            }
            match words.get(2).map(|w| w.0) {
                Some("ret") => {
                    expect_end(words, 3, lineno)?;
                    Ok(RawKind::Call { callee, tag, pos: CallPos::Ret })
                }
                Some("arg") => {
                    let Some(w) = words.get(3) else {
                        return err("expected argument index after `arg`", lineno, target_col);
                    };
                    expect_end(words, 4, lineno)?;
                    Ok(RawKind::Call { callee, tag, pos: CallPos::Arg(index_arg(w)?) })
                }
                _ => err("expected `ret` or `arg K` after the callee", lineno, target_col),
            }
        }
        "load" => match words.get(1).map(|w| w.0) {
            None => Ok(RawKind::Load(LoadPos::Operand)),
            Some("result") => Ok(RawKind::Load(LoadPos::Result)),
            Some("operand") => Ok(RawKind::Load(LoadPos::Operand)),
            Some(w) => err(format!("unknown load position `{}`", w), lineno, words[1].1),
        },
        "store" => match words.get(1).map(|w| w.0) {
            None => Ok(RawKind::Store(StorePos::Address)),
            Some("stored") => Ok(RawKind::Store(StorePos::Stored)),
            Some("address") => Ok(RawKind::Store(StorePos::Address)),
            Some(w) => err(format!("unknown store position `{}`", w), lineno, words[1].1),
        },
        "assign" => {
            expect_end(words, 1, lineno)?;
            Ok(RawKind::Assign)
        }
        "global" => {
            expect_end(words, 1, lineno)?;
            Ok(RawKind::Global)
        }
        "param" => {
            let Some(w) = words.get(1) else {
                return err("expected parameter index after `param`", lineno, head_col);
            };
            expect_end(words, 2, lineno)?;
            Ok(RawKind::Param(index_arg(w)?))
        }
        "ret" => {
            expect_end(words, 1, lineno)?;
            Ok(RawKind::Ret)
        }
        "other" => {
            let Some(w) = words.get(1) else {
                return err("expected a tag after `other`", lineno, head_col);
            };
            expect_end(words, 2, lineno)?;
            Ok(RawKind::Other(w.0.to_owned()))
        }
        other => err(format!("unknown vertex kind `{}`", other), lineno, head_col),
    }
}

fn expect_end(words: &[(&str, usize)], from: usize, lineno: usize) -> Result<(), ParseError> {
    match words.get(from) {
        None => Ok(()),
        Some(&(w, col)) => err(format!("unexpected `{}`", w), lineno, col),
    }
}

fn parse_edge_line(
    words: &[(&str, usize)],
    line_text: &str,
    lineno: usize,
) -> Result<RawEdge, ParseError> {
    // e SRC -> DST [guard ATOMS]
    if words.len() < 4 || words[2].0 != "->" {
        return err("expected `e SRC -> DST`", lineno, words[0].1);
    }
    let src = words[1].0.to_owned();
    let dst = words[3].0.to_owned();
    let guard = match words.get(4) {
        None => Vec::new(),
        Some(&("guard", col)) => {
            let start = col + "guard".len();
            parse_atoms_at(&line_text[start - 1..], lineno, start)?
        }
        Some(&(w, col)) => return err(format!("unexpected `{}`", w), lineno, col),
    };
    Ok(RawEdge { src, dst, guard, line: lineno })
}

// ---------------------------------------------------------------------------
// Pass 2: loop unrolling.

fn rename(name: &str, suffix: &str) -> String {
    format!("{}{}", name, suffix)
}

/// Flatten an item list, expanding nested `loop` blocks innermost-first.
fn expand_items(items: Vec<RawItem>) -> (Vec<RawVertex>, Vec<RawEdge>) {
    let mut vs: Vec<RawVertex> = Vec::new();
    let mut pending: Vec<RawEdge> = Vec::new();
    // Original-name tables of each child loop at this level: block index
    // and position inside the block (position drives the back-edge rule).
    let mut block_of: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    let mut nblocks = 0usize;

    for item in items {
        match item {
            RawItem::V(v) => vs.push(v),
            RawItem::E(e) => pending.push(e),
            RawItem::Loop(sub) => {
                let (svs, ses) = expand_items(sub);
                let block = nblocks;
                nblocks += 1;
                for (pos, v) in svs.iter().enumerate() {
                    block_of.insert(v.name.clone(), (block, pos));
                }
                for suffix in ["#1", "#2"] {
                    for v in &svs {
                        let mut c = v.clone();
                        c.name = rename(&v.name, suffix);
                        vs.push(c);
                    }
                }
                pending.extend(ses);
            }
        }
    }

    // Resolve this level's edges against the child blocks.
    let mut es: Vec<RawEdge> = Vec::new();
    for e in pending {
        let s = block_of.get(&e.src).copied();
        let d = block_of.get(&e.dst).copied();
        match (s, d) {
            (Some((sb, sp)), Some((db, dp))) if sb == db => {
                if dp <= sp {
                    // Back edge: first copy feeds the second, then stops.
                    es.push(RawEdge {
                        src: rename(&e.src, "#1"),
                        dst: rename(&e.dst, "#2"),
                        ..e.clone()
                    });
                } else {
                    for suffix in ["#1", "#2"] {
                        es.push(RawEdge {
                            src: rename(&e.src, suffix),
                            dst: rename(&e.dst, suffix),
                            ..e.clone()
                        });
                    }
                }
            }
            _ => {
                // Componentwise: a source inside a block exits from both
                // copies, a target inside a block is entered at the first.
                let srcs: Vec<String> = match s {
                    Some(_) => alloc::vec![rename(&e.src, "#1"), rename(&e.src, "#2")],
                    None => alloc::vec![e.src.clone()],
                };
                let dst = match d {
                    Some(_) => rename(&e.dst, "#1"),
                    None => e.dst.clone(),
                };
                for src in srcs {
                    es.push(RawEdge { src, dst: dst.clone(), ..e.clone() });
                }
            }
        }
    }
    (vs, es)
}

// ---------------------------------------------------------------------------
// Pass 3: graph assembly, bind synthesis, validation.

fn build_graph(raw_funcs: Vec<RawFunc>) -> Result<ValueFlowGraph, ParseError> {
    let mut functions: Vec<FunctionInfo> = Vec::new();
    let mut fn_index: BTreeMap<String, FnId> = BTreeMap::new();
    for f in &raw_funcs {
        if fn_index.contains_key(&f.name) {
            return err(format!("duplicate function `{}`", f.name), f.line, 1);
        }
        let id = FnId(functions.len() as u32);
        fn_index.insert(f.name.clone(), id);
        functions.push(FunctionInfo { name: f.name.clone(), arity: f.arity, vertices: Vec::new() });
    }

    let mut expanded: Vec<(FnId, Vec<RawVertex>, Vec<RawEdge>)> = Vec::new();
    for (i, f) in raw_funcs.into_iter().enumerate() {
        let (vs, es) = expand_items(f.items);
        expanded.push((FnId(i as u32), vs, es));
    }

    let mut vertices: Vec<Vertex> = Vec::new();
    let mut vertex_lines: Vec<usize> = Vec::new();
    let mut name_index: BTreeMap<String, VertexId> = BTreeMap::new();
    let mut sites: Vec<SiteInfo> = Vec::new();
    let mut site_index: BTreeMap<(FnId, FnId, String), SiteId> = BTreeMap::new();
    // Per site: argument vertices with positions, and result vertices.
    let mut site_args: BTreeMap<SiteId, Vec<(u32, VertexId)>> = BTreeMap::new();
    let mut site_rets: BTreeMap<SiteId, Vec<VertexId>> = BTreeMap::new();

    for (fid, vs, _) in &expanded {
        for rv in vs {
            if name_index.contains_key(&rv.name) {
                return err(format!("duplicate vertex id `{}`", rv.name), rv.line, 1);
            }
            let id = VertexId(vertices.len() as u32);
            name_index.insert(rv.name.clone(), id);
            let statement = match &rv.kind {
                RawKind::Call { callee, tag, pos } => {
                    let Some(&callee_id) = fn_index.get(callee) else {
                        return err(format!("unknown callee `{}`", callee), rv.line, 1);
                    };
                    if let CallPos::Arg(k) = pos {
                        let arity = functions[callee_id.0 as usize].arity;
                        if *k >= arity {
                            return err(
                                format!(
                                    "arity mismatch: `{}` takes {} arguments, index {} given",
                                    callee, arity, k
                                ),
                                rv.line,
                                1,
                            );
                        }
                    }
                    let key = (*fid, callee_id, tag.clone());
                    let site = *site_index.entry(key).or_insert_with(|| {
                        let s = SiteId(sites.len() as u32);
                        sites.push(SiteInfo { caller: *fid, callee: callee_id, tag: tag.clone() });
                        s
                    });
                    match pos {
                        CallPos::Ret => site_rets.entry(site).or_default().push(id),
                        CallPos::Arg(k) => site_args.entry(site).or_default().push((*k, id)),
                    }
                    StatementKind::Call { callee: callee.clone(), position: *pos, site }
                }
                RawKind::Load(p) => StatementKind::Load(*p),
                RawKind::Store(p) => StatementKind::Store(*p),
                RawKind::Assign => StatementKind::Assign,
                RawKind::Global => StatementKind::Global,
                RawKind::Param(k) => {
                    let arity = functions[fid.0 as usize].arity;
                    if *k >= arity {
                        return err(
                            format!(
                                "arity mismatch: function has {} parameters, index {} declared",
                                arity, k
                            ),
                            rv.line,
                            1,
                        );
                    }
                    StatementKind::FormalParam(*k)
                }
                RawKind::Ret => StatementKind::FormalRet,
                RawKind::Other(tag) => StatementKind::Other(tag.clone()),
            };
            functions[fid.0 as usize].vertices.push(id);
            vertices.push(Vertex {
                id,
                name: rv.name.clone(),
                variable: rv.var.clone(),
                statement,
                function: *fid,
                occurrence_condition: Condition::conj_atoms(&rv.cond),
            });
            vertex_lines.push(rv.line);
        }
    }

    let mut edges: Vec<Edge> = Vec::new();
    for (fid, _, es) in &expanded {
        for re in es {
            let Some(&src) = name_index.get(&re.src) else {
                return err(format!("unknown vertex id `{}`", re.src), re.line, 1);
            };
            let Some(&dst) = name_index.get(&re.dst) else {
                return err(format!("unknown vertex id `{}`", re.dst), re.line, 1);
            };
            for &end in &[src, dst] {
                if vertices[end.0 as usize].function != *fid {
                    return err(
                        format!(
                            "edge endpoint `{}` belongs to another function; only bind \
                             edges cross functions and those are synthesized",
                            vertices[end.0 as usize].name
                        ),
                        re.line,
                        1,
                    );
                }
            }
            edges.push(Edge {
                id: EdgeId(edges.len() as u32),
                src,
                dst,
                guard: re.guard.clone(),
                kind: EdgeKind::Intra,
            });
        }
    }

    // Bind synthesis: argument vertices into formal parameters, formal
    // returns into call results, matched per site and position.
    for (site_idx, site) in sites.iter().enumerate() {
        let site_id = SiteId(site_idx as u32);
        let callee = &functions[site.callee.0 as usize];
        if let Some(args) = site_args.get(&site_id) {
            let mut args = args.clone();
            args.sort();
            for (k, a) in args {
                for &fp in &callee.vertices {
                    if vertices[fp.0 as usize].statement == StatementKind::FormalParam(k) {
                        edges.push(Edge {
                            id: EdgeId(edges.len() as u32),
                            src: a,
                            dst: fp,
                            guard: Vec::new(),
                            kind: EdgeKind::CallBind(site_id),
                        });
                    }
                }
            }
        }
        if let Some(rets) = site_rets.get(&site_id) {
            for &fr in &callee.vertices {
                if vertices[fr.0 as usize].statement == StatementKind::FormalRet {
                    for &r in rets {
                        edges.push(Edge {
                            id: EdgeId(edges.len() as u32),
                            src: fr,
                            dst: r,
                            guard: Vec::new(),
                            kind: EdgeKind::RetBind(site_id),
                        });
                    }
                }
            }
        }
    }

    let graph = ValueFlowGraph::assemble(vertices, edges, functions, sites);
    if let Some(v) = find_cycle_vertex(&graph) {
        return err(
            format!("cyclic value flow through `{}` after loop unrolling", graph.vname(v)),
            vertex_lines[v.0 as usize],
            1,
        );
    }
    Ok(graph)
}

/// Kahn's algorithm; returns a vertex on some cycle if one exists.
fn find_cycle_vertex(g: &ValueFlowGraph) -> Option<VertexId> {
    let n = g.vertex_count();
    let mut indeg: Vec<u32> = alloc::vec![0; n];
    for e in &g.edges {
        indeg[e.dst.0 as usize] += 1;
    }
    let mut stack: Vec<VertexId> =
        (0..n).filter(|i| indeg[*i] == 0).map(|i| VertexId(i as u32)).collect();
    let mut seen = 0usize;
    while let Some(v) = stack.pop() {
        seen += 1;
        for &e in g.out_edges(v) {
            let d = g.edge(e).dst;
            indeg[d.0 as usize] -= 1;
            if indeg[d.0 as usize] == 0 {
                stack.push(d);
            }
        }
    }
    if seen == n {
        return None;
    }
    (0..n).map(|i| VertexId(i as u32)).find(|v| indeg[v.0 as usize] > 0)
}

// ---------------------------------------------------------------------------
// Printing.

fn kind_text(g: &ValueFlowGraph, k: &StatementKind) -> String {
    match k {
        StatementKind::Call { callee, position, site } => {
            let tag = &g.site(*site).tag;
            let target = if tag.is_empty() {
                callee.clone()
            } else {
                format!("{}@{}", callee, tag)
            };
            match position {
                CallPos::Ret => format!("call {} ret", target),
                CallPos::Arg(k) => format!("call {} arg {}", target, k),
            }
        }
        StatementKind::Load(LoadPos::Result) => "load result".to_string(),
        StatementKind::Load(LoadPos::Operand) => "load operand".to_string(),
        StatementKind::Store(StorePos::Stored) => "store stored".to_string(),
        StatementKind::Store(StorePos::Address) => "store address".to_string(),
        StatementKind::Assign => "assign".to_string(),
        StatementKind::Global => "global".to_string(),
        StatementKind::FormalParam(k) => format!("param {}", k),
        StatementKind::FormalRet => "ret".to_string(),
        StatementKind::Other(tag) => format!("other {}", tag),
    }
}

/// Render the normalized text form: loops already unrolled, bind edges
/// omitted (they are synthesized on parse).
pub fn print_program(g: &ValueFlowGraph) -> String {
    let mut out = String::new();
    for (i, f) in g.functions.iter().enumerate() {
        let fid = FnId(i as u32);
        out.push_str(&format!("func {}({}) {{\n", f.name, f.arity));
        for &vid in &f.vertices {
            let v = g.vertex(vid);
            out.push_str(&format!("  v {} {} {}", v.name, v.variable, kind_text(g, &v.statement)));
            if let Condition::True = v.occurrence_condition {
            } else {
                let atoms = condition_atoms(&v.occurrence_condition);
                out.push_str(&format!(" cond {}", format_atom_list(&atoms)));
            }
            out.push('\n');
        }
        for e in &g.edges {
            if e.kind != EdgeKind::Intra || g.vertex(e.src).function != fid {
                continue;
            }
            out.push_str(&format!("  e {} -> {}", g.vname(e.src), g.vname(e.dst)));
            if !e.guard.is_empty() {
                out.push_str(&format!(" guard {}", format_atom_list(&e.guard)));
            }
            out.push('\n');
        }
        out.push_str("}\n");
    }
    out
}

/// Flatten a conjunction built by the parser back into its atom list.
fn condition_atoms(c: &Condition) -> Vec<Atom> {
    let mut out = Vec::new();
    fn walk(c: &Condition, out: &mut Vec<Atom>) {
        match c {
            Condition::Atom(a) => out.push(a.clone()),
            Condition::And(a, b) => {
                walk(a, out);
                walk(b, out);
            }
            Condition::True => {}
            _ => unreachable!("occurrence conditions are conjunctions of atoms"),
        }
    }
    walk(c, &mut out);
    out
}
