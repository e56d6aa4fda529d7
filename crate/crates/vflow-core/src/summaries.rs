//! Function summaries and their composition.
//!
//! Instead of walking whole-program paths, the analysis can precompute per
//! function the three reusable path families:
//!
//! - **transfer**: formal parameter to formal return, same level;
//! - **input**: formal parameter down to some sink;
//! - **output**: some source up to the formal return.
//!
//! Each summary carries a label: one bit per property, set when the path
//! can stand in for that property (its endpoint is that property's
//! source/sink; transfers work for everyone). Concatenating summaries
//! intersects labels, so a composite path's label says exactly which
//! properties it can witness end to end.
//!
//! [`stitch_paths`] assembles every source-to-sink candidate of the form
//! `OUT? · SL · IN?` from the summaries; over an acyclic graph this yields
//! exactly the realizable paths the whole-program enumeration finds.

use alloc::borrow::ToOwned;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::graph::{EdgeKind, FnId, StatementKind, ValueFlowGraph, VertexId};
use crate::paths::Path;
use crate::props::{PropertySpec, PropSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum SummaryKind {
    Transfer,
    Input,
    Output,
}

impl SummaryKind {
    pub fn token(self) -> &'static str {
        match self {
            SummaryKind::Transfer => "transfer",
            SummaryKind::Input => "input",
            SummaryKind::Output => "output",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Summary {
    pub function: FnId,
    pub kind: SummaryKind,
    pub label: PropSet,
    pub path: Path,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FnSummaries {
    pub transfer: Vec<Summary>,
    pub input: Vec<Summary>,
    pub output: Vec<Summary>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SummaryDb {
    pub per_fn: BTreeMap<FnId, FnSummaries>,
    /// Property count; labels use this many bits.
    pub width: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SummaryError {
    /// The call graph has a cycle; bottom-up summarization needs it broken.
    RecursiveCycle { function: String },
    /// `.vfsum` text did not line up with the graph.
    BadText { message: String, line: usize },
}

impl fmt::Display for SummaryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SummaryError::RecursiveCycle { function } => {
                write!(f, "call cycle through `{}`; summaries need an acyclic call graph", function)
            }
            SummaryError::BadText { message, line } => write!(f, "{}: {}", line, message),
        }
    }
}

/// Batches of functions such that every callee sits in a strictly earlier
/// batch. Functions inside one batch are independent and may be
/// summarized in parallel.
pub fn bottom_up_schedule(g: &ValueFlowGraph) -> Result<Vec<Vec<FnId>>, SummaryError> {
    let n = g.functions.len();
    let mut remaining: BTreeSet<FnId> = (0..n).map(|i| FnId(i as u32)).collect();
    let mut done: BTreeSet<FnId> = BTreeSet::new();
    let mut batches: Vec<Vec<FnId>> = Vec::new();
    while !remaining.is_empty() {
        let ready: Vec<FnId> = remaining
            .iter()
            .copied()
            .filter(|f| g.call_graph[f.0 as usize].iter().all(|c| done.contains(c) || c == f))
            .collect();
        if ready.is_empty() {
            let f = *remaining.iter().next().unwrap();
            return Err(SummaryError::RecursiveCycle { function: g.function(f).name.clone() });
        }
        for f in &ready {
            remaining.remove(f);
            done.insert(*f);
        }
        batches.push(ready);
    }
    Ok(batches)
}

/// Memoized same-level path enumeration: all paths from `v` that stay at
/// `v`'s call level, dipping through callees only via transfer summaries.
struct SlPaths<'a> {
    g: &'a ValueFlowGraph,
    db: &'a SummaryDb,
    memo: BTreeMap<VertexId, Vec<Path>>,
}

impl<'a> SlPaths<'a> {
    fn new(g: &'a ValueFlowGraph, db: &'a SummaryDb) -> SlPaths<'a> {
        SlPaths { g, db, memo: BTreeMap::new() }
    }

    fn from(&mut self, v: VertexId) -> Vec<Path> {
        if let Some(cached) = self.memo.get(&v) {
            return cached.clone();
        }
        let mut out: Vec<Path> = alloc::vec![Path::single(v)];
        for &e in self.g.out_edges(v) {
            let edge = self.g.edge(e);
            match edge.kind {
                EdgeKind::Intra => {
                    for cont in self.from(edge.dst) {
                        let mut p = Path::single(v);
                        p.push_step(e, edge.dst);
                        append(&mut p, &cont);
                        out.push(p);
                    }
                }
                EdgeKind::CallBind(site) => {
                    // Dip: enter the callee through a transfer path, come
                    // back through the matching return binding.
                    let callee = self.g.site(site).callee;
                    let transfers: Vec<Path> = self
                        .db
                        .per_fn
                        .get(&callee)
                        .map(|s| {
                            s.transfer
                                .iter()
                                .filter(|t| t.path.head() == edge.dst)
                                .map(|t| t.path.clone())
                                .collect()
                        })
                        .unwrap_or_default();
                    for t in transfers {
                        for &re in self.g.out_edges(t.tail()) {
                            let redge = self.g.edge(re);
                            if redge.kind != EdgeKind::RetBind(site) {
                                continue;
                            }
                            for cont in self.from(redge.dst) {
                                let mut p = Path::single(v);
                                p.push_step(e, edge.dst);
                                append_from(&mut p, &t, 1);
                                p.push_step(re, redge.dst);
                                append(&mut p, &cont);
                                out.push(p);
                            }
                        }
                    }
                }
                EdgeKind::RetBind(_) => {} // leaving the level is not same-level
            }
        }
        out.sort();
        self.memo.insert(v, out.clone());
        out
    }
}

/// Append `cont` to `p`; `cont`'s head must already be `p`'s tail.
fn append(p: &mut Path, cont: &Path) {
    append_from(p, cont, 1);
}

/// Append `cont`'s steps starting at vertex index `from` (0 re-adds the
/// head, which is never wanted here).
fn append_from(p: &mut Path, cont: &Path, from: usize) {
    debug_assert!(from == 1 && p.tail() == cont.head());
    for (i, &e) in cont.edges().iter().enumerate() {
        p.push_step(e, cont.verts()[i + 1]);
    }
}

fn global_source_bits(g: &ValueFlowGraph, specs: &[PropertySpec], v: VertexId) -> PropSet {
    let mut s = PropSet::empty();
    for spec in specs {
        if spec.src.matches(&g.vertex(v).statement) {
            s.insert(spec.bit);
        }
    }
    s
}

fn global_sink_bits(g: &ValueFlowGraph, specs: &[PropertySpec], v: VertexId) -> PropSet {
    let mut s = PropSet::empty();
    for spec in specs {
        if spec.sinks.iter().any(|p| p.matches(&g.vertex(v).statement)) {
            s.insert(spec.bit);
        }
    }
    s
}

/// Summaries of one function; every callee's entry must already be in
/// `db`. The scheduler guarantees that order.
pub fn build_function_summaries(
    g: &ValueFlowGraph,
    f: FnId,
    specs: &[PropertySpec],
    db: &SummaryDb,
) -> FnSummaries {
    let mut sl = SlPaths::new(g, db);
    let all = PropSet::all(specs.len());
    let mut out = FnSummaries::default();
    let mut inputs: BTreeMap<Path, PropSet> = BTreeMap::new();
    let mut outputs: BTreeMap<Path, PropSet> = BTreeMap::new();

    for &v in &g.function(f).vertices {
        match g.vertex(v).statement {
            StatementKind::FormalParam(_) => {
                for p in sl.from(v) {
                    let tail = p.tail();
                    if g.vertex(tail).statement == StatementKind::FormalRet {
                        out.transfer.push(Summary {
                            function: f,
                            kind: SummaryKind::Transfer,
                            label: all,
                            path: p.clone(),
                        });
                    }
                    let sink_bits = global_sink_bits(g, specs, tail);
                    if !sink_bits.is_empty() {
                        let prev = inputs.get(&p).copied().unwrap_or_default();
                        inputs.insert(p.clone(), prev.union(sink_bits));
                    }
                    // Keep descending: the same-level part may stop at a
                    // call argument and continue through the callee's
                    // input summaries.
                    let mut deeper: Vec<(Path, PropSet)> = Vec::new();
                    extend_through_inputs(g, db, &p, |path, label| deeper.push((path, label)));
                    for (path, label) in deeper {
                        let prev = inputs.get(&path).copied().unwrap_or_default();
                        inputs.insert(path, prev.union(label));
                    }
                }
            }
            _ => {}
        }
        let src_bits = global_source_bits(g, specs, v);
        if !src_bits.is_empty() {
            for p in sl.from(v) {
                if g.vertex(p.tail()).statement == StatementKind::FormalRet {
                    let prev = outputs.get(&p).copied().unwrap_or_default();
                    outputs.insert(p, prev.union(src_bits));
                }
            }
        }
    }

    // Outputs that begin below: a callee's output ascends into us and
    // continues same-level to our return.
    for &site_id in db_sites_into(g, f).iter() {
        let site = g.site(site_id);
        let Some(callee_sums) = db.per_fn.get(&site.callee) else { continue };
        for o in &callee_sums.output {
            for &re in g.out_edges(o.path.tail()) {
                let redge = g.edge(re);
                if redge.kind != EdgeKind::RetBind(site_id) {
                    continue;
                }
                for cont in sl.from(redge.dst) {
                    if g.vertex(cont.tail()).statement != StatementKind::FormalRet {
                        continue;
                    }
                    let mut p = o.path.clone();
                    p.push_step(re, redge.dst);
                    append(&mut p, &cont);
                    let prev = outputs.get(&p).copied().unwrap_or_default();
                    outputs.insert(p, prev.union(o.label));
                }
            }
        }
    }

    for (path, label) in inputs {
        out.input.push(Summary { function: f, kind: SummaryKind::Input, label, path });
    }
    for (path, label) in outputs {
        out.output.push(Summary { function: f, kind: SummaryKind::Output, label, path });
    }
    out.transfer.sort();
    out.transfer.dedup();
    out
}

/// Call sites inside `f` (sites whose caller is `f`).
fn db_sites_into(g: &ValueFlowGraph, f: FnId) -> Vec<crate::graph::SiteId> {
    (0..g.sites.len() as u32)
        .map(crate::graph::SiteId)
        .filter(|s| g.site(*s).caller == f)
        .collect()
}

/// For a same-level path ending at a call argument, produce every
/// extension through the callee's input summaries. Labels intersect.
fn extend_through_inputs(
    g: &ValueFlowGraph,
    db: &SummaryDb,
    p: &Path,
    mut emit: impl FnMut(Path, PropSet),
) {
    let tail = p.tail();
    for &e in g.out_edges(tail) {
        let edge = g.edge(e);
        let EdgeKind::CallBind(site) = edge.kind else { continue };
        let callee = g.site(site).callee;
        let Some(callee_sums) = db.per_fn.get(&callee) else { continue };
        for inp in &callee_sums.input {
            if inp.path.head() != edge.dst || inp.label.is_empty() {
                continue;
            }
            let mut ext = p.clone();
            ext.push_step(e, edge.dst);
            append(&mut ext, &inp.path);
            emit(ext, inp.label);
        }
    }
}

/// Build summaries for the whole program in bottom-up order.
pub fn build_summary_db(
    g: &ValueFlowGraph,
    specs: &[PropertySpec],
) -> Result<SummaryDb, SummaryError> {
    let schedule = bottom_up_schedule(g)?;
    let mut db = SummaryDb { per_fn: BTreeMap::new(), width: specs.len() };
    for batch in schedule {
        for f in batch {
            let sums = build_function_summaries(g, f, specs, &db);
            db.per_fn.insert(f, sums);
        }
    }
    Ok(db)
}

/// All source-to-sink candidate paths per property, assembled from
/// summaries instead of whole-program search. Sorted and deduplicated.
pub fn stitch_paths(
    g: &ValueFlowGraph,
    db: &SummaryDb,
    specs: &[PropertySpec],
) -> BTreeMap<u32, Vec<Path>> {
    let mut sl = SlPaths::new(g, db);
    let mut out: BTreeMap<u32, BTreeSet<Path>> = BTreeMap::new();
    for spec in specs {
        out.insert(spec.bit, BTreeSet::new());
    }

    // Source-anchored starts: either the source's own level (SL...) or a
    // callee output ascending into some caller level (OUT · SL...).
    // starts: (path so far, label constraint)
    let mut starts: Vec<(Path, PropSet)> = Vec::new();
    let all = PropSet::all(specs.len());
    for spec in specs {
        for src in spec.source_vertices(g) {
            starts.push((Path::single(src), all));
        }
    }
    starts.sort();
    starts.dedup();
    for sums in db.per_fn.values() {
        for o in &sums.output {
            for &re in g.out_edges(o.path.tail()) {
                let redge = g.edge(re);
                if !matches!(redge.kind, EdgeKind::RetBind(_)) {
                    continue;
                }
                let mut p = o.path.clone();
                p.push_step(re, redge.dst);
                starts.push((p, o.label));
            }
        }
    }

    let sink_bits = |v: VertexId| global_sink_bits(g, specs, v);
    let source_bits = |v: VertexId| global_source_bits(g, specs, v);

    for (start, label) in starts {
        let head_bits = source_bits(start.head()).intersect(label);
        if head_bits.is_empty() {
            continue;
        }
        for cont in sl.from(start.tail()) {
            let mut p = start.clone();
            append(&mut p, &cont);
            let walked = p;
            // Ends at a sink right here...
            let direct = head_bits.intersect(sink_bits(walked.tail()));
            for bit in direct.iter() {
                out.get_mut(&bit).unwrap().insert(walked.clone());
            }
            // ...or descends through input summaries.
            extend_through_inputs(g, db, &walked, |path, in_label| {
                for bit in head_bits.intersect(in_label).iter() {
                    out.get_mut(&bit).unwrap().insert(path.clone());
                }
            });
        }
    }

    out.into_iter().map(|(k, v)| (k, v.into_iter().collect())).collect()
}

// ---------------------------------------------------------------------------
// `.vfsum` text.

/// One line per summary: function, kind, label as a binary literal, then
/// the path's vertex names. Lines are sorted.
pub fn print_summaries(g: &ValueFlowGraph, db: &SummaryDb) -> String {
    let mut lines: Vec<String> = Vec::new();
    for sums in db.per_fn.values() {
        for s in sums.transfer.iter().chain(&sums.input).chain(&sums.output) {
            let verts: Vec<&str> = s.path.verts().iter().map(|v| g.vname(*v)).collect();
            lines.push(format!(
                "{} {} {} {}",
                g.function(s.function).name,
                s.kind.token(),
                s.label,
                verts.join(" ")
            ));
        }
    }
    lines.sort();
    let mut out = lines.join("\n");
    out.push('\n');
    out
}

/// Parse `.vfsum` text against its graph. Edges are reconstructed by
/// taking the smallest edge between consecutive vertices.
pub fn parse_summaries(g: &ValueFlowGraph, text: &str) -> Result<SummaryDb, SummaryError> {
    let mut db = SummaryDb { per_fn: BTreeMap::new(), width: 0 };
    for (lineno0, raw) in text.lines().enumerate() {
        let lineno = lineno0 + 1;
        let line = match crate::parse::comment_start(raw) {
            Some(i) => &raw[..i],
            None => raw,
        };
        let words: Vec<&str> = line.split_whitespace().collect();
        if words.is_empty() {
            continue;
        }
        if words.len() < 4 {
            return Err(SummaryError::BadText {
                message: "expected `FUNCTION KIND 0bLABEL V...`".to_owned(),
                line: lineno,
            });
        }
        let Some(f) = g.function_by_name(words[0]) else {
            return Err(SummaryError::BadText {
                message: format!("unknown function `{}`", words[0]),
                line: lineno,
            });
        };
        let kind = match words[1] {
            "transfer" => SummaryKind::Transfer,
            "input" => SummaryKind::Input,
            "output" => SummaryKind::Output,
            other => {
                return Err(SummaryError::BadText {
                    message: format!("unknown summary kind `{}`", other),
                    line: lineno,
                })
            }
        };
        let Some(bits) = words[2].strip_prefix("0b") else {
            return Err(SummaryError::BadText {
                message: "label must be a binary literal".to_owned(),
                line: lineno,
            });
        };
        let Ok(raw_bits) = u64::from_str_radix(bits, 2) else {
            return Err(SummaryError::BadText {
                message: "label must be a binary literal".to_owned(),
                line: lineno,
            });
        };
        let label = PropSet::from_raw(raw_bits);
        let mut verts: Vec<VertexId> = Vec::new();
        for name in &words[3..] {
            let Some(v) = g.vertex_by_name(name) else {
                return Err(SummaryError::BadText {
                    message: format!("unknown vertex `{}`", name),
                    line: lineno,
                });
            };
            verts.push(v);
        }
        let mut path = Path::single(verts[0]);
        for &v in &verts[1..] {
            let Some(e) = g.edge_between(path.tail(), v) else {
                return Err(SummaryError::BadText {
                    message: format!(
                        "no edge between `{}` and `{}`",
                        g.vname(path.tail()),
                        g.vname(v)
                    ),
                    line: lineno,
                });
            };
            path.push_step(e, v);
        }
        let s = Summary { function: f, kind, label, path };
        let entry = db.per_fn.entry(f).or_default();
        match kind {
            SummaryKind::Transfer => entry.transfer.push(s),
            SummaryKind::Input => entry.input.push(s),
            SummaryKind::Output => entry.output.push(s),
        }
        db.width = db.width.max(64 - raw_bits.leading_zeros() as usize);
    }
    for sums in db.per_fn.values_mut() {
        sums.transfer.sort();
        sums.input.sort();
        sums.output.sort();
    }
    Ok(db)
}
