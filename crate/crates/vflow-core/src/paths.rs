//! Paths through the value-flow graph and their shape structure.
//!
//! A path is a vertex sequence together with the edges that join it; a
//! zero-length path is a single vertex. Path feasibility is someone else's
//! business (the engines); this module deals with *realizability*, the
//! call-return discipline: walking down through a call-bind edge commits
//! the walk to returning through the same call site, while ret-bind edges
//! taken with no pending call are free ascents into an arbitrary caller.
//!
//! Under that discipline the bracket word of any realizable path reduces
//! to ascents followed by descents (`rb* cb*`), which is exactly what the
//! summary grammar's target forms require; [`decompose_target`] recovers
//! that split and the classifier names the standard shapes.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use core::fmt;

use crate::graph::{EdgeId, EdgeKind, SiteId, StatementKind, ValueFlowGraph, VertexId};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Path {
    verts: Vec<VertexId>,
    edges: Vec<EdgeId>,
}

impl Path {
    pub fn single(v: VertexId) -> Path {
        Path { verts: alloc::vec![v], edges: Vec::new() }
    }

    /// Build from explicit steps; panics on arity mismatch, which is a
    /// programming error in the caller.
    pub fn new(verts: Vec<VertexId>, edges: Vec<EdgeId>) -> Path {
        assert_eq!(verts.len(), edges.len() + 1, "a path has one more vertex than edges");
        Path { verts, edges }
    }

    pub fn head(&self) -> VertexId {
        self.verts[0]
    }

    pub fn tail(&self) -> VertexId {
        *self.verts.last().unwrap()
    }

    pub fn verts(&self) -> &[VertexId] {
        &self.verts
    }

    pub fn edges(&self) -> &[EdgeId] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn push_step(&mut self, e: EdgeId, v: VertexId) {
        self.edges.push(e);
        self.verts.push(v);
    }

    pub fn pop_step(&mut self) {
        self.edges.pop();
        self.verts.pop();
    }

    /// Human-readable rendering using declared vertex names.
    pub fn display<'a>(&'a self, g: &'a ValueFlowGraph) -> PathDisplay<'a> {
        PathDisplay { path: self, g }
    }
}

pub struct PathDisplay<'a> {
    path: &'a Path,
    g: &'a ValueFlowGraph,
}

impl fmt::Display for PathDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.path.verts.iter().enumerate() {
            if i > 0 {
                write!(f, " -> ")?;
            }
            write!(f, "{}", self.g.vname(*v))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConcatError {
    /// No edge joins the first path's tail to the second path's head.
    NoConnectingEdge { tail: VertexId, head: VertexId },
}

impl fmt::Display for ConcatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConcatError::NoConnectingEdge { tail, head } => {
                write!(f, "no edge connects {} to {}", tail, head)
            }
        }
    }
}

/// Join two paths through the (smallest-id) edge between them. The paths
/// themselves carry no overlap: `a`'s tail and `b`'s head stay distinct
/// vertices joined by the connecting edge.
pub fn concat(g: &ValueFlowGraph, a: &Path, b: &Path) -> Result<Path, ConcatError> {
    let Some(e) = g.edge_between(a.tail(), b.head()) else {
        return Err(ConcatError::NoConnectingEdge { tail: a.tail(), head: b.head() });
    };
    let mut verts = a.verts.clone();
    let mut edges = a.edges.clone();
    edges.push(e);
    verts.extend_from_slice(&b.verts);
    edges.extend_from_slice(&b.edges);
    Ok(Path { verts, edges })
}

/// One call-return stack step; `None` means the edge is always walkable.
fn stack_step(kind: EdgeKind, stack: &mut Vec<SiteId>) -> bool {
    match kind {
        EdgeKind::Intra => true,
        EdgeKind::CallBind(site) => {
            stack.push(site);
            true
        }
        EdgeKind::RetBind(site) => match stack.last() {
            None => true, // free ascent into a caller
            Some(&top) if top == site => {
                stack.pop();
                true
            }
            Some(_) => false,
        },
    }
}

/// Whether the edge sequence respects the call-return discipline.
pub fn realizable(g: &ValueFlowGraph, p: &Path) -> bool {
    let mut stack: Vec<SiteId> = Vec::new();
    p.edges.iter().all(|e| stack_step(g.edge(*e).kind, &mut stack))
}

/// Every realizable path from a source to a sink, in depth-first preorder
/// per source (sources and edge alternatives in ascending id order). A
/// source that is itself a sink yields its zero-length path. This is the
/// reference enumeration the engines are checked against; it makes no
/// feasibility judgment.
pub fn enumerate_paths(
    g: &ValueFlowGraph,
    sources: &[VertexId],
    sinks: &BTreeSet<VertexId>,
) -> Vec<Path> {
    let mut out: Vec<Path> = Vec::new();
    for &src in sources {
        let mut path = Path::single(src);
        let mut stack: Vec<SiteId> = Vec::new();
        walk(g, sinks, &mut path, &mut stack, &mut out);
    }
    out
}

fn walk(
    g: &ValueFlowGraph,
    sinks: &BTreeSet<VertexId>,
    path: &mut Path,
    stack: &mut Vec<SiteId>,
    out: &mut Vec<Path>,
) {
    let at = path.tail();
    if sinks.contains(&at) {
        out.push(path.clone());
    }
    for &e in g.out_edges(at) {
        let edge = g.edge(e);
        let depth_before = stack.len();
        if !stack_step(edge.kind, stack) {
            continue;
        }
        path.push_step(e, edge.dst);
        walk(g, sinks, path, stack, out);
        path.pop_step();
        stack.truncate(depth_before);
        if let EdgeKind::RetBind(site) = edge.kind {
            // An ascent consumed nothing; a matched return popped, which
            // truncate cannot restore. Re-push what the pop removed.
            if depth_before > 0 {
                stack.push(site);
            }
        }
    }
}

/// Path shapes, named after the summary grammar's nonterminals.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PathShape {
    /// Starts at a formal parameter, descends only (`cb*`).
    Input,
    /// Ends at a formal return, ascends only (`rb*`).
    Output,
    /// Intra-procedural only: no bind edges at all.
    IntraOnly,
    /// Balanced bracket word: starts and ends at the same call level.
    SameLevel,
    /// Anything else (including non-realizable edge sequences).
    General,
}

/// Classify a path by its endpoints and reduced bracket word. A path that
/// fits several shapes reports the most specific one, in the order Input,
/// Output, IntraOnly, SameLevel.
pub fn classify_path(g: &ValueFlowGraph, p: &Path) -> PathShape {
    let Some(w) = reduce_word(g, p) else { return PathShape::General };
    let head_is_fp = matches!(
        g.vertex(p.head()).statement,
        StatementKind::FormalParam(_)
    );
    let tail_is_fr = g.vertex(p.tail()).statement == StatementKind::FormalRet;
    if head_is_fp && w.ascents == 0 {
        return PathShape::Input;
    }
    if tail_is_fr && w.descents == 0 {
        return PathShape::Output;
    }
    if w.ascents == 0 && w.descents == 0 {
        if w.any_bind {
            return PathShape::SameLevel;
        }
        return PathShape::IntraOnly;
    }
    PathShape::General
}

struct ReducedWord {
    /// Unmatched ret-bind edges (all precede the descents).
    ascents: usize,
    /// Unmatched call-bind edges.
    descents: usize,
    any_bind: bool,
}

/// Reduce the bracket word; `None` when the path violates the discipline.
fn reduce_word(g: &ValueFlowGraph, p: &Path) -> Option<ReducedWord> {
    let mut stack: Vec<SiteId> = Vec::new();
    let mut ascents = 0usize;
    let mut any_bind = false;
    for &e in p.edges() {
        match g.edge(e).kind {
            EdgeKind::Intra => {}
            EdgeKind::CallBind(site) => {
                any_bind = true;
                stack.push(site);
            }
            EdgeKind::RetBind(site) => {
                any_bind = true;
                match stack.last() {
                    None => ascents += 1,
                    Some(&top) if top == site => {
                        stack.pop();
                    }
                    Some(_) => return None,
                }
            }
        }
    }
    Some(ReducedWord { ascents, descents: stack.len(), any_bind })
}

/// Split of a source-to-sink path into its output part, same-level middle
/// and input part, by edge position. `out_rbs` are the unmatched ret-bind
/// steps (ascending positions), `in_cbs` the unmatched call-bind steps;
/// the middle between the last ascent and the first descent is balanced.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TargetSplit {
    pub out_rbs: Vec<usize>,
    pub in_cbs: Vec<usize>,
}

/// Decompose a realizable path into the target form `OUT? · SL · IN?`.
/// Returns `None` for paths that violate the call-return discipline or
/// interleave ascents after descents (which realizable paths never do).
pub fn decompose_target(g: &ValueFlowGraph, p: &Path) -> Option<TargetSplit> {
    let mut stack: Vec<SiteId> = Vec::new();
    let mut out_rbs: Vec<usize> = Vec::new();
    let mut unmatched_cb: Vec<usize> = Vec::new();
    for (i, &e) in p.edges().iter().enumerate() {
        match g.edge(e).kind {
            EdgeKind::Intra => {}
            EdgeKind::CallBind(site) => {
                stack.push(site);
                unmatched_cb.push(i);
            }
            EdgeKind::RetBind(site) => match stack.last() {
                None => {
                    if !unmatched_cb.is_empty() {
                        return None; // ascent after a committed descent
                    }
                    out_rbs.push(i);
                }
                Some(&top) if top == site => {
                    stack.pop();
                    unmatched_cb.pop();
                }
                Some(_) => return None,
            },
        }
    }
    Some(TargetSplit { out_rbs, in_cbs: unmatched_cb })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_program;

    const TWO_LEVEL: &str = "\
func main(0) {
  v a a call idf arg 0
  v b b call idf ret
}
func main2(0) {
  v c c call idf arg 0
  v d d call idf ret
}
func idf(1) {
  v u u param 0
  v uf u call free arg 0
  v w w assign
  v ur u ret
  e u -> uf
  e u -> ur
  e w -> ur
}
func free(1) { }
";

    #[test]
    fn classify_matches_shapes() {
        let g = parse_program(TWO_LEVEL).unwrap();
        let v = |n: &str| g.vertex_by_name(n).unwrap();
        let sl = {
            let sinks: BTreeSet<VertexId> = [v("b")].into_iter().collect();
            let mut paths = enumerate_paths(&g, &[v("a")], &sinks);
            assert_eq!(paths.len(), 1);
            paths.pop().unwrap()
        };
        assert_eq!(classify_path(&g, &sl), PathShape::SameLevel);
        let input = {
            let sinks: BTreeSet<VertexId> = [v("uf")].into_iter().collect();
            let mut paths = enumerate_paths(&g, &[v("u")], &sinks);
            assert_eq!(paths.len(), 1);
            paths.pop().unwrap()
        };
        assert_eq!(classify_path(&g, &input), PathShape::Input);
        let output = {
            let sinks: BTreeSet<VertexId> = [v("ur")].into_iter().collect();
            let mut paths = enumerate_paths(&g, &[v("w")], &sinks);
            assert_eq!(paths.len(), 1);
            paths.pop().unwrap()
        };
        // Ends at the formal return without descending: output beats the
        // intra-only shape even though no bind edge is involved.
        assert_eq!(classify_path(&g, &output), PathShape::Output);
        // Ascending past the return into a caller leaves the output
        // grammar; that suffix belongs to the next level's same-level
        // part.
        let past = {
            let sinks: BTreeSet<VertexId> = [v("b")].into_iter().collect();
            let mut paths = enumerate_paths(&g, &[v("ur")], &sinks);
            assert_eq!(paths.len(), 1);
            paths.pop().unwrap()
        };
        assert_eq!(classify_path(&g, &past), PathShape::General);
    }

    #[test]
    fn free_ascent_is_unconstrained_but_descents_commit() {
        let g = parse_program(TWO_LEVEL).unwrap();
        let v = |n: &str| g.vertex_by_name(n).unwrap();
        let sinks: BTreeSet<VertexId> = [v("b"), v("d")].into_iter().collect();
        // From inside idf with no pending call, the walk may ascend into
        // either caller: u's value can have come from anywhere.
        let from_u = enumerate_paths(&g, &[v("u")], &sinks);
        assert_eq!(from_u.len(), 2);
        let split = decompose_target(&g, &from_u[0]).unwrap();
        assert_eq!(split, TargetSplit { out_rbs: alloc::vec![1], in_cbs: alloc::vec![] });
        // A walk that descended at main's site must come back out at it:
        // main2's result d is unreachable from a.
        let from_a = enumerate_paths(&g, &[v("a")], &sinks);
        assert_eq!(from_a.len(), 1);
        assert_eq!(from_a[0].tail(), v("b"));
        assert!(realizable(&g, &from_a[0]));
    }

    #[test]
    fn concat_requires_a_connecting_edge() {
        let g = parse_program(TWO_LEVEL).unwrap();
        let v = |n: &str| g.vertex_by_name(n).unwrap();
        let a = Path::single(v("a"));
        let u = Path::single(v("u"));
        let b = Path::single(v("b"));
        assert!(concat(&g, &a, &u).is_ok());
        assert_eq!(
            concat(&g, &a, &b),
            Err(ConcatError::NoConnectingEdge { tail: v("a"), head: v("b") })
        );
    }
}
