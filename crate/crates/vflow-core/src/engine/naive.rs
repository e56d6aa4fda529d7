//! Baseline engine: one walk per property per source.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::cond::{Atom, Condition};
use crate::engine::{AnalysisStats, EngineConfig, EngineError, FeasiblePath, Mode, PathsByProp};
use crate::graph::{EdgeKind, SiteId, ValueFlowGraph, VertexId};
use crate::paths::Path;
use crate::props::PropertySpec;
use crate::solver::{Solver, SolverError};
use crate::summaries::{build_summary_db, stitch_paths, SummaryDb};

/// Check every property independently: realizable depth-first walks from
/// each source, one satisfiability query per visited vertex, pruning the
/// subtree as soon as guards and state condition conflict.
///
/// In summary mode the walk runs over candidate paths stitched from `db`
/// (built on the fly when `None`) instead of the whole graph; reported
/// paths are the same.
pub fn check_naive(
    g: &ValueFlowGraph,
    specs: &[PropertySpec],
    cfg: &EngineConfig,
    db: Option<&SummaryDb>,
) -> Result<(PathsByProp, AnalysisStats), EngineError> {
    let mut stats = AnalysisStats::default();
    let mut solver = Solver::new(cfg.solver.clone());
    let mut out: PathsByProp = PathsByProp::new();
    for spec in specs {
        out.insert(spec.bit, Vec::new());
    }

    let owned_db;
    let candidates = match cfg.mode {
        Mode::Intra => None,
        Mode::Summary => {
            let dbref = match db {
                Some(d) => d,
                None => {
                    owned_db = build_summary_db(g, specs)?;
                    &owned_db
                }
            };
            Some(stitch_paths(g, dbref, specs))
        }
    };

    for spec in specs {
        let sinks = spec.sink_vertices(g);
        let paths = out.get_mut(&spec.bit).unwrap();
        for source in spec.source_vertices(g) {
            let psc = spec.instantiate_psc(g, source);
            match &candidates {
                None => {
                    let mut walk = GraphWalk {
                        g,
                        sinks: &sinks,
                        bit: spec.bit,
                        source,
                        psc: &psc,
                        solver: &mut solver,
                        stats: &mut stats,
                        out: paths,
                        guards: Vec::new(),
                        guard_lens: Vec::new(),
                        path: Path::single(source),
                        stack: Vec::new(),
                    };
                    walk.visit(source)?;
                }
                Some(cands) => {
                    let mine: Vec<&Path> = cands[&spec.bit]
                        .iter()
                        .filter(|p| p.head() == source)
                        .collect();
                    let tree = PrefixTree::build(source, &mine);
                    let mut walk = TreeWalk {
                        g,
                        tree: &tree,
                        sinks: &sinks,
                        bit: spec.bit,
                        source,
                        psc: &psc,
                        solver: &mut solver,
                        stats: &mut stats,
                        out: paths,
                        guards: Vec::new(),
                        guard_lens: Vec::new(),
                        path: Path::single(source),
                    };
                    walk.visit(0)?;
                }
            }
        }
        paths.sort();
        paths.dedup();
    }
    stats.solver = solver.counters;
    Ok((out, stats))
}

struct GraphWalk<'a> {
    g: &'a ValueFlowGraph,
    sinks: &'a BTreeSet<VertexId>,
    bit: u32,
    source: VertexId,
    psc: &'a Condition,
    solver: &'a mut Solver,
    stats: &'a mut AnalysisStats,
    out: &'a mut Vec<FeasiblePath>,
    guards: Vec<Atom>,
    guard_lens: Vec<usize>,
    path: Path,
    stack: Vec<SiteId>,
}

impl GraphWalk<'_> {
    fn visit(&mut self, v: VertexId) -> Result<(), SolverError> {
        self.stats.vertices_visited += 1;
        let q = Condition::conj_atoms(&self.guards).and(self.psc.clone());
        if !self.solver.is_sat(&q)? {
            self.stats.pruned_psc += 1;
            return Ok(());
        }
        if self.sinks.contains(&v) {
            self.out.push(FeasiblePath {
                bit: self.bit,
                source: self.source,
                sink: v,
                path: self.path.clone(),
                pc: Condition::conj_atoms(&self.guards),
            });
        }
        for &e in self.g.out_edges(v) {
            let edge = self.g.edge(e);
            let delta = match edge.kind {
                EdgeKind::Intra => StackDelta::Keep,
                EdgeKind::CallBind(s) => StackDelta::Push(s),
                EdgeKind::RetBind(s) => match self.stack.last() {
                    None => StackDelta::Keep, // unconstrained ascent
                    Some(&top) if top == s => StackDelta::Pop(s),
                    Some(_) => continue,
                },
            };
            match delta {
                StackDelta::Push(s) => self.stack.push(s),
                StackDelta::Pop(_) => {
                    self.stack.pop();
                }
                StackDelta::Keep => {}
            }
            self.guard_lens.push(edge.guard.len());
            self.guards.extend(edge.guard.iter().cloned());
            self.path.push_step(e, edge.dst);
            let r = self.visit(edge.dst);
            self.path.pop_step();
            let n = self.guard_lens.pop().unwrap();
            let keep = self.guards.len() - n;
            self.guards.truncate(keep);
            match delta {
                StackDelta::Push(_) => {
                    self.stack.pop();
                }
                StackDelta::Pop(s) => self.stack.push(s),
                StackDelta::Keep => {}
            }
            r?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy)]
enum StackDelta {
    Keep,
    Push(SiteId),
    Pop(SiteId),
}

/// Candidate paths sharing one head, merged into a tree so common
/// prefixes are walked once.
pub(crate) struct PrefixTree {
    pub(crate) nodes: Vec<TreeNode>,
}

pub(crate) struct TreeNode {
    pub(crate) vertex: VertexId,
    pub(crate) children: Vec<(crate::graph::EdgeId, usize)>,
}

impl PrefixTree {
    pub(crate) fn build(root: VertexId, paths: &[&Path]) -> PrefixTree {
        let mut tree = PrefixTree { nodes: alloc::vec![TreeNode { vertex: root, children: Vec::new() }] };
        let mut sorted: Vec<&Path> = paths.to_vec();
        sorted.sort();
        for p in sorted {
            debug_assert_eq!(p.head(), root);
            let mut cur = 0usize;
            for (i, &e) in p.edges().iter().enumerate() {
                let dst = p.verts()[i + 1];
                let found = tree.nodes[cur].children.iter().find(|(ce, _)| *ce == e).map(|&(_, n)| n);
                cur = match found {
                    Some(n) => n,
                    None => {
                        let n = tree.nodes.len();
                        tree.nodes.push(TreeNode { vertex: dst, children: Vec::new() });
                        tree.nodes[cur].children.push((e, n));
                        n
                    }
                };
            }
        }
        tree
    }
}

struct TreeWalk<'a> {
    g: &'a ValueFlowGraph,
    tree: &'a PrefixTree,
    sinks: &'a BTreeSet<VertexId>,
    bit: u32,
    source: VertexId,
    psc: &'a Condition,
    solver: &'a mut Solver,
    stats: &'a mut AnalysisStats,
    out: &'a mut Vec<FeasiblePath>,
    guards: Vec<Atom>,
    guard_lens: Vec<usize>,
    path: Path,
}

impl TreeWalk<'_> {
    fn visit(&mut self, node: usize) -> Result<(), SolverError> {
        self.stats.vertices_visited += 1;
        let q = Condition::conj_atoms(&self.guards).and(self.psc.clone());
        if !self.solver.is_sat(&q)? {
            self.stats.pruned_psc += 1;
            return Ok(());
        }
        let v = self.tree.nodes[node].vertex;
        if self.sinks.contains(&v) {
            self.out.push(FeasiblePath {
                bit: self.bit,
                source: self.source,
                sink: v,
                path: self.path.clone(),
                pc: Condition::conj_atoms(&self.guards),
            });
        }
        for i in 0..self.tree.nodes[node].children.len() {
            let (e, child) = self.tree.nodes[node].children[i];
            let edge = self.g.edge(e);
            self.guard_lens.push(edge.guard.len());
            self.guards.extend(edge.guard.iter().cloned());
            self.path.push_step(e, edge.dst);
            let r = self.visit(child);
            self.path.pop_step();
            let n = self.guard_lens.pop().unwrap();
            let keep = self.guards.len() - n;
            self.guards.truncate(keep);
            r?;
        }
        Ok(())
    }
}
