//! Shared-pass engine. One planned traversal per property group; work
//! crosses property boundaries four ways:
//!
//! - earlier walks record, per vertex, whether a later property's sink
//!   is still ahead (fresh reachability; misses prune whole subtrees);
//! - unsatisfiable checks leave behind their minimal conflicting edge
//!   sets, either tied to the exact state condition or generalized to an
//!   interpolant over the source variable, and later walks that cover
//!   those edges drop the member without asking the solver;
//! - members of one group resolve each other: implication propagates
//!   verdicts, jointly satisfiable pairs share one query when the guards
//!   cannot couple with the state condition, and a disjoint pair that
//!   covers the domain decides its second half from the first for free;
//! - edges whose guard speaks only about a later property's source
//!   variable are probed once against that property's state condition,
//!   so the conflict store fills up even when the current walk itself
//!   never goes unsatisfiable.
//!
//! Reported paths are exactly the ones [`check_naive`] reports; the
//! sharing only removes queries, never answers.
//!
//! [`check_naive`]: crate::engine::check_naive

use alloc::borrow::ToOwned;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::cond::{Atom, Condition};
use crate::engine::naive::PrefixTree;
use crate::engine::plan::{make_plans, Plan, RuleMask};
use crate::engine::{
    AnalysisStats, EngineConfig, EngineError, FeasiblePath, Mode, PathsByProp,
};
use crate::graph::{EdgeId, EdgeKind, SiteId, ValueFlowGraph, VertexId};
use crate::paths::Path;
use crate::props::{PropertySpec, PropSet};
use crate::solver::{Solver, SolverError};
use crate::summaries::{build_summary_db, stitch_paths};
use crate::summaries::SummaryDb;

/// Per-vertex, per-property sink reachability, filled in by coverage
/// walks. `true` may over-approximate (it never prunes anything);
/// `false` is exact for the fresh-stack path universe and licenses a
/// drop. Sinks themselves are always `true`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SinkReachStore {
    map: BTreeMap<(VertexId, u32), bool>,
}

impl SinkReachStore {
    pub fn get(&self, v: VertexId, bit: u32) -> Option<bool> {
        self.map.get(&(v, bit)).copied()
    }

    fn set(&mut self, v: VertexId, bit: u32, val: bool) {
        self.map.entry((v, bit)).or_insert(val);
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VertexId, u32, bool)> + '_ {
        self.map.iter().map(|(&(v, b), &r)| (v, b, r))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum ConflictKind {
    /// The edges' guards are contradictory on their own.
    Infeasible,
    /// The edges' guards contradict exactly this instantiated state
    /// condition.
    Core { psc: Condition },
    /// The edges' guards imply `gamma`; any state condition that cannot
    /// hold with `gamma` conflicts with any path covering the edges.
    Interp { gamma: Condition },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConflictEntry {
    /// Sorted, minimal-by-deletion edge set.
    pub edges: Vec<EdgeId>,
    pub kind: ConflictKind,
}

/// Recorded conflicts, indexed by their smallest edge for subset lookup.
#[derive(Debug, Default)]
pub struct ConflictStore {
    entries: Vec<ConflictEntry>,
    by_first: BTreeMap<EdgeId, Vec<usize>>,
    universal: Vec<usize>,
    seen: BTreeSet<(Vec<EdgeId>, ConflictKind)>,
    interp_memo: BTreeMap<(usize, Condition), bool>,
    edge_probes: BTreeSet<(EdgeId, Condition)>,
}

impl ConflictStore {
    pub fn entries(&self) -> &[ConflictEntry] {
        &self.entries
    }

    fn insert(&mut self, mut edges: Vec<EdgeId>, kind: ConflictKind) {
        edges.sort_unstable();
        edges.dedup();
        if !self.seen.insert((edges.clone(), kind.clone())) {
            return;
        }
        let idx = self.entries.len();
        match edges.first() {
            Some(&e) => self.by_first.entry(e).or_default().push(idx),
            None => self.universal.push(idx),
        }
        self.entries.push(ConflictEntry { edges, kind });
    }

    /// Entries whose edge set is covered by the current path.
    fn applicable(&self, path_edges: &BTreeSet<EdgeId>) -> Vec<usize> {
        let mut out: Vec<usize> = self.universal.clone();
        for e in path_edges {
            if let Some(idxs) = self.by_first.get(e) {
                for &i in idxs {
                    if self.entries[i].edges.iter().all(|x| path_edges.contains(x)) {
                        out.push(i);
                    }
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Does entry `idx` rule out `psc`? Interpolant checks are tiny
    /// single-variable probes and memoized.
    fn rules_out(
        &mut self,
        idx: usize,
        psc: &Condition,
        rules: RuleMask,
        solver: &Solver,
    ) -> Result<bool, SolverError> {
        match &self.entries[idx].kind {
            ConflictKind::Infeasible => Ok(rules.enabled(3)),
            ConflictKind::Core { psc: recorded } => Ok(rules.enabled(3) && recorded == psc),
            ConflictKind::Interp { gamma } => {
                if !rules.enabled(4) {
                    return Ok(false);
                }
                if let Some(&hit) = self.interp_memo.get(&(idx, psc.clone())) {
                    return Ok(hit);
                }
                let hit = !solver.probe_sat(&gamma.clone().and(psc.clone()))?;
                self.interp_memo.insert((idx, psc.clone()), hit);
                Ok(hit)
            }
        }
    }

    /// First time this edge guard is held against this condition?
    fn first_probe(&mut self, e: EdgeId, cond: &Condition) -> bool {
        self.edge_probes.insert((e, cond.clone()))
    }
}

#[derive(Debug)]
pub struct CatapultOutcome {
    pub paths: PathsByProp,
    pub stats: AnalysisStats,
    pub plan: Plan,
    pub reach: SinkReachStore,
    pub conflicts: ConflictStore,
}

/// Run the planned shared pass. Same reported paths as the baseline
/// engine; the stats show where the sharing paid off.
pub fn check_catapult(
    g: &ValueFlowGraph,
    specs: &[PropertySpec],
    cfg: &EngineConfig,
    db: Option<&SummaryDb>,
) -> Result<CatapultOutcome, EngineError> {
    let plan = make_plans(g, specs, cfg)?;
    let rules = cfg.rules;
    let mut solver = Solver::new(cfg.solver.clone());
    let mut stats = AnalysisStats::default();
    let mut reach = SinkReachStore::default();
    let mut conflicts = ConflictStore::default();
    let mut out: PathsByProp = PathsByProp::new();
    let mut sinks_by_bit: BTreeMap<u32, BTreeSet<VertexId>> = BTreeMap::new();
    for spec in specs {
        out.insert(spec.bit, Vec::new());
        sinks_by_bit.insert(spec.bit, spec.sink_vertices(g));
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

    // Variables any edge guard mentions; a source whose variable stays
    // out of this set cannot couple with guards, which is what licenses
    // joint queries.
    let mut guard_vars: BTreeSet<String> = BTreeSet::new();
    for e in &g.edges {
        for a in &e.guard {
            for v in a.vars() {
                guard_vars.insert(v.to_owned());
            }
        }
    }

    let mut skeleton_budget = cfg.skeleton_budget;

    for (gi, group) in plan.groups.iter().enumerate() {
        let has_later = gi + 1 < plan.groups.len();
        let recording = has_later && (rules.enabled(3) || rules.enabled(4));
        let mut live_all = PropSet::empty();
        for &m in &group.members {
            live_all.insert(m);
        }
        for &source in &group.sources {
            let mut pscs: BTreeMap<u32, Condition> = BTreeMap::new();
            for &m in &group.members {
                pscs.insert(m, specs[m as usize].instantiate_psc(g, source));
            }
            let gate = !guard_vars.contains(&g.vertex(source).variable);
            let tree = candidates.as_ref().map(|c| {
                let mine: BTreeSet<&Path> = group
                    .members
                    .iter()
                    .flat_map(|b| c[b].iter())
                    .filter(|p| p.head() == source)
                    .collect();
                let list: Vec<&Path> = mine.into_iter().collect();
                PrefixTree::build(source, &list)
            });
            let mut walk = CatWalk {
                g,
                tree: tree.as_ref(),
                pscs: &pscs,
                sinks: &sinks_by_bit,
                check_order: &group.check_order,
                implications: &group.implications,
                joint_pairs: &group.joint_pairs,
                exhaustive_pairs: &group.exhaustive_pairs,
                rules,
                gate,
                recording,
                record_conds: &group.record_conds,
                source,
                solver: &mut solver,
                stats: &mut stats,
                out: &mut out,
                reach: &reach,
                conflicts: &mut conflicts,
                guards: Vec::new(),
                guard_lens: Vec::new(),
                path: Path::single(source),
                path_edges: BTreeSet::new(),
                stack: Vec::new(),
            };
            walk.visit(source, 0, live_all)?;
            if rules.enabled(2) && !group.record_reach.is_empty() {
                let mut skel = Skeleton {
                    g,
                    bits: group.record_reach,
                    sinks: &sinks_by_bit,
                    reach: &mut reach,
                    budget: &mut skeleton_budget,
                    seen: BTreeSet::new(),
                };
                skel.run(source, &mut Vec::new());
            }
        }
    }

    for paths in out.values_mut() {
        paths.sort();
        paths.dedup();
    }
    stats.solver = solver.counters;
    Ok(CatapultOutcome { paths: out, stats, plan, reach, conflicts })
}

struct CatWalk<'a> {
    g: &'a ValueFlowGraph,
    tree: Option<&'a PrefixTree>,
    pscs: &'a BTreeMap<u32, Condition>,
    sinks: &'a BTreeMap<u32, BTreeSet<VertexId>>,
    check_order: &'a [u32],
    implications: &'a [(u32, u32)],
    joint_pairs: &'a [(u32, u32)],
    exhaustive_pairs: &'a [(u32, u32)],
    rules: RuleMask,
    /// Joint queries allowed: no edge guard mentions the source variable.
    gate: bool,
    /// Later groups exist and conflict recording is on.
    recording: bool,
    record_conds: &'a [Condition],
    source: VertexId,
    solver: &'a mut Solver,
    stats: &'a mut AnalysisStats,
    out: &'a mut PathsByProp,
    reach: &'a SinkReachStore,
    conflicts: &'a mut ConflictStore,
    guards: Vec<Atom>,
    guard_lens: Vec<usize>,
    path: Path,
    path_edges: BTreeSet<EdgeId>,
    stack: Vec<SiteId>,
}

impl CatWalk<'_> {
    fn visit(&mut self, v: VertexId, node: usize, live_in: PropSet) -> Result<(), SolverError> {
        self.stats.vertices_visited += 1;
        let mut live = live_in;

        if self.rules.enabled(2) {
            for bit in live_in.iter() {
                if self.reach.get(v, bit) == Some(false) {
                    live.remove(bit);
                    self.stats.pruned_rule2 += 1;
                }
            }
        }

        if (self.rules.enabled(3) || self.rules.enabled(4)) && !live.is_empty() {
            for idx in self.conflicts.applicable(&self.path_edges) {
                if live.is_empty() {
                    break;
                }
                let mut dropped = PropSet::empty();
                for bit in live.iter() {
                    if self.conflicts.rules_out(idx, &self.pscs[&bit], self.rules, self.solver)? {
                        dropped.insert(bit);
                    }
                }
                for bit in dropped.iter() {
                    live.remove(bit);
                    self.stats.pruned_rule34 += 1;
                }
            }
        }

        if live.is_empty() {
            return Ok(());
        }

        // Resolve every live member's state condition at this vertex,
        // spending as few queries as the relations allow.
        let order: Vec<u32> =
            self.check_order.iter().copied().filter(|b| live.contains(*b)).collect();
        let mut status: BTreeMap<u32, bool> = BTreeMap::new();
        let mut pc_sat_known = false;
        for (i, &m) in order.iter().enumerate() {
            if status.contains_key(&m) {
                self.stats.psc_checks_saved += 1;
                continue;
            }
            let pc = Condition::conj_atoms(&self.guards);
            let mut done = false;
            if self.rules.enabled(7) && self.gate {
                let partner = order[i + 1..]
                    .iter()
                    .copied()
                    .find(|&n| !status.contains_key(&n) && pair_listed(self.joint_pairs, m, n));
                if let Some(n) = partner {
                    let q = pc
                        .clone()
                        .and(self.pscs[&m].clone())
                        .and(self.pscs[&n].clone());
                    if self.solver.is_sat(&q)? {
                        status.insert(m, true);
                        status.insert(n, true);
                        pc_sat_known = true;
                        done = true;
                    } else if !self.solver.probe_sat(&pc)? {
                        // The pair is jointly satisfiable and decoupled
                        // from the guards, so the miss is the path's own.
                        bulk_false(&order, &mut status);
                        self.record_infeasible()?;
                        done = true;
                    }
                }
            }
            if !done {
                let q = pc.clone().and(self.pscs[&m].clone());
                let sat = self.solver.is_sat(&q)?;
                status.insert(m, sat);
                if sat {
                    pc_sat_known = true;
                } else {
                    self.on_member_unsat(m, &pc, &order, &mut status, live, &mut pc_sat_known)?;
                }
            }
            if self.rules.enabled(6) {
                propagate_implications(self.implications, live, &mut status);
            }
        }
        debug_assert!(order.iter().all(|m| status.contains_key(m)));

        for &m in &order {
            if status[&m] {
                if self.sinks[&m].contains(&v) {
                    self.out.get_mut(&m).unwrap().push(FeasiblePath {
                        bit: m,
                        source: self.source,
                        sink: v,
                        path: self.path.clone(),
                        pc: Condition::conj_atoms(&self.guards),
                    });
                }
            } else {
                live.remove(m);
                self.stats.pruned_psc += 1;
            }
        }
        if live.is_empty() {
            return Ok(());
        }

        match self.tree {
            None => {
                for &e in self.g.out_edges(v) {
                    let edge = self.g.edge(e);
                    let delta = match edge.kind {
                        EdgeKind::Intra => StackDelta::Keep,
                        EdgeKind::CallBind(s) => StackDelta::Push(s),
                        EdgeKind::RetBind(s) => match self.stack.last() {
                            None => StackDelta::Keep,
                            Some(&top) if top == s => StackDelta::Pop(s),
                            Some(_) => continue,
                        },
                    };
                    self.descend(e, edge.dst, 0, delta, live)?;
                }
            }
            Some(tree) => {
                for i in 0..tree.nodes[node].children.len() {
                    let (e, child) = tree.nodes[node].children[i];
                    let dst = tree.nodes[child].vertex;
                    self.descend_tree(e, dst, child, live)?;
                }
            }
        }
        Ok(())
    }

    fn descend_tree(
        &mut self,
        e: EdgeId,
        dst: VertexId,
        node: usize,
        live: PropSet,
    ) -> Result<(), SolverError> {
        self.descend(e, dst, node, StackDelta::Keep, live)
    }

    fn descend(
        &mut self,
        e: EdgeId,
        dst: VertexId,
        node: usize,
        delta: StackDelta,
        live: PropSet,
    ) -> Result<(), SolverError> {
        self.probe_edge_conflicts(e)?;
        match delta {
            StackDelta::Push(s) => self.stack.push(s),
            StackDelta::Pop(_) => {
                self.stack.pop();
            }
            StackDelta::Keep => {}
        }
        let edge = self.g.edge(e);
        self.guard_lens.push(edge.guard.len());
        self.guards.extend(edge.guard.iter().cloned());
        self.path.push_step(e, dst);
        self.path_edges.insert(e);
        let r = self.visit(dst, node, live);
        self.path_edges.remove(&e);
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
        r
    }

    /// Hold a single edge's guard against each later state condition it
    /// fully covers; a contradiction becomes a one-edge conflict entry.
    /// This is what lets a walk that never goes unsatisfiable itself
    /// still pay forward.
    fn probe_edge_conflicts(&mut self, e: EdgeId) -> Result<(), SolverError> {
        if !self.recording || !self.rules.enabled(3) {
            return Ok(());
        }
        let edge = self.g.edge(e);
        if edge.guard.is_empty() {
            return Ok(());
        }
        let mut gvars: BTreeSet<&str> = BTreeSet::new();
        for a in &edge.guard {
            gvars.extend(a.vars());
        }
        for cond in self.record_conds {
            if !self.conflicts.first_probe(e, cond) {
                continue;
            }
            let cvars = cond.vars();
            if !gvars.iter().all(|v| cvars.contains(v)) {
                continue;
            }
            let q = edge.guard_condition().and(cond.clone());
            if !self.solver.probe_sat(&q)? {
                self.conflicts.insert(alloc::vec![e], ConflictKind::Core { psc: cond.clone() });
            }
        }
        Ok(())
    }

    fn on_member_unsat(
        &mut self,
        m: u32,
        pc: &Condition,
        order: &[u32],
        status: &mut BTreeMap<u32, bool>,
        live: PropSet,
        pc_sat_known: &mut bool,
    ) -> Result<(), SolverError> {
        let others_unresolved =
            order.iter().any(|&n| n != m && !status.contains_key(&n));
        if !*pc_sat_known {
            if !(others_unresolved || self.recording) {
                return Ok(());
            }
            if !self.solver.probe_sat(pc)? {
                bulk_false(order, status);
                self.record_infeasible()?;
                return Ok(());
            }
            *pc_sat_known = true;
        }

        // The path survives on its own, so the conflict involves the
        // state condition; worth generalizing and keeping.
        if self.recording {
            let psc = &self.pscs[&m];
            let want_core = self.rules.enabled(3) && self.record_conds.contains(psc);
            let want_interp = self.rules.enabled(4)
                && self
                    .record_conds
                    .iter()
                    .any(|c| c.vars().intersection(&psc.vars()).next().is_some());
            if want_core || want_interp {
                let core = self.solver.unsat_core(&self.guards, psc)?;
                let edges = self.attribute_edges(&core);
                if want_core {
                    self.conflicts.insert(edges.clone(), ConflictKind::Core { psc: psc.clone() });
                }
                if want_interp {
                    if let Some(gamma) = self.solver.interpolant(&core, psc)? {
                        self.conflicts.insert(edges, ConflictKind::Interp { gamma });
                    }
                }
            }
        }

        // A disjoint pair covering the domain: the path condition splits
        // entirely between the two sides, so with the path alive and this
        // side empty, the other side must hold somewhere.
        if self.rules.enabled(8) && *pc_sat_known {
            for &(a, b) in self.exhaustive_pairs {
                let other = if a == m {
                    b
                } else if b == m {
                    a
                } else {
                    continue;
                };
                if live.contains(other) && !status.contains_key(&other) {
                    status.insert(other, true);
                }
            }
        }
        Ok(())
    }

    fn record_infeasible(&mut self) -> Result<(), SolverError> {
        if !self.recording || !self.rules.enabled(3) {
            return Ok(());
        }
        let core = self.solver.unsat_core(&self.guards, &Condition::True)?;
        let edges = self.attribute_edges(&core);
        self.conflicts.insert(edges, ConflictKind::Infeasible);
        Ok(())
    }

    /// Map core atoms back to the earliest path edges carrying them.
    fn attribute_edges(&self, core: &[Atom]) -> Vec<EdgeId> {
        let mut out = Vec::new();
        for a in core {
            for &e in self.path.edges() {
                if self.g.edge(e).guard.contains(a) {
                    out.push(e);
                    break;
                }
            }
        }
        debug_assert_eq!(out.len(), core.len());
        out
    }
}

fn pair_listed(pairs: &[(u32, u32)], m: u32, n: u32) -> bool {
    pairs.iter().any(|&(a, b)| (a == m && b == n) || (a == n && b == m))
}

fn bulk_false(order: &[u32], status: &mut BTreeMap<u32, bool>) {
    for &n in order {
        status.entry(n).or_insert(false);
    }
}

fn propagate_implications(
    implications: &[(u32, u32)],
    live: PropSet,
    status: &mut BTreeMap<u32, bool>,
) {
    loop {
        let mut changed = false;
        for &(a, b) in implications {
            if status.get(&a) == Some(&true) && live.contains(b) && !status.contains_key(&b) {
                status.insert(b, true);
                changed = true;
            }
            if status.get(&b) == Some(&false) && live.contains(a) && !status.contains_key(&a) {
                status.insert(a, false);
                changed = true;
            }
        }
        if !changed {
            return;
        }
    }
}

#[derive(Clone, Copy)]
enum StackDelta {
    Keep,
    Push(SiteId),
    Pop(SiteId),
}

/// Structural coverage walk: no solver, no path conditions, just enough
/// realizable exploration to finalize sink reachability at stack-neutral
/// vertices. Budgeted; running out leaves entries unknown, which is
/// always safe.
struct Skeleton<'a> {
    g: &'a ValueFlowGraph,
    bits: PropSet,
    sinks: &'a BTreeMap<u32, BTreeSet<VertexId>>,
    reach: &'a mut SinkReachStore,
    budget: &'a mut u64,
    seen: BTreeSet<(VertexId, Vec<SiteId>)>,
}

impl Skeleton<'_> {
    fn run(&mut self, v: VertexId, stack: &mut Vec<SiteId>) {
        if *self.budget == 0 {
            return;
        }
        if !self.seen.insert((v, stack.clone())) {
            return;
        }
        *self.budget -= 1;
        for &e in self.g.out_edges(v) {
            let edge = self.g.edge(e);
            match edge.kind {
                EdgeKind::Intra => self.run(edge.dst, stack),
                EdgeKind::CallBind(s) => {
                    stack.push(s);
                    self.run(edge.dst, stack);
                    stack.pop();
                }
                EdgeKind::RetBind(s) => match stack.last() {
                    None => self.run(edge.dst, stack),
                    Some(&top) if top == s => {
                        stack.pop();
                        self.run(edge.dst, stack);
                        stack.push(s);
                    }
                    Some(_) => {}
                },
            }
        }
        if stack.is_empty() {
            self.finalize(v);
        }
    }

    /// A vertex with every successor decided gets decided itself; a sink
    /// is always reachable from itself.
    fn finalize(&mut self, v: VertexId) {
        'bits: for bit in self.bits.iter() {
            if self.reach.get(v, bit).is_some() {
                continue;
            }
            if self.sinks[&bit].contains(&v) {
                self.reach.set(v, bit, true);
                continue;
            }
            let mut any = false;
            for &e in self.g.out_edges(v) {
                match self.reach.get(self.g.edge(e).dst, bit) {
                    None => continue 'bits,
                    Some(true) => any = true,
                    Some(false) => {}
                }
            }
            self.reach.set(v, bit, any);
        }
    }
}
