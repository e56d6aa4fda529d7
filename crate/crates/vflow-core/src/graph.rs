//! The value-flow graph: one vertex per (variable, statement) occurrence,
//! guarded directed edges for value flow, and a function table with the
//! inter-procedural bind edges already materialized.
//!
//! Graphs are built by [`crate::parse::parse_program`]; this module is the
//! passive data model plus cheap accessors. Vertex and edge ids are dense
//! indices in declaration order, which is also the deterministic traversal
//! order used everywhere else.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::cond::{Atom, Condition};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct VertexId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct EdgeId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct FnId(pub u32);

/// Identity of one call statement: every `arg`/`ret` vertex written with
/// the same site tag against the same callee belongs to one call, and bind
/// edges only match up within a site.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct SiteId(pub u32);

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum CallPos {
    Ret,
    Arg(u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum LoadPos {
    Result,
    Operand,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum StorePos {
    Stored,
    Address,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum StatementKind {
    /// The value returned by, or an argument of, one call statement.
    Call { callee: String, position: CallPos, site: SiteId },
    Load(LoadPos),
    Store(StorePos),
    Assign,
    Global,
    /// Value entering a function at parameter position `k`.
    FormalParam(u32),
    /// Value leaving a function through its return.
    FormalRet,
    /// Uninterpreted statement; patterns never match it.
    Other(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vertex {
    pub id: VertexId,
    /// Textual id from the source form, unique per graph.
    pub name: String,
    pub variable: String,
    pub statement: StatementKind,
    pub function: FnId,
    /// Condition under which the statement executes at all; `True` unless
    /// the source form says otherwise.
    pub occurrence_condition: Condition,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum EdgeKind {
    Intra,
    /// Actual argument into formal parameter, at the given site.
    CallBind(SiteId),
    /// Formal return back into the call's result, at the given site.
    RetBind(SiteId),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub id: EdgeId,
    pub src: VertexId,
    pub dst: VertexId,
    /// Guard conjunction; empty means always taken.
    pub guard: Vec<Atom>,
    pub kind: EdgeKind,
}

impl Edge {
    pub fn guard_condition(&self) -> Condition {
        Condition::conj_atoms(&self.guard)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionInfo {
    pub name: String,
    pub arity: u32,
    /// Vertices declared inside this function, in declaration order.
    pub vertices: Vec<VertexId>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SiteInfo {
    pub caller: FnId,
    pub callee: FnId,
    /// Site tag from the source form; one call statement per tag.
    pub tag: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValueFlowGraph {
    pub vertices: Vec<Vertex>,
    pub edges: Vec<Edge>,
    pub functions: Vec<FunctionInfo>,
    pub sites: Vec<SiteInfo>,
    /// Callees per function, by id.
    pub call_graph: Vec<BTreeSet<FnId>>,
    /// Outgoing edge ids per vertex, sorted by (destination, edge id).
    out: Vec<Vec<EdgeId>>,
}

impl ValueFlowGraph {
    /// Assemble the derived tables. Called once by the parser after all
    /// vertices and edges exist.
    pub(crate) fn assemble(
        vertices: Vec<Vertex>,
        edges: Vec<Edge>,
        functions: Vec<FunctionInfo>,
        sites: Vec<SiteInfo>,
    ) -> ValueFlowGraph {
        let mut out: Vec<Vec<EdgeId>> = alloc::vec![Vec::new(); vertices.len()];
        for e in &edges {
            out[e.src.0 as usize].push(e.id);
        }
        for list in &mut out {
            list.sort_by_key(|e| {
                let edge = &edges[e.0 as usize];
                (edge.dst, edge.id)
            });
        }
        let mut call_graph: Vec<BTreeSet<FnId>> = alloc::vec![BTreeSet::new(); functions.len()];
        for s in &sites {
            call_graph[s.caller.0 as usize].insert(s.callee);
        }
        ValueFlowGraph { vertices, edges, functions, sites, call_graph, out }
    }

    pub fn vertex(&self, id: VertexId) -> &Vertex {
        &self.vertices[id.0 as usize]
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id.0 as usize]
    }

    pub fn function(&self, id: FnId) -> &FunctionInfo {
        &self.functions[id.0 as usize]
    }

    pub fn site(&self, id: SiteId) -> &SiteInfo {
        &self.sites[id.0 as usize]
    }

    pub fn out_edges(&self, v: VertexId) -> &[EdgeId] {
        &self.out[v.0 as usize]
    }

    /// Smallest-id edge from `a` to `b`, if any. Parallel edges are legal;
    /// picking the smallest keeps concatenation deterministic.
    pub fn edge_between(&self, a: VertexId, b: VertexId) -> Option<EdgeId> {
        self.out[a.0 as usize]
            .iter()
            .copied()
            .find(|e| self.edge(*e).dst == b)
    }

    pub fn vertex_by_name(&self, name: &str) -> Option<VertexId> {
        self.vertices.iter().find(|v| v.name == name).map(|v| v.id)
    }

    pub fn function_by_name(&self, name: &str) -> Option<FnId> {
        self.functions
            .iter()
            .enumerate()
            .find(|(_, f)| f.name == name)
            .map(|(i, _)| FnId(i as u32))
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    /// Formal parameter vertex of `f` at position `k`, if declared.
    pub fn formal_param(&self, f: FnId, k: u32) -> Option<VertexId> {
        self.function(f)
            .vertices
            .iter()
            .copied()
            .find(|v| self.vertex(*v).statement == StatementKind::FormalParam(k))
    }

    /// Formal return vertices of `f`, in declaration order.
    pub fn formal_rets(&self, f: FnId) -> Vec<VertexId> {
        self.function(f)
            .vertices
            .iter()
            .copied()
            .filter(|v| self.vertex(*v).statement == StatementKind::FormalRet)
            .collect()
    }

    /// Pretty vertex label for reports: the declared textual id.
    pub fn vname(&self, v: VertexId) -> &str {
        &self.vertex(v).name
    }
}
