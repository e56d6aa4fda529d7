//! Path-sensitive search engines.
//!
//! Both engines answer the same question: for every property, which
//! realizable source-to-sink paths have a satisfiable path condition
//! together with the property's state condition? [`check_naive`] walks
//! once per property per source and asks the solver at every vertex.
//! [`check_catapult`] plans one shared pass over grouped properties and
//! reuses work across them; it reports the same paths with fewer solver
//! queries.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::cond::Condition;
use crate::graph::VertexId;
use crate::paths::Path;
use crate::solver::{SolverConfig, SolverCounters, SolverError};
use crate::summaries::SummaryError;

mod catapult;
mod naive;
mod plan;

pub use catapult::{check_catapult, CatapultOutcome, ConflictEntry, ConflictKind, ConflictStore, SinkReachStore};
pub use naive::check_naive;
pub use plan::{make_plans, Plan, PlanGroup, RuleMask};

/// One witness: a realizable source-to-sink path whose guards are jointly
/// satisfiable with the property's instantiated state condition.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct FeasiblePath {
    /// Property bit this path witnesses.
    pub bit: u32,
    pub source: VertexId,
    pub sink: VertexId,
    pub path: Path,
    /// Conjunction of the edge guards along the path (state condition not
    /// included; aggregation adds it back as needed).
    pub pc: Condition,
}

pub type PathsByProp = BTreeMap<u32, Vec<FeasiblePath>>;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AnalysisStats {
    /// Vertex visits across all property walks (skeleton coverage walks
    /// not included).
    pub vertices_visited: u64,
    pub solver: SolverCounters,
    /// Subtree abandonments because a property's state condition went
    /// unsatisfiable with the path condition.
    pub pruned_psc: u64,
    /// Drops because recorded reachability says no sink lies ahead.
    pub pruned_rule2: u64,
    /// Drops because a recorded conflict (unsat core or interpolant)
    /// applied to the current path.
    pub pruned_rule34: u64,
    /// Member checks resolved without their own solver query (shared
    /// queries, implication, exhaustive-pair inference).
    pub psc_checks_saved: u64,
}

impl AnalysisStats {
    pub fn absorb(&mut self, other: &AnalysisStats) {
        self.vertices_visited += other.vertices_visited;
        self.solver.absorb(&other.solver);
        self.pruned_psc += other.pruned_psc;
        self.pruned_rule2 += other.pruned_rule2;
        self.pruned_rule34 += other.pruned_rule34;
        self.psc_checks_saved += other.psc_checks_saved;
    }
}

/// Whether walks run over the whole graph or over candidates stitched
/// from function summaries.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Mode {
    #[default]
    Intra,
    Summary,
}

#[derive(Clone, Debug)]
pub struct EngineConfig {
    pub solver: SolverConfig,
    pub mode: Mode,
    pub rules: RuleMask,
    /// Property names; groups containing these properties run in the
    /// given order instead of the sink-count order.
    pub forced_order: Option<Vec<String>>,
    /// Visit budget for the structural coverage walks that finalize sink
    /// reachability.
    pub skeleton_budget: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            solver: SolverConfig::default(),
            mode: Mode::Intra,
            rules: RuleMask::all(),
            forced_order: None,
            skeleton_budget: 100_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EngineError {
    Solver(SolverError),
    Summary(SummaryError),
    /// A forced order named a property that does not exist.
    UnknownProperty(String),
}

impl fmt::Display for EngineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EngineError::Solver(e) => write!(f, "{}", e),
            EngineError::Summary(e) => write!(f, "{}", e),
            EngineError::UnknownProperty(name) => {
                write!(f, "order names unknown property `{}`", name)
            }
        }
    }
}

impl From<SolverError> for EngineError {
    fn from(e: SolverError) -> Self {
        EngineError::Solver(e)
    }
}

impl From<SummaryError> for EngineError {
    fn from(e: SummaryError) -> Self {
        EngineError::Summary(e)
    }
}
