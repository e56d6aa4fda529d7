//! One-call driver: pick an engine, walk, aggregate, report.

use alloc::string::String;
use alloc::vec::Vec;

use crate::aggregate::{aggregate_property, BugReport};
use crate::engine::{
    check_catapult, check_naive, AnalysisStats, EngineConfig, FeasiblePath,
};
pub use crate::engine::EngineError as AnalyzeError;
use crate::graph::ValueFlowGraph;
use crate::props::PropertySpec;
use crate::solver::Solver;
use crate::summaries::SummaryDb;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EngineKind {
    Naive,
    Catapult,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PropertyResult {
    pub name: String,
    pub paths: Vec<FeasiblePath>,
    pub bugs: Vec<BugReport>,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    /// Human-readable traversal plan; present for the shared-pass engine.
    pub plan: Option<String>,
    /// Per property, in spec order.
    pub properties: Vec<PropertyResult>,
    /// Walk stats plus the aggregation-side solver counters.
    pub stats: AnalysisStats,
}

/// Run the full pipeline. Aggregation queries share one solver whose
/// counters fold into the returned stats; the engine-only numbers are
/// what the walk itself cost.
pub fn analyze(
    g: &ValueFlowGraph,
    specs: &[PropertySpec],
    kind: EngineKind,
    cfg: &EngineConfig,
    db: Option<&SummaryDb>,
) -> Result<RunOutcome, AnalyzeError> {
    let (mut paths, mut stats, plan) = match kind {
        EngineKind::Naive => {
            let (p, s) = check_naive(g, specs, cfg, db)?;
            (p, s, None)
        }
        EngineKind::Catapult => {
            let o = check_catapult(g, specs, cfg, db)?;
            (o.paths, o.stats, Some(o.plan.describe(g)))
        }
    };

    let mut agg_solver = Solver::new(cfg.solver.clone());
    let mut properties = Vec::new();
    for spec in specs {
        let prop_paths = paths.remove(&spec.bit).unwrap_or_default();
        let bugs = aggregate_property(g, spec, &prop_paths, &mut agg_solver)?;
        properties.push(PropertyResult { name: spec.name.clone(), paths: prop_paths, bugs });
    }
    stats.solver.absorb(&agg_solver.counters);
    Ok(RunOutcome { plan, properties, stats })
}
