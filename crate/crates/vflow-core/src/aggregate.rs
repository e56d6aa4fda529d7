//! From feasible paths to bug verdicts.
//!
//! The engines decide which source-to-sink paths are individually
//! feasible; what counts as a bug is the property's aggregation mode:
//!
//! - `never`: every feasible path is a bug on its own (the dereference
//!   shape). No further solver work.
//! - `never-sim`: two distinct paths from one source whose conditions
//!   hold together with the state condition (the double-free shape). One
//!   joint satisfiability check per pair.
//! - `must`: a source is a bug when avoiding all its sink paths at once
//!   is possible while the source occurs (the leak shape). One check per
//!   source, including sources with no feasible path at all.

use alloc::string::String;
use alloc::vec::Vec;

use crate::cond::Condition;
use crate::engine::FeasiblePath;
use crate::graph::{ValueFlowGraph, VertexId};
use crate::paths::Path;
use crate::props::{AggKind, PropertySpec};
use crate::solver::{Solver, SolverError};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Verdict {
    /// One feasible path reaches the sink.
    PathBug,
    /// Two paths can fire together.
    PairBug,
    /// The source can occur while every sink path is avoided.
    LeakBug,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BugReport {
    pub property: String,
    pub verdict: Verdict,
    pub source: VertexId,
    /// One path for `PathBug`, two for `PairBug`, the zero-length source
    /// path for `LeakBug`.
    pub witness: Vec<Path>,
    /// The condition whose satisfiability makes this a bug.
    pub condition: Condition,
}

/// Apply the property's aggregation mode. Joint checks go through
/// `solver` and count toward whoever owns it; the per-path checks were
/// already done by the engine and are not repeated.
pub fn aggregate_property(
    g: &ValueFlowGraph,
    spec: &PropertySpec,
    paths: &[FeasiblePath],
    solver: &mut Solver,
) -> Result<Vec<BugReport>, SolverError> {
    let mut bugs = Vec::new();
    match spec.agg {
        AggKind::Never => {
            for p in paths {
                let psc = spec.instantiate_psc(g, p.source);
                bugs.push(BugReport {
                    property: spec.name.clone(),
                    verdict: Verdict::PathBug,
                    source: p.source,
                    witness: alloc::vec![p.path.clone()],
                    condition: p.pc.clone().and(psc),
                });
            }
        }
        AggKind::NeverSim => {
            for (i, a) in paths.iter().enumerate() {
                for b in &paths[i + 1..] {
                    if a.source != b.source || a.path == b.path {
                        continue;
                    }
                    let psc = spec.instantiate_psc(g, a.source);
                    let cond = a.pc.clone().and(b.pc.clone()).and(psc);
                    if solver.is_sat(&cond)? {
                        bugs.push(BugReport {
                            property: spec.name.clone(),
                            verdict: Verdict::PairBug,
                            source: a.source,
                            witness: alloc::vec![a.path.clone(), b.path.clone()],
                            condition: cond,
                        });
                    }
                }
            }
        }
        AggKind::Must => {
            for source in spec.source_vertices(g) {
                let psc = spec.instantiate_psc(g, source);
                let occurs = g.vertex(source).occurrence_condition.clone();
                let covered = Condition::disj(
                    paths.iter().filter(|p| p.source == source).map(|p| p.pc.clone()),
                );
                let cond = covered.negate().and(occurs).and(psc);
                if solver.is_sat(&cond)? {
                    bugs.push(BugReport {
                        property: spec.name.clone(),
                        verdict: Verdict::LeakBug,
                        source,
                        witness: alloc::vec![Path::single(source)],
                        condition: cond,
                    });
                }
            }
        }
    }
    bugs.sort_by(|x, y| x.source.cmp(&y.source).then_with(|| x.witness.cmp(&y.witness)));
    Ok(bugs)
}
