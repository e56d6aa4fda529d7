//! Shared pieces for the integration tests: fixture loading, seeded
//! instances, and the reference oracles the engines are held against.

#![allow(dead_code)]

use std::collections::BTreeMap;

use vflow_core::cond::Condition;
use vflow_core::engine::{EngineConfig, FeasiblePath, PathsByProp};
use vflow_core::graph::{ValueFlowGraph, VertexId};
use vflow_core::parse::parse_program;
use vflow_core::paths::{enumerate_paths, Path};
use vflow_core::props::{parse_props, AggKind, PropertySpec};
use vflow_core::solver::Solver;
use vflow_core::workload::{gen_workload, GenParams};

/// Graph/property fixture pairings exercised across the suite.
pub const FIXTURE_PAIRS: &[(&str, &str)] = &[
    ("running_example.vfg", "demo.prop"),
    ("running_example.vfg", "heapcheck.prop"),
    ("interproc.vfg", "threeway.prop"),
    ("rules34.vfg", "rules34.prop"),
    ("rule7.vfg", "rule7.prop"),
    ("rule8.vfg", "rule8.prop"),
    ("loop_free.vfg", "loop_free.prop"),
];

pub fn fixture(name: &str) -> String {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("fixture {}: {}", name, e))
}

pub fn load(graph_name: &str, props_name: &str) -> (ValueFlowGraph, Vec<PropertySpec>) {
    let g = parse_program(&fixture(graph_name))
        .unwrap_or_else(|e| panic!("{}: {}", graph_name, e));
    let specs = parse_props(&fixture(props_name))
        .unwrap_or_else(|e| panic!("{}: {}", props_name, e));
    (g, specs)
}

pub fn instance(seed: u64, params: &GenParams) -> (ValueFlowGraph, Vec<PropertySpec>) {
    let w = gen_workload(seed, params);
    let g = parse_program(&w.graph_text)
        .unwrap_or_else(|e| panic!("seed {} graph: {}", seed, e));
    let specs = parse_props(&w.props_text)
        .unwrap_or_else(|e| panic!("seed {} props: {}", seed, e));
    (g, specs)
}

pub fn path_condition(g: &ValueFlowGraph, p: &Path) -> Condition {
    let atoms: Vec<_> =
        p.edges().iter().flat_map(|&e| g.edge(e).guard.iter().cloned()).collect();
    Condition::conj_atoms(&atoms)
}

/// Ground truth for the engines: every realizable source-to-sink path,
/// kept when its guards are satisfiable together with the instantiated
/// state condition. Sorted and deduplicated like the engines' output.
pub fn oracle_paths(
    g: &ValueFlowGraph,
    specs: &[PropertySpec],
    cfg: &EngineConfig,
) -> PathsByProp {
    let solver = Solver::new(cfg.solver.clone());
    let mut out = PathsByProp::new();
    for spec in specs {
        let sinks = spec.sink_vertices(g);
        let mut found: Vec<FeasiblePath> = Vec::new();
        for source in spec.source_vertices(g) {
            let psc = spec.instantiate_psc(g, source);
            for path in enumerate_paths(g, &[source], &sinks) {
                let pc = path_condition(g, &path);
                let q = pc.clone().and(psc.clone());
                if solver.probe_sat(&q).expect("oracle query within budget") {
                    found.push(FeasiblePath {
                        bit: spec.bit,
                        source,
                        sink: path.tail(),
                        path,
                        pc,
                    });
                }
            }
        }
        found.sort();
        found.dedup();
        out.insert(spec.bit, found);
    }
    out
}

/// Satisfiability by exhaustive evaluation over the domain. Shares only
/// `Condition::eval` with the solver, so it can sit in judgment of it.
pub fn enumerated_sat(cond: &Condition, lo: i64, hi: i64) -> bool {
    fn go<'a>(
        cond: &'a Condition,
        vars: &[&'a str],
        i: usize,
        lo: i64,
        hi: i64,
        env: &mut BTreeMap<&'a str, i64>,
    ) -> bool {
        if i == vars.len() {
            return cond.eval(env);
        }
        for value in lo..=hi {
            env.insert(vars[i], value);
            if go(cond, vars, i + 1, lo, hi, env) {
                return true;
            }
        }
        env.remove(vars[i]);
        false
    }
    let vars: Vec<&str> = cond.vars().into_iter().collect();
    go(cond, &vars, 0, lo, hi, &mut BTreeMap::new())
}

/// A bug stripped to what the verdict says: which property, which kind,
/// where, witnessed by what.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct BugShape {
    pub property: String,
    pub verdict: vflow_core::aggregate::Verdict,
    pub source: VertexId,
    pub witness: Vec<Path>,
}

/// Expected verdicts per property, decided by exhaustive evaluation over
/// the solver's domain instead of the solver.
pub fn oracle_bugs(
    g: &ValueFlowGraph,
    specs: &[PropertySpec],
    cfg: &EngineConfig,
) -> Vec<Vec<BugShape>> {
    use vflow_core::aggregate::Verdict;
    let (lo, hi) = (cfg.solver.domain_min, cfg.solver.domain_max);
    let all_paths = oracle_paths(g, specs, cfg);
    let mut out = Vec::new();
    for spec in specs {
        let paths = &all_paths[&spec.bit];
        let mut bugs: Vec<BugShape> = Vec::new();
        match spec.agg {
            AggKind::Never => {
                for p in paths {
                    bugs.push(BugShape {
                        property: spec.name.clone(),
                        verdict: Verdict::PathBug,
                        source: p.source,
                        witness: vec![p.path.clone()],
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
                        if enumerated_sat(&cond, lo, hi) {
                            bugs.push(BugShape {
                                property: spec.name.clone(),
                                verdict: Verdict::PairBug,
                                source: a.source,
                                witness: vec![a.path.clone(), b.path.clone()],
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
                    if enumerated_sat(&cond, lo, hi) {
                        bugs.push(BugShape {
                            property: spec.name.clone(),
                            verdict: Verdict::LeakBug,
                            source,
                            witness: vec![Path::single(source)],
                        });
                    }
                }
            }
        }
        bugs.sort_by(|x, y| x.source.cmp(&y.source).then_with(|| x.witness.cmp(&y.witness)));
        out.push(bugs);
    }
    out
}
