//! The baseline engine against ground truth: exhaustive realizable-path
//! enumeration with one satisfiability probe per candidate, and
//! aggregation verdicts against exhaustive evaluation over the domain.

mod common;

use common::{
    enumerated_sat, instance, load, oracle_bugs, oracle_paths, BugShape, FIXTURE_PAIRS,
};
use vflow_core::aggregate::Verdict;
use vflow_core::cond::{parse_atom, Condition};
use vflow_core::engine::{check_naive, EngineConfig};
use vflow_core::solver::SolverConfig;
use vflow_core::workload::GenParams;
use vflow_core::{analyze, EngineKind};

#[test]
fn naive_matches_oracle_on_fixtures() {
    for &(gf, pf) in FIXTURE_PAIRS {
        let (g, specs) = load(gf, pf);
        let cfg = EngineConfig::default();
        let (paths, _) = check_naive(&g, &specs, &cfg, None).unwrap();
        assert_eq!(paths, oracle_paths(&g, &specs, &cfg), "{} + {}", gf, pf);
    }
}

#[test]
fn naive_matches_oracle_on_small_instances() {
    for seed in 0..300u64 {
        let functions = 1 + (seed % 2) as u32;
        let params = GenParams {
            functions,
            verts_min: 3,
            verts_max: if functions == 1 { 10 } else { 5 },
            properties: 1 + (seed % 6) as u32,
            ..GenParams::default()
        };
        let (g, specs) = instance(seed, &params);
        let cfg = EngineConfig::default();
        let (paths, _) = check_naive(&g, &specs, &cfg, None).unwrap();
        assert_eq!(paths, oracle_paths(&g, &specs, &cfg), "seed {}", seed);
    }
}

#[test]
fn aggregation_matches_domain_enumeration_on_fixtures() {
    for &(gf, pf) in FIXTURE_PAIRS {
        let (g, specs) = load(gf, pf);
        let cfg = EngineConfig {
            solver: SolverConfig::with_domain_bound(4),
            ..EngineConfig::default()
        };
        let out = analyze(&g, &specs, EngineKind::Naive, &cfg, None).unwrap();
        let want = oracle_bugs(&g, &specs, &cfg);
        for (prop, expect) in out.properties.iter().zip(&want) {
            let got: Vec<BugShape> = prop
                .bugs
                .iter()
                .map(|b| BugShape {
                    property: b.property.clone(),
                    verdict: b.verdict.clone(),
                    source: b.source,
                    witness: b.witness.clone(),
                })
                .collect();
            assert_eq!(&got, expect, "{} + {} property {}", gf, pf, prop.name);
            // Every reported condition must actually be satisfiable.
            for b in &prop.bugs {
                assert!(
                    enumerated_sat(&b.condition, cfg.solver.domain_min, cfg.solver.domain_max),
                    "{} + {}: unsatisfiable bug condition {:?}",
                    gf,
                    pf,
                    b.condition
                );
            }
        }
    }
}

#[test]
fn aggregation_matches_domain_enumeration_on_small_instances() {
    for seed in 0..120u64 {
        let params = GenParams {
            functions: 1 + (seed % 2) as u32,
            verts_min: 3,
            verts_max: 5,
            properties: 1 + (seed % 5) as u32,
            ..GenParams::default()
        };
        let (g, specs) = instance(seed, &params);
        // A domain this small keeps exhaustive evaluation cheap; both
        // sides of the comparison live on the same domain.
        let cfg = EngineConfig {
            solver: SolverConfig::with_domain_bound(2),
            ..EngineConfig::default()
        };
        let out = analyze(&g, &specs, EngineKind::Naive, &cfg, None).unwrap();
        let want = oracle_bugs(&g, &specs, &cfg);
        for (prop, expect) in out.properties.iter().zip(&want) {
            let got: Vec<BugShape> = prop
                .bugs
                .iter()
                .map(|b| BugShape {
                    property: b.property.clone(),
                    verdict: b.verdict.clone(),
                    source: b.source,
                    witness: b.witness.clone(),
                })
                .collect();
            assert_eq!(&got, expect, "seed {} property {}", seed, prop.name);
        }
    }
}

/// The allocation fixture's two heap properties, pinned to their closed
/// forms. With every branch flag independently satisfiable, the pair
/// verdict is the truth value of (x1>0 && x2>0) && (x1>0 && x4>0) &&
/// p != 0, and the leak verdict is !((x1>0 && x2>0) || (x1>0 && x4>0))
/// && x1>0 && p != 0, both decided by full enumeration over the domain.
#[test]
fn running_example_pair_and_leak_formulas() {
    let (g, specs) = load("running_example.vfg", "heapcheck.prop");
    let cfg = EngineConfig {
        solver: SolverConfig::with_domain_bound(4),
        ..EngineConfig::default()
    };
    let (lo, hi) = (cfg.solver.domain_min, cfg.solver.domain_max);

    let atom = |s: &str| Condition::Atom(parse_atom(s).unwrap());
    let free_b = atom("x1 > 0").and(atom("x2 > 0"));
    let free_d = atom("x1 > 0").and(atom("x4 > 0"));
    for part in [&free_b, &free_d] {
        assert!(enumerated_sat(part, lo, hi), "branch guards must be satisfiable");
    }
    let pair = free_b.clone().and(free_d.clone()).and(atom("p != 0"));
    let leak = Condition::Or(Box::new(free_b), Box::new(free_d))
        .negate()
        .and(atom("x1 > 0"))
        .and(atom("p != 0"));

    for kind in [EngineKind::Naive, EngineKind::Catapult] {
        let out = analyze(&g, &specs, kind, &cfg, None).unwrap();
        let double_free = &out.properties[0];
        let mem_leak = &out.properties[1];
        assert_eq!(double_free.name, "double-free");
        assert_eq!(mem_leak.name, "mem-leak");

        let pair_bugs: Vec<_> =
            double_free.bugs.iter().filter(|b| b.verdict == Verdict::PairBug).collect();
        assert_eq!(!pair_bugs.is_empty(), enumerated_sat(&pair, lo, hi), "{:?}", kind);
        assert_eq!(pair_bugs.len(), 1, "{:?}", kind);
        assert_eq!(pair_bugs[0].witness.len(), 2);

        let leak_bugs: Vec<_> =
            mem_leak.bugs.iter().filter(|b| b.verdict == Verdict::LeakBug).collect();
        assert_eq!(!leak_bugs.is_empty(), enumerated_sat(&leak, lo, hi), "{:?}", kind);
        assert_eq!(leak_bugs.len(), 1, "{:?}", kind);
        assert_eq!(g.vname(leak_bugs[0].source), "p");
    }
}
