//! Pinned behavior of the sharing rules on the handcrafted fixtures:
//! who prunes what, where, and at what query cost.

mod common;

use common::load;
use vflow_core::aggregate::Verdict;
use vflow_core::cond::{parse_atom, Condition};
use vflow_core::engine::{
    check_catapult, check_naive, ConflictKind, EngineConfig, RuleMask,
};
use vflow_core::{analyze, AnalyzeError, EngineKind};

fn forced(names: &[&str]) -> Option<Vec<String>> {
    Some(names.iter().map(|s| s.to_string()).collect())
}

/// Walking the two-sink property first records that b and d never reach
/// the dereference, killing two subtrees of the later walk; reversing
/// the order only learns about c, killing one subtree of the free walk.
#[test]
fn recorded_reachability_depends_on_walk_order() {
    let (g, specs) = load("running_example.vfg", "demo.prop");
    let v = |name: &str| g.vertex_by_name(name).unwrap();

    let cfg = EngineConfig::default();
    let (naive_paths, naive_stats) = check_naive(&g, &specs, &cfg, None).unwrap();
    assert_eq!(naive_stats.solver.sat_queries, 16);

    // Sink-count ordering puts free-glob-ptr (two sinks) first on its own.
    let out = check_catapult(&g, &specs, &cfg, None).unwrap();
    assert_eq!(out.paths, naive_paths);
    assert_eq!(out.stats.pruned_rule2, 2);
    assert_eq!(out.stats.pruned_rule34, 0);
    assert_eq!(out.stats.solver.sat_queries, 12);
    assert_eq!(out.reach.get(v("b"), 0), Some(false));
    assert_eq!(out.reach.get(v("d"), 0), Some(false));
    assert_eq!(out.reach.get(v("c"), 0), Some(true));

    // Forcing that same order changes nothing.
    let cfg = EngineConfig {
        forced_order: forced(&["free-glob-ptr", "null-deref"]),
        ..EngineConfig::default()
    };
    let same = check_catapult(&g, &specs, &cfg, None).unwrap();
    assert_eq!(same.stats, out.stats);

    // Reversed, the single-sink walk goes first and only c's dead end
    // is known when the free walk runs.
    let cfg = EngineConfig {
        forced_order: forced(&["null-deref", "free-glob-ptr"]),
        ..EngineConfig::default()
    };
    let rev = check_catapult(&g, &specs, &cfg, None).unwrap();
    assert_eq!(rev.paths, naive_paths);
    assert_eq!(rev.stats.pruned_rule2, 1);
    assert_eq!(rev.stats.solver.sat_queries, 14);
    assert_eq!(rev.reach.get(v("c"), 1), Some(false));
    assert_eq!(rev.reach.get(v("b"), 1), Some(true));
    assert_eq!(rev.reach.get(v("d"), 1), Some(true));
}

#[test]
fn forced_order_rejects_unknown_property() {
    let (g, specs) = load("running_example.vfg", "demo.prop");
    let cfg = EngineConfig { forced_order: forced(&["no-such"]), ..EngineConfig::default() };
    let err = analyze(&g, &specs, EngineKind::Catapult, &cfg, None).unwrap_err();
    assert_eq!(err, AnalyzeError::UnknownProperty("no-such".to_string()));
}

/// The scan walk crosses the q-guarded edge while recording for
/// zeroflow, leaves a one-edge conflict behind, and zeroflow's own walk
/// drops dead at that edge without asking the solver.
#[test]
fn recorded_conflict_prunes_the_later_walk() {
    let (g, specs) = load("rules34.vfg", "rules34.prop");
    let cfg = EngineConfig::default();

    let (naive_paths, naive_stats) = check_naive(&g, &specs, &cfg, None).unwrap();
    assert_eq!(naive_stats.solver.sat_queries, 8);
    assert_eq!(naive_stats.pruned_psc, 1);

    let out = check_catapult(&g, &specs, &cfg, None).unwrap();
    assert_eq!(out.paths, naive_paths);
    assert_eq!(out.stats.solver.sat_queries, 7);
    assert_eq!(out.stats.pruned_rule34, 1);
    assert_eq!(out.stats.pruned_rule2, 0);
    // The conflict never surfaced as an unsatisfiable member check.
    assert_eq!(out.stats.pruned_psc, 0);

    let a_to_c = g
        .edge_between(g.vertex_by_name("a").unwrap(), g.vertex_by_name("c").unwrap())
        .unwrap();
    let entries = out.conflicts.entries();
    assert_eq!(entries.len(), 1);
    assert_eq!(entries[0].edges, vec![a_to_c]);
    let q_is_zero = Condition::Atom(parse_atom("q == 0").unwrap());
    assert_eq!(entries[0].kind, ConflictKind::Core { psc: q_is_zero });

    // One property found its path, the other was rightly left empty.
    assert_eq!(out.paths[&0].len(), 1);
    assert!(out.paths[&1].is_empty());
}

/// Two overlapping constraints on a variable the guards never mention:
/// one joint query per vertex settles both members.
#[test]
fn overlapping_pair_shares_one_query_per_vertex() {
    let (g, specs) = load("rule7.vfg", "rule7.prop");
    let cfg = EngineConfig::default();

    let (naive_paths, naive_stats) = check_naive(&g, &specs, &cfg, None).unwrap();
    assert_eq!(naive_stats.solver.sat_queries, 8);

    let out = check_catapult(&g, &specs, &cfg, None).unwrap();
    assert_eq!(out.paths, naive_paths);
    assert_eq!(out.plan.groups.len(), 1);
    assert_eq!(out.plan.groups[0].joint_pairs, vec![(0, 1)]);
    assert_eq!(out.stats.solver.sat_queries, 4);
    assert_eq!(out.stats.psc_checks_saved, 4);
    assert_eq!(out.paths[&0].len(), 1);
    assert_eq!(out.paths[&1].len(), 1);

    // Without the joint-query rule the same walk pays per member.
    let cfg = EngineConfig {
        rules: RuleMask::all().without(7),
        ..EngineConfig::default()
    };
    let solo = check_catapult(&g, &specs, &cfg, None).unwrap();
    assert_eq!(solo.paths, naive_paths);
    assert_eq!(solo.stats.solver.sat_queries, 8);
    assert_eq!(solo.stats.psc_checks_saved, 0);
}

/// Complementary halves of the value space: when the guard kills the
/// lower half, the partner's verdict comes for free.
#[test]
fn exhaustive_pair_decides_partner_without_a_query() {
    let (g, specs) = load("rule8.vfg", "rule8.prop");
    let cfg = EngineConfig::default();

    let (naive_paths, naive_stats) = check_naive(&g, &specs, &cfg, None).unwrap();
    assert_eq!(naive_stats.solver.sat_queries, 6);
    assert_eq!(naive_stats.pruned_psc, 1);

    let out = check_catapult(&g, &specs, &cfg, None).unwrap();
    assert_eq!(out.paths, naive_paths);
    assert_eq!(out.plan.groups.len(), 1);
    assert_eq!(out.plan.groups[0].exhaustive_pairs, vec![(0, 1)]);
    assert_eq!(out.stats.solver.sat_queries, 5);
    assert_eq!(out.stats.psc_checks_saved, 1);
    assert_eq!(out.stats.pruned_psc, 1);
    assert!(out.paths[&0].is_empty(), "the lower half dies at the guard");
    assert_eq!(out.paths[&1].len(), 1);

    let cfg = EngineConfig {
        rules: RuleMask::all().without(8),
        ..EngineConfig::default()
    };
    let solo = check_catapult(&g, &specs, &cfg, None).unwrap();
    assert_eq!(solo.paths, naive_paths);
    assert_eq!(solo.stats.solver.sat_queries, 6);
    assert_eq!(solo.stats.psc_checks_saved, 0);
}

/// The loop body is unrolled twice, so the second trip through the free
/// site pairs with the first into exactly one double-free report.
#[test]
fn unrolled_loop_yields_one_pair_bug() {
    let (g, specs) = load("loop_free.vfg", "loop_free.prop");
    let cfg = EngineConfig::default();
    for kind in [EngineKind::Naive, EngineKind::Catapult] {
        let out = analyze(&g, &specs, kind, &cfg, None).unwrap();
        let prop = &out.properties[0];
        assert_eq!(prop.paths.len(), 2, "{:?}", kind);
        assert_eq!(prop.bugs.len(), 1, "{:?}", kind);
        let bug = &prop.bugs[0];
        assert_eq!(bug.verdict, Verdict::PairBug);
        let names: Vec<Vec<&str>> = bug
            .witness
            .iter()
            .map(|p| p.verts().iter().map(|&v| g.vname(v)).collect())
            .collect();
        assert_eq!(names[0], ["p", "x#1", "fx#1"]);
        assert_eq!(names[1], ["p", "x#1", "fx#1", "x#2", "fx#2"]);
    }
}

/// The traversal plan is derived from the properties, not from the
/// order the file happens to list them in.
#[test]
fn plan_is_stable_under_spec_list_order() {
    use vflow_core::engine::make_plans;
    use vflow_core::props::{parse_props, print_props};

    for &(gf, pf) in &[
        ("running_example.vfg", "demo.prop"),
        ("running_example.vfg", "heapcheck.prop"),
        ("interproc.vfg", "threeway.prop"),
    ] {
        let (g, specs) = load(gf, pf);
        let mut reversed: Vec<_> = specs.clone();
        reversed.reverse();
        // Re-number by re-parsing the reversed listing.
        let specs_rev = parse_props(&print_props(&reversed)).unwrap();

        let cfg = EngineConfig::default();
        let plan_a = make_plans(&g, &specs, &cfg).unwrap();
        let plan_b = make_plans(&g, &specs_rev, &cfg).unwrap();
        assert_eq!(plan_a.describe(&g), plan_b.describe(&g), "{} + {}", gf, pf);

        // Same reports per property name, whatever the listing order.
        let out_a = analyze(&g, &specs, EngineKind::Catapult, &cfg, None).unwrap();
        let out_b = analyze(&g, &specs_rev, EngineKind::Catapult, &cfg, None).unwrap();
        for pa in &out_a.properties {
            let pb = out_b.properties.iter().find(|p| p.name == pa.name).unwrap();
            let strip = |prop: &vflow_core::PropertyResult| {
                let mut v: Vec<_> = prop
                    .paths
                    .iter()
                    .map(|p| (p.source, p.sink, p.path.clone(), p.pc.clone()))
                    .collect();
                v.sort();
                v
            };
            assert_eq!(strip(pa), strip(pb), "{} + {} property {}", gf, pf, pa.name);
            assert_eq!(pa.bugs, pb.bugs, "{} + {} property {}", gf, pf, pa.name);
        }
    }
}
