//! Function summaries: the stitched candidate sets must be exactly the
//! globally enumerated ones, labels must compose by intersection, and
//! the text form must survive a round trip.

mod common;

use std::collections::BTreeMap;

use common::{instance, load, FIXTURE_PAIRS};
use vflow_core::engine::{check_catapult, check_naive, EngineConfig, Mode};
use vflow_core::graph::ValueFlowGraph;
use vflow_core::paths::{enumerate_paths, realizable, Path};
use vflow_core::props::{PropertySpec, PropSet};
use vflow_core::summaries::{
    bottom_up_schedule, build_summary_db, parse_summaries, print_summaries, stitch_paths,
    SummaryKind,
};
use vflow_core::workload::GenParams;

fn enumerated_by_bit(
    g: &ValueFlowGraph,
    specs: &[PropertySpec],
) -> BTreeMap<u32, Vec<Path>> {
    let mut out = BTreeMap::new();
    for spec in specs {
        let sinks = spec.sink_vertices(g);
        let mut paths = enumerate_paths(g, &spec.source_vertices(g), &sinks);
        paths.sort();
        paths.dedup();
        out.insert(spec.bit, paths);
    }
    out
}

#[test]
fn stitching_equals_global_enumeration_on_fixtures() {
    for &(gf, pf) in FIXTURE_PAIRS {
        let (g, specs) = load(gf, pf);
        let db = build_summary_db(&g, &specs).unwrap();
        let stitched = stitch_paths(&g, &db, &specs);
        assert_eq!(stitched, enumerated_by_bit(&g, &specs), "{} + {}", gf, pf);
    }
}

#[test]
fn stitching_equals_global_enumeration_on_corpus() {
    for seed in 0..150u64 {
        let params = GenParams {
            functions: 2 + (seed % 3) as u32,
            verts_min: 4,
            verts_max: 8,
            properties: 1 + (seed % 6) as u32,
            ..GenParams::default()
        };
        let (g, specs) = instance(seed, &params);
        let db = build_summary_db(&g, &specs).unwrap();
        let stitched = stitch_paths(&g, &db, &specs);
        assert_eq!(stitched, enumerated_by_bit(&g, &specs), "seed {}", seed);
        for paths in stitched.values() {
            for p in paths {
                assert!(realizable(&g, p), "seed {}: stitched an unrealizable path", seed);
            }
        }
    }
}

/// The wrapped allocation flows through the wrapped release: the
/// complete path exists exactly for the two free-sink properties, and
/// the per-function summaries compose to that 0b110 label.
#[test]
fn wrapper_fixture_labels_compose_by_intersection() {
    let (g, specs) = load("interproc.vfg", "threeway.prop");
    let db = build_summary_db(&g, &specs).unwrap();

    let name_path = |p: &Path| -> Vec<&str> {
        p.verts().iter().map(|&v| g.vname(v)).collect()
    };

    let xmalloc = g.function_by_name("xmalloc").unwrap();
    let xm = &db.per_fn[&xmalloc];
    assert!(xm.transfer.is_empty() && xm.input.is_empty());
    assert_eq!(xm.output.len(), 1);
    assert_eq!(name_path(&xm.output[0].path), ["p", "retp"]);
    assert_eq!(xm.output[0].label.to_string(), "0b111");

    let xfree = g.function_by_name("xfree").unwrap();
    let xf = &db.per_fn[&xfree];
    assert!(xf.output.is_empty());
    assert_eq!(xf.transfer.len(), 1);
    assert_eq!(name_path(&xf.transfer[0].path), ["u", "retu"]);
    assert_eq!(xf.transfer[0].label.to_string(), "0b111");
    assert_eq!(xf.input.len(), 1);
    assert_eq!(name_path(&xf.input[0].path), ["u", "freeu"]);
    assert_eq!(xf.input[0].label.to_string(), "0b110");

    let stitched = stitch_paths(&g, &db, &specs);
    let target = ["p", "retp", "a", "au", "u", "freeu"];
    let holds = |bit: u32| stitched[&bit].iter().any(|p| name_path(p) == target);
    assert!(!holds(0), "the dereference property has no claim on this path");
    assert!(holds(1));
    assert!(holds(2));
    let label: PropSet = (0..specs.len() as u32)
        .filter(|&b| holds(b))
        .fold(PropSet::empty(), |mut s, b| {
            s.insert(b);
            s
        });
    assert_eq!(label.to_string(), "0b110");
}

#[test]
fn summary_mode_reports_what_whole_graph_walks_report() {
    let mut cases: Vec<(ValueFlowGraph, Vec<PropertySpec>, String)> = FIXTURE_PAIRS
        .iter()
        .map(|&(gf, pf)| {
            let (g, specs) = load(gf, pf);
            (g, specs, format!("{} + {}", gf, pf))
        })
        .collect();
    for seed in 0..60u64 {
        let params = GenParams {
            functions: 2 + (seed % 3) as u32,
            verts_min: 4,
            verts_max: 8,
            properties: 1 + (seed % 6) as u32,
            ..GenParams::default()
        };
        let (g, specs) = instance(seed, &params);
        cases.push((g, specs, format!("seed {}", seed)));
    }

    for (g, specs, ctx) in &cases {
        let intra = EngineConfig::default();
        let summary = EngineConfig { mode: Mode::Summary, ..EngineConfig::default() };
        let (want, _) = check_naive(g, specs, &intra, None).unwrap();
        let (via_naive, _) = check_naive(g, specs, &summary, None).unwrap();
        assert_eq!(via_naive, want, "naive summary mode, {}", ctx);
        let via_cat = check_catapult(g, specs, &summary, None).unwrap();
        assert_eq!(via_cat.paths, want, "catapult summary mode, {}", ctx);
    }
}

#[test]
fn schedule_layers_callees_before_callers() {
    let (g, _) = load("interproc.vfg", "threeway.prop");
    let f = |name: &str| g.function_by_name(name).unwrap();
    let batches = bottom_up_schedule(&g).unwrap();
    assert_eq!(
        batches,
        vec![
            vec![f("malloc"), f("free")],
            vec![f("xmalloc"), f("xfree")],
            vec![f("main")],
        ]
    );
}

#[test]
fn summary_text_round_trips() {
    for &(gf, pf) in FIXTURE_PAIRS {
        let (g, specs) = load(gf, pf);
        let db = build_summary_db(&g, &specs).unwrap();
        let text = print_summaries(&g, &db);
        let parsed = parse_summaries(&g, &text).unwrap_or_else(|e| {
            panic!("{} + {}: reparse failed: {}", gf, pf, e)
        });
        assert_eq!(print_summaries(&g, &parsed), text, "{} + {}", gf, pf);
        // Parsed summaries stitch identically; width only matters for
        // display, the labels themselves carry the bits.
        let stitched = stitch_paths(&g, &parsed, &specs);
        assert_eq!(stitched, stitch_paths(&g, &db, &specs), "{} + {}", gf, pf);
    }
}

#[test]
fn reparse_rejects_foreign_names() {
    let (g, specs) = load("interproc.vfg", "threeway.prop");
    let db = build_summary_db(&g, &specs).unwrap();
    let text = print_summaries(&g, &db);
    let (other, _) = load("rule7.vfg", "rule7.prop");
    let err = parse_summaries(&other, &text).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("unknown"), "got: {}", msg);
}

#[test]
fn summary_kinds_print_as_their_tokens() {
    assert_eq!(SummaryKind::Transfer.token(), "transfer");
    assert_eq!(SummaryKind::Input.token(), "input");
    assert_eq!(SummaryKind::Output.token(), "output");
}
