//! Text format round trips and generator output invariants.

mod common;

use proptest::prelude::*;

use common::FIXTURE_PAIRS;
use vflow_core::parse::{parse_program, print_program};
use vflow_core::paths::{enumerate_paths, realizable};
use vflow_core::props::{parse_props, print_props};
use vflow_core::workload::{gen_workload, GenParams};

#[test]
fn fixture_text_survives_parse_and_print() {
    for &(gf, pf) in FIXTURE_PAIRS {
        let gtext = common::fixture(gf);
        let g1 = parse_program(&gtext).unwrap();
        let printed = print_program(&g1);
        let g2 = parse_program(&printed).unwrap();
        assert_eq!(g2, g1, "{}", gf);
        assert_eq!(print_program(&g2), printed, "{}", gf);

        let ptext = common::fixture(pf);
        let s1 = parse_props(&ptext).unwrap();
        let printed = print_props(&s1);
        let s2 = parse_props(&printed).unwrap();
        assert_eq!(s2, s1, "{}", pf);
        assert_eq!(print_props(&s2), printed, "{}", pf);
    }
}

fn small_params() -> impl Strategy<Value = GenParams> {
    (1u32..=3, 3u32..=7, 1u32..=6, 0u32..=600, 0u32..=600, 0u32..=600).prop_map(
        |(functions, extra, properties, edges, guards, sinks)| GenParams {
            functions,
            verts_min: 3,
            verts_max: 3 + extra,
            edge_density_pm: edges,
            guard_prob_pm: guards,
            properties,
            sink_density_pm: sinks,
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Printing a parsed workload is a fixed point: the text the printer
    /// produces parses back to the same graph and properties.
    #[test]
    fn generated_text_round_trips(seed in any::<u64>(), params in small_params()) {
        let w = gen_workload(seed, &params);

        let g1 = parse_program(&w.graph_text).unwrap();
        let printed = print_program(&g1);
        let g2 = parse_program(&printed).unwrap();
        prop_assert_eq!(&g2, &g1);
        prop_assert_eq!(print_program(&g2), printed);

        let s1 = parse_props(&w.props_text).unwrap();
        let printed = print_props(&s1);
        let s2 = parse_props(&printed).unwrap();
        prop_assert_eq!(&s2, &s1);
        prop_assert_eq!(print_props(&s2), printed);
    }

    /// Every enumerated candidate is a realizable source-to-sink walk
    /// that never revisits a vertex.
    #[test]
    fn enumerated_candidates_are_realizable_and_simple(
        seed in any::<u64>(),
        params in small_params(),
    ) {
        let w = gen_workload(seed, &params);
        let g = parse_program(&w.graph_text).unwrap();
        let specs = parse_props(&w.props_text).unwrap();
        for spec in &specs {
            let sinks = spec.sink_vertices(&g);
            for p in enumerate_paths(&g, &spec.source_vertices(&g), &sinks) {
                prop_assert!(realizable(&g, &p));
                let mut seen = p.verts().to_vec();
                seen.sort();
                seen.dedup();
                prop_assert_eq!(seen.len(), p.verts().len(), "revisited a vertex");
                prop_assert!(sinks.contains(&p.tail()));
            }
        }
    }
}

#[test]
fn workload_params_parse_reports_bad_lines() {
    let ok = GenParams::parse("functions 2\nverts-max 9 // roomy\n\n// comment only\n").unwrap();
    assert_eq!(ok.functions, 2);
    assert_eq!(ok.verts_max, 9);
    assert_eq!(ok.verts_min, GenParams::default().verts_min);

    let err = GenParams::parse("functions 2 3").unwrap_err();
    assert_eq!(err, "1: expected `key value`");

    let err = GenParams::parse("\nfunctions two").unwrap_err();
    assert_eq!(err, "2: `two` is not a number");

    let err = GenParams::parse("vertices 9").unwrap_err();
    assert_eq!(err, "1: unknown key `vertices`");

    let err = GenParams::parse("functions 0").unwrap_err();
    assert_eq!(err, "need functions >= 1, properties >= 1, verts-min <= verts-max");

    let err = GenParams::parse("verts-min 8\nverts-max 4").unwrap_err();
    assert_eq!(err, "need functions >= 1, properties >= 1, verts-min <= verts-max");
}
