//! Differential tests: the planned shared pass must report exactly what
//! the per-property baseline reports, bugs included, under every rule
//! mask, and with all sharing off it must match the baseline's work
//! counters number for number.

mod common;

use common::{instance, load, FIXTURE_PAIRS};
use vflow_core::engine::{check_catapult, check_naive, EngineConfig, RuleMask};
use vflow_core::workload::GenParams;
use vflow_core::{analyze, EngineKind};

const MASKS: &[u8] = &[
    0xff, // everything
    0x00, // nothing
    0x01, // walk order only
    0x02, // recorded reachability only
    0x0c, // conflict replay (cores and interpolants)
    0x10, // grouping only
    0x30, // grouping with implication
    0x50, // grouping with joint queries
    0x90, // grouping with exhaustive pairs
    0xf3, // everything except conflict replay
];

fn corpus_params(seed: u64) -> GenParams {
    GenParams {
        functions: 1 + (seed % 4) as u32,
        verts_min: 4,
        verts_max: 4 + (seed % 7) as u32,
        properties: 1 + (seed % 8) as u32,
        ..GenParams::default()
    }
}

#[test]
fn catapult_matches_naive_on_fixtures_under_all_masks() {
    for &(gf, pf) in FIXTURE_PAIRS {
        let (g, specs) = load(gf, pf);
        for &mask in MASKS {
            let cfg = EngineConfig {
                rules: RuleMask::from_bits(mask),
                ..EngineConfig::default()
            };
            let naive = analyze(&g, &specs, EngineKind::Naive, &cfg, None).unwrap();
            let cat = analyze(&g, &specs, EngineKind::Catapult, &cfg, None).unwrap();
            assert_eq!(
                cat.properties, naive.properties,
                "{} + {} mask {:#04x}",
                gf, pf, mask
            );
        }
    }
}

#[test]
fn catapult_matches_naive_over_corpus() {
    for seed in 0..200u64 {
        let (g, specs) = instance(seed, &corpus_params(seed));
        let cfg = EngineConfig::default();
        let naive = analyze(&g, &specs, EngineKind::Naive, &cfg, None).unwrap();
        let cat = analyze(&g, &specs, EngineKind::Catapult, &cfg, None).unwrap();
        assert_eq!(cat.properties, naive.properties, "seed {}", seed);
        assert!(
            cat.stats.solver.sat_queries <= naive.stats.solver.sat_queries,
            "seed {}: sharing must never add queries ({} > {})",
            seed,
            cat.stats.solver.sat_queries,
            naive.stats.solver.sat_queries
        );
    }
}

#[test]
fn partial_rule_masks_agree_on_corpus() {
    for seed in 0..60u64 {
        let (g, specs) = instance(seed, &corpus_params(seed));
        let cfg = EngineConfig::default();
        let (want, _) = check_naive(&g, &specs, &cfg, None).unwrap();
        for &mask in MASKS {
            let cfg = EngineConfig {
                rules: RuleMask::from_bits(mask),
                ..EngineConfig::default()
            };
            let got = check_catapult(&g, &specs, &cfg, None).unwrap();
            assert_eq!(got.paths, want, "seed {} mask {:#04x}", seed, mask);
        }
    }
}

#[test]
fn empty_mask_replays_naive_stats_exactly() {
    for seed in 0..120u64 {
        let (g, specs) = instance(seed, &corpus_params(seed));
        let cfg = EngineConfig { rules: RuleMask::none(), ..EngineConfig::default() };
        let (naive_paths, naive_stats) = check_naive(&g, &specs, &cfg, None).unwrap();
        let cat = check_catapult(&g, &specs, &cfg, None).unwrap();
        assert_eq!(cat.paths, naive_paths, "seed {}", seed);
        assert_eq!(cat.stats, naive_stats, "seed {}", seed);
        assert!(cat.reach.is_empty(), "seed {}: nothing may be recorded", seed);
        assert!(cat.conflicts.entries().is_empty(), "seed {}", seed);
    }
}
