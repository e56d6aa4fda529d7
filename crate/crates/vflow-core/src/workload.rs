//! Seeded random workloads: graph and property texts that always parse
//! and always describe an acyclic program.
//!
//! Layout discipline inside each generated function: parameter first,
//! then a body zone (assignments, sources, sinks, downward calls), then
//! a return zone (upward call results, more sinks), then the formal
//! return. Intra edges only go forward, calls only target later
//! functions, and nothing flows from a call result back into a call
//! argument, which together keep the flow graph acyclic no matter what
//! the dice say.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenParams {
    pub functions: u32,
    pub verts_min: u32,
    pub verts_max: u32,
    /// Chance per candidate forward pair to add an extra edge, per mille.
    pub edge_density_pm: u32,
    /// Chance per edge to carry a guard atom, per mille.
    pub guard_prob_pm: u32,
    pub properties: u32,
    /// Chance per body slot to become a sink call, per mille.
    pub sink_density_pm: u32,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            functions: 3,
            verts_min: 6,
            verts_max: 12,
            edge_density_pm: 250,
            guard_prob_pm: 400,
            properties: 4,
            sink_density_pm: 250,
        }
    }
}

impl GenParams {
    /// `key value` per line, `//` comments. Unknown keys are errors so
    /// typos do not silently fall back to defaults.
    pub fn parse(text: &str) -> Result<GenParams, String> {
        let mut p = GenParams::default();
        for (lineno0, raw) in text.lines().enumerate() {
            let line = match crate::parse::comment_start(raw) {
                Some(i) => &raw[..i],
                None => raw,
            };
            let words: Vec<&str> = line.split_whitespace().collect();
            if words.is_empty() {
                continue;
            }
            let [key, value] = words[..] else {
                return Err(format!("{}: expected `key value`", lineno0 + 1));
            };
            let n: u32 = value
                .parse()
                .map_err(|_| format!("{}: `{}` is not a number", lineno0 + 1, value))?;
            match key {
                "functions" => p.functions = n,
                "verts-min" => p.verts_min = n,
                "verts-max" => p.verts_max = n,
                "edge-density-pm" => p.edge_density_pm = n,
                "guard-prob-pm" => p.guard_prob_pm = n,
                "properties" => p.properties = n,
                "sink-density-pm" => p.sink_density_pm = n,
                other => return Err(format!("{}: unknown key `{}`", lineno0 + 1, other)),
            }
        }
        if p.functions == 0 || p.properties == 0 || p.verts_min > p.verts_max {
            return Err("need functions >= 1, properties >= 1, verts-min <= verts-max".to_string());
        }
        Ok(p)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Workload {
    pub graph_text: String,
    pub props_text: String,
}

pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

struct Rng {
    state: u64,
}

impl Rng {
    fn new(seed: u64) -> Rng {
        Rng { state: seed }
    }

    fn below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        splitmix64(&mut self.state) % n
    }

    fn chance_pm(&mut self, pm: u32) -> bool {
        self.below(1000) < pm as u64
    }

    fn pick<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        &items[self.below(items.len() as u64) as usize]
    }
}

const GUARD_VARS: [&str; 5] = ["g0", "g1", "g2", "g3", "g4"];
const CMPS: [&str; 6] = ["<", "<=", "==", "!=", ">=", ">"];
const SRC_POOL: [&str; 4] = ["call alloc0 ret", "call alloc1 ret", "global", "assign"];
const SINK_POOL: [&str; 4] =
    ["call sink0 arg _", "call sink1 arg _", "store address", "load operand"];
const PSC_POOL: [&str; 8] =
    ["true", "v == 0", "v != 0", "v < 0", "v >= 0", "v <= 2", "v > 2", "v >= -2"];

/// Generate one workload. Same seed and params, same texts.
///
/// With three or more properties the first three are shaped, not rolled:
/// the second shares the first's source pattern and the third shares one
/// of its sink patterns, so every multi-property workload has material
/// for traversal merging and reachability reuse.
pub fn gen_workload(seed: u64, params: &GenParams) -> Workload {
    let mut rng = Rng::new(seed);
    let mut g = String::new();

    for i in 0..params.functions {
        gen_function(&mut rng, params, i, &mut g);
    }
    g.push_str("func alloc0(0) { }\n");
    g.push_str("func alloc1(0) { }\n");
    g.push_str("func sink0(1) { }\n");
    g.push_str("func sink1(1) { }\n");

    let mut props: Vec<(String, Vec<String>, String, String)> = Vec::new();
    for p in 0..params.properties {
        let src = if p == 1 && params.properties >= 3 {
            props[0].0.clone()
        } else {
            (*rng.pick(&SRC_POOL)).to_string()
        };
        let mut sinks: Vec<String> = Vec::new();
        if p == 2 && params.properties >= 3 {
            sinks.push(props[0].1[0].clone());
        }
        let extra = 1 + rng.below(2);
        for _ in 0..extra {
            let s = (*rng.pick(&SINK_POOL)).to_string();
            if !sinks.contains(&s) {
                sinks.push(s);
            }
        }
        let psc = (*rng.pick(&PSC_POOL)).to_string();
        let agg = match rng.below(10) {
            0..=5 => "never",
            6..=7 => "never-sim",
            _ => "must",
        }
        .to_string();
        props.push((src, sinks, psc, agg));
    }

    let mut pt = String::new();
    for (i, (src, sinks, psc, agg)) in props.iter().enumerate() {
        pt.push_str(&format!("prop prop{} {{\n", i));
        pt.push_str(&format!("  src: {};\n", src));
        pt.push_str(&format!("  sink: {};\n", sinks.join(", ")));
        pt.push_str(&format!("  psc: {};\n", psc));
        pt.push_str(&format!("  agg: {};\n", agg));
        pt.push_str("}\n");
    }

    Workload { graph_text: g, props_text: pt }
}

fn gen_guard(rng: &mut Rng) -> String {
    if rng.below(10) < 7 {
        let v = rng.pick(&GUARD_VARS);
        let cmp = rng.pick(&CMPS);
        let k = rng.below(9) as i64 - 4;
        format!("{} {} {}", v, cmp, k)
    } else {
        let a = rng.pick(&GUARD_VARS);
        let b = rng.pick(&GUARD_VARS);
        let cmp = rng.pick(&CMPS);
        let k = rng.below(9) as i64 - 4;
        format!("{} + {} {} {}", a, b, cmp, k)
    }
}

fn gen_function(rng: &mut Rng, params: &GenParams, i: u32, out: &mut String) {
    let fname = format!("f{}", i);
    let arity = if i == 0 { 0 } else { 1 };
    out.push_str(&format!("func {}({}) {{\n", fname, arity));

    let span = params.verts_max - params.verts_min + 1;
    let total = params.verts_min + rng.below(span as u64) as u32;
    let total = total.max(3);
    let has_ends = i > 0;
    let n_ret_zone = 1 + rng.below(2) as u32;
    let n_body = total.saturating_sub(n_ret_zone + if has_ends { 2 } else { 0 }).max(2);

    // (name, variable, kind text, occurrence cond)
    let mut verts: Vec<(String, String, String, Option<String>)> = Vec::new();
    let mut fresh = 0u32;
    let mut site = 0u32;
    let callable: Vec<u32> = (i + 1..params.functions).collect();

    if has_ends {
        verts.push((format!("{}_p", fname), format!("{}_p", fname), "param 0".to_string(), None));
    }

    let reuse_var = |rng: &mut Rng, fresh: &mut u32, verts: &Vec<(String, String, String, Option<String>)>| {
        if !verts.is_empty() && rng.chance_pm(400) {
            verts[rng.below(verts.len() as u64) as usize].1.clone()
        } else {
            *fresh += 1;
            format!("{}_x{}", fname, *fresh)
        }
    };

    // Round-trip calls leave their argument in the body and park the
    // matching result vertex here until the return zone is emitted; a
    // result landing mid-body could flow into a later call argument and
    // close an interprocedural cycle through a shared callee.
    let mut dips: Vec<(String, u32)> = Vec::new();

    let mut slot = 0;
    while slot < n_body {
        let name = format!("{}_b{}", fname, slot);
        let var = reuse_var(rng, &mut fresh, &verts);
        if rng.chance_pm(params.sink_density_pm) {
            let k = rng.below(2);
            verts.push((name, var, format!("call sink{}@s{} arg 0", k, site), None));
            site += 1;
            slot += 1;
            continue;
        }
        let roll = rng.below(100);
        let (kind, occ) = match roll {
            0..=29 => ("assign".to_string(), None),
            30..=39 => ("global".to_string(), None),
            40..=54 => {
                let k = rng.below(2);
                let occ = if rng.chance_pm(250) {
                    Some(format!("{} > 0", rng.pick(&GUARD_VARS)))
                } else {
                    None
                };
                site += 1;
                (format!("call alloc{}@s{} ret", k, site - 1), occ)
            }
            55..=69 => {
                let k = match rng.below(4) {
                    0 => "load result",
                    1 => "load operand",
                    2 => "store stored",
                    _ => "store address",
                };
                (k.to_string(), None)
            }
            70..=84 if !callable.is_empty() => {
                let j = *rng.pick(&callable);
                site += 1;
                (format!("call f{}@s{} arg 0", j, site - 1), None)
            }
            85..=99 if !callable.is_empty() && dips.len() < 2 => {
                let j = *rng.pick(&callable);
                let tag = format!("s{}", site);
                site += 1;
                dips.push((tag.clone(), j));
                (format!("call f{}@{} arg 0", j, tag), None)
            }
            _ => ("assign".to_string(), None),
        };
        verts.push((name, var, kind, occ));
        slot += 1;
    }

    let mut rname = 0u32;
    for (tag, j) in &dips {
        let name = format!("{}_r{}", fname, rname);
        rname += 1;
        let var = reuse_var(rng, &mut fresh, &verts);
        verts.push((name, var, format!("call f{}@{} ret", j, tag), None));
    }

    for _ in 0..n_ret_zone {
        let name = format!("{}_r{}", fname, rname);
        rname += 1;
        let var = reuse_var(rng, &mut fresh, &verts);
        let roll = rng.below(100);
        let kind = if roll < 45 && !callable.is_empty() {
            // Result without a matching argument: the value is born inside
            // the callee and only surfaces here.
            let j = *rng.pick(&callable);
            site += 1;
            format!("call f{}@s{} ret", j, site - 1)
        } else if roll < 75 {
            let k = rng.below(2);
            site += 1;
            format!("call sink{}@s{} arg 0", k, site - 1)
        } else {
            "assign".to_string()
        };
        verts.push((name, var, kind, None));
    }

    if has_ends {
        fresh += 1;
        verts.push((format!("{}_ret", fname), format!("{}_x{}", fname, fresh), "ret".to_string(), None));
    }

    for (name, var, kind, occ) in &verts {
        match occ {
            Some(c) => out.push_str(&format!("  v {} {} {} cond {}\n", name, var, kind, c)),
            None => out.push_str(&format!("  v {} {} {}\n", name, var, kind)),
        }
    }

    let mut edges: Vec<(usize, usize)> = Vec::new();
    for w in 1..verts.len() {
        if rng.chance_pm(750) {
            edges.push((w - 1, w));
        }
    }
    for u in 0..verts.len() {
        for w in u + 2..verts.len() {
            if rng.chance_pm(params.edge_density_pm) {
                edges.push((u, w));
            }
        }
    }
    edges.sort_unstable();
    edges.dedup();
    for (u, w) in edges {
        if rng.chance_pm(params.guard_prob_pm) {
            out.push_str(&format!("  e {} -> {} guard {}\n", verts[u].0, verts[w].0, gen_guard(rng)));
        } else {
            out.push_str(&format!("  e {} -> {} \n", verts[u].0, verts[w].0));
        }
    }
    out.push_str("}\n");
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_program;
    use crate::props::parse_props;

    #[test]
    fn same_seed_same_text() {
        let p = GenParams::default();
        let a = gen_workload(7, &p);
        let b = gen_workload(7, &p);
        assert_eq!(a, b);
        let c = gen_workload(8, &p);
        assert_ne!(a, c);
    }

    #[test]
    fn every_seed_parses() {
        let p = GenParams::default();
        for seed in 0..60 {
            let w = gen_workload(seed, &p);
            let g = parse_program(&w.graph_text).unwrap_or_else(|e| {
                panic!("seed {} graph: {}\n{}", seed, e, w.graph_text)
            });
            assert!(g.vertex_count() > 0);
            let specs = parse_props(&w.props_text)
                .unwrap_or_else(|e| panic!("seed {} props: {}", seed, e));
            assert_eq!(specs.len(), p.properties as usize);
        }
    }

    #[test]
    fn multi_property_workloads_share_sources_and_sinks() {
        let p = GenParams::default();
        for seed in 0..20 {
            let w = gen_workload(seed, &p);
            let specs = parse_props(&w.props_text).unwrap();
            assert!(specs.len() >= 3);
            assert_eq!(specs[0].src, specs[1].src);
            assert!(specs[2].sinks.contains(&specs[0].sinks[0]));
        }
    }

    #[test]
    fn params_parse_round() {
        let text = "functions 2\nverts-min 4\nverts-max 6\nproperties 5\n";
        let p = GenParams::parse(text).unwrap();
        assert_eq!(p.functions, 2);
        assert_eq!(p.verts_min, 4);
        assert_eq!(p.verts_max, 6);
        assert_eq!(p.properties, 5);
        assert!(GenParams::parse("nope 3\n").is_err());
        assert!(GenParams::parse("verts-min x\n").is_err());
    }
}
