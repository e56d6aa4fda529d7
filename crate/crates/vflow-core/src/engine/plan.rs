//! Traversal planning: which properties share one walk, in what order
//! the walks run, and what each walk records for the ones after it.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::cond::Condition;
use crate::engine::{EngineConfig, EngineError};
use crate::graph::{ValueFlowGraph, VertexId};
use crate::props::{PropertySpec, PropSet};
use crate::solver::{ImpliesDir, PscRelation, Solver};

/// Which of the eight sharing rules are in force. Bit `i` holds rule
/// `i + 1`; all rules on by default.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RuleMask(u8);

impl RuleMask {
    pub fn all() -> Self {
        RuleMask(0xff)
    }

    pub fn none() -> Self {
        RuleMask(0)
    }

    pub fn from_bits(bits: u8) -> Self {
        RuleMask(bits)
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    /// `rule` is 1-based.
    pub fn enabled(self, rule: u8) -> bool {
        debug_assert!((1..=8).contains(&rule));
        self.0 & (1 << (rule - 1)) != 0
    }

    pub fn without(self, rule: u8) -> Self {
        debug_assert!((1..=8).contains(&rule));
        RuleMask(self.0 & !(1 << (rule - 1)))
    }
}

impl Default for RuleMask {
    fn default() -> Self {
        RuleMask::all()
    }
}

/// Properties sharing one traversal: same source vertices, walked
/// together, with per-vertex status resolution across members.
#[derive(Clone, Debug)]
pub struct PlanGroup {
    /// Member property bits, ascending.
    pub members: Vec<u32>,
    /// Members in resolution order: members whose state condition decides
    /// more of the others come first.
    pub check_order: Vec<u32>,
    /// Common source vertices, ascending.
    pub sources: Vec<VertexId>,
    /// Total sink vertices over the members (drives group order).
    pub sink_total: usize,
    /// `(a, b)` when member `a`'s state condition implies member `b`'s.
    pub implications: Vec<(u32, u32)>,
    /// Jointly satisfiable, non-implying member pairs; candidates for a
    /// shared query.
    pub joint_pairs: Vec<(u32, u32)>,
    /// Disjoint member pairs that cover the whole domain; one side's
    /// verdict decides the other once the path condition is known
    /// satisfiable.
    pub exhaustive_pairs: Vec<(u32, u32)>,
    /// Later properties whose sink reachability this walk records.
    pub record_reach: PropSet,
    /// Instantiated state conditions of later properties, for conflict
    /// recording along this walk.
    pub record_conds: Vec<Condition>,
    /// Names of later properties the conflict recording serves (for the
    /// plan description).
    record_cond_names: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct Plan {
    pub groups: Vec<PlanGroup>,
    /// Property names by bit.
    pub names: Vec<String>,
    pub rules: RuleMask,
}

impl Plan {
    /// Stable, name-based rendering; independent of the order property
    /// specs were listed in.
    pub fn describe(&self, g: &ValueFlowGraph) -> String {
        use core::fmt::Write;
        let mut s = String::new();
        let mut rules = String::new();
        for r in 1..=8u8 {
            if self.rules.enabled(r) {
                let _ = write!(rules, "{}", r);
            } else {
                rules.push('-');
            }
        }
        let _ = writeln!(s, "plan: {} groups; rules {}", self.groups.len(), rules);
        for (i, grp) in self.groups.iter().enumerate() {
            let names: Vec<&str> =
                grp.check_order.iter().map(|&b| self.names[b as usize].as_str()).collect();
            let sources: Vec<&str> = grp.sources.iter().map(|&v| g.vname(v)).collect();
            let _ = write!(
                s,
                "group {}: check [{}]; sources [{}]; sinks {}",
                i + 1,
                names.join(", "),
                sources.join(", "),
                grp.sink_total
            );
            if !grp.record_reach.is_empty() {
                let for_names: Vec<&str> = grp
                    .record_reach
                    .iter()
                    .map(|b| self.names[b as usize].as_str())
                    .collect();
                let _ = write!(s, "; reach for [{}]", for_names.join(", "));
            }
            if !grp.record_cond_names.is_empty() {
                let _ = write!(s, "; conflicts for [{}]", grp.record_cond_names.join(", "));
            }
            s.push('\n');
        }
        s
    }
}

/// Group the properties, order the groups, work out member relations and
/// recording directives. Everything here runs on uncounted probes; the
/// plan depends on the specs and the mask but not on spec list order.
pub fn make_plans(
    g: &ValueFlowGraph,
    specs: &[PropertySpec],
    cfg: &EngineConfig,
) -> Result<Plan, EngineError> {
    let rules = cfg.rules;
    let solver = Solver::new(cfg.solver.clone());
    let names: Vec<String> = specs.iter().map(|s| s.name.clone()).collect();

    if let Some(order) = &cfg.forced_order {
        for name in order {
            if !names.iter().any(|n| n == name) {
                return Err(EngineError::UnknownProperty(name.clone()));
            }
        }
    }

    // Group by identical source vertex sets (rule 5), else singletons.
    let mut grouped: BTreeMap<(Vec<VertexId>, Option<u32>), Vec<u32>> = BTreeMap::new();
    for spec in specs {
        let sources = spec.source_vertices(g);
        let key = if rules.enabled(5) { (sources, None) } else { (sources, Some(spec.bit)) };
        grouped.entry(key).or_default().push(spec.bit);
    }

    let mut groups: Vec<PlanGroup> = Vec::new();
    for ((sources, _), mut members) in grouped {
        members.sort_unstable();
        let sink_total: usize =
            members.iter().map(|&b| specs[b as usize].sink_vertices(g).len()).sum();

        let mut implications = Vec::new();
        let mut joint_pairs = Vec::new();
        let mut exhaustive_pairs = Vec::new();
        for (i, &a) in members.iter().enumerate() {
            for &b in &members[i + 1..] {
                let pa = &specs[a as usize].psc;
                let pb = &specs[b as usize].psc;
                match solver.classify_psc_pair(pa, pb).map_err(EngineError::Solver)? {
                    PscRelation::Implies(dir) => {
                        if rules.enabled(6) {
                            match dir {
                                ImpliesDir::FirstIntoSecond => implications.push((a, b)),
                                ImpliesDir::SecondIntoFirst => implications.push((b, a)),
                                ImpliesDir::Equivalent => {
                                    implications.push((a, b));
                                    implications.push((b, a));
                                }
                            }
                        }
                    }
                    PscRelation::Overlapping => {
                        if rules.enabled(7) {
                            joint_pairs.push((a, b));
                        }
                    }
                    PscRelation::Disjoint => {
                        if rules.enabled(8)
                            && solver.pair_exhaustive(pa, pb).map_err(EngineError::Solver)?
                        {
                            exhaustive_pairs.push((a, b));
                        }
                    }
                }
            }
        }

        let mut check_order = members.clone();
        if rules.enabled(6) {
            let strength = |m: u32| implications.iter().filter(|(a, _)| *a == m).count();
            check_order.sort_by(|&x, &y| {
                strength(y)
                    .cmp(&strength(x))
                    .then_with(|| names[x as usize].cmp(&names[y as usize]))
            });
        }

        groups.push(PlanGroup {
            members,
            check_order,
            sources,
            sink_total,
            implications,
            joint_pairs,
            exhaustive_pairs,
            record_reach: PropSet::empty(),
            record_conds: Vec::new(),
            record_cond_names: Vec::new(),
        });
    }

    // Group order: forced order first; otherwise more sinks first
    // (rule 1); otherwise spec order.
    let group_name = |grp: &PlanGroup| -> String {
        grp.members.iter().map(|&b| names[b as usize].clone()).min().unwrap()
    };
    if let Some(order) = &cfg.forced_order {
        let pos = |grp: &PlanGroup| -> usize {
            grp.members
                .iter()
                .filter_map(|&b| order.iter().position(|n| *n == names[b as usize]))
                .min()
                .unwrap_or(usize::MAX)
        };
        groups.sort_by(|x, y| pos(x).cmp(&pos(y)).then_with(|| group_name(x).cmp(&group_name(y))));
    } else if rules.enabled(1) {
        groups.sort_by(|x, y| {
            y.sink_total
                .cmp(&x.sink_total)
                .then_with(|| group_name(x).cmp(&group_name(y)))
        });
    } else {
        groups.sort_by_key(|grp| grp.members.iter().copied().min().unwrap());
    }

    // Recording directives cover everything scheduled later.
    for i in 0..groups.len() {
        let mut reach = PropSet::empty();
        let mut conds: BTreeSet<Condition> = BTreeSet::new();
        let mut cond_names: BTreeSet<String> = BTreeSet::new();
        for later in &groups[i + 1..] {
            for &b in &later.members {
                if rules.enabled(2) {
                    reach.insert(b);
                }
                if rules.enabled(3) || rules.enabled(4) {
                    let spec = &specs[b as usize];
                    if spec.psc != Condition::True {
                        for src in &later.sources {
                            conds.insert(spec.instantiate_psc(g, *src));
                        }
                        cond_names.insert(spec.name.clone());
                    }
                }
            }
        }
        groups[i].record_reach = reach;
        groups[i].record_conds = conds.into_iter().collect();
        groups[i].record_cond_names = cond_names.into_iter().collect();
    }

    Ok(Plan { groups, names, rules })
}
