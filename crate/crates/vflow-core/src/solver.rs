//! Decision procedures over a bounded integer domain.
//!
//! Every program variable ranges over one shared interval (default
//! `[-64, 63]`). Satisfiability is decided by backtracking enumeration with
//! three-valued early evaluation, which is exact on this domain and cheap at
//! the graph sizes the engines handle. On top of plain `is_sat` the solver
//! offers two explanation services the planned engine records and replays:
//! deletion-minimal unsat cores and single-variable elimination
//! interpolants.
//!
//! Counter discipline: `sat_queries` counts only calls to [`Solver::is_sat`],
//! which is the entry point engines and aggregation use. Internal probes
//! (core shrinking, interpolant validation, pair classification) are not
//! billed as queries; core and interpolant extractions have their own
//! counters.

use alloc::borrow::ToOwned;
use alloc::collections::BTreeMap;
use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::cond::{Atom, Cmp, Condition};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SolverConfig {
    pub domain_min: i64,
    pub domain_max: i64,
    /// Upper bound on value assignments tried per query.
    pub budget: u64,
}

pub const DEFAULT_BUDGET: u64 = 2_000_000;

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { domain_min: -64, domain_max: 63, budget: DEFAULT_BUDGET }
    }
}

impl SolverConfig {
    /// Symmetric domain `[-bound, bound - 1]`, matching the default shape.
    pub fn with_domain_bound(bound: i64) -> Self {
        SolverConfig { domain_min: -bound, domain_max: bound - 1, ..Self::default() }
    }

    pub fn domain_size(&self) -> u64 {
        (self.domain_max - self.domain_min + 1) as u64
    }
}

/// Work counters shared by both engines and the aggregation layer.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SolverCounters {
    pub sat_queries: u64,
    pub core_extractions: u64,
    pub interpolations: u64,
}

impl SolverCounters {
    pub fn absorb(&mut self, other: &SolverCounters) {
        self.sat_queries += other.sat_queries;
        self.core_extractions += other.core_extractions;
        self.interpolations += other.interpolations;
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolverError {
    /// The query would exceed the assignment budget; the run should stop
    /// rather than silently degrade.
    BudgetExceeded { budget: u64 },
    /// `unsat_core` was asked to explain a satisfiable conjunction.
    CoreOfSatisfiable,
}

impl fmt::Display for SolverError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverError::BudgetExceeded { budget } => {
                write!(f, "solver budget of {} assignments exceeded", budget)
            }
            SolverError::CoreOfSatisfiable => {
                write!(f, "unsat core requested for a satisfiable conjunction")
            }
        }
    }
}

/// How two property state conditions relate over the bounded domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PscRelation {
    /// One side implies the other; `Equivalent` when both directions hold.
    Implies(ImpliesDir),
    /// Jointly satisfiable, neither direction of implication holds.
    Overlapping,
    /// Never simultaneously satisfiable.
    Disjoint,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImpliesDir {
    FirstIntoSecond,
    SecondIntoFirst,
    Equivalent,
}

pub struct Solver {
    pub cfg: SolverConfig,
    pub counters: SolverCounters,
}

impl Solver {
    pub fn new(cfg: SolverConfig) -> Self {
        Solver { cfg, counters: SolverCounters::default() }
    }

    /// Satisfiability of `cond` with every variable in the domain. This is
    /// the billed entry point: one call, one `sat_queries` tick.
    pub fn is_sat(&mut self, cond: &Condition) -> Result<bool, SolverError> {
        self.counters.sat_queries += 1;
        self.probe_sat(cond)
    }

    /// Same decision procedure without touching `sat_queries`. Used for
    /// planning, recording and test oracles, where the point of the
    /// counters is precisely to exclude this work.
    pub fn probe_sat(&self, cond: &Condition) -> Result<bool, SolverError> {
        let var_set = cond.vars();
        let nvars = var_set.len() as u64;
        if nvars.saturating_mul(self.cfg.domain_size()) > self.cfg.budget {
            return Err(SolverError::BudgetExceeded { budget: self.cfg.budget });
        }
        let mut spent: u64 = 0;
        let mut candidates: BTreeMap<&str, Vec<i64>> = var_set
            .into_iter()
            .map(|v| (v, (self.cfg.domain_min..=self.cfg.domain_max).collect()))
            .collect();
        let mut env: BTreeMap<&str, i64> = BTreeMap::new();
        match self.narrow(cond, &mut candidates, &mut env, &mut spent, None)? {
            false => Ok(false),
            true => self.search(cond, &candidates, &mut env, &mut spent),
        }
    }

    /// Forward checking: any subformula in a conjunctive position must
    /// hold, so once all but one of its variables are assigned it acts as
    /// a unit constraint and shrinks that variable's candidate list.
    /// Returns `false` when some list empties, refuting this branch.
    ///
    /// With `changed` set, only units mentioning that variable are applied:
    /// inherited candidate lists have already been filtered by everything
    /// that was unit before this assignment, and re-applying a unit to its
    /// own output is a no-op.
    fn narrow<'a>(
        &self,
        cond: &Condition,
        candidates: &mut BTreeMap<&'a str, Vec<i64>>,
        env: &mut BTreeMap<&'a str, i64>,
        spent: &mut u64,
        changed: Option<&str>,
    ) -> Result<bool, SolverError> {
        let mut units: Vec<(&'a str, &Condition)> = Vec::new();
        let mut subs: Vec<&Condition> = Vec::new();
        collect_conjunct_subs(cond, env, &mut subs);
        for sub in subs {
            let vars = sub.vars();
            if let Some(c) = changed {
                if !vars.contains(c) {
                    continue;
                }
            }
            let free: Vec<&str> = vars.into_iter().filter(|v| !env.contains_key(v)).collect();
            let [v] = free[..] else { continue };
            let (&key, _) = candidates.get_key_value(v).expect("var tracked");
            units.push((key, sub));
        }
        for (v, sub) in units {
            let values = candidates.remove(v).expect("var tracked");
            let mut kept = Vec::with_capacity(values.len());
            for value in values {
                *spent += 1;
                if *spent > self.cfg.budget {
                    return Err(SolverError::BudgetExceeded { budget: self.cfg.budget });
                }
                env.insert(v, value);
                if sub.eval_partial(env) == Some(true) {
                    kept.push(value);
                }
                env.remove(v);
            }
            let empty = kept.is_empty();
            candidates.insert(v, kept);
            if empty {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn search<'a>(
        &self,
        cond: &Condition,
        candidates: &BTreeMap<&'a str, Vec<i64>>,
        env: &mut BTreeMap<&'a str, i64>,
        spent: &mut u64,
    ) -> Result<bool, SolverError> {
        match cond.eval_partial(env) {
            Some(v) => return Ok(v),
            None => {}
        }
        // Every undecided leaf lives in exactly one conjunct-position
        // subformula. The unary ones are already reflected in the
        // candidate lists (narrowing applies a unit the moment it forms),
        // so if only those remain, any combination of listed values is a
        // model. Branching is therefore driven purely by the coupling
        // subformulas, preferring the most mentioned variable and then
        // the shortest candidate list; variables outside every coupling
        // subformula are never assigned, so refuting a tight pair is not
        // multiplied by the domains of bystander variables.
        let mut subs: Vec<&Condition> = Vec::new();
        collect_conjunct_subs(cond, env, &mut subs);
        let mut freq: BTreeMap<&'a str, usize> = BTreeMap::new();
        for sub in subs {
            let free: Vec<&str> =
                sub.vars().into_iter().filter(|v| !env.contains_key(v)).collect();
            if free.len() < 2 {
                continue;
            }
            let mut undecided: Vec<&Atom> = Vec::new();
            collect_undecided_atoms(sub, env, &mut undecided);
            for a in &undecided {
                for v in a.vars() {
                    if !env.contains_key(v) {
                        if let Some((&k, _)) = candidates.get_key_value(v) {
                            *freq.entry(k).or_insert(0) += 1;
                        }
                    }
                }
            }
        }
        let Some((&name, _)) = freq
            .iter()
            .min_by_key(|(&v, &n)| (core::cmp::Reverse(n), candidates[v].len(), v))
        else {
            return Ok(true);
        };
        for &value in &candidates[name] {
            *spent += 1;
            if *spent > self.cfg.budget {
                return Err(SolverError::BudgetExceeded { budget: self.cfg.budget });
            }
            env.insert(name, value);
            let mut narrowed = candidates.clone();
            let viable = self.narrow(cond, &mut narrowed, env, spent, Some(name))?;
            if viable && self.search(cond, &narrowed, env, spent)? {
                env.remove(name);
                return Ok(true);
            }
            env.remove(name);
        }
        Ok(false)
    }

    /// Deletion-minimal unsat core: the sublist of `atoms` (in original
    /// order) that still contradicts `pinned`. `pinned` itself is always
    /// kept aside and never part of the returned list. Errors if the full
    /// conjunction is satisfiable.
    pub fn unsat_core(
        &mut self,
        atoms: &[Atom],
        pinned: &Condition,
    ) -> Result<Vec<Atom>, SolverError> {
        let full = Condition::conj_atoms(atoms).and(pinned.clone());
        if self.probe_sat(&full)? {
            return Err(SolverError::CoreOfSatisfiable);
        }
        let mut kept: Vec<Atom> = atoms.to_vec();
        let mut i = 0;
        while i < kept.len() {
            let mut trial: Vec<Atom> = kept.clone();
            trial.remove(i);
            let c = Condition::conj_atoms(&trial).and(pinned.clone());
            if self.probe_sat(&c)? {
                i += 1; // atom is load-bearing
            } else {
                kept = trial;
            }
        }
        self.counters.core_extractions += 1;
        Ok(kept)
    }

    /// A condition over the single variable of `psc` that is implied by
    /// `core` and still contradicts `psc`. Built by eliminating every other
    /// variable from the core's inequalities with integer-floored bound
    /// combination, then validated over the bounded domain. Returns `None`
    /// when the core contains a disequality, when `psc` does not mention
    /// exactly one variable, when elimination leaves no constraint on that
    /// variable, or when validation fails.
    pub fn interpolant(
        &mut self,
        core: &[Atom],
        psc: &Condition,
    ) -> Result<Option<Condition>, SolverError> {
        let psc_vars: Vec<&str> = psc.vars().into_iter().collect();
        let [v] = psc_vars[..] else { return Ok(None) };
        let v = v.to_owned();
        if core.iter().any(has_disequality) {
            return Ok(None);
        }
        let Some(gamma) = eliminate_to_var(core, &v) else { return Ok(None) };
        // Soundness of the direction core => gamma is by construction; the
        // conflict direction can be lost when elimination over-approximates
        // the integer projection, so both are re-checked before recording.
        let implied = !self.probe_sat(&Condition::conj_atoms(core).and(gamma.clone().negate()))?;
        let conflicts = !self.probe_sat(&gamma.clone().and(psc.clone()))?;
        if !implied || !conflicts {
            return Ok(None);
        }
        self.counters.interpolations += 1;
        Ok(Some(gamma))
    }

    /// Relation of two property state conditions over the bounded domain.
    pub fn classify_psc_pair(&self, a: &Condition, b: &Condition) -> Result<PscRelation, SolverError> {
        if !self.probe_sat(&a.clone().and(b.clone()))? {
            return Ok(PscRelation::Disjoint);
        }
        let a_in_b = !self.probe_sat(&a.clone().and(b.clone().negate()))?;
        let b_in_a = !self.probe_sat(&b.clone().and(a.clone().negate()))?;
        Ok(match (a_in_b, b_in_a) {
            (true, true) => PscRelation::Implies(ImpliesDir::Equivalent),
            (true, false) => PscRelation::Implies(ImpliesDir::FirstIntoSecond),
            (false, true) => PscRelation::Implies(ImpliesDir::SecondIntoFirst),
            (false, false) => PscRelation::Overlapping,
        })
    }

    /// True when `a` and `b` jointly cover the whole domain.
    pub fn pair_exhaustive(&self, a: &Condition, b: &Condition) -> Result<bool, SolverError> {
        let neither = Condition::Or(
            alloc::boxed::Box::new(a.clone()),
            alloc::boxed::Box::new(b.clone()),
        )
        .negate();
        Ok(!self.probe_sat(&neither)?)
    }
}

/// Subformulas in conjunctive positions that are still undecided under
/// `env`: leaves and non-`And` subtrees reachable through undecided `And`
/// nodes. Every one of them must evaluate to true in any extension.
fn collect_conjunct_subs<'a>(
    cond: &'a Condition,
    env: &BTreeMap<&str, i64>,
    out: &mut Vec<&'a Condition>,
) {
    if cond.eval_partial(env).is_some() {
        return;
    }
    match cond {
        Condition::And(a, b) => {
            collect_conjunct_subs(a, env, out);
            collect_conjunct_subs(b, env, out);
        }
        _ => out.push(cond),
    }
}

/// Atoms that can still swing the verdict under `env`: undecided leaves
/// that are not sealed inside an already decided subformula.
fn collect_undecided_atoms<'a>(
    cond: &'a Condition,
    env: &BTreeMap<&str, i64>,
    out: &mut Vec<&'a Atom>,
) {
    if cond.eval_partial(env).is_some() {
        return;
    }
    match cond {
        Condition::True | Condition::False => {}
        Condition::Atom(a) => out.push(a),
        Condition::And(a, b) | Condition::Or(a, b) => {
            collect_undecided_atoms(a, env, out);
            collect_undecided_atoms(b, env, out);
        }
        Condition::Not(a) => collect_undecided_atoms(a, env, out),
    }
}

fn has_disequality(atom: &Atom) -> bool {
    matches!(
        atom,
        Atom::VarConst { cmp: Cmp::Ne, .. }
            | Atom::VarVar { cmp: Cmp::Ne, .. }
            | Atom::SumConst { cmp: Cmp::Ne, .. }
    )
}

/// One `sum(coeffs) <= bound` (or `< bound` when strict) inequality.
#[derive(Clone, Debug)]
struct LinIneq {
    coeffs: BTreeMap<String, i128>,
    bound: i128,
    strict: bool,
}

impl LinIneq {
    fn normalized(mut self) -> Option<NormIneq> {
        self.coeffs.retain(|_, c| *c != 0);
        if self.coeffs.is_empty() {
            let holds = if self.strict { 0 < self.bound } else { 0 <= self.bound };
            return Some(if holds { NormIneq::Tautology } else { NormIneq::Contradiction });
        }
        Some(NormIneq::Ineq(self))
    }
}

enum NormIneq {
    Tautology,
    Contradiction,
    Ineq(LinIneq),
}

fn atom_ineqs(atom: &Atom) -> Vec<LinIneq> {
    fn one(coeffs: &[(&str, i128)], cmp: Cmp, k: i128) -> Vec<LinIneq> {
        let mut pos: BTreeMap<String, i128> = BTreeMap::new();
        let mut neg: BTreeMap<String, i128> = BTreeMap::new();
        for (v, c) in coeffs {
            *pos.entry((*v).to_owned()).or_insert(0) += c;
            *neg.entry((*v).to_owned()).or_insert(0) -= c;
        }
        match cmp {
            Cmp::Lt => alloc::vec![LinIneq { coeffs: pos, bound: k, strict: true }],
            Cmp::Le => alloc::vec![LinIneq { coeffs: pos, bound: k, strict: false }],
            Cmp::Gt => alloc::vec![LinIneq { coeffs: neg, bound: -k, strict: true }],
            Cmp::Ge => alloc::vec![LinIneq { coeffs: neg, bound: -k, strict: false }],
            Cmp::Eq => alloc::vec![
                LinIneq { coeffs: pos, bound: k, strict: false },
                LinIneq { coeffs: neg, bound: -k, strict: false },
            ],
            Cmp::Ne => unreachable!("disequalities are rejected before translation"),
        }
    }
    match atom {
        Atom::VarConst { var, cmp, k } => one(&[(var, 1)], *cmp, *k as i128),
        Atom::VarVar { lhs, cmp, rhs } => one(&[(lhs, 1), (rhs, -1)], *cmp, 0),
        Atom::SumConst { a, b, cmp, k } => {
            if a == b {
                one(&[(a, 2)], *cmp, *k as i128)
            } else {
                one(&[(a, 1), (b, 1)], *cmp, *k as i128)
            }
        }
    }
}

/// Fourier-Motzkin elimination of every variable except `keep`. Returns a
/// conjunction of bounds on `keep`, `Condition::False` when the projected
/// system is contradictory, or `None` when nothing constrains `keep`.
fn eliminate_to_var(core: &[Atom], keep: &str) -> Option<Condition> {
    let mut ineqs: Vec<LinIneq> = Vec::new();
    for atom in core {
        for li in atom_ineqs(atom) {
            match li.normalized()? {
                NormIneq::Tautology => {}
                NormIneq::Contradiction => return Some(Condition::False),
                NormIneq::Ineq(i) => ineqs.push(i),
            }
        }
    }
    let mut to_drop: BTreeSet<String> = BTreeSet::new();
    for i in &ineqs {
        for v in i.coeffs.keys() {
            if v != keep {
                to_drop.insert(v.clone());
            }
        }
    }
    for w in to_drop {
        let (touching, rest): (Vec<LinIneq>, Vec<LinIneq>) =
            ineqs.into_iter().partition(|i| i.coeffs.contains_key(&w));
        let (upper, lower): (Vec<LinIneq>, Vec<LinIneq>) =
            touching.into_iter().partition(|i| i.coeffs[&w] > 0);
        ineqs = rest;
        for u in &upper {
            for l in &lower {
                let cu = u.coeffs[&w]; // > 0
                let cl = -l.coeffs[&w]; // > 0
                let mut coeffs: BTreeMap<String, i128> = BTreeMap::new();
                for (v, c) in &u.coeffs {
                    *coeffs.entry(v.clone()).or_insert(0) += cl.checked_mul(*c)?;
                }
                for (v, c) in &l.coeffs {
                    *coeffs.entry(v.clone()).or_insert(0) += cu.checked_mul(*c)?;
                }
                let bound = cl.checked_mul(u.bound)?.checked_add(cu.checked_mul(l.bound)?)?;
                let combined =
                    LinIneq { coeffs, bound, strict: u.strict || l.strict };
                match combined.normalized()? {
                    NormIneq::Tautology => {}
                    NormIneq::Contradiction => return Some(Condition::False),
                    NormIneq::Ineq(i) => ineqs.push(i),
                }
            }
        }
    }
    // All survivors constrain `keep` alone; turn them into integer bounds.
    let mut upper: Option<i64> = None;
    let mut lower: Option<i64> = None;
    for i in &ineqs {
        let c = i.coeffs[keep];
        debug_assert!(c != 0 && i.coeffs.len() == 1);
        if c > 0 {
            // c*v <= b  (or < b)  =>  v <= floor(b'/c) with b' = b or b-1
            let b = if i.strict { i.bound - 1 } else { i.bound };
            let u = i64::try_from(b.div_euclid(c)).ok()?;
            upper = Some(upper.map_or(u, |cur| cur.min(u)));
        } else {
            // c*v <= b with c < 0  =>  d*v >= -b' with d = -c
            let d = -c;
            let b = if i.strict { -i.bound + 1 } else { -i.bound };
            // v >= ceil(b/d)
            let l = i64::try_from((b + d - 1).div_euclid(d)).ok()?;
            lower = Some(lower.map_or(l, |cur| cur.max(l)));
        }
    }
    let mut parts: Vec<Condition> = Vec::new();
    if let Some(l) = lower {
        parts.push(Condition::Atom(Atom::var_const(keep, Cmp::Ge, l)));
    }
    if let Some(u) = upper {
        parts.push(Condition::Atom(Atom::var_const(keep, Cmp::Le, u)));
    }
    if parts.is_empty() {
        return None;
    }
    Some(Condition::conj(parts))
}
