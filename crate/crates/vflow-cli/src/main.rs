//! Command line front end: load a graph and a property list (or generate
//! a seeded workload), run one of the two engines, aggregate, and print a
//! text or JSON report.
//!
//! Exit codes: 0 the analysis ran (with or without bugs), 1 unusable
//! input, 2 solver budget exceeded, 3 internal invariant violation.

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};

use vflow_core::aggregate::{aggregate_property, BugReport, Verdict};
use vflow_core::engine::{
    check_catapult, check_naive, AnalysisStats, EngineConfig, EngineError, FeasiblePath, Mode,
    RuleMask,
};
use vflow_core::graph::ValueFlowGraph;
use vflow_core::parse::parse_program;
use vflow_core::props::{parse_props, PropertySpec};
use vflow_core::solver::{Solver, SolverConfig, SolverCounters, SolverError};
use vflow_core::summaries::{
    bottom_up_schedule, build_function_summaries, build_summary_db, parse_summaries,
    print_summaries, SummaryDb, SummaryError,
};
use vflow_core::workload::{gen_workload, GenParams};
use vflow_core::EngineKind;

const EXIT_INPUT: u8 = 1;
const EXIT_BUDGET: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

/// Value-flow bug finder: checks source-to-sink flow properties with
/// guard conditions over a program graph, many properties per traversal.
#[derive(Parser)]
#[command(name = "vflow", version)]
struct Cli {
    /// Program graph file (.vfg); omit when generating with --gen
    #[arg(requires = "props", conflicts_with = "gen")]
    graph: Option<PathBuf>,

    /// Property list file (.prop)
    #[arg(conflicts_with = "gen")]
    props: Option<PathBuf>,

    /// Engine: the shared-pass analysis or the per-property reference
    #[arg(long, value_enum, default_value_t = EngineArg::Catapult)]
    engine: EngineArg,

    /// Walk the whole graph or candidates stitched from function summaries
    #[arg(long, value_enum, default_value_t = ModeArg::Intra)]
    mode: ModeArg,

    /// Bitmask enabling sharing rules 1..=8 (bit k-1 toggles rule k)
    #[arg(long, value_name = "MASK", default_value_t = 255)]
    rule_mask: u8,

    /// Comma-separated property names fixing the check order; must name
    /// every loaded property exactly once
    #[arg(long, value_name = "NAMES")]
    order: Option<String>,

    /// Solver domain half-width: values range over [-N, N-1]
    #[arg(long, value_name = "N", default_value_t = 64,
          value_parser = clap::value_parser!(i64).range(1..=1_000_000))]
    domain_bound: i64,

    /// Worker threads; 1 runs fully sequential
    #[arg(long, value_name = "N", default_value_t = 1,
          value_parser = clap::value_parser!(u32).range(1..=512))]
    threads: u32,

    /// Print the report as JSON instead of text
    #[arg(long)]
    json: bool,

    /// Generate the workload from this seed instead of reading files
    #[arg(long, value_name = "SEED")]
    gen: Option<u64>,

    /// Generator parameter file (`key value` lines)
    #[arg(long, value_name = "FILE", requires = "gen")]
    gen_params: Option<PathBuf>,

    /// Write the generated workload to PREFIX.vfg and PREFIX.prop
    #[arg(long, value_name = "PREFIX", requires = "gen")]
    dump_workload: Option<PathBuf>,

    /// Load function summaries from a .vfsum file instead of building them
    #[arg(long, value_name = "FILE")]
    summaries: Option<PathBuf>,

    /// Write the function summaries that were used to FILE (.vfsum)
    #[arg(long, value_name = "FILE")]
    dump_summaries: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EngineArg {
    Naive,
    Catapult,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Intra,
    Summary,
}

/// A run that cannot produce a report, with the exit code it earns.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: String) -> Failure {
        Failure { code: EXIT_INPUT, message }
    }

    fn internal(message: String) -> Failure {
        Failure { code: EXIT_INTERNAL, message }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version print to stdout and succeed; everything
            // else is an input error, kept off the budget exit code.
            let failed = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if failed { EXIT_INPUT } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("vflow: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if cli.summaries.is_some() && cli.mode != ModeArg::Summary {
        return Err(Failure::input("--summaries requires --mode summary".into()));
    }
    let pool = match cli.threads {
        1 => None,
        n => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(n as usize)
                .build()
                .map_err(|e| Failure::input(format!("cannot start {} threads: {}", n, e)))?,
        ),
    };

    let (g, specs) = load_workload(cli)?;
    let cfg = engine_config(cli, &specs)?;
    let db = prepare_summaries(cli, &g, &specs, pool.as_ref())?;
    if let Some(file) = &cli.dump_summaries {
        let text = print_summaries(&g, db.as_ref().expect("summaries were just prepared"));
        fs::write(file, text)
            .map_err(|e| Failure::input(format!("{}: {}", file.display(), e)))?;
    }

    let kind = match cli.engine {
        EngineArg::Naive => EngineKind::Naive,
        EngineArg::Catapult => EngineKind::Catapult,
    };
    let engine_db = match cfg.mode {
        Mode::Summary => db.as_ref(),
        Mode::Intra => None,
    };
    // A panic past this point means a broken engine invariant, not bad
    // input; report it on the dedicated exit code instead of aborting.
    let report = catch_unwind(AssertUnwindSafe(|| {
        drive(&g, &specs, kind, &cfg, engine_db, pool.as_ref())
    }))
    .map_err(|payload| Failure::internal(format!("invariant violated: {}", panic_text(&payload))))?
    .map_err(engine_failure)?;

    if cli.json {
        let rendered = serde_json::to_string_pretty(&json_report(&g, &report))
            .expect("report serialization cannot fail");
        println!("{}", rendered);
    } else {
        print!("{}", text_report(&g, cli, &report));
    }
    Ok(())
}

fn panic_text(payload: &(dyn std::any::Any + Send)) -> &str {
    if let Some(s) = payload.downcast_ref::<&str>() {
        s
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s
    } else {
        "engine panicked"
    }
}

fn read_file(path: &PathBuf) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {}", path.display(), e)))
}

/// Read the graph and property files, or generate both from the seed.
fn load_workload(cli: &Cli) -> Result<(ValueFlowGraph, Vec<PropertySpec>), Failure> {
    if let Some(seed) = cli.gen {
        let params = match &cli.gen_params {
            Some(file) => {
                let text = read_file(file)?;
                GenParams::parse(&text)
                    .map_err(|e| Failure::input(format!("{}: {}", file.display(), e)))?
            }
            None => GenParams::default(),
        };
        let w = gen_workload(seed, &params);
        if let Some(prefix) = &cli.dump_workload {
            for (ext, text) in [("vfg", &w.graph_text), ("prop", &w.props_text)] {
                let path = PathBuf::from(format!("{}.{}", prefix.display(), ext));
                fs::write(&path, text)
                    .map_err(|e| Failure::input(format!("{}: {}", path.display(), e)))?;
            }
        }
        let g = parse_program(&w.graph_text)
            .map_err(|e| Failure::internal(format!("generated graph does not parse: {}", e)))?;
        let specs = parse_props(&w.props_text).map_err(|e| {
            Failure::internal(format!("generated properties do not parse: {}", e))
        })?;
        Ok((g, specs))
    } else {
        let (Some(graph_file), Some(props_file)) = (&cli.graph, &cli.props) else {
            return Err(Failure::input(
                "expected a GRAPH file and a PROPS file, or --gen SEED".into(),
            ));
        };
        let graph_text = read_file(graph_file)?;
        let g = parse_program(&graph_text)
            .map_err(|e| Failure::input(format!("{}:{}", graph_file.display(), e)))?;
        let props_text = read_file(props_file)?;
        let specs = parse_props(&props_text)
            .map_err(|e| Failure::input(format!("{}:{}", props_file.display(), e)))?;
        Ok((g, specs))
    }
}

fn engine_config(cli: &Cli, specs: &[PropertySpec]) -> Result<EngineConfig, Failure> {
    let mut solver = SolverConfig::with_domain_bound(cli.domain_bound);
    if let Ok(raw) = std::env::var("VFLOW_SOLVER_BUDGET") {
        match raw.trim().parse::<u64>() {
            Ok(n) if n > 0 => solver.budget = n,
            _ => {
                return Err(Failure::input(format!(
                    "VFLOW_SOLVER_BUDGET must be a positive integer, got `{}`",
                    raw
                )))
            }
        }
    }
    let forced_order = match &cli.order {
        Some(raw) => Some(parse_order(raw, specs)?),
        None => None,
    };
    Ok(EngineConfig {
        solver,
        mode: match cli.mode {
            ModeArg::Intra => Mode::Intra,
            ModeArg::Summary => Mode::Summary,
        },
        rules: RuleMask::from_bits(cli.rule_mask),
        forced_order,
        ..EngineConfig::default()
    })
}

fn parse_order(raw: &str, specs: &[PropertySpec]) -> Result<Vec<String>, Failure> {
    let names: Vec<String> = raw
        .split(',')
        .map(|s| s.trim().to_owned())
        .filter(|s| !s.is_empty())
        .collect();
    let mut expect: Vec<&str> = specs.iter().map(|s| s.name.as_str()).collect();
    if let Some(bad) = names.iter().find(|n| !expect.contains(&n.as_str())) {
        return Err(Failure::input(format!("--order names unknown property `{}`", bad)));
    }
    let mut got: Vec<&str> = names.iter().map(String::as_str).collect();
    got.sort_unstable();
    expect.sort_unstable();
    if got != expect {
        return Err(Failure::input(format!(
            "--order must name every property exactly once: {}",
            expect.join(", ")
        )));
    }
    Ok(names)
}

/// Load or build the summary database when the run needs one. Building
/// honors the bottom-up schedule; inside a batch the functions only read
/// earlier batches, so they summarize in parallel when a pool exists.
fn prepare_summaries(
    cli: &Cli,
    g: &ValueFlowGraph,
    specs: &[PropertySpec],
    pool: Option<&rayon::ThreadPool>,
) -> Result<Option<SummaryDb>, Failure> {
    if let Some(file) = &cli.summaries {
        let text = read_file(file)?;
        return parse_summaries(g, &text)
            .map(Some)
            .map_err(|e| Failure::input(format!("{}:{}", file.display(), e)));
    }
    if cli.mode != ModeArg::Summary && cli.dump_summaries.is_none() {
        return Ok(None);
    }
    let db = match pool {
        None => build_summary_db(g, specs).map_err(summary_failure)?,
        Some(p) => {
            let schedule = bottom_up_schedule(g).map_err(summary_failure)?;
            let mut db = SummaryDb { per_fn: Default::default(), width: specs.len() };
            for batch in schedule {
                let built: Vec<_> = p.install(|| {
                    batch
                        .par_iter()
                        .map(|&f| (f, build_function_summaries(g, f, specs, &db)))
                        .collect()
                });
                for (f, sums) in built {
                    db.per_fn.insert(f, sums);
                }
            }
            db
        }
    };
    Ok(Some(db))
}

fn summary_failure(e: SummaryError) -> Failure {
    Failure::input(e.to_string())
}

fn engine_failure(e: EngineError) -> Failure {
    match e {
        EngineError::Solver(SolverError::BudgetExceeded { .. }) => {
            Failure { code: EXIT_BUDGET, message: e.to_string() }
        }
        EngineError::Solver(SolverError::CoreOfSatisfiable) => Failure::internal(e.to_string()),
        EngineError::Summary(_) | EngineError::UnknownProperty(_) => Failure::input(e.to_string()),
    }
}

struct Report {
    plan: Option<String>,
    properties: Vec<PropReport>,
    stats: AnalysisStats,
}

struct PropReport {
    name: String,
    paths: Vec<FeasiblePath>,
    bugs: Vec<BugReport>,
}

/// Engine pass, then aggregation. Each property aggregates with its own
/// solver so the step can fan out across the pool; counters fold back in
/// property order, which keeps the totals identical to a sequential run.
fn drive(
    g: &ValueFlowGraph,
    specs: &[PropertySpec],
    kind: EngineKind,
    cfg: &EngineConfig,
    db: Option<&SummaryDb>,
    pool: Option<&rayon::ThreadPool>,
) -> Result<Report, EngineError> {
    let (mut paths, mut stats, plan) = match kind {
        EngineKind::Naive => {
            let (p, s) = check_naive(g, specs, cfg, db)?;
            (p, s, None)
        }
        EngineKind::Catapult => {
            let o = check_catapult(g, specs, cfg, db)?;
            (o.paths, o.stats, Some(o.plan.describe(g)))
        }
    };

    let jobs: Vec<(&PropertySpec, Vec<FeasiblePath>)> = specs
        .iter()
        .map(|spec| (spec, paths.remove(&spec.bit).unwrap_or_default()))
        .collect();
    type AggResult = Result<(Vec<BugReport>, SolverCounters), SolverError>;
    let aggregate_one = |job: &(&PropertySpec, Vec<FeasiblePath>)| -> AggResult {
        let mut solver = Solver::new(cfg.solver.clone());
        let bugs = aggregate_property(g, job.0, &job.1, &mut solver)?;
        Ok((bugs, solver.counters))
    };
    let results: Vec<AggResult> = match pool {
        None => jobs.iter().map(aggregate_one).collect(),
        Some(p) => p.install(|| jobs.par_iter().map(aggregate_one).collect()),
    };

    let mut properties = Vec::new();
    for ((spec, prop_paths), result) in jobs.into_iter().zip(results) {
        let (bugs, counters) = result?;
        stats.solver.absorb(&counters);
        properties.push(PropReport { name: spec.name.clone(), paths: prop_paths, bugs });
    }
    Ok(Report { plan, properties, stats })
}

fn verdict_token(v: &Verdict) -> &'static str {
    match v {
        Verdict::PathBug => "path-bug",
        Verdict::PairBug => "pair-bug",
        Verdict::LeakBug => "leak-bug",
    }
}

fn text_report(g: &ValueFlowGraph, cli: &Cli, report: &Report) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    match &report.plan {
        Some(plan) => s.push_str(plan),
        None => s.push_str("plan: independent per-property passes\n"),
    }
    for prop in &report.properties {
        let _ = writeln!(
            s,
            "{}: {} feasible path{}, {} bug{}",
            prop.name,
            prop.paths.len(),
            plural(prop.paths.len()),
            prop.bugs.len(),
            plural(prop.bugs.len()),
        );
        for bug in &prop.bugs {
            let from = g.vname(bug.source);
            match bug.verdict {
                Verdict::PathBug => {
                    let _ = writeln!(s, "  path-bug from {}: {}", from, bug.witness[0].display(g));
                }
                Verdict::PairBug => {
                    let _ = writeln!(s, "  pair-bug from {}:", from);
                    for w in &bug.witness {
                        let _ = writeln!(s, "    {}", w.display(g));
                    }
                }
                Verdict::LeakBug => {
                    let _ = writeln!(s, "  leak-bug from {}: every sink path avoidable", from);
                }
            }
            let _ = writeln!(s, "    when {}", bug.condition);
        }
    }
    let st = &report.stats;
    let _ = writeln!(s, "stats (rule mask 0b{:08b}):", cli.rule_mask);
    let _ = writeln!(s, "  vertices_visited  {}", st.vertices_visited);
    let _ = writeln!(s, "  sat_queries       {}", st.solver.sat_queries);
    let _ = writeln!(s, "  core_extractions  {}", st.solver.core_extractions);
    let _ = writeln!(s, "  interpolations    {}", st.solver.interpolations);
    let _ = writeln!(s, "  pruned_psc        {}", st.pruned_psc);
    let _ = writeln!(s, "  pruned_rule2      {}", st.pruned_rule2);
    let _ = writeln!(s, "  pruned_rule34     {}", st.pruned_rule34);
    let _ = writeln!(s, "  psc_checks_saved  {}", st.psc_checks_saved);
    s
}

fn plural(n: usize) -> &'static str {
    if n == 1 {
        ""
    } else {
        "s"
    }
}

fn json_report(g: &ValueFlowGraph, report: &Report) -> Value {
    let properties: Vec<Value> = report
        .properties
        .iter()
        .map(|prop| {
            let bugs: Vec<Value> = prop
                .bugs
                .iter()
                .map(|b| {
                    let witness: Vec<Vec<&str>> = b
                        .witness
                        .iter()
                        .map(|w| w.verts().iter().map(|&v| g.vname(v)).collect())
                        .collect();
                    json!({
                        "verdict": verdict_token(&b.verdict),
                        "source": g.vname(b.source),
                        "witness": witness,
                        "condition": b.condition.to_string(),
                    })
                })
                .collect();
            json!({ "name": prop.name, "bugs": bugs })
        })
        .collect();
    let st = &report.stats;
    json!({
        "plan": report.plan,
        "properties": properties,
        "stats": {
            "vertices_visited": st.vertices_visited,
            "solver": {
                "sat_queries": st.solver.sat_queries,
                "core_extractions": st.solver.core_extractions,
                "interpolations": st.solver.interpolations,
            },
            "pruned_psc": st.pruned_psc,
            "pruned_rule2": st.pruned_rule2,
            "pruned_rule34": st.pruned_rule34,
            "psc_checks_saved": st.psc_checks_saved,
        },
    })
}
