//! Core library for vflow: a path-sensitive value-flow analysis framework
//! that checks many source/sink reachability properties over one program
//! graph in a single traversal.
//!
//! The crate is `no_std` (with `alloc`) so the analysis core can be embedded
//! in hosts that cannot link the Rust standard library. All IO, file loading
//! and parallelism live in the companion CLI crate.
//!
//! Module map:
//! - [`cond`]: guard atoms and boolean conditions over bounded integers.
//! - [`solver`]: satisfiability, unsat cores and variable elimination
//!   interpolants over a finite integer domain.
//! - [`graph`]: the value-flow graph (vertices, guarded edges, functions).
//! - [`parse`]: the `.vfg` text format, including bind-edge synthesis and
//!   loop unrolling.
//! - [`paths`]: graph paths, context-matched path enumeration and the
//!   path-shape classifier used by the summary layer.
//! - [`props`]: property specifications (`.prop` format) and pattern
//!   matching against graph vertices.
//! - [`engine`]: the per-property baseline checker, the multi-property
//!   planned checker, and the shared statistics counters.
//! - [`summaries`]: function summaries, bottom-up scheduling, stitching,
//!   and the `.vfsum` text format.
//! - [`aggregate`]: turning feasible path sets into bug verdicts.
//! - [`workload`]: deterministic random program/property generation.

#![no_std]

extern crate alloc;

pub mod aggregate;
pub mod cond;
pub mod engine;
pub mod graph;
pub mod parse;
pub mod paths;
pub mod props;
pub mod solver;
pub mod summaries;
pub mod workload;

mod run;

pub use run::{analyze, AnalyzeError, EngineKind, PropertyResult, RunOutcome};
