//! Online balanced graph re-partitioning at desk scale.
//!
//! A graph on `ell * k` vertices starts with no edges; edges arrive online
//! and connected components must always sit on a single server. This crate
//! implements the deterministic and randomized online algorithms built
//! around a configuration ILP, the schedule maintenance they require, the
//! adversarial instance generators used for lower-bound experiments, and an
//! exact offline optimum for small instances, so competitive ratios and the
//! structural invariants can be measured and property-tested.
//!
//! Entry points:
//! - [`online::OnlineState`] drives one simulation (see `examples/`).
//! - [`harness`] runs configured experiments and writes reports.
//! - The `repartition` binary exposes `run`, `sweep`, `gen-trace` and
//!   `check-trace` subcommands on top of the harness.

pub mod adversary;
pub mod config;
pub mod harness;
pub mod ilp;
pub mod model;
pub mod online;
pub mod opt;
pub mod paging;
pub mod params;
pub mod report;
pub mod schedule;
pub mod stats;
pub mod trace;
