//! Decentralized smoothed online convex optimization (SOCO) on dynamic graphs.
//!
//! Agents on an undirected, per-round graph pay a strongly convex hitting cost,
//! a squared-distance switching cost against their previous action, and a
//! dissimilarity cost `(β/2)‖A xⁱ − A xʲ‖²` on every edge. This crate provides:
//!
//! - [`instance`]: the problem model and instance generators,
//! - [`graph`]: dynamic graph snapshots, D-regular construction and spectral bounds,
//! - [`costs`]: evaluation of every objective term,
//! - [`oracles`]: centralized reference solvers (per-round exact, offline optimum),
//! - [`acord`]: the decentralized alternating-minimization algorithm,
//! - [`baselines`]: LPC, FTM, LOCAL, per-agent ROBD and consensus comparators,
//! - [`simnet`]: the bulk-synchronous message-passing harness and its ledger,
//! - [`runner`]: sweeps, competitive-ratio reports and CSV/JSON output.
//!
//! Rounds are indexed from 0 in code; round `t` here is round `t + 1` in the
//! usual 1-based horizon notation.

pub mod acord;
pub mod baselines;
pub mod costs;
pub mod error;
pub mod graph;
pub mod instance;
pub(crate) mod linalg;
pub mod oracles;
pub mod runner;
pub mod simnet;

pub use error::{Result, SocoError};

/// A d-dimensional agent action.
pub type Action = nalgebra::DVector<f64>;
