//! Variance- and rank-based global sensitivity analysis for dependent inputs,
//! and its reading as a fairness audit.
//!
//! The crate is organised bottom-up:
//!
//! - [`dataset`]: column tables, CSV ingestion, ranks and exact nearest neighbours.
//! - [`gaussian`]: Gaussian input models, the inverse Rosenblatt transform and
//!   the four pick-freeze samples.
//! - [`sobol`]: the four extended Sobol' estimators and their delta-method errors.
//! - [`cvm`]: Cramér–von-Mises indices through rank/nearest-neighbour statistics,
//!   plus percentile bootstrap intervals.
//! - [`fairness`]: fairness measures expressed as sensitivity indices, with
//!   CI-aware verdicts, intersectional and causal screening.
//! - [`experiments`]: the synthetic Gaussian DAG benchmarks and coverage studies.
//! - [`report`]: the versioned JSON audit report.

pub mod cvm;
pub mod dataset;
pub mod error;
pub mod experiments;
pub mod fairness;
pub mod gaussian;
pub mod model;
pub mod report;
mod rng;
pub mod sobol;

pub use dataset::{DataTable, NeighborMap, RankVector, Role};
pub use error::{Error, Result};
pub use gaussian::{FourSamples, GaussianModel, Ordering};
pub use model::{BlackBox, FnModel, LinearModel};
pub use sobol::{IndexEstimate, IndexKind, Method, PickFreezeBlock, SobolQuartet};

/// Version string embedded in every report.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
