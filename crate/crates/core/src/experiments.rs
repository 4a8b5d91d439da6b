//! Synthetic Gaussian benchmarks with known indices, data from small causal
//! graphs, and interval coverage studies.

use ndarray::{array, Array2};
use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::{Column, DataTable, Role};
use crate::error::{Error, Result};
use crate::gaussian::{theoretical_sobol_linear, GaussianModel, LinearOracle};
use crate::model::{BlackBox, LinearModel};
use crate::rng::derive_seed;
use crate::sobol::{sobol_indices, IndexKind, SobolQuartet, DEFAULT_LEVEL};

/// Names of the observed inputs, in model order. The third generated variable
/// stays latent.
pub const VARIABLES: [&str; 2] = ["X", "S"];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub id: u8,
    pub n_mc: usize,
    pub seed: u64,
    pub level: f64,
}

impl ExperimentSpec {
    pub fn new(id: u8, n_mc: usize, seed: u64) -> Result<Self> {
        if !(1..=3).contains(&id) {
            return Err(Error::InvalidArgument(format!(
                "experiment id must be 1, 2 or 3, got {id}"
            )));
        }
        Ok(Self {
            id,
            n_mc,
            seed,
            level: DEFAULT_LEVEL,
        })
    }

    /// Covariance of `(X, S, U)`.
    pub fn covariance(&self) -> Array2<f64> {
        let xs = if self.id == 3 { 0.0 } else { 0.5 };
        array![[1.0, xs, 0.5], [xs, 1.0, 0.0], [0.5, 0.0, 1.0]]
    }

    /// Weights of the predictor on `(X, S)`.
    pub fn weights(&self) -> Vec<f64> {
        if self.id == 1 {
            vec![2.0, 0.0]
        } else {
            vec![0.7, 0.3]
        }
    }

    pub fn full_model(&self) -> GaussianModel {
        GaussianModel::centered(self.covariance())
            .expect("benchmark covariances are positive definite")
    }

    /// Distribution of the observed inputs `(X, S)`.
    pub fn observed_model(&self) -> Result<GaussianModel> {
        self.full_model().marginal(&[0, 1])
    }

    pub fn predictor(&self) -> LinearModel {
        LinearModel::new(self.weights())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRow {
    pub experiment: u8,
    pub variable: String,
    pub estimate: SobolQuartet,
    pub theory: LinearOracle,
}

/// Estimate the four indices of `X` and `S` with the benchmark predictor.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<ExperimentRow>> {
    run_experiment_with(spec, &mut spec.predictor())
}

/// As [`run_experiment`] with any function of `(X, S)` in place of the
/// benchmark predictor. Theory columns still refer to the benchmark predictor.
pub fn run_experiment_with(
    spec: &ExperimentSpec,
    model_fn: &mut dyn BlackBox,
) -> Result<Vec<ExperimentRow>> {
    let model = spec.observed_model()?;
    let weights = spec.weights();
    VARIABLES
        .iter()
        .enumerate()
        .map(|(i, name)| {
            Ok(ExperimentRow {
                experiment: spec.id,
                variable: name.to_string(),
                estimate: sobol_indices(model_fn, &model, &[i], spec.n_mc, spec.seed, spec.level)?,
                theory: theoretical_sobol_linear(&weights, &model, &[i])?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DagGraph {
    /// `S` and `X` independent, both feeding the output.
    A,
    /// `S` feeds `X` and the output.
    B,
    /// `S` feeds `X` only.
    C,
}

impl DagGraph {
    pub fn parse(name: &str) -> Result<DagGraph> {
        match name {
            "a" => Ok(DagGraph::A),
            "b" => Ok(DagGraph::B),
            "c" => Ok(DagGraph::C),
            _ => Err(Error::InvalidArgument(format!("unknown graph '{name}'"))),
        }
    }

    /// The output function of `(x, s)`.
    pub fn predictor(self) -> LinearModel {
        match self {
            DagGraph::A | DagGraph::B => LinearModel::new(vec![0.7, 0.3]),
            DagGraph::C => LinearModel::new(vec![2.0, 0.0]),
        }
    }
}

pub const DAG_MIN_ROWS: usize = 10;

/// Rows of `(x, s, yhat)` from the structural equations of `graph`, with a
/// latent unit-variance `u` and unit-variance `x`.
pub fn generate_dag_data(graph: DagGraph, n: usize, seed: u64) -> Result<DataTable> {
    if n < DAG_MIN_ROWS {
        return Err(Error::TooFewRows {
            needed: DAG_MIN_ROWS,
            got: n,
        });
    }
    let noise = GaussianModel::centered(Array2::eye(3))?.sample(n, seed)?;
    let mut x = Vec::with_capacity(n);
    let mut s = Vec::with_capacity(n);
    for row in noise.outer_iter() {
        let (u, sv, e) = (row[0], row[1], row[2]);
        x.push(match graph {
            DagGraph::A => 0.5 * u + 0.75f64.sqrt() * e,
            DagGraph::B | DagGraph::C => 0.5 * u + 0.5 * sv + 0.5f64.sqrt() * e,
        });
        s.push(sv);
    }
    let inputs = Array2::from_shape_fn((n, 2), |(i, j)| if j == 0 { x[i] } else { s[i] });
    let yhat = graph.predictor().predict(inputs.view())?;
    DataTable::new(vec![
        Column::new("x", Role::Feature, x),
        Column::new("s", Role::Sensitive, s),
        Column::new("yhat", Role::Prediction, yhat),
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coverage {
    pub kind: IndexKind,
    pub theory: f64,
    pub covered: usize,
    pub replicates: usize,
    pub coverage: f64,
    /// Nominal level plus or minus two binomial standard errors.
    pub band: (f64, f64),
}

pub const MIN_COVERAGE_REPLICATES: usize = 100;

/// Share of replicated intervals for `variable` that contain the oracle value,
/// for each of the four indices.
pub fn coverage_study(
    spec: &ExperimentSpec,
    variable: usize,
    replicates: usize,
    n: usize,
    level: f64,
) -> Result<Vec<Coverage>> {
    if replicates < MIN_COVERAGE_REPLICATES {
        return Err(Error::InvalidArgument(format!(
            "coverage needs at least {MIN_COVERAGE_REPLICATES} replicates, got {replicates}"
        )));
    }
    if variable >= VARIABLES.len() {
        return Err(Error::InvalidArgument(format!(
            "variable index {variable} out of range"
        )));
    }
    let model = spec.observed_model()?;
    let theory = theoretical_sobol_linear(&spec.weights(), &model, &[variable])?;
    let runs: Vec<SobolQuartet> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut f = spec.predictor();
            sobol_indices(
                &mut f,
                &model,
                &[variable],
                n,
                derive_seed(spec.seed, r as u64),
                level,
            )
        })
        .collect::<Result<_>>()?;
    let half = 2.0 * (level * (1.0 - level) / replicates as f64).sqrt();
    Ok(IndexKind::ALL
        .iter()
        .zip(theory.as_array())
        .map(|(&kind, t)| {
            let covered = runs
                .iter()
                .filter(|q| {
                    let e = q.get(kind);
                    e.ci_low <= t && t <= e.ci_high
                })
                .count();
            Coverage {
                kind,
                theory: t,
                covered,
                replicates,
                coverage: covered as f64 / replicates as f64,
                band: (level - half, level + half),
            }
        })
        .collect())
}

/// Plot-ready table: one line per index with value, interval and theory.
pub fn rows_to_csv(rows: &[ExperimentRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::InvalidArgument(e.to_string());
    w.write_record([
        "experiment",
        "variable",
        "index",
        "value",
        "stderr",
        "ci_low",
        "ci_high",
        "level",
        "method",
        "n",
        "seed",
        "theory",
    ])
    .map_err(io)?;
    for row in rows {
        for (kind, theory) in IndexKind::ALL.iter().zip(row.theory.as_array()) {
            let e = row.estimate.get(*kind);
            w.write_record([
                row.experiment.to_string(),
                row.variable.clone(),
                kind.name().to_string(),
                e.value.to_string(),
                e.stderr.to_string(),
                e.ci_low.to_string(),
                e.ci_high.to_string(),
                e.level.to_string(),
                e.method.name().to_string(),
                e.n.to_string(),
                e.seed.to_string(),
                theory.to_string(),
            ])
            .map_err(io)?;
        }
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
