//! Cramér–von-Mises indices through rank and nearest-neighbour statistics.
//!
//! With `R_i = #{j : y_j ≤ y_i}`, `L_i = #{j : y_j ≥ y_i}`, `N(i)` the nearest
//! neighbour of `z_i` and `M(i)` the nearest neighbour of `(x_i, z_i)`:
//!
//! ```text
//! T_n(y, x | z) = Σ (min(R_i, R_M(i)) − min(R_i, R_N(i))) / Σ (R_i − min(R_i, R_N(i)))
//! T_n(y, z)     = Σ (n·min(R_i, R_M(i)) − L_i²) / Σ L_i (n − L_i)      (M = NN in z)
//! U_n           = T_n(y, x_i | x_~i) · (1 − T_n(y, x_~i))
//! Q_n           = n⁻² Σ (min(R_j, R_M(j)) − min(R_j, R_N(j)))
//! S_n           = n⁻³ Σ L_j (n − L_j)
//! ```
//!
//! Sums are accumulated in integers, so every estimator is exactly invariant
//! under strictly increasing transforms of `y`.

mod bootstrap;
mod grouped;

pub use bootstrap::{bootstrap_ci, MIN_REPLICATES};
pub(crate) use grouped::grouped_conditional_index_min;
pub use grouped::{
    between_group_share, group_keys, grouped_conditional_index, is_discrete, GroupKey,
};

use ndarray::{concatenate, Array2, ArrayView2, Axis};
use serde::Serialize;

use crate::dataset::{nearest_neighbors_grouped, ranks, DataTable, Role};
use crate::error::{Error, Result};
use crate::sobol::IndexEstimate;

const MIN_ROWS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CvmKind {
    Classical,
    Independent,
    IndependentAlt,
    ConditionalT,
    UnconditionalT,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvmEstimate {
    pub value: f64,
    pub kind: CvmKind,
    pub n: usize,
    pub ci: Option<IndexEstimate>,
    pub tie_seed: u64,
}

impl CvmEstimate {
    fn new(value: f64, kind: CvmKind, n: usize, tie_seed: u64) -> Self {
        Self {
            value,
            kind,
            n,
            ci: None,
            tie_seed,
        }
    }
}

fn check_rows(n: usize, other: usize) -> Result<()> {
    if other != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: other,
        });
    }
    if n < MIN_ROWS {
        return Err(Error::TooFewRows {
            needed: MIN_ROWS,
            got: n,
        });
    }
    Ok(())
}

/// Integer numerator and denominator of `T_n(y, x | z)`.
fn conditional_parts(
    y: &[f64],
    x: ArrayView2<f64>,
    z: ArrayView2<f64>,
    groups: Option<&[usize]>,
    tie_seed: u64,
) -> Result<(i64, i64)> {
    let n = y.len();
    check_rows(n, x.nrows())?;
    check_rows(n, z.nrows())?;
    if z.ncols() == 0 {
        return Err(Error::InvalidArgument("conditioning set is empty".into()));
    }
    let r = ranks(y)?.ranks;
    let nn_z = nearest_neighbors_grouped(z, groups, tie_seed)?.nn_index;
    let xz = concatenate(Axis(1), &[x, z]).expect("row counts checked");
    let nn_xz = nearest_neighbors_grouped(xz.view(), groups, tie_seed)?.nn_index;
    let mut num = 0i64;
    let mut den = 0i64;
    for i in 0..n {
        let ri = r[i] as i64;
        let via_z = ri.min(r[nn_z[i]] as i64);
        num += ri.min(r[nn_xz[i]] as i64) - via_z;
        den += ri - via_z;
    }
    Ok((num, den))
}

/// Integer numerator and denominator of `T_n(y, z)`.
fn unconditional_parts(
    y: &[f64],
    z: ArrayView2<f64>,
    groups: Option<&[usize]>,
    tie_seed: u64,
) -> Result<(i128, i128)> {
    let n = y.len();
    check_rows(n, z.nrows())?;
    let rv = ranks(y)?;
    let nn = nearest_neighbors_grouped(z, groups, tie_seed)?.nn_index;
    let nn_i = n as i128;
    let mut num = 0i128;
    let mut den = 0i128;
    for i in 0..n {
        let l = rv.geq_counts[i] as i128;
        num += nn_i * (rv.ranks[i].min(rv.ranks[nn[i]]) as i128) - l * l;
        den += l * (nn_i - l);
    }
    Ok((num, den))
}

pub fn conditional_t(
    y: &[f64],
    x: ArrayView2<f64>,
    z: ArrayView2<f64>,
    tie_seed: u64,
) -> Result<CvmEstimate> {
    conditional_t_grouped(y, x, z, None, tie_seed)
}

/// [`conditional_t`] where rows sharing a group id are never neighbours.
pub fn conditional_t_grouped(
    y: &[f64],
    x: ArrayView2<f64>,
    z: ArrayView2<f64>,
    groups: Option<&[usize]>,
    tie_seed: u64,
) -> Result<CvmEstimate> {
    let (num, den) = conditional_parts(y, x, z, groups, tie_seed)?;
    if den == 0 {
        return Err(Error::DegenerateDenominator);
    }
    Ok(CvmEstimate::new(
        num as f64 / den as f64,
        CvmKind::ConditionalT,
        y.len(),
        tie_seed,
    ))
}

pub fn unconditional_t(y: &[f64], z: ArrayView2<f64>, tie_seed: u64) -> Result<CvmEstimate> {
    unconditional_t_grouped(y, z, None, tie_seed)
}

pub fn unconditional_t_grouped(
    y: &[f64],
    z: ArrayView2<f64>,
    groups: Option<&[usize]>,
    tie_seed: u64,
) -> Result<CvmEstimate> {
    let (num, den) = unconditional_parts(y, z, groups, tie_seed)?;
    if den == 0 {
        return Err(Error::DegenerateDenominator);
    }
    Ok(CvmEstimate::new(
        num as f64 / den as f64,
        CvmKind::UnconditionalT,
        y.len(),
        tie_seed,
    ))
}

/// `Q_n(y, x | z)`.
pub fn q_n(y: &[f64], x: ArrayView2<f64>, z: ArrayView2<f64>, tie_seed: u64) -> Result<f64> {
    q_n_grouped(y, x, z, None, tie_seed)
}

fn q_n_grouped(
    y: &[f64],
    x: ArrayView2<f64>,
    z: ArrayView2<f64>,
    groups: Option<&[usize]>,
    tie_seed: u64,
) -> Result<f64> {
    let (num, _) = conditional_parts(y, x, z, groups, tie_seed)?;
    let n = y.len() as f64;
    Ok(num as f64 / (n * n))
}

/// `S_n(y)`.
pub fn s_n(y: &[f64]) -> Result<f64> {
    let rv = ranks(y)?;
    let n = y.len() as i128;
    let sum: i128 = rv
        .geq_counts
        .iter()
        .map(|&l| (l as i128) * (n - l as i128))
        .sum();
    let nf = y.len() as f64;
    Ok(sum as f64 / (nf * nf * nf))
}

/// Columns treated as model inputs: features and sensitive features, in table order.
pub fn input_columns(table: &DataTable) -> Vec<&str> {
    table
        .columns()
        .iter()
        .filter(|c| matches!(c.role, Role::Feature | Role::Sensitive))
        .map(|c| c.name.as_str())
        .collect()
}

fn split_inputs<'a>(table: &'a DataTable, feature: &str) -> Result<(Array2<f64>, Array2<f64>)> {
    let inputs = input_columns(table);
    if !inputs.contains(&feature) {
        return Err(Error::Schema(format!("'{feature}' is not an input column")));
    }
    let rest: Vec<&str> = inputs.into_iter().filter(|c| *c != feature).collect();
    if rest.is_empty() {
        return Err(Error::InvalidArgument(
            "independent indices need at least two input columns".into(),
        ));
    }
    Ok((table.matrix(&[feature])?, table.matrix(&rest)?))
}

/// Classical index of the input set `features`: `T_n(y, x_s)`.
pub fn cvm_classical(
    table: &DataTable,
    y: &str,
    features: &[&str],
    tie_seed: u64,
) -> Result<CvmEstimate> {
    let yv = table.values(y)?;
    let z = table.matrix(features)?;
    let mut est = unconditional_t_grouped(yv, z.view(), table.row_origin(), tie_seed)?;
    est.kind = CvmKind::Classical;
    Ok(est)
}

/// `U_n(y, x_i | x_~i) = T_n(y, x_i | x_~i) · (1 − T_n(y, x_~i))`.
pub fn cvm_independent(
    table: &DataTable,
    y: &str,
    feature: &str,
    tie_seed: u64,
) -> Result<CvmEstimate> {
    let yv = table.values(y)?;
    let (x, rest) = split_inputs(table, feature)?;
    let groups = table.row_origin();
    let cond = conditional_t_grouped(yv, x.view(), rest.view(), groups, tie_seed)?;
    let uncond = unconditional_t_grouped(yv, rest.view(), groups, tie_seed)?;
    Ok(CvmEstimate::new(
        cond.value * (1.0 - uncond.value),
        CvmKind::Independent,
        yv.len(),
        tie_seed,
    ))
}

/// `Ũ_n = Q_n(y, x_i | x_~i) / S_n(y)`.
pub fn cvm_independent_alt(
    table: &DataTable,
    y: &str,
    feature: &str,
    tie_seed: u64,
) -> Result<CvmEstimate> {
    let yv = table.values(y)?;
    let (x, rest) = split_inputs(table, feature)?;
    let s = s_n(yv)?;
    if s == 0.0 {
        return Err(Error::DegenerateDenominator);
    }
    let q = q_n_grouped(yv, x.view(), rest.view(), table.row_origin(), tie_seed)?;
    Ok(CvmEstimate::new(
        q / s,
        CvmKind::IndependentAlt,
        yv.len(),
        tie_seed,
    ))
}
