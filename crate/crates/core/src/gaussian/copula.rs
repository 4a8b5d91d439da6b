use ndarray::{Array1, Array2, ArrayView2};

use super::{
    normal_cdf, normal_quantile, pick_freeze_samples_with, FourSamples, GaussianModel, Ordering,
};
use crate::dataset::{ranks, DataTable};
use crate::error::{Error, Result};

const RIDGE_LADDER: [f64; 7] = [0.0, 1e-10, 1e-8, 1e-6, 1e-4, 1e-2, 1.0];

/// A Gaussian copula fitted to observational columns: a zero-mean Gaussian
/// model on normal scores plus the empirical marginals used to map samples
/// back to the data scale.
#[derive(Debug, Clone)]
pub struct GaussianCopula {
    model: GaussianModel,
    columns: Vec<String>,
    sorted_marginals: Vec<Vec<f64>>,
    ridge: f64,
}

impl GaussianCopula {
    pub fn model(&self) -> &GaussianModel {
        &self.model
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    /// Ridge added to the score covariance to make it factorisable.
    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    /// Map one Gaussian-scale point to the data scale in place via the
    /// empirical quantile of each column.
    pub fn to_data_scale(&self, row: &mut [f64]) {
        for (j, v) in row.iter_mut().enumerate() {
            let sorted = &self.sorted_marginals[j];
            let sd = self.model.covariance()[[j, j]].sqrt();
            let u = normal_cdf(*v / sd);
            let n = sorted.len();
            let k = ((u * n as f64).ceil() as usize).clamp(1, n) - 1;
            *v = sorted[k];
        }
    }

    /// Pick-freeze samples on the data scale.
    pub fn pick_freeze_samples(
        &self,
        ordering: &Ordering,
        shared: usize,
        n: usize,
        seed: u64,
    ) -> Result<FourSamples> {
        let samples = pick_freeze_samples_with(&self.model, ordering, shared, n, seed)?;
        Ok(samples.map_rows(|row| self.to_data_scale(row)))
    }
}

/// Fit a Gaussian copula to the named columns.
///
/// Each column becomes normal scores `Φ⁻¹((R_i - 0.5) / n)`; the model is the
/// zero-mean Gaussian with the scores' empirical covariance, plus the smallest
/// ridge `δ I` from `{0, 1e-10, 1e-8, ...}` for which Cholesky succeeds.
pub fn fit_gaussian_copula(table: &DataTable, columns: &[&str]) -> Result<GaussianCopula> {
    let p = columns.len();
    if p == 0 {
        return Err(Error::InvalidArgument("no columns to fit".into()));
    }
    let n = table.n_rows();
    if n < p + 2 {
        return Err(Error::TooFewRows {
            needed: p + 2,
            got: n,
        });
    }
    let mut scores = Array2::<f64>::zeros((n, p));
    let mut sorted_marginals = Vec::with_capacity(p);
    for (j, name) in columns.iter().enumerate() {
        let values = table.values(name)?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        if values.iter().all(|&v| v == values[0]) {
            return Err(Error::DegenerateColumn(name.to_string()));
        }
        let r = ranks(values)?;
        for (i, &rank) in r.ranks.iter().enumerate() {
            scores[[i, j]] = normal_quantile((rank as f64 - 0.5) / n as f64);
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        sorted_marginals.push(sorted);
    }
    let cov = sample_covariance(scores.view());
    for ridge in RIDGE_LADDER {
        let regularised = &cov + &(Array2::<f64>::eye(p) * ridge);
        match GaussianModel::new(Array1::zeros(p), regularised) {
            Ok(model) => {
                return Ok(GaussianCopula {
                    model,
                    columns: columns.iter().map(|c| c.to_string()).collect(),
                    sorted_marginals,
                    ridge,
                })
            }
            Err(Error::NotSpd) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::NotSpd)
}

pub(crate) fn sample_covariance(data: ArrayView2<f64>) -> Array2<f64> {
    let n = data.nrows() as f64;
    let mean = data.mean_axis(ndarray::Axis(0)).expect("non-empty");
    let centered = &data - &mean;
    let mut cov = centered.t().dot(&centered) / (n - 1.0);
    // exact symmetry
    let p = cov.nrows();
    for i in 0..p {
        for j in 0..i {
            let v = 0.5 * (cov[[i, j]] + cov[[j, i]]);
            cov[[i, j]] = v;
            cov[[j, i]] = v;
        }
    }
    cov
}
