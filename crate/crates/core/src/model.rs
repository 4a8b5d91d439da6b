//! Query access to a predictor.

use ndarray::ArrayView2;

use crate::error::{Error, Result};

/// A predictor evaluated on batches of feature rows.
pub trait BlackBox {
    fn predict(&mut self, rows: ArrayView2<f64>) -> Result<Vec<f64>>;
}

impl<T: BlackBox + ?Sized> BlackBox for &mut T {
    fn predict(&mut self, rows: ArrayView2<f64>) -> Result<Vec<f64>> {
        (**self).predict(rows)
    }
}

/// Wraps a row-wise closure.
pub struct FnModel<F>(pub F);

impl<F: Fn(&[f64]) -> f64> BlackBox for FnModel<F> {
    fn predict(&mut self, rows: ArrayView2<f64>) -> Result<Vec<f64>> {
        rows.outer_iter()
            .map(|r| {
                let owned;
                let slice = match r.as_slice() {
                    Some(s) => s,
                    None => {
                        owned = r.to_vec();
                        &owned
                    }
                };
                Ok((self.0)(slice))
            })
            .collect()
    }
}

/// `f(x) = wᵀx + intercept`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
}

impl LinearModel {
    pub fn new(weights: Vec<f64>) -> Self {
        Self {
            weights,
            intercept: 0.0,
        }
    }
}

impl BlackBox for LinearModel {
    fn predict(&mut self, rows: ArrayView2<f64>) -> Result<Vec<f64>> {
        if rows.ncols() != self.weights.len() {
            return Err(Error::LengthMismatch {
                expected: self.weights.len(),
                got: rows.ncols(),
            });
        }
        Ok(rows
            .outer_iter()
            .map(|r| self.intercept + r.iter().zip(&self.weights).map(|(x, w)| x * w).sum::<f64>())
            .collect())
    }
}
