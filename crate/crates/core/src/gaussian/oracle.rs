//! Closed-form extended Sobol' indices of a linear function of Gaussian inputs.

use ndarray::Array1;
use serde::Serialize;

use super::linalg::{cholesky, cholesky_solve, submatrix};
use super::GaussianModel;
use crate::error::{Error, Result};

/// Theoretical quartet for `f(x) = wᵀx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearOracle {
    pub sob: f64,
    pub sob_total: f64,
    pub sob_ind: f64,
    pub sob_total_ind: f64,
}

impl LinearOracle {
    pub fn as_array(&self) -> [f64; 4] {
        [self.sob, self.sob_total, self.sob_ind, self.sob_total_ind]
    }
}

/// Indices of the feature set `set` for `f(x) = wᵀx` under `model`.
///
/// With `Y = wᵀX`, `V = wᵀCw` and `r` the complement of `set`:
/// the first-order and total indices both equal `Var(E[Y|X_s]) / V`
/// (`c_sᵀ C_ss⁻¹ c_s / V`, `c_s = Cov(X_s, Y)`), and the two independent
/// indices both equal `E[Var(Y|X_r)] / V = w_sᵀ (C_ss - C_sr C_rr⁻¹ C_rs) w_s / V`.
/// For a linear function the last uniform of the ordering carries exactly the
/// conditional residual of `X_s` given `X_r`, so total and first-order
/// coincide within each pair.
pub fn theoretical_sobol_linear(
    weights: &[f64],
    model: &GaussianModel,
    set: &[usize],
) -> Result<LinearOracle> {
    let p = model.dim();
    if weights.len() != p {
        return Err(Error::LengthMismatch {
            expected: p,
            got: weights.len(),
        });
    }
    if weights.iter().all(|&w| w == 0.0) {
        return Err(Error::InvalidArgument("weights are all zero".into()));
    }
    if set.is_empty() || set.iter().any(|&i| i >= p) {
        return Err(Error::InvalidArgument(format!(
            "invalid feature set {set:?}"
        )));
    }
    let cov = model.covariance();
    let w = Array1::from(weights.to_vec());
    let cw = cov.dot(&w);
    let total = w.dot(&cw);

    let c_s: Array1<f64> = set.iter().map(|&i| cw[i]).collect();
    let css = submatrix(cov, set, set);
    let l_ss = cholesky(css.view())?;
    let explained = c_s.dot(&cholesky_solve(l_ss.view(), c_s.view()));

    let rest: Vec<usize> = (0..p).filter(|j| !set.contains(j)).collect();
    let w_s: Array1<f64> = set.iter().map(|&i| weights[i]).collect();
    let residual_cov = if rest.is_empty() {
        css
    } else {
        let crr = submatrix(cov, &rest, &rest);
        let csr = submatrix(cov, set, &rest);
        let l_rr = cholesky(crr.view())?;
        let mut schur = css;
        for a in 0..set.len() {
            let solved = cholesky_solve(l_rr.view(), csr.row(a));
            for b in 0..set.len() {
                schur[[a, b]] -= csr.row(b).dot(&solved);
            }
        }
        schur
    };
    let unexplained_by_rest = w_s.dot(&residual_cov.dot(&w_s));

    let first = explained / total;
    let independent = unexplained_by_rest / total;
    Ok(LinearOracle {
        sob: first,
        sob_total: first,
        sob_ind: independent,
        sob_total_ind: independent,
    })
}
