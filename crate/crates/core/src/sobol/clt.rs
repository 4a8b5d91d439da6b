//! Delta-method standard errors of the pick-freeze estimators.

use super::{IndexKind, PickFreezeBlock, MIN_CLT_ROWS};
use crate::error::{Error, Result};

/// Which covariance of the moment vector enters the delta method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SigmaForm {
    /// Empirical covariance of the per-row moment terms of the estimator as
    /// actually computed (numerator plus the four-sample variance average).
    #[default]
    Empirical,
    /// The four-moment vector `(f·f_s, f·f', f, f²)` with the closed-form
    /// covariance entries taken literally, including the raw (uncentred)
    /// cross moments and `σ₂₃ = σ₂₄ = 0`. First-order indices only; total
    /// indices fall back to [`SigmaForm::Empirical`].
    AsPrinted,
}

/// Standard error of one index estimated from `block`.
pub fn clt_variance(block: &PickFreezeBlock, kind: IndexKind) -> Result<f64> {
    clt_variance_with(block, kind, SigmaForm::Empirical)
}

pub fn clt_variance_with(block: &PickFreezeBlock, kind: IndexKind, form: SigmaForm) -> Result<f64> {
    let n = block.n();
    if n < MIN_CLT_ROWS {
        return Err(Error::TooFewRows {
            needed: MIN_CLT_ROWS,
            got: n,
        });
    }
    match form {
        SigmaForm::AsPrinted if !kind.is_total() => printed(block, kind),
        _ => empirical(block, kind),
    }
}

fn mean(v: impl Iterator<Item = f64>, n: usize) -> f64 {
    v.sum::<f64>() / n as f64
}

fn empirical(block: &PickFreezeBlock, kind: IndexKind) -> Result<f64> {
    let n = block.n();
    let v = block.total_variance()?;
    let g = block.shared(kind);
    let numerator_term: Vec<f64> = if kind.is_total() {
        g.iter()
            .zip(&block.f_x_prime)
            .map(|(a, b)| 0.5 * (a - b) * (a - b))
            .collect()
    } else {
        block
            .f_x
            .iter()
            .zip(g.iter().zip(&block.f_x_prime))
            .map(|(f, (a, b))| f * (a - b))
            .collect()
    };
    let num = mean(numerator_term.iter().copied(), n);
    let samples = [
        &block.f_x,
        &block.f_x_prime,
        &block.f_shared_first,
        &block.f_shared_last,
    ];
    let first_moments: Vec<f64> = samples.iter().map(|s| mean(s.iter().copied(), n)).collect();

    // est = num / V, V = (1/4) Σ_k (m2_k - m1_k²)
    let d_num = 1.0 / v;
    let d_m2 = -num / (4.0 * v * v);
    let d_m1: Vec<f64> = first_moments
        .iter()
        .map(|m1| num * m1 / (2.0 * v * v))
        .collect();

    let influence: Vec<f64> = (0..n)
        .map(|r| {
            let mut t = d_num * numerator_term[r];
            for (k, s) in samples.iter().enumerate() {
                t += d_m1[k] * s[r] + d_m2 * s[r] * s[r];
            }
            t
        })
        .collect();
    let m = mean(influence.iter().copied(), n);
    let var = influence.iter().map(|t| (t - m) * (t - m)).sum::<f64>() / n as f64;
    Ok((var / n as f64).sqrt())
}

fn printed(block: &PickFreezeBlock, kind: IndexKind) -> Result<f64> {
    let n = block.n();
    let f = &block.f_x;
    let fp = &block.f_x_prime;
    let g = block.shared(kind);
    let avg = |it: &mut dyn Iterator<Item = f64>| it.sum::<f64>() / n as f64;

    let b1 = avg(&mut f.iter().zip(g).map(|(a, b)| a * b));
    let b2 = avg(&mut f.iter().zip(fp).map(|(a, b)| a * b));
    let b3 = avg(&mut f.iter().copied());
    let b4 = avg(&mut f.iter().map(|a| a * a));
    let d = b4 - b3 * b3;
    if d <= 1e-12 * b4.max(f64::MIN_POSITIVE) {
        return Err(Error::DegenerateVariance);
    }
    let num = b1 - b2;
    let grad = [1.0 / d, -1.0 / d, 2.0 * num * b3 / (d * d), -num / (d * d)];

    let var_of = |xs: &mut dyn Iterator<Item = f64>| {
        let v: Vec<f64> = xs.collect();
        let m = v.iter().sum::<f64>() / n as f64;
        v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n as f64
    };
    let s11 = var_of(&mut f.iter().zip(g).map(|(a, b)| a * b));
    let s12 = avg(&mut (0..n).map(|r| f[r] * f[r] * g[r] * fp[r]));
    let s13 = avg(&mut (0..n).map(|r| f[r] * f[r] * g[r]));
    let e_f2 = b4;
    let e_g2 = avg(&mut g.iter().map(|a| a * a));
    let s14 = avg(&mut (0..n).map(|r| f[r].powi(3) * g[r] * fp[r])) - e_f2 * e_g2;
    let s22 = d * d;
    let s33 = d;
    let s34 = avg(&mut f.iter().map(|a| a.powi(3)));
    let s44 = avg(&mut f.iter().map(|a| a.powi(4))) - e_f2 * e_f2;

    let sigma = [
        [s11, s12, s13, s14],
        [s12, s22, 0.0, 0.0],
        [s13, 0.0, s33, s34],
        [s14, 0.0, s34, s44],
    ];
    let mut q = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            q += grad[i] * sigma[i][j] * grad[j];
        }
    }
    if !(q >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "closed-form covariance gives negative variance {q}"
        )));
    }
    Ok((q / n as f64).sqrt())
}
