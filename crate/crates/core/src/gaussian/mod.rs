//! Gaussian input models and the inverse Rosenblatt transform.
//!
//! For a Gaussian vector the Rosenblatt transform along an ordering is the
//! Cholesky factor of the covariance permuted into that ordering: the k-th
//! uniform only feeds the k-th and later coordinates, which is exactly the
//! sequential conditional-quantile construction.

mod copula;
pub mod linalg;
mod oracle;

pub use copula::{fit_gaussian_copula, GaussianCopula};
pub use oracle::{theoretical_sobol_linear, LinearOracle};

use std::io::Read;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::rng::{UniformStream, UNIFORM_EPS};

/// Standard normal quantile; `u` is clamped into `[1e-12, 1 - 1e-12]`.
pub fn normal_quantile(u: f64) -> f64 {
    let u = u.clamp(UNIFORM_EPS, 1.0 - UNIFORM_EPS);
    standard_normal().inverse_cdf(u)
}

pub fn normal_cdf(x: f64) -> f64 {
    standard_normal().cdf(x)
}

fn standard_normal() -> Normal {
    Normal::standard()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianModel {
    mean: Array1<f64>,
    covariance: Array2<f64>,
    cholesky: Array2<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelSpec {
    mean: Vec<f64>,
    covariance: Vec<Vec<f64>>,
}

impl GaussianModel {
    pub fn new(mean: Array1<f64>, covariance: Array2<f64>) -> Result<Self> {
        if covariance.nrows() != mean.len() {
            return Err(Error::LengthMismatch {
                expected: covariance.nrows(),
                got: mean.len(),
            });
        }
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        let cholesky = linalg::cholesky(covariance.view())?;
        Ok(Self {
            mean,
            covariance,
            cholesky,
        })
    }

    pub fn centered(covariance: Array2<f64>) -> Result<Self> {
        Self::new(Array1::zeros(covariance.nrows()), covariance)
    }

    /// Parse `{"mean": [...], "covariance": [[...], ...]}`.
    pub fn from_json<R: Read>(reader: R) -> Result<Self> {
        let spec: ModelSpec = serde_json::from_reader(reader)
            .map_err(|e| Error::Schema(format!("model spec: {e}")))?;
        let p = spec.mean.len();
        if p == 0 {
            return Err(Error::Schema("model spec: empty mean".into()));
        }
        if spec.covariance.len() != p || spec.covariance.iter().any(|r| r.len() != p) {
            return Err(Error::Schema(format!(
                "model spec: covariance must be {p}x{p}"
            )));
        }
        let cov = Array2::from_shape_fn((p, p), |(i, j)| spec.covariance[i][j]);
        Self::new(Array1::from(spec.mean), cov)
    }

    pub fn to_json(&self) -> String {
        let spec = ModelSpec {
            mean: self.mean.to_vec(),
            covariance: self.covariance.outer_iter().map(|r| r.to_vec()).collect(),
        };
        serde_json::to_string(&spec).expect("model spec serialises")
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> ArrayView1<'_, f64> {
        self.mean.view()
    }

    pub fn covariance(&self) -> ArrayView2<'_, f64> {
        self.covariance.view()
    }

    /// Lower Cholesky factor of the covariance in the original feature order.
    pub fn validate(&self) -> Result<Array2<f64>> {
        Ok(self.cholesky.clone())
    }

    /// Marginal model of the listed coordinates, in the listed order.
    pub fn marginal(&self, coords: &[usize]) -> Result<GaussianModel> {
        if coords.iter().any(|&c| c >= self.dim()) {
            return Err(Error::InvalidArgument(
                "marginal coordinate out of range".into(),
            ));
        }
        let mean = coords.iter().map(|&c| self.mean[c]).collect();
        let cov = linalg::submatrix(self.covariance.view(), coords, coords);
        GaussianModel::new(mean, cov)
    }

    /// Draw `n` rows from the model with independent seeded uniforms.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Array2<f64>> {
        let map = RosenblattMap::new(self, &Ordering::identity(self.dim()))?;
        let p = self.dim();
        let mut stream = UniformStream::new(seed, u64::MAX, p);
        let mut out = Array2::zeros((n, p));
        let mut u = vec![0.0; p];
        for (r, mut row) in out.outer_iter_mut().enumerate() {
            stream.row(r, &mut u);
            map.apply(&u, row.as_slice_mut().expect("row-major"));
        }
        Ok(out)
    }
}

/// A processing order of the features for the Rosenblatt transform.
/// `permutation()[k]` is the original index of the k-th coordinate.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Ordering {
    perm: Vec<usize>,
}

impl Ordering {
    pub fn identity(p: usize) -> Self {
        Self {
            perm: (0..p).collect(),
        }
    }

    /// `(i, i+1, ..., p-1, 0, ..., i-1)`.
    pub fn cyclic(start: usize, p: usize) -> Result<Self> {
        if start >= p {
            return Err(Error::InvalidArgument(format!(
                "feature {start} out of range for dimension {p}"
            )));
        }
        Ok(Self {
            perm: (0..p).map(|k| (start + k) % p).collect(),
        })
    }

    /// The set first (in the given order), then the other features ascending.
    pub fn group_first(set: &[usize], p: usize) -> Result<Self> {
        check_set(set, p)?;
        let mut perm = set.to_vec();
        perm.extend((0..p).filter(|j| !set.contains(j)));
        Ok(Self { perm })
    }

    /// The other features ascending, then the set.
    pub fn group_last(set: &[usize], p: usize) -> Result<Self> {
        check_set(set, p)?;
        let mut perm: Vec<usize> = (0..p).filter(|j| !set.contains(j)).collect();
        perm.extend_from_slice(set);
        Ok(Self { perm })
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    fn stream_tag(&self, shared: usize) -> u64 {
        // FNV-1a over the permutation and block length
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for &v in self.perm.iter().chain(std::iter::once(&shared)) {
            h ^= v as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        h & (u64::MAX >> 2)
    }
}

fn check_set(set: &[usize], p: usize) -> Result<()> {
    if set.is_empty() || set.len() > p {
        return Err(Error::InvalidArgument(
            "feature set must be non-empty".into(),
        ));
    }
    for (k, &i) in set.iter().enumerate() {
        if i >= p || set[..k].contains(&i) {
            return Err(Error::InvalidArgument(format!(
                "invalid feature set {set:?}"
            )));
        }
    }
    Ok(())
}

/// Precomputed inverse Rosenblatt transform for one ordering.
#[derive(Debug, Clone)]
pub struct RosenblattMap {
    perm: Vec<usize>,
    mean: Vec<f64>,
    factor: Array2<f64>,
}

impl RosenblattMap {
    pub fn new(model: &GaussianModel, ordering: &Ordering) -> Result<Self> {
        let p = model.dim();
        if ordering.len() != p {
            return Err(Error::LengthMismatch {
                expected: p,
                got: ordering.len(),
            });
        }
        let perm = ordering.permutation().to_vec();
        let cov = linalg::submatrix(model.covariance(), &perm, &perm);
        let factor = linalg::cholesky(cov.view())?;
        let mean = perm.iter().map(|&j| model.mean[j]).collect();
        Ok(Self { perm, mean, factor })
    }

    /// Map uniforms (in ordering positions) to a point in original feature order.
    pub fn apply(&self, u: &[f64], out: &mut [f64]) {
        let p = self.perm.len();
        let z: Vec<f64> = u.iter().map(|&v| normal_quantile(v)).collect();
        for k in 0..p {
            let mut y = self.mean[k];
            for (j, zj) in z.iter().enumerate().take(k + 1) {
                y += self.factor[[k, j]] * zj;
            }
            out[self.perm[k]] = y;
        }
    }
}

/// `x = mean + L_π Φ⁻¹(u)`, un-permuted back to feature order.
pub fn rosenblatt_inverse(
    model: &GaussianModel,
    ordering: &Ordering,
    u: &[f64],
) -> Result<Vec<f64>> {
    if u.len() != model.dim() {
        return Err(Error::LengthMismatch {
            expected: model.dim(),
            got: u.len(),
        });
    }
    if let Some(&bad) = u.iter().find(|&&v| !(v > 0.0 && v < 1.0)) {
        return Err(Error::OutOfRangeUniform(bad));
    }
    let map = RosenblattMap::new(model, ordering)?;
    let mut out = vec![0.0; u.len()];
    map.apply(u, &mut out);
    Ok(out)
}

/// The four aligned Monte-Carlo samples of one ordering.
///
/// With `shared = k`, `x_shared_first` is built from the first `k` uniforms of
/// `x` and the rest of `x_prime`; `x_shared_last` from the first `p - k`
/// uniforms of `x_prime` and the last `k` of `x`.
#[derive(Debug, Clone)]
pub struct FourSamples {
    pub x: Array2<f64>,
    pub x_prime: Array2<f64>,
    pub x_shared_first: Array2<f64>,
    pub x_shared_last: Array2<f64>,
    pub ordering: Ordering,
    pub shared: usize,
    pub seed: u64,
}

impl FourSamples {
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    /// Apply a row-wise map (e.g. a marginal back-transform) to all four samples.
    pub(crate) fn map_rows(mut self, f: impl Fn(&mut [f64])) -> Self {
        for m in [
            &mut self.x,
            &mut self.x_prime,
            &mut self.x_shared_first,
            &mut self.x_shared_last,
        ] {
            for mut row in m.outer_iter_mut() {
                f(row.as_slice_mut().expect("row-major"));
            }
        }
        self
    }
}

/// Pick-freeze samples for a single feature under its cyclic ordering.
pub fn pick_freeze_samples(
    model: &GaussianModel,
    feature: usize,
    n: usize,
    seed: u64,
) -> Result<FourSamples> {
    let ordering = Ordering::cyclic(feature, model.dim())?;
    pick_freeze_samples_with(model, &ordering, 1, n, seed)
}

pub fn pick_freeze_samples_with(
    model: &GaussianModel,
    ordering: &Ordering,
    shared: usize,
    n: usize,
    seed: u64,
) -> Result<FourSamples> {
    let p = model.dim();
    if n < 2 {
        return Err(Error::TooFewRows { needed: 2, got: n });
    }
    if shared == 0 || shared > p {
        return Err(Error::InvalidArgument(format!(
            "shared block length {shared} must be in 1..={p}"
        )));
    }
    let map = RosenblattMap::new(model, ordering)?;
    let tag = ordering.stream_tag(shared);
    let mut first = UniformStream::new(seed, tag << 1, p);
    let mut second = UniformStream::new(seed, (tag << 1) | 1, p);

    let mut x = Array2::zeros((n, p));
    let mut x_prime = Array2::zeros((n, p));
    let mut x_sf = Array2::zeros((n, p));
    let mut x_sl = Array2::zeros((n, p));
    let (mut u, mut v, mut mix) = (vec![0.0; p], vec![0.0; p], vec![0.0; p]);
    let mut out = vec![0.0; p];
    for r in 0..n {
        first.row(r, &mut u);
        second.row(r, &mut v);
        map.apply(&u, &mut out);
        x.row_mut(r).assign(&ArrayView1::from(&out[..]));
        map.apply(&v, &mut out);
        x_prime.row_mut(r).assign(&ArrayView1::from(&out[..]));

        mix[..shared].copy_from_slice(&u[..shared]);
        mix[shared..].copy_from_slice(&v[shared..]);
        map.apply(&mix, &mut out);
        x_sf.row_mut(r).assign(&ArrayView1::from(&out[..]));

        mix[..p - shared].copy_from_slice(&v[..p - shared]);
        mix[p - shared..].copy_from_slice(&u[p - shared..]);
        map.apply(&mix, &mut out);
        x_sl.row_mut(r).assign(&ArrayView1::from(&out[..]));
    }
    Ok(FourSamples {
        x,
        x_prime,
        x_shared_first: x_sf,
        x_shared_last: x_sl,
        ordering: ordering.clone(),
        shared,
        seed,
    })
}
