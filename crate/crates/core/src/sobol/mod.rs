//! Pick-freeze estimators of the four extended Sobol' indices.
//!
//! For a feature set `s`, two orderings are used: one with `s` in front
//! (first-order and total indices, from the shared-first sample) and one
//! with `s` at the back (independent indices, from the shared-last sample).
//! For a single feature `i` these are the cyclic orderings starting at `i`
//! and at `i + 1`.

mod clt;

pub use clt::{clt_variance, clt_variance_with, SigmaForm};

use ndarray::ArrayView2;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::{
    normal_quantile, pick_freeze_samples_with, FourSamples, GaussianCopula, GaussianModel, Ordering,
};
use crate::model::BlackBox;

pub const DEFAULT_LEVEL: f64 = 0.95;
const MIN_BLOCK_ROWS: usize = 10;
pub(crate) const MIN_CLT_ROWS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Clt,
    Bootstrap,
    Plugin,
    Oracle,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Clt => "clt",
            Method::Bootstrap => "bootstrap",
            Method::Plugin => "plugin",
            Method::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexKind {
    Sob,
    SobTotal,
    SobInd,
    SobTotalInd,
}

impl IndexKind {
    pub const ALL: [IndexKind; 4] = [
        IndexKind::Sob,
        IndexKind::SobTotal,
        IndexKind::SobInd,
        IndexKind::SobTotalInd,
    ];

    pub fn is_total(self) -> bool {
        matches!(self, IndexKind::SobTotal | IndexKind::SobTotalInd)
    }

    pub fn is_independent(self) -> bool {
        matches!(self, IndexKind::SobInd | IndexKind::SobTotalInd)
    }

    pub fn name(self) -> &'static str {
        match self {
            IndexKind::Sob => "sob",
            IndexKind::SobTotal => "sob_total",
            IndexKind::SobInd => "sob_ind",
            IndexKind::SobTotalInd => "sob_total_ind",
        }
    }
}

/// A point estimate with its uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IndexEstimate {
    pub value: f64,
    pub stderr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub level: f64,
    pub method: Method,
    pub n: usize,
    pub seed: u64,
}

impl IndexEstimate {
    /// An estimate without sampling error.
    pub fn exact(value: f64, method: Method, n: usize, seed: u64) -> Self {
        Self {
            value,
            stderr: 0.0,
            ci_low: value,
            ci_high: value,
            level: DEFAULT_LEVEL,
            method,
            n,
            seed,
        }
    }

    pub fn with_stderr(value: f64, stderr: f64, method: Method, n: usize, seed: u64) -> Self {
        Self {
            value,
            stderr,
            ci_low: f64::NAN,
            ci_high: f64::NAN,
            level: f64::NAN,
            method,
            n,
            seed,
        }
    }

    pub fn has_interval(&self) -> bool {
        self.ci_low.is_finite() && self.ci_high.is_finite()
    }
}

/// Normal-approximation interval `value ± z_{(1+level)/2} · stderr`.
pub fn confidence_interval(estimate: &IndexEstimate, level: f64) -> Result<IndexEstimate> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidLevel(level));
    }
    if !(estimate.stderr >= 0.0) {
        return Err(Error::InvalidArgument("standard error not computed".into()));
    }
    let half = if estimate.stderr == 0.0 {
        0.0
    } else {
        normal_quantile((1.0 + level) / 2.0) * estimate.stderr
    };
    Ok(IndexEstimate {
        ci_low: estimate.value - half,
        ci_high: estimate.value + half,
        level,
        ..*estimate
    })
}

/// Model evaluations on the four samples of one ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct PickFreezeBlock {
    pub f_x: Vec<f64>,
    pub f_x_prime: Vec<f64>,
    pub f_shared_first: Vec<f64>,
    pub f_shared_last: Vec<f64>,
    pub seed: u64,
}

impl PickFreezeBlock {
    pub fn new(
        f_x: Vec<f64>,
        f_x_prime: Vec<f64>,
        f_shared_first: Vec<f64>,
        f_shared_last: Vec<f64>,
        seed: u64,
    ) -> Result<Self> {
        let n = f_x.len();
        for v in [&f_x_prime, &f_shared_first, &f_shared_last] {
            if v.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    got: v.len(),
                });
            }
        }
        let block = Self {
            f_x,
            f_x_prime,
            f_shared_first,
            f_shared_last,
            seed,
        };
        if block.all().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        Ok(block)
    }

    /// Evaluate `model` on the four samples.
    pub fn evaluate(samples: &FourSamples, model: &mut dyn BlackBox) -> Result<Self> {
        let mut eval = |m: ArrayView2<f64>| -> Result<Vec<f64>> {
            let out = model.predict(m)?;
            if out.len() != m.nrows() {
                return Err(Error::Model(format!(
                    "model returned {} values for {} rows",
                    out.len(),
                    m.nrows()
                )));
            }
            Ok(out)
        };
        Self::new(
            eval(samples.x.view())?,
            eval(samples.x_prime.view())?,
            eval(samples.x_shared_first.view())?,
            eval(samples.x_shared_last.view())?,
            samples.seed,
        )
    }

    pub fn n(&self) -> usize {
        self.f_x.len()
    }

    fn all(&self) -> impl Iterator<Item = f64> + '_ {
        self.f_x
            .iter()
            .chain(&self.f_x_prime)
            .chain(&self.f_shared_first)
            .chain(&self.f_shared_last)
            .copied()
    }

    pub(crate) fn shared(&self, kind: IndexKind) -> &[f64] {
        if kind.is_independent() {
            &self.f_shared_last
        } else {
            &self.f_shared_first
        }
    }

    /// Average of the four unbiased sample variances.
    pub fn total_variance(&self) -> Result<f64> {
        let n = self.n();
        if n < 2 {
            return Err(Error::TooFewRows { needed: 2, got: n });
        }
        let v = [
            &self.f_x,
            &self.f_x_prime,
            &self.f_shared_first,
            &self.f_shared_last,
        ]
        .iter()
        .map(|s| unbiased_variance(s))
        .sum::<f64>()
            / 4.0;
        let scale = self.all().map(|f| f * f).sum::<f64>() / (4 * n) as f64;
        if v <= 1e-12 * scale {
            return Err(Error::DegenerateVariance);
        }
        Ok(v)
    }

    /// Raw pick-freeze estimate of one index from this block.
    pub fn point_estimate(&self, kind: IndexKind) -> Result<f64> {
        let v = self.total_variance()?;
        let g = self.shared(kind);
        let n = self.n() as f64;
        let num = if kind.is_total() {
            g.iter()
                .zip(&self.f_x_prime)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                / (2.0 * n)
        } else {
            self.f_x
                .iter()
                .zip(g.iter().zip(&self.f_x_prime))
                .map(|(f, (a, b))| f * (a - b))
                .sum::<f64>()
                / n
        };
        Ok(num / v)
    }
}

pub(crate) fn unbiased_variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
}

/// The four indices of one feature (or feature set).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SobolQuartet {
    pub features: Vec<usize>,
    pub n: usize,
    pub seed: u64,
    pub sob: IndexEstimate,
    pub sob_total: IndexEstimate,
    pub sob_ind: IndexEstimate,
    pub sob_total_ind: IndexEstimate,
}

impl SobolQuartet {
    pub fn get(&self, kind: IndexKind) -> &IndexEstimate {
        match kind {
            IndexKind::Sob => &self.sob,
            IndexKind::SobTotal => &self.sob_total,
            IndexKind::SobInd => &self.sob_ind,
            IndexKind::SobTotalInd => &self.sob_total_ind,
        }
    }

    pub fn values(&self) -> [f64; 4] {
        IndexKind::ALL.map(|k| self.get(k).value)
    }

    pub fn max_stderr(&self) -> f64 {
        IndexKind::ALL
            .iter()
            .map(|&k| self.get(k).stderr)
            .filter(|s| s.is_finite())
            .fold(0.0, f64::max)
    }
}

/// Estimate all four indices: first-order and total from `first` (the set
/// leads the ordering), independent ones from `last` (the set closes it).
/// Intervals use the delta-method standard error at `level`.
pub fn estimate_quartet(
    first: &PickFreezeBlock,
    last: &PickFreezeBlock,
    features: &[usize],
    level: f64,
) -> Result<SobolQuartet> {
    let n = first.n();
    if last.n() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: last.n(),
        });
    }
    if n < MIN_BLOCK_ROWS {
        return Err(Error::TooFewRows {
            needed: MIN_BLOCK_ROWS,
            got: n,
        });
    }
    let one = |kind: IndexKind| -> Result<IndexEstimate> {
        let block = if kind.is_independent() { last } else { first };
        let value = block.point_estimate(kind)?;
        if n < MIN_CLT_ROWS {
            return Ok(IndexEstimate::with_stderr(
                value,
                f64::NAN,
                Method::Plugin,
                n,
                block.seed,
            ));
        }
        let stderr = clt_variance(block, kind)?;
        confidence_interval(
            &IndexEstimate::with_stderr(value, stderr, Method::Clt, n, block.seed),
            level,
        )
    };
    Ok(SobolQuartet {
        features: features.to_vec(),
        n,
        seed: first.seed,
        sob: one(IndexKind::Sob)?,
        sob_total: one(IndexKind::SobTotal)?,
        sob_ind: one(IndexKind::SobInd)?,
        sob_total_ind: one(IndexKind::SobTotalInd)?,
    })
}

/// Something that can produce pick-freeze samples.
pub trait PickFreezeSampler {
    fn dim(&self) -> usize;
    fn samples(
        &self,
        ordering: &Ordering,
        shared: usize,
        n: usize,
        seed: u64,
    ) -> Result<FourSamples>;
}

impl PickFreezeSampler for GaussianModel {
    fn dim(&self) -> usize {
        GaussianModel::dim(self)
    }

    fn samples(
        &self,
        ordering: &Ordering,
        shared: usize,
        n: usize,
        seed: u64,
    ) -> Result<FourSamples> {
        pick_freeze_samples_with(self, ordering, shared, n, seed)
    }
}

impl PickFreezeSampler for GaussianCopula {
    fn dim(&self) -> usize {
        self.model().dim()
    }

    fn samples(
        &self,
        ordering: &Ordering,
        shared: usize,
        n: usize,
        seed: u64,
    ) -> Result<FourSamples> {
        self.pick_freeze_samples(ordering, shared, n, seed)
    }
}

/// The two orderings used for a feature set.
pub fn orderings_for(set: &[usize], p: usize) -> Result<(Ordering, Ordering)> {
    match set {
        [i] => Ok((Ordering::cyclic(*i, p)?, Ordering::cyclic((*i + 1) % p, p)?)),
        _ => Ok((
            Ordering::group_first(set, p)?,
            Ordering::group_last(set, p)?,
        )),
    }
}

/// Sample, evaluate and estimate the quartet of a feature set in one go.
pub fn sobol_indices(
    model_fn: &mut dyn BlackBox,
    sampler: &dyn PickFreezeSampler,
    set: &[usize],
    n: usize,
    seed: u64,
    level: f64,
) -> Result<SobolQuartet> {
    let p = sampler.dim();
    let (first_ord, last_ord) = orderings_for(set, p)?;
    let first =
        PickFreezeBlock::evaluate(&sampler.samples(&first_ord, set.len(), n, seed)?, model_fn)?;
    let last = if last_ord == first_ord {
        first.clone()
    } else {
        PickFreezeBlock::evaluate(&sampler.samples(&last_ord, set.len(), n, seed)?, model_fn)?
    };
    estimate_quartet(&first, &last, set, level)
}

/// One broken inequality between two indices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundViolation {
    /// `"lower <= upper"` with index names (or 0 / 1).
    pub relation: String,
    pub excess: f64,
}

/// Check `0 ≤ Sob^ind ≤ Sob ≤ SobT ≤ 1` and `0 ≤ Sob^ind ≤ SobT^ind ≤ SobT ≤ 1`.
///
/// Only violations larger than `slack` are reported; `None` means three times
/// the largest standard error. `Sob` and `SobT^ind` are never compared.
pub fn check_bounds(quartet: &SobolQuartet, slack: Option<f64>) -> Vec<BoundViolation> {
    let slack = slack.unwrap_or_else(|| 3.0 * quartet.max_stderr());
    let v = |k: IndexKind| quartet.get(k).value;
    let pairs = [
        ("0", 0.0, "sob_ind", v(IndexKind::SobInd)),
        ("sob_ind", v(IndexKind::SobInd), "sob", v(IndexKind::Sob)),
        (
            "sob",
            v(IndexKind::Sob),
            "sob_total",
            v(IndexKind::SobTotal),
        ),
        ("sob_total", v(IndexKind::SobTotal), "1", 1.0),
        (
            "sob_ind",
            v(IndexKind::SobInd),
            "sob_total_ind",
            v(IndexKind::SobTotalInd),
        ),
        (
            "sob_total_ind",
            v(IndexKind::SobTotalInd),
            "sob_total",
            v(IndexKind::SobTotal),
        ),
    ];
    pairs
        .iter()
        .filter(|(_, lo, _, hi)| lo - hi > slack)
        .map(|(ln, lo, un, hi)| BoundViolation {
            relation: format!("{ln} <= {un}"),
            excess: lo - hi,
        })
        .collect()
}
