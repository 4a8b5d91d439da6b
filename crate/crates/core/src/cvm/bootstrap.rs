use rand::Rng;
use rayon::prelude::*;

use crate::dataset::DataTable;
use crate::error::{Error, Result};
use crate::rng::task_rng;
use crate::sobol::{IndexEstimate, Method};

pub const MIN_REPLICATES: usize = 100;
const MAX_FAILURE_SHARE: f64 = 0.10;

/// Percentile bootstrap over `replicates` row resamples with replacement.
///
/// Replicate `b` draws its rows from a generator keyed by `(seed, b)`, so the
/// result does not depend on scheduling. Failed replicates are dropped unless
/// more than 10% fail. The interval is widened if needed to contain the
/// full-sample estimate.
pub fn bootstrap_ci<F>(
    table: &DataTable,
    estimator: F,
    replicates: usize,
    level: f64,
    seed: u64,
) -> Result<IndexEstimate>
where
    F: Fn(&DataTable) -> Result<f64> + Sync,
{
    if replicates < MIN_REPLICATES {
        return Err(Error::InvalidArgument(format!(
            "bootstrap needs at least {MIN_REPLICATES} replicates, got {replicates}"
        )));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidLevel(level));
    }
    let value = estimator(table)?;
    let n = table.n_rows();
    let outcomes: Vec<Option<f64>> = (0..replicates)
        .into_par_iter()
        .map(|b| {
            let mut rng = task_rng(seed, b as u64);
            let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            table
                .select_rows(&rows)
                .and_then(|t| estimator(&t))
                .ok()
                .filter(|v| v.is_finite())
        })
        .collect();
    let mut stats: Vec<f64> = outcomes.into_iter().flatten().collect();
    let failed = replicates - stats.len();
    if failed as f64 > MAX_FAILURE_SHARE * replicates as f64 {
        return Err(Error::BootstrapUnstable {
            failed,
            total: replicates,
        });
    }
    stats.sort_by(f64::total_cmp);
    let m = stats.iter().sum::<f64>() / stats.len() as f64;
    let stderr = if stats.len() > 1 {
        (stats.iter().map(|s| (s - m) * (s - m)).sum::<f64>() / (stats.len() - 1) as f64).sqrt()
    } else {
        0.0
    };
    let alpha = (1.0 - level) / 2.0;
    let lo = quantile(&stats, alpha);
    let hi = quantile(&stats, 1.0 - alpha);
    Ok(IndexEstimate {
        value,
        stderr,
        ci_low: lo.min(value),
        ci_high: hi.max(value),
        level,
        method: Method::Bootstrap,
        n,
        seed,
    })
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}
