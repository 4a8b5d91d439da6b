use std::collections::BTreeMap;

use crate::error::{Error, Result};

const MAX_DISCRETE_LEVELS: usize = 32;
const MIN_GROUP_ROWS: usize = 3;

pub type GroupKey = Vec<u64>;

/// True when every value is an integer and there are at most 32 distinct levels.
pub fn is_discrete(values: &[f64]) -> bool {
    let mut levels = std::collections::BTreeSet::new();
    for v in values {
        if !v.is_finite() || v.fract() != 0.0 {
            return false;
        }
        levels.insert((v + 0.0).to_bits());
        if levels.len() > MAX_DISCRETE_LEVELS {
            return false;
        }
    }
    true
}

/// Row keys formed by the tuple of values in `columns`.
pub fn group_keys(columns: &[&[f64]]) -> Vec<GroupKey> {
    let n = columns.first().map_or(0, |c| c.len());
    (0..n)
        .map(|i| columns.iter().map(|c| (c[i] + 0.0).to_bits()).collect())
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    let base = v[0];
    base + v.iter().map(|x| x - base).sum::<f64>() / v.len() as f64
}

fn population_variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64
}

/// Variance of group means, weighted by group frequencies, with population normalization.
fn between_group_variance(f: &[f64], keys: &[GroupKey]) -> f64 {
    let mut groups: BTreeMap<&GroupKey, Vec<f64>> = BTreeMap::new();
    for (v, k) in f.iter().zip(keys) {
        groups.entry(k).or_default().push(*v);
    }
    let m = mean(f);
    let n = f.len() as f64;
    groups
        .values()
        .map(|g| {
            let d = mean(g) - m;
            g.len() as f64 / n * d * d
        })
        .sum()
}

fn check(f: &[f64], len: usize) -> Result<()> {
    if len != f.len() {
        return Err(Error::LengthMismatch {
            expected: f.len(),
            got: len,
        });
    }
    if f.is_empty() {
        return Err(Error::EmptyInput);
    }
    if f.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    Ok(())
}

/// `Var(E[f | group]) / Var(f)`.
pub fn between_group_share(f: &[f64], keys: &[GroupKey]) -> Result<f64> {
    check(f, keys.len())?;
    let total = population_variance(f);
    if total <= 0.0 {
        return Err(Error::DegenerateVariance);
    }
    Ok(between_group_variance(f, keys) / total)
}

/// `E_Y[Var_S(E[f | S, Y])] / Var(f)` for a discrete conditioning variable `y`.
pub fn grouped_conditional_index(f: &[f64], s: &[GroupKey], y: &[f64]) -> Result<f64> {
    grouped_conditional_index_min(f, s, y, MIN_GROUP_ROWS)
}

pub(crate) fn grouped_conditional_index_min(
    f: &[f64],
    s: &[GroupKey],
    y: &[f64],
    min_rows: usize,
) -> Result<f64> {
    check(f, s.len())?;
    check(f, y.len())?;
    let total = population_variance(f);
    if total <= 0.0 {
        return Err(Error::DegenerateVariance);
    }
    let mut by_y: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (i, v) in y.iter().enumerate() {
        by_y.entry((v + 0.0).to_bits()).or_default().push(i);
    }
    let n = f.len() as f64;
    let mut acc = 0.0;
    for (key, rows) in &by_y {
        if rows.len() < min_rows {
            return Err(Error::GroupTooSmall {
                group: f64::from_bits(*key).to_string(),
                size: rows.len(),
                needed: min_rows,
            });
        }
        let fy: Vec<f64> = rows.iter().map(|&i| f[i]).collect();
        let sy: Vec<GroupKey> = rows.iter().map(|&i| s[i].clone()).collect();
        acc += rows.len() as f64 / n * between_group_variance(&fy, &sy);
    }
    Ok(acc / total)
}
