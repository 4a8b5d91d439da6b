use crate::error::{Error, Result};

/// Counting ranks of a sample.
///
/// `ranks[i]` is the number of `j` with `v[j] <= v[i]` and `geq_counts[i]`
/// the number of `j` with `v[j] >= v[i]`. Ties are resolved by these counts
/// and nothing else.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankVector {
    pub ranks: Vec<usize>,
    pub geq_counts: Vec<usize>,
}

impl RankVector {
    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }
}

pub fn ranks(values: &[f64]) -> Result<RankVector> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::NonFiniteInput);
    }
    let n = values.len();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut ranks = Vec::with_capacity(n);
    let mut geq_counts = Vec::with_capacity(n);
    for &v in values {
        let le = sorted.partition_point(|&s| s <= v);
        let lt = sorted.partition_point(|&s| s < v);
        ranks.push(le);
        geq_counts.push(n - lt);
    }
    Ok(RankVector { ranks, geq_counts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn distinct_values() {
        let r = ranks(&[1.0, 3.0, 2.0]).unwrap();
        assert_eq!(r.ranks, vec![1, 3, 2]);
        assert_eq!(r.geq_counts, vec![3, 1, 2]);
    }

    #[test]
    fn ties_use_counts() {
        let r = ranks(&[1.0, 1.0, 2.0]).unwrap();
        assert_eq!(r.ranks, vec![2, 2, 3]);
        assert_eq!(r.geq_counts, vec![3, 3, 1]);
    }

    #[test]
    fn singleton_and_empty() {
        let r = ranks(&[5.0]).unwrap();
        assert_eq!((r.ranks, r.geq_counts), (vec![1], vec![1]));
        assert_eq!(ranks(&[]).unwrap_err(), Error::EmptyInput);
    }

    fn brute(values: &[f64]) -> RankVector {
        RankVector {
            ranks: values
                .iter()
                .map(|&v| values.iter().filter(|&&w| w <= v).count())
                .collect(),
            geq_counts: values
                .iter()
                .map(|&v| values.iter().filter(|&&w| w >= v).count())
                .collect(),
        }
    }

    proptest! {
        #[test]
        fn matches_brute_force(v in prop::collection::vec(-5i32..5, 1..60)) {
            let v: Vec<f64> = v.into_iter().map(f64::from).collect();
            prop_assert_eq!(ranks(&v).unwrap(), brute(&v));
        }

        #[test]
        fn tie_free_is_permutation(v in prop::collection::hash_set(-10_000i64..10_000, 1..80)) {
            let v: Vec<f64> = v.into_iter().map(|x| x as f64 / 7.0).collect();
            let n = v.len();
            let r = ranks(&v).unwrap();
            let mut sorted = r.ranks.clone();
            sorted.sort_unstable();
            prop_assert_eq!(sorted, (1..=n).collect::<Vec<_>>());
            prop_assert_eq!(r.ranks.iter().sum::<usize>(), n * (n + 1) / 2);
            for i in 0..n {
                prop_assert_eq!(r.ranks[i] + r.geq_counts[i], n + 1);
            }
        }

        #[test]
        fn invariant_under_increasing_maps(v in prop::collection::vec(-300i32..300, 1..60)) {
            let v: Vec<f64> = v.into_iter().map(|x| f64::from(x) / 100.0).collect();
            let mapped: Vec<f64> = v.iter().map(|x| x.exp() * 2.0 + x.powi(3)).collect();
            prop_assert_eq!(ranks(&v).unwrap(), ranks(&mapped).unwrap());
        }
    }
}
