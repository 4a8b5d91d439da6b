//! Brute-force transcriptions of the rank statistics, sharing only the tie-break draw.

use fairgsa_core::cvm::{conditional_t, q_n, s_n, unconditional_t};
use fairgsa_core::dataset::break_tie;
use fairgsa_core::Error;
use ndarray::{Array2, ArrayView2};
use proptest::prelude::*;

fn brute_nn(points: ArrayView2<f64>, tie_seed: u64) -> Vec<usize> {
    let n = points.nrows();
    (0..n)
        .map(|i| {
            let d: Vec<(usize, f64)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let dist = points
                        .row(i)
                        .iter()
                        .zip(points.row(j))
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>();
                    (j, dist)
                })
                .collect();
            let best = d.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
            let ties: Vec<usize> = d.iter().filter(|x| x.1 == best).map(|x| x.0).collect();
            break_tie(tie_seed, i, &ties)
        })
        .collect()
}

fn r(y: &[f64], i: usize) -> i64 {
    y.iter().filter(|v| **v <= y[i]).count() as i64
}

fn l(y: &[f64], i: usize) -> i64 {
    y.iter().filter(|v| **v >= y[i]).count() as i64
}

fn join(x: &Array2<f64>, z: &Array2<f64>) -> Array2<f64> {
    Array2::from_shape_fn((x.nrows(), x.ncols() + z.ncols()), |(i, j)| {
        if j < x.ncols() {
            x[[i, j]]
        } else {
            z[[i, j - x.ncols()]]
        }
    })
}

fn brute_conditional(y: &[f64], x: &Array2<f64>, z: &Array2<f64>, seed: u64) -> (i64, i64) {
    let nz = brute_nn(z.view(), seed);
    let nxz = brute_nn(join(x, z).view(), seed);
    let mut num = 0;
    let mut den = 0;
    for i in 0..y.len() {
        num += r(y, i).min(r(y, nxz[i])) - r(y, i).min(r(y, nz[i]));
        den += r(y, i) - r(y, i).min(r(y, nz[i]));
    }
    (num, den)
}

fn brute_unconditional(y: &[f64], z: &Array2<f64>, seed: u64) -> (i64, i64) {
    let m = brute_nn(z.view(), seed);
    let n = y.len() as i64;
    let mut num = 0;
    let mut den = 0;
    for i in 0..y.len() {
        num += n * r(y, i).min(r(y, m[i])) - l(y, i) * l(y, i);
        den += l(y, i) * (n - l(y, i));
    }
    (num, den)
}

fn instance() -> impl Strategy<Value = (Vec<f64>, Array2<f64>, Array2<f64>, u64)> {
    (3usize..=50, 1usize..=2, 1usize..=3, any::<u64>(), 2i32..8).prop_flat_map(
        |(n, dx, dz, seed, levels)| {
            let grid = move || (0..levels).prop_map(f64::from);
            (
                prop::collection::vec(grid(), n),
                prop::collection::vec(grid(), n * dx),
                prop::collection::vec(grid(), n * dz),
            )
                .prop_map(move |(y, x, z)| {
                    (
                        y,
                        Array2::from_shape_vec((n, dx), x).unwrap(),
                        Array2::from_shape_vec((n, dz), z).unwrap(),
                        seed,
                    )
                })
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn statistics_match_brute_force((y, x, z, seed) in instance()) {
        let n = y.len() as f64;
        let (cn, cd) = brute_conditional(&y, &x, &z, seed);
        match conditional_t(&y, x.view(), z.view(), seed) {
            Ok(t) => prop_assert_eq!(t.value, cn as f64 / cd as f64),
            Err(e) => prop_assert!(cd == 0 && e == Error::DegenerateDenominator),
        }
        prop_assert_eq!(q_n(&y, x.view(), z.view(), seed).unwrap(), cn as f64 / (n * n));

        let (un, ud) = brute_unconditional(&y, &z, seed);
        match unconditional_t(&y, z.view(), seed) {
            Ok(t) => prop_assert_eq!(t.value, un as f64 / ud as f64),
            Err(e) => prop_assert!(ud == 0 && e == Error::DegenerateDenominator),
        }
        let sn: i64 = (0..y.len()).map(|i| l(&y, i) * (y.len() as i64 - l(&y, i))).sum();
        prop_assert_eq!(s_n(&y).unwrap(), sn as f64 / (n * n * n));
    }
}

#[test]
fn hand_instance_three_rows() {
    let y = [1.0, 2.0, 3.0];
    let z = Array2::from_shape_vec((3, 1), vec![0.0, 1.0, 2.0]).unwrap();
    let x = Array2::from_shape_vec((3, 1), vec![5.0, 6.0, 7.0]).unwrap();
    for seed in 0..16 {
        // row 0 -> 1, row 2 -> 1; row 1 picks 0 or 2, identically in z and (x, z)
        let nn = brute_nn(z.view(), seed);
        assert_eq!((nn[0], nn[2]), (1, 1));
        let (num, den) = brute_conditional(&y, &x, &z, seed);
        assert_eq!(num, 0);
        assert_eq!(den, 1 + (2 - 2.min(r(&y, nn[1]))));
        assert_eq!(
            conditional_t(&y, x.view(), z.view(), seed).unwrap().value,
            0.0
        );
        // L = [3,2,1]; denominator 3·0 + 2·1 + 1·2
        let (un, ud) = brute_unconditional(&y, &z, seed);
        assert_eq!(ud, 4);
        let expected_num = (3 - 9) + (3 * 2.min(r(&y, nn[1])) - 4) + (3 * 2 - 1);
        assert_eq!(un, expected_num);
        assert_eq!(
            unconditional_t(&y, z.view(), seed).unwrap().value,
            un as f64 / 4.0
        );
    }
}
