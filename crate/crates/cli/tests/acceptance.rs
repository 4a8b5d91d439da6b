//! Acceptance criteria, one line each. Exits non-zero if any criterion fails.

use std::time::Instant;

use fairgsa_cli::run;
use fairgsa_core::cvm::{
    conditional_t, cvm_independent, cvm_independent_alt, q_n, s_n, unconditional_t,
};
use fairgsa_core::dataset::{break_tie, Column};
use fairgsa_core::experiments::{coverage_study, generate_dag_data, DagGraph, ExperimentSpec};
use fairgsa_core::fairness::{
    causal_screen, intersectional_audit, statistical_parity, AuditOptions, CausalFinding,
    ModelAccess,
};
use fairgsa_core::gaussian::theoretical_sobol_linear;
use fairgsa_core::sobol::{check_bounds, sobol_indices, DEFAULT_LEVEL};
use fairgsa_core::{DataTable, Error, FnModel, GaussianModel, IndexKind, LinearModel, Role};
use ndarray::{array, Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

const KINDS: [&str; 4] = ["sob", "sob_total", "sob_ind", "sob_total_ind"];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

/// Theoretical cells printed for the three benchmarks: (experiment, variable, quartet).
const PRINTED_THEORY: [(u8, usize, [f64; 4]); 6] = [
    (1, 0, [1.00, 1.00, 0.75, 0.75]),
    (1, 1, [0.25, 0.25, 0.00, 0.00]),
    (2, 0, [0.91, 0.91, 0.48, 0.47]),
    (2, 1, [0.53, 0.53, 0.09, 0.09]),
    (3, 0, [0.84, 0.84, 0.84, 0.84]),
    (3, 1, [0.16, 0.16, 0.16, 0.16]),
];

fn synthetic_json(id: u8, n: usize, seed: u64) -> Value {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let n = n.to_string();
    let seed = seed.to_string();
    let id = id.to_string();
    let code = run(
        [
            "fairgsa",
            "synthetic",
            "--experiment",
            &id,
            "--n",
            &n,
            "--seed",
            &seed,
            "--format",
            "json",
        ],
        &mut out,
        &mut err,
    );
    assert_eq!(code, 0, "{}", String::from_utf8_lossy(&err));
    serde_json::from_slice(&out).unwrap()
}

fn table_reproduction() -> Outcome {
    let start = Instant::now();
    let mut worst: (f64, String) = (0.0, String::new());
    let mut misses = Vec::new();
    let mut named = Vec::new();
    for id in 1..=3u8 {
        let v = synthetic_json(id, 100_000, 2024);
        for (r, row) in v["rows"].as_array().unwrap().iter().enumerate() {
            let var = row["variable"].as_str().unwrap();
            for k in KINDS {
                let est = row["estimate"][k]["value"].as_f64().unwrap();
                let se = row["estimate"][k]["stderr"].as_f64().unwrap();
                let theory = row["theory"][k].as_f64().unwrap();
                let tol = 0.02f64.max(4.0 * se);
                let gap = (est - theory).abs();
                if gap / tol > worst.0 {
                    worst = (gap / tol, format!("exp{id} {var} {k}"));
                }
                if gap > tol {
                    misses.push(format!("exp{id} {var} {k}: {est:.4} vs {theory:.4}"));
                }
            }
            let theory: Vec<f64> = KINDS
                .iter()
                .map(|k| row["theory"][*k].as_f64().unwrap())
                .collect();
            let expect: Vec<(usize, f64)> = match (id, r) {
                (1, 0) => vec![(0, 1.0), (1, 1.0), (2, 0.75), (3, 0.75)],
                (1, 1) => vec![(0, 0.25), (1, 0.25), (2, 0.0), (3, 0.0)],
                (2, 0) => vec![(0, 0.91)],
                (2, 1) => vec![(0, 0.53), (2, 0.09)],
                (3, 0) => vec![(0, 0.84)],
                (3, 1) => vec![(0, 0.16)],
                _ => vec![],
            };
            for (i, want) in expect {
                if round2(theory[i]) != want {
                    named.push(format!(
                        "exp{id} {var} {}: oracle {:.4} vs {want}",
                        KINDS[i], theory[i]
                    ));
                }
            }
            if id == 3 && (theory[0] - theory[2]).abs() > 1e-12 {
                named.push(format!("exp3 {var}: sob != sob_ind in theory"));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = misses.is_empty() && named.is_empty() && secs <= 30.0;
    outcome(
        pass,
        format!(
            "24 estimates within max(0.02, 4 se) of the oracle: {} misses; named values: {} mismatches; worst ratio {:.2} at {}; {secs:.1} s {}{}",
            misses.len(),
            named.len(),
            worst.0,
            worst.1,
            misses.join("; "),
            named.join("; ")
        ),
    )
}

fn oracle_cross_check() -> Outcome {
    let mut mismatches = Vec::new();
    for (id, var, printed) in PRINTED_THEORY {
        let spec = ExperimentSpec::new(id, 1, 0).unwrap();
        let model = spec.observed_model().unwrap();
        let q = theoretical_sobol_linear(&spec.weights(), &model, &[var]).unwrap();
        for (k, (got, want)) in q.as_array().iter().zip(printed).enumerate() {
            if round2(*got) != want {
                mismatches.push(format!(
                    "exp{id} {} {}: oracle {got:.4} rounds to {:.2}, printed {want:.2}",
                    ["X", "S"][var],
                    KINDS[k],
                    round2(*got)
                ));
            }
        }
    }
    outcome(
        mismatches.is_empty(),
        format!(
            "{} of 24 printed cells match after rounding {}",
            24 - mismatches.len(),
            mismatches.join("; ")
        ),
    )
}

fn clt_coverage() -> Outcome {
    let start = Instant::now();
    let spec = ExperimentSpec::new(1, 2000, 99).unwrap();
    let cov = coverage_study(&spec, 1, 500, 2000, 0.95).unwrap();
    let sob = cov.iter().find(|c| c.kind == IndexKind::Sob).unwrap();
    let secs = start.elapsed().as_secs_f64();
    outcome(
        (0.92..=0.98).contains(&sob.coverage) && secs <= 300.0,
        format!(
            "experiment 1, first-order index of S, 500 x 2000 rows: coverage {:.3} ({}/{}), {secs:.1} s",
            sob.coverage, sob.covered, sob.replicates
        ),
    )
}

fn brute_nn(points: ArrayView2<f64>, seed: u64) -> Vec<usize> {
    let n = points.nrows();
    (0..n)
        .map(|i| {
            let d: Vec<(usize, f64)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    (
                        j,
                        points
                            .row(i)
                            .iter()
                            .zip(points.row(j))
                            .map(|(a, b)| (a - b).powi(2))
                            .sum(),
                    )
                })
                .collect();
            let best = d.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
            let ties: Vec<usize> = d.iter().filter(|x| x.1 == best).map(|x| x.0).collect();
            break_tie(seed, i, &ties)
        })
        .collect()
}

fn rank_le(y: &[f64], i: usize) -> i64 {
    y.iter().filter(|v| **v <= y[i]).count() as i64
}

fn rank_ge(y: &[f64], i: usize) -> i64 {
    y.iter().filter(|v| **v >= y[i]).count() as i64
}

fn rank_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut failures = 0;
    for _ in 0..200 {
        let n = rng.random_range(3..=50);
        let levels = rng.random_range(2..8);
        let dx = rng.random_range(1..=2);
        let dz = rng.random_range(1..=3);
        let seed: u64 = rng.random();
        let mut grid = |cols: usize| {
            Array2::from_shape_fn((n, cols), |_| f64::from(rng.random_range(0..levels)))
        };
        let y: Vec<f64> = grid(1).column(0).to_vec();
        let x = grid(dx);
        let z = grid(dz);
        let xz = ndarray::concatenate![ndarray::Axis(1), x, z];
        let nz = brute_nn(z.view(), seed);
        let nxz = brute_nn(xz.view(), seed);
        let (mut cn, mut cd, mut un, mut ud, mut sn) = (0i64, 0i64, 0i64, 0i64, 0i64);
        let ni = n as i64;
        for i in 0..n {
            let r = rank_le(&y, i);
            let l = rank_ge(&y, i);
            cn += r.min(rank_le(&y, nxz[i])) - r.min(rank_le(&y, nz[i]));
            cd += r - r.min(rank_le(&y, nz[i]));
            un += ni * r.min(rank_le(&y, nz[i])) - l * l;
            ud += l * (ni - l);
            sn += l * (ni - l);
        }
        let nf = n as f64;
        let cond_ok = match conditional_t(&y, x.view(), z.view(), seed) {
            Ok(t) => t.value == cn as f64 / cd as f64,
            Err(e) => cd == 0 && e == Error::DegenerateDenominator,
        };
        let uncond_ok = match unconditional_t(&y, z.view(), seed) {
            Ok(t) => t.value == un as f64 / ud as f64,
            Err(e) => ud == 0 && e == Error::DegenerateDenominator,
        };
        let q_ok = q_n(&y, x.view(), z.view(), seed).unwrap() == cn as f64 / (nf * nf);
        let s_ok = s_n(&y).unwrap() == sn as f64 / (nf * nf * nf);
        if !(cond_ok && uncond_ok && q_ok && s_ok) {
            failures += 1;
        }
    }
    outcome(
        failures == 0,
        format!("200 random instances, {failures} disagreements"),
    )
}

fn experiment_two_table(n: usize, seed: u64) -> DataTable {
    let spec = ExperimentSpec::new(2, n, seed).unwrap();
    let data = spec.observed_model().unwrap().sample(n, seed).unwrap();
    let y: Vec<f64> = data.outer_iter().map(|r| 0.7 * r[0] + 0.3 * r[1]).collect();
    DataTable::new(vec![
        Column::new("x", Role::Feature, data.column(0).to_vec()),
        Column::new("s", Role::Sensitive, data.column(1).to_vec()),
        Column::new("y", Role::Prediction, y),
    ])
    .unwrap()
}

fn estimator_agreement() -> Outcome {
    let mut gaps = Vec::new();
    for seed in 0..20 {
        let t = experiment_two_table(10_000, seed);
        for f in ["x", "s"] {
            let u = cvm_independent(&t, "y", f, seed).unwrap().value;
            let alt = cvm_independent_alt(&t, "y", f, seed).unwrap().value;
            gaps.push((u - alt).abs());
        }
    }
    let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
    outcome(
        mean <= 0.05,
        format!("mean gap {mean:.2e} over 20 seeds and both inputs"),
    )
}

fn disparate_impact_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    let mut done = 0;
    while done < 100 {
        let n = rng.random_range(4..200);
        let ps = rng.random_range(0.1..0.9);
        let pf = rng.random_range(0.1..0.9);
        let s: Vec<f64> = (0..n)
            .map(|_| f64::from(u8::from(rng.random_bool(ps))))
            .collect();
        let f: Vec<f64> = (0..n)
            .map(|_| f64::from(u8::from(rng.random_bool(pf))))
            .collect();
        let n1 = s.iter().filter(|v| **v == 1.0).count();
        let pos = f.iter().filter(|v| **v == 1.0).count();
        if n1 == 0 || n1 == n || pos == 0 || pos == n {
            continue;
        }
        let m1 = s
            .iter()
            .zip(&f)
            .filter(|(a, _)| **a == 1.0)
            .map(|(_, b)| b)
            .sum::<f64>()
            / n1 as f64;
        let m0 = s
            .iter()
            .zip(&f)
            .filter(|(a, _)| **a == 0.0)
            .map(|(_, b)| b)
            .sum::<f64>()
            / (n - n1) as f64;
        let p = n1 as f64 / n as f64;
        let rate = pos as f64 / n as f64;
        let var = rate * (1.0 - rate);
        let expected = p * (1.0 - p) * (m1 - m0).powi(2) / var;
        let table = DataTable::new(vec![
            Column::new("s", Role::Sensitive, s),
            Column::new("f", Role::Prediction, f),
        ])
        .unwrap();
        let v = statistical_parity(&table, "f", &["s"], None, &AuditOptions::default()).unwrap();
        worst = worst.max((v.index.value - expected).abs());
        done += 1;
    }
    outcome(
        worst <= 1e-12,
        format!("100 random binary tables, worst gap {worst:.1e}"),
    )
}

fn intersectional_toy() -> Outcome {
    let mut f = FnModel(|r: &[f64]| r[0].signum() * r[1].signum());
    let mut access = ModelAccess {
        function: &mut f,
        inputs: vec!["s1".into(), "s2".into()],
        distribution: Some(GaussianModel::centered(Array2::eye(2)).unwrap()),
    };
    let opts = AuditOptions {
        n_mc: 100_000,
        seed: 8,
        ..AuditOptions::default()
    };
    let r = intersectional_audit(&mut access, None, &["s1", "s2"], &opts).unwrap();
    let s1 = r.singletons[0].sob.value;
    let s2 = r.singletons[1].sob.value;
    let g = r.group.sob.value;
    outcome(
        s1.abs() <= 0.02 && s2.abs() <= 0.02 && (g - 1.0).abs() <= 0.02,
        format!("singletons {s1:.4}, {s2:.4}; pair {g:.4}"),
    )
}

fn quartet_of(f: &mut dyn fairgsa_core::BlackBox, cov: Array2<f64>, seed: u64) -> [f64; 4] {
    let model = GaussianModel::centered(cov).unwrap();
    sobol_indices(f, &model, &[0], 100_000, seed, DEFAULT_LEVEL)
        .unwrap()
        .values()
}

fn taxonomy() -> Outcome {
    let near = |a: f64, b: f64| (a - b).abs() <= 0.02;
    let additive = quartet_of(&mut LinearModel::new(vec![1.0, 1.0]), Array2::eye(2), 1);
    let bouncing = quartet_of(
        &mut LinearModel::new(vec![0.0, 1.0]),
        array![[1.0, 1.0], [1.0, 2.0]],
        2,
    );
    let product = quartet_of(&mut FnModel(|r: &[f64]| r[0] * r[1]), Array2::eye(2), 3);
    let ok_add = additive.iter().all(|v| near(*v, 0.5));
    let ok_bounce = near(bouncing[0], 0.5)
        && near(bouncing[1], 0.5)
        && near(bouncing[2], 0.0)
        && near(bouncing[3], 0.0);
    let ok_prod = near(product[0], 0.0) && near(product[1], 1.0);
    let fmt = |q: [f64; 4]| format!("({:.3}, {:.3}, {:.3}, {:.3})", q[0], q[1], q[2], q[3]);
    outcome(
        ok_add && ok_bounce && ok_prod,
        format!(
            "additive {}, bouncing {}, product {}",
            fmt(additive),
            fmt(bouncing),
            fmt(product)
        ),
    )
}

fn screen(graph: DagGraph, seed: u64) -> (CausalFinding, [f64; 4]) {
    let table = generate_dag_data(graph, 5_000, seed).unwrap();
    let mut f = graph.predictor();
    let mut access = ModelAccess {
        function: &mut f,
        inputs: vec!["x".into(), "s".into()],
        distribution: None,
    };
    let opts = AuditOptions {
        n_mc: 100_000,
        seed,
        ..AuditOptions::default()
    };
    let q = access.quartet(Some(&table), &["s"], &opts).unwrap();
    (causal_screen(&q, opts.epsilon).finding, q.values())
}

fn causal_screening() -> Outcome {
    let (c, cq) = screen(DagGraph::C, 21);
    let (a, aq) = screen(DagGraph::A, 22);
    let deterministic = screen(DagGraph::C, 21) == (c, cq) && screen(DagGraph::A, 22) == (a, aq);
    outcome(
        c == CausalFinding::NoDirectEdge && a == CausalFinding::DirectInfluencePossible && deterministic,
        format!(
            "graph c: {c:?} (total {:.3}, independent total {:.3}); graph a: {a:?} (independent total {:.3}); repeatable {deterministic}",
            cq[1], cq[3], aq[3]
        ),
    )
}

fn bound_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let tol = 1e-12;
    let (mut oracle_bad, mut estimate_bad, mut reversed) = (0, 0, 0);
    for m in 0..100u64 {
        let p = rng.random_range(2..=5);
        let a = Array2::from_shape_fn((p, p), |_| rng.random_range(-1.0..1.0));
        let cov = a.dot(&a.t()) + Array2::<f64>::eye(p) * 0.1;
        let w: Vec<f64> = (0..p).map(|_| rng.random_range(-2.0..2.0)).collect();
        let feature = rng.random_range(0..p);
        let model = GaussianModel::centered(cov).unwrap();
        let o = theoretical_sobol_linear(&w, &model, &[feature]).unwrap();
        let chain1 = -tol <= o.sob_ind
            && o.sob_ind <= o.sob + tol
            && o.sob <= o.sob_total + tol
            && o.sob_total <= 1.0 + tol;
        let chain2 = -tol <= o.sob_ind
            && o.sob_ind <= o.sob_total_ind + tol
            && o.sob_total_ind <= o.sob_total + tol
            && o.sob_total <= 1.0 + tol;
        if !(chain1 && chain2) {
            oracle_bad += 1;
            if o.sob_ind > o.sob + tol {
                reversed += 1;
            }
        }
        let q = sobol_indices(
            &mut LinearModel::new(w),
            &model,
            &[feature],
            20_000,
            m,
            DEFAULT_LEVEL,
        )
        .unwrap();
        if !check_bounds(&q, None).is_empty() {
            estimate_bad += 1;
        }
    }
    outcome(
        oracle_bad == 0 && estimate_bad == 0,
        format!(
            "100 random models: oracle breaks a chain in {oracle_bad} ({reversed} with independent first-order above first-order); estimates beyond 3 se in {estimate_bad}"
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("benchmark reproduction", table_reproduction),
        ("oracle cross-check", oracle_cross_check),
        ("interval coverage", clt_coverage),
        ("rank statistics vs brute force", rank_oracle),
        ("independent rank estimators agree", estimator_agreement),
        ("disparate impact identity", disparate_impact_identity),
        ("intersectional toy", intersectional_toy),
        ("joint contribution taxonomy", taxonomy),
        ("causal screening", causal_screening),
        ("bound invariants", bound_invariants),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {} {name}: {}",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!(
        "acceptance: {} of {} criteria pass",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
