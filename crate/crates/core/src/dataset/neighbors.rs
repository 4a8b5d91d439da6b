//! Exact Euclidean nearest neighbours via a k-d tree.
//!
//! All minimisers are collected (exact equality of squared distances) and one
//! is drawn uniformly with a generator keyed by `(tie_seed, query row)`.

use ndarray::ArrayView2;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::task_rng;

const LEAF_SIZE: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborMap {
    pub nn_index: Vec<usize>,
    pub tie_seed: u64,
}

/// Pick one of `candidates` (sorted ascending) for query row `row`.
///
/// Exposed so that independent brute-force checks can reproduce the exact
/// tie draws of [`nearest_neighbors`].
pub fn break_tie(tie_seed: u64, row: usize, candidates: &[usize]) -> usize {
    match candidates {
        [only] => *only,
        _ => {
            let mut rng = task_rng(tie_seed, row as u64);
            candidates[rng.random_range(0..candidates.len())]
        }
    }
}

pub fn nearest_neighbors(points: ArrayView2<f64>, tie_seed: u64) -> Result<NeighborMap> {
    nearest_neighbors_grouped(points, None, tie_seed)
}

/// Nearest neighbours where rows sharing a group id never neighbour each
/// other (a row is always in its own group).
pub fn nearest_neighbors_grouped(
    points: ArrayView2<f64>,
    groups: Option<&[usize]>,
    tie_seed: u64,
) -> Result<NeighborMap> {
    let (n, d) = points.dim();
    if n < 2 {
        return Err(Error::TooFewRows { needed: 2, got: n });
    }
    if d == 0 {
        return Err(Error::InvalidArgument("points have no coordinates".into()));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    if let Some(g) = groups {
        if g.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: g.len(),
            });
        }
    }
    let tree = KdTree::build(points);
    let nn_index = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut ties = tree.nearest_all(i, groups);
            if ties.is_empty() {
                return Err(Error::InvalidArgument(format!(
                    "row {i} has no admissible neighbour"
                )));
            }
            ties.sort_unstable();
            Ok(break_tie(tie_seed, i, &ties))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NeighborMap { nn_index, tie_seed })
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        dim: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

struct KdTree {
    // row-major copy, contiguous rows
    data: Vec<f64>,
    dim: usize,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl KdTree {
    fn build(points: ArrayView2<f64>) -> Self {
        let (n, dim) = points.dim();
        let data: Vec<f64> = points.iter().copied().collect();
        let mut tree = KdTree {
            data,
            dim,
            order: (0..n).collect(),
            nodes: Vec::new(),
        };
        tree.build_node(0, n);
        tree
    }

    fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    fn build_node(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        // split on the widest coordinate
        let (mut best_dim, mut best_spread) = (0, -1.0);
        for k in 0..self.dim {
            let (lo, hi) = self.order[start..end]
                .iter()
                .map(|&i| self.data[i * self.dim + k])
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    (lo.min(v), hi.max(v))
                });
            if hi - lo > best_spread {
                best_spread = hi - lo;
                best_dim = k;
            }
        }
        if best_spread <= 0.0 {
            // all points identical
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let mid = start + (end - start) / 2;
        let (data, dim) = (&self.data, self.dim);
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            data[a * dim + best_dim].total_cmp(&data[b * dim + best_dim])
        });
        let value = self.data[self.order[mid] * self.dim + best_dim];
        self.nodes.push(Node::Leaf { start, end }); // placeholder
        let left = self.build_node(start, mid);
        let right = self.build_node(mid, end);
        self.nodes[id] = Node::Split {
            dim: best_dim,
            value,
            left,
            right,
        };
        id
    }

    /// All admissible rows at minimal distance from row `query`.
    fn nearest_all(&self, query: usize, groups: Option<&[usize]>) -> Vec<usize> {
        let mut best = f64::INFINITY;
        let mut ties = Vec::new();
        self.visit(0, query, groups, &mut best, &mut ties);
        ties
    }

    fn visit(
        &self,
        node: usize,
        query: usize,
        groups: Option<&[usize]>,
        best: &mut f64,
        ties: &mut Vec<usize>,
    ) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                let q = self.point(query);
                for &j in &self.order[start..end] {
                    if j == query || groups.is_some_and(|g| g[j] == g[query]) {
                        continue;
                    }
                    let d2 = squared_distance(q, self.point(j));
                    if d2 < *best {
                        *best = d2;
                        ties.clear();
                        ties.push(j);
                    } else if d2 == *best {
                        ties.push(j);
                    }
                }
            }
            Node::Split {
                dim,
                value,
                left,
                right,
            } => {
                let diff = self.point(query)[dim] - value;
                let (near, far) = if diff < 0.0 {
                    (left, right)
                } else {
                    (right, left)
                };
                self.visit(near, query, groups, best, ties);
                // `<=` keeps equidistant points on the far side as tie candidates
                if diff * diff <= *best {
                    self.visit(far, query, groups, best, ties);
                }
            }
        }
    }
}
