//! Hamiltonian paths through the sample: greedy edge insertion, nearest-neighbour
//! chaining, Hilbert-curve sorting, and an exact Held–Karp solver for small N.

mod exact;
mod greedy;
mod hilbert;

use serde::{Deserialize, Serialize};

use crate::dataset::DistanceMatrix;
use crate::error::{input_err, Error, Result};

pub use exact::{exact_path, EXACT_PATH_MAX_N};
pub use greedy::greedy_path;
pub use hilbert::{hilbert_key, hilbert_path, DEFAULT_HILBERT_BITS};

/// How a path was built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathMethod {
    /// Kruskal-style: cheapest edges first, keeping degrees ≤ 2 and no cycles.
    #[default]
    GreedyEdge,
    /// Start from the closest pair and keep extending the nearer endpoint.
    NnChain,
    Hilbert,
    Exact,
}

impl PathMethod {
    pub fn name(&self) -> &'static str {
        match self {
            PathMethod::GreedyEdge => "greedy_edge",
            PathMethod::NnChain => "nn_chain",
            PathMethod::Hilbert => "hilbert",
            PathMethod::Exact => "exact",
        }
    }
}

impl std::str::FromStr for PathMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy_edge" | "greedy" => Ok(PathMethod::GreedyEdge),
            "nn_chain" => Ok(PathMethod::NnChain),
            "hilbert" => Ok(PathMethod::Hilbert),
            "exact" => Ok(PathMethod::Exact),
            _ => Err(Error::Config(format!("unknown path method `{s}`"))),
        }
    }
}

/// A visiting order over all N units.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    order: Vec<usize>,
    method: PathMethod,
    total_length: f64,
}

impl Path {
    /// Wrap an order, validating that it is a permutation of `0..N`.
    pub fn from_order(
        dist: &DistanceMatrix,
        order: Vec<usize>,
        method: PathMethod,
    ) -> Result<Self> {
        let total_length = path_length(dist, &order)?;
        Ok(Self {
            order,
            method,
            total_length,
        })
    }

    pub(crate) fn new_unchecked(order: Vec<usize>, method: PathMethod, total_length: f64) -> Self {
        Self {
            order,
            method,
            total_length,
        }
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn method(&self) -> PathMethod {
        self.method
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Consecutive pairs along the path.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.order.windows(2).map(|w| (w[0], w[1]))
    }

    /// Degree of every unit in the undirected path graph.
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.order.len()];
        for (a, b) in self.edges() {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg
    }

    /// 0-based position of each unit along the path.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.order.len()];
        for (p, &u) in self.order.iter().enumerate() {
            pos[u] = p;
        }
        pos
    }
}

pub(crate) fn check_permutation(order: &[usize], n: usize) -> Result<()> {
    if order.len() != n {
        return input_err(format!("order has {} entries, expected {n}", order.len()));
    }
    let mut seen = vec![false; n];
    for &u in order {
        if u >= n || seen[u] {
            return input_err(format!("order is not a permutation (unit {u})"));
        }
        seen[u] = true;
    }
    Ok(())
}

/// Sum of consecutive distances along `order`.
pub fn path_length(dist: &DistanceMatrix, order: &[usize]) -> Result<f64> {
    check_permutation(order, dist.n())?;
    Ok(order.windows(2).map(|w| dist.get(w[0], w[1])).sum())
}

/// Build a path with any method; the Hilbert sort uses `DEFAULT_HILBERT_BITS`.
pub fn build_path(
    points: &crate::dataset::Covariates,
    dist: &DistanceMatrix,
    method: PathMethod,
) -> Result<Path> {
    match method {
        PathMethod::GreedyEdge | PathMethod::NnChain => greedy_path(dist, method),
        PathMethod::Hilbert => {
            let mut p = hilbert_path(points, DEFAULT_HILBERT_BITS)?;
            p.total_length = path_length(dist, &p.order)?;
            Ok(p)
        }
        PathMethod::Exact => exact_path(dist),
    }
}

#[cfg(test)]
pub(crate) mod test_support {
    use crate::dataset::{pairwise_distances, Covariates, DistanceMatrix, Metric};
    use crate::numerics::RandomStream;

    pub fn random_2d(n: usize, seed: u64) -> (Covariates, DistanceMatrix) {
        let mut rng = RandomStream::new(seed, 0);
        let rows: Vec<[f64; 2]> = (0..n).map(|_| [rng.uniform(), rng.uniform()]).collect();
        let x = Covariates::from_rows(&rows).unwrap();
        let d = pairwise_distances(&x, Metric::Euclidean).unwrap();
        (x, d)
    }

    /// Minimum over all orders with order[0] < order[n-1], by Heap's algorithm.
    pub fn brute_force_path(d: &DistanceMatrix) -> f64 {
        let n = d.n();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut best = f64::INFINITY;
        let mut c = vec![0usize; n];
        let eval = |p: &[usize]| -> f64 {
            let mut s = 0.0;
            for w in p.windows(2) {
                s += d.get(w[0], w[1]);
            }
            s
        };
        best = best.min(eval(&perm));
        let mut i = 0;
        while i < n {
            if c[i] < i {
                if i % 2 == 0 {
                    perm.swap(0, i);
                } else {
                    perm.swap(c[i], i);
                }
                if perm[0] < perm[n - 1] {
                    best = best.min(eval(&perm));
                }
                c[i] += 1;
                i = 0;
            } else {
                c[i] = 0;
                i += 1;
            }
        }
        best
    }
}
