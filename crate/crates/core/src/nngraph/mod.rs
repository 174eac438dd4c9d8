//! Nearest-neighbour digraphs, optimal non-bipartite matchings, and the
//! graph functionals that enter the kNN count moments.

pub mod blossom;
mod knn;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

pub use knn::{knn_graph, KnnBackend, KnnGraph};

use crate::dataset::DistanceMatrix;
use crate::error::{input_err, Result};

/// Mutual-neighbour and shared-neighbour pair counts of a kNN digraph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphFunctionals {
    /// Unordered pairs {i, j} with each in the other's neighbour list.
    pub mutual_pairs: u64,
    /// Unordered pairs pointing to a common unit: Σ_i C(indegree(i), 2).
    pub shared_pairs: u64,
}

pub fn graph_functionals(graph: &KnnGraph) -> GraphFunctionals {
    let n = graph.n();
    let mut mutual = 0u64;
    for i in 0..n {
        for &j in graph.neighbors(i) {
            if i < j && graph.neighbors(j).contains(&i) {
                mutual += 1;
            }
        }
    }
    let shared = graph
        .in_degrees()
        .into_iter()
        .map(|d| (d as u64) * (d as u64).saturating_sub(1) / 2)
        .sum();
    GraphFunctionals {
        mutual_pairs: mutual,
        shared_pairs: shared,
    }
}

/// A set of disjoint unit pairs; with an odd number of units one is left out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matching {
    pairs: Vec<(usize, usize)>,
    dropped_unit: Option<usize>,
    total_weight: f64,
    n: usize,
}

impl Matching {
    /// Validates that `pairs` covers every unit exactly once except `dropped_unit`.
    pub fn new(
        dist: &DistanceMatrix,
        pairs: Vec<(usize, usize)>,
        dropped_unit: Option<usize>,
    ) -> Result<Self> {
        let n = dist.n();
        let mut seen = vec![false; n];
        let mut mark = |u: usize| -> Result<()> {
            if u >= n || seen[u] {
                return input_err(format!("unit {u} is out of range or matched twice"));
            }
            seen[u] = true;
            Ok(())
        };
        for &(a, b) in &pairs {
            if a == b {
                return input_err(format!("unit {a} matched to itself"));
            }
            mark(a)?;
            mark(b)?;
        }
        if let Some(d) = dropped_unit {
            mark(d)?;
        }
        if seen.iter().any(|s| !s) {
            return input_err("matching leaves a unit uncovered");
        }
        let mut pairs: Vec<_> = pairs
            .into_iter()
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect();
        pairs.sort_unstable();
        let total_weight = pairs.iter().map(|&(a, b)| dist.get(a, b)).sum();
        Ok(Self {
            pairs,
            dropped_unit,
            total_weight,
            n,
        })
    }

    /// Pairs as (smaller, larger) index, sorted.
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn dropped_unit(&self) -> Option<usize> {
        self.dropped_unit
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Partner of every unit (`None` for the dropped one).
    pub fn partners(&self) -> Vec<Option<usize>> {
        let mut out = vec![None; self.n];
        for &(a, b) in &self.pairs {
            out[a] = Some(b);
            out[b] = Some(a);
        }
        out
    }
}

/// Resolution of the integer weights handed to the blossom solver.
const WEIGHT_SCALE: f64 = (1u64 << 40) as f64;

/// Neighbours per unit in the first candidate edge set.
const CANDIDATE_NEIGHBOURS: usize = 10;

/// Integer blossom weights for a distance matrix, with an optional phantom unit.
struct MatchingWeights<'a> {
    dist: &'a DistanceMatrix,
    /// Vertex count including the phantom.
    m: usize,
    phantom_dist: f64,
    scale: f64,
    ceiling: i64,
}

impl<'a> MatchingWeights<'a> {
    fn new(dist: &'a DistanceMatrix) -> Self {
        let n = dist.n();
        let odd = n % 2 == 1;
        let phantom_dist = 1.0 + dist.max_entry();
        let top = if odd { phantom_dist } else { dist.max_entry() };
        let scale = if top > 0.0 { WEIGHT_SCALE / top } else { 0.0 };
        let mut w = Self {
            dist,
            m: if odd { n + 1 } else { n },
            phantom_dist,
            scale,
            ceiling: 0,
        };
        w.ceiling = w.quantize(top) + 1;
        w
    }

    fn quantize(&self, d: f64) -> i64 {
        (d * self.scale).round() as i64
    }

    fn weight(&self, i: usize, j: usize) -> i64 {
        let n = self.dist.n();
        let d = if j == n || i == n {
            self.phantom_dist
        } else {
            self.dist.get(i, j)
        };
        self.ceiling - self.quantize(d)
    }

    fn edge(&self, (i, j): (usize, usize)) -> (usize, usize, i64) {
        (i, j, self.weight(i, j))
    }

    fn to_matching(&self, mate: &[Option<usize>]) -> Result<Matching> {
        let n = self.dist.n();
        let mut pairs = Vec::with_capacity(n / 2);
        let mut dropped = None;
        for (i, partner) in mate.iter().enumerate().take(n) {
            match partner {
                Some(j) if *j == n => dropped = Some(i),
                Some(j) if i < *j => pairs.push((i, *j)),
                Some(_) => {}
                None => unreachable!("only perfect matchings are converted"),
            }
        }
        Matching::new(self.dist, pairs, dropped)
    }
}

/// Candidate edges: each unit to its `k` nearest others, plus every phantom edge.
fn candidate_edges(w: &MatchingWeights<'_>, k: usize) -> BTreeSet<(usize, usize)> {
    let n = w.dist.n();
    let mut out = BTreeSet::new();
    for i in 0..n {
        let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        let row = w.dist.row(i);
        let k = k.min(others.len());
        if k < others.len() {
            others.select_nth_unstable_by(k, |&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b)));
        }
        for &j in &others[..k] {
            out.insert((i.min(j), i.max(j)));
        }
        if w.m > n {
            out.insert((i, n));
        }
    }
    out
}

/// Minimum-distance perfect matching. With odd N a phantom unit at distance
/// `1 + max D` from everyone is added and its partner is dropped.
///
/// The blossom solver runs on a sparse nearest-neighbour edge set; its dual
/// solution is then checked against every pair, and pairs with negative
/// reduced cost are added until none remain, at which point the matching is
/// optimal on the complete graph.
pub fn nbm_matching(dist: &DistanceMatrix) -> Result<Matching> {
    let n = dist.n();
    if n < 2 {
        return input_err(format!("matching needs at least 2 units, got {n}"));
    }
    let w = MatchingWeights::new(dist);
    let mut k = CANDIDATE_NEIGHBOURS;
    let mut candidates = candidate_edges(&w, k);
    loop {
        let edges: Vec<_> = candidates.iter().map(|&e| w.edge(e)).collect();
        let sol = blossom::solve(w.m, &edges, true);
        if !sol.is_perfect() {
            k *= 2;
            candidates.extend(candidate_edges(&w, k));
            continue;
        }
        let violated: Vec<(usize, usize)> = (0..w.m)
            .flat_map(|i| (i + 1..w.m).map(move |j| (i, j)))
            .filter(|&(i, j)| sol.slack(i, j, w.weight(i, j)) < 0)
            .collect();
        if violated.is_empty() {
            return w.to_matching(sol.mate());
        }
        candidates.extend(violated);
    }
}

/// [`nbm_matching`] solved directly on the complete graph.
pub fn nbm_matching_dense(dist: &DistanceMatrix) -> Result<Matching> {
    let n = dist.n();
    if n < 2 {
        return input_err(format!("matching needs at least 2 units, got {n}"));
    }
    let w = MatchingWeights::new(dist);
    let edges: Vec<_> = (0..w.m)
        .flat_map(|i| (i + 1..w.m).map(move |j| (i, j)))
        .map(|e| w.edge(e))
        .collect();
    let mate = blossom::max_weight_matching(w.m, &edges, true);
    w.to_matching(&mate)
}

#[cfg(test)]
pub(crate) mod test_support {
    use crate::dataset::DistanceMatrix;

    /// Minimum total distance over all perfect matchings of `units`.
    pub fn brute_force_min_matching(dist: &DistanceMatrix, units: &[usize]) -> f64 {
        if units.is_empty() {
            return 0.0;
        }
        let first = units[0];
        let mut best = f64::INFINITY;
        for idx in 1..units.len() {
            let rest: Vec<usize> = units[1..]
                .iter()
                .enumerate()
                .filter(|&(p, _)| p + 1 != idx)
                .map(|(_, &u)| u)
                .collect();
            best = best.min(dist.get(first, units[idx]) + brute_force_min_matching(dist, &rest));
        }
        best
    }
}
