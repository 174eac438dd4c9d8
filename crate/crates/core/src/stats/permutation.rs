use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::crossmatch::crossmatch_unchecked;
use super::knn::knn_counts_unchecked;
use super::runs::{kw_unchecked, run_counts_unchecked};
use super::{MomentSet, StatKind};
use crate::error::{input_err, Error, Result};
use crate::nngraph::{KnnGraph, Matching};
use crate::numerics::RandomStream;
use crate::paths::Path;

/// Largest number of distinct labelings enumerated in exhaustive mode.
pub const EXHAUSTIVE_CAP: u128 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum NullMode {
    Exhaustive,
    MonteCarlo { draws: usize },
}

/// Which tail counts as extreme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tail {
    Upper,
    Lower,
}

/// A statistic evaluated on a fixed graph under relabeling.
#[derive(Debug, Clone, Copy)]
pub enum NullStatistic<'a> {
    Runs(&'a Path),
    RanksKw(&'a Path),
    Crossmatch(&'a Matching),
    Knn(&'a KnnGraph),
}

impl NullStatistic<'_> {
    pub fn kind(&self) -> StatKind {
        match self {
            NullStatistic::Runs(_) => StatKind::Runs,
            NullStatistic::RanksKw(_) => StatKind::RanksKw,
            NullStatistic::Crossmatch(_) => StatKind::CrossmatchPairs,
            NullStatistic::Knn(_) => StatKind::KnnCounts,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            NullStatistic::Runs(p) | NullStatistic::RanksKw(p) => p.len(),
            NullStatistic::Crossmatch(m) => m.n(),
            NullStatistic::Knn(g) => g.n(),
        }
    }

    pub fn evaluate(&self, groups: &[usize], num_groups: usize) -> Result<Vec<f64>> {
        Ok(match self {
            NullStatistic::Runs(p) => run_counts_unchecked(p.order(), groups, num_groups),
            NullStatistic::RanksKw(p) => vec![kw_unchecked(p.order(), groups, num_groups)?],
            NullStatistic::Crossmatch(m) => crossmatch_unchecked(m.pairs(), groups, num_groups),
            NullStatistic::Knn(g) => knn_counts_unchecked(g, groups, num_groups),
        })
    }
}

/// Distribution of a statistic vector over relabelings of a fixed graph.
#[derive(Debug, Clone, PartialEq)]
pub struct PermutationNull {
    pub mode: NullMode,
    /// Labelings evaluated: all distinct ones, or the Monte-Carlo draws.
    pub draws: usize,
    /// Empirical mean and covariance; population covariance in exhaustive mode.
    pub moments: MomentSet,
    pub samples: Vec<Vec<f64>>,
}

impl PermutationNull {
    /// Tail probability of `observed` for the scalar `score` of the statistic vector.
    ///
    /// Exhaustive mode gives the exact tail mass; Monte-Carlo mode uses
    /// (1 + #extreme)/(1 + draws).
    pub fn p_value(&self, observed: f64, score: impl Fn(&[f64]) -> f64, tail: Tail) -> f64 {
        let eps = 1e-9 * observed.abs().max(1.0);
        let extreme = self
            .samples
            .iter()
            .map(|s| score(s))
            .filter(|&v| match tail {
                Tail::Upper => v >= observed - eps,
                Tail::Lower => v <= observed + eps,
            })
            .count();
        match self.mode {
            NullMode::Exhaustive => extreme as f64 / self.samples.len() as f64,
            NullMode::MonteCarlo { .. } => (1 + extreme) as f64 / (1 + self.samples.len()) as f64,
        }
    }
}

/// N! / (n_1! ⋯ n_G!), saturating at `u128::MAX`.
pub fn multinomial_count(sizes: &[usize]) -> u128 {
    let mut acc: u128 = 1;
    let mut placed: u128 = 0;
    for &n in sizes {
        for i in 1..=n as u128 {
            placed += 1;
            // acc · placed / i stays integral: it is a running binomial product
            acc = match acc.checked_mul(placed) {
                Some(v) => v / i,
                None => return u128::MAX,
            };
        }
    }
    acc
}

fn next_arrangement(z: &mut [usize]) -> bool {
    let Some(i) = (0..z.len().saturating_sub(1))
        .rev()
        .find(|&i| z[i] < z[i + 1])
    else {
        return false;
    };
    let j = (i + 1..z.len())
        .rev()
        .find(|&j| z[j] > z[i])
        .expect("successor exists");
    z.swap(i, j);
    z[i + 1..].reverse();
    true
}

/// Permutation distribution of `statistic` with the graph fixed and labels
/// permuted among units, preserving `group_sizes`.
pub fn permutation_null(
    statistic: NullStatistic<'_>,
    group_sizes: &[usize],
    mode: NullMode,
    rng: &RandomStream,
) -> Result<PermutationNull> {
    let n = statistic.n();
    if group_sizes.iter().sum::<usize>() != n {
        return input_err(format!(
            "group sizes sum to {} for {n} units",
            group_sizes.iter().sum::<usize>()
        ));
    }
    if group_sizes.contains(&0) {
        return input_err("every group needs at least one unit");
    }
    let num_groups = group_sizes.len();
    let mut base: Vec<usize> = group_sizes
        .iter()
        .enumerate()
        .flat_map(|(g, &s)| std::iter::repeat_n(g, s))
        .collect();

    let samples = match mode {
        NullMode::Exhaustive => {
            let total = multinomial_count(group_sizes);
            if total > EXHAUSTIVE_CAP {
                return Err(Error::Capacity(format!(
                    "{total} labelings exceed the exhaustive cap of {EXHAUSTIVE_CAP}; use Monte Carlo"
                )));
            }
            let mut out = Vec::with_capacity(total as usize);
            loop {
                out.push(statistic.evaluate(&base, num_groups)?);
                if !next_arrangement(&mut base) {
                    break;
                }
            }
            out
        }
        NullMode::MonteCarlo { draws } => {
            if draws == 0 {
                return input_err("Monte-Carlo null needs at least one draw");
            }
            (0..draws as u64)
                .into_par_iter()
                .map(|i| {
                    let mut z = base.clone();
                    z.shuffle(&mut rng.substream(i));
                    statistic.evaluate(&z, num_groups)
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    let mut moments = MomentSet::from_samples(&samples)?;
    if mode == NullMode::Exhaustive {
        let len = samples.len() as f64;
        if samples.len() > 1 {
            moments.covariance *= (len - 1.0) / len;
        }
    }
    Ok(PermutationNull {
        mode,
        draws: samples.len(),
        moments,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nngraph::{knn_graph, nbm_matching, KnnBackend};
    use crate::paths::test_support::random_2d;
    use crate::paths::{greedy_path, PathMethod};
    use crate::stats::{run_counts, run_moments};

    #[test]
    fn multinomial_values() {
        assert_eq!(multinomial_count(&[2, 2, 2]), 90);
        assert_eq!(multinomial_count(&[3, 3, 4]), 4200);
        assert_eq!(multinomial_count(&[5, 5]), 252);
        assert_eq!(multinomial_count(&[7]), 1);
        assert_eq!(multinomial_count(&[400, 400]), u128::MAX);
    }

    #[test]
    fn exhaustive_enumerates_each_labeling_once() {
        let (pts, _) = random_2d(6, 1);
        let g = knn_graph(&pts, 2, KnnBackend::KdTree).unwrap();
        let null = permutation_null(
            NullStatistic::Knn(&g),
            &[2, 2, 2],
            NullMode::Exhaustive,
            &RandomStream::new(0, 0),
        )
        .unwrap();
        assert_eq!(null.draws, 90);
    }

    #[test]
    fn exhaustive_runs_moments_agree_with_closed_form() {
        let (_, d) = random_2d(9, 2);
        let p = greedy_path(&d, PathMethod::GreedyEdge).unwrap();
        let null = permutation_null(
            NullStatistic::Runs(&p),
            &[3, 2, 4],
            NullMode::Exhaustive,
            &RandomStream::new(0, 0),
        )
        .unwrap();
        let closed = run_moments(9, &[3, 2, 4]).unwrap();
        assert!((null.moments.mean.clone() - closed.mean).amax() < 1e-12);
        assert!((null.moments.covariance.clone() - closed.covariance).amax() < 1e-12);
    }

    #[test]
    fn cap_enforced() {
        let (_, d) = random_2d(30, 2);
        let p = greedy_path(&d, PathMethod::GreedyEdge).unwrap();
        let r = permutation_null(
            NullStatistic::Runs(&p),
            &[15, 15],
            NullMode::Exhaustive,
            &RandomStream::new(0, 0),
        );
        assert!(matches!(r, Err(Error::Capacity(_))));
    }

    #[test]
    fn monte_carlo_p_value_within_binomial_band() {
        let (_, d) = random_2d(12, 4);
        let m = nbm_matching(&d).unwrap();
        let stat = NullStatistic::Crossmatch(&m);
        let sizes = [4, 4, 4];
        let exact =
            permutation_null(stat, &sizes, NullMode::Exhaustive, &RandomStream::new(0, 0)).unwrap();
        let draws = 20_000;
        let mc = permutation_null(
            stat,
            &sizes,
            NullMode::MonteCarlo { draws },
            &RandomStream::new(11, 3),
        )
        .unwrap();
        let total = |s: &[f64]| s.iter().sum::<f64>();
        for observed in [3.0, 4.0, 5.0] {
            let p = exact.p_value(observed, total, Tail::Lower);
            let q = mc.p_value(observed, total, Tail::Lower);
            let band = 2.576 * (p * (1.0 - p) / draws as f64).sqrt() + 1.0 / draws as f64;
            assert!((p - q).abs() <= band, "obs {observed}: exact {p} mc {q}");
        }
    }

    #[test]
    fn monte_carlo_is_deterministic() {
        let (_, d) = random_2d(20, 5);
        let p = greedy_path(&d, PathMethod::GreedyEdge).unwrap();
        let rng = RandomStream::new(99, 1);
        let a = permutation_null(
            NullStatistic::RanksKw(&p),
            &[10, 10],
            NullMode::MonteCarlo { draws: 500 },
            &rng,
        )
        .unwrap();
        let b = permutation_null(
            NullStatistic::RanksKw(&p),
            &[10, 10],
            NullMode::MonteCarlo { draws: 500 },
            &rng,
        )
        .unwrap();
        assert_eq!(a, b);
        let groups: Vec<usize> = (0..20).map(|i| i % 2).collect();
        let observed = run_counts(&p, &groups, 2).unwrap();
        assert_eq!(observed.len(), 2);
    }
}
