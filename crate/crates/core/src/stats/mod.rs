//! Statistic vectors computed on a fixed graph and their permutation-null moments.
//!
//! Labels are passed as 0-based group indices together with the group count;
//! the graph (path, kNN digraph, or matching) never changes while labels permute.

mod crossmatch;
mod knn;
mod permutation;
mod runs;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{input_err, Result};
use crate::numerics::correlation_from_covariance;

pub use crossmatch::{crossmatch_counts, crossmatch_group_totals, pair_index, within_pair_counts};
pub use knn::{cross_group_edges, knn_counts, knn_moments, knn_standardize, KnnMoments};
pub use permutation::{
    multinomial_count, permutation_null, NullMode, NullStatistic, PermutationNull, Tail,
    EXHAUSTIVE_CAP,
};
pub use runs::{kw_rank_statistic, run_counts, run_moments};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatKind {
    Runs,
    RanksKw,
    CrossmatchPairs,
    KnnCounts,
}

impl StatKind {
    pub fn name(&self) -> &'static str {
        match self {
            StatKind::Runs => "runs",
            StatKind::RanksKw => "ranks_kw",
            StatKind::CrossmatchPairs => "crossmatch_pairs",
            StatKind::KnnCounts => "knn_counts",
        }
    }
}

/// Observed statistic vector S.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatVector {
    pub kind: StatKind,
    pub values: Vec<f64>,
}

impl StatVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_dvector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.values)
    }
}

/// Null mean vector and covariance matrix of a statistic vector.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSet {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

impl MomentSet {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn variances(&self) -> Vec<f64> {
        self.covariance.diagonal().iter().copied().collect()
    }

    /// Correlation matrix; fails if any component has zero variance.
    pub fn correlation(&self) -> Result<DMatrix<f64>> {
        correlation_from_covariance(&self.covariance)
    }

    /// Sample mean and (n − 1)-denominator covariance of `rows`.
    pub fn from_samples(rows: &[Vec<f64>]) -> Result<Self> {
        let Some(first) = rows.first() else {
            return input_err("no samples");
        };
        let m = first.len();
        let n = rows.len() as f64;
        let mut mean = DVector::zeros(m);
        for r in rows {
            for (a, &v) in mean.iter_mut().zip(r) {
                *a += v;
            }
        }
        mean /= n;
        let mut cov = DMatrix::zeros(m, m);
        for r in rows {
            for i in 0..m {
                let di = r[i] - mean[i];
                for j in i..m {
                    cov[(i, j)] += di * (r[j] - mean[j]);
                }
            }
        }
        let denom = if rows.len() > 1 { n - 1.0 } else { 1.0 };
        for i in 0..m {
            for j in i..m {
                let v = cov[(i, j)] / denom;
                cov[(i, j)] = v;
                cov[(j, i)] = v;
            }
        }
        Ok(Self {
            mean,
            covariance: cov,
        })
    }
}

/// Check that `groups` are indices below `num_groups`.
pub(crate) fn check_groups(groups: &[usize], num_groups: usize, n: usize) -> Result<()> {
    if groups.len() != n {
        return input_err(format!("{} labels for {n} units", groups.len()));
    }
    if let Some(&g) = groups.iter().find(|&&g| g >= num_groups) {
        return input_err(format!(
            "group index {g} out of range for {num_groups} groups"
        ));
    }
    Ok(())
}

#[cfg(test)]
pub(crate) mod test_support {
    /// Every distinct arrangement of a multiset, in lexicographic order.
    pub fn arrangements(sizes: &[usize]) -> Vec<Vec<usize>> {
        let mut base: Vec<usize> = sizes
            .iter()
            .enumerate()
            .flat_map(|(g, &n)| std::iter::repeat_n(g, n))
            .collect();
        let mut out = vec![base.clone()];
        while let Some(i) = (0..base.len().saturating_sub(1))
            .rev()
            .find(|&i| base[i] < base[i + 1])
        {
            let j = (i + 1..base.len())
                .rev()
                .find(|&j| base[j] > base[i])
                .unwrap();
            base.swap(i, j);
            base[i + 1..].reverse();
            out.push(base.clone());
        }
        out
    }
}
