use nalgebra::{DMatrix, DVector};

use super::{check_groups, StatKind, StatVector};
use crate::error::{input_err, Error, Result};
use crate::nngraph::{GraphFunctionals, KnnGraph};

/// Within-group edge counts C_g: directed edges i → j with both ends in group g.
pub fn knn_counts(graph: &KnnGraph, groups: &[usize], num_groups: usize) -> Result<StatVector> {
    check_groups(groups, num_groups, graph.n())?;
    Ok(StatVector {
        kind: StatKind::KnnCounts,
        values: knn_counts_unchecked(graph, groups, num_groups),
    })
}

pub(crate) fn knn_counts_unchecked(
    graph: &KnnGraph,
    groups: &[usize],
    num_groups: usize,
) -> Vec<f64> {
    let mut counts = vec![0u64; num_groups];
    for (i, &gi) in groups.iter().enumerate() {
        for &j in graph.neighbors(i) {
            if groups[j] == gi {
                counts[gi] += 1;
            }
        }
    }
    counts.into_iter().map(|c| c as f64).collect()
}

/// Directed edges whose endpoints lie in different groups.
pub fn cross_group_edges(graph: &KnnGraph, groups: &[usize]) -> u64 {
    graph
        .edges()
        .filter(|&(i, j)| groups[i] != groups[j])
        .count() as u64
}

/// Exact permutation moments of the kNN counts on a fixed graph.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnMoments {
    pub expectation: DVector<f64>,
    pub covariance: DMatrix<f64>,
    /// Finite-sample correlation matrix of the counts.
    pub correlation_hat: DMatrix<f64>,
    /// 2J/N
    pub j_over_n: f64,
    /// 2S/N
    pub s_over_n: f64,
}

/// Closed-form permutation mean, variance and covariance of the kNN counts.
pub fn knn_moments(
    n_total: usize,
    sizes: &[usize],
    k: usize,
    functionals: GraphFunctionals,
) -> Result<KnnMoments> {
    if n_total < 4 {
        return input_err(format!("kNN moments need N ≥ 4, got {n_total}"));
    }
    if k == 0 || k >= n_total {
        return input_err(format!("k = {k} out of range for N = {n_total}"));
    }
    if sizes.iter().sum::<usize>() != n_total {
        return input_err("group sizes do not sum to N");
    }
    if let Some(g) = sizes.iter().position(|&s| s < 2) {
        return Err(Error::Degenerate(format!(
            "group {} has fewer than 2 units; its kNN count has no variance",
            g + 1
        )));
    }
    let nn = n_total as f64;
    let kf = k as f64;
    let j = functionals.mutual_pairs as f64;
    let s = functionals.shared_pairs as f64;
    let denom = nn * (nn - 1.0) * (nn - 2.0) * (nn - 3.0);
    let ff2 = |n: f64| n * (n - 1.0);

    let fhat = |n: f64| {
        kf * nn + 2.0 * j + (n - 2.0) / (nn - n - 1.0) * (2.0 * s + kf * nn - kf * kf * nn)
            - 2.0 * kf * kf * nn / (nn - 1.0)
    };
    let cross_term = 2.0 * j - 2.0 * s + kf * kf * nn * (nn - 3.0) / (nn - 1.0);

    let g = sizes.len();
    let sz: Vec<f64> = sizes.iter().map(|&n| n as f64).collect();
    let expectation = DVector::from_iterator(g, sz.iter().map(|&n| kf * ff2(n) / (nn - 1.0)));
    let mut covariance = DMatrix::zeros(g, g);
    let mut correlation_hat = DMatrix::identity(g, g);
    let f: Vec<f64> = sz.iter().map(|&n| fhat(n)).collect();
    for a in 0..g {
        let na = sz[a];
        // With a single group the (N − n) factor vanishes and f̂ is never needed.
        covariance[(a, a)] = if g == 1 {
            0.0
        } else {
            (ff2(na) * (nn - na) * (nn - na - 1.0) / denom * f[a]).max(0.0)
        };
        for b in a + 1..g {
            let nb = sz[b];
            let cov = ff2(na) * ff2(nb) / denom * cross_term;
            covariance[(a, b)] = cov;
            covariance[(b, a)] = cov;
            let r = (ff2(na) * ff2(nb)).sqrt()
                / ((nn - na) * (nn - na - 1.0) * (nn - nb) * (nn - nb - 1.0)).sqrt();
            let corr = if f[a] > 0.0 && f[b] > 0.0 {
                r * cross_term / (f[a] * f[b]).sqrt()
            } else {
                0.0
            };
            correlation_hat[(a, b)] = corr;
            correlation_hat[(b, a)] = corr;
        }
    }
    Ok(KnnMoments {
        expectation,
        covariance,
        correlation_hat,
        j_over_n: 2.0 * j / nn,
        s_over_n: 2.0 * s / nn,
    })
}

/// U_g = (C_g − 0.5 − E C_g) / sd(C_g), paired with the correlation matrix.
pub fn knn_standardize(
    counts: &StatVector,
    moments: &KnnMoments,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let g = moments.expectation.len();
    if counts.len() != g {
        return input_err(format!("{} counts for {g} groups", counts.len()));
    }
    let scale = moments
        .expectation
        .iter()
        .fold(1.0f64, |m, &e| m.max(e.abs()));
    let mut u = DVector::zeros(g);
    for a in 0..g {
        let var = moments.covariance[(a, a)];
        if var <= 1e-12 * scale * scale {
            return Err(Error::Degenerate(format!(
                "kNN count of group {} has zero variance",
                a + 1
            )));
        }
        u[a] = (counts.values[a] - 0.5 - moments.expectation[a]) / var.sqrt();
    }
    Ok((u, moments.correlation_hat.clone()))
}
