use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use super::{check_groups, MomentSet, StatKind, StatVector};
use crate::error::{input_err, Result};
use crate::paths::Path;

/// R_g: number of maximal blocks of group g along the path.
pub fn run_counts(path: &Path, groups: &[usize], num_groups: usize) -> Result<StatVector> {
    check_groups(groups, num_groups, path.len())?;
    Ok(StatVector {
        kind: StatKind::Runs,
        values: run_counts_unchecked(path.order(), groups, num_groups),
    })
}

pub(crate) fn run_counts_unchecked(
    order: &[usize],
    groups: &[usize],
    num_groups: usize,
) -> Vec<f64> {
    let mut runs = vec![0u64; num_groups];
    let mut prev = usize::MAX;
    for &u in order {
        let g = groups[u];
        if g != prev {
            runs[g] += 1;
            prev = g;
        }
    }
    runs.into_iter().map(|r| r as f64).collect()
}

fn falling(n: usize, c: usize) -> f64 {
    (0..c).map(|i| n as f64 - i as f64).product()
}

/// Probability that the listed positions carry the listed groups under a
/// uniformly random arrangement.
fn pattern_probability(assign: &[(usize, usize)], sizes: &[usize], n_total: usize) -> f64 {
    let mut fixed: BTreeMap<usize, usize> = BTreeMap::new();
    for &(pos, g) in assign {
        match fixed.insert(pos, g) {
            Some(prev) if prev != g => return 0.0,
            _ => {}
        }
    }
    let mut per_group = vec![0usize; sizes.len()];
    for &g in fixed.values() {
        per_group[g] += 1;
    }
    let num: f64 = sizes
        .iter()
        .zip(&per_group)
        .map(|(&n, &c)| falling(n, c))
        .product();
    num / falling(n_total, fixed.len())
}

/// Run-start indicator at `pos` (1-based) for group g as a signed sum of
/// pattern indicators: [Z_1 = g], or [Z_t = g] − [Z_t = g, Z_{t−1} = g].
fn start_terms(pos: usize, g: usize) -> Vec<(f64, Vec<(usize, usize)>)> {
    if pos == 1 {
        vec![(1.0, vec![(1, g)])]
    } else {
        vec![(1.0, vec![(pos, g)]), (-1.0, vec![(pos, g), (pos - 1, g)])]
    }
}

fn joint_start(s: usize, g: usize, t: usize, h: usize, sizes: &[usize], n_total: usize) -> f64 {
    let mut acc = 0.0;
    for (sa, a) in start_terms(s, g) {
        for (sb, b) in start_terms(t, h) {
            let merged: Vec<_> = a.iter().chain(&b).copied().collect();
            acc += sa * sb * pattern_probability(&merged, sizes, n_total);
        }
    }
    acc
}

/// Exact permutation mean and covariance of the run counts.
///
/// Expands R_g R_h into run-start indicator pairs; the expectation of each
/// pair depends only on whether the positions coincide, touch, or are apart,
/// so each class is evaluated once and weighted by its number of position pairs.
pub fn run_moments(n_total: usize, sizes: &[usize]) -> Result<MomentSet> {
    if sizes.is_empty() || sizes.contains(&0) {
        return input_err("every group needs at least one unit");
    }
    if sizes.iter().sum::<usize>() != n_total {
        return input_err("group sizes do not sum to N");
    }
    let n = n_total;
    let nf = n as f64;
    let g = sizes.len();
    let mean = DVector::from_iterator(
        g,
        sizes.iter().map(|&a| a as f64 * (nf - a as f64 + 1.0) / nf),
    );

    let apart = (n.saturating_sub(2) * n.saturating_sub(3)) as f64 / 2.0;
    let classes: [(usize, usize, f64); 10] = [
        (1, 1, 1.0),
        (1, 2, if n >= 2 { 1.0 } else { 0.0 }),
        (2, 1, if n >= 2 { 1.0 } else { 0.0 }),
        (1, 3, n.saturating_sub(2) as f64),
        (3, 1, n.saturating_sub(2) as f64),
        (2, 2, n.saturating_sub(1) as f64),
        (2, 3, n.saturating_sub(2) as f64),
        (3, 2, n.saturating_sub(2) as f64),
        (2, 4, apart),
        (4, 2, apart),
    ];
    let mut cov = DMatrix::zeros(g, g);
    for a in 0..g {
        for b in a..g {
            let second: f64 = classes
                .iter()
                .filter(|c| c.2 > 0.0)
                .map(|&(s, t, mult)| mult * joint_start(s, a, t, b, sizes, n))
                .sum();
            let v = second - mean[a] * mean[b];
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    Ok(MomentSet {
        mean,
        covariance: cov,
    })
}

/// Kruskal–Wallis statistic on path positions: returns (H, G − 1).
pub fn kw_rank_statistic(path: &Path, groups: &[usize], num_groups: usize) -> Result<(f64, usize)> {
    check_groups(groups, num_groups, path.len())?;
    if num_groups < 2 {
        return input_err("rank statistic needs at least 2 groups");
    }
    let h = kw_unchecked(path.order(), groups, num_groups)?;
    Ok((h, num_groups - 1))
}

pub(crate) fn kw_unchecked(order: &[usize], groups: &[usize], num_groups: usize) -> Result<f64> {
    let n = order.len() as f64;
    let mut rank_sum = vec![0.0; num_groups];
    let mut sizes = vec![0usize; num_groups];
    for (t, &u) in order.iter().enumerate() {
        rank_sum[groups[u]] += (t + 1) as f64;
        sizes[groups[u]] += 1;
    }
    if let Some(g) = sizes.iter().position(|&s| s == 0) {
        return input_err(format!("group {} is empty", g + 1));
    }
    let centre = (n + 1.0) / 2.0;
    let ss: f64 = rank_sum
        .iter()
        .zip(&sizes)
        .map(|(&r, &s)| {
            let dev = r / s as f64 - centre;
            s as f64 * dev * dev
        })
        .sum();
    Ok(12.0 / (n * (n + 1.0)) * ss)
}
