use super::{check_groups, StatKind, StatVector};
use crate::error::Result;
use crate::nngraph::Matching;

/// Position of the unordered group pair (g, h), g < h, in lexicographic order.
pub fn pair_index(g: usize, h: usize, num_groups: usize) -> usize {
    debug_assert!(g < h && h < num_groups);
    g * num_groups - g * (g + 1) / 2 + (h - g - 1)
}

/// A_gh for g < h: matched pairs with one unit in g and the other in h.
pub fn crossmatch_counts(
    matching: &Matching,
    groups: &[usize],
    num_groups: usize,
) -> Result<StatVector> {
    check_groups(groups, num_groups, matching.n())?;
    Ok(StatVector {
        kind: StatKind::CrossmatchPairs,
        values: crossmatch_unchecked(matching.pairs(), groups, num_groups),
    })
}

pub(crate) fn crossmatch_unchecked(
    pairs: &[(usize, usize)],
    groups: &[usize],
    num_groups: usize,
) -> Vec<f64> {
    let mut counts = vec![0u64; num_groups * num_groups.saturating_sub(1) / 2];
    for &(a, b) in pairs {
        let (ga, gb) = (groups[a], groups[b]);
        if ga != gb {
            counts[pair_index(ga.min(gb), ga.max(gb), num_groups)] += 1;
        }
    }
    counts.into_iter().map(|c| c as f64).collect()
}

/// Σ_{h≠g} A_gh for each group g.
pub fn crossmatch_group_totals(pair_counts: &[f64], num_groups: usize) -> Vec<f64> {
    let mut totals = vec![0.0; num_groups];
    for g in 0..num_groups {
        for h in g + 1..num_groups {
            let a = pair_counts[pair_index(g, h, num_groups)];
            totals[g] += a;
            totals[h] += a;
        }
    }
    totals
}

/// Matched pairs with both units in group g.
pub fn within_pair_counts(matching: &Matching, groups: &[usize], num_groups: usize) -> Vec<u64> {
    let mut counts = vec![0u64; num_groups];
    for &(a, b) in matching.pairs() {
        if groups[a] == groups[b] {
            counts[groups[a]] += 1;
        }
    }
    counts
}
