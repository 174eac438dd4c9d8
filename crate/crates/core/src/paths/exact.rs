use super::{Path, PathMethod};
use crate::dataset::DistanceMatrix;
use crate::error::{input_err, Error, Result};

/// Held–Karp needs N·2^N table entries; beyond this use a greedy path.
pub const EXACT_PATH_MAX_N: usize = 16;

/// Shortest Hamiltonian path by dynamic programming over (visited set, current unit).
///
/// Among optimal paths the lexicographically smallest order is returned.
pub fn exact_path(dist: &DistanceMatrix) -> Result<Path> {
    let n = dist.n();
    if n < 2 {
        return input_err("a path needs at least two units");
    }
    if n > EXACT_PATH_MAX_N {
        return Err(Error::Capacity(format!(
            "exact path supports N <= {EXACT_PATH_MAX_N}, got {n}; use greedy_edge, nn_chain or hilbert"
        )));
    }
    let full = (1usize << n) - 1;
    // rest[set * n + v]: cheapest completion from v having visited `set` (v ∈ set)
    let mut rest = vec![f64::INFINITY; (full + 1) * n];
    let mut next = vec![u8::MAX; (full + 1) * n];
    for v in 0..n {
        rest[full * n + v] = 0.0;
    }
    for set in (1..full).rev() {
        for v in 0..n {
            if set & (1 << v) == 0 {
                continue;
            }
            let mut best = f64::INFINITY;
            let mut arg = u8::MAX;
            for u in 0..n {
                if set & (1 << u) != 0 {
                    continue;
                }
                let c = dist.get(v, u) + rest[(set | 1 << u) * n + u];
                if c < best {
                    best = c;
                    arg = u as u8;
                }
            }
            rest[set * n + v] = best;
            next[set * n + v] = arg;
        }
    }
    let mut start = 0;
    for v in 1..n {
        if rest[(1 << v) * n + v] < rest[(1 << start) * n + start] {
            start = v;
        }
    }
    let total = rest[(1 << start) * n + start];
    let mut order = Vec::with_capacity(n);
    let (mut set, mut cur) = (1usize << start, start);
    order.push(cur);
    while set != full {
        let u = next[set * n + cur] as usize;
        set |= 1 << u;
        cur = u;
        order.push(cur);
    }
    Ok(Path::new_unchecked(order, PathMethod::Exact, total))
}
