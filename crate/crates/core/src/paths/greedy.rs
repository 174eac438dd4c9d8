use super::{Path, PathMethod};
use crate::dataset::DistanceMatrix;
use crate::error::{input_err, Result};

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

/// Greedy Hamiltonian path, by edge insertion or by nearest-neighbour chaining.
///
/// Ties on distance break by the smaller `(i, j)` index pair. The returned
/// order starts at the lower-indexed endpoint.
pub fn greedy_path(dist: &DistanceMatrix, variant: PathMethod) -> Result<Path> {
    let n = dist.n();
    if n < 2 {
        return input_err("a path needs at least two units");
    }
    let order = match variant {
        PathMethod::GreedyEdge => greedy_edge_order(dist),
        PathMethod::NnChain => nn_chain_order(dist),
        other => return input_err(format!("{} is not a greedy variant", other.name())),
    };
    let total = order.windows(2).map(|w| dist.get(w[0], w[1])).sum();
    Ok(Path::new_unchecked(order, variant, total))
}

fn greedy_edge_order(dist: &DistanceMatrix) -> Vec<usize> {
    let n = dist.n();
    let mut edges: Vec<(f64, u32, u32)> = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        let row = dist.row(i);
        for (j, &w) in row.iter().enumerate().skip(i + 1) {
            edges.push((w, i as u32, j as u32));
        }
    }
    edges.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut degree = vec![0u8; n];
    let mut adj = vec![[usize::MAX; 2]; n];
    let mut sets = DisjointSet::new(n);
    let mut accepted = 0;
    for &(_, i, j) in &edges {
        let (i, j) = (i as usize, j as usize);
        if degree[i] >= 2 || degree[j] >= 2 || !sets.union(i, j) {
            continue;
        }
        adj[i][degree[i] as usize] = j;
        adj[j][degree[j] as usize] = i;
        degree[i] += 1;
        degree[j] += 1;
        accepted += 1;
        if accepted == n - 1 {
            break;
        }
    }
    let start = (0..n)
        .find(|&u| degree[u] == 1)
        .expect("a path has two endpoints");
    let mut order = Vec::with_capacity(n);
    let (mut prev, mut cur) = (usize::MAX, start);
    loop {
        order.push(cur);
        let next = adj[cur]
            .iter()
            .copied()
            .find(|&v| v != usize::MAX && v != prev);
        match next {
            Some(v) => {
                prev = cur;
                cur = v;
            }
            None => break,
        }
    }
    order
}

fn nn_chain_order(dist: &DistanceMatrix) -> Vec<usize> {
    let n = dist.n();
    let mut best = (f64::INFINITY, 0, 1);
    for i in 0..n {
        for j in i + 1..n {
            let w = dist.get(i, j);
            if w < best.0 {
                best = (w, i, j);
            }
        }
    }
    let (_, a, b) = best;
    let mut used = vec![false; n];
    used[a] = true;
    used[b] = true;
    let mut front = vec![a];
    let mut back = vec![b];

    let nearest = |from: usize, used: &[bool]| -> Option<(f64, usize)> {
        let row = dist.row(from);
        let mut out: Option<(f64, usize)> = None;
        for (v, &w) in row.iter().enumerate() {
            if !used[v] && out.is_none_or(|(bw, _)| w < bw) {
                out = Some((w, v));
            }
        }
        out
    };

    for _ in 2..n {
        let head = *front.last().unwrap();
        let tail = *back.last().unwrap();
        let (hw, hv) = nearest(head, &used).expect("unused units remain");
        let (tw, tv) = nearest(tail, &used).expect("unused units remain");
        // nearer endpoint wins; then smaller candidate index; then the head
        if tw < hw || (tw == hw && tv < hv) {
            back.push(tv);
            used[tv] = true;
        } else {
            front.push(hv);
            used[hv] = true;
        }
    }
    front.reverse();
    front.extend(back);
    if front[0] > front[n - 1] {
        front.reverse();
    }
    front
}
