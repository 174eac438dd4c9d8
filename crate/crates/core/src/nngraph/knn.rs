use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{squared_distance, Covariates};
use crate::error::{input_err, Result};

/// Neighbour search strategy. Both give identical graphs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnnBackend {
    #[default]
    KdTree,
    BruteForce,
}

/// Directed k-nearest-neighbour graph; row `i` lists the k closest other units,
/// nearest first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnnGraph {
    neighbors: Vec<usize>,
    k: usize,
    n: usize,
}

impl KnnGraph {
    /// Wrap explicit neighbour lists (row-major, `k` per unit).
    pub fn from_neighbors(n: usize, k: usize, neighbors: Vec<usize>) -> Result<Self> {
        if k == 0 || neighbors.len() != n * k {
            return input_err(format!("expected {n} rows of {k} neighbours"));
        }
        for i in 0..n {
            let row = &neighbors[i * k..(i + 1) * k];
            for (a, &j) in row.iter().enumerate() {
                if j >= n || j == i || row[..a].contains(&j) {
                    return input_err(format!("invalid neighbour {j} for unit {i}"));
                }
            }
        }
        Ok(Self { neighbors, k, n })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i * self.k..(i + 1) * self.k]
    }

    /// Directed edges `(i, j)` meaning j is among i's neighbours.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| self.neighbors(i).iter().map(move |&j| (i, j)))
    }

    pub fn in_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &j in &self.neighbors {
            deg[j] += 1;
        }
        deg
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Candidate {
    dist: f64,
    index: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist
            .total_cmp(&other.dist)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Bounded max-heap keeping the k smallest `(distance, index)` pairs.
struct Best {
    heap: BinaryHeap<Candidate>,
    k: usize,
}

impl Best {
    fn new(k: usize) -> Self {
        Self {
            heap: BinaryHeap::with_capacity(k + 1),
            k,
        }
    }

    fn offer(&mut self, c: Candidate) {
        if self.heap.len() < self.k {
            self.heap.push(c);
        } else if c < *self.heap.peek().expect("k >= 1") {
            self.heap.pop();
            self.heap.push(c);
        }
    }

    /// Current k-th distance, or +inf while the heap is not full.
    fn bound(&self) -> f64 {
        if self.heap.len() < self.k {
            f64::INFINITY
        } else {
            self.heap.peek().expect("k >= 1").dist
        }
    }

    fn into_sorted(self) -> Vec<usize> {
        self.heap
            .into_sorted_vec()
            .into_iter()
            .map(|c| c.index)
            .collect()
    }
}

const LEAF_SIZE: usize = 16;

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

/// Static kd-tree over the rows of a covariate matrix.
struct KdTree<'a> {
    points: &'a Covariates,
    index: Vec<usize>,
    nodes: Vec<Node>,
}

impl<'a> KdTree<'a> {
    fn build(points: &'a Covariates) -> Self {
        let mut tree = Self {
            points,
            index: (0..points.rows()).collect(),
            nodes: Vec::new(),
        };
        let n = points.rows();
        tree.build_node(0, n);
        tree
    }

    fn build_node(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let d = self.points.cols();
        let mut dim = 0;
        let mut widest = -1.0;
        for j in 0..d {
            let (lo, hi) = self.index[start..end].iter().fold(
                (f64::INFINITY, f64::NEG_INFINITY),
                |(lo, hi), &i| {
                    let v = self.points.row(i)[j];
                    (lo.min(v), hi.max(v))
                },
            );
            if hi - lo > widest {
                widest = hi - lo;
                dim = j;
            }
        }
        if widest <= 0.0 {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let mid = start + (end - start) / 2;
        let points = self.points;
        self.index[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points.row(a)[dim]
                .total_cmp(&points.row(b)[dim])
                .then(a.cmp(&b))
        });
        let value = self.points.row(self.index[mid])[dim];
        // placeholder, patched once children exist
        self.nodes.push(Node::Leaf { start, end });
        let left = self.build_node(start, mid);
        let right = self.build_node(mid, end);
        self.nodes[id] = Node::Split {
            dim,
            value,
            left,
            right,
        };
        id
    }

    fn query(&self, target: usize, k: usize) -> Vec<usize> {
        let mut best = Best::new(k);
        self.search(0, target, self.points.row(target), &mut best);
        best.into_sorted()
    }

    fn search(&self, node: usize, target: usize, q: &[f64], best: &mut Best) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.index[start..end] {
                    if i != target {
                        best.offer(Candidate {
                            dist: squared_distance(q, self.points.row(i)),
                            index: i,
                        });
                    }
                }
            }
            Node::Split {
                dim,
                value,
                left,
                right,
            } => {
                // left holds coordinates <= value, right >= value
                let (near, far) = if q[dim] < value {
                    (left, right)
                } else {
                    (right, left)
                };
                self.search(near, target, q, best);
                let gap = q[dim] - value;
                // strict: a far point at exactly the bound may still win on index
                if gap * gap <= best.bound() {
                    self.search(far, target, q, best);
                }
            }
        }
    }
}

fn brute_force_neighbors(points: &Covariates, target: usize, k: usize) -> Vec<usize> {
    let q = points.row(target);
    let mut all: Vec<Candidate> = (0..points.rows())
        .filter(|&i| i != target)
        .map(|i| Candidate {
            dist: squared_distance(q, points.row(i)),
            index: i,
        })
        .collect();
    all.select_nth_unstable(k - 1);
    all.truncate(k);
    all.sort_unstable();
    all.into_iter().map(|c| c.index).collect()
}

/// k nearest other units of every row, euclidean on the given coordinates,
/// distance ties broken by the smaller index.
pub fn knn_graph(points: &Covariates, k: usize, backend: KnnBackend) -> Result<KnnGraph> {
    let n = points.rows();
    if n < 2 || k == 0 || k > n - 1 {
        return input_err(format!("k = {k} must lie in 1..={}", n.saturating_sub(1)));
    }
    let rows: Vec<Vec<usize>> = match backend {
        KnnBackend::BruteForce => (0..n)
            .into_par_iter()
            .map(|i| brute_force_neighbors(points, i, k))
            .collect(),
        KnnBackend::KdTree => {
            let tree = KdTree::build(points);
            (0..n).into_par_iter().map(|i| tree.query(i, k)).collect()
        }
    };
    Ok(KnnGraph {
        neighbors: rows.into_iter().flatten().collect(),
        k,
        n,
    })
}
