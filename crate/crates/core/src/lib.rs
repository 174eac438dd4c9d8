//! Graph-based nonparametric tests of the hypothesis that several treatment
//! groups share one covariate distribution.
//!
//! The crate builds three families of graphs over multivariate samples:
//!
//! * Hamiltonian paths ([`paths`]): greedy edge insertion, nearest-neighbour
//!   chaining, Hilbert-curve sorting, and an exact Held–Karp oracle for small N;
//! * k-nearest-neighbour digraphs ([`nngraph::knn_graph`]);
//! * minimum-weight perfect (non-bipartite) matchings ([`nngraph::nbm_matching`]).
//!
//! On top of them it computes runs, Kruskal–Wallis ranks, crossmatch, and
//! kNN-count statistics ([`stats`]), their permutation-null moments, and Wald or
//! extremum tests ([`htest`]). [`sim`] reproduces the Gaussian and
//! motivating-example power studies and [`io`] handles CSV input and reports.

pub mod dataset;
pub mod error;
pub mod htest;
pub mod io;
pub mod nngraph;
pub mod numerics;
pub mod paths;
pub mod sim;
pub mod stats;

pub use dataset::{group_summary, pairwise_distances, Covariates, Dataset, DistanceMatrix, Metric};
pub use error::{Error, Result};
pub use htest::{balance_test, BalanceConfig, Method, TestForm, TestReport};

pub use numerics::RandomStream;
