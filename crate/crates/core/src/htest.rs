//! Wald and extremum tests, and the end-to-end `balance_test` driver.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::{pairwise_distances, Covariates, Dataset, DistanceMatrix, Metric};
use crate::error::{Error, Result};
use crate::nngraph::{graph_functionals, knn_graph, nbm_matching, KnnBackend, KnnGraph, Matching};
use crate::numerics::{
    chi_square_sf, mvn_extremum_sf, solve_spd_or_pinv, Direction, RandomStream, DEFAULT_MC_DRAWS,
    DEFAULT_PINV_TOL,
};
use crate::paths::{build_path, Path, PathMethod};
use crate::stats::{
    crossmatch_counts, crossmatch_group_totals, knn_counts, knn_moments, knn_standardize,
    kw_rank_statistic, permutation_null, run_counts, run_moments, MomentSet, NullMode,
    NullStatistic, StatKind,
};

pub const DEFAULT_PERMUTATION_DRAWS: usize = 10_000;

/// Graph and statistic family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Knn,
    Crossmatch,
    Runs,
    Ranks,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Knn, Method::Crossmatch, Method::Runs, Method::Ranks];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Knn => "knn",
            Method::Crossmatch => "crossmatch",
            Method::Runs => "runs",
            Method::Ranks => "ranks",
        }
    }

    /// Extremum direction that signals imbalance: many within-group kNN edges,
    /// few cross-group matches, few runs.
    pub fn extremum_direction(&self) -> Option<Direction> {
        match self {
            Method::Knn => Some(Direction::Max),
            Method::Crossmatch | Method::Runs => Some(Direction::Min),
            Method::Ranks => None,
        }
    }

    /// Wald for kNN, crossmatch and ranks; extremum for runs.
    pub fn default_form(&self) -> TestForm {
        match self {
            Method::Runs => TestForm::Min,
            _ => TestForm::Wald,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestForm {
    Wald,
    Max,
    Min,
}

impl TestForm {
    pub fn name(&self) -> &'static str {
        match self {
            TestForm::Wald => "wald",
            TestForm::Max => "max",
            TestForm::Min => "min",
        }
    }
}

/// Degrees of freedom used by the Wald form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DofPolicy {
    Full,
    MinusOne,
    /// Numerical rank of the covariance.
    Rank,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentSource {
    Analytic,
    Exhaustive,
    MonteCarlo,
}

/// Statistic, reference-distribution parameters and p-value of one test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestOutcome {
    pub statistic: f64,
    pub dof: Option<usize>,
    pub p_value: f64,
    pub mc_se: Option<f64>,
}

/// T = (S − μ)ᵀ Σ⁺ (S − μ) referred to χ² with dof from `policy`.
pub fn wald_test(
    s: &DVector<f64>,
    mu: &DVector<f64>,
    sigma: &DMatrix<f64>,
    policy: DofPolicy,
) -> Result<TestOutcome> {
    if s.len() != mu.len() {
        return Err(Error::Input(format!(
            "statistic has length {}, mean {}",
            s.len(),
            mu.len()
        )));
    }
    let diff = s - mu;
    let sol = solve_spd_or_pinv(sigma, &diff, DEFAULT_PINV_TOL)?;
    let m = s.len();
    let dof = match policy {
        DofPolicy::Full => m,
        DofPolicy::MinusOne => m.saturating_sub(1),
        DofPolicy::Rank => sol.rank,
    };
    if dof == 0 {
        return Err(Error::Degenerate(
            "Wald test has zero degrees of freedom".into(),
        ));
    }
    let t = diff.dot(&sol.x).max(0.0);
    Ok(TestOutcome {
        statistic: t,
        dof: Some(dof),
        p_value: chi_square_sf(t, dof)?,
        mc_se: None,
    })
}

/// T = max(U) or min(U), with its Gaussian tail probability by simulation.
pub fn extremum_test(
    u: &DVector<f64>,
    omega: &DMatrix<f64>,
    direction: Direction,
    n_mc: usize,
    rng: &mut RandomStream,
) -> Result<TestOutcome> {
    if u.is_empty() {
        return Err(Error::Input("empty statistic vector".into()));
    }
    let t = match direction {
        Direction::Max => u.max(),
        Direction::Min => u.min(),
    };
    let est = mvn_extremum_sf(t, omega, direction, n_mc, rng)?;
    Ok(TestOutcome {
        statistic: t,
        dof: None,
        p_value: est.p,
        mc_se: Some(est.mc_se),
    })
}

/// Knobs of [`balance_test`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BalanceConfig {
    /// Neighbours per unit; `None` means max(1, ⌊0.1 N⌋).
    pub k: Option<usize>,
    pub path_method: PathMethod,
    pub metric: Metric,
    pub knn_backend: KnnBackend,
    /// Draws for Gaussian extremum tail probabilities.
    pub n_mc: usize,
    /// Draws for Monte-Carlo permutation nulls.
    pub permutation_draws: usize,
    pub seed: u64,
}

impl Default for BalanceConfig {
    fn default() -> Self {
        Self {
            k: None,
            path_method: PathMethod::GreedyEdge,
            metric: Metric::Euclidean,
            knn_backend: KnnBackend::KdTree,
            n_mc: DEFAULT_MC_DRAWS,
            permutation_draws: DEFAULT_PERMUTATION_DRAWS,
            seed: 0,
        }
    }
}

/// max(1, ⌊0.1 N⌋), capped at N − 1.
pub fn default_k(n: usize) -> usize {
    (n / 10).max(1).min(n.saturating_sub(1))
}

/// Where the statistic came from and how the null was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphMeta {
    /// `knn`, `nbm`, or the path method name.
    pub graph: String,
    pub k: Option<usize>,
    pub n: usize,
    pub group_sizes: Vec<usize>,
    pub seed: u64,
    pub dropped_unit: Option<usize>,
    pub metric: Metric,
}

/// Everything a single test produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub method: Method,
    pub statistic_kind: StatKind,
    pub test_form: TestForm,
    /// Test statistic T.
    pub statistic: f64,
    pub dof: Option<usize>,
    pub p_value: f64,
    pub mc_se: Option<f64>,
    pub moment_source: MomentSource,
    /// Observed statistic vector S.
    pub components: Vec<f64>,
    /// Null mean of S (empty for the rank statistic).
    pub null_mean: Vec<f64>,
    /// Standardized vector fed to the extremum or kNN Wald test.
    pub standardized: Option<Vec<f64>>,
    /// 0.5 subtracted before standardizing (kNN counts only).
    pub continuity_correction: bool,
    /// Crossmatch only: Σ_{h≠g} A_gh per group.
    pub group_totals: Option<Vec<f64>>,
    pub graph_meta: GraphMeta,
    /// Original label of each group, when labels were remapped on input.
    pub label_mapping: Option<Vec<String>>,
}

/// Graphs built once per dataset and shared across several tests.
pub struct GraphCache<'a> {
    dataset: &'a Dataset,
    metric: Metric,
    points: Option<Covariates>,
    dist: Option<DistanceMatrix>,
    knn: HashMap<(usize, KnnBackend), KnnGraph>,
    matching: Option<Matching>,
    paths: HashMap<PathMethod, Path>,
}

impl<'a> GraphCache<'a> {
    pub fn new(dataset: &'a Dataset, metric: Metric) -> Self {
        Self {
            dataset,
            metric,
            points: None,
            dist: None,
            knn: HashMap::new(),
            matching: None,
            paths: HashMap::new(),
        }
    }

    pub fn dataset(&self) -> &Dataset {
        self.dataset
    }

    fn points(&mut self) -> Result<&Covariates> {
        if self.points.is_none() {
            self.points = Some(self.metric.embed(self.dataset.covariates())?);
        }
        Ok(self.points.as_ref().expect("just set"))
    }

    pub fn distances(&mut self) -> Result<&DistanceMatrix> {
        if self.dist.is_none() {
            let d = pairwise_distances(self.dataset.covariates(), self.metric)?;
            self.dist = Some(d);
        }
        Ok(self.dist.as_ref().expect("just set"))
    }

    pub fn knn(&mut self, k: usize, backend: KnnBackend) -> Result<&KnnGraph> {
        if !self.knn.contains_key(&(k, backend)) {
            let g = knn_graph(self.points()?, k, backend)?;
            self.knn.insert((k, backend), g);
        }
        Ok(&self.knn[&(k, backend)])
    }

    pub fn matching(&mut self) -> Result<&Matching> {
        if self.matching.is_none() {
            let m = nbm_matching(self.distances()?)?;
            self.matching = Some(m);
        }
        Ok(self.matching.as_ref().expect("just set"))
    }

    pub fn path(&mut self, method: PathMethod) -> Result<&Path> {
        if !self.paths.contains_key(&method) {
            self.points()?;
            self.distances()?;
            let p = build_path(
                self.points.as_ref().expect("set"),
                self.dist.as_ref().expect("set"),
                method,
            )?;
            self.paths.insert(method, p);
        }
        Ok(&self.paths[&method])
    }
}

/// Build the graph for `method`, compute its statistic and null moments, and
/// run the requested test form.
pub fn balance_test(
    dataset: &Dataset,
    method: Method,
    form: TestForm,
    config: &BalanceConfig,
) -> Result<TestReport> {
    let mut cache = GraphCache::new(dataset, config.metric);
    balance_test_cached(&mut cache, method, form, config)
}

fn standardize(s: &DVector<f64>, m: &MomentSet) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let mut u = DVector::zeros(s.len());
    for i in 0..s.len() {
        let var = m.covariance[(i, i)];
        if var <= 0.0 {
            return Err(Error::Degenerate(format!(
                "component {} has zero null variance",
                i + 1
            )));
        }
        u[i] = (s[i] - m.mean[i]) / var.sqrt();
    }
    Ok((u, m.correlation()?))
}

struct Computed {
    outcome: TestOutcome,
    kind: StatKind,
    source: MomentSource,
    components: Vec<f64>,
    null_mean: Vec<f64>,
    standardized: Option<Vec<f64>>,
    group_totals: Option<Vec<f64>>,
    continuity_correction: bool,
}

/// [`balance_test`] reusing graphs from `cache`.
pub fn balance_test_cached(
    cache: &mut GraphCache<'_>,
    method: Method,
    form: TestForm,
    config: &BalanceConfig,
) -> Result<TestReport> {
    let dataset = cache.dataset;
    let n = dataset.n();
    let num_groups = dataset.num_groups();
    if num_groups < 2 {
        return Err(Error::Config(format!(
            "balance tests need at least 2 groups, got {num_groups}"
        )));
    }
    if method == Method::Ranks && form != TestForm::Wald {
        return Err(Error::Config(
            "the rank statistic supports only the Wald form".into(),
        ));
    }
    let groups = dataset.groups();
    let sizes = dataset.group_sizes().to_vec();
    let root = RandomStream::new(config.seed, 0);
    let mut mvn_rng = root.substream(2);
    let direction = match form {
        TestForm::Max => Some(Direction::Max),
        TestForm::Min => Some(Direction::Min),
        TestForm::Wald => None,
    };
    let mut meta = GraphMeta {
        graph: String::new(),
        k: None,
        n,
        group_sizes: sizes.clone(),
        seed: config.seed,
        dropped_unit: None,
        metric: config.metric,
    };

    let extremum =
        |u: &DVector<f64>, omega: &DMatrix<f64>, dir: Direction, rng: &mut RandomStream| {
            extremum_test(u, omega, dir, config.n_mc, rng)
        };
    let to_vec = |v: &DVector<f64>| v.iter().copied().collect::<Vec<f64>>();

    let c = match method {
        Method::Knn => {
            let k = config.k.unwrap_or_else(|| default_k(n));
            let graph = cache.knn(k, config.knn_backend)?;
            meta.graph = "knn".into();
            meta.k = Some(k);
            let counts = knn_counts(graph, groups, num_groups)?;
            let moments = knn_moments(n, &sizes, k, graph_functionals(graph))?;
            let (u, omega) = knn_standardize(&counts, &moments)?;
            let outcome = match direction {
                None => wald_test(&u, &DVector::zeros(u.len()), &omega, DofPolicy::Full)?,
                Some(dir) => extremum(&u, &omega, dir, &mut mvn_rng)?,
            };
            Computed {
                outcome,
                kind: StatKind::KnnCounts,
                source: MomentSource::Analytic,
                components: counts.values,
                null_mean: to_vec(&moments.expectation),
                standardized: Some(to_vec(&u)),
                group_totals: None,
                continuity_correction: true,
            }
        }
        Method::Crossmatch => {
            let matching = cache.matching()?;
            meta.graph = "nbm".into();
            meta.dropped_unit = matching.dropped_unit();
            let counts = crossmatch_counts(matching, groups, num_groups)?;
            let null = permutation_null(
                NullStatistic::Crossmatch(matching),
                &sizes,
                NullMode::MonteCarlo {
                    draws: config.permutation_draws,
                },
                &root.substream(1),
            )?;
            let s = counts.as_dvector();
            let (outcome, u) = match direction {
                None => (
                    wald_test(
                        &s,
                        &null.moments.mean,
                        &null.moments.covariance,
                        DofPolicy::Rank,
                    )?,
                    None,
                ),
                Some(dir) => {
                    let (u, omega) = standardize(&s, &null.moments)?;
                    (extremum(&u, &omega, dir, &mut mvn_rng)?, Some(to_vec(&u)))
                }
            };
            Computed {
                outcome,
                kind: StatKind::CrossmatchPairs,
                source: MomentSource::MonteCarlo,
                group_totals: Some(crossmatch_group_totals(&counts.values, num_groups)),
                components: counts.values,
                null_mean: to_vec(&null.moments.mean),
                standardized: u,
                continuity_correction: false,
            }
        }
        Method::Runs => {
            let path = cache.path(config.path_method)?;
            meta.graph = path.method().name().into();
            let counts = run_counts(path, groups, num_groups)?;
            let moments = run_moments(n, &sizes)?;
            let s = counts.as_dvector();
            let (outcome, u) = match direction {
                None => (
                    wald_test(&s, &moments.mean, &moments.covariance, DofPolicy::Rank)?,
                    None,
                ),
                Some(dir) => {
                    let (u, omega) = standardize(&s, &moments)?;
                    (extremum(&u, &omega, dir, &mut mvn_rng)?, Some(to_vec(&u)))
                }
            };
            Computed {
                outcome,
                kind: StatKind::Runs,
                source: MomentSource::Analytic,
                components: counts.values,
                null_mean: to_vec(&moments.mean),
                standardized: u,
                group_totals: None,
                continuity_correction: false,
            }
        }
        Method::Ranks => {
            let path = cache.path(config.path_method)?;
            meta.graph = path.method().name().into();
            let (h, dof) = kw_rank_statistic(path, groups, num_groups)?;
            Computed {
                outcome: TestOutcome {
                    statistic: h,
                    dof: Some(dof),
                    p_value: chi_square_sf(h, dof)?,
                    mc_se: None,
                },
                kind: StatKind::RanksKw,
                source: MomentSource::Analytic,
                components: vec![h],
                null_mean: Vec::new(),
                standardized: None,
                group_totals: None,
                continuity_correction: false,
            }
        }
    };
    Ok(TestReport {
        method,
        statistic_kind: c.kind,
        test_form: form,
        statistic: c.outcome.statistic,
        dof: c.outcome.dof,
        p_value: c.outcome.p_value.clamp(0.0, 1.0),
        mc_se: c.outcome.mc_se,
        moment_source: c.source,
        components: c.components,
        null_mean: c.null_mean,
        standardized: c.standardized,
        continuity_correction: c.continuity_correction,
        group_totals: c.group_totals,
        graph_meta: meta,
        label_mapping: None,
    })
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown method `{s}` (knn, crossmatch, runs, ranks)"
                ))
            })
    }
}

impl std::str::FromStr for TestForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wald" => Ok(TestForm::Wald),
            "max" => Ok(TestForm::Max),
            "min" => Ok(TestForm::Min),
            _ => Err(Error::Config(format!(
                "unknown test form `{s}` (wald, max, min)"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::std_normal_cdf;
    use crate::paths::test_support::random_2d;
    use crate::stats::test_support::arrangements;

    fn dataset(n: usize, seed: u64, sizes: &[usize]) -> Dataset {
        let (pts, _) = random_2d(n, seed);
        let groups = sizes
            .iter()
            .enumerate()
            .flat_map(|(g, &s)| std::iter::repeat_n(g, s))
            .collect();
        Dataset::from_groups(pts, groups).unwrap()
    }

    fn quick() -> BalanceConfig {
        BalanceConfig {
            n_mc: 20_000,
            permutation_draws: 2_000,
            seed: 7,
            ..BalanceConfig::default()
        }
    }

    #[test]
    fn wald_basics() {
        let mu = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let id = DMatrix::identity(3, 3);
        let r = wald_test(&mu, &mu, &id, DofPolicy::Full).unwrap();
        assert_eq!((r.statistic, r.p_value, r.dof), (0.0, 1.0, Some(3)));
        let s = DVector::from_vec(vec![2.0, 2.0, 3.0]);
        let r = wald_test(&s, &mu, &id, DofPolicy::Full).unwrap();
        assert!((r.statistic - 1.0).abs() < 1e-12);
        assert_eq!(
            wald_test(&s, &mu, &id, DofPolicy::MinusOne).unwrap().dof,
            Some(2)
        );
    }

    #[test]
    fn wald_rank_reduction_matches_explicit_projection() {
        // Σ = 2 v vᵀ with v = (1, −1)/√2; along v the statistic is √2·a with variance 2.
        let sigma = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        let a = 1.7;
        let s = DVector::from_vec(vec![a, -a]);
        let r = wald_test(&s, &DVector::zeros(2), &sigma, DofPolicy::Rank).unwrap();
        let reduced = (2f64.sqrt() * a).powi(2) / 2.0;
        assert!((r.statistic - reduced).abs() < 1e-12);
        assert_eq!(r.dof, Some(1));
        let zero = DMatrix::zeros(2, 2);
        assert!(matches!(
            wald_test(&s, &DVector::zeros(2), &zero, DofPolicy::Rank),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn extremum_reference_cases() {
        let mut rng = RandomStream::new(3, 0);
        let u = DVector::from_vec(vec![1.3]);
        let r = extremum_test(
            &u,
            &DMatrix::identity(1, 1),
            Direction::Max,
            50_000,
            &mut rng,
        )
        .unwrap();
        assert!((r.p_value - (1.0 - std_normal_cdf(1.3))).abs() < 3.0 * r.mc_se.unwrap());

        let u = DVector::from_vec(vec![0.2, 1.9, -0.4]);
        let r = extremum_test(
            &u,
            &DMatrix::identity(3, 3),
            Direction::Max,
            50_000,
            &mut rng,
        )
        .unwrap();
        assert_eq!(r.statistic, 1.9);
        let exact = 1.0 - std_normal_cdf(1.9).powi(3);
        assert!((r.p_value - exact).abs() < 3.0 * r.mc_se.unwrap());

        let omega = DMatrix::from_row_slice(2, 2, &[1.0, 0.4, 0.4, 1.0]);
        let hi = extremum_test(
            &DVector::from_vec(vec![1.1, 0.3]),
            &omega,
            Direction::Max,
            50_000,
            &mut rng,
        )
        .unwrap();
        let lo = extremum_test(
            &DVector::from_vec(vec![-1.1, -0.3]),
            &omega,
            Direction::Min,
            50_000,
            &mut rng,
        )
        .unwrap();
        let se = (hi.mc_se.unwrap().powi(2) + lo.mc_se.unwrap().powi(2)).sqrt();
        assert!((hi.p_value - lo.p_value).abs() < 3.0 * se);
    }

    #[test]
    fn reports_are_deterministic() {
        let ds = dataset(60, 1, &[20, 20, 20]);
        for method in Method::ALL {
            let form = method.default_form();
            let a = balance_test(&ds, method, form, &quick()).unwrap();
            let b = balance_test(&ds, method, form, &quick()).unwrap();
            assert_eq!(a, b, "{method:?}");
            assert!((0.0..=1.0).contains(&a.p_value));
            assert_eq!(a.dof.is_some(), form == TestForm::Wald);
        }
    }

    #[test]
    fn configuration_errors() {
        let ds = dataset(20, 1, &[20]);
        assert!(matches!(
            balance_test(&ds, Method::Knn, TestForm::Wald, &quick()),
            Err(Error::Config(_))
        ));
        let ds = dataset(20, 1, &[10, 10]);
        assert!(matches!(
            balance_test(&ds, Method::Ranks, TestForm::Max, &quick()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn statistics_invariant_to_common_scaling() {
        let ds = dataset(45, 4, &[15, 15, 15]);
        let scaled = ds.with_covariates(ds.covariates().scaled(37.5)).unwrap();
        for method in Method::ALL {
            let a = balance_test(&ds, method, TestForm::Wald, &quick()).unwrap();
            let b = balance_test(&scaled, method, TestForm::Wald, &quick()).unwrap();
            assert_eq!(a.components, b.components, "{method:?}");
            assert!((a.statistic - b.statistic).abs() < 1e-9 * a.statistic.max(1.0));
        }
    }

    #[test]
    fn knn_wald_invariant_to_relabeling() {
        let ds = dataset(45, 5, &[10, 15, 20]);
        let perm = [2usize, 0, 1];
        let relabeled: Vec<usize> = ds.groups().iter().map(|&g| perm[g]).collect();
        let other = Dataset::from_groups(ds.covariates().clone(), relabeled).unwrap();
        let a = balance_test(&ds, Method::Knn, TestForm::Wald, &quick()).unwrap();
        let b = balance_test(&other, Method::Knn, TestForm::Wald, &quick()).unwrap();
        assert!((a.statistic - b.statistic).abs() < 1e-9);
    }

    /// Share of labelings with p ≤ cutoff may exceed the cutoff by at most the
    /// largest single p-value atom at or below it.
    fn assert_calibrated(ps: &[f64], what: &str) {
        for cutoff in [0.05, 0.10] {
            let share = ps.iter().filter(|&&p| p <= cutoff).count() as f64 / ps.len() as f64;
            let mut atoms: HashMap<u64, usize> = HashMap::new();
            for &p in ps.iter().filter(|&&p| p <= cutoff) {
                *atoms.entry(p.to_bits()).or_default() += 1;
            }
            let atom = atoms.values().copied().max().unwrap_or(0) as f64 / ps.len() as f64;
            assert!(
                share <= cutoff + atom,
                "{what} cutoff {cutoff}: share {share}, atom {atom}"
            );
        }
    }

    #[test]
    fn exhaustive_null_calibration_of_path_tests() {
        for (sizes, seed) in [
            (vec![3usize, 3, 4], 0u64),
            (vec![4, 4, 4], 1),
            (vec![4, 5, 5], 2),
            (vec![5, 5], 3),
        ] {
            let n: usize = sizes.iter().sum();
            let g = sizes.len();
            let (pts, d) = random_2d(n, seed);
            let path = build_path(&pts, &d, PathMethod::GreedyEdge).unwrap();
            let moments = run_moments(n, &sizes).unwrap();
            let mut runs = Vec::new();
            let mut ranks = Vec::new();
            for z in arrangements(&sizes) {
                let r = run_counts(&path, &z, g).unwrap();
                runs.push(
                    wald_test(
                        &r.as_dvector(),
                        &moments.mean,
                        &moments.covariance,
                        DofPolicy::Rank,
                    )
                    .unwrap()
                    .p_value,
                );
                let (h, dof) = kw_rank_statistic(&path, &z, g).unwrap();
                ranks.push(chi_square_sf(h, dof).unwrap());
            }
            assert_calibrated(&runs, &format!("runs {sizes:?}"));
            assert_calibrated(&ranks, &format!("ranks {sizes:?}"));
        }
    }
}
