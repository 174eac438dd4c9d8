use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scenario::{gen_gaussian_scenario, gen_motivating, ScenarioConfig, ScenarioKind};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::htest::{balance_test_cached, BalanceConfig, GraphCache, Method, TestForm};
use crate::numerics::RandomStream;
use crate::paths::PathMethod;

/// Stream id under a cell seed from which per-replicate test seeds derive.
const TEST_SEED_STREAM: u64 = 0x7E57;

pub const POWER_CSV_HEADER: [&str; 11] = [
    "scenario",
    "kind",
    "delta",
    "d",
    "G",
    "method",
    "form",
    "replicates",
    "rejection_rate",
    "mc_se",
    "seed",
];

/// A test as run inside a power study: method, form, and graph options.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MethodSpec {
    pub method: Method,
    pub form: TestForm,
    /// kNN only; `None` uses the default k for the sample size.
    pub k: Option<usize>,
    /// Runs and ranks only.
    pub path: PathMethod,
}

impl MethodSpec {
    pub fn new(method: Method, form: TestForm) -> Self {
        Self {
            method,
            form,
            k: None,
            path: PathMethod::GreedyEdge,
        }
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = Some(k);
        self
    }

    pub fn with_path(mut self, path: PathMethod) -> Self {
        self.path = path;
        self
    }
}

/// `knn`, `knn:k=15`, `crossmatch`, `runs:hilbert`, `ranks:greedy_edge`, ...
impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.method {
            Method::Knn => match self.k {
                Some(k) => write!(f, "knn:k={k}"),
                None => write!(f, "knn"),
            },
            Method::Crossmatch => write!(f, "crossmatch"),
            Method::Runs | Method::Ranks => {
                write!(f, "{}:{}", self.method.name(), self.path.name())
            }
        }
    }
}

impl FromStr for MethodSpec {
    type Err = Error;

    /// Parses the method label; the form is the method's default.
    fn from_str(s: &str) -> Result<Self> {
        let (head, tail) = match s.split_once(':') {
            Some((h, t)) => (h, Some(t)),
            None => (s, None),
        };
        let method = match head {
            "knn" => Method::Knn,
            "crossmatch" => Method::Crossmatch,
            "runs" => Method::Runs,
            "ranks" => Method::Ranks,
            _ => return Err(Error::Config(format!("unknown method `{head}`"))),
        };
        let mut spec = MethodSpec::new(method, method.default_form());
        match (method, tail) {
            (_, None) => {}
            (Method::Knn, Some(t)) => {
                let k = t
                    .strip_prefix("k=")
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| Error::Config(format!("expected `knn:k=<int>`, got `{s}`")))?;
                spec.k = Some(k);
            }
            (Method::Runs | Method::Ranks, Some(t)) => spec.path = t.parse()?,
            (Method::Crossmatch, Some(_)) => {
                return Err(Error::Config("crossmatch takes no qualifier".into()));
            }
        }
        Ok(spec)
    }
}

/// One named scenario in a power study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerCell {
    pub name: String,
    pub config: ScenarioConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerOptions {
    pub alpha: f64,
    /// Metric, Monte-Carlo sizes, and kNN backend; k, path, and seed are set per test.
    pub balance: BalanceConfig,
}

impl Default for PowerOptions {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            balance: BalanceConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerRow {
    pub scenario: String,
    pub kind: ScenarioKind,
    pub delta: f64,
    pub d: usize,
    pub groups: usize,
    pub method: String,
    pub form: TestForm,
    pub replicates: usize,
    pub rejections: usize,
    pub rejection_rate: f64,
    pub mc_se: f64,
    pub seed: u64,
}

/// A replicate (or a whole cell, when `replicate` is `None`) that produced no test result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerFailure {
    pub scenario: String,
    pub method: Option<String>,
    pub replicate: Option<u64>,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PowerTable {
    pub rows: Vec<PowerRow>,
    pub failures: Vec<PowerFailure>,
}

impl PowerTable {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(POWER_CSV_HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.scenario.clone(),
                r.kind.name().to_string(),
                r.delta.to_string(),
                r.d.to_string(),
                r.groups.to_string(),
                r.method.clone(),
                r.form.name().to_string(),
                r.replicates.to_string(),
                r.rejection_rate.to_string(),
                r.mc_se.to_string(),
                r.seed.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
    }

    pub fn row(&self, scenario: &str, method: &str, form: TestForm) -> Option<&PowerRow> {
        self.rows
            .iter()
            .find(|r| r.scenario == scenario && r.method == method && r.form == form)
    }
}

/// Seed handed to the tests of one replicate.
pub fn replicate_test_seed(cell_seed: u64, replicate: u64) -> u64 {
    RandomStream::new(cell_seed, TEST_SEED_STREAM)
        .substream(replicate)
        .next_u64()
}

/// Draw replicate `replicate` of any scenario kind.
pub fn generate(config: &ScenarioConfig, replicate: u64) -> Result<Dataset> {
    match config.kind {
        ScenarioKind::Motivating => {
            let n = config.group_sizes().iter().sum();
            Ok(gen_motivating(n, replicate, config.seed)?.dataset)
        }
        _ => gen_gaussian_scenario(config, replicate),
    }
}

fn run_replicate(
    config: &ScenarioConfig,
    replicate: u64,
    methods: &[MethodSpec],
    options: &PowerOptions,
) -> Result<Vec<Result<bool>>> {
    let dataset = generate(config, replicate)?;
    let mut cache = GraphCache::new(&dataset, options.balance.metric);
    let seed = replicate_test_seed(config.seed, replicate);
    Ok(methods
        .iter()
        .map(|spec| {
            let balance = BalanceConfig {
                k: spec.k,
                path_method: spec.path,
                seed,
                ..options.balance
            };
            balance_test_cached(&mut cache, spec.method, spec.form, &balance)
                .map(|r| r.p_value <= options.alpha)
        })
        .collect())
}

/// Rejection rates of every test in every cell.
///
/// Replicate r of a cell draws its data from (cell seed, r) only, so cells
/// sharing a seed see common random numbers. A replicate whose data or test
/// fails counts as a non-rejection and is listed in `failures`; an invalid
/// cell contributes no rows.
pub fn power_study(
    cells: &[PowerCell],
    methods: &[MethodSpec],
    options: &PowerOptions,
) -> PowerTable {
    let mut table = PowerTable::default();
    for cell in cells {
        let config = &cell.config;
        if let Err(e) = config.validate() {
            table.failures.push(PowerFailure {
                scenario: cell.name.clone(),
                method: None,
                replicate: None,
                message: e.to_string(),
            });
            continue;
        }
        let outcomes: Vec<Result<Vec<Result<bool>>>> = (0..config.replicates as u64)
            .into_par_iter()
            .map(|r| run_replicate(config, r, methods, options))
            .collect();
        let mut rejections = vec![0usize; methods.len()];
        for (r, outcome) in outcomes.into_iter().enumerate() {
            match outcome {
                Ok(per_method) => {
                    for (m, res) in per_method.into_iter().enumerate() {
                        match res {
                            Ok(true) => rejections[m] += 1,
                            Ok(false) => {}
                            Err(e) => table.failures.push(PowerFailure {
                                scenario: cell.name.clone(),
                                method: Some(methods[m].to_string()),
                                replicate: Some(r as u64),
                                message: e.to_string(),
                            }),
                        }
                    }
                }
                Err(e) => table.failures.push(PowerFailure {
                    scenario: cell.name.clone(),
                    method: None,
                    replicate: Some(r as u64),
                    message: e.to_string(),
                }),
            }
        }
        let reps = config.replicates;
        let (d, groups) = match config.kind {
            ScenarioKind::Motivating => (2, 3),
            _ => (config.d, config.groups),
        };
        for (spec, &count) in methods.iter().zip(&rejections) {
            let rate = if reps == 0 {
                0.0
            } else {
                count as f64 / reps as f64
            };
            table.rows.push(PowerRow {
                scenario: cell.name.clone(),
                kind: config.kind,
                delta: config.delta,
                d,
                groups,
                method: spec.to_string(),
                form: spec.form,
                replicates: reps,
                rejections: count,
                rejection_rate: rate,
                mc_se: if reps == 0 {
                    0.0
                } else {
                    (rate * (1.0 - rate) / reps as f64).sqrt()
                },
                seed: config.seed,
            });
        }
    }
    table
}

/// √(se_a² + se_b²), the standard error of a difference of two rates.
pub fn pooled_se(a: &PowerRow, b: &PowerRow) -> f64 {
    a.mc_se.hypot(b.mc_se)
}
