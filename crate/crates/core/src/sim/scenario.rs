use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dataset::{Covariates, Dataset};
use crate::error::{Error, Result};
use crate::numerics::{gaussian_vector, RandomStream};

/// Stream id under the scenario seed from which per-replicate data streams derive.
const DATA_STREAM: u64 = 0xDA7A;

/// Maximum redraws when a motivating-example draw leaves a group empty.
pub const MAX_REDRAWS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// μ_g = (g − 1)δ·1, Σ_g = I
    Location,
    /// μ_g = 0, Σ_g = {1 + (g − 1)δ} I
    Scale,
    /// μ_g = 0, Σ_g equicorrelated with ρ_g = (g − 1)δ/(G − 1)
    Correlation,
    /// Three-arm softmax assignment on two standard normal confounders.
    Motivating,
    /// Every group from N(0, I).
    Null,
}

impl ScenarioKind {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::Location => "location",
            ScenarioKind::Scale => "scale",
            ScenarioKind::Correlation => "correlation",
            ScenarioKind::Motivating => "motivating",
            ScenarioKind::Null => "null",
        }
    }
}

impl std::str::FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            ScenarioKind::Location,
            ScenarioKind::Scale,
            ScenarioKind::Correlation,
            ScenarioKind::Motivating,
            ScenarioKind::Null,
        ]
        .into_iter()
        .find(|k| k.name() == s)
        .ok_or_else(|| Error::Config(format!("unknown scenario kind `{s}`")))
    }
}

/// One simulation setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub delta: f64,
    /// Covariate dimension (ignored by the motivating example, which has 2).
    pub d: usize,
    pub groups: usize,
    /// Explicit group sizes; `None` means n_g = 50g. The motivating example
    /// uses only their sum as N (default 150).
    pub sizes: Option<Vec<usize>>,
    pub replicates: usize,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn new(kind: ScenarioKind, delta: f64, d: usize, groups: usize) -> Self {
        Self {
            kind,
            delta,
            d,
            groups,
            sizes: None,
            replicates: 200,
            seed: 0,
        }
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        match (&self.sizes, self.kind) {
            (Some(s), _) => s.clone(),
            (None, ScenarioKind::Motivating) => vec![50; 3],
            (None, _) => (1..=self.groups).map(|g| 50 * g).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == ScenarioKind::Motivating {
            let n: usize = self.group_sizes().iter().sum();
            if n < 3 {
                return Err(Error::Config(format!(
                    "motivating example needs N ≥ 3, got {n}"
                )));
            }
            return Ok(());
        }
        let sizes = self.group_sizes();
        if sizes.len() != self.groups {
            return Err(Error::Config(format!(
                "{} sizes for {} groups",
                sizes.len(),
                self.groups
            )));
        }
        if self.groups < 1 || sizes.iter().any(|&s| s < 2) {
            return Err(Error::Config("every group needs at least 2 units".into()));
        }
        if self.d == 0 {
            return Err(Error::Config("dimension must be positive".into()));
        }
        if !self.delta.is_finite() {
            return Err(Error::Config("delta must be finite".into()));
        }
        match self.kind {
            ScenarioKind::Correlation if !(0.0..1.0).contains(&self.delta) => {
                Err(Error::Config(format!(
                    "correlation change needs 0 ≤ δ < 1 so every Σ_g is positive definite, got {}",
                    self.delta
                )))
            }
            ScenarioKind::Scale if 1.0 + (self.groups as f64 - 1.0) * self.delta <= 0.0 => {
                Err(Error::Config(format!(
                    "scale change with δ = {} gives a non-positive variance",
                    self.delta
                )))
            }
            _ => Ok(()),
        }
    }
}

/// Data stream of replicate `replicate` under `seed`; independent of the scenario kind.
pub fn replicate_stream(seed: u64, replicate: u64) -> RandomStream {
    RandomStream::new(seed, DATA_STREAM).substream(replicate)
}

fn group_factor(config: &ScenarioConfig, g: usize) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let d = config.d;
    let shift = g as f64 * config.delta;
    let identity = DMatrix::identity(d, d);
    Ok(match config.kind {
        ScenarioKind::Location => (vec![shift; d], identity),
        ScenarioKind::Scale => (vec![0.0; d], identity * (1.0 + shift).sqrt()),
        ScenarioKind::Correlation => {
            let rho = if config.groups > 1 {
                shift / (config.groups as f64 - 1.0)
            } else {
                0.0
            };
            let sigma = DMatrix::from_fn(d, d, |i, j| if i == j { 1.0 } else { rho });
            let chol = sigma.cholesky().ok_or_else(|| {
                Error::Config(format!(
                    "Σ_{} with ρ = {rho} is not positive definite",
                    g + 1
                ))
            })?;
            (vec![0.0; d], chol.l())
        }
        ScenarioKind::Null | ScenarioKind::Motivating => (vec![0.0; d], identity),
    })
}

/// Draw replicate `replicate` of a Gaussian scenario; units are ordered by group.
pub fn gen_gaussian_scenario(config: &ScenarioConfig, replicate: u64) -> Result<Dataset> {
    if config.kind == ScenarioKind::Motivating {
        return Err(Error::Config(
            "use gen_motivating for the motivating example".into(),
        ));
    }
    config.validate()?;
    let sizes = config.group_sizes();
    let mut rng = replicate_stream(config.seed, replicate);
    let n: usize = sizes.iter().sum();
    let mut values = Vec::with_capacity(n * config.d);
    let mut groups = Vec::with_capacity(n);
    for (g, &size) in sizes.iter().enumerate() {
        let (mean, factor) = group_factor(config, g)?;
        for _ in 0..size {
            values.extend(gaussian_vector(&mut rng, &mean, &factor)?);
            groups.push(g);
        }
    }
    Dataset::from_groups(Covariates::new(values, n, config.d)?, groups)
}

/// Softmax assignment probabilities of the three arms at (x1, x2).
pub fn motivating_probabilities(x1: f64, x2: f64) -> [f64; 3] {
    let eta = [
        0.1 * x1 - 0.1 * x2 - x1 * x2,
        -0.2 * x1 + 0.2 * x2 + 0.5 * x1 * x1,
        -0.1 * x1 + 0.2 * x2 - 2.0 * x1 * x2,
    ];
    let top = eta.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let w = eta.map(|e| (e - top).exp());
    let total: f64 = w.iter().sum();
    w.map(|v| v / total)
}

/// A motivating-example draw together with the number of discarded draws.
#[derive(Debug, Clone)]
pub struct MotivatingDraw {
    pub dataset: Dataset,
    pub redraws: usize,
}

/// N units with X₁, X₂ iid N(0, 1) and a softmax-assigned arm; redrawn while
/// some arm is empty.
pub fn gen_motivating(n: usize, replicate: u64, seed: u64) -> Result<MotivatingDraw> {
    if n < 3 {
        return Err(Error::Config(format!(
            "motivating example needs N ≥ 3, got {n}"
        )));
    }
    let mut rng = replicate_stream(seed, replicate);
    for redraws in 0..=MAX_REDRAWS {
        let mut values = Vec::with_capacity(2 * n);
        let mut groups = Vec::with_capacity(n);
        for _ in 0..n {
            let x1 = rng.standard_normal();
            let x2 = rng.standard_normal();
            let p = motivating_probabilities(x1, x2);
            let u = rng.uniform();
            let arm = if u < p[0] {
                0
            } else if u < p[0] + p[1] {
                1
            } else {
                2
            };
            values.extend([x1, x2]);
            groups.push(arm);
        }
        if (0..3).all(|g| groups.contains(&g)) {
            let dataset = Dataset::from_groups(Covariates::new(values, n, 2)?, groups)?;
            return Ok(MotivatingDraw { dataset, redraws });
        }
    }
    Err(Error::Degenerate(format!(
        "an arm stayed empty after {MAX_REDRAWS} redraws at N = {n}"
    )))
}
