use serde::{Deserialize, Serialize};

use crate::dataset::{sample_sd, Dataset};
use crate::error::{input_err, Error, Result};
use crate::numerics::f_sf;

/// A scalar function of one unit's covariates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "fn")]
pub enum CovariateFunction {
    Column { j: usize },
    Square { j: usize },
    Product { i: usize, j: usize },
}

impl CovariateFunction {
    /// Identity and square of every column plus all pairwise products.
    pub fn second_order(d: usize) -> Vec<Self> {
        let mut out: Vec<Self> = (0..d).map(|j| CovariateFunction::Column { j }).collect();
        out.extend((0..d).map(|j| CovariateFunction::Square { j }));
        for i in 0..d {
            out.extend((i + 1..d).map(|j| CovariateFunction::Product { i, j }));
        }
        out
    }

    /// 1-based display name, e.g. `X1`, `X1^2`, `X1*X2`.
    pub fn name(&self) -> String {
        match *self {
            CovariateFunction::Column { j } => format!("X{}", j + 1),
            CovariateFunction::Square { j } => format!("X{}^2", j + 1),
            CovariateFunction::Product { i, j } => format!("X{}*X{}", i + 1, j + 1),
        }
    }

    fn max_column(&self) -> usize {
        match *self {
            CovariateFunction::Column { j } | CovariateFunction::Square { j } => j,
            CovariateFunction::Product { i, j } => i.max(j),
        }
    }

    pub fn apply(&self, row: &[f64]) -> f64 {
        match *self {
            CovariateFunction::Column { j } => row[j],
            CovariateFunction::Square { j } => row[j] * row[j],
            CovariateFunction::Product { i, j } => row[i] * row[j],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnivariateBalance {
    /// (1/G) Σ_g |mean_g − mean| / sd, with the overall sample sd.
    pub std_diff: f64,
    pub f_statistic: f64,
    pub f_p_value: f64,
}

#[derive(Debug)]
pub struct DiagnosticRow {
    pub function: CovariateFunction,
    pub outcome: Result<UnivariateBalance>,
}

/// Standardized mean difference and one-way ANOVA F test for each function.
pub fn univariate_diagnostics(
    dataset: &Dataset,
    functions: &[CovariateFunction],
) -> Result<Vec<DiagnosticRow>> {
    if let Some(f) = functions.iter().find(|f| f.max_column() >= dataset.dim()) {
        return input_err(format!(
            "{} refers past the {} covariate columns",
            f.name(),
            dataset.dim()
        ));
    }
    if dataset.num_groups() < 2 || dataset.n() <= dataset.num_groups() {
        return input_err("diagnostics need at least 2 groups and N > G");
    }
    Ok(functions
        .iter()
        .map(|&function| {
            let values: Vec<f64> = (0..dataset.n())
                .map(|i| function.apply(dataset.covariates().row(i)))
                .collect();
            DiagnosticRow {
                function,
                outcome: one_function(&values, dataset.groups(), dataset.group_sizes()),
            }
        })
        .collect())
}

fn one_function(values: &[f64], groups: &[usize], sizes: &[usize]) -> Result<UnivariateBalance> {
    let n = values.len();
    let g = sizes.len();
    let sd = sample_sd(values.iter().copied());
    if !(sd > 0.0) {
        return Err(Error::ZeroVariance {
            column: "transformed covariate".into(),
        });
    }
    let grand = values.iter().sum::<f64>() / n as f64;
    let mut sums = vec![0.0; g];
    for (&v, &z) in values.iter().zip(groups) {
        sums[z] += v;
    }
    let means: Vec<f64> = sums.iter().zip(sizes).map(|(s, &c)| s / c as f64).collect();
    let std_diff = means.iter().map(|m| (m - grand).abs()).sum::<f64>() / (g as f64 * sd);

    let between: f64 = means
        .iter()
        .zip(sizes)
        .map(|(m, &c)| c as f64 * (m - grand).powi(2))
        .sum();
    let within: f64 = values
        .iter()
        .zip(groups)
        .map(|(v, &z)| (v - means[z]).powi(2))
        .sum();
    let (df1, df2) = (g - 1, n - g);
    let f_statistic = if within > 0.0 {
        (between / df1 as f64) / (within / df2 as f64)
    } else {
        f64::INFINITY
    };
    Ok(UnivariateBalance {
        std_diff,
        f_statistic,
        f_p_value: f_sf(f_statistic, df1, df2)?,
    })
}
