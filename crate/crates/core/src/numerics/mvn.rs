use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{linalg::psd_factor, RandomStream};
use crate::error::{input_err, Result};

pub const DEFAULT_MC_DRAWS: usize = 100_000;

/// Which tail of the extremum is tested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// P(max_g V_g ≥ t)
    Max,
    /// P(min_g V_g ≤ t)
    Min,
}

/// Monte-Carlo proportion with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub p: f64,
    pub mc_se: f64,
}

/// `mean + F z` with `z` a vector of independent standard normals.
pub fn gaussian_vector(
    rng: &mut RandomStream,
    mean: &[f64],
    factor: &DMatrix<f64>,
) -> Result<Vec<f64>> {
    let d = mean.len();
    if factor.nrows() != d || factor.ncols() != d {
        return input_err(format!(
            "factor is {}x{} for a mean of length {d}",
            factor.nrows(),
            factor.ncols()
        ));
    }
    let z: Vec<f64> = (0..d).map(|_| rng.standard_normal()).collect();
    let mut out = mean.to_vec();
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (j, zj) in z.iter().enumerate() {
            acc += factor[(i, j)] * zj;
        }
        *o += acc;
    }
    Ok(out)
}

/// Tail probability of the extremum of `V ~ N(0, Ω)` by simulation.
pub fn mvn_extremum_sf(
    t: f64,
    omega: &DMatrix<f64>,
    direction: Direction,
    n_mc: usize,
    rng: &mut RandomStream,
) -> Result<McEstimate> {
    if n_mc < 1000 {
        return input_err(format!("n_mc = {n_mc} is below the minimum of 1000"));
    }
    if !omega.is_square() || omega.nrows() == 0 {
        return input_err("correlation matrix must be square and nonempty");
    }
    let g = omega.nrows();
    for i in 0..g {
        if (omega[(i, i)] - 1.0).abs() > 1e-8 {
            return input_err(format!(
                "correlation matrix has diagonal {} at {i}",
                omega[(i, i)]
            ));
        }
    }
    let factor = psd_factor(omega)?;
    let mut z = vec![0.0; g];
    let mut hits = 0usize;
    for _ in 0..n_mc {
        for zi in z.iter_mut() {
            *zi = rng.standard_normal();
        }
        let mut extreme = match direction {
            Direction::Max => f64::NEG_INFINITY,
            Direction::Min => f64::INFINITY,
        };
        for i in 0..g {
            let mut v = 0.0;
            for (j, zj) in z.iter().enumerate() {
                v += factor[(i, j)] * zj;
            }
            extreme = match direction {
                Direction::Max => extreme.max(v),
                Direction::Min => extreme.min(v),
            };
        }
        let hit = match direction {
            Direction::Max => extreme >= t,
            Direction::Min => extreme <= t,
        };
        hits += hit as usize;
    }
    let p = hits as f64 / n_mc as f64;
    Ok(McEstimate {
        p,
        mc_se: (p * (1.0 - p) / n_mc as f64).sqrt(),
    })
}
