//! Covariate matrices, group bookkeeping, and pairwise distances.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{input_err, Error, Result};

/// Dense row-major N×d matrix of covariates.
#[derive(Debug, Clone, PartialEq)]
pub struct Covariates {
    values: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl Covariates {
    pub fn new(values: Vec<f64>, rows: usize, cols: usize) -> Result<Self> {
        if cols == 0 {
            return input_err("covariate matrix needs at least one column");
        }
        if values.len() != rows * cols {
            return input_err(format!(
                "expected {rows}x{cols} = {} values, got {}",
                rows * cols,
                values.len()
            ));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return input_err(format!(
                "non-finite covariate at row {}, column {}",
                pos / cols,
                pos % cols
            ));
        }
        Ok(Self { values, rows, cols })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return input_err(format!("row {i} has {} columns, expected {cols}", r.len()));
            }
            values.extend_from_slice(r);
        }
        Self::new(values, rows.len(), cols)
    }

    /// Single-column matrix, handy for 1D examples.
    pub fn from_column(column: &[f64]) -> Result<Self> {
        Self::new(column.to_vec(), column.len(), 1)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + Clone + '_ {
        self.values.iter().skip(j).step_by(self.cols).copied()
    }

    /// Multiply every entry by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * factor).collect(),
            rows: self.rows,
            cols: self.cols,
        }
    }

    /// Divide each column by its sample standard deviation.
    ///
    /// `names` labels columns in the zero-variance error; indices are used otherwise.
    pub fn standardized(&self, names: Option<&[String]>) -> Result<Self> {
        let mut scale = Vec::with_capacity(self.cols);
        for j in 0..self.cols {
            let sd = sample_sd(self.column(j));
            if !(sd > 0.0) {
                let column = names
                    .and_then(|n| n.get(j).cloned())
                    .unwrap_or_else(|| j.to_string());
                return Err(Error::ZeroVariance { column });
            }
            scale.push(sd);
        }
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(idx, v)| v / scale[idx % self.cols])
            .collect();
        Ok(Self {
            values,
            rows: self.rows,
            cols: self.cols,
        })
    }

    /// Keep the listed rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut values = Vec::with_capacity(rows.len() * self.cols);
        for &r in rows {
            values.extend_from_slice(self.row(r));
        }
        Self {
            values,
            rows: rows.len(),
            cols: self.cols,
        }
    }
}

/// Sample standard deviation (n − 1 denominator); 0 for fewer than two values.
pub(crate) fn sample_sd(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let (n, sum) = values
        .clone()
        .fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
    if n < 2 {
        return 0.0;
    }
    let mean = sum / n as f64;
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    (ss / (n - 1) as f64).sqrt()
}

/// Squared euclidean distance, summed in coordinate order.
///
/// Every graph builder goes through this function so that kd-tree and
/// brute-force searches see bit-identical distances.
#[inline]
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        acc += d * d;
    }
    acc
}

/// Covariates plus group membership.
///
/// Groups are stored 0-based (`0..G`); external labels are 1-based.
#[derive(Debug, Clone)]
pub struct Dataset {
    covariates: Covariates,
    groups: Vec<usize>,
    group_sizes: Vec<usize>,
}

impl Dataset {
    /// Build from 1-based labels in `1..=G`, every group non-empty.
    pub fn new(covariates: Covariates, labels: &[i64]) -> Result<Self> {
        if labels.len() != covariates.rows() {
            return input_err(format!(
                "{} labels for {} rows",
                labels.len(),
                covariates.rows()
            ));
        }
        let (_, group_sizes) = group_summary(labels)?;
        let groups = labels.iter().map(|&l| (l - 1) as usize).collect();
        Ok(Self {
            covariates,
            groups,
            group_sizes,
        })
    }

    /// Build from 0-based group indices.
    pub fn from_groups(covariates: Covariates, groups: Vec<usize>) -> Result<Self> {
        let labels: Vec<i64> = groups.iter().map(|&g| g as i64 + 1).collect();
        Self::new(covariates, &labels)
    }

    pub fn covariates(&self) -> &Covariates {
        &self.covariates
    }

    /// 0-based group index of every unit.
    pub fn groups(&self) -> &[usize] {
        &self.groups
    }

    /// 1-based labels, as they would be written out.
    pub fn labels(&self) -> Vec<i64> {
        self.groups.iter().map(|&g| g as i64 + 1).collect()
    }

    pub fn group_sizes(&self) -> &[usize] {
        &self.group_sizes
    }

    pub fn n(&self) -> usize {
        self.groups.len()
    }

    pub fn num_groups(&self) -> usize {
        self.group_sizes.len()
    }

    pub fn dim(&self) -> usize {
        self.covariates.cols()
    }

    pub fn with_covariates(&self, covariates: Covariates) -> Result<Self> {
        if covariates.rows() != self.n() {
            return input_err("replacement covariates have a different row count");
        }
        Ok(Self {
            covariates,
            groups: self.groups.clone(),
            group_sizes: self.group_sizes.clone(),
        })
    }
}

/// Count groups and their sizes for labels that must cover `1..=G` contiguously.
pub fn group_summary(labels: &[i64]) -> Result<(usize, Vec<usize>)> {
    if labels.is_empty() {
        return Err(Error::Labels("no labels".into()));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l < 1) {
        return Err(Error::Labels(format!("label {bad} is not positive")));
    }
    let g = *labels.iter().max().expect("nonempty") as usize;
    let mut sizes = vec![0usize; g];
    for &l in labels {
        sizes[(l - 1) as usize] += 1;
    }
    if let Some(empty) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::Labels(format!("group {} is empty", empty + 1)));
    }
    Ok((g, sizes))
}

/// Distance used to build graphs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    Euclidean,
    /// Euclidean after dividing each column by its sample standard deviation.
    StandardizedEuclidean,
}

impl Metric {
    /// Coordinates on which plain euclidean distance equals this metric.
    pub fn embed(&self, covariates: &Covariates) -> Result<Covariates> {
        match self {
            Metric::Euclidean => Ok(covariates.clone()),
            Metric::StandardizedEuclidean => covariates.standardized(None),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Metric::Euclidean => "euclidean",
            Metric::StandardizedEuclidean => "standardized_euclidean",
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(Metric::Euclidean),
            "standardized_euclidean" | "standardized" => Ok(Metric::StandardizedEuclidean),
            _ => Err(Error::Config(format!(
                "unknown metric `{s}` (euclidean, standardized_euclidean)"
            ))),
        }
    }
}

/// Symmetric N×N matrix of nonnegative distances with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl DistanceMatrix {
    /// Validate and wrap a row-major N×N matrix.
    pub fn from_entries(n: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != n * n {
            return input_err(format!("expected {} entries for N = {n}", n * n));
        }
        for i in 0..n {
            if entries[i * n + i] != 0.0 {
                return input_err(format!("nonzero diagonal at {i}"));
            }
            for j in 0..n {
                let v = entries[i * n + j];
                if !(v >= 0.0) || !v.is_finite() {
                    return input_err(format!(
                        "entry ({i}, {j}) = {v} is not a finite nonnegative value"
                    ));
                }
                if v != entries[j * n + i] {
                    return input_err(format!("asymmetric at ({i}, {j})"));
                }
            }
        }
        Ok(Self { n, entries })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn max_entry(&self) -> f64 {
        self.entries.iter().copied().fold(0.0, f64::max)
    }
}

/// All pairwise distances between rows under `metric`.
pub fn pairwise_distances(covariates: &Covariates, metric: Metric) -> Result<DistanceMatrix> {
    let n = covariates.rows();
    if n < 2 {
        return input_err("need at least two points");
    }
    let points = metric.embed(covariates)?;
    let mut entries = vec![0.0; n * n];
    entries.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let a = points.row(i);
        for (j, slot) in row.iter_mut().enumerate() {
            if j != i {
                // (a - b)^2 == (b - a)^2 exactly, so both triangles agree.
                *slot = squared_distance(a, points.row(j)).sqrt();
            }
        }
    });
    Ok(DistanceMatrix { n, entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn naive(points: &[Vec<f64>]) -> Vec<f64> {
        let n = points.len();
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let s: f64 = points[i]
                    .iter()
                    .zip(&points[j])
                    .map(|(a, b)| (a - b).powi(2))
                    .sum();
                out[i * n + j] = s.sqrt();
            }
        }
        out
    }

    #[test]
    fn one_dimensional_distance() {
        let x = Covariates::from_column(&[0.0, 3.0]).unwrap();
        let d = pairwise_distances(&x, Metric::Euclidean).unwrap();
        assert_eq!(d.get(0, 1), 3.0);
        assert_eq!(d.get(0, 0), 0.0);
        assert_eq!(d.get(1, 1), 0.0);
    }

    #[test]
    fn matches_double_loop() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<Vec<f64>> = (0..100)
            .map(|_| (0..5).map(|_| rng.random_range(-3.0..3.0)).collect())
            .collect();
        let d =
            pairwise_distances(&Covariates::from_rows(&pts).unwrap(), Metric::Euclidean).unwrap();
        let oracle = naive(&pts);
        for i in 0..100 {
            for j in 0..100 {
                assert!((d.get(i, j) - oracle[i * 100 + j]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn standardized_rejects_constant_column() {
        let x = Covariates::from_rows(&[[1.0, 2.0], [1.0, 3.0], [1.0, 5.0]]).unwrap();
        match pairwise_distances(&x, Metric::StandardizedEuclidean) {
            Err(Error::ZeroVariance { column }) => assert_eq!(column, "0"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn standardized_divides_by_sd() {
        let x = Covariates::from_rows(&[[0.0, 0.0], [2.0, 10.0]]).unwrap();
        let d = pairwise_distances(&x, Metric::StandardizedEuclidean).unwrap();
        // sd of {0,2} is sqrt(2), of {0,10} is sqrt(50): both scaled gaps are sqrt(2).
        assert!((d.get(0, 1) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn summary_examples() {
        assert_eq!(
            group_summary(&[1, 1, 2, 3, 3, 3]).unwrap(),
            (3, vec![2, 1, 3])
        );
        assert_eq!(group_summary(&[1, 1, 1]).unwrap(), (1, vec![3]));
        let err = group_summary(&[1, 3, 3]).unwrap_err();
        assert!(err.to_string().contains("group 2 is empty"), "{err}");
        assert!(group_summary(&[0, 1]).is_err());
        assert!(group_summary(&[]).is_err());
    }

    #[test]
    fn distance_matrix_validation() {
        assert!(DistanceMatrix::from_entries(2, vec![0.0, 1.0, 2.0, 0.0]).is_err());
        assert!(DistanceMatrix::from_entries(2, vec![0.0, -1.0, -1.0, 0.0]).is_err());
        assert!(DistanceMatrix::from_entries(2, vec![0.0, 1.0, 1.0, 0.0]).is_ok());
    }

    proptest! {
        #[test]
        fn triangle_inequality(pts in prop::collection::vec(prop::collection::vec(-100.0f64..100.0, 3), 3..12)) {
            let d = pairwise_distances(&Covariates::from_rows(&pts).unwrap(), Metric::Euclidean).unwrap();
            let n = pts.len();
            for i in 0..n { for j in 0..n { for l in 0..n {
                prop_assert!(d.get(i, l) <= d.get(i, j) + d.get(j, l) + 1e-9);
            }}}
        }

        #[test]
        fn relabeling_permutes_sizes(labels in prop::collection::vec(1i64..5, 8..30), seed in 0u64..1000) {
            let (g, sizes) = match group_summary(&labels) { Ok(v) => v, Err(_) => return Ok(()) };
            use rand::{seq::SliceRandom, SeedableRng};
            let mut perm: Vec<i64> = (1..=g as i64).collect();
            perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let relabeled: Vec<i64> = labels.iter().map(|&l| perm[(l - 1) as usize]).collect();
            let (_, new_sizes) = group_summary(&relabeled).unwrap();
            for old in 0..g {
                prop_assert_eq!(sizes[old], new_sizes[(perm[old] - 1) as usize]);
            }
        }
    }
}
