use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{input_err, Error, Result};

/// Eigenvalues below this fraction of the largest are treated as zero.
pub const DEFAULT_PINV_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct PinvSolution {
    pub x: DVector<f64>,
    /// Number of eigenvalues kept; equals the dimension when `A` is positive definite.
    pub rank: usize,
}

fn check_symmetric(a: &DMatrix<f64>, tol: f64) -> Result<()> {
    if !a.is_square() {
        return input_err(format!(
            "matrix is {}x{}, expected square",
            a.nrows(),
            a.ncols()
        ));
    }
    let scale = a.amax().max(1.0);
    for i in 0..a.nrows() {
        for j in 0..i {
            if (a[(i, j)] - a[(j, i)]).abs() > tol * scale {
                return input_err(format!("matrix is not symmetric at ({i}, {j})"));
            }
        }
    }
    Ok(())
}

fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Solve `A x = b` for symmetric `A`: Cholesky when `A` is numerically
/// positive definite, otherwise the minimum-norm least-squares solution from
/// the eigendecomposition with small eigenvalues dropped.
pub fn solve_spd_or_pinv(a: &DMatrix<f64>, b: &DVector<f64>, tol: f64) -> Result<PinvSolution> {
    check_symmetric(a, tol)?;
    if b.len() != a.nrows() {
        return input_err(format!(
            "rhs has length {}, matrix is {}x{}",
            b.len(),
            a.nrows(),
            a.ncols()
        ));
    }
    let n = a.nrows();
    let a = symmetrize(a);
    let eig = SymmetricEigen::new(a.clone());
    let lmax = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if !(lmax > 0.0) {
        return Ok(PinvSolution {
            x: DVector::zeros(n),
            rank: 0,
        });
    }
    let cutoff = tol * lmax;
    let rank = eig.eigenvalues.iter().filter(|&&l| l > cutoff).count();
    if rank == n {
        if let Some(chol) = a.clone().cholesky() {
            return Ok(PinvSolution {
                x: chol.solve(b),
                rank,
            });
        }
    }
    let mut x = DVector::zeros(n);
    for (idx, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda > cutoff {
            let v = eig.eigenvectors.column(idx);
            x += v * (v.dot(b) / lambda);
        }
    }
    Ok(PinvSolution { x, rank })
}

/// Square factor `F` with `F Fᵀ = A` for symmetric positive semi-definite `A`.
///
/// Lower-triangular Cholesky when it exists; otherwise `V diag(√max(λ, 0))`
/// from the eigendecomposition.
pub fn psd_factor(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_symmetric(a, 1e-8)?;
    let a = symmetrize(a);
    if let Some(chol) = a.clone().cholesky() {
        return Ok(chol.l());
    }
    let eig = SymmetricEigen::new(a);
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&roots))
}

/// Correlation matrix of a covariance matrix; fails on a zero variance.
pub fn correlation_from_covariance(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = cov.nrows();
    let sd: Vec<f64> = (0..n).map(|i| cov[(i, i)].max(0.0).sqrt()).collect();
    if let Some(i) = sd.iter().position(|&s| !(s > 0.0)) {
        return Err(Error::Degenerate(format!(
            "component {} has zero null variance",
            i + 1
        )));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else {
            cov[(i, j)] / (sd[i] * sd[j])
        }
    }))
}
