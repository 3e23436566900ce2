//! Thin linear-algebra facade over nalgebra so tolerances live in one place.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Relative tolerance used for symmetry and positive-definiteness checks.
pub const SPD_TOL: f64 = 1e-10;

pub fn is_symmetric(a: &Matrix, tol: f64) -> bool {
    if !a.is_square() {
        return false;
    }
    let scale = a.amax().max(1.0);
    (0..a.nrows()).all(|i| (0..i).all(|j| (a[(i, j)] - a[(j, i)]).abs() <= tol * scale))
}

/// Checks symmetry and strict positive definiteness.
pub fn check_spd(a: &Matrix, what: &str) -> Result<()> {
    if !is_symmetric(a, SPD_TOL) {
        return Err(Error::Parameter(format!("{what} is not symmetric")));
    }
    let eig = sym_eigenvalues(a);
    let scale = eig.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    if eig.iter().any(|&v| v <= SPD_TOL * scale) {
        return Err(Error::Singular(format!("{what} is not positive definite")));
    }
    Ok(())
}

pub fn cholesky(a: &Matrix) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    a.clone()
        .cholesky()
        .ok_or_else(|| Error::Singular("Cholesky factorisation failed".into()))
}

pub fn spd_inverse(a: &Matrix) -> Result<Matrix> {
    Ok(cholesky(a)?.inverse())
}

pub fn log_det_spd(a: &Matrix) -> Result<f64> {
    let l = cholesky(a)?;
    Ok(2.0 * l.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>())
}

/// Solves `a x = b` by LU with a relative pivot check.
pub fn solve(a: &Matrix, b: &Vector) -> Result<Vector> {
    if a.nrows() != b.len() {
        return Err(Error::Dimension(format!("{}x{} vs {}", a.nrows(), a.ncols(), b.len())));
    }
    let lu = a.clone().lu();
    let u = lu.u();
    let scale = a.amax().max(f64::MIN_POSITIVE);
    if u.diagonal().iter().any(|d| d.abs() <= 1e-13 * scale) {
        return Err(Error::Singular("matrix is numerically singular".into()));
    }
    lu.solve(b).ok_or_else(|| Error::Singular("LU solve failed".into()))
}

pub fn det(a: &Matrix) -> f64 {
    a.clone().determinant()
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn sym_eigenvalues(a: &Matrix) -> Vec<f64> {
    let mut v: Vec<f64> = a.clone().symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(|x, y| x.total_cmp(y));
    v
}

/// Gram matrix X'X, rejecting rank-deficient designs.
pub fn gram_full_rank(x: &Matrix) -> Result<Matrix> {
    if x.nrows() < x.ncols() {
        return Err(Error::Singular(format!(
            "design has {} rows for {} columns",
            x.nrows(),
            x.ncols()
        )));
    }
    let g = x.transpose() * x;
    let eig = sym_eigenvalues(&g);
    let top = eig.last().copied().unwrap_or(0.0);
    if eig.first().copied().unwrap_or(0.0) <= 1e-12 * top.max(f64::MIN_POSITIVE) {
        return Err(Error::Singular("design matrix is rank deficient".into()));
    }
    Ok(g)
}

/// Roots of c₀ + c₁u + … + c_p u^p from the eigenvalues of its companion matrix.
/// Trailing zero coefficients are dropped.
pub fn poly_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let mut c = coeffs.to_vec();
    while c.len() > 1 && *c.last().unwrap() == 0.0 {
        c.pop();
    }
    let p = c.len() - 1;
    if p == 0 {
        return Vec::new();
    }
    let lead = c[p];
    let mut comp = Matrix::zeros(p, p);
    for i in 1..p {
        comp[(i, i - 1)] = 1.0;
    }
    for i in 0..p {
        comp[(i, p - 1)] = -c[i] / lead;
    }
    comp.complex_eigenvalues().iter().copied().collect()
}
