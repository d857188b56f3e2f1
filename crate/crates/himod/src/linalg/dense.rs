//! Dense kernels for small problems: correlation matrices, reduced systems, inf-sup pencils.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

fn check_symmetric(a: &DMatrix<f64>, what: &str) -> Result<()> {
    if !a.is_square() {
        return Err(Error::Dimension(format!("{what} is {}x{}, expected square", a.nrows(), a.ncols())));
    }
    let scale = max_abs(a).max(f64::MIN_POSITIVE);
    let asym = (a - a.transpose()).iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if asym > 1e-10 * scale {
        return Err(Error::Eigen(format!("{what} is not symmetric (asymmetry {:e})", asym / scale)));
    }
    Ok(())
}

/// Eigenpairs of a symmetric matrix, eigenvalues ascending, eigenvectors orthonormal.
pub fn sym_eig(a: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    check_symmetric(a, "matrix")?;
    let n = a.nrows();
    if n == 0 {
        return Ok((DVector::zeros(0), DMatrix::zeros(0, 0)));
    }
    let sym = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 1000 * n.max(10))
        .ok_or_else(|| Error::Eigen(format!("symmetric QR iteration did not converge (n = {n})")))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (new, &old) in order.iter().enumerate() {
        vectors.set_column(new, &eig.eigenvectors.column(old));
    }
    Ok((values, vectors))
}

/// Solves A v = λ M v via M = LLᵀ. Eigenvalues ascending; eigenvectors M-orthonormal.
pub fn gen_sym_eig(a: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    check_symmetric(a, "A")?;
    check_symmetric(m, "M")?;
    if a.shape() != m.shape() {
        return Err(Error::Dimension(format!("A is {:?} but M is {:?}", a.shape(), m.shape())));
    }
    let chol = Cholesky::new((m + m.transpose()) * 0.5)
        .ok_or_else(|| Error::Eigen("M is not positive definite".into()))?;
    let l = chol.l();
    let w = l
        .solve_lower_triangular(a)
        .ok_or_else(|| Error::Eigen("triangular solve failed".into()))?;
    let c = l
        .solve_lower_triangular(&w.transpose())
        .ok_or_else(|| Error::Eigen("triangular solve failed".into()))?;
    let (values, y) = sym_eig(&((&c + c.transpose()) * 0.5))?;
    let vectors = l
        .transpose()
        .solve_upper_triangular(&y)
        .ok_or_else(|| Error::Eigen("triangular solve failed".into()))?;
    Ok((values, vectors))
}

/// Dense LU solve with a conditioning sanity check, used for reduced systems.
pub fn lu_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    if !a.is_square() || a.nrows() != b.len() {
        return Err(Error::Dimension(format!("system {:?} with rhs of length {}", a.shape(), b.len())));
    }
    if a.nrows() == 0 {
        return Ok(DVector::zeros(0));
    }
    let lu = a.clone().lu();
    let u = lu.u();
    let umax = u.diagonal().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let umin = u.diagonal().iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    if !(umin > umax * 1e3 * f64::EPSILON) {
        return Err(Error::Singular(format!(
            "reduced matrix is numerically singular (pivot ratio {:e})",
            umin / umax
        )));
    }
    lu.solve(b)
        .ok_or_else(|| Error::Singular("reduced LU solve failed".into()))
}
