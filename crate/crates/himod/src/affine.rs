//! Affine-in-μ operators: A(μ) = Σ θ_q(μ) A_q and f(μ) = Σ θ_q(μ) f_q.

use crate::error::{Error, Result};
use crate::linalg::{relative_residual, CsrMatrix, Ordering, SparseLu, SparsityPattern, TripletBuilder};
use std::sync::Arc;

/// A scalar coefficient: fixed, or read from a slot of the parameter vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Theta {
    Const(f64),
    Param(usize),
}

impl Theta {
    pub fn eval(&self, mu: &[f64]) -> f64 {
        match *self {
            Theta::Const(c) => c,
            Theta::Param(i) => mu[i],
        }
    }

    pub fn slot(&self) -> Option<usize> {
        match *self {
            Theta::Param(i) => Some(i),
            Theta::Const(_) => None,
        }
    }

    /// Inclusive bounds of θ over a box of parameters.
    pub fn range(&self, domain: &ParameterDomain) -> (f64, f64) {
        match *self {
            Theta::Const(c) => (c, c),
            Theta::Param(i) => domain.intervals()[i],
        }
    }
}

/// A box D = Π [a_i, b_i] of admissible parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterDomain {
    intervals: Vec<(f64, f64)>,
}

impl ParameterDomain {
    pub fn new(intervals: Vec<(f64, f64)>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::Config("parameter domain has no components".into()));
        }
        for (i, &(a, b)) in intervals.iter().enumerate() {
            if !(a.is_finite() && b.is_finite()) || a > b {
                return Err(Error::Config(format!("parameter slot {i} has empty interval [{a}, {b}]")));
            }
        }
        Ok(ParameterDomain { intervals })
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn dim(&self) -> usize {
        self.intervals.len()
    }

    pub fn contains(&self, mu: &[f64]) -> bool {
        mu.len() == self.dim() && mu.iter().zip(&self.intervals).all(|(m, &(a, b))| *m >= a && *m <= b)
    }
}

#[derive(Clone, Debug)]
pub struct AffineTerm {
    pub theta: Theta,
    pub matrix: CsrMatrix,
    pub label: String,
}

#[derive(Clone, Debug)]
pub struct LoadTerm {
    pub theta: Theta,
    pub vector: Vec<f64>,
    pub label: String,
}

/// Parameter-independent blocks with their coefficient maps, plus the list of DOFs fixed
/// to zero by essential conditions.
///
/// Constrained rows and columns are removed from every A_q and f_q; the assembled A(μ)
/// carries an identity on the constrained diagonal so it stays invertible.
#[derive(Clone, Debug)]
pub struct AffineSystem {
    dim: usize,
    n_params: usize,
    operators: Vec<AffineTerm>,
    loads: Vec<LoadTerm>,
    constrained: Vec<usize>,
    constraint_diag: CsrMatrix,
    ordering: Arc<Ordering>,
}

/// Removes rows and columns of constrained DOFs from a triplet list.
pub fn eliminate(builder: &mut TripletBuilder, mask: &[bool]) {
    builder.retain(|i, j| !(mask.get(i).copied().unwrap_or(false) || mask.get(j).copied().unwrap_or(false)));
}

pub(crate) fn constraint_mask(dim: usize, constrained: &[usize]) -> Vec<bool> {
    let mut mask = vec![false; dim];
    for &c in constrained {
        mask[c] = true;
    }
    mask
}

impl AffineSystem {
    pub fn new(
        dim: usize,
        n_params: usize,
        operators: Vec<(Theta, TripletBuilder, String)>,
        loads: Vec<(Theta, Vec<f64>, String)>,
        mut constrained: Vec<usize>,
    ) -> Result<Self> {
        constrained.sort_unstable();
        constrained.dedup();
        if constrained.last().is_some_and(|&c| c >= dim) {
            return Err(Error::Dimension("constrained DOF outside the system".into()));
        }
        for (theta, b, label) in &operators {
            if b.shape() != (dim, dim) {
                return Err(Error::Dimension(format!("block {label} is {:?}, system is {dim}", b.shape())));
            }
            if theta.slot().is_some_and(|s| s >= n_params) {
                return Err(Error::Dimension(format!("block {label} reads slot {theta:?} of {n_params}")));
            }
        }
        for (theta, f, label) in &loads {
            if f.len() != dim {
                return Err(Error::Dimension(format!("load {label} has length {}, system is {dim}", f.len())));
            }
            if theta.slot().is_some_and(|s| s >= n_params) {
                return Err(Error::Dimension(format!("load {label} reads slot {theta:?} of {n_params}")));
            }
        }
        let mask = constraint_mask(dim, &constrained);
        let mut operators = operators;
        for (_, b, _) in &mut operators {
            eliminate(b, &mask);
        }
        let pattern = Arc::new(SparsityPattern::from_entries(
            dim,
            dim,
            operators
                .iter()
                .flat_map(|(_, b, _)| b.positions().collect::<Vec<_>>())
                .chain(constrained.iter().map(|&c| (c, c)))
                // Keep every diagonal so pivoting never meets a structurally empty row.
                .chain((0..dim).map(|i| (i, i))),
        ));
        let mut diag = TripletBuilder::new(dim, dim);
        for &c in &constrained {
            diag.push(c, c, 1.0);
        }
        let constraint_diag = diag.build_on(&pattern);
        let operators = operators
            .into_iter()
            .map(|(theta, b, label)| AffineTerm { theta, matrix: b.build_on(&pattern), label })
            .collect();
        let loads = loads
            .into_iter()
            .map(|(theta, mut vector, label)| {
                for &c in &constrained {
                    vector[c] = 0.0;
                }
                LoadTerm { theta, vector, label }
            })
            .collect();
        let ordering = Arc::new(Ordering::rcm(&pattern));
        Ok(AffineSystem { dim, n_params, operators, loads, constrained, constraint_diag, ordering })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn operators(&self) -> &[AffineTerm] {
        &self.operators
    }

    pub fn loads(&self) -> &[LoadTerm] {
        &self.loads
    }

    pub fn constrained(&self) -> &[usize] {
        &self.constrained
    }

    pub fn check_mu(&self, mu: &[f64]) -> Result<()> {
        if mu.len() != self.n_params {
            return Err(Error::Dimension(format!("μ has {} components, expected {}", mu.len(), self.n_params)));
        }
        if mu.iter().any(|m| !m.is_finite()) {
            return Err(Error::Config(format!("non-finite parameter {mu:?}")));
        }
        Ok(())
    }

    pub fn theta_a(&self, mu: &[f64]) -> Vec<f64> {
        self.operators.iter().map(|t| t.theta.eval(mu)).collect()
    }

    pub fn theta_f(&self, mu: &[f64]) -> Vec<f64> {
        self.loads.iter().map(|t| t.theta.eval(mu)).collect()
    }

    /// A(μ) including the identity on constrained DOFs.
    pub fn matrix(&self, mu: &[f64]) -> Result<CsrMatrix> {
        self.check_mu(mu)?;
        let mut coeffs = self.theta_a(mu);
        coeffs.push(1.0);
        let mut mats: Vec<&CsrMatrix> = self.operators.iter().map(|t| &t.matrix).collect();
        mats.push(&self.constraint_diag);
        Ok(CsrMatrix::linear_combination(&coeffs, &mats))
    }

    pub fn rhs(&self, mu: &[f64]) -> Result<Vec<f64>> {
        self.check_mu(mu)?;
        let mut f = vec![0.0; self.dim];
        for t in &self.loads {
            crate::linalg::axpy(t.theta.eval(mu), &t.vector, &mut f);
        }
        Ok(f)
    }

    pub fn factor(&self, mu: &[f64]) -> Result<SparseLu> {
        let a = self.matrix(mu)?;
        SparseLu::factor_with(&a, &self.ordering).map_err(|e| e.at_mu(mu))
    }

    /// Solves A(μ)u = f(μ), refining once if the relative residual exceeds 1e-10.
    pub fn solve(&self, mu: &[f64]) -> Result<Vec<f64>> {
        let a = self.matrix(mu)?;
        let f = self.rhs(mu)?;
        solve_checked(&a, &f, &self.ordering).map_err(|e| e.at_mu(mu))
    }

    /// A_q x
    pub fn apply(&self, q: usize, x: &[f64]) -> Vec<f64> {
        self.operators[q].matrix.mul_vec(x)
    }
}

/// Direct solve with one step of iterative refinement when ‖Ax − b‖ > 1e-10‖b‖.
pub(crate) fn solve_checked(a: &CsrMatrix, b: &[f64], ordering: &Ordering) -> Result<Vec<f64>> {
    let lu = SparseLu::factor_with(a, ordering)?;
    let bn = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut x = lu.solve(b);
    for _ in 0..2 {
        let ax = a.mul_vec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
        let rn = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rn <= 1e-10 * bn || bn == 0.0 {
            return Ok(x);
        }
        let dx = lu.solve(&r);
        crate::linalg::axpy(1.0, &dx, &mut x);
    }
    let ax = a.mul_vec(&x);
    let rn = b.iter().zip(&ax).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
    if rn <= 1e-10 * bn {
        Ok(x)
    } else {
        Err(Error::Singular(format!(
            "relative residual {:e} after refinement (backward error {:e})",
            rn / bn,
            relative_residual(a, &x, b)
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> AffineSystem {
        // A(μ) = μ0·diag(1,2,3) + 1·offdiag, dof 2 constrained.
        let mut a0 = TripletBuilder::new(3, 3);
        for i in 0..3 {
            a0.push(i, i, (i + 1) as f64);
        }
        let mut a1 = TripletBuilder::new(3, 3);
        a1.push(0, 1, 0.5);
        a1.push(1, 0, 0.5);
        a1.push(1, 2, 7.0);
        AffineSystem::new(
            3,
            1,
            vec![(Theta::Param(0), a0, "d".into()), (Theta::Const(1.0), a1, "o".into())],
            vec![(Theta::Const(2.0), vec![1.0, 1.0, 5.0], "f".into())],
            vec![2],
        )
        .unwrap()
    }

    #[test]
    fn constraints_are_eliminated() {
        let s = tiny();
        let a = s.matrix(&[2.0]).unwrap();
        assert_eq!(a.get(2, 2), 1.0);
        assert_eq!(a.get(1, 2), 0.0);
        let u = s.solve(&[2.0]).unwrap();
        assert_eq!(u[2], 0.0);
        // [[2, .5], [.5, 4]] u = [2, 2]
        let det = 8.0 - 0.25;
        assert!((u[0] - (2.0 * 4.0 - 0.5 * 2.0) / det).abs() < 1e-14);
    }

    #[test]
    fn slot_and_shape_checks() {
        let s = tiny();
        assert!(s.solve(&[1.0, 2.0]).is_err());
        let b = TripletBuilder::new(2, 2);
        assert!(AffineSystem::new(3, 1, vec![(Theta::Const(1.0), b, "x".into())], vec![], vec![]).is_err());
        assert!(ParameterDomain::new(vec![(1.0, 0.0)]).is_err());
        let d = ParameterDomain::new(vec![(5.0, 5.0)]).unwrap();
        assert!(d.contains(&[5.0]));
    }
}
