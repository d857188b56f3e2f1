//! Transverse modal bases on the reference fiber γ̂ = (−1/2, 1/2).
//!
//! Educated bases are the leading eigenfunctions of −φ″ = λφ with the lateral boundary
//! condition built in. The eigenproblem is discretized with a Legendre Galerkin method, so
//! every mode is a polynomial in t = 2ŷ that can be evaluated (with its derivative) anywhere.

use crate::error::{Error, Result};
use crate::geometry::{GaussRule, QuadratureGrid};
use crate::linalg::gen_sym_eig;
use nalgebra::DMatrix;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoundaryTag {
    /// φ(±1/2) = 0
    Dirichlet,
    /// ν_ref ∂φ/∂n + ρ φ = 0 at ±1/2
    Robin { nu_ref: f64, rho: f64 },
    /// No lateral condition: orthonormal Legendre polynomials.
    Free,
}

/// Highest Legendre degree in the auxiliary eigenproblem.
pub const DEFAULT_RESOLUTION: usize = 64;

#[derive(Clone, Debug)]
pub struct ModalBasis {
    tag: BoundaryTag,
    /// Legendre coefficients (in t = 2ŷ) of each mode.
    coeffs: Vec<Vec<f64>>,
    eigenvalues: Option<Vec<f64>>,
    nodes: Vec<f64>,
    /// `[k][q]` at the transverse quadrature nodes.
    values: Vec<Vec<f64>>,
    derivs: Vec<Vec<f64>>,
    /// φ_k(−1/2), φ_k(1/2)
    boundary: Vec<[f64; 2]>,
}

/// P_0..=P_n and their derivatives at t.
pub(crate) fn legendre_table(n: usize, t: f64) -> (Vec<f64>, Vec<f64>) {
    let mut p = vec![0.0; n + 1];
    let mut d = vec![0.0; n + 1];
    p[0] = 1.0;
    if n >= 1 {
        p[1] = t;
        d[1] = 1.0;
    }
    for j in 1..n {
        let jf = j as f64;
        p[j + 1] = ((2.0 * jf + 1.0) * t * p[j] - jf * p[j - 1]) / (jf + 1.0);
        d[j + 1] = d[j - 1] + (2.0 * jf + 1.0) * p[j];
    }
    (p, d)
}

fn series(coeffs: &[f64], t: f64) -> (f64, f64) {
    let (p, d) = legendre_table(coeffs.len() - 1, t);
    let v = coeffs.iter().zip(&p).map(|(c, x)| c * x).sum();
    let dv = coeffs.iter().zip(&d).map(|(c, x)| c * x).sum::<f64>();
    // d/dŷ = 2 d/dt
    (v, 2.0 * dv)
}

impl ModalBasis {
    pub fn educated(tag: BoundaryTag, m: usize, quad: &QuadratureGrid) -> Result<Self> {
        Self::educated_with_resolution(tag, m, quad, DEFAULT_RESOLUTION)
    }

    pub fn educated_with_resolution(
        tag: BoundaryTag,
        m: usize,
        quad: &QuadratureGrid,
        resolution: usize,
    ) -> Result<Self> {
        if m == 0 {
            return Err(Error::Config("modal basis needs at least one mode".into()));
        }
        let (coeffs, eigenvalues) = match tag {
            BoundaryTag::Free => {
                let coeffs = (0..m)
                    .map(|k| {
                        let mut c = vec![0.0; k + 1];
                        c[k] = ((2 * k + 1) as f64).sqrt();
                        c
                    })
                    .collect();
                (coeffs, None)
            }
            BoundaryTag::Dirichlet | BoundaryTag::Robin { .. } => {
                if let BoundaryTag::Robin { nu_ref, rho } = tag {
                    if !(nu_ref > 0.0) || !(rho >= 0.0) {
                        return Err(Error::Config(format!("Robin data needs ν_ref > 0, ρ ≥ 0 (got {nu_ref}, {rho})")));
                    }
                }
                if 4 * m > resolution {
                    return Err(Error::Config(format!(
                        "{m} modes exceed the auxiliary resolution {resolution} (at most {})",
                        resolution / 4
                    )));
                }
                let (c, l) = sturm_liouville(tag, m, resolution)?;
                (c, Some(l))
            }
        };
        let mut basis = ModalBasis {
            tag,
            coeffs,
            eigenvalues,
            nodes: quad.transverse_nodes().to_vec(),
            values: Vec::new(),
            derivs: Vec::new(),
            boundary: Vec::new(),
        };
        if tag != BoundaryTag::Free {
            basis.fix_signs();
        }
        basis.tabulate();
        Ok(basis)
    }

    fn fix_signs(&mut self) {
        let nodes = self.nodes.clone();
        for c in &mut self.coeffs {
            let scale = nodes.iter().map(|&y| series(c, 2.0 * y).0.abs()).fold(0.0, f64::max);
            let first = nodes
                .iter()
                .map(|&y| series(c, 2.0 * y).0)
                .find(|v| v.abs() > 1e-8 * scale)
                .unwrap_or(1.0);
            if first < 0.0 {
                c.iter_mut().for_each(|x| *x = -*x);
            }
        }
    }

    fn tabulate(&mut self) {
        self.values.clear();
        self.derivs.clear();
        self.boundary.clear();
        for c in &self.coeffs {
            let (v, d): (Vec<f64>, Vec<f64>) = self.nodes.iter().map(|&y| series(c, 2.0 * y)).unzip();
            self.values.push(v);
            self.derivs.push(d);
            self.boundary.push([series(c, -1.0).0, series(c, 1.0).0]);
        }
    }

    pub fn tag(&self) -> BoundaryTag {
        self.tag
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn eigenvalues(&self) -> Option<&[f64]> {
        self.eigenvalues.as_deref()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// φ_k at transverse node q.
    pub fn value(&self, k: usize, q: usize) -> f64 {
        self.values[k][q]
    }

    pub fn deriv(&self, k: usize, q: usize) -> f64 {
        self.derivs[k][q]
    }

    /// (φ_k(−1/2), φ_k(1/2))
    pub fn boundary_values(&self, k: usize) -> [f64; 2] {
        self.boundary[k]
    }

    /// (φ_k(ŷ), φ_k′(ŷ)) anywhere on γ̂.
    pub fn eval(&self, k: usize, y_hat: f64) -> (f64, f64) {
        series(&self.coeffs[k], 2.0 * y_hat)
    }

    /// Values and derivatives of all modes at ŷ.
    pub fn eval_all(&self, y_hat: f64) -> (Vec<f64>, Vec<f64>) {
        let n = self.coeffs.iter().map(Vec::len).max().unwrap_or(1) - 1;
        let (p, d) = legendre_table(n, 2.0 * y_hat);
        let v = self.coeffs.iter().map(|c| c.iter().zip(&p).map(|(a, b)| a * b).sum()).collect();
        let dv = self
            .coeffs
            .iter()
            .map(|c| 2.0 * c.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>())
            .collect();
        (v, dv)
    }

    /// Largest |∫ φ_j φ_k − δ_jk| under the tabulated quadrature with weights `w`.
    pub fn orthonormality_defect(&self, weights: &[f64]) -> f64 {
        let mut worst = 0.0_f64;
        for j in 0..self.len() {
            for k in 0..self.len() {
                let s: f64 = (0..weights.len()).map(|q| weights[q] * self.values[j][q] * self.values[k][q]).sum();
                worst = worst.max((s - if j == k { 1.0 } else { 0.0 }).abs());
            }
        }
        worst
    }

    /// Worst lateral boundary-condition residual over modes, relative to each mode's max |φ_k|.
    pub fn boundary_residual(&self) -> f64 {
        let mut worst = 0.0_f64;
        for c in &self.coeffs {
            let (lo, dlo) = series(c, -1.0);
            let (hi, dhi) = series(c, 1.0);
            let scale = self.nodes.iter().map(|&y| series(c, 2.0 * y).0.abs()).fold(0.0, f64::max);
            let r = match self.tag {
                BoundaryTag::Dirichlet => lo.abs().max(hi.abs()),
                BoundaryTag::Robin { nu_ref, rho } => {
                    (nu_ref * dhi + rho * hi).abs().max((-nu_ref * dlo + rho * lo).abs()) / scale
                }
                BoundaryTag::Free => 0.0,
            };
            worst = worst.max(r);
        }
        worst
    }
}

/// Leading m eigenpairs of −φ″ = λφ on γ̂, as Legendre coefficient vectors of degree ≤ n.
fn sturm_liouville(tag: BoundaryTag, m: usize, n: usize) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    // Stiffness and mass in the raw Legendre basis P_0..P_n (in ŷ).
    let rule = GaussRule::new(n + 2)?;
    let mut k_raw = DMatrix::<f64>::zeros(n + 1, n + 1);
    for (&t, &w) in rule.nodes().iter().zip(rule.weights()) {
        let (_, d) = legendre_table(n, t);
        for i in 0..=n {
            for j in 0..=n {
                // ∫ (2P_i′)(2P_j′) dŷ with dŷ = dt/2
                k_raw[(i, j)] += 2.0 * w * d[i] * d[j];
            }
        }
    }
    let m_raw = DMatrix::from_fn(n + 1, n + 1, |i, j| if i == j { 1.0 / (2 * i + 1) as f64 } else { 0.0 });
    if let BoundaryTag::Robin { nu_ref, rho } = tag {
        let r = rho / nu_ref;
        for i in 0..=n {
            for j in 0..=n {
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                k_raw[(i, j)] += r * (1.0 + sign);
            }
        }
    }
    // Columns of `t` express the Galerkin trial functions in the raw basis.
    let t = match tag {
        BoundaryTag::Dirichlet => DMatrix::from_fn(n + 1, n - 1, |i, j| {
            if i == j {
                1.0
            } else if i == j + 2 {
                -1.0
            } else {
                0.0
            }
        }),
        _ => DMatrix::identity(n + 1, n + 1),
    };
    let k = t.transpose() * &k_raw * &t;
    let mass = t.transpose() * &m_raw * &t;
    let (values, vectors) = gen_sym_eig(&k, &mass).map_err(|e| Error::Basis(e.to_string()))?;
    if values.len() < m {
        return Err(Error::Basis(format!("only {} eigenpairs available, {m} requested", values.len())));
    }
    for k in 1..m {
        if !(values[k] > values[k - 1]) {
            return Err(Error::Basis(format!("eigenvalues not strictly increasing at {k}: {:?}", &values.as_slice()[..=k])));
        }
    }
    let coeffs = (0..m).map(|k| (&t * vectors.column(k)).iter().copied().collect()).collect();
    Ok((coeffs, values.iter().take(m).copied().collect()))
}
