//! Uniform 1D Lagrange spaces along the supporting fiber.

use crate::error::{Error, Result};
use crate::geometry::QuadratureGrid;

#[derive(Clone, Debug)]
pub struct Fem1DSpace {
    length: f64,
    elements: usize,
    degree: usize,
    /// Shape values and physical derivatives at the axial reference nodes, `[q][a]`.
    values: Vec<Vec<f64>>,
    derivs: Vec<Vec<f64>>,
}

fn shape(degree: usize, s: f64) -> ([f64; 3], [f64; 3]) {
    match degree {
        1 => ([1.0 - s, s, 0.0], [-1.0, 1.0, 0.0]),
        2 => (
            [(1.0 - s) * (1.0 - 2.0 * s), 4.0 * s * (1.0 - s), s * (2.0 * s - 1.0)],
            [4.0 * s - 3.0, 4.0 - 8.0 * s, 4.0 * s - 1.0],
        ),
        _ => unreachable!("degree validated at construction"),
    }
}

impl Fem1DSpace {
    pub fn new(length: f64, elements: usize, degree: usize, quad: &QuadratureGrid) -> Result<Self> {
        if elements == 0 {
            return Err(Error::Config("axial mesh needs at least one element".into()));
        }
        if !(degree == 1 || degree == 2) {
            return Err(Error::Config(format!("axial degree must be 1 or 2, got {degree}")));
        }
        if quad.elements() != elements || (quad.length() - length).abs() > 1e-14 * length {
            return Err(Error::Config("quadrature grid does not match the axial mesh".into()));
        }
        let h = length / elements as f64;
        let (mut values, mut derivs) = (Vec::new(), Vec::new());
        for &s in quad.axial_reference_nodes() {
            let (v, d) = shape(degree, s);
            values.push(v[..=degree].to_vec());
            derivs.push(d[..=degree].iter().map(|x| x / h).collect());
        }
        Ok(Fem1DSpace { length, elements, degree, values, derivs })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn elements(&self) -> usize {
        self.elements
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn n_dofs(&self) -> usize {
        self.elements * self.degree + 1
    }

    pub fn n_local(&self) -> usize {
        self.degree + 1
    }

    pub fn element_width(&self) -> f64 {
        self.length / self.elements as f64
    }

    /// Global index of local function `a` on element `e` (left vertex, [midpoint,] right vertex).
    pub fn local_dof(&self, e: usize, a: usize) -> usize {
        e * self.degree + a
    }

    /// θ_a at axial reference node `q` (identical on every element of the uniform mesh).
    pub fn value(&self, q: usize, a: usize) -> f64 {
        self.values[q][a]
    }

    pub fn deriv(&self, q: usize, a: usize) -> f64 {
        self.derivs[q][a]
    }

    pub fn inflow_dof(&self) -> usize {
        0
    }

    pub fn outflow_dof(&self) -> usize {
        self.n_dofs() - 1
    }

    pub fn dof_coordinate(&self, i: usize) -> f64 {
        self.length * i as f64 / (self.n_dofs() - 1) as f64
    }

    /// Element containing x, with local shape values and physical derivatives at x.
    pub fn eval_at(&self, x: f64) -> Result<(usize, Vec<f64>, Vec<f64>)> {
        let tol = 1e-12 * self.length;
        if !(x >= -tol && x <= self.length + tol) {
            return Err(Error::Geometry(format!("x = {x} outside (0, {})", self.length)));
        }
        let h = self.element_width();
        let e = ((x / h).floor().max(0.0) as usize).min(self.elements - 1);
        let s = (x - e as f64 * h) / h;
        let (v, d) = shape(self.degree, s);
        Ok((e, v[..=self.degree].to_vec(), d[..=self.degree].iter().map(|t| t / h).collect()))
    }

    /// Local shape values and physical derivatives of element `e` at x (x may lie on either end).
    pub fn eval_on(&self, e: usize, x: f64) -> (Vec<f64>, Vec<f64>) {
        let h = self.element_width();
        let s = (x - e as f64 * h) / h;
        let (v, d) = shape(self.degree, s);
        (v[..=self.degree].to_vec(), d[..=self.degree].iter().map(|t| t / h).collect())
    }

    /// Nodal interpolant coefficients of f.
    pub fn interpolate<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.n_dofs()).map(|i| f(self.dof_coordinate(i))).collect()
    }
}
