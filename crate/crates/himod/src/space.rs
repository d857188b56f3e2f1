//! Scalar HiMod spaces V_m = span{θ_i(x) φ_k(ψ_x(y))} and the inner-product matrices on them.

use crate::affine::{constraint_mask, eliminate};
use crate::bases::{BoundaryTag, Fem1DSpace, ModalBasis};
use crate::error::{Error, Result};
use crate::geometry::{DomainMap, QuadratureGrid};
use crate::linalg::{dot, CsrMatrix, SparseLu, TripletBuilder};

/// Geometric data at one tensor quadrature node.
#[derive(Clone, Copy, Debug)]
pub struct NodeGeom {
    pub x: f64,
    pub y_hat: f64,
    /// Quadrature weight times the fiber Jacobian: the physical area element.
    pub weight: f64,
    pub dpsi_dx: f64,
    pub dpsi_dy: f64,
}

/// Value and physical gradient of one basis function at one node.
#[derive(Clone, Copy, Debug, Default)]
pub struct BasisEval {
    pub v: f64,
    pub dx: f64,
    pub dy: f64,
}

#[derive(Clone, Debug)]
pub struct HiModSpace {
    map: DomainMap,
    quad: QuadratureGrid,
    fem: Fem1DSpace,
    modes: ModalBasis,
    /// Indexed `[e][qx][qy]`, flattened.
    geom: Vec<NodeGeom>,
}

impl HiModSpace {
    pub fn new(map: DomainMap, quad: QuadratureGrid, degree: usize, tag: BoundaryTag, m: usize) -> Result<Self> {
        let fem = Fem1DSpace::new(map.length(), quad.elements(), degree, &quad)?;
        let modes = ModalBasis::educated(tag, m, &quad)?;
        Self::from_parts(map, quad, fem, modes)
    }

    pub fn from_parts(map: DomainMap, quad: QuadratureGrid, fem: Fem1DSpace, modes: ModalBasis) -> Result<Self> {
        if (map.length() - quad.length()).abs() > 1e-14 * map.length() {
            return Err(Error::Config("map and quadrature disagree on the axial length".into()));
        }
        if modes.nodes() != quad.transverse_nodes() {
            return Err(Error::Config("modal basis tabulated on a different transverse rule".into()));
        }
        map.check_on(&quad)?;
        let mut geom = Vec::with_capacity(quad.elements() * quad.axial_reference_nodes().len() * quad.transverse_nodes().len());
        for e in 0..quad.elements() {
            for (x, wx) in quad.axial_points(e) {
                for (&yh, &wy) in quad.transverse_nodes().iter().zip(quad.transverse_weights()) {
                    let p = map.eval(x, yh)?;
                    geom.push(NodeGeom { x, y_hat: yh, weight: wx * wy * p.jacobian, dpsi_dx: p.dpsi_dx, dpsi_dy: p.dpsi_dy });
                }
            }
        }
        Ok(HiModSpace { map, quad, fem, modes, geom })
    }

    pub fn map(&self) -> &DomainMap {
        &self.map
    }

    pub fn quad(&self) -> &QuadratureGrid {
        &self.quad
    }

    pub fn fem(&self) -> &Fem1DSpace {
        &self.fem
    }

    pub fn modes(&self) -> &ModalBasis {
        &self.modes
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn n_axial(&self) -> usize {
        self.fem.n_dofs()
    }

    pub fn dim(&self) -> usize {
        self.modes.len() * self.fem.n_dofs()
    }

    /// Mode-major index of coefficient ũ_{k,i}.
    pub fn index(&self, k: usize, i: usize) -> usize {
        k * self.fem.n_dofs() + i
    }

    pub fn n_axial_nodes(&self) -> usize {
        self.quad.axial_reference_nodes().len()
    }

    pub fn n_transverse_nodes(&self) -> usize {
        self.quad.transverse_nodes().len()
    }

    pub fn node(&self, e: usize, qx: usize, qy: usize) -> &NodeGeom {
        let (nx, ny) = (self.n_axial_nodes(), self.n_transverse_nodes());
        &self.geom[(e * nx + qx) * ny + qy]
    }

    /// θ_a φ_k and its physical gradient at node (qx, qy) of any element.
    pub fn basis(&self, node: &NodeGeom, qx: usize, qy: usize, a: usize, k: usize) -> BasisEval {
        let (t, dt) = (self.fem.value(qx, a), self.fem.deriv(qx, a));
        let (p, dp) = (self.modes.value(k, qy), self.modes.deriv(k, qy));
        BasisEval { v: t * p, dx: dt * p + t * dp * node.dpsi_dx, dy: t * dp * node.dpsi_dy }
    }

    /// All local basis functions on one element at (qx, qy), ordered `[a * m + k]`.
    pub fn local_basis(&self, node: &NodeGeom, qx: usize, qy: usize, out: &mut Vec<BasisEval>) {
        out.clear();
        for a in 0..self.fem.n_local() {
            for k in 0..self.n_modes() {
                out.push(self.basis(node, qx, qy, a, k));
            }
        }
    }

    /// Global indices matching [`HiModSpace::local_basis`].
    pub fn local_indices(&self, e: usize) -> Vec<usize> {
        let mut idx = Vec::with_capacity(self.fem.n_local() * self.n_modes());
        for a in 0..self.fem.n_local() {
            for k in 0..self.n_modes() {
                idx.push(self.index(k, self.fem.local_dof(e, a)));
            }
        }
        idx
    }

    /// u_m(x, y) = Σ_k Σ_i ũ_{k,i} θ_i(x) φ_k(ψ_x(y)) at physical points.
    pub fn evaluate_field(&self, coeffs: &[f64], points: &[(f64, f64)]) -> Result<Vec<f64>> {
        if coeffs.len() != self.dim() {
            return Err(Error::Dimension(format!("{} coefficients for a space of dim {}", coeffs.len(), self.dim())));
        }
        points
            .iter()
            .map(|&(x, y)| {
                let yh = self.reference_coordinate(x, y)?;
                let (e, th, _) = self.fem.eval_at(x)?;
                let (phi, _) = self.modes.eval_all(yh);
                let mut s = 0.0;
                for (k, pk) in phi.iter().enumerate() {
                    for (a, ta) in th.iter().enumerate() {
                        s += coeffs[self.index(k, self.fem.local_dof(e, a))] * ta * pk;
                    }
                }
                Ok(s)
            })
            .collect()
    }

    fn reference_coordinate(&self, x: f64, y: f64) -> Result<f64> {
        let yh = self.map.to_reference(x, y);
        if !(x >= -1e-12 && x <= self.map.length() + 1e-12) || yh.abs() > 0.5 + 1e-12 {
            return Err(Error::Geometry(format!("point ({x}, {y}) lies outside the domain")));
        }
        Ok(yh.clamp(-0.5, 0.5))
    }

    /// Mass (L2) or mass plus stiffness (H1) triplets of this space, shifted by `offset`.
    pub fn gram_triplets(&self, tag: NormTag, offset: usize, out: &mut TripletBuilder) {
        let idx_len = self.fem.n_local() * self.n_modes();
        let mut local = vec![0.0; idx_len * idx_len];
        let mut b = Vec::new();
        for e in 0..self.fem.elements() {
            local.iter_mut().for_each(|v| *v = 0.0);
            for qx in 0..self.n_axial_nodes() {
                for qy in 0..self.n_transverse_nodes() {
                    let node = *self.node(e, qx, qy);
                    self.local_basis(&node, qx, qy, &mut b);
                    for (r, bi) in b.iter().enumerate() {
                        for (c, bj) in b.iter().enumerate() {
                            let mut v = bi.v * bj.v;
                            if tag == NormTag::H1 {
                                v += bi.dx * bj.dx + bi.dy * bj.dy;
                            }
                            local[r * idx_len + c] += node.weight * v;
                        }
                    }
                }
            }
            let idx = self.local_indices(e);
            for (r, &gi) in idx.iter().enumerate() {
                for (c, &gj) in idx.iter().enumerate() {
                    out.push(offset + gi, offset + gj, local[r * idx_len + c]);
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormTag {
    L2,
    H1,
    /// Euclidean inner product on coefficients.
    Identity,
}

impl NormTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            NormTag::L2 => "L2",
            NormTag::H1 => "H1",
            NormTag::Identity => "identity",
        }
    }
}

/// SPD matrix X defining ‖·‖_X on coefficient vectors, with a cached factorization.
///
/// Constrained DOFs carry an identity block, so X⁻¹r is exact on the unconstrained part
/// whenever r vanishes on constrained entries.
#[derive(Clone, Debug)]
pub struct InnerProductMatrix {
    matrix: CsrMatrix,
    tag: NormTag,
    lu: SparseLu,
}

impl InnerProductMatrix {
    pub fn assemble(space: &HiModSpace, tag: NormTag) -> Result<Self> {
        Self::assemble_constrained(space, tag, &[])
    }

    pub fn assemble_constrained(space: &HiModSpace, tag: NormTag, constrained: &[usize]) -> Result<Self> {
        let mut t = TripletBuilder::new(space.dim(), space.dim());
        if tag == NormTag::Identity {
            return Ok(Self::identity(space.dim()));
        }
        space.gram_triplets(tag, 0, &mut t);
        Self::from_triplets(t, tag, constrained)
    }

    pub fn from_triplets(mut t: TripletBuilder, tag: NormTag, constrained: &[usize]) -> Result<Self> {
        let (n, _) = t.shape();
        let mask = constraint_mask(n, constrained);
        eliminate(&mut t, &mask);
        for &c in constrained {
            t.push(c, c, 1.0);
        }
        Self::from_matrix(t.build(), tag)
    }

    pub fn from_matrix(matrix: CsrMatrix, tag: NormTag) -> Result<Self> {
        let asym = matrix.relative_asymmetry();
        if asym > 1e-12 {
            return Err(Error::Dimension(format!("inner-product matrix asymmetric ({asym:e})")));
        }
        let lu = SparseLu::factor(&matrix)?;
        Ok(InnerProductMatrix { matrix, tag, lu })
    }

    pub fn identity(n: usize) -> Self {
        let matrix = CsrMatrix::identity(n);
        let lu = SparseLu::factor(&matrix).expect("identity factorizes");
        InnerProductMatrix { matrix, tag: NormTag::Identity, lu }
    }

    pub fn tag(&self) -> NormTag {
        self.tag
    }

    pub fn dim(&self) -> usize {
        self.matrix.n_rows()
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        self.matrix.mul_vec(u)
    }

    pub fn dot(&self, u: &[f64], v: &[f64]) -> f64 {
        self.matrix.bilinear(u, v)
    }

    pub fn norm(&self, u: &[f64]) -> f64 {
        self.dot(u, u).max(0.0).sqrt()
    }

    pub fn distance(&self, u: &[f64], v: &[f64]) -> f64 {
        let d: Vec<f64> = u.iter().zip(v).map(|(a, b)| a - b).collect();
        self.norm(&d)
    }

    /// Riesz representer z = X⁻¹ r.
    pub fn solve(&self, r: &[f64]) -> Vec<f64> {
        self.lu.solve(r)
    }

    /// ‖r‖_{X'} = sqrt(rᵀ X⁻¹ r).
    pub fn dual_norm(&self, r: &[f64]) -> f64 {
        dot(r, &self.solve(r)).max(0.0).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_space(m: usize, tag: BoundaryTag, n_el: usize) -> HiModSpace {
        let map = DomainMap::identity(1.0).unwrap();
        let quad = QuadratureGrid::new(1.0, n_el, 4, 16).unwrap();
        HiModSpace::new(map, quad, 1, tag, m).unwrap()
    }

    #[test]
    fn single_mode_mass_is_tridiagonal() {
        let s = identity_space(1, BoundaryTag::Free, 5);
        let x = InnerProductMatrix::assemble(&s, NormTag::L2).unwrap();
        let h = 0.2;
        for i in 1..5 {
            assert!((x.matrix().get(i, i) - 4.0 * h / 6.0).abs() < 1e-14);
            assert!((x.matrix().get(i, i - 1) - h / 6.0).abs() < 1e-14);
        }
        assert!((x.matrix().get(0, 0) - 2.0 * h / 6.0).abs() < 1e-14);
    }

    #[test]
    fn field_of_single_term() {
        let s = identity_space(3, BoundaryTag::Dirichlet, 4);
        let mut c = vec![0.0; s.dim()];
        for i in 0..s.n_axial() {
            c[s.index(0, i)] = 2.5;
        }
        let v = s.evaluate_field(&c, &[(0.3, 0.1), (0.9, -0.45)]).unwrap();
        for (val, y) in v.iter().zip([0.1, -0.45]) {
            let exact = 2.5 * s.modes().eval(0, y).0;
            assert!((val - exact).abs() <= 1e-12 * exact.abs());
        }
        assert!(s.evaluate_field(&c, &[(0.3, 0.7)]).is_err());
        assert!(s.evaluate_field(&vec![0.0; s.dim()], &[(0.5, 0.0)]).unwrap()[0] == 0.0);
    }

    #[test]
    fn h1_norm_of_linear_function() {
        // u = x on the unit square: ∫1 + ∫x² = 1 + 1/3.
        let s = identity_space(2, BoundaryTag::Free, 6);
        let mut c = vec![0.0; s.dim()];
        let nodal = s.fem().interpolate(|x| x);
        for (i, v) in nodal.iter().enumerate() {
            c[s.index(0, i)] = *v;
        }
        let x = InnerProductMatrix::assemble(&s, NormTag::H1).unwrap();
        let n2 = x.dot(&c, &c);
        assert!((n2 - 4.0 / 3.0).abs() <= 1e-8 * 4.0 / 3.0, "{n2}");
    }
}
