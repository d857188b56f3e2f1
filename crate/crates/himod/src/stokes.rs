//! HiMod discretization of the Stokes equations in strain-rate form,
//!
//!   a(u, v) = ∫ ν(∇u + ∇uᵀ):∇v,   b(u, q) = ∫ (∇·u) q,
//!   F(v) = ∫ f·v + C_in ∫_{in} v_x + C_out ∫_{out} v_x,
//!
//! with no-slip walls built into Dirichlet-educated modes and u_y = 0 on the in/outflow
//! fibers imposed by elimination. μ = [ν, C_in, C_out, f_x, f_y].

use nalgebra::DMatrix;

use crate::affine::{constraint_mask, eliminate, AffineSystem, AffineTerm, LoadTerm, ParameterDomain, Theta};
use crate::bases::BoundaryTag;
use crate::error::{Error, Result};
use crate::geometry::{DomainMap, QuadratureGrid, DEFAULT_AXIAL_ORDER, DEFAULT_TRANSVERSE_ORDER};
use crate::linalg::{gen_sym_eig, CsrMatrix, TripletBuilder};
use crate::par::{self, Execution};
use crate::space::{HiModSpace, InnerProductMatrix, NormTag};

/// Velocity (P2 axial, Dirichlet modes, two components) and pressure (P1 axial, free modes).
#[derive(Clone, Debug)]
pub struct StokesSpace {
    velocity: HiModSpace,
    pressure: HiModSpace,
    constrained: Vec<usize>,
}

impl StokesSpace {
    /// Enforces the pairing m_u = m_p + 2.
    pub fn new(map: DomainMap, elements: usize, m_u: usize, m_p: usize) -> Result<Self> {
        if m_u != m_p + 2 {
            return Err(Error::Config(format!("velocity/pressure modes must satisfy m_u = m_p + 2 (got {m_u}, {m_p})")));
        }
        Self::new_unchecked(map, elements, m_u, m_p)
    }

    /// Any pairing, for studying unstable choices.
    pub fn new_unchecked(map: DomainMap, elements: usize, m_u: usize, m_p: usize) -> Result<Self> {
        let quad = QuadratureGrid::new(map.length(), elements, DEFAULT_AXIAL_ORDER, DEFAULT_TRANSVERSE_ORDER)?;
        Self::with_quadrature(map, quad, m_u, m_p)
    }

    pub fn with_quadrature(map: DomainMap, quad: QuadratureGrid, m_u: usize, m_p: usize) -> Result<Self> {
        let velocity = HiModSpace::new(map.clone(), quad.clone(), 2, BoundaryTag::Dirichlet, m_u)?;
        let pressure = HiModSpace::new(map, quad, 1, BoundaryTag::Free, m_p)?;
        let nv = velocity.dim();
        let last = velocity.fem().outflow_dof();
        let mut constrained: Vec<usize> = (0..m_u)
            .flat_map(|k| [nv + velocity.index(k, 0), nv + velocity.index(k, last)])
            .collect();
        constrained.sort_unstable();
        Ok(StokesSpace { velocity, pressure, constrained })
    }

    /// Scalar space shared by both velocity components.
    pub fn velocity(&self) -> &HiModSpace {
        &self.velocity
    }

    pub fn pressure(&self) -> &HiModSpace {
        &self.pressure
    }

    /// d·m_u·N_{h,u}; component c occupies `[c·n, (c+1)·n)` with n the scalar dim.
    pub fn velocity_dim(&self) -> usize {
        2 * self.velocity.dim()
    }

    pub fn pressure_dim(&self) -> usize {
        self.pressure.dim()
    }

    /// u_y DOFs on the inflow and outflow fibers.
    pub fn constrained_velocity(&self) -> &[usize] {
        &self.constrained
    }

    /// Velocity inner product: the scalar Gram matrix on each component, identity on
    /// eliminated DOFs.
    pub fn velocity_inner_product(&self, tag: NormTag) -> Result<InnerProductMatrix> {
        if tag == NormTag::Identity {
            return Ok(InnerProductMatrix::identity(self.velocity_dim()));
        }
        let n = self.velocity_dim();
        let mut t = TripletBuilder::new(n, n);
        self.velocity.gram_triplets(tag, 0, &mut t);
        self.velocity.gram_triplets(tag, self.velocity.dim(), &mut t);
        InnerProductMatrix::from_triplets(t, tag, &self.constrained)
    }

    pub fn pressure_inner_product(&self) -> Result<InnerProductMatrix> {
        InnerProductMatrix::assemble(&self.pressure, NormTag::L2)
    }

    /// (x, y, u_x, u_y, p) samples at physical points.
    pub fn evaluate(&self, u: &[f64], p: &[f64], points: &[(f64, f64)]) -> Result<Vec<[f64; 5]>> {
        let n = self.velocity.dim();
        let ux = self.velocity.evaluate_field(&u[..n], points)?;
        let uy = self.velocity.evaluate_field(&u[n..], points)?;
        let pv = self.pressure.evaluate_field(p, points)?;
        Ok(points.iter().enumerate().map(|(i, &(x, y))| [x, y, ux[i], uy[i], pv[i]]).collect())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StokesProblemSpec {
    pub viscosity: Theta,
    pub c_in: Theta,
    pub c_out: Theta,
    pub force_x: Theta,
    pub force_y: Theta,
    pub n_params: usize,
}

impl StokesProblemSpec {
    pub fn benchmark() -> Self {
        StokesProblemSpec {
            viscosity: Theta::Param(0),
            c_in: Theta::Param(1),
            c_out: Theta::Param(2),
            force_x: Theta::Param(3),
            force_y: Theta::Param(4),
            n_params: 5,
        }
    }

    pub fn validate_domain(&self, domain: &ParameterDomain) -> Result<()> {
        if domain.dim() != self.n_params {
            return Err(Error::Dimension(format!("domain has {} slots, problem {}", domain.dim(), self.n_params)));
        }
        if !(self.viscosity.range(domain).0 > 0.0) {
            return Err(Error::Config("viscosity must be positive over the parameter domain".into()));
        }
        Ok(())
    }

    fn check(&self) -> Result<()> {
        for t in [self.viscosity, self.c_in, self.c_out, self.force_x, self.force_y] {
            if t.slot().is_some_and(|s| s >= self.n_params) {
                return Err(Error::Dimension(format!("coefficient {t:?} outside μ of length {}", self.n_params)));
            }
        }
        Ok(())
    }
}

/// The saddle system [νA₁ Bᵀ; B 0] in affine form, plus its velocity-only pieces.
#[derive(Clone, Debug)]
pub struct SaddleAffineSystem {
    full: AffineSystem,
    velocity_ops: Vec<AffineTerm>,
    velocity_loads: Vec<LoadTerm>,
    divergence: CsrMatrix,
    n_u: usize,
    n_p: usize,
}

impl SaddleAffineSystem {
    /// The monolithic system on [u; p].
    pub fn full(&self) -> &AffineSystem {
        &self.full
    }

    /// Velocity blocks A_q (constrained rows/columns removed).
    pub fn velocity_operators(&self) -> &[AffineTerm] {
        &self.velocity_ops
    }

    pub fn velocity_loads(&self) -> &[LoadTerm] {
        &self.velocity_loads
    }

    /// B, n_p × n_u, with constrained velocity columns removed.
    pub fn divergence(&self) -> &CsrMatrix {
        &self.divergence
    }

    pub fn velocity_dim(&self) -> usize {
        self.n_u
    }

    pub fn pressure_dim(&self) -> usize {
        self.n_p
    }

    pub fn n_params(&self) -> usize {
        self.full.n_params()
    }

    pub fn constrained_velocity(&self) -> &[usize] {
        self.full.constrained()
    }

    pub fn velocity_rhs(&self, mu: &[f64]) -> Result<Vec<f64>> {
        self.full.check_mu(mu)?;
        let mut f = vec![0.0; self.n_u];
        for t in &self.velocity_loads {
            crate::linalg::axpy(t.theta.eval(mu), &t.vector, &mut f);
        }
        Ok(f)
    }

    pub fn solve(&self, mu: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut w = self.full.solve(mu)?;
        let p = w.split_off(self.n_u);
        Ok((w, p))
    }
}

/// Local strain-rate block for component pair (test d, trial c).
fn strain_block(space: &HiModSpace, e: usize, out: &mut [Vec<f64>; 4]) {
    let n = space.fem().n_local() * space.n_modes();
    for b in out.iter_mut() {
        b.clear();
        b.resize(n * n, 0.0);
    }
    let mut basis = Vec::new();
    for qx in 0..space.n_axial_nodes() {
        for qy in 0..space.n_transverse_nodes() {
            let node = *space.node(e, qx, qy);
            space.local_basis(&node, qx, qy, &mut basis);
            for (r, t) in basis.iter().enumerate() {
                let gt = [t.dx, t.dy];
                for (c, s) in basis.iter().enumerate() {
                    let gs = [s.dx, s.dy];
                    let lap = gs[0] * gt[0] + gs[1] * gt[1];
                    for d in 0..2 {
                        for cc in 0..2 {
                            let v = if d == cc { lap } else { 0.0 } + gs[d] * gt[cc];
                            out[2 * d + cc][r * n + c] += node.weight * v;
                        }
                    }
                }
            }
        }
    }
}

/// Triplets of A₁ (strain-rate, unit viscosity) and B on the velocity/pressure spaces.
fn stokes_blocks(space: &StokesSpace) -> (TripletBuilder, TripletBuilder) {
    let vel = &space.velocity;
    let pre = &space.pressure;
    let nv = vel.dim();
    let mut a = TripletBuilder::new(2 * nv, 2 * nv);
    let mut b = TripletBuilder::new(pre.dim(), 2 * nv);
    let mut local: [Vec<f64>; 4] = Default::default();
    let (mut vb, mut pb) = (Vec::new(), Vec::new());
    for e in 0..vel.fem().elements() {
        strain_block(vel, e, &mut local);
        let vidx = vel.local_indices(e);
        let n = vidx.len();
        for d in 0..2 {
            for c in 0..2 {
                let blk = &local[2 * d + c];
                for (r, &gi) in vidx.iter().enumerate() {
                    for (s, &gj) in vidx.iter().enumerate() {
                        let v = blk[r * n + s];
                        if v != 0.0 {
                            a.push(d * nv + gi, c * nv + gj, v);
                        }
                    }
                }
            }
        }
        let pidx = pre.local_indices(e);
        let mut lb = vec![0.0; pidx.len() * 2 * n];
        for qx in 0..vel.n_axial_nodes() {
            for qy in 0..vel.n_transverse_nodes() {
                let node = *vel.node(e, qx, qy);
                vel.local_basis(&node, qx, qy, &mut vb);
                pre.local_basis(&node, qx, qy, &mut pb);
                for (i, q) in pb.iter().enumerate() {
                    for (s, v) in vb.iter().enumerate() {
                        lb[i * 2 * n + s] += node.weight * v.dx * q.v;
                        lb[i * 2 * n + n + s] += node.weight * v.dy * q.v;
                    }
                }
            }
        }
        for (i, &gi) in pidx.iter().enumerate() {
            for c in 0..2 {
                for (s, &gj) in vidx.iter().enumerate() {
                    let v = lb[i * 2 * n + c * n + s];
                    if v != 0.0 {
                        b.push(gi, c * nv + gj, v);
                    }
                }
            }
        }
    }
    (a, b)
}

/// [f_x-load, f_y-load, inflow-load, outflow-load] on the velocity space.
fn stokes_loads(space: &StokesSpace) -> [Vec<f64>; 4] {
    let vel = &space.velocity;
    let nv = vel.dim();
    let mut fx = vec![0.0; 2 * nv];
    let mut fy = vec![0.0; 2 * nv];
    let mut b = Vec::new();
    for e in 0..vel.fem().elements() {
        let idx = vel.local_indices(e);
        for qx in 0..vel.n_axial_nodes() {
            for qy in 0..vel.n_transverse_nodes() {
                let node = *vel.node(e, qx, qy);
                vel.local_basis(&node, qx, qy, &mut b);
                for (r, bi) in b.iter().enumerate() {
                    fx[idx[r]] += node.weight * bi.v;
                    fy[nv + idx[r]] += node.weight * bi.v;
                }
            }
        }
    }
    let fiber = |x: f64, i: usize| {
        let mut f = vec![0.0; 2 * nv];
        let jac = vel.map().jacobian(x);
        for k in 0..vel.n_modes() {
            let s: f64 = (0..vel.n_transverse_nodes())
                .map(|q| vel.quad().transverse_weights()[q] * vel.modes().value(k, q))
                .sum();
            f[vel.index(k, i)] = jac * s;
        }
        f
    };
    // C n·v with C = −C_in and n = −e_x on the inflow gives +C_in v_x.
    let fin = fiber(0.0, 0);
    let fout = fiber(vel.map().length(), vel.fem().outflow_dof());
    [fx, fy, fin, fout]
}

pub fn assemble_stokes(space: &StokesSpace, spec: &StokesProblemSpec) -> Result<SaddleAffineSystem> {
    spec.check()?;
    let n_u = space.velocity_dim();
    let n_p = space.pressure_dim();
    let n = n_u + n_p;
    let (a1, b) = stokes_blocks(space);
    let mut full_a = TripletBuilder::new(n, n);
    let a1_csr = a1.build();
    for (i, j, v) in a1_csr.iter() {
        full_a.push(i, j, v);
    }
    let b_csr = b.build();
    let mut full_b = TripletBuilder::new(n, n);
    for (i, j, v) in b_csr.iter() {
        full_b.push(n_u + i, j, v);
        full_b.push(j, n_u + i, v);
    }
    let [fx, fy, fin, fout] = stokes_loads(space);
    let pad = |mut v: Vec<f64>| {
        v.resize(n, 0.0);
        v
    };
    let loads = vec![
        (spec.force_x, fx, "force_x".to_string()),
        (spec.force_y, fy, "force_y".to_string()),
        (spec.c_in, fin, "inflow".to_string()),
        (spec.c_out, fout, "outflow".to_string()),
    ];
    let constrained = space.constrained_velocity().to_vec();
    let full = AffineSystem::new(
        n,
        spec.n_params,
        vec![
            (spec.viscosity, full_a, "strain".to_string()),
            (Theta::Const(1.0), full_b, "divergence".to_string()),
        ],
        loads.iter().map(|(t, v, l)| (*t, pad(v.clone()), l.clone())).collect(),
        constrained.clone(),
    )?;
    let mask = constraint_mask(n_u, &constrained);
    let mut a_vel = TripletBuilder::new(n_u, n_u);
    for (i, j, v) in a1_csr.iter() {
        a_vel.push(i, j, v);
    }
    eliminate(&mut a_vel, &mask);
    let velocity_ops = vec![AffineTerm { theta: spec.viscosity, matrix: a_vel.build(), label: "strain".into() }];
    let mut bt = TripletBuilder::new(n_p, n_u);
    for (i, j, v) in b_csr.iter() {
        if !mask[j] {
            bt.push(i, j, v);
        }
    }
    let velocity_loads = loads
        .into_iter()
        .map(|(theta, mut vector, label)| {
            for &c in &constrained {
                vector[c] = 0.0;
            }
            LoadTerm { theta, vector, label }
        })
        .collect();
    Ok(SaddleAffineSystem { full, velocity_ops, velocity_loads, divergence: bt.build(), n_u, n_p })
}

/// The full saddle matrix at μ assembled with ν folded in, bypassing the affine split.
pub fn assemble_stokes_at(space: &StokesSpace, spec: &StokesProblemSpec, mu: &[f64]) -> Result<CsrMatrix> {
    spec.check()?;
    let nu = spec.viscosity.eval(mu);
    let n_u = space.velocity_dim();
    let n = n_u + space.pressure_dim();
    let (a1, b) = stokes_blocks(space);
    let mask = constraint_mask(n, space.constrained_velocity());
    let mut t = TripletBuilder::new(n, n);
    for (i, j, v) in a1.build().iter() {
        if !mask[i] && !mask[j] {
            t.push(i, j, nu * v);
        }
    }
    for (i, j, v) in b.build().iter() {
        if !mask[j] {
            t.push(n_u + i, j, v);
            t.push(j, n_u + i, v);
        }
    }
    for &c in space.constrained_velocity() {
        t.push(c, c, 1.0);
    }
    Ok(t.build())
}

/// s = X_u⁻¹ Bᵀ p, the velocity field realizing the supremum of b(·, p)/‖·‖_X.
pub fn solve_supremizer(xu: &InnerProductMatrix, b: &CsrMatrix, p: &[f64]) -> Result<Vec<f64>> {
    if p.len() != b.n_rows() || xu.dim() != b.n_cols() {
        return Err(Error::Dimension(format!(
            "supremizer: B is {}x{}, p has {}, X_u has {}",
            b.n_rows(),
            b.n_cols(),
            p.len(),
            xu.dim()
        )));
    }
    Ok(xu.solve(&b.tr_mul_vec(p)))
}

/// β from the smallest eigenvalue of S q = λ M q, S = B X⁻¹ Bᵀ (already formed).
fn beta_from_schur(s: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<f64> {
    let (values, _) = gen_sym_eig(s, m)?;
    let lmin = values[0];
    let lmax = values[values.len() - 1].abs().max(f64::MIN_POSITIVE);
    if lmin < -1e-10 * lmax.max(1.0) {
        return Err(Error::Formulation(format!("negative inf-sup eigenvalue {lmin:e}")));
    }
    Ok(lmin.max(0.0).sqrt())
}

/// HiMod inf-sup constant via the pressure Schur form B X_u⁻¹ Bᵀ q = λ X_p q.
pub fn infsup_himod(
    sys: &SaddleAffineSystem,
    xu: &InnerProductMatrix,
    xp: &InnerProductMatrix,
    exec: Execution,
) -> Result<f64> {
    let b = sys.divergence();
    let (n_p, n_u) = (b.n_rows(), b.n_cols());
    if xu.dim() != n_u || xp.dim() != n_p {
        return Err(Error::Dimension("inner products do not match the saddle blocks".into()));
    }
    let columns = par::map_indexed(exec, n_p, |j| {
        let mut e = vec![0.0; n_p];
        e[j] = 1.0;
        let z = xu.solve(&b.tr_mul_vec(&e));
        b.mul_vec(&z)
    });
    let mut s = DMatrix::zeros(n_p, n_p);
    for (j, col) in columns.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            s[(i, j)] = *v;
        }
    }
    let s = (&s + s.transpose()) * 0.5;
    beta_from_schur(&s, &xp.matrix().to_dense())
}

/// Reduced inf-sup constant from B_N (N_p × N_v) and the reduced inner products.
pub fn infsup_reduced(b_n: &DMatrix<f64>, xu_n: &DMatrix<f64>, xp_n: &DMatrix<f64>) -> Result<f64> {
    if b_n.ncols() != xu_n.nrows() || b_n.nrows() != xp_n.nrows() {
        return Err(Error::Dimension(format!(
            "reduced blocks: B {:?}, X_u {:?}, X_p {:?}",
            b_n.shape(),
            xu_n.shape(),
            xp_n.shape()
        )));
    }
    let chol = nalgebra::Cholesky::new(xu_n.clone())
        .ok_or_else(|| Error::Eigen("reduced velocity inner product is not positive definite".into()))?;
    let z = chol.solve(&b_n.transpose());
    let s = b_n * z;
    let s = (&s + s.transpose()) * 0.5;
    beta_from_schur(&s, xp_n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairing_enforced() {
        let map = DomainMap::identity(1.0).unwrap();
        assert!(matches!(StokesSpace::new(map.clone(), 4, 3, 3), Err(Error::Config(_))));
        let s = StokesSpace::new(map, 4, 3, 1).unwrap();
        assert_eq!(s.velocity_dim(), 2 * 3 * 9);
        assert_eq!(s.pressure_dim(), 5);
        assert_eq!(s.constrained_velocity().len(), 6);
    }

    #[test]
    fn zero_data_zero_solution() {
        let map = DomainMap::identity(1.0).unwrap();
        let s = StokesSpace::new(map, 4, 4, 2).unwrap();
        let sys = assemble_stokes(&s, &StokesProblemSpec::benchmark()).unwrap();
        let (u, p) = sys.solve(&[1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(u.iter().chain(&p).all(|v| v.abs() <= 1e-10));
    }
}
