use nalgebra::{DMatrix, DVector};

use crate::affine::{AffineSystem, Theta};
use crate::error::{Error, Result};
use crate::linalg::{dot, lu_solve, CsrMatrix};
use crate::space::{InnerProductMatrix, NormTag};
use crate::stokes::{infsup_reduced, SaddleAffineSystem};

/// What a set of HiMod vectors represents.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Role {
    State,
    Velocity,
    Pressure,
    Supremizer,
}

impl Role {
    pub fn as_str(&self) -> &'static str {
        match self {
            Role::State => "state",
            Role::Velocity => "velocity",
            Role::Pressure => "pressure",
            Role::Supremizer => "supremizer",
        }
    }

    pub fn parse(s: &str) -> Option<Role> {
        match s {
            "state" => Some(Role::State),
            "velocity" => Some(Role::Velocity),
            "pressure" => Some(Role::Pressure),
            "supremizer" => Some(Role::Supremizer),
            _ => None,
        }
    }
}

/// Remaining X-norm below this fraction of the original rejects a candidate column.
pub const REJECT_TOL: f64 = 1e-10;

/// X-orthonormal columns Φ in HiMod coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedBasis {
    dim: usize,
    columns: Vec<Vec<f64>>,
    norm: NormTag,
    role: Role,
}

impl ReducedBasis {
    pub fn empty(dim: usize, role: Role, norm: NormTag) -> Self {
        ReducedBasis { dim, columns: Vec::new(), norm, role }
    }

    /// Takes columns as given; callers are responsible for orthonormality.
    pub fn from_columns(dim: usize, columns: Vec<Vec<f64>>, role: Role, norm: NormTag) -> Result<Self> {
        if let Some(c) = columns.iter().find(|c| c.len() != dim) {
            return Err(Error::Dimension(format!("basis column of length {}, expected {dim}", c.len())));
        }
        Ok(ReducedBasis { dim, columns, norm, role })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn norm(&self) -> NormTag {
        self.norm
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn column(&self, i: usize) -> &[f64] {
        &self.columns[i]
    }

    /// The first `n` columns.
    pub fn truncate(&self, n: usize) -> ReducedBasis {
        ReducedBasis { columns: self.columns[..n.min(self.len())].to_vec(), ..self.clone() }
    }

    /// Φ c
    pub fn lift(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (c, col) in coeffs.iter().zip(&self.columns) {
            crate::linalg::axpy(*c, col, &mut out);
        }
        out
    }

    /// Φᵀ X v
    pub fn project(&self, x: &InnerProductMatrix, v: &[f64]) -> Vec<f64> {
        let xv = x.apply(v);
        self.columns.iter().map(|c| dot(c, &xv)).collect()
    }

    pub fn gram(&self, x: &InnerProductMatrix) -> DMatrix<f64> {
        let xc: Vec<Vec<f64>> = self.columns.iter().map(|c| x.apply(c)).collect();
        let n = self.len();
        DMatrix::from_fn(n, n, |i, j| dot(&self.columns[i], &xc[j]))
    }

    /// max |ΦᵀXΦ − I|
    pub fn orthonormality_defect(&self, x: &InnerProductMatrix) -> f64 {
        let g = self.gram(x);
        let n = self.len();
        (g - DMatrix::identity(n, n)).iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.len(), |i, j| self.columns[j][i])
    }

    /// Modified Gram–Schmidt in the X inner product with one re-orthogonalization pass.
    ///
    /// Returns the orthonormality defect of the grown basis (computed against the new column
    /// only), or `None` when the candidate is numerically inside the span and was rejected.
    pub fn orthonormalize_and_push(&mut self, x: &InnerProductMatrix, v: &[f64]) -> Result<Option<f64>> {
        if v.len() != self.dim {
            return Err(Error::Dimension(format!("candidate of length {}, basis dim {}", v.len(), self.dim)));
        }
        let original = x.norm(v);
        if !(original > 0.0) {
            return Ok(None);
        }
        let mut w = v.to_vec();
        for _ in 0..2 {
            for col in &self.columns {
                let c = x.dot(col, &w);
                crate::linalg::axpy(-c, col, &mut w);
            }
        }
        let rest = x.norm(&w);
        if rest < REJECT_TOL * original {
            return Ok(None);
        }
        for wi in &mut w {
            *wi /= rest;
        }
        let xw = x.apply(&w);
        let mut defect = (dot(&w, &xw) - 1.0).abs();
        for col in &self.columns {
            defect = defect.max(dot(col, &xw).abs());
        }
        self.columns.push(w);
        Ok(Some(defect))
    }
}

/// Wᵀ A V for growing test columns W and trial columns V, caching A v_j.
#[derive(Clone, Debug)]
pub(crate) struct ProjectedBlock {
    av: Vec<Vec<f64>>,
    m: DMatrix<f64>,
}

impl ProjectedBlock {
    pub(crate) fn new() -> Self {
        ProjectedBlock { av: Vec::new(), m: DMatrix::zeros(0, 0) }
    }

    /// Brings the block up to date after `test` and/or `trial` gained columns at the end.
    pub(crate) fn extend(&mut self, a: &CsrMatrix, test: &[Vec<f64>], trial: &[Vec<f64>]) {
        let (r0, c0) = (self.m.nrows(), self.av.len());
        for v in &trial[c0..] {
            self.av.push(a.mul_vec(v));
        }
        let mut m = DMatrix::zeros(test.len(), trial.len());
        m.view_mut((0, 0), (r0, c0)).copy_from(&self.m);
        for (i, w) in test.iter().enumerate() {
            for (j, av) in self.av.iter().enumerate() {
                if i >= r0 || j >= c0 {
                    m[(i, j)] = dot(w, av);
                }
            }
        }
        self.m = m;
    }

    pub(crate) fn truncate(&self, rows: usize, cols: usize) -> Self {
        ProjectedBlock { av: self.av[..cols].to_vec(), m: self.m.view((0, 0), (rows, cols)).into_owned() }
    }

    pub(crate) fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }
}

fn extend_load(f: &mut Vec<f64>, load: &[f64], test: &[Vec<f64>]) {
    for w in &test[f.len()..] {
        f.push(dot(w, load));
    }
}

/// Galerkin projection of an affine system onto a reduced basis:
/// A_{N,q} = ΦᵀA_qΦ and f_{N,q} = Φᵀf_q, combined with θ_q(μ) at query time.
#[derive(Clone, Debug)]
pub struct ReducedAffine {
    basis: ReducedBasis,
    theta_a: Vec<Theta>,
    theta_f: Vec<Theta>,
    blocks: Vec<ProjectedBlock>,
    loads: Vec<Vec<f64>>,
    n_params: usize,
}

impl ReducedAffine {
    pub fn project(sys: &AffineSystem, basis: &ReducedBasis) -> Result<Self> {
        if basis.dim() != sys.dim() {
            return Err(Error::Dimension(format!("basis dim {} vs system dim {}", basis.dim(), sys.dim())));
        }
        if basis.role() != Role::State {
            return Err(Error::Reduction(format!("a {} basis cannot reduce a scalar system", basis.role().as_str())));
        }
        let mut r = ReducedAffine {
            basis: ReducedBasis::empty(basis.dim(), basis.role(), basis.norm()),
            theta_a: sys.operators().iter().map(|t| t.theta).collect(),
            theta_f: sys.loads().iter().map(|t| t.theta).collect(),
            blocks: vec![ProjectedBlock::new(); sys.operators().len()],
            loads: vec![Vec::new(); sys.loads().len()],
            n_params: sys.n_params(),
        };
        r.extend(sys, basis)?;
        Ok(r)
    }

    /// Adds the rows and columns of basis vectors appended since the last call.
    pub fn extend(&mut self, sys: &AffineSystem, basis: &ReducedBasis) -> Result<()> {
        if basis.len() < self.basis.len() || basis.columns()[..self.basis.len()] != self.basis.columns()[..] {
            return Err(Error::Reduction("extension basis does not start with the projected columns".into()));
        }
        let cols = basis.columns();
        for (blk, op) in self.blocks.iter_mut().zip(sys.operators()) {
            blk.extend(&op.matrix, cols, cols);
        }
        for (f, load) in self.loads.iter_mut().zip(sys.loads()) {
            extend_load(f, &load.vector, cols);
        }
        self.basis = basis.clone();
        Ok(())
    }

    /// The reduced model on the first `n` basis vectors.
    pub fn truncate(&self, n: usize) -> ReducedAffine {
        let n = n.min(self.len());
        ReducedAffine {
            basis: self.basis.truncate(n),
            theta_a: self.theta_a.clone(),
            theta_f: self.theta_f.clone(),
            blocks: self.blocks.iter().map(|b| b.truncate(n, n)).collect(),
            loads: self.loads.iter().map(|f| f[..n].to_vec()).collect(),
            n_params: self.n_params,
        }
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn basis(&self) -> &ReducedBasis {
        &self.basis
    }

    pub fn block(&self, q: usize) -> &DMatrix<f64> {
        self.blocks[q].matrix()
    }

    fn check_mu(&self, mu: &[f64]) -> Result<()> {
        if mu.len() != self.n_params {
            return Err(Error::Dimension(format!("μ has {} components, expected {}", mu.len(), self.n_params)));
        }
        Ok(())
    }

    pub fn matrix(&self, mu: &[f64]) -> Result<DMatrix<f64>> {
        self.check_mu(mu)?;
        let n = self.len();
        let mut a = DMatrix::zeros(n, n);
        for (t, b) in self.theta_a.iter().zip(&self.blocks) {
            a += b.matrix() * t.eval(mu);
        }
        Ok(a)
    }

    pub fn rhs(&self, mu: &[f64]) -> Result<DVector<f64>> {
        self.check_mu(mu)?;
        let mut f = DVector::zeros(self.len());
        for (t, l) in self.theta_f.iter().zip(&self.loads) {
            f.axpy(t.eval(mu), &DVector::from_column_slice(l), 1.0);
        }
        Ok(f)
    }

    /// Reduced coefficients u_N(μ).
    pub fn solve(&self, mu: &[f64]) -> Result<DVector<f64>> {
        lu_solve(&self.matrix(mu)?, &self.rhs(mu)?).map_err(|e| e.at_mu(mu))
    }

    /// Reduced solve followed by the lift Φ u_N.
    pub fn query(&self, mu: &[f64]) -> Result<(DVector<f64>, Vec<f64>)> {
        let c = self.solve(mu)?;
        let u = self.basis.lift(c.as_slice());
        Ok((c, u))
    }
}

/// Reduced saddle system on a velocity space (snapshots and supremizers, in any order)
/// and a pressure space.
#[derive(Clone, Debug)]
pub struct ReducedSaddle {
    velocity: Vec<Vec<f64>>,
    velocity_roles: Vec<Role>,
    pressure: Vec<Vec<f64>>,
    theta_a: Vec<Theta>,
    theta_f: Vec<Theta>,
    blocks: Vec<ProjectedBlock>,
    divergence: ProjectedBlock,
    loads: Vec<Vec<f64>>,
    n_params: usize,
}

impl ReducedSaddle {
    pub fn new(sys: &SaddleAffineSystem) -> Self {
        ReducedSaddle {
            velocity: Vec::new(),
            velocity_roles: Vec::new(),
            pressure: Vec::new(),
            theta_a: sys.velocity_operators().iter().map(|t| t.theta).collect(),
            theta_f: sys.velocity_loads().iter().map(|t| t.theta).collect(),
            blocks: vec![ProjectedBlock::new(); sys.velocity_operators().len()],
            divergence: ProjectedBlock::new(),
            loads: vec![Vec::new(); sys.velocity_loads().len()],
            n_params: sys.n_params(),
        }
    }

    /// Projects onto the velocity space [bases...] (concatenated) and the pressure basis.
    pub fn project(sys: &SaddleAffineSystem, velocity: &[&ReducedBasis], pressure: &ReducedBasis) -> Result<Self> {
        let mut r = ReducedSaddle::new(sys);
        for b in velocity {
            if !matches!(b.role(), Role::Velocity | Role::Supremizer) || b.dim() != sys.velocity_dim() {
                return Err(Error::Reduction(format!("{} basis of dim {} in the velocity slot", b.role().as_str(), b.dim())));
            }
            for c in b.columns() {
                r.velocity.push(c.clone());
                r.velocity_roles.push(b.role());
            }
        }
        if pressure.role() != Role::Pressure || pressure.dim() != sys.pressure_dim() {
            return Err(Error::Reduction(format!(
                "{} basis of dim {} in the pressure slot",
                pressure.role().as_str(),
                pressure.dim()
            )));
        }
        r.pressure = pressure.columns().to_vec();
        r.sync(sys);
        Ok(r)
    }

    /// Appends a velocity-space column (snapshot or supremizer) and updates the projections.
    pub fn push_velocity(&mut self, sys: &SaddleAffineSystem, v: &[f64], role: Role) {
        self.velocity.push(v.to_vec());
        self.velocity_roles.push(role);
        self.sync(sys);
    }

    pub fn push_pressure(&mut self, sys: &SaddleAffineSystem, p: &[f64]) {
        self.pressure.push(p.to_vec());
        self.sync(sys);
    }

    fn sync(&mut self, sys: &SaddleAffineSystem) {
        for (blk, op) in self.blocks.iter_mut().zip(sys.velocity_operators()) {
            blk.extend(&op.matrix, &self.velocity, &self.velocity);
        }
        self.divergence.extend(sys.divergence(), &self.pressure, &self.velocity);
        for (f, load) in self.loads.iter_mut().zip(sys.velocity_loads()) {
            extend_load(f, &load.vector, &self.velocity);
        }
    }

    pub fn velocity_len(&self) -> usize {
        self.velocity.len()
    }

    pub fn pressure_len(&self) -> usize {
        self.pressure.len()
    }

    pub fn velocity_roles(&self) -> &[Role] {
        &self.velocity_roles
    }

    /// B_N = Πᵀ B Φ
    pub fn divergence(&self) -> &DMatrix<f64> {
        self.divergence.matrix()
    }

    pub fn matrix(&self, mu: &[f64]) -> Result<DMatrix<f64>> {
        if mu.len() != self.n_params {
            return Err(Error::Dimension(format!("μ has {} components, expected {}", mu.len(), self.n_params)));
        }
        let (nu, np) = (self.velocity_len(), self.pressure_len());
        let mut k = DMatrix::zeros(nu + np, nu + np);
        for (t, b) in self.theta_a.iter().zip(&self.blocks) {
            let mut view = k.view_mut((0, 0), (nu, nu));
            view += b.matrix() * t.eval(mu);
        }
        let b = self.divergence();
        k.view_mut((nu, 0), (np, nu)).copy_from(b);
        k.view_mut((0, nu), (nu, np)).copy_from(&b.transpose());
        Ok(k)
    }

    pub fn rhs(&self, mu: &[f64]) -> Result<DVector<f64>> {
        let mut f = DVector::zeros(self.velocity_len() + self.pressure_len());
        for (t, l) in self.theta_f.iter().zip(&self.loads) {
            let th = t.eval(mu);
            for (i, v) in l.iter().enumerate() {
                f[i] += th * v;
            }
        }
        Ok(f)
    }

    /// Reduced (velocity, pressure) coefficients; singular systems (e.g. no supremizers) fail.
    pub fn solve(&self, mu: &[f64]) -> Result<(DVector<f64>, DVector<f64>)> {
        let w = lu_solve(&self.matrix(mu)?, &self.rhs(mu)?).map_err(|e| e.at_mu(mu))?;
        let nu = self.velocity_len();
        Ok((w.rows(0, nu).into_owned(), w.rows(nu, self.pressure_len()).into_owned()))
    }

    pub fn lift_velocity(&self, c: &[f64]) -> Vec<f64> {
        lift_columns(&self.velocity, c)
    }

    pub fn lift_pressure(&self, c: &[f64]) -> Vec<f64> {
        lift_columns(&self.pressure, c)
    }

    pub fn query(&self, mu: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let (cu, cp) = self.solve(mu)?;
        Ok((self.lift_velocity(cu.as_slice()), self.lift_pressure(cp.as_slice())))
    }

    /// Reduced inf-sup constant with X_u and X_p restricted to the reduced spaces.
    pub fn infsup(&self, xu: &InnerProductMatrix, xp: &InnerProductMatrix) -> Result<f64> {
        let gram = |cols: &[Vec<f64>], x: &InnerProductMatrix| {
            let xc: Vec<Vec<f64>> = cols.iter().map(|c| x.apply(c)).collect();
            DMatrix::from_fn(cols.len(), cols.len(), |i, j| dot(&cols[i], &xc[j]))
        };
        infsup_reduced(self.divergence(), &gram(&self.velocity, xu), &gram(&self.pressure, xp))
    }
}

fn lift_columns(cols: &[Vec<f64>], c: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; cols.first().map_or(0, Vec::len)];
    for (ci, col) in c.iter().zip(cols) {
        crate::linalg::axpy(*ci, col, &mut out);
    }
    out
}
