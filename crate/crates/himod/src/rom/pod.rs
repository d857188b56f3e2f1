use nalgebra::DMatrix;

use crate::affine::AffineSystem;
use crate::error::{Error, Result};
use crate::linalg::{dot, sym_eig};
use crate::par::{self, Execution};
use crate::rom::reduced::{ReducedBasis, Role};
use crate::rom::training::TrainingSet;
use crate::space::InnerProductMatrix;
use crate::stokes::{solve_supremizer, SaddleAffineSystem};

/// Eigenvalues below this fraction of λ₁ are treated as roundoff and never enter a basis.
pub const EIGEN_CUTOFF: f64 = 1e-13;

/// Snapshot columns U = [u(μ⁽¹⁾) … u(μ⁽ᴹ⁾)].
#[derive(Clone, Debug, PartialEq)]
pub struct ResponseMatrix {
    dim: usize,
    columns: Vec<Vec<f64>>,
    role: Role,
}

impl ResponseMatrix {
    pub fn new(dim: usize, columns: Vec<Vec<f64>>, role: Role) -> Result<Self> {
        if let Some(c) = columns.iter().find(|c| c.len() != dim) {
            return Err(Error::Dimension(format!("snapshot of length {}, expected {dim}", c.len())));
        }
        Ok(ResponseMatrix { dim, columns, role })
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

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    /// C = Uᵀ X U
    pub fn correlation(&self, x: &InnerProductMatrix, exec: Execution) -> DMatrix<f64> {
        let xu = par::map_indexed(exec, self.len(), |j| x.apply(&self.columns[j]));
        let m = self.len();
        let mut c = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let v = 0.5 * (dot(&self.columns[i], &xu[j]) + dot(&self.columns[j], &xu[i]));
                c[(i, j)] = v;
                c[(j, i)] = v;
            }
        }
        c
    }
}

/// One HiMod solve per training parameter.
pub fn collect_snapshots(sys: &AffineSystem, set: &TrainingSet, exec: Execution) -> Result<ResponseMatrix> {
    let columns = par::try_map_indexed(exec, set.len(), |j| sys.solve(set.get(j)))?;
    ResponseMatrix::new(sys.dim(), columns, Role::State)
}

/// Velocity, pressure and supremizer response matrices of a Stokes training run.
#[derive(Clone, Debug)]
pub struct StokesSnapshots {
    pub velocity: ResponseMatrix,
    pub pressure: ResponseMatrix,
    pub supremizer: ResponseMatrix,
}

pub fn collect_stokes_snapshots(
    sys: &SaddleAffineSystem,
    xu: &InnerProductMatrix,
    set: &TrainingSet,
    exec: Execution,
) -> Result<StokesSnapshots> {
    let triples = par::try_map_indexed(exec, set.len(), |j| -> Result<_> {
        let (u, p) = sys.solve(set.get(j))?;
        let s = solve_supremizer(xu, sys.divergence(), &p)?;
        Ok((u, p, s))
    })?;
    let (mut us, mut ps, mut ss) = (vec![], vec![], vec![]);
    for (u, p, s) in triples {
        us.push(u);
        ps.push(p);
        ss.push(s);
    }
    Ok(StokesSnapshots {
        velocity: ResponseMatrix::new(sys.velocity_dim(), us, Role::Velocity)?,
        pressure: ResponseMatrix::new(sys.pressure_dim(), ps, Role::Pressure)?,
        supremizer: ResponseMatrix::new(sys.velocity_dim(), ss, Role::Supremizer)?,
    })
}

/// Descending eigenpairs of the correlation matrix.
#[derive(Clone, Debug)]
pub struct PodSpectrum {
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
}

impl PodSpectrum {
    pub fn from_correlation(c: &DMatrix<f64>) -> Result<Self> {
        let (vals, vecs) = sym_eig(c)?;
        let m = vals.len();
        let eigenvalues: Vec<f64> = (0..m).rev().map(|k| vals[k]).collect();
        let mut eigenvectors = DMatrix::zeros(m, m);
        for (new, old) in (0..m).rev().enumerate() {
            eigenvectors.set_column(new, &vecs.column(old));
        }
        Ok(PodSpectrum { eigenvalues, eigenvectors })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// λ_k / λ₁ with k counted from 1.
    pub fn normalized(&self, k: usize) -> f64 {
        self.eigenvalues[k - 1] / self.eigenvalues[0]
    }

    /// E(N) = Σ_{k≤N} λ_k / Σ_k λ_k, with negative roundoff eigenvalues clamped to zero.
    pub fn energy(&self, n: usize) -> f64 {
        let total: f64 = self.eigenvalues.iter().map(|l| l.max(0.0)).sum();
        if total == 0.0 {
            return 1.0;
        }
        self.eigenvalues[..n.min(self.len())].iter().map(|l| l.max(0.0)).sum::<f64>() / total
    }

    /// Number of eigenvalues above the roundoff cutoff.
    pub fn numerical_rank(&self) -> usize {
        let l1 = self.eigenvalues.first().copied().unwrap_or(0.0);
        if !(l1 > 0.0) {
            return 0;
        }
        self.eigenvalues.iter().take_while(|&&l| l > EIGEN_CUTOFF * l1).count()
    }

    /// Smallest N with E(N) > 1 − ε.
    pub fn energy_size(&self, eps: f64) -> usize {
        (1..=self.len()).find(|&n| self.energy(n) > 1.0 - eps).unwrap_or(self.len())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Cutoff {
    Fixed(usize),
    Energy(f64),
}

/// POD basis from C = UᵀXU. Columns are U φ_k / √λ_k, renormalized in X and swept once
/// with Gram–Schmidt so small-λ columns stay orthonormal despite roundoff.
///
/// Eigenvalues below [`EIGEN_CUTOFF`]·λ₁ are dropped even under `Cutoff::Fixed`, so the
/// basis may come back shorter than requested.
pub fn pod_extract(
    u: &ResponseMatrix,
    x: &InnerProductMatrix,
    cutoff: Cutoff,
    exec: Execution,
) -> Result<(ReducedBasis, PodSpectrum)> {
    if u.is_empty() {
        return Err(Error::Reduction("empty response matrix".into()));
    }
    if x.dim() != u.dim() {
        return Err(Error::Dimension(format!("X is {} but snapshots have {} rows", x.dim(), u.dim())));
    }
    let spectrum = PodSpectrum::from_correlation(&u.correlation(x, exec))?;
    let requested = match cutoff {
        Cutoff::Fixed(n) => {
            if n > u.len() {
                return Err(Error::Reduction(format!("requested N = {n} exceeds M = {}", u.len())));
            }
            n
        }
        Cutoff::Energy(eps) => {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(Error::Config(format!("energy tolerance {eps} outside (0, 1)")));
            }
            spectrum.energy_size(eps)
        }
    };
    let rank = spectrum.numerical_rank();
    if requested > rank {
        log::warn!("POD: requested N = {requested} exceeds the numerical rank {rank}; truncating");
    }
    let n = requested.min(rank);
    let cols = par::map_indexed(exec, n, |k| {
        let phi = spectrum.eigenvectors().column(k);
        let scale = 1.0 / spectrum.eigenvalues()[k].sqrt();
        let mut v = vec![0.0; u.dim()];
        for (j, col) in u.columns().iter().enumerate() {
            crate::linalg::axpy(phi[j] * scale, col, &mut v);
        }
        v
    });
    let mut basis = ReducedBasis::empty(u.dim(), u.role(), x.tag());
    for v in cols {
        if basis.orthonormalize_and_push(x, &v)?.is_none() {
            log::warn!("POD: mode {} collapsed under re-orthogonalization", basis.len() + 1);
            break;
        }
    }
    Ok((basis, spectrum))
}

/// Σ_j ‖u_j − Π u_j‖²_X for the X-orthogonal projector onto the basis.
pub fn projection_error(u: &ResponseMatrix, basis: &ReducedBasis, x: &InnerProductMatrix) -> f64 {
    u.columns()
        .iter()
        .map(|c| {
            let coeffs = basis.project(x, c);
            let p = basis.lift(&coeffs);
            let d = x.distance(c, &p);
            d * d
        })
        .sum()
}
