use std::time::Instant;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::affine::{AffineSystem, Theta};
use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::par::{self, Execution};
use crate::rom::reduced::{ReducedAffine, ReducedBasis, ReducedSaddle, Role};
use crate::rom::training::TrainingSet;
use crate::space::InnerProductMatrix;
use crate::stokes::{solve_supremizer, SaddleAffineSystem};

/// Representers below this fraction of their original X-norm add no new direction.
const DEPENDENT_TOL: f64 = 1e-12;

/// Riesz representers z_j = X⁻¹ g_j of the residual terms, kept as z_j = Σ_i q_i R_ij with
/// X-orthonormal q_i. For R(μ) = Σ_j w_j(μ) g_j the dual norm is then ‖R w‖₂, which avoids
/// the cancellation of the expanded quadratic form. Terms only ever get appended, so any
/// prefix of the term list is itself a valid machinery.
#[derive(Clone, Debug, Default)]
pub struct RepresenterStore {
    q: Vec<Vec<f64>>,
    xq: Vec<Vec<f64>>,
    r: Vec<Vec<f64>>,
}

impl RepresenterStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of residual terms.
    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn push(&mut self, x: &InnerProductMatrix, g: &[f64]) {
        let mut z = x.solve(g);
        let original = dot(g, &z).max(0.0).sqrt();
        let mut coeffs = vec![0.0; self.q.len()];
        for _ in 0..2 {
            for (i, (q, xq)) in self.q.iter().zip(&self.xq).enumerate() {
                let c = dot(xq, &z);
                coeffs[i] += c;
                crate::linalg::axpy(-c, q, &mut z);
            }
        }
        let xz = x.apply(&z);
        let rest = dot(&z, &xz).max(0.0).sqrt();
        if rest > DEPENDENT_TOL * original {
            self.q.push(z.iter().map(|v| v / rest).collect());
            self.xq.push(xz.iter().map(|v| v / rest).collect());
            coeffs.push(rest);
        }
        self.r.push(coeffs);
    }

    /// ‖Σ_j w_j z_j‖_X using the first `w.len()` terms.
    pub fn norm(&self, w: &[f64]) -> f64 {
        let mut y = vec![0.0; self.q.len()];
        for (wj, col) in w.iter().zip(&self.r) {
            for (yi, rij) in y.iter_mut().zip(col) {
                *yi += wj * rij;
            }
        }
        y.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// η(μ) = ‖f(μ) − A(μ)Φu_N‖_{X'} / α_LB for a scalar affine problem.
///
/// Term order: loads, then for each basis column n the blocks q = 0..Q_a, so the first
/// Q_f + N·Q_a terms describe the model truncated to N columns.
#[derive(Clone, Debug)]
pub struct AdrEstimator {
    store: RepresenterStore,
    theta_a: Vec<Theta>,
    theta_f: Vec<Theta>,
    n_basis: usize,
    alpha_lb: f64,
}

impl AdrEstimator {
    pub fn new(sys: &AffineSystem, x: &InnerProductMatrix) -> Result<Self> {
        if x.dim() != sys.dim() {
            return Err(Error::Dimension(format!("X is {} but the system is {}", x.dim(), sys.dim())));
        }
        let mut store = RepresenterStore::new();
        for l in sys.loads() {
            store.push(x, &l.vector);
        }
        Ok(AdrEstimator {
            store,
            theta_a: sys.operators().iter().map(|t| t.theta).collect(),
            theta_f: sys.loads().iter().map(|t| t.theta).collect(),
            n_basis: 0,
            alpha_lb: 1.0,
        })
    }

    pub fn with_alpha_lb(mut self, alpha_lb: f64) -> Self {
        self.alpha_lb = alpha_lb;
        self
    }

    /// Adds the terms −A_q φ of a new basis column.
    pub fn extend(&mut self, sys: &AffineSystem, x: &InnerProductMatrix, phi: &[f64]) {
        for op in sys.operators() {
            let g: Vec<f64> = op.matrix.mul_vec(phi).iter().map(|v| -v).collect();
            self.store.push(x, &g);
        }
        self.n_basis += 1;
    }

    pub fn n_basis(&self) -> usize {
        self.n_basis
    }

    /// Estimator for reduced coefficients `u_n` on the first `u_n.len()` columns.
    pub fn eta(&self, mu: &[f64], u_n: &[f64]) -> f64 {
        let mut w: Vec<f64> = self.theta_f.iter().map(|t| t.eval(mu)).collect();
        let th: Vec<f64> = self.theta_a.iter().map(|t| t.eval(mu)).collect();
        for &c in u_n.iter().take(self.n_basis) {
            w.extend(th.iter().map(|t| t * c));
        }
        self.store.norm(&w) / self.alpha_lb
    }
}

/// Direct sqrt(rᵀX⁻¹r) with r = f(μ) − A(μ)u.
pub fn residual_dual_norm(sys: &AffineSystem, x: &InnerProductMatrix, mu: &[f64], u: &[f64]) -> Result<f64> {
    let au = sys.matrix(mu)?.mul_vec(u);
    let r: Vec<f64> = sys.rhs(mu)?.iter().zip(&au).map(|(f, a)| f - a).collect();
    Ok(x.dual_norm(&r))
}

#[derive(Clone, Copy, Debug)]
enum StokesTerm {
    Load(usize),
    /// (velocity column, operator)
    Velocity(usize, usize),
    Pressure(usize),
}

/// Momentum-residual dual norm in X_u over β_LB for the reduced saddle solution.
#[derive(Clone, Debug)]
pub struct StokesEstimator {
    store: RepresenterStore,
    terms: Vec<StokesTerm>,
    theta_a: Vec<Theta>,
    theta_f: Vec<Theta>,
    beta_lb: f64,
}

impl StokesEstimator {
    pub fn new(sys: &SaddleAffineSystem, xu: &InnerProductMatrix) -> Self {
        let mut store = RepresenterStore::new();
        let mut terms = vec![];
        for (q, l) in sys.velocity_loads().iter().enumerate() {
            store.push(xu, &l.vector);
            terms.push(StokesTerm::Load(q));
        }
        StokesEstimator {
            store,
            terms,
            theta_a: sys.velocity_operators().iter().map(|t| t.theta).collect(),
            theta_f: sys.velocity_loads().iter().map(|t| t.theta).collect(),
            beta_lb: 1.0,
        }
    }

    /// Registers velocity column `col` of the reduced saddle system.
    pub fn push_velocity(&mut self, sys: &SaddleAffineSystem, xu: &InnerProductMatrix, col: usize, v: &[f64]) {
        for (q, op) in sys.velocity_operators().iter().enumerate() {
            let g: Vec<f64> = op.matrix.mul_vec(v).iter().map(|a| -a).collect();
            self.store.push(xu, &g);
            self.terms.push(StokesTerm::Velocity(col, q));
        }
    }

    /// Registers pressure column `col` through the term −Bᵀπ.
    pub fn push_pressure(&mut self, sys: &SaddleAffineSystem, xu: &InnerProductMatrix, col: usize, p: &[f64]) {
        let g: Vec<f64> = sys.divergence().tr_mul_vec(p).iter().map(|a| -a).collect();
        self.store.push(xu, &g);
        self.terms.push(StokesTerm::Pressure(col));
    }

    pub fn eta(&self, mu: &[f64], c_u: &[f64], c_p: &[f64]) -> f64 {
        let w: Vec<f64> = self
            .terms
            .iter()
            .map(|t| match *t {
                StokesTerm::Load(q) => self.theta_f[q].eval(mu),
                StokesTerm::Velocity(j, q) => self.theta_a[q].eval(mu) * c_u.get(j).copied().unwrap_or(0.0),
                StokesTerm::Pressure(j) => c_p.get(j).copied().unwrap_or(0.0),
            })
            .collect();
        self.store.norm(&w) / self.beta_lb
    }
}

/// Direct momentum-residual dual norm ‖f(μ) − A(μ)u − Bᵀp‖_{X_u'}.
pub fn stokes_residual_dual_norm(
    sys: &SaddleAffineSystem,
    xu: &InnerProductMatrix,
    mu: &[f64],
    u: &[f64],
    p: &[f64],
) -> Result<f64> {
    let mut r = sys.velocity_rhs(mu)?;
    for op in sys.velocity_operators() {
        crate::linalg::axpy(-op.theta.eval(mu), &op.matrix.mul_vec(u), &mut r);
    }
    crate::linalg::axpy(-1.0, &sys.divergence().tr_mul_vec(p), &mut r);
    Ok(xu.dual_norm(&r))
}

#[derive(Clone, Copy, Debug)]
pub struct GreedyOptions {
    pub n_max: usize,
    pub eta_bar: f64,
    pub seed: u64,
    pub exec: Execution,
}

impl GreedyOptions {
    pub fn new(n_max: usize, seed: u64) -> Self {
        GreedyOptions { n_max, eta_bar: 0.0, seed, exec: Execution::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    /// N reached N_max.
    MaxSize,
    /// max η ≤ η̄.
    Tolerance,
    /// The argmax was already selected: the estimator cannot see further improvement.
    Repeated,
    /// The new snapshot was numerically inside the current span.
    Exhausted,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GreedyRecord {
    pub iteration: usize,
    pub index: usize,
    pub mu: Vec<f64>,
    /// max over the training set of η after adding this snapshot.
    pub max_eta: f64,
    pub defect: f64,
    /// Seconds since the offline phase started.
    pub elapsed: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GreedyLog {
    pub records: Vec<GreedyRecord>,
    /// HiMod solves performed.
    pub solves: usize,
    pub stop: StopReason,
}

impl GreedyLog {
    pub fn selected(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.index).collect()
    }
}

fn check_options(set: &TrainingSet, opts: &GreedyOptions) -> Result<()> {
    if set.is_empty() {
        return Err(Error::Config("empty training set".into()));
    }
    if opts.n_max == 0 || opts.n_max > set.len() {
        return Err(Error::Config(format!("N_max = {} must lie in 1..={}", opts.n_max, set.len())));
    }
    Ok(())
}

/// max and argmax, lowest index on ties.
fn argmax(v: &[f64]) -> (usize, f64) {
    v.iter().enumerate().fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &x)| if x > bv { (i, x) } else { (bi, bv) })
}

/// A HiRB model for a scalar problem: reduced operators, estimator and the offline log.
#[derive(Clone, Debug)]
pub struct AdrGreedy {
    pub reduced: ReducedAffine,
    pub estimator: AdrEstimator,
    pub log: GreedyLog,
}

impl AdrGreedy {
    pub fn basis(&self) -> &ReducedBasis {
        self.reduced.basis()
    }

    /// The model after its first `n` greedy iterations. Estimator terms are nested, so
    /// this is exactly what an `n_max = n` run would have produced.
    pub fn truncate(&self, n: usize) -> AdrGreedy {
        let full = self.reduced.len();
        let n = n.min(full);
        let mut estimator = self.estimator.clone();
        estimator.n_basis = n;
        let mut log = self.log.clone();
        log.records.truncate(n);
        log.solves = log.solves.min(n);
        if n < full {
            log.stop = StopReason::MaxSize;
        }
        AdrGreedy { reduced: self.reduced.truncate(n), estimator, log }
    }

    /// Online query: reduced solve, lift, and the estimator at the reduced solution.
    pub fn query(&self, mu: &[f64]) -> Result<(Vec<f64>, f64)> {
        let (c, u) = self.reduced.query(mu)?;
        Ok((u, self.estimator.eta(mu, c.as_slice())))
    }
}

/// η over the training set for the reduced model on its current basis.
pub fn sweep_adr(reduced: &ReducedAffine, est: &AdrEstimator, set: &TrainingSet, exec: Execution) -> Result<Vec<f64>> {
    par::try_map_indexed(exec, set.len(), |j| {
        let mu = set.get(j);
        let c = reduced.solve(mu)?;
        Ok(est.eta(mu, c.as_slice()))
    })
}

/// Greedy reduced basis for a scalar affine problem: start from a seeded random pick, then
/// repeatedly add the snapshot at argmax η until N_max, η̄, a repeated pick, or an
/// exhausted span stops it.
pub fn greedy_offline(
    sys: &AffineSystem,
    x: &InnerProductMatrix,
    set: &TrainingSet,
    opts: &GreedyOptions,
) -> Result<AdrGreedy> {
    check_options(set, opts)?;
    let start = Instant::now();
    let mut idx = ChaCha8Rng::seed_from_u64(opts.seed).gen_range(0..set.len());
    let mut basis = ReducedBasis::empty(sys.dim(), Role::State, x.tag());
    let mut reduced = ReducedAffine::project(sys, &basis)?;
    let mut estimator = AdrEstimator::new(sys, x)?;
    let mut records = vec![];
    let mut solves = 0;
    let stop = loop {
        let mu = set.get(idx).to_vec();
        let snap = sys.solve(&mu)?;
        solves += 1;
        let Some(defect) = basis.orthonormalize_and_push(x, &snap)? else {
            if basis.is_empty() {
                return Err(Error::Reduction(format!("first greedy snapshot at {mu:?} is zero")));
            }
            break StopReason::Exhausted;
        };
        reduced.extend(sys, &basis)?;
        estimator.extend(sys, x, basis.column(basis.len() - 1));
        let etas = sweep_adr(&reduced, &estimator, set, opts.exec)?;
        let (next, max_eta) = argmax(&etas);
        records.push(GreedyRecord {
            iteration: basis.len(),
            index: idx,
            mu,
            max_eta,
            defect,
            elapsed: start.elapsed().as_secs_f64(),
        });
        log::debug!("greedy N = {}: max η = {max_eta:e}", basis.len());
        if basis.len() >= opts.n_max {
            break StopReason::MaxSize;
        }
        if max_eta <= opts.eta_bar {
            break StopReason::Tolerance;
        }
        if records.iter().any(|r| r.index == next) {
            break StopReason::Repeated;
        }
        idx = next;
    };
    Ok(AdrGreedy { reduced, estimator, log: GreedyLog { records, solves, stop } })
}

/// A HiRB model for the Stokes problem.
#[derive(Clone, Debug)]
pub struct StokesGreedy {
    pub velocity: ReducedBasis,
    pub supremizer: ReducedBasis,
    pub pressure: ReducedBasis,
    pub reduced: ReducedSaddle,
    pub estimator: StokesEstimator,
    pub log: GreedyLog,
}

impl StokesGreedy {
    /// Online query: (velocity, pressure, η).
    pub fn query(&self, mu: &[f64]) -> Result<(Vec<f64>, Vec<f64>, f64)> {
        let (cu, cp) = self.reduced.solve(mu)?;
        let eta = self.estimator.eta(mu, cu.as_slice(), cp.as_slice());
        Ok((self.reduced.lift_velocity(cu.as_slice()), self.reduced.lift_pressure(cp.as_slice()), eta))
    }
}

pub fn sweep_stokes(
    reduced: &ReducedSaddle,
    est: &StokesEstimator,
    set: &TrainingSet,
    exec: Execution,
) -> Result<Vec<f64>> {
    par::try_map_indexed(exec, set.len(), |j| {
        let mu = set.get(j);
        let (cu, cp) = reduced.solve(mu)?;
        Ok(est.eta(mu, cu.as_slice(), cp.as_slice()))
    })
}

/// Segregated greedy for Stokes: each selected μ contributes a velocity snapshot, a
/// pressure snapshot and the supremizer of that pressure, each orthonormalized against its
/// own basis. Individually degenerate snapshots are skipped; the loop only stops on
/// exhaustion when all three are.
pub fn greedy_offline_stokes(
    sys: &SaddleAffineSystem,
    xu: &InnerProductMatrix,
    xp: &InnerProductMatrix,
    set: &TrainingSet,
    opts: &GreedyOptions,
) -> Result<StokesGreedy> {
    check_options(set, opts)?;
    let start = Instant::now();
    let mut idx = ChaCha8Rng::seed_from_u64(opts.seed).gen_range(0..set.len());
    let mut velocity = ReducedBasis::empty(sys.velocity_dim(), Role::Velocity, xu.tag());
    let mut supremizer = ReducedBasis::empty(sys.velocity_dim(), Role::Supremizer, xu.tag());
    let mut pressure = ReducedBasis::empty(sys.pressure_dim(), Role::Pressure, xp.tag());
    let mut reduced = ReducedSaddle::new(sys);
    let mut estimator = StokesEstimator::new(sys, xu);
    let mut records = vec![];
    let mut solves = 0;
    let stop = loop {
        let mu = set.get(idx).to_vec();
        let (u, p) = sys.solve(&mu)?;
        let s = solve_supremizer(xu, sys.divergence(), &p)?;
        solves += 1;
        let mut defect: f64 = 0.0;
        let mut added = false;
        if let Some(d) = velocity.orthonormalize_and_push(xu, &u)? {
            let v = velocity.column(velocity.len() - 1).to_vec();
            estimator.push_velocity(sys, xu, reduced.velocity_len(), &v);
            reduced.push_velocity(sys, &v, Role::Velocity);
            defect = defect.max(d);
            added = true;
        }
        if let Some(d) = supremizer.orthonormalize_and_push(xu, &s)? {
            let v = supremizer.column(supremizer.len() - 1).to_vec();
            estimator.push_velocity(sys, xu, reduced.velocity_len(), &v);
            reduced.push_velocity(sys, &v, Role::Supremizer);
            defect = defect.max(d);
            added = true;
        }
        if let Some(d) = pressure.orthonormalize_and_push(xp, &p)? {
            let q = pressure.column(pressure.len() - 1).to_vec();
            estimator.push_pressure(sys, xu, reduced.pressure_len(), &q);
            reduced.push_pressure(sys, &q);
            defect = defect.max(d);
            added = true;
        }
        if !added {
            if records.is_empty() {
                return Err(Error::Reduction(format!("first greedy snapshots at {mu:?} are all zero")));
            }
            break StopReason::Exhausted;
        }
        let etas = sweep_stokes(&reduced, &estimator, set, opts.exec)?;
        let (next, max_eta) = argmax(&etas);
        records.push(GreedyRecord {
            iteration: records.len() + 1,
            index: idx,
            mu,
            max_eta,
            defect,
            elapsed: start.elapsed().as_secs_f64(),
        });
        if records.len() >= opts.n_max {
            break StopReason::MaxSize;
        }
        if max_eta <= opts.eta_bar {
            break StopReason::Tolerance;
        }
        if records.iter().any(|r| r.index == next) {
            break StopReason::Repeated;
        }
        idx = next;
    };
    Ok(StokesGreedy {
        velocity,
        supremizer,
        pressure,
        reduced,
        estimator,
        log: GreedyLog { records, solves, stop },
    })
}

/// η at μ for a reduced scalar model truncated to `n` columns (nested estimator terms).
pub fn truncated_estimate(greedy: &AdrGreedy, n: usize, mu: &[f64]) -> Result<(DVector<f64>, f64)> {
    let r = greedy.reduced.truncate(n);
    let c = r.solve(mu)?;
    let eta = greedy.estimator.eta(mu, c.as_slice());
    Ok((c, eta))
}
