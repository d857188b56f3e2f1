//! HiMod discretization of −div(ν∇u) + b·∇u + σu = f with Dirichlet inflow, Neumann
//! outflow and Robin lateral walls, written as an affine system in μ = [ν, b_x, b_y, σ].

use crate::affine::{AffineSystem, ParameterDomain, Theta};
use crate::bases::BoundaryTag;
use crate::error::{Error, Result};
use crate::geometry::{DomainMap, GaussRule, QuadratureGrid};
use crate::linalg::{CsrMatrix, TripletBuilder};
use crate::space::{BasisEval, HiModSpace};
use std::f64::consts::PI;

/// The open set a_x(x − c_x)² + a_y(y − c_y)² < r, scaled by `weight` in the forcing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ellipse {
    pub cx: f64,
    pub cy: f64,
    pub ax: f64,
    pub ay: f64,
    pub r: f64,
    pub weight: f64,
}

impl Ellipse {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.ax * (x - self.cx).powi(2) + self.ay * (y - self.cy).powi(2) < self.r
    }

    /// Half-extent in x.
    pub fn x_radius(&self) -> f64 {
        (self.r / self.ax).sqrt()
    }

    /// Half-chord in y at abscissa x (0 outside).
    pub fn half_chord(&self, x: f64) -> f64 {
        ((self.r - self.ax * (x - self.cx).powi(2)) / self.ay).max(0.0).sqrt()
    }
}

/// f = constant + Σ weight_j χ_{E_j}
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Forcing {
    pub constant: f64,
    pub ellipses: Vec<Ellipse>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdrProblemSpec {
    pub diffusion: Theta,
    pub advection_x: Theta,
    pub advection_y: Theta,
    pub reaction: Theta,
    /// Lateral Robin coefficient ρ.
    pub robin: f64,
    pub forcing: Forcing,
    /// Dirichlet inflow datum g.
    pub inflow: f64,
    /// Neumann outflow datum h.
    pub outflow: f64,
    /// Robin lateral datum l.
    pub lateral: f64,
    pub n_params: usize,
}

impl AdrProblemSpec {
    /// The benchmark: μ = [ν, b_x, b_y, σ], ρ = 1, f = 1.8 χ_{S1} − 1.8 χ_{S2}.
    pub fn benchmark() -> Self {
        let ellipse = |cx: f64, weight: f64| Ellipse { cx, cy: 0.0, ax: 0.5, ay: 0.4, r: 0.02, weight };
        AdrProblemSpec {
            diffusion: Theta::Param(0),
            advection_x: Theta::Param(1),
            advection_y: Theta::Param(2),
            reaction: Theta::Param(3),
            robin: 1.0,
            forcing: Forcing { constant: 0.0, ellipses: vec![ellipse(0.75, 1.8), ellipse(1.5, -1.8)] },
            inflow: 0.0,
            outflow: 0.0,
            lateral: 0.0,
            n_params: 4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.robin < 0.0 {
            return Err(Error::Config(format!("Robin coefficient must be ≥ 0, got {}", self.robin)));
        }
        if self.inflow != 0.0 {
            // Lifting a nonzero inflow datum through a Robin-educated basis is ambiguous at the
            // wall corners; the benchmarks only ever use g = 0.
            return Err(Error::Config("only homogeneous Dirichlet inflow data are supported".into()));
        }
        for (name, t) in self.thetas() {
            if t.slot().is_some_and(|s| s >= self.n_params) {
                return Err(Error::Dimension(format!("{name} reads slot {t:?} but μ has {} components", self.n_params)));
            }
        }
        if let Theta::Const(nu) = self.diffusion {
            if !(nu > 0.0) {
                return Err(Error::Config(format!("diffusion must be positive, got {nu}")));
            }
        }
        if let Theta::Const(s) = self.reaction {
            if s < 0.0 {
                return Err(Error::Config(format!("reaction must be ≥ 0, got {s}")));
            }
        }
        Ok(())
    }

    /// ν > 0 and σ ≥ 0 over the whole box.
    pub fn validate_domain(&self, domain: &ParameterDomain) -> Result<()> {
        if domain.dim() != self.n_params {
            return Err(Error::Dimension(format!("domain has {} slots, problem {}", domain.dim(), self.n_params)));
        }
        if !(self.diffusion.range(domain).0 > 0.0) {
            return Err(Error::Config("diffusion must be positive over the parameter domain".into()));
        }
        if self.reaction.range(domain).0 < 0.0 {
            return Err(Error::Config("reaction must be non-negative over the parameter domain".into()));
        }
        Ok(())
    }

    fn thetas(&self) -> [(&'static str, Theta); 4] {
        [
            ("diffusion", self.diffusion),
            ("advection_x", self.advection_x),
            ("advection_y", self.advection_y),
            ("reaction", self.reaction),
        ]
    }
}

/// The benchmark space: the given map, P1 axial elements, Robin-educated modes with ν_ref.
pub fn benchmark_space(map: DomainMap, elements: usize, modes: usize, nu_ref: f64, rho: f64) -> Result<HiModSpace> {
    let quad = QuadratureGrid::with_defaults(map.length(), elements)?;
    HiModSpace::new(map, quad, 1, BoundaryTag::Robin { nu_ref, rho }, modes)
}

pub const ELLIPSE_AXIAL_POINTS: usize = 12;
pub const ELLIPSE_TRANSVERSE_POINTS: usize = 12;

/// Inflow DOFs (x = 0) of every mode.
pub fn inflow_dofs(space: &HiModSpace) -> Vec<usize> {
    (0..space.n_modes()).map(|k| space.index(k, space.fem().inflow_dof())).collect()
}

/// Local accumulation of the four volume blocks on one element.
fn volume_blocks(space: &HiModSpace, e: usize, local: &mut [Vec<f64>; 4]) {
    let n = space.fem().n_local() * space.n_modes();
    for block in local.iter_mut() {
        block.clear();
        block.resize(n * n, 0.0);
    }
    let mut b: Vec<BasisEval> = Vec::new();
    for qx in 0..space.n_axial_nodes() {
        for qy in 0..space.n_transverse_nodes() {
            let node = *space.node(e, qx, qy);
            space.local_basis(&node, qx, qy, &mut b);
            let w = node.weight;
            for (r, test) in b.iter().enumerate() {
                let row = r * n;
                let (tv, tx, ty) = (w * test.v, w * test.dx, w * test.dy);
                for (c, trial) in b.iter().enumerate() {
                    local[0][row + c] += tx * trial.dx + ty * trial.dy;
                    local[1][row + c] += tv * trial.dx;
                    local[2][row + c] += tv * trial.dy;
                    local[3][row + c] += tv * trial.v;
                }
            }
        }
    }
}

/// ∫_{walls} u v dx on the flat reference walls ŷ = ±1/2.
fn robin_block(space: &HiModSpace) -> Vec<f64> {
    let (nl, m) = (space.fem().n_local(), space.n_modes());
    let n = nl * m;
    let mut local = vec![0.0; n * n];
    let h = space.fem().element_width();
    for (qx, &w) in space.quad().axial_reference_weights().iter().enumerate() {
        for a in 0..nl {
            for b in 0..nl {
                let tt = h * w * space.fem().value(qx, a) * space.fem().value(qx, b);
                for k in 0..m {
                    let pk = space.modes().boundary_values(k);
                    for l in 0..m {
                        let pl = space.modes().boundary_values(l);
                        local[(a * m + k) * n + b * m + l] += tt * (pk[0] * pl[0] + pk[1] * pl[1]);
                    }
                }
            }
        }
    }
    local
}

fn scatter(space: &HiModSpace, e: usize, local: &[f64], out: &mut TripletBuilder) {
    let idx = space.local_indices(e);
    let n = idx.len();
    for (r, &gi) in idx.iter().enumerate() {
        for (c, &gj) in idx.iter().enumerate() {
            let v = local[r * n + c];
            if v != 0.0 {
                out.push(gi, gj, v);
            }
        }
    }
}

/// Load vector F(v) = ∫ f v + ∫_{out} h v + ∫_{walls} l v, with `n_x × n_y` points per
/// piece of each ellipse integral.
pub fn assemble_load(space: &HiModSpace, spec: &AdrProblemSpec, n_x: usize, n_y: usize) -> Result<Vec<f64>> {
    let mut f = vec![0.0; space.dim()];
    let (nl, m) = (space.fem().n_local(), space.n_modes());
    if spec.forcing.constant != 0.0 {
        let mut b = Vec::new();
        for e in 0..space.fem().elements() {
            let idx = space.local_indices(e);
            for qx in 0..space.n_axial_nodes() {
                for qy in 0..space.n_transverse_nodes() {
                    let node = *space.node(e, qx, qy);
                    space.local_basis(&node, qx, qy, &mut b);
                    for (r, bi) in b.iter().enumerate() {
                        f[idx[r]] += spec.forcing.constant * node.weight * bi.v;
                    }
                }
            }
        }
    }
    for ellipse in &spec.forcing.ellipses {
        let g = ellipse_load(space, ellipse, n_x, n_y)?;
        crate::linalg::axpy(1.0, &g, &mut f);
    }
    if spec.outflow != 0.0 {
        let l = space.map().length();
        let jac = space.map().jacobian(l);
        let i = space.fem().outflow_dof();
        for k in 0..m {
            let s: f64 = (0..space.n_transverse_nodes())
                .map(|q| space.quad().transverse_weights()[q] * space.modes().value(k, q))
                .sum();
            f[space.index(k, i)] += spec.outflow * jac * s;
        }
    }
    if spec.lateral != 0.0 {
        let h = space.fem().element_width();
        for e in 0..space.fem().elements() {
            for (qx, &w) in space.quad().axial_reference_weights().iter().enumerate() {
                for a in 0..nl {
                    let t = h * w * space.fem().value(qx, a);
                    for k in 0..m {
                        let pk = space.modes().boundary_values(k);
                        f[space.index(k, space.fem().local_dof(e, a))] += spec.lateral * t * (pk[0] + pk[1]);
                    }
                }
            }
        }
    }
    Ok(f)
}

/// ∫_E weight · θ_i φ_k dΩ for every basis function.
///
/// The x-integral is split at element boundaries and at the ellipse tips; on each piece the
/// substitution x = a + (b − a)(1 − cos πτ)/2 removes the square-root behaviour of the chord
/// length at the tips, so plain Gauss rules converge spectrally. The y-integral runs over the
/// chord pulled back to γ̂ (clipped to the fiber) with the fiber Jacobian.
pub fn ellipse_load(space: &HiModSpace, ellipse: &Ellipse, n_x: usize, n_y: usize) -> Result<Vec<f64>> {
    let mut f = vec![0.0; space.dim()];
    let map = space.map();
    let rx = ellipse.x_radius();
    let (x0, x1) = ((ellipse.cx - rx).max(0.0), (ellipse.cx + rx).min(map.length()));
    if !(x1 > x0) {
        return Ok(f);
    }
    let gx = GaussRule::new(n_x)?;
    let gy = GaussRule::new(n_y)?;
    let fem = space.fem();
    let h = fem.element_width();
    let e0 = ((x0 / h).floor() as usize).min(fem.elements() - 1);
    let e1 = ((x1 / h).ceil() as usize).min(fem.elements());
    for e in e0..e1 {
        let (ea, eb) = space.quad().element_bounds(e);
        let (a, b) = (ea.max(x0), eb.min(x1));
        if !(b > a) {
            continue;
        }
        for (&t, &wt) in gx.nodes().iter().zip(gx.weights()) {
            let tau = 0.5 * (t + 1.0);
            let x = a + (b - a) * 0.5 * (1.0 - (PI * tau).cos());
            let dx = (b - a) * 0.5 * PI * (PI * tau).sin() * 0.5 * wt;
            let w = ellipse.half_chord(x);
            if w == 0.0 {
                continue;
            }
            let lo = map.to_reference(x, ellipse.cy - w).clamp(-0.5, 0.5);
            let hi = map.to_reference(x, ellipse.cy + w).clamp(-0.5, 0.5);
            if !(hi > lo) {
                continue;
            }
            let jac = map.jacobian(x);
            let (th, _) = fem.eval_on(e, x);
            let (ys, ws) = gy.on_interval(lo, hi);
            let mut modal = vec![0.0; space.n_modes()];
            for (&yh, &wy) in ys.iter().zip(&ws) {
                let (phi, _) = space.modes().eval_all(yh);
                for (acc, p) in modal.iter_mut().zip(&phi) {
                    *acc += wy * p;
                }
            }
            for (ai, ta) in th.iter().enumerate() {
                let i = fem.local_dof(e, ai);
                for (k, mk) in modal.iter().enumerate() {
                    f[space.index(k, i)] += ellipse.weight * dx * jac * ta * mk;
                }
            }
        }
    }
    Ok(f)
}

/// The affine system with blocks [diffusion, advection-x, advection-y, reaction, Robin]
/// and a single load term.
pub fn assemble_adr(space: &HiModSpace, spec: &AdrProblemSpec) -> Result<AffineSystem> {
    spec.validate()?;
    let dim = space.dim();
    let mut blocks: Vec<TripletBuilder> = (0..5).map(|_| TripletBuilder::new(dim, dim)).collect();
    let mut local: [Vec<f64>; 4] = Default::default();
    for e in 0..space.fem().elements() {
        volume_blocks(space, e, &mut local);
        for (q, l) in local.iter().enumerate() {
            scatter(space, e, l, &mut blocks[q]);
        }
        scatter(space, e, &robin_block(space), &mut blocks[4]);
    }
    let load = assemble_load(space, spec, ELLIPSE_AXIAL_POINTS, ELLIPSE_TRANSVERSE_POINTS)?;
    let mut blocks = blocks.into_iter();
    let mut next = || blocks.next().unwrap();
    let operators = vec![
        (spec.diffusion, next(), "diffusion".to_string()),
        (spec.advection_x, next(), "advection_x".to_string()),
        (spec.advection_y, next(), "advection_y".to_string()),
        (spec.reaction, next(), "reaction".to_string()),
        (Theta::Const(spec.robin), next(), "robin".to_string()),
    ];
    AffineSystem::new(dim, spec.n_params, operators, vec![(Theta::Const(1.0), load, "forcing".into())], inflow_dofs(space))
}

/// A(μ) assembled in one pass with the coefficients folded into the integrand, without the
/// affine split. Used to cross-check the affine decomposition.
pub fn assemble_adr_at(space: &HiModSpace, spec: &AdrProblemSpec, mu: &[f64]) -> Result<CsrMatrix> {
    spec.validate()?;
    let (nu, bx, by, sigma) = (
        spec.diffusion.eval(mu),
        spec.advection_x.eval(mu),
        spec.advection_y.eval(mu),
        spec.reaction.eval(mu),
    );
    let dim = space.dim();
    let mask = crate::affine::constraint_mask(dim, &inflow_dofs(space));
    let mut t = TripletBuilder::new(dim, dim);
    let mut b = Vec::new();
    for e in 0..space.fem().elements() {
        let idx = space.local_indices(e);
        let n = idx.len();
        let mut local = robin_block(space);
        local.iter_mut().for_each(|v| *v *= spec.robin);
        for qx in 0..space.n_axial_nodes() {
            for qy in 0..space.n_transverse_nodes() {
                let node = *space.node(e, qx, qy);
                space.local_basis(&node, qx, qy, &mut b);
                for (r, v) in b.iter().enumerate() {
                    for (c, u) in b.iter().enumerate() {
                        let integrand = nu * (u.dx * v.dx + u.dy * v.dy) + (bx * u.dx + by * u.dy) * v.v + sigma * u.v * v.v;
                        local[r * n + c] += node.weight * integrand;
                    }
                }
            }
        }
        for (r, &gi) in idx.iter().enumerate() {
            for (c, &gj) in idx.iter().enumerate() {
                if !mask[gi] && !mask[gj] {
                    t.push(gi, gj, local[r * n + c]);
                }
            }
        }
    }
    for (i, &c) in mask.iter().enumerate() {
        if c {
            t.push(i, i, 1.0);
        }
    }
    Ok(t.build())
}
