//! Independent oracles shared by the integration tests.
//!
//! Nothing here reuses the library's assembly loops: fields and gradients are summed by
//! brute force at freshly generated quadrature points, and the ellipse loads use an angular
//! parametrization instead of the library's cosine substitution.
#![allow(dead_code)]

use himod::adr::{AdrProblemSpec, Ellipse};
use himod::geometry::GaussRule;
use himod::space::HiModSpace;
use himod::stokes::{StokesProblemSpec, StokesSpace};

pub const D2: [(f64, f64); 4] = [(1.0, 10.0), (15.0, 25.0), (70.0, 80.0), (20.0, 30.0)];
pub const D1: [(f64, f64); 4] = [(1.0, 100.0); 4];

/// Value and physical gradient of every local basis function of element `e` at (x, ŷ),
/// ordered `[a * m + k]`, together with the global indices and the area element factor.
pub struct PointBasis {
    pub idx: Vec<usize>,
    pub v: Vec<f64>,
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
}

pub fn point_basis(space: &HiModSpace, e: usize, x: f64, y_hat: f64) -> (PointBasis, f64) {
    let p = space.map().eval(x, y_hat).unwrap();
    let (th, dth) = space.fem().eval_on(e, x);
    let (phi, dphi) = space.modes().eval_all(y_hat);
    let mut out = PointBasis { idx: vec![], v: vec![], dx: vec![], dy: vec![] };
    for a in 0..th.len() {
        for k in 0..phi.len() {
            out.idx.push(space.index(k, space.fem().local_dof(e, a)));
            out.v.push(th[a] * phi[k]);
            out.dx.push(dth[a] * phi[k] + th[a] * dphi[k] * p.dpsi_dx);
            out.dy.push(th[a] * dphi[k] * p.dpsi_dy);
        }
    }
    (out, p.jacobian)
}

/// Tensor points (e, x, ŷ, weight·J) with `nx` Gauss points per element and `ny` on γ̂.
pub fn tensor_points(space: &HiModSpace, nx: usize, ny: usize) -> Vec<(usize, f64, f64, f64)> {
    let gx = GaussRule::new(nx).unwrap();
    let gy = GaussRule::new(ny).unwrap();
    let (ys, wys) = gy.on_interval(-0.5, 0.5);
    let mut pts = vec![];
    let h = space.map().length() / space.fem().elements() as f64;
    for e in 0..space.fem().elements() {
        let (xs, wxs) = gx.on_interval(e as f64 * h, (e + 1) as f64 * h);
        for (&x, &wx) in xs.iter().zip(&wxs) {
            for (&y, &wy) in ys.iter().zip(&wys) {
                pts.push((e, x, y, wx * wy * space.map().jacobian(x)));
            }
        }
    }
    pts
}

/// ∫_E weight θ_i φ_k dΩ via x = c_x + r_x sin s, which makes the chord r_y cos s smooth.
pub fn ellipse_load_angular(space: &HiModSpace, el: &Ellipse, n: usize) -> Vec<f64> {
    let mut f = vec![0.0; space.dim()];
    let rx = (el.r / el.ax).sqrt();
    let ry = (el.r / el.ay).sqrt();
    let h = space.map().length() / space.fem().elements() as f64;
    let mut cuts = vec![-std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2];
    for b in 0..=space.fem().elements() {
        let xb = b as f64 * h;
        let t = (xb - el.cx) / rx;
        if t.abs() < 1.0 {
            cuts.push(t.asin());
        }
    }
    cuts.sort_by(f64::total_cmp);
    let g = GaussRule::new(n).unwrap();
    for w in cuts.windows(2) {
        let (s0, s1) = (w[0], w[1]);
        if s1 - s0 < 1e-15 {
            continue;
        }
        let xm = el.cx + rx * (0.5 * (s0 + s1)).sin();
        let e = ((xm / h).floor() as usize).min(space.fem().elements() - 1);
        let (ss, ws) = g.on_interval(s0, s1);
        for (&s, &wsi) in ss.iter().zip(&ws) {
            let x = el.cx + rx * s.sin();
            let dxds = rx * s.cos();
            let half = ry * s.cos();
            let lo = space.map().to_reference(x, el.cy - half).clamp(-0.5, 0.5);
            let hi = space.map().to_reference(x, el.cy + half).clamp(-0.5, 0.5);
            let (ys, wys) = g.on_interval(lo, hi);
            let jac = space.map().jacobian(x);
            for (&y, &wy) in ys.iter().zip(&wys) {
                let (pb, _) = point_basis(space, e, x, y);
                for (r, &gi) in pb.idx.iter().enumerate() {
                    f[gi] += el.weight * wsi * dxds * wy * jac * pb.v[r];
                }
            }
        }
    }
    f
}

/// max over unconstrained test functions of |a(u, v) − F(v)| for the ADR problem, with
/// everything integrated at `factor` times the library's default resolution.
pub fn adr_galerkin_residual(space: &HiModSpace, spec: &AdrProblemSpec, mu: &[f64], u: &[f64], factor: usize) -> f64 {
    let nx = space.n_axial_nodes() * factor;
    let ny = space.n_transverse_nodes() * factor;
    let (nu, bx, by, sigma) = (spec.diffusion.eval(mu), spec.advection_x.eval(mu), spec.advection_y.eval(mu), spec.reaction.eval(mu));
    let mut res = vec![0.0; space.dim()];
    for (e, x, y, w) in tensor_points(space, nx, ny) {
        let (pb, _) = point_basis(space, e, x, y);
        let (mut uv, mut ux, mut uy) = (0.0, 0.0, 0.0);
        for (r, &gi) in pb.idx.iter().enumerate() {
            uv += u[gi] * pb.v[r];
            ux += u[gi] * pb.dx[r];
            uy += u[gi] * pb.dy[r];
        }
        let adv = bx * ux + by * uy;
        for (r, &gi) in pb.idx.iter().enumerate() {
            res[gi] += w * (nu * (ux * pb.dx[r] + uy * pb.dy[r]) + adv * pb.v[r] + sigma * uv * pb.v[r]);
        }
    }
    // Robin term on the flat walls, plain Gauss in x.
    let gx = GaussRule::new(nx).unwrap();
    let h = space.map().length() / space.fem().elements() as f64;
    for e in 0..space.fem().elements() {
        let (xs, ws) = gx.on_interval(e as f64 * h, (e + 1) as f64 * h);
        for (&x, &wx) in xs.iter().zip(&ws) {
            for yw in [-0.5, 0.5] {
                let (pb, _) = point_basis(space, e, x, yw);
                let uv: f64 = pb.idx.iter().enumerate().map(|(r, &gi)| u[gi] * pb.v[r]).sum();
                for (r, &gi) in pb.idx.iter().enumerate() {
                    res[gi] += wx * spec.robin * uv * pb.v[r];
                }
            }
        }
    }
    for el in &spec.forcing.ellipses {
        let f = ellipse_load_angular(space, el, 2 * 12 * factor);
        for (r, fi) in res.iter_mut().zip(&f) {
            *r -= fi;
        }
    }
    assert_eq!(spec.forcing.constant, 0.0, "oracle covers ellipse forcing only");
    let inflow: Vec<usize> = (0..space.n_modes()).map(|k| space.index(k, 0)).collect();
    res.iter()
        .enumerate()
        .filter(|(i, _)| !inflow.contains(i))
        .map(|(_, r)| r.abs())
        .fold(0.0, f64::max)
}

/// (max momentum residual, max continuity residual) for the Stokes problem under
/// `factor`-refined quadrature. Momentum rows of eliminated DOFs are skipped.
pub fn stokes_galerkin_residual(
    space: &StokesSpace,
    spec: &StokesProblemSpec,
    mu: &[f64],
    u: &[f64],
    p: &[f64],
    factor: usize,
) -> (f64, f64) {
    let vel = space.velocity();
    let pre = space.pressure();
    let nv = vel.dim();
    let nx = vel.n_axial_nodes() * factor;
    let ny = vel.n_transverse_nodes() * factor;
    let nu = spec.viscosity.eval(mu);
    let (fx, fy) = (spec.force_x.eval(mu), spec.force_y.eval(mu));
    let (cin, cout) = (spec.c_in.eval(mu), spec.c_out.eval(mu));
    let mut mom = vec![0.0; 2 * nv];
    let mut cont = vec![0.0; pre.dim()];
    for (e, x, y, w) in tensor_points(vel, nx, ny) {
        let (vb, _) = point_basis(vel, e, x, y);
        let (pb, _) = point_basis(pre, e, x, y);
        // ∇u as g[c][d] = ∂_d u_c
        let mut g = [[0.0; 2]; 2];
        for c in 0..2 {
            for (r, &gi) in vb.idx.iter().enumerate() {
                g[c][0] += u[c * nv + gi] * vb.dx[r];
                g[c][1] += u[c * nv + gi] * vb.dy[r];
            }
        }
        let pv: f64 = pb.idx.iter().enumerate().map(|(r, &gi)| p[gi] * pb.v[r]).sum();
        let div = g[0][0] + g[1][1];
        // 2D(u) = ∇u + ∇uᵀ
        let strain = [[2.0 * g[0][0], g[0][1] + g[1][0]], [g[1][0] + g[0][1], 2.0 * g[1][1]]];
        for (r, &gi) in vb.idx.iter().enumerate() {
            let grad = [vb.dx[r], vb.dy[r]];
            for d in 0..2 {
                let a = nu * (strain[d][0] * grad[0] + strain[d][1] * grad[1]);
                let b = grad[d] * pv;
                let f = if d == 0 { fx } else { fy } * vb.v[r];
                mom[d * nv + gi] += w * (a + b - f);
            }
        }
        for (r, &gi) in pb.idx.iter().enumerate() {
            cont[gi] += w * div * pb.v[r];
        }
    }
    // Boundary functional C n·v on the inflow (n = −e_x, C = −C_in) and outflow fibers.
    let g = GaussRule::new(ny).unwrap();
    let (ys, ws) = g.on_interval(-0.5, 0.5);
    let l = vel.map().length();
    let last = vel.fem().elements() - 1;
    for (x, e, data) in [(0.0, 0, cin), (l, last, cout)] {
        let jac = vel.map().jacobian(x);
        for (&y, &wy) in ys.iter().zip(&ws) {
            let (vb, _) = point_basis(vel, e, x, y);
            for (r, &gi) in vb.idx.iter().enumerate() {
                mom[gi] -= data * wy * jac * vb.v[r];
            }
        }
    }
    let constrained = space.constrained_velocity();
    let m = mom
        .iter()
        .enumerate()
        .filter(|(i, _)| !constrained.contains(i))
        .map(|(_, r)| r.abs())
        .fold(0.0, f64::max);
    let c = cont.iter().map(|r| r.abs()).fold(0.0, f64::max);
    (m, c)
}

pub fn random_mu(rng: &mut impl rand::Rng, domain: &[(f64, f64)]) -> Vec<f64> {
    domain.iter().map(|&(a, b)| if a == b { a } else { rng.gen_range(a..b) }).collect()
}
