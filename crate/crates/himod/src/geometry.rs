//! Fiber-bundle domains Ω = {(x, y) : x ∈ (0, L), ψ_x(y) ∈ (−1/2, 1/2)} and the tensor
//! quadrature used by every assembly loop.
//!
//! All maps here have the form y = h(x)·ŷ + g(x), so ψ_x(y) = (y − g(x)) / h(x) and the
//! fiber Jacobian dy/dŷ is h(x).

use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum MapKind {
    Identity,
    /// ψ_x(y) = y − A·sin(ωx + φ): the fiber is shifted, not stretched.
    SinusoidalAdditive { amplitude: f64, frequency: f64, phase: f64 },
    /// ψ_x(y) = y / (1 + A·(2/H)·sin(ωx + φ)): the fiber is stretched about ŷ = 0.
    SinusoidalMultiplicative { amplitude: f64, frequency: f64, phase: f64, height: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct DomainMap {
    length: f64,
    kind: MapKind,
}

/// Physical data at a reference point (x, ŷ).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MapPoint {
    pub y: f64,
    pub dpsi_dx: f64,
    pub dpsi_dy: f64,
    /// dy/dŷ = 1 / (∂ψ/∂y); multiplies dŷ in every area integral.
    pub jacobian: f64,
}

impl DomainMap {
    pub fn new(length: f64, kind: MapKind) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::Geometry(format!("axial length must be positive, got {length}")));
        }
        let map = DomainMap { length, kind };
        // Dense scan for a vanishing fiber width; quadrature nodes are re-checked at assembly.
        for i in 0..=4096 {
            let x = length * i as f64 / 4096.0;
            let (h, _) = map.width(x);
            if !(h > 0.0) {
                return Err(Error::Geometry(format!("fiber width {h} ≤ 0 at x = {x}")));
            }
        }
        Ok(map)
    }

    pub fn identity(length: f64) -> Result<Self> {
        Self::new(length, MapKind::Identity)
    }

    /// ψ_x(y) = y − A sin(3πx/(2L)), the ADR benchmark channel.
    pub fn adr_benchmark(length: f64, amplitude: f64) -> Result<Self> {
        Self::new(
            length,
            MapKind::SinusoidalAdditive { amplitude, frequency: 3.0 * PI / (2.0 * length), phase: 0.0 },
        )
    }

    /// ψ_x(y) = y / (1 + (2/5)(2/H) sin(6πx/L + π/2)), the Stokes benchmark channel.
    pub fn stokes_benchmark(length: f64, height: f64) -> Result<Self> {
        Self::new(
            length,
            MapKind::SinusoidalMultiplicative {
                amplitude: 0.4,
                frequency: 6.0 * PI / length,
                phase: PI / 2.0,
                height,
            },
        )
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn kind(&self) -> &MapKind {
        &self.kind
    }

    /// (g, g′)
    fn offset(&self, x: f64) -> (f64, f64) {
        match self.kind {
            MapKind::SinusoidalAdditive { amplitude, frequency, phase } => (
                amplitude * (frequency * x + phase).sin(),
                amplitude * frequency * (frequency * x + phase).cos(),
            ),
            _ => (0.0, 0.0),
        }
    }

    /// (h, h′)
    fn width(&self, x: f64) -> (f64, f64) {
        match self.kind {
            MapKind::SinusoidalMultiplicative { amplitude, frequency, phase, height } => {
                let a = amplitude * 2.0 / height;
                (
                    1.0 + a * (frequency * x + phase).sin(),
                    a * frequency * (frequency * x + phase).cos(),
                )
            }
            _ => (1.0, 0.0),
        }
    }

    /// Fiber Jacobian dy/dŷ at x.
    pub fn jacobian(&self, x: f64) -> f64 {
        self.width(x).0
    }

    /// Maps the reference point (x, ŷ) to the physical fiber and returns ψ's partial derivatives there.
    pub fn eval(&self, x: f64, y_hat: f64) -> Result<MapPoint> {
        let (g, dg) = self.offset(x);
        let (h, dh) = self.width(x);
        if !(h > 0.0) {
            return Err(Error::Geometry(format!("map not invertible at x = {x}: ∂ψ/∂y = {}", 1.0 / h)));
        }
        Ok(MapPoint {
            y: h * y_hat + g,
            dpsi_dx: -(dg + y_hat * dh) / h,
            dpsi_dy: 1.0 / h,
            jacobian: h,
        })
    }

    /// ψ_x(y); the caller decides whether a result outside [−1/2, 1/2] is an error.
    pub fn to_reference(&self, x: f64, y: f64) -> f64 {
        let (g, _) = self.offset(x);
        let (h, _) = self.width(x);
        (y - g) / h
    }

    /// Checks ∂ψ/∂y > 0 on every tensor node of `quad`.
    pub fn check_on(&self, quad: &QuadratureGrid) -> Result<()> {
        for e in 0..quad.elements() {
            for (x, _) in quad.axial_points(e) {
                for &yh in quad.transverse_nodes() {
                    let p = self.eval(x, yh)?;
                    if !(p.dpsi_dy > 0.0) {
                        return Err(Error::Geometry(format!("∂ψ/∂y = {} at ({x}, {yh})", p.dpsi_dy)));
                    }
                }
            }
        }
        Ok(())
    }
}

/// n-point Gauss-Legendre rule on [−1, 1], exact for degree 2n − 1.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("quadrature order must be at least 1".into()));
        }
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut t = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, t);
                dp = d;
                let dt = p / d;
                t -= dt;
                if dt.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, t);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - t * t) * dp * dp);
            nodes[i] = -t;
            nodes[n - 1 - i] = t;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Ok(GaussRule { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn degree(&self) -> usize {
        2 * self.nodes.len() - 1
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights affinely mapped to [a, b].
    pub fn on_interval(&self, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
        let (c, r) = ((a + b) / 2.0, (b - a) / 2.0);
        (
            self.nodes.iter().map(|t| c + r * t).collect(),
            self.weights.iter().map(|w| r * w).collect(),
        )
    }
}

/// (P_n(t), P_n′(t)) by the three-term recurrence.
fn legendre_with_derivative(n: usize, t: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, t);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * t * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (t * p1 - p0) / (t * t - 1.0);
    (p1, d)
}

/// Per-element axial Gauss rule on a uniform mesh of (0, L) paired with one transverse rule on γ̂.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureGrid {
    length: f64,
    elements: usize,
    /// Reference nodes on [0, 1] and weights summing to 1.
    axial_nodes: Vec<f64>,
    axial_weights: Vec<f64>,
    transverse_nodes: Vec<f64>,
    transverse_weights: Vec<f64>,
}

pub const DEFAULT_AXIAL_ORDER: usize = 4;
pub const DEFAULT_TRANSVERSE_ORDER: usize = 32;

impl QuadratureGrid {
    pub fn new(length: f64, elements: usize, order_axial: usize, order_transverse: usize) -> Result<Self> {
        if elements == 0 {
            return Err(Error::Config("mesh needs at least one element".into()));
        }
        if !(length > 0.0) {
            return Err(Error::Config(format!("axial length must be positive, got {length}")));
        }
        let (axial_nodes, axial_weights) = GaussRule::new(order_axial)?.on_interval(0.0, 1.0);
        let (transverse_nodes, transverse_weights) = GaussRule::new(order_transverse)?.on_interval(-0.5, 0.5);
        Ok(QuadratureGrid { length, elements, axial_nodes, axial_weights, transverse_nodes, transverse_weights })
    }

    pub fn with_defaults(length: f64, elements: usize) -> Result<Self> {
        Self::new(length, elements, DEFAULT_AXIAL_ORDER, DEFAULT_TRANSVERSE_ORDER)
    }

    /// Same mesh, both rules with `factor` times as many points.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::new(
            self.length,
            self.elements,
            self.axial_nodes.len() * factor,
            self.transverse_nodes.len() * factor,
        )
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn elements(&self) -> usize {
        self.elements
    }

    pub fn element_width(&self) -> f64 {
        self.length / self.elements as f64
    }

    pub fn element_bounds(&self, e: usize) -> (f64, f64) {
        let h = self.element_width();
        (e as f64 * h, if e + 1 == self.elements { self.length } else { (e + 1) as f64 * h })
    }

    pub fn axial_reference_nodes(&self) -> &[f64] {
        &self.axial_nodes
    }

    pub fn axial_reference_weights(&self) -> &[f64] {
        &self.axial_weights
    }

    /// Physical (x, w) pairs on element `e`; the weights include the element width.
    pub fn axial_points(&self, e: usize) -> impl Iterator<Item = (f64, f64)> + '_ {
        let (a, _) = self.element_bounds(e);
        let h = self.element_width();
        self.axial_nodes
            .iter()
            .zip(&self.axial_weights)
            .map(move |(s, w)| (a + h * s, h * w))
    }

    pub fn transverse_nodes(&self) -> &[f64] {
        &self.transverse_nodes
    }

    pub fn transverse_weights(&self) -> &[f64] {
        &self.transverse_weights
    }

    pub fn transverse_degree(&self) -> usize {
        2 * self.transverse_nodes.len() - 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adr_map_at_inflow() {
        let map = DomainMap::adr_benchmark(4.0, 0.2).unwrap();
        let p = map.eval(0.0, 0.3).unwrap();
        assert!((p.y - 0.3).abs() < 1e-15);
        assert_eq!(p.dpsi_dy, 1.0);
    }

    #[test]
    fn identity_map() {
        let map = DomainMap::identity(2.0).unwrap();
        let p = map.eval(1.3, -0.2).unwrap();
        assert_eq!((p.y, p.dpsi_dx, p.dpsi_dy), (-0.2, 0.0, 1.0));
    }

    #[test]
    fn stokes_map_derivative_matches_finite_difference() {
        // x = 1 sits on a crest of the wall, where ∂ψ/∂x vanishes; a relative test there
        // degenerates, so the tolerance floors at 1e-6 absolute and nearby points are added.
        let map = DomainMap::stokes_benchmark(6.0, 1.0).unwrap();
        for (x, yh) in [(1.0, 0.25), (1.1, 0.25), (2.7, -0.4)] {
            let p = map.eval(x, yh).unwrap();
            let step = 1e-6;
            let fd = (map.to_reference(x + step, p.y) - map.to_reference(x - step, p.y)) / (2.0 * step);
            assert!((fd - p.dpsi_dx).abs() <= 1e-6 * p.dpsi_dx.abs().max(1.0), "{fd} vs {}", p.dpsi_dx);
            assert!((map.to_reference(x, p.y) - yh).abs() < 1e-14);
        }
    }

    #[test]
    fn collapsing_fiber_rejected() {
        let kind = MapKind::SinusoidalMultiplicative { amplitude: 0.6, frequency: 1.0, phase: 0.0, height: 1.0 };
        assert!(matches!(DomainMap::new(6.0, kind), Err(Error::Geometry(_))));
    }

    #[test]
    fn two_point_axial_nodes() {
        let q = QuadratureGrid::new(1.0, 1, 2, 2).unwrap();
        let s = 1.0 / 3f64.sqrt();
        let n = q.axial_reference_nodes();
        assert!((n[0] - (1.0 - s) / 2.0).abs() < 1e-15 && (n[1] - (1.0 + s) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn transverse_exactness() {
        let q = QuadratureGrid::new(1.0, 1, 1, 2).unwrap();
        let i: f64 = q.transverse_nodes().iter().zip(q.transverse_weights()).map(|(y, w)| w * y * y).sum();
        assert!((i - 1.0 / 12.0).abs() < 1e-16);
        let q8 = QuadratureGrid::new(1.0, 1, 1, 8).unwrap();
        let c: f64 = q8
            .transverse_nodes()
            .iter()
            .zip(q8.transverse_weights())
            .map(|(y, w)| w * (PI * y).cos().powi(2))
            .sum();
        assert!((c - 0.5).abs() < 1e-10);
    }

    #[test]
    fn zero_elements_rejected() {
        assert!(matches!(QuadratureGrid::new(1.0, 0, 4, 4), Err(Error::Config(_))));
    }

    #[test]
    fn high_order_rule_integrates_monomials() {
        for n in [1, 3, 16, 32, 64] {
            let r = GaussRule::new(n).unwrap();
            assert!(r.weights().iter().all(|&w| w > 0.0));
            for d in 0..=r.degree() {
                let num: f64 = r.nodes().iter().zip(r.weights()).map(|(t, w)| w * t.powi(d as i32)).sum();
                let exact = if d % 2 == 1 { 0.0 } else { 2.0 / (d as f64 + 1.0) };
                assert!((num - exact).abs() < 1e-13, "n={n} d={d}: {num} vs {exact}");
            }
        }
    }
}
