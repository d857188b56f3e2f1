mod common;

use common::*;
use himod::adr::{assemble_adr, assemble_adr_at, benchmark_space, AdrProblemSpec, Forcing};
use himod::bases::BoundaryTag;
use himod::geometry::{DomainMap, QuadratureGrid};
use himod::space::{HiModSpace, InnerProductMatrix, NormTag};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const QUERY: [f64; 4] = [5.0, 20.0, 75.0, 25.0];

fn benchmark() -> (HiModSpace, AdrProblemSpec) {
    let map = DomainMap::adr_benchmark(4.0, 0.2).unwrap();
    (benchmark_space(map, 80, 8, 5.0, 1.0).unwrap(), AdrProblemSpec::benchmark())
}

#[test]
fn benchmark_dimensions() {
    let (space, spec) = benchmark();
    assert_eq!(space.n_axial(), 81);
    assert_eq!(space.dim(), 648);
    let sys = assemble_adr(&space, &spec).unwrap();
    assert_eq!(sys.operators().len(), 5);
    assert_eq!(sys.dim(), 648);
}

#[test]
fn galerkin_orthogonality_against_refined_quadrature() {
    let (space, spec) = benchmark();
    let sys = assemble_adr(&space, &spec).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut mus = vec![QUERY.to_vec()];
    for _ in 0..3 {
        mus.push(random_mu(&mut rng, &D2));
    }
    for mu in mus {
        let u = sys.solve(&mu).unwrap();
        let r = adr_galerkin_residual(&space, &spec, &mu, &u, 2);
        assert!(r <= 1e-8, "residual {r:e} at {mu:?}");
    }
}

#[test]
fn affine_matches_direct_assembly() {
    let (space, spec) = benchmark();
    let sys = assemble_adr(&space, &spec).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..3 {
        let mu = random_mu(&mut rng, &D1);
        let a = sys.matrix(&mu).unwrap();
        let d = assemble_adr_at(&space, &spec, &mu).unwrap();
        let scale = d.max_abs();
        for (i, j, v) in d.iter() {
            assert!((a.get(i, j) - v).abs() <= 1e-12 * scale, "({i},{j})");
        }
        for (i, j, v) in a.iter() {
            assert!((d.get(i, j) - v).abs() <= 1e-12 * scale, "({i},{j})");
        }
    }
}

#[test]
fn solve_is_deterministic_positive_and_linear() {
    let (space, spec) = benchmark();
    let sys = assemble_adr(&space, &spec).unwrap();
    let u1 = sys.solve(&QUERY).unwrap();
    let u2 = sys.solve(&QUERY).unwrap();
    assert_eq!(u1, u2);
    let x = InnerProductMatrix::assemble(&space, NormTag::H1).unwrap();
    assert!(x.norm(&u1) > 0.0);
    let a = sys.matrix(&QUERY).unwrap();
    let f = sys.rhs(&QUERY).unwrap();
    let r: f64 = a.mul_vec(&u1).iter().zip(&f).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
    let fnorm = f.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!(r <= 1e-10 * fnorm);

    let mut doubled = spec.clone();
    for e in &mut doubled.forcing.ellipses {
        e.weight *= 2.0;
    }
    let u3 = assemble_adr(&space, &doubled).unwrap().solve(&QUERY).unwrap();
    for (a, b) in u3.iter().zip(&u1) {
        assert!((a - 2.0 * b).abs() <= 1e-12 * u1.iter().fold(0.0_f64, |m, v| m.max(v.abs())));
    }
}

#[test]
fn separable_diffusion_block_on_identity_map() {
    // With ψ = id, the diffusion block of mode pair (k, l) is δ_kl (K + (kπ)² M) for Dirichlet modes.
    let map = DomainMap::identity(2.0).unwrap();
    let quad = QuadratureGrid::new(2.0, 10, 4, 32).unwrap();
    let space = HiModSpace::new(map, quad, 1, BoundaryTag::Dirichlet, 3).unwrap();
    let mut spec = AdrProblemSpec::benchmark();
    spec.forcing = Forcing::default();
    let sys = assemble_adr(&space, &spec).unwrap();
    let a = &sys.operators()[0].matrix;
    let h = 0.2;
    for k in 0..3 {
        let lam = ((k + 1) as f64 * std::f64::consts::PI).powi(2);
        for i in 1..10 {
            let d = a.get(space.index(k, i), space.index(k, i));
            let exact = 2.0 / h + lam * 4.0 * h / 6.0;
            assert!((d - exact).abs() <= 1e-10 * exact, "k={k} i={i}: {d} vs {exact}");
            let o = a.get(space.index(k, i), space.index(k, i + 1));
            let exact_o = -1.0 / h + lam * h / 6.0;
            assert!((o - exact_o).abs() <= 1e-10 * exact.abs());
        }
        for l in 0..3 {
            if l != k {
                let v = a.get(space.index(k, 3), space.index(l, 3)); assert!(v.abs() < 1e-12 * a.max_abs(), "{k} {l} {v:e}");
            }
        }
    }
}

#[test]
fn mode_convergence_is_monotone() {
    let map = DomainMap::adr_benchmark(4.0, 0.2).unwrap();
    let spec = AdrProblemSpec::benchmark();
    let mut diffs = vec![];
    let mut prev: Option<Vec<f64>> = None;
    for m in [2, 4, 6, 8] {
        let space = benchmark_space(map.clone(), 80, m, 5.0, 1.0).unwrap();
        let u = assemble_adr(&space, &spec).unwrap().solve(&QUERY).unwrap();
        if let Some(p) = prev {
            // Modes are nested, so the coarser solution embeds by zero padding.
            let mut padded = p.clone();
            padded.resize(u.len(), 0.0);
            let x = InnerProductMatrix::assemble(&space, NormTag::H1).unwrap();
            diffs.push(x.distance(&u, &padded));
        }
        prev = Some(u);
    }
    assert!(diffs.windows(2).all(|w| w[1] < w[0]), "{diffs:?}");
}

#[test]
fn evaluate_field_matches_brute_force_sum() {
    let (space, _) = benchmark();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let c: Vec<f64> = (0..space.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let node = *space.node(17, 2, 9);
    let y = space.map().eval(node.x, node.y_hat).unwrap().y;
    let got = space.evaluate_field(&c, &[(node.x, y)]).unwrap()[0];
    let mut expect = 0.0;
    for k in 0..space.n_modes() {
        let (phi, _) = space.modes().eval(k, node.y_hat);
        for i in 0..space.n_axial() {
            let xi = space.fem().dof_coordinate(i);
            let hat = (1.0 - (node.x - xi).abs() / space.fem().element_width()).max(0.0);
            expect += c[space.index(k, i)] * hat * phi;
        }
    }
    assert!((got - expect).abs() <= 1e-12 * expect.abs().max(1.0));
}

#[test]
fn inner_products_are_spd() {
    let (space, _) = benchmark();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for tag in [NormTag::L2, NormTag::H1] {
        let x = InnerProductMatrix::assemble(&space, tag).unwrap();
        assert!(x.matrix().relative_asymmetry() <= 1e-12);
        for _ in 0..10 {
            let v: Vec<f64> = (0..space.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            assert!(x.dot(&v, &v) > 0.0);
        }
    }
}
