use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use super::*;
use crate::quadrature::loglog_slope;

fn xi_grid() -> Grid {
    Grid::centered(1, 256, &[0.0], 12.0).unwrap()
}

fn test_shape() -> ShapeFunction {
    ShapeFunction::gaussian(&xi_grid(), &[0.2], 1.1, &[0.3])
}

fn harmonic_map() -> PointMap {
    Arc::new(|a: &[f64]| {
        let t = a[0];
        PacketPoint { s: t / 2.0 - (2.0 * t).sin() / 4.0, q: vec![t.cos()], p: vec![-t.sin()] }
    })
}

fn window(a: f64) -> f64 {
    (-10.0 * (1.0 + a.cos())).exp()
}

fn harmonic_packet(map: PointMap, n_alpha: usize) -> ComposedPacket {
    let axes = vec![ParamAxis { lo: 0.0, hi: 2.0 * PI, n: n_alpha, periodic: true }];
    let manifold = IsotropicManifold::new(axes, 1, map).unwrap();
    let g = ShapeFunction::coherent(1, 256, 12.0).unwrap();
    let fiber: FiberMap = Arc::new(move |a: &[f64]| g.scale(C64::new(window(a[0]), 0.0)));
    ComposedPacket { manifold, fiber }
}

/// ∫₀^{2π} e^{−20(1+cos α)} dα = 2π e^{−20} I₀(20), I₀ by its power series.
fn window_sq_integral() -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= 100.0 / (k * k) as f64;
        sum += term;
    }
    2.0 * PI * (-20.0f64).exp() * sum
}

#[test]
fn k_lambda_is_an_isometry() {
    let f = test_shape();
    let x = PacketPoint::new(0.4, vec![0.3], vec![0.8]).unwrap();
    for lam in [1.0f64, 0.01] {
        let sl: f64 = lam.sqrt();
        let xg = Grid::new(1, 512, vec![0.3 - 12.0 * sl], 24.0 * sl / 512.0).unwrap();
        let w = k_lambda(&x, &f, lam, &xg).unwrap();
        assert!((w.norm() - f.norm()).abs() < 1e-12, "λ={lam}: {} vs {}", w.norm(), f.norm());
    }
}

#[test]
fn k_lambda_rejects_small_window() {
    let f = test_shape();
    let x = PacketPoint::new(0.0, vec![0.0], vec![0.0]).unwrap();
    let xg = Grid::centered(1, 64, &[0.0], 1.0).unwrap();
    assert!(k_lambda(&x, &f, 1.0, &xg).is_err());
}

#[test]
fn frame_transfer_matches_direct_packet() {
    let f = test_shape();
    let x = PacketPoint::new(0.1, vec![0.2], vec![0.5]).unwrap();
    let xp = PacketPoint::new(0.25, vec![0.35], vec![0.3]).unwrap();
    let lam = 0.05;
    let xg = Grid::centered(1, 1024, &[0.25], 4.0).unwrap();
    let lhs = k_lambda(&xp, &f, lam, &xg).unwrap();
    let w = frame_transfer(&x, &xp, &f, lam);
    let rhs = k_lambda(&x, &w, lam, &xg).unwrap();
    assert!(lhs.distance(&rhs).unwrap() < 1e-9 * lhs.norm());
}

#[test]
fn derivative_identity_is_second_order_and_lambda_independent() {
    let f = test_shape();
    let x = PacketPoint::new(0.3, vec![0.5], vec![0.7]).unwrap();
    for c in Component::all(1) {
        let at = |lam: f64, h: f64| derivative_identity_residual(&x, &f, lam, c, h).unwrap();
        let rs: Vec<f64> = [1.0, 1e-1, 1e-2, 1e-3, 1e-4].iter().map(|l| at(*l, 1e-4)).collect();
        let (lo, hi) = rs.iter().fold((f64::MAX, 0.0f64), |(a, b), r| (a.min(*r), b.max(*r)));
        assert!(hi <= 1e-6, "{c:?} {rs:?}");
        assert!(hi <= 4.0 * lo, "{c:?} not uniform in λ: {rs:?}");
        assert!((rs[3] - rs[4]).abs() <= 0.1 * rs[4], "{c:?} no small-λ limit: {rs:?}");
        let ratio = at(1e-2, 1e-3) / at(1e-2, 1e-4);
        assert!((80.0..120.0).contains(&ratio), "{c:?} order ratio {ratio}");
    }
    assert!(derivative_identity_residual(&x, &f, 0.1, Component::S, 1e-9).is_err());
}

#[test]
fn operator_form_commutator_sign() {
    let f = test_shape();
    let (sign, best, other) = omega_commutator_sign(&f).unwrap();
    assert_eq!(sign, -1.0);
    assert!(best <= 1e-8, "{best}");
    assert!(other > 1.0);
    let g = ShapeFunction::gaussian(&Grid::centered(2, 64, &[0.0, 0.0], 10.0).unwrap(), &[0.1, -0.2], 1.0, &[0.2, 0.1]);
    for i in Component::all(2) {
        for j in Component::all(2) {
            assert!(omega_commutator_residual(&g, i, j, -1.0).unwrap() <= 1e-8, "{i:?} {j:?}");
        }
    }
}

#[test]
fn harmonic_orbit_is_isotropic() {
    let cp = harmonic_packet(harmonic_map(), 64);
    assert!(cp.manifold.isotropy_residual() < 1e-10);
}

#[test]
fn harmonic_orbit_limit_matches_closed_form() {
    let cp = harmonic_packet(harmonic_map(), 64);
    let lam = 0.01;
    let r = inner_composed(&cp, &cp, lam, &ComposedQuadrature::default()).unwrap();
    let pref = c_lambda(1, 1, lam).powi(2) * lam.powf(1.0);
    let exact = pref * 2.0 * PI.sqrt() * window_sq_integral();
    assert!((r.asymptotic().re - exact).abs() < 1e-8 * exact, "{} vs {exact}", r.asymptotic().re);
    assert!(r.asymptotic().im.abs() < 1e-8 * exact);
}

#[test]
fn composed_wave_norm_matches_direct_inner() {
    let cp = harmonic_packet(harmonic_map(), 256);
    let lam = 0.05;
    let xg = Grid::centered(1, 512, &[0.0], 3.5).unwrap();
    let psi = compose_packet(&cp, lam, &xg, 1e-6).unwrap();
    let mut cp64 = cp.clone();
    cp64.manifold.axes[0].n = 64;
    let r = inner_composed(&cp64, &cp64, lam, &ComposedQuadrature::default()).unwrap();
    let rel = (psi.norm_sqr() - r.direct().re).abs() / r.direct().re;
    assert!(rel < 1e-6, "grid {} direct {} rel {rel}", psi.norm_sqr(), r.direct().re);
}

#[test]
fn composed_inner_converges_as_lambda_decreases() {
    let cp = harmonic_packet(harmonic_map(), 64);
    let lams = [1e-1, 1e-2, 1e-3, 1e-4];
    let errs: Vec<f64> = inner_composed_sweep(&cp, &cp, &lams, &ComposedQuadrature::default())
        .unwrap()
        .iter()
        .map(|r| r.relative_error)
        .collect();
    for w in errs.windows(2) {
        assert!(w[1] < w[0], "{errs:?}");
    }
    assert!(loglog_slope(&lams, &errs).unwrap() >= 0.45, "{errs:?}");
}

#[test]
fn non_isotropic_manifold_loses_norm() {
    let base = harmonic_map();
    let tilted: PointMap = Arc::new(move |a: &[f64]| {
        let mut x = base(a);
        x.s += 0.5 * a[0];
        x
    });
    let cp = harmonic_packet(tilted, 64);
    assert!(cp.manifold.isotropy_residual() > 0.4);
    let iso = harmonic_packet(harmonic_map(), 64);
    let lams = [0.2, 0.1, 0.05, 0.025];
    let q = ComposedQuadrature::default();
    let tilted = inner_composed_sweep(&cp, &cp, &lams, &q).unwrap();
    let flat = inner_composed_sweep(&iso, &iso, &lams, &q).unwrap();
    let ratios: Vec<f64> = tilted.iter().zip(&flat).map(|(a, b)| a.direct().norm() / b.direct().norm()).collect();
    assert!(loglog_slope(&lams, &ratios).unwrap() > 2.0, "{ratios:?}");
}

fn line_manifold(map: PointMap) -> ComposedPacket {
    let axes = vec![ParamAxis { lo: -1.0, hi: 1.0, n: 8, periodic: false }];
    let manifold = IsotropicManifold::new(axes, 1, map).unwrap();
    let g = ShapeFunction::coherent(1, 256, 12.0).unwrap();
    ComposedPacket { manifold, fiber: Arc::new(move |_| g.clone()) }
}

#[test]
fn fiber_projection_of_q_line_is_constant() {
    let cp = line_manifold(Arc::new(|a: &[f64]| PacketPoint { s: 0.0, q: vec![a[0]], p: vec![0.0] }));
    let f = project_fiber(&cp, &[0.0], 1e-10).unwrap();
    let c = PI.powf(-0.25) * (2.0 * PI).sqrt();
    let dev = f.values.iter().map(|v| (v - c).norm()).fold(0.0, f64::max);
    assert!(dev < 1e-6, "{dev}");
}

#[test]
fn fiber_projection_rejects_pure_modulation() {
    let cp = line_manifold(Arc::new(|a: &[f64]| PacketPoint { s: 0.0, q: vec![0.0], p: vec![a[0]] }));
    assert!(project_fiber(&cp, &[0.0], 1e-10).is_err());
}

#[test]
fn gauge_transform_leaves_projection_unchanged() {
    let cp = line_manifold(Arc::new(|a: &[f64]| PacketPoint { s: 0.0, q: vec![a[0]], p: vec![0.3 * a[0]] }));
    let chi = ShapeFunction::gaussian(&xi_grid(), &[0.5], 0.8, &[0.4]);
    let gauged = gauge_transform(&cp, Arc::new(move |_| vec![chi.clone()]));
    let f0 = project_fiber(&cp, &[0.1], 1e-10).unwrap();
    let f1 = project_fiber(&gauged, &[0.1], 1e-10).unwrap();
    assert!(f0.distance(&f1).unwrap() < 1e-6 * f0.norm());
}

#[test]
fn expansion_along_straight_q_shift_is_exact() {
    let m = IsotropicManifold::new(
        vec![ParamAxis { lo: -1.0, hi: 1.0, n: 8, periodic: false }],
        1,
        Arc::new(|a: &[f64]| PacketPoint { s: 0.0, q: vec![a[0]], p: vec![0.0] }),
    )
    .unwrap();
    let r = expansion_check(&m, &[0.0], &test_shape(), &[0.7], &[1e-1, 1e-2, 1e-3, 1e-4]).unwrap();
    assert!(r.exact && r.slope.is_none(), "{:?}", r.errors);
}

#[test]
fn expansion_error_vanishes_like_sqrt_lambda() {
    let lams = [1e-1, 1e-2, 1e-3, 1e-4];
    let curved = IsotropicManifold::new(
        vec![ParamAxis { lo: -1.0, hi: 1.0, n: 8, periodic: false }],
        1,
        Arc::new(|a: &[f64]| PacketPoint { s: 0.0, q: vec![a[0] + 0.3 * a[0] * a[0]], p: vec![0.0] }),
    )
    .unwrap();
    let g = ShapeFunction::coherent(1, 256, 12.0).unwrap();
    let r = expansion_check(&curved, &[0.2], &g, &[0.9], &lams).unwrap();
    assert!(r.slope.unwrap() >= 0.45, "{:?}", r.errors);
    let zero = expansion_check(&curved, &[0.2], &g, &[0.0], &lams).unwrap();
    assert!(zero.exact);
    let orbit = harmonic_packet(harmonic_map(), 64).manifold;
    for beta in [0.6, -1.3] {
        let r = expansion_check(&orbit, &[1.1], &g, &[beta], &lams).unwrap();
        assert!(r.slope.unwrap() >= 0.45, "{:?}", r.errors);
    }
    assert!(expansion_check(&curved, &[0.2], &g, &[0.9], &lams[..2]).is_err());
}

#[test]
fn splitstep_harmonic_center_follows_classical_orbit() {
    let pot = Potential::anharmonic(1, 0.0);
    let lam = 0.01;
    let x0 = PacketPoint::new(0.0, vec![1.0], vec![0.0]).unwrap();
    let xg = Grid::centered(1, 512, &[0.0], 2.2).unwrap();
    let psi0 = k_lambda(&x0, &ShapeFunction::coherent(1, 256, 12.0).unwrap(), lam, &xg).unwrap();
    let psi = splitstep_evolve(&psi0, &pot, 1.0, 1e-4).unwrap();
    assert!((psi.mean_position(0) - 1f64.cos()).abs() < 1e-6);
    assert!((psi.mean_momentum(0) + 1f64.sin()).abs() < 1e-6);
    assert!((psi.norm() - psi0.norm()).abs() < 1e-10);
}

#[test]
fn splitstep_free_motion() {
    let pot = Potential::new(1, vec![]).unwrap();
    let lam = 0.02;
    let x0 = PacketPoint::new(0.0, vec![-0.5], vec![0.8]).unwrap();
    let xg = Grid::centered(1, 512, &[0.0], 3.0).unwrap();
    let psi0 = k_lambda(&x0, &ShapeFunction::coherent(1, 256, 12.0).unwrap(), lam, &xg).unwrap();
    let psi = splitstep_evolve(&psi0, &pot, 1.0, 1e-2).unwrap();
    assert!((psi.mean_position(0) - 0.3).abs() < 1e-8);
    assert!((psi.mean_momentum(0) - 0.8).abs() < 1e-8);
}

#[test]
fn splitstep_rejects_unresolved_wave() {
    let lam = 0.01;
    let x0 = PacketPoint::new(0.0, vec![0.0], vec![3.0]).unwrap();
    let xg = Grid::centered(1, 128, &[0.0], 2.0).unwrap();
    let psi0 = k_lambda(&x0, &ShapeFunction::coherent(1, 256, 12.0).unwrap(), lam, &xg).unwrap();
    assert!(splitstep_evolve(&psi0, &Potential::anharmonic(1, 0.0), 0.1, 1e-3).is_err());
}

#[test]
fn comoving_fiber_reproduces_lab_frame() {
    let pot = Potential::anharmonic(1, 0.2);
    let lam = 0.05;
    let x0 = PacketPoint::new(0.0, vec![1.0], vec![0.0]).unwrap();
    let f0 = ShapeFunction::coherent(1, 256, 12.0).unwrap();
    let (t, dt) = (0.5, 1e-4);
    let (xt, ft) = comoving_evolve(&f0, &x0, &pot, lam, t, dt, FiberDynamics::Exact).unwrap();
    let xg = Grid::centered(1, 1024, &[0.0], 4.0).unwrap();
    let lab = splitstep_evolve(&k_lambda(&x0, &f0, lam, &xg).unwrap(), &pot, t, dt).unwrap();
    let co = k_lambda(&xt, &ft, lam, &xg).unwrap();
    let d = lab.distance(&co).unwrap();
    assert!(d < 1e-6, "{d}");
}

#[test]
fn wkb_error_vanishes_like_sqrt_lambda() {
    let pot = Potential::anharmonic(1, 0.2);
    let x0 = PacketPoint::new(0.0, vec![1.0], vec![0.0]).unwrap();
    let f0 = ShapeFunction::coherent(1, 256, 12.0).unwrap();
    let r = wkb_error_sweep(&f0, &x0, &pot, &[1e-1, 1e-2, 1e-3, 1e-4], 1.0, 1e-3).unwrap();
    assert!(r.slope.unwrap() >= 0.45, "{:?}", r.errors);
}

#[test]
fn potential_derivatives_match_differences() {
    let pot = Potential::new(2, vec![(0.5, [2, 0]), (0.3, [1, 1]), (0.2, [3, 1]), (-0.1, [0, 4])]).unwrap();
    let x = [0.4, -0.7];
    let h = 1e-5;
    let g = pot.grad(&x);
    let hs = pot.hessian(&x);
    for a in 0..2 {
        let mut xp = x;
        let mut xm = x;
        xp[a] += h;
        xm[a] -= h;
        assert!((g[a] - (pot.value(&xp) - pot.value(&xm)) / (2.0 * h)).abs() < 1e-8);
        for b in 0..2 {
            let d = (pot.grad(&xp)[b] - pot.grad(&xm)[b]) / (2.0 * h);
            assert!((hs[a][b] - d).abs() < 1e-8);
        }
    }
    assert!(Potential::new(1, vec![(1.0, [5, 0])]).is_err());
}

