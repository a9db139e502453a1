use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::bogoliubov::{integrate_flow, rotation, squeeze};
use crate::fock::{displacement_matrix, FockVector, ModeBasis};
use crate::linalg::{c, CVec};

const SQRT_2PI: f64 = 2.5066282746310002;

fn real_plane(b: f64) -> IsotropicPlane {
    make_plane(vec![CVec::from_vec(vec![c(b, 0.0)])], 1.0).unwrap()
}

#[test]
fn kernel_matches_large_truncation() {
    let alpha = c(0.4, -0.3);
    let exact = single_mode_displacement(alpha, 9);
    let basis = ModeBasis::new(1, 80).unwrap();
    let big = displacement_matrix(&CVec::from_vec(vec![alpha]), &basis).unwrap();
    for m in 0..9 {
        for n in 0..9 {
            assert!((exact[m * 9 + n] - big[(m, n)]).norm() < 1e-12, "{m} {n}");
        }
    }
}

#[test]
fn kernel_is_unitary_on_low_block() {
    let alpha = c(1.5, 0.7);
    let nb = 60;
    let dm = single_mode_displacement(alpha, nb);
    for n in 0..5 {
        let col: f64 = (0..nb).map(|m| dm[m * nb + n].norm_sqr()).sum();
        assert!((col - 1.0).abs() < 1e-12);
    }
}

#[test]
fn vacuum_gives_gaussian_integral() {
    let basis = ModeBasis::new(1, 6).unwrap();
    let v = FockVector::vacuum(&basis);
    for b in [0.5, 1.0, 2.0] {
        let r = inner_constrained(&v, &v, &real_plane(b), &QuadratureOptions::default()).unwrap();
        assert!((r.value() - c(SQRT_2PI / b, 0.0)).norm() < 1e-9, "{b} {:?}", r.value);
        assert!(r.tail_bound < 1e-10);
    }
}

#[test]
fn one_quantum_is_null() {
    let basis = ModeBasis::new(1, 6).unwrap();
    let v = FockVector::number_state(&basis, &[1]).unwrap();
    let r = inner_constrained(&v, &v, &real_plane(1.0), &QuadratureOptions::default()).unwrap();
    assert!(r.value().norm() < 1e-10);
}

#[test]
fn record_serializes() {
    let basis = ModeBasis::new(1, 3).unwrap();
    let v = FockVector::vacuum(&basis);
    let r = inner_constrained(&v, &v, &real_plane(1.0), &QuadratureOptions::default()).unwrap();
    let j = serde_json::to_value(&r).unwrap();
    for key in ["k", "d", "N", "box", "order", "value", "tail_bound"] {
        assert!(j.get(key).is_some(), "{key}");
    }
}

#[test]
fn plane_validation() {
    let e1 = CVec::from_vec(vec![c(1.0, 0.0)]);
    let ie1 = CVec::from_vec(vec![c(0.0, 1.0)]);
    assert!(matches!(make_plane(vec![e1.clone(), ie1], 1.0), Err(crate::Error::NotIsotropic(_))));
    assert!(make_plane(vec![e1.clone(), e1.clone()], 1.0).is_err());
    assert!(make_plane(vec![e1.clone()], 0.0).is_err());
    let r2 = vec![CVec::from_vec(vec![c(1.0, 0.0), c(0.3, 0.0)]), CVec::from_vec(vec![c(-0.2, 0.0), c(2.0, 0.0)])];
    assert!(make_plane(r2, 1.0).is_ok());
}

#[test]
fn complex_isotropic_plane_two_modes() {
    let b1 = CVec::from_vec(vec![c(1.0, 0.0), c(0.0, 1.0)]);
    let b2 = CVec::from_vec(vec![c(0.0, 1.0), c(1.0, 0.0)]);
    let plane = make_plane(vec![b1, b2], 1.0).unwrap();
    let basis = ModeBasis::new(2, 4).unwrap();
    let v = FockVector::vacuum(&basis);
    let r = inner_constrained(&v, &v, &plane, &QuadratureOptions::default()).unwrap();
    assert!((r.value() - c(std::f64::consts::PI, 0.0)).norm() < 1e-9);
}

#[test]
fn basis_change_invariance() {
    let b1 = CVec::from_vec(vec![c(1.0, 0.2), c(0.0, 0.0)]);
    let b2 = CVec::from_vec(vec![c(0.0, 0.0), c(0.7, -0.1)]);
    let plane = make_plane(vec![b1, b2], 1.0).unwrap();
    let t = DMatrix::from_row_slice(2, 2, &[1.2, 0.3, -0.4, 0.9]);
    let plane2 = plane.change_basis(&t).unwrap();
    let basis = ModeBasis::new(2, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let y1 = FockVector::random(&basis, 3, &mut rng);
    let y2 = FockVector::random(&basis, 3, &mut rng);
    let o = QuadratureOptions::default();
    let a = inner_constrained(&y1, &y2, &plane, &o).unwrap().value();
    let b = inner_constrained(&y1, &y2, &plane2, &o).unwrap().value();
    assert!((a - b).norm() < 1e-8, "{a} {b}");
}

#[test]
fn positivity_random_vectors() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let basis = ModeBasis::new(1, 8).unwrap();
    let plane = make_plane(vec![CVec::from_vec(vec![c(0.8, 0.3)])], 1.0).unwrap();
    for _ in 0..20 {
        let y = FockVector::random(&basis, 8, &mut rng);
        let v = inner_constrained(&y, &y, &plane, &QuadratureOptions::default()).unwrap();
        assert!(v.value[0] >= -1e-10, "{:?}", v.value);
        assert!(v.value[1].abs() < 1e-9);
    }
}

#[test]
fn regularized_converges_and_matches_hermite() {
    let basis = ModeBasis::new(1, 4).unwrap();
    let v = FockVector::vacuum(&basis);
    let plane = real_plane(1.0);
    let o = QuadratureOptions::default();
    let mut last = 0.0;
    for eps in [1.0, 0.1, 0.01] {
        let r = regularized_inner(&v, &plane, eps, &o).unwrap();
        let exact = (2.0 * std::f64::consts::PI / (1.0 + 2.0 * eps)).sqrt();
        assert!((r - exact).abs() < 1e-10);
        assert!(r > last && r < SQRT_2PI);
        last = r;
        let n = if eps < 0.05 { 400 } else { 60 };
        let h = regularized_inner_hermite(&v, &plane, eps, n).unwrap();
        let tol = if eps < 0.05 { 1e-6 } else { 1e-8 };
        assert!((h - exact).abs() < tol, "{eps} {h} {exact}");
    }
    assert!(regularized_inner(&FockVector::zeros(&basis), &plane, 0.1, &o).unwrap().abs() < 1e-15);
}

#[test]
fn null_vector_pairs_to_zero() {
    let basis = ModeBasis::new(1, 6).unwrap();
    let y = FockVector::number_state(&basis, &[1]).unwrap();
    let plane = real_plane(1.0);
    let o = QuadratureOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let yy = inner_constrained(&y, &y, &plane, &o).unwrap().value().re.max(0.0);
    for _ in 0..5 {
        let yp = FockVector::random(&basis, 6, &mut rng);
        let ypp = inner_constrained(&yp, &yp, &plane, &o).unwrap().value().re.max(0.0);
        let cross = inner_constrained(&y, &yp, &plane, &o).unwrap().value().norm();
        assert!(cross <= (yy * ypp).sqrt() + 1e-8, "{cross}");
    }
}

#[test]
fn decay_profile_bounds() {
    let basis = ModeBasis::new(1, 6).unwrap();
    let v = FockVector::vacuum(&basis);
    let plane = real_plane(1.0);
    let p0 = decay_profile(&v, &v, &plane, 0).unwrap();
    assert!((p0.constant - 1.0).abs() < 1e-14);
    for m in 1..6 {
        decay_profile(&v, &v, &plane, m).unwrap();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20 {
        let y1 = FockVector::random(&basis, 4, &mut rng);
        let y2 = FockVector::random(&basis, 4, &mut rng);
        for m in 0..4 {
            decay_profile(&y1, &y2, &plane, m).unwrap();
        }
    }
}

#[test]
fn plane_evolution_closed_forms() {
    let plane = real_plane(0.9);
    let flow = integrate_flow(&rotation(0.7, 0.0), 1.3, 1e-3).unwrap();
    let p = evolve_plane(&plane, &flow).unwrap();
    assert!((p.bs[0][0] - C64::from_polar(0.9, -0.7 * 1.3)).norm() < 1e-12);
    let flow = integrate_flow(&squeeze(0.4), 1.0, 1e-3).unwrap();
    let two = make_plane(
        vec![CVec::from_vec(vec![c(1.0, 0.0)])],
        2.0,
    )
    .unwrap();
    let p = evolve_plane(&two, &flow).unwrap();
    assert!(p.isotropy_residual() <= 1e-10);
    assert_eq!(p.a, 2.0);
}

#[test]
fn evolved_two_mode_plane_stays_isotropic() {
    let b1 = CVec::from_vec(vec![c(1.0, 0.0), c(0.2, 0.0)]);
    let b2 = CVec::from_vec(vec![c(0.0, 0.0), c(1.0, 0.0)]);
    let plane = make_plane(vec![b1, b2], 1.0).unwrap();
    let flow = integrate_flow(&crate::bogoliubov::mixed_two_mode(), 2.0, 1e-3).unwrap();
    let p = evolve_plane(&plane, &flow).unwrap();
    assert!(p.isotropy_residual() < 1e-10);
}

#[test]
fn invariance_under_squeeze() {
    let basis = ModeBasis::new(1, 24).unwrap();
    let v = FockVector::vacuum(&basis);
    let plane = real_plane(1.0);
    let r = invariance_check(&v, &plane, &squeeze(0.2), 1.0, 1e-3, &QuadratureOptions::default()).unwrap();
    assert!(r.residual <= 1e-6, "{r:?}");
}

#[test]
fn invariance_under_rotation_random() {
    let basis = ModeBasis::new(1, 10).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let y = FockVector::random(&basis, 6, &mut rng);
    let plane = make_plane(vec![CVec::from_vec(vec![c(0.6, 0.5)])], 1.0).unwrap();
    let r = invariance_check(&y, &plane, &rotation(0.9, 0.3), 1.0, 1e-3, &QuadratureOptions::default()).unwrap();
    assert!(r.residual <= 1e-6, "{r:?}");
    let z = invariance_check(&y, &plane, &rotation(0.9, 0.3), 0.0, 1e-3, &QuadratureOptions::default()).unwrap();
    assert_eq!(z.residual, 0.0);
}

mod composed_states {
    use std::f64::consts::PI;
    use std::sync::Arc;

    use num_complex::Complex64 as C64;

    use super::super::*;
    use crate::fock::{FockVector, ModeBasis};
    use crate::packets::{
        c_lambda, inner_composed, ComposedPacket, ComposedQuadrature, FiberMap, IsotropicManifold, PacketPoint,
        ParamAxis, PointMap, ShapeFunction,
    };
    use crate::symmetry::{standard_phi, ClassicalSystem, GeneratorFamily, LieAlgebra, PhiFn};

    fn phi() -> PhiFn {
        Arc::new(|_x: &PacketPoint, t: &crate::packets::PacketTangent| standard_phi(t))
    }

    fn orbit(a: f64) -> PacketPoint {
        PacketPoint { s: a / 2.0 - (2.0 * a).sin() / 4.0, q: vec![a.cos()], p: vec![-a.sin()] }
    }

    fn window(a: f64) -> f64 {
        (-10.0 * (1.0 + a.cos())).exp()
    }

    fn harmonic_manifold(n: usize, map: PointMap) -> IsotropicManifold {
        IsotropicManifold::new(vec![ParamAxis { lo: 0.0, hi: 2.0 * PI, n, periodic: true }], 1, map).unwrap()
    }

    fn harmonic_state(basis: &Arc<ModeBasis>, n: usize) -> ComposedFockState {
        let m = harmonic_manifold(n, Arc::new(|a: &[f64]| orbit(a[0])));
        let b = basis.clone();
        ComposedFockState::new(&m, &move |a: &[f64]| FockVector::vacuum(&b).scale(C64::new(window(a[0]), 0.0)), &phi())
            .unwrap()
    }

    #[test]
    fn point_manifold_gives_fiber_norm() {
        let basis = ModeBasis::new(1, 6).unwrap();
        let m = IsotropicManifold::point(PacketPoint::new(0.0, vec![0.2], vec![0.1]).unwrap());
        let y = FockVector::number_state(&basis, &[2]).unwrap().scale(C64::new(0.0, 1.5));
        let yc = y.clone();
        let st = ComposedFockState::new(&m, &move |_a: &[f64]| yc.clone(), &phi()).unwrap();
        let v = composed_inner(&st, &st, &QuadratureOptions::default()).unwrap();
        assert!((v - C64::new(y.norm_sqr(), 0.0)).norm() < 1e-14);
    }

    #[test]
    fn harmonic_orbit_matches_packet_asymptotics() {
        let basis = ModeBasis::new(1, 6).unwrap();
        let st = harmonic_state(&basis, 64);
        let fock = composed_inner(&st, &st, &QuadratureOptions::default()).unwrap();
        let g = ShapeFunction::coherent(1, 256, 12.0).unwrap();
        let fiber: FiberMap = Arc::new(move |a: &[f64]| g.scale(C64::new(window(a[0]), 0.0)));
        let cp = ComposedPacket { manifold: harmonic_manifold(64, Arc::new(|a: &[f64]| orbit(a[0]))), fiber };
        let lam = 0.01;
        let r = inner_composed(&cp, &cp, lam, &ComposedQuadrature::default()).unwrap();
        let pref = c_lambda(1, 1, lam).powi(2) * lam;
        let packets = r.asymptotic() / pref;
        assert!((fock - packets).norm() <= 1e-6 * packets.norm(), "{fock} vs {packets}");
    }

    #[test]
    fn reparametrization_invariance() {
        let basis = ModeBasis::new(1, 6).unwrap();
        let a = composed_inner(&harmonic_state(&basis, 128), &harmonic_state(&basis, 128), &QuadratureOptions::default()).unwrap();
        let warp = |b: f64| b + 0.3 * b.sin();
        let m = harmonic_manifold(128, Arc::new(move |b: &[f64]| orbit(warp(b[0]))));
        let bb = basis.clone();
        let fiber = move |b: &[f64]| {
            let jac = 1.0 + 0.3 * b[0].cos();
            FockVector::vacuum(&bb).scale(C64::new(jac * window(warp(b[0])), 0.0))
        };
        let st = ComposedFockState::new(&m, &fiber, &phi()).unwrap();
        let v = composed_inner(&st, &st, &QuadratureOptions::default()).unwrap();
        assert!((v - a).norm() <= 1e-8 * a.norm(), "{v} vs {a}");
    }

    #[test]
    fn non_isotropic_manifold_rejected() {
        let axes = vec![ParamAxis { lo: -1.0, hi: 1.0, n: 4, periodic: false }; 2];
        let m = IsotropicManifold::new(axes, 1, Arc::new(|a: &[f64]| PacketPoint { s: 0.0, q: vec![a[0]], p: vec![a[1]] }))
            .unwrap();
        let basis = ModeBasis::new(1, 4).unwrap();
        let r = ComposedFockState::new(&m, &|_a: &[f64]| FockVector::vacuum(&basis), &phi());
        assert!(matches!(r, Err(crate::Error::NotIsotropic(_))));
    }

    fn transformed_norm(alg: &LieAlgebra, fam: &GeneratorFamily, coeffs: &[f64], n_max: usize, leak: f64) -> (C64, C64, f64) {
        let basis = ModeBasis::new(1, n_max).unwrap();
        let st = harmonic_state(&basis, 64);
        let sys = ClassicalSystem::hamiltonian(alg, 1e-3).unwrap();
        let g = alg.exp(coeffs);
        let tr = transform_composed(&st, &sys, fam, alg, &g, &basis, 1e-3, leak).unwrap();
        let opts = QuadratureOptions::default();
        (composed_inner(&st, &st, &opts).unwrap(), composed_inner(&tr.state, &tr.state, &opts).unwrap(), tr.subspace_distance)
    }

    #[test]
    fn identity_transform() {
        let alg = LieAlgebra::oscillator(1, 1.0);
        let fam = GeneratorFamily::weyl(&alg).unwrap();
        let basis = ModeBasis::new(1, 6).unwrap();
        let st = harmonic_state(&basis, 16);
        let sys = ClassicalSystem::hamiltonian(&alg, 1e-3).unwrap();
        let tr = transform_composed(&st, &sys, &fam, &alg, &alg.exp(&[0.0]), &basis, 1e-3, 1e-10).unwrap();
        assert!(tr.subspace_distance < 1e-14);
        for (a, b) in st.nodes.iter().zip(&tr.state.nodes) {
            assert_eq!(a.fiber.coeffs, b.fiber.coeffs);
            assert_eq!(a.point, b.point);
        }
    }

    #[test]
    fn rotation_preserves_composed_norm() {
        let alg = LieAlgebra::oscillator(1, 1.0);
        let fam = GeneratorFamily::weyl(&alg).unwrap();
        let (a, b, dist) = transformed_norm(&alg, &fam, &[0.5], 8, 1e-10);
        assert!((a - b).norm() <= 1e-6 * a.norm() && dist <= 1e-6, "{a} {b} {dist}");
        let (a, b, dist) = transformed_norm(&alg, &fam.with_scalar_offset(vec![0.7]), &[0.5], 8, 1e-10);
        assert!((a - b).norm() <= 1e-6 * a.norm() && dist <= 1e-6, "{a} {b} {dist}");
    }

    #[test]
    fn squeeze_preserves_composed_norm() {
        let alg = LieAlgebra::su11();
        let fam = GeneratorFamily::weyl(&alg).unwrap();
        // columns near the cutoff leak under squeezing; the vacuum fibers stay far below it
        let (a, b, dist) = transformed_norm(&alg, &fam, &[0.1, 0.2, 0.0], 24, 1.0);
        assert!((a - b).norm() <= 1e-6 * a.norm() && dist <= 1e-6, "{a} {b} {dist}");
    }
}
