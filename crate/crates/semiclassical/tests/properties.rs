//! Property tests for the module invariants.

use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use semiclassical::bogoliubov::{flow_invariants, integrate_flow, ConstantPath};
use semiclassical::cli::{CheckRecord, ScenarioConfig};
use semiclassical::constrained::{inner_constrained, make_plane, QuadratureOptions};
use semiclassical::fock::{
    apply_ladder, apply_quadratic, displacement, weighted_norm, FockVector, Ladder, ModeBasis, QuadraticGenerator,
};
use semiclassical::linalg::{c, hermitize, symmetrize, CMat, CVec};
use semiclassical::packets::{k_lambda, Grid, PacketPoint, ShapeFunction};
use semiclassical::symmetry::LieAlgebra;

fn cvec(v: &[(f64, f64)]) -> CVec {
    CVec::from_iterator(v.len(), v.iter().map(|(a, b)| c(*a, *b)))
}

fn random_cmat(d: usize, rng: &mut ChaCha8Rng, s: f64) -> CMat {
    CMat::from_fn(d, d, |_, _| c(rng.gen_range(-s..s), rng.gen_range(-s..s)))
}

fn pair() -> impl Strategy<Value = (f64, f64)> {
    (-1.0..1.0f64, -1.0..1.0f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn ccr_holds_below_cutoff(f in prop::collection::vec(pair(), 2), g in prop::collection::vec(pair(), 2), seed in any::<u64>()) {
        let basis = ModeBasis::new(2, 7).unwrap();
        let psi = FockVector::random(&basis, 5, &mut ChaCha8Rng::seed_from_u64(seed));
        let (f, g) = (cvec(&f), cvec(&g));
        let fag = apply_ladder(&f, &apply_ladder(&g, &psi, Ladder::Create).unwrap(), Ladder::Annihilate).unwrap();
        let gaf = apply_ladder(&g, &apply_ladder(&f, &psi, Ladder::Annihilate).unwrap(), Ladder::Create).unwrap();
        let fg: C64 = f.iter().zip(g.iter()).map(|(a, b)| a.conj() * b).sum();
        prop_assert!(fag.sub(&gaf).unwrap().axpy(-fg, &psi).unwrap().norm() < 1e-12);
    }

    #[test]
    fn inner_product_is_hermitian_and_bounded(s1 in any::<u64>(), s2 in any::<u64>()) {
        let basis = ModeBasis::new(2, 5).unwrap();
        let a = FockVector::random(&basis, 5, &mut ChaCha8Rng::seed_from_u64(s1));
        let b = FockVector::random(&basis, 5, &mut ChaCha8Rng::seed_from_u64(s2));
        let ab = a.inner(&b).unwrap();
        prop_assert!((ab - b.inner(&a).unwrap().conj()).norm() < 1e-14);
        prop_assert!(ab.norm() <= a.norm() * b.norm() + 1e-14);
    }

    #[test]
    fn weighted_norms_increase_with_order(seed in any::<u64>(), m in 0.0..2.0f64) {
        let basis = ModeBasis::new(1, 10).unwrap();
        let psi = FockVector::random(&basis, 10, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert!(weighted_norm(&psi, m, None) <= weighted_norm(&psi, m + 0.5, None) * (1.0 + 1e-14));
    }

    #[test]
    fn quadratic_generator_is_hermitian(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gen = QuadraticGenerator::from_blocks(symmetrize(&random_cmat(2, &mut rng, 0.5)), hermitize(&random_cmat(2, &mut rng, 1.0)), 0.2);
        let basis = ModeBasis::new(2, 6).unwrap();
        let a = FockVector::random(&basis, 6, &mut rng);
        let b = FockVector::random(&basis, 6, &mut rng);
        let lhs = a.inner(&apply_quadratic(&gen, &b).unwrap()).unwrap();
        let rhs = apply_quadratic(&gen, &a).unwrap().inner(&b).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn displacement_preserves_norm_up_to_leakage(b in prop::collection::vec(pair(), 1), seed in any::<u64>()) {
        let basis = ModeBasis::new(1, 30).unwrap();
        let psi = FockVector::random(&basis, 4, &mut ChaCha8Rng::seed_from_u64(seed));
        let out = displacement(&cvec(&b), &psi, 1.0).unwrap();
        prop_assert!((out.norm_sqr() - psi.norm_sqr()).abs() <= out.leakage + 1e-12);
    }

    #[test]
    fn bogoliubov_flow_invariants(seed in any::<u64>(), t in 0.0..1.5f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gen = QuadraticGenerator::from_blocks(symmetrize(&random_cmat(2, &mut rng, 0.4)), hermitize(&random_cmat(2, &mut rng, 1.0)), 0.0);
        let flow = integrate_flow(&ConstantPath(gen), t, 1e-3).unwrap();
        let r = flow_invariants(&flow);
        prop_assert!(r.symplectic <= 1e-9 && r.transpose <= 1e-9 && r.mg <= 1e-9, "{r:?}");
    }

    #[test]
    fn algebra_brackets_are_antisymmetric_and_represented(a in prop::collection::vec(-1.0..1.0f64, 4), b in prop::collection::vec(-1.0..1.0f64, 4), which in 0usize..3) {
        let alg = [LieAlgebra::u2(), LieAlgebra::su11(), LieAlgebra::heisenberg()][which].clone();
        let m = alg.m();
        let (a, b) = (&a[..m], &b[..m]);
        let ab = alg.bracket(a, b);
        let ba = alg.bracket(b, a);
        prop_assert!(ab.iter().zip(&ba).all(|(x, y)| (x + y).abs() < 1e-13));
        let (ra, rb) = (alg.rep_of(a), alg.rep_of(b));
        let comm = &ra * &rb - &rb * &ra;
        prop_assert!((comm - alg.rep_of(&ab)).amax() < 1e-12);
    }

    #[test]
    fn jacobi_identity(a in prop::collection::vec(-1.0..1.0f64, 4), b in prop::collection::vec(-1.0..1.0f64, 4), x in prop::collection::vec(-1.0..1.0f64, 4)) {
        let alg = LieAlgebra::u2();
        let br = |u: &[f64], v: &[f64]| alg.bracket(u, v);
        let t1 = br(&a, &br(&b, &x));
        let t2 = br(&b, &br(&x, &a));
        let t3 = br(&x, &br(&a, &b));
        prop_assert!((0..4).all(|i| (t1[i] + t2[i] + t3[i]).abs() < 1e-12));
    }

    #[test]
    fn constrained_norm_is_nonnegative(seed in any::<u64>(), b in pair()) {
        prop_assume!(b.0.abs() + b.1.abs() > 0.2);
        let basis = ModeBasis::new(1, 6).unwrap();
        let y = FockVector::random(&basis, 6, &mut ChaCha8Rng::seed_from_u64(seed));
        let plane = make_plane(vec![cvec(&[b])], 1.0).unwrap();
        let v = inner_constrained(&y, &y, &plane, &QuadratureOptions::default()).unwrap();
        prop_assert!(v.value[0] >= -1e-10 && v.value[1].abs() < 1e-8, "{:?}", v.value);
    }

    #[test]
    fn packet_map_is_an_isometry(q in -1.0..1.0f64, p in -1.0..1.0f64, lam in 0.01..1.0f64) {
        let f = ShapeFunction::gaussian(&Grid::centered(1, 256, &[0.0], 12.0).unwrap(), &[0.1], 0.9, &[0.2]);
        let x = PacketPoint::new(0.0, vec![q], vec![p]).unwrap();
        let sl = lam.sqrt();
        let xg = Grid::new(1, 512, vec![q - 12.0 * sl], 24.0 * sl / 512.0).unwrap();
        prop_assert!((k_lambda(&x, &f, lam, &xg).unwrap().norm() - f.norm()).abs() < 1e-12);
    }

    #[test]
    fn check_records_pass_iff_within_tolerance(r in 0.0..1.0f64, tol in 0.0..1.0f64) {
        let rec = CheckRecord::measured("x", "y", r, tol);
        prop_assert_eq!(rec.pass, r <= tol);
    }

    #[test]
    fn configs_round_trip_through_toml(kappa in -1.0..1.0f64, t in 0.0..3.0f64, n in 1usize..40) {
        let mut cfg = ScenarioConfig::builtin("squeeze").unwrap();
        cfg.model.kappa = kappa;
        cfg.model.n_max = n;
        cfg.run.t = t;
        let back = ScenarioConfig::from_toml(&cfg.to_toml()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}
