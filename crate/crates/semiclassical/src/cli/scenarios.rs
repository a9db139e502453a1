use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{complex_matrix, ScenarioConfig};
use super::report::{CheckRecord, Environment, Report, SCHEMA_VERSION};
use crate::bogoliubov::{
    flow_invariants, integrate_flow, mixed_two_mode, picard_flow, propagate_direct, propagate_gaussian, riccati_residual,
    rotation, squeeze, ConstantPath, CreatedState, GeneratorPath,
};
use crate::constrained::{
    inner_constrained, invariance_check, make_plane, regularized_inner, IsotropicPlane, QuadratureOptions,
};
use crate::error::{Error, Result};
use crate::fock::{gaussian_state, weighted_norm, FockVector, GaussianData, ModeBasis, WeightOperator};
use crate::linalg::{c, CMat, CVec};
use crate::packets::{
    c_lambda, derivative_identity_residual, expansion_check, inner_composed_sweep, k_lambda, wkb_error_sweep, Component,
    ComposedPacket, ComposedQuadrature, FiberMap, Grid, IsotropicManifold, PacketPoint, ParamAxis, PointMap, Potential,
    ShapeFunction,
};
use crate::quadrature::loglog_slope;
use crate::symmetry::{
    check_f3, check_group_law, check_vector_field_algebra, check_x6, restricted_norm, second_kind_coords, word_product,
    ClassicalSystem, GeneratorFamily, GroupWord, LieAlgebra, MARGIN,
};

pub struct ScenarioInfo {
    pub name: &'static str,
    pub description: &'static str,
    pub default_d: usize,
    pub default_n: usize,
}

pub const SCENARIOS: &[ScenarioInfo] = &[
    ScenarioInfo {
        name: "rotation",
        description: "number-operator rotation: closed-form flow, Riccati, Picard, eigenstate phases",
        default_d: 1,
        default_n: 12,
    },
    ScenarioInfo {
        name: "squeeze",
        description: "single-mode squeezing: closed-form flow, Gaussian vs direct propagation, constrained invariance",
        default_d: 1,
        default_n: 24,
    },
    ScenarioInfo {
        name: "u2-groupclaw",
        description: "two-mode u(2) quadratic family: algebra relations, group law, closed words",
        default_d: 2,
        default_n: 12,
    },
    ScenarioInfo {
        name: "su11-metaplectic-loop",
        description: "su(1,1) family: 2π rotation loop gives −1 while the classical loop closes",
        default_d: 1,
        default_n: 12,
    },
    ScenarioInfo {
        name: "anomaly-injection",
        description: "constant offset in the scalar part: scalar anomaly recovered and central",
        default_d: 1,
        default_n: 16,
    },
    ScenarioInfo {
        name: "packet-harmonic",
        description: "wave packets on the harmonic orbit: isometry, derivative identity, λ-sweeps",
        default_d: 1,
        default_n: 24,
    },
    ScenarioInfo {
        name: "constrained-basics",
        description: "constrained inner product: Gaussian value, null vector, positivity, regularization, weights",
        default_d: 1,
        default_n: 8,
    },
];

type CheckFn = Box<dyn Fn(&ScenarioConfig, u64) -> Result<f64> + Send + Sync>;

struct Check {
    name: &'static str,
    anchor: &'static str,
    tolerance: f64,
    run: CheckFn,
}

fn check(
    name: &'static str,
    anchor: &'static str,
    tolerance: f64,
    run: impl Fn(&ScenarioConfig, u64) -> Result<f64> + Send + Sync + 'static,
) -> Check {
    Check { name, anchor, tolerance, run: Box::new(run) }
}

/// Generic phase-space point of dimension d.
pub fn sample_point(d: usize) -> PacketPoint {
    let q = (0..d).map(|i| 0.4 - 0.6 * i as f64).collect();
    let p = (0..d).map(|i| -0.7 + 0.8 * i as f64).collect();
    PacketPoint { s: 0.3, q, p }
}

fn e(m: usize, k: usize) -> Vec<f64> {
    let mut v = vec![0.0; m];
    v[k] = 1.0;
    v
}

fn pairs(m: usize) -> Vec<(usize, usize)> {
    (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))).collect()
}

fn scalar(m: &CMat) -> C64 {
    m[(0, 0)]
}

fn max_of(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(0.0, f64::max)
}

fn quadrature(cfg: &ScenarioConfig) -> QuadratureOptions {
    QuadratureOptions { initial_order: cfg.run.quadrature_order, ..QuadratureOptions::default() }
}

fn real_plane(b: f64) -> Result<IsotropicPlane> {
    make_plane(vec![CVec::from_vec(vec![c(b, 0.0)])], 1.0)
}

fn symmetry_setup(cfg: &ScenarioConfig, default: &str) -> Result<(LieAlgebra, ClassicalSystem, GeneratorFamily)> {
    let alg = cfg.algebra(default)?;
    let sys = ClassicalSystem::hamiltonian(&alg, cfg.run.dt)?;
    let fam = GeneratorFamily::weyl(&alg)?;
    Ok((alg, sys, fam))
}

/// Harmonic orbit X(α) = (α/2 − sin 2α/4, cos α, −sin α) with a smooth window.
pub fn harmonic_packet(n_alpha: usize) -> Result<ComposedPacket> {
    let map: PointMap = Arc::new(|a: &[f64]| {
        let t = a[0];
        PacketPoint { s: t / 2.0 - (2.0 * t).sin() / 4.0, q: vec![t.cos()], p: vec![-t.sin()] }
    });
    let axes = vec![ParamAxis { lo: 0.0, hi: 2.0 * PI, n: n_alpha, periodic: true }];
    let manifold = IsotropicManifold::new(axes, 1, map)?;
    let g = ShapeFunction::coherent(1, 256, 12.0)?;
    let fiber: FiberMap = Arc::new(move |a: &[f64]| g.scale(C64::new(window(a[0]), 0.0)));
    Ok(ComposedPacket { manifold, fiber })
}

fn window(a: f64) -> f64 {
    (-10.0 * (1.0 + a.cos())).exp()
}

/// ∫₀^{2π} window² dα = 2π e^{−20} I₀(20), I₀ by its power series.
fn window_sq_integral() -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= 100.0 / (k * k) as f64;
        sum += term;
    }
    2.0 * PI * (-20.0f64).exp() * sum
}

/// ‖propagate_gaussian − propagate_direct‖ for squeezed vacuum, and the tail estimate at this cutoff.
pub fn propagator_mismatch(kappa: f64, t: f64, dt: f64, n: usize) -> Result<(f64, f64)> {
    let basis = ModeBasis::new(1, n)?;
    let flow = integrate_flow(&squeeze(kappa), t, dt)?;
    let g = propagate_gaussian(&CreatedState::vacuum(), &flow, &basis, 1.0)?;
    let d = propagate_direct(&FockVector::vacuum(&basis), &squeeze(kappa), t, dt, 1.0)?;
    let s = flow.last();
    let tail = gaussian_state(&GaussianData { m: s.m.clone(), c: s.c }, &basis)?.tail_estimate;
    Ok((g.distance(&d.state)?, tail))
}

/// |F − (−i sinh κt)| + |G − cosh κt| for the squeeze flow.
pub fn squeeze_flow_error(kappa: f64, t: f64, dt: f64) -> Result<f64> {
    let flow = integrate_flow(&squeeze(kappa), t, dt)?;
    let s = flow.last();
    Ok((scalar(&s.f) - c(0.0, -(kappa * t).sinh())).norm() + (scalar(&s.g) - c((kappa * t).cosh(), 0.0)).norm())
}

/// Vector-field algebra residual for the su(1,1) pair (K1, K2) at step h.
pub fn vector_field_residual(h: f64, dt: f64) -> Result<f64> {
    let su = LieAlgebra::su11();
    let sys = ClassicalSystem::hamiltonian(&su, dt)?;
    check_vector_field_algebra(&sys, &su, &e(3, 1), &e(3, 2), &sample_point(1), h)
}

/// Expansion error on the harmonic orbit at α = 1.1, β = 0.6.
pub fn harmonic_expansion_errors(lambdas: &[f64]) -> Result<(Vec<f64>, Option<f64>)> {
    let orbit = harmonic_packet(64)?.manifold;
    let g = ShapeFunction::coherent(1, 256, 12.0)?;
    let r = expansion_check(&orbit, &[1.1], &g, &[0.6], lambdas)?;
    Ok((r.errors, r.slope))
}

fn generator_invariants(cfg: &ScenarioConfig) -> Result<f64> {
    let gen = cfg.generator()?.ok_or_else(|| Error::Config("no generator configured".into()))?;
    gen.validate(1e-12)?;
    let flow = integrate_flow(&ConstantPath(gen), cfg.run.t, cfg.run.dt)?;
    Ok(flow_invariants(&flow).max())
}

fn picard_mismatch(path: &dyn GeneratorPath, t: f64, dt: f64) -> Result<f64> {
    let p = picard_flow(path, t, 25, 400, 1e-10)?;
    let f = integrate_flow(path, t, dt)?;
    Ok((&p.f - &f.last().f).norm().max((&p.g - &f.last().g).norm()))
}

fn rotation_checks(cfg: &ScenarioConfig) -> Vec<Check> {
    let mut v = vec![
        check("rotation_closed_form", "number rotation: G = e^{iωt}, F = 0", 1e-12, |cf, _| {
            let (w, t) = (cf.model.omega, cf.run.t);
            let flow = integrate_flow(&rotation(w, cf.model.hbar), t, cf.run.dt)?;
            let s = flow.last();
            Ok(scalar(&s.f).norm() + (scalar(&s.g) - C64::from_polar(1.0, w * t)).norm())
        }),
        check("flow_invariants", "G†G − F†F = 1, FᵀG = GᵀF, MG = F", 1e-9, |cf, _| {
            Ok(flow_invariants(&integrate_flow(&rotation(cf.model.omega, cf.model.hbar), cf.run.t, cf.run.dt)?).max())
        }),
        check("riccati_residual", "M = FG⁻¹ solves the Riccati equation", 1e-9, |cf, _| {
            let path = rotation(cf.model.omega, cf.model.hbar);
            riccati_residual(&integrate_flow(&path, cf.run.t, cf.run.dt)?, &path)
        }),
        check("picard_agreement", "Picard series equals the integrated (F, G)", 1e-6, |cf, _| {
            picard_mismatch(&rotation(cf.model.omega, cf.model.hbar), cf.run.t, cf.run.dt)
        }),
        check("vacuum_phase", "rotated vacuum acquires only the phase e^{−iH̄t}", 1e-12, |cf, _| {
            let b = ModeBasis::new(1, cf.model.n_max)?;
            let (hbar, t) = (cf.model.hbar, cf.run.t);
            let flow = integrate_flow(&rotation(cf.model.omega, hbar), t, cf.run.dt)?;
            let psi = propagate_gaussian(&CreatedState::vacuum(), &flow, &b, 1e-10)?;
            psi.distance(&FockVector::vacuum(&b).scale(C64::from_polar(1.0, -hbar * t)))
        }),
        check("eigenstate_phase", "number eigenstate |n⟩ acquires e^{−i(nω+H̄)t}", 1e-10, |cf, _| {
            let b = ModeBasis::new(1, cf.model.n_max)?;
            let n = 3.min(cf.model.n_max);
            let (w, hbar, t) = (cf.model.omega, cf.model.hbar, cf.run.t);
            let psi = FockVector::number_state(&b, &[n as u32])?;
            let r = propagate_direct(&psi, &rotation(w, hbar), t, cf.run.dt, 1e-8)?;
            r.state.distance(&psi.scale(C64::from_polar(1.0, -(n as f64 * w + hbar) * t)))
        }),
    ];
    if cfg.model.hpp.is_some() {
        v.push(check("configured_generator_invariants", "G†G − F†F = 1, FᵀG = GᵀF, MG = F", 1e-9, |cf, _| {
            generator_invariants(cf)
        }));
    }
    v
}

fn squeeze_checks(cfg: &ScenarioConfig) -> Vec<Check> {
    let mut v = vec![
        check("squeeze_closed_form", "squeezing: F = −i sinh κt, G = cosh κt", 1e-10, |cf, _| {
            squeeze_flow_error(cf.model.kappa, cf.run.t, cf.run.dt)
        }),
        check("flow_invariants", "G†G − F†F = 1, FᵀG = GᵀF, MG = F", 1e-9, |cf, _| {
            Ok(flow_invariants(&integrate_flow(&squeeze(cf.model.kappa), cf.run.t, cf.run.dt)?).max())
        }),
        check("mixed_path_invariants", "G†G − F†F = 1, FᵀG = GᵀF, MG = F on a two-mode path", 1e-9, |cf, _| {
            Ok(flow_invariants(&integrate_flow(&mixed_two_mode(), 2.0 * cf.run.t, cf.run.dt)?).max())
        }),
        check("riccati_residual", "M = FG⁻¹ solves the Riccati equation", 1e-8, |cf, _| {
            let path = squeeze(cf.model.kappa);
            riccati_residual(&integrate_flow(&path, cf.run.t, cf.run.dt)?, &path)
        }),
        check("picard_agreement", "Picard series equals the integrated (F, G)", 1e-6, |cf, _| {
            picard_mismatch(&squeeze(cf.model.kappa), cf.run.t, cf.run.dt)
        }),
        check("propagator_agreement", "Gaussian ansatz equals direct truncated evolution", 1e-6, |cf, _| {
            Ok(propagator_mismatch(cf.model.kappa, cf.run.t, cf.run.dt, cf.model.n_max)?.0)
        }),
        check("propagator_tail_bound", "mismatch at half cutoff within the Gaussian tail estimate", 1.0, |cf, _| {
            let (err, tail) = propagator_mismatch(cf.model.kappa, cf.run.t, cf.run.dt, (cf.model.n_max / 2).max(1))?;
            Ok(err / tail)
        }),
        check("constrained_invariance", "constrained norm is invariant under the quadratic flow", 1e-6, |cf, _| {
            let basis = ModeBasis::new(1, cf.model.n_max)?;
            let r = invariance_check(
                &FockVector::vacuum(&basis),
                &real_plane(1.0)?,
                &squeeze(cf.model.kappa),
                cf.run.t,
                cf.run.dt,
                &quadrature(cf),
            )?;
            Ok(r.residual)
        }),
    ];
    if cfg.model.hpp.is_some() {
        v.push(check("configured_generator_invariants", "G†G − F†F = 1, FᵀG = GᵀF, MG = F", 1e-9, |cf, _| {
            generator_invariants(cf)
        }));
    }
    v
}

fn random_element(rng: &mut ChaCha8Rng, alg: &LieAlgebra, scale: f64) -> DMatrix<f64> {
    let a: Vec<f64> = (0..alg.m()).map(|_| rng.gen_range(-scale..scale)).collect();
    alg.exp(&a)
}

fn group_checks() -> Vec<Check> {
    vec![
        check("vector_field_algebra", "[v_A, v_B] = v_{[A;B]} on the classical phase space", 1e-6, |cf, _| {
            let (alg, sys, _) = symmetry_setup(cf, "u2")?;
            let x = sample_point(sys.dim);
            let m = alg.m();
            let rs = pairs(m)
                .into_iter()
                .map(|(i, j)| check_vector_field_algebra(&sys, &alg, &e(m, i), &e(m, j), &x, cf.run.h))
                .collect::<Result<Vec<_>>>()?;
            Ok(max_of(rs))
        }),
        check("generator_relations", "H⁺⁺, H⁺⁻, H̄ and φ brackets close on the family", 1e-6, |cf, _| {
            let (alg, sys, fam) = symmetry_setup(cf, "u2")?;
            let x = sample_point(sys.dim);
            let m = alg.m();
            let mut worst: f64 = 0.0;
            for (i, j) in pairs(m) {
                let r = check_f3(&sys, &alg, &fam, &e(m, i), &e(m, j), &x, cf.run.h)?;
                worst = worst.max(r.max_matrix_residual()).max(r.hbar_discrepancy.abs());
            }
            Ok(worst)
        }),
        check("operator_algebra", "U-generators represent the algebra up to Ω-commutant", 1e-6, |cf, _| {
            let (alg, sys, fam) = symmetry_setup(cf, "u2")?;
            let x = sample_point(sys.dim);
            let basis = ModeBasis::new(sys.dim, cf.model.n_max)?;
            let m = alg.m();
            let rs = pairs(m)
                .into_iter()
                .map(|(i, j)| Ok(check_x6(&sys, &alg, &fam, &e(m, i), &e(m, j), &x, &basis, cf.run.h)?.residual))
                .collect::<Result<Vec<_>>>()?;
            Ok(max_of(rs))
        }),
        check("group_law_random_pairs", "U(g₁)U(g₂) = U(g₁g₂) for random small pairs", 1e-6, |cf, seed| {
            let (alg, sys, fam) = symmetry_setup(cf, "u2")?;
            let x = sample_point(sys.dim);
            let basis = ModeBasis::new(sys.dim, cf.model.n_max)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let draws: Vec<(DMatrix<f64>, DMatrix<f64>)> =
                (0..cf.run.samples).map(|_| (random_element(&mut rng, &alg, 0.3), random_element(&mut rng, &alg, 0.3))).collect();
            let rs = draws
                .par_iter()
                .map(|(g1, g2)| {
                    let r = check_group_law(&sys, &fam, &alg, g1, g2, &x, &basis, cf.run.dt, cf.run.leak_threshold)?;
                    Ok(r.residual.max(r.classical_mismatch))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(max_of(rs))
        }),
        check("group_law_identity", "U(g)U(e) = U(g)", 1e-8, |cf, seed| {
            let (alg, sys, fam) = symmetry_setup(cf, "u2")?;
            let basis = ModeBasis::new(sys.dim, cf.model.n_max)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random_element(&mut rng, &alg, 0.3);
            let n = g.nrows();
            let r = check_group_law(&sys, &fam, &alg, &g, &DMatrix::identity(n, n), &sample_point(sys.dim), &basis, cf.run.dt, 1e-10)?;
            Ok(r.residual)
        }),
        check("closed_word_identity", "a contractible closed word acts as the identity", 1e-6, |cf, _| {
            let (alg, sys, fam) = symmetry_setup(cf, "u2")?;
            let basis = ModeBasis::new(sys.dim, cf.model.n_max)?;
            let m = alg.m();
            let (i, j) = if m > 2 { (1, 2) } else { (0, m - 1) };
            let s = 0.2;
            let mut letters = vec![(i, s), (j, s), (i, -s), (j, -s)];
            let g = GroupWord::new(letters.clone())?.element(&alg)?;
            let inv = g.try_inverse().ok_or_else(|| Error::Invalid("word element not invertible".into()))?;
            letters.extend(GroupWord::from_second_kind(&second_kind_coords(&inv, &alg)?).letters);
            let wp = word_product(&sys, &fam, &alg, &GroupWord::new(letters)?, &sample_point(sys.dim), &basis, cf.run.dt, 1e-10)?;
            let lr = wp.loop_report.ok_or_else(|| Error::Invalid("classical word does not close".into()))?;
            Ok(lr.distance_to_identity)
        }),
    ]
}

fn metaplectic_word(cf: &ScenarioConfig) -> Result<(Arc<ModeBasis>, crate::symmetry::WordProduct)> {
    let (alg, sys, fam) = symmetry_setup(cf, "su11")?;
    let basis = ModeBasis::new(sys.dim, cf.model.n_max)?;
    let word = GroupWord::new(vec![(0, 4.0 * PI)])?;
    let wp = word_product(&sys, &fam, &alg, &word, &sample_point(sys.dim), &basis, cf.run.dt, 1e-10)?;
    Ok((basis, wp))
}

fn metaplectic_checks() -> Vec<Check> {
    vec![
        check("classical_loop_closes", "the 2π number rotation is a closed classical loop", 1e-9, |cf, _| {
            Ok(metaplectic_word(cf)?.1.classical_distance)
        }),
        check("metaplectic_sign", "the lifted 2π rotation equals −1", 1e-8, |cf, _| {
            let (basis, wp) = metaplectic_word(cf)?;
            let n = basis.dim();
            Ok(restricted_norm(&(&wp.u + CMat::identity(n, n)), &basis, MARGIN))
        }),
        check("metaplectic_phase", "global phase of the lifted loop is π", 1e-8, |cf, _| {
            let lr = metaplectic_word(cf)?.1.loop_report.ok_or_else(|| Error::Invalid("classical loop does not close".into()))?;
            Ok((lr.global_phase.abs() - PI).abs())
        }),
        check("vector_field_algebra", "[v_A, v_B] = v_{[A;B]} on the classical phase space", 1e-6, |cf, _| {
            let (alg, sys, _) = symmetry_setup(cf, "su11")?;
            let x = sample_point(sys.dim);
            let m = alg.m();
            let rs = pairs(m)
                .into_iter()
                .map(|(i, j)| check_vector_field_algebra(&sys, &alg, &e(m, i), &e(m, j), &x, cf.run.h))
                .collect::<Result<Vec<_>>>()?;
            Ok(max_of(rs))
        }),
    ]
}

fn anomaly_offset(cf: &ScenarioConfig, m: usize) -> Result<Vec<f64>> {
    let theta = cf.model.anomaly_offset.clone().unwrap_or_else(|| {
        let base = [0.37, -0.2, 0.5, 0.25];
        (0..m).map(|i| base[i % base.len()]).collect()
    });
    if theta.len() != m {
        return Err(Error::Config(format!("anomaly_offset needs {m} entries, got {}", theta.len())));
    }
    Ok(theta)
}

/// Anomalous pair: the first bracket with nonzero offset image.
fn anomaly_pair(alg: &LieAlgebra, theta: &[f64]) -> (usize, usize, f64) {
    let m = alg.m();
    let mut best: (usize, usize, f64) = (0, 1.min(m - 1), 0.0);
    for (i, j) in pairs(m) {
        let v: f64 = alg.bracket(&e(m, i), &e(m, j)).iter().zip(theta).map(|(u, w)| u * w).sum();
        if v.abs() > best.2.abs() {
            best = (i, j, v);
        }
    }
    best
}

fn anomaly_report(cf: &ScenarioConfig) -> Result<(crate::symmetry::X6Report, f64, f64)> {
    let (alg, sys, fam) = symmetry_setup(cf, "su11")?;
    let theta = anomaly_offset(cf, alg.m())?;
    let (i, j, expect) = anomaly_pair(&alg, &theta);
    let bad = fam.with_scalar_offset(theta);
    let basis = ModeBasis::new(sys.dim, cf.model.n_max)?;
    let x = sample_point(sys.dim);
    let m = alg.m();
    let r = check_x6(&sys, &alg, &bad, &e(m, i), &e(m, j), &x, &basis, cf.run.h)?;
    let f3 = check_f3(&sys, &alg, &bad, &e(m, i), &e(m, j), &x, cf.run.h)?;
    Ok((r, expect, f3.hbar_discrepancy))
}

fn anomaly_checks() -> Vec<Check> {
    vec![
        check("clean_family_operator_algebra", "unperturbed family represents the algebra", 1e-6, |cf, _| {
            let (alg, sys, fam) = symmetry_setup(cf, "su11")?;
            let basis = ModeBasis::new(sys.dim, cf.model.n_max)?;
            let x = sample_point(sys.dim);
            let m = alg.m();
            let rs = pairs(m)
                .into_iter()
                .map(|(i, j)| Ok(check_x6(&sys, &alg, &fam, &e(m, i), &e(m, j), &x, &basis, cf.run.h)?.residual))
                .collect::<Result<Vec<_>>>()?;
            Ok(max_of(rs))
        }),
        check("anomaly_is_scalar", "injected offset leaves a multiple of the identity", 1e-6, |cf, _| {
            Ok(anomaly_report(cf)?.0.scalar_deviation)
        }),
        check("anomaly_scalar_recovered", "recovered scalar equals i·offset of the bracket", 1e-6, |cf, _| {
            let (r, expect, _) = anomaly_report(cf)?;
            Ok(r.scalar_estimate[0].abs() + (r.scalar_estimate[1] - expect).abs())
        }),
        check("anomaly_commutes_with_forms", "anomaly commutes with every Ω[δX]", 1e-6, |cf, _| {
            Ok(anomaly_report(cf)?.0.commutant_residual)
        }),
        check("anomaly_matches_scalar_relation", "operator anomaly equals the H̄ relation discrepancy", 1e-6, |cf, _| {
            let (r, _, hb) = anomaly_report(cf)?;
            Ok((r.scalar_estimate[1] - hb).abs())
        }),
    ]
}

fn slope_deficit(slope: Option<f64>, floor: f64) -> Result<f64> {
    slope.map(|s| floor - s).ok_or_else(|| Error::NonConvergent("errors too small to fit a slope".into()))
}

fn packet_checks() -> Vec<Check> {
    vec![
        check("packet_isometry", "‖K^λ f‖ = ‖f‖ with const = λ^{−d/4}", 1e-12, |_, _| {
            let f = ShapeFunction::gaussian(&Grid::centered(1, 256, &[0.0], 12.0)?, &[0.2], 1.1, &[0.3]);
            let x = PacketPoint::new(0.4, vec![0.3], vec![0.8])?;
            let mut worst: f64 = 0.0;
            for lam in [1.0f64, 0.01] {
                let sl = lam.sqrt();
                let xg = Grid::new(1, 512, vec![0.3 - 12.0 * sl], 24.0 * sl / 512.0)?;
                worst = worst.max((k_lambda(&x, &f, lam, &xg)?.norm() - f.norm()).abs());
            }
            Ok(worst)
        }),
        check("derivative_identity", "∂K/∂X = (i/λ)K(ω − √λΩ) up to O(h²)", 1e-6, |cf, _| {
            let f = ShapeFunction::gaussian(&Grid::centered(1, 256, &[0.0], 12.0)?, &[0.2], 1.1, &[0.3]);
            let x = PacketPoint::new(0.3, vec![0.5], vec![0.7])?;
            let mut worst: f64 = 0.0;
            for comp in Component::all(1) {
                for lam in &cf.run.lambdas {
                    worst = worst.max(derivative_identity_residual(&x, &f, *lam, comp, cf.run.h)?);
                }
            }
            Ok(worst)
        }),
        check("harmonic_limit_closed_form", "λ → 0 composed inner product on the harmonic orbit", 1e-8, |_, _| {
            let cp = harmonic_packet(64)?;
            let lam = 0.01;
            let r = crate::packets::inner_composed(&cp, &cp, lam, &ComposedQuadrature::default())?;
            let exact = c_lambda(1, 1, lam).powi(2) * lam * 2.0 * PI.sqrt() * window_sq_integral();
            Ok((r.asymptotic() - exact).norm() / exact)
        }),
        check("expansion_slope", "expansion error vanishes like √λ: 0.45 − fitted slope", 0.0, |cf, _| {
            slope_deficit(harmonic_expansion_errors(&cf.run.lambdas)?.1, 0.45)
        }),
        check("wkb_slope", "complex-WKB evolution error vanishes like √λ: 0.45 − fitted slope", 0.0, |cf, _| {
            let pot = Potential::anharmonic(1, 0.2);
            let x0 = PacketPoint::new(0.0, vec![1.0], vec![0.0])?;
            let f0 = ShapeFunction::coherent(1, 256, 12.0)?;
            slope_deficit(wkb_error_sweep(&f0, &x0, &pot, &cf.run.lambdas, cf.run.t, cf.run.dt)?.slope, 0.45)
        }),
        check("composed_inner_monotone", "direct/asymptotic gap shrinks at every λ step", 0.0, |cf, _| {
            let cp = harmonic_packet(64)?;
            let mut lams = cf.run.lambdas.clone();
            lams.sort_by(|a, b| b.total_cmp(a));
            let errs: Vec<f64> =
                inner_composed_sweep(&cp, &cp, &lams, &ComposedQuadrature::default())?.iter().map(|r| r.relative_error).collect();
            Ok(errs.windows(2).filter(|w| w[1] >= w[0]).count() as f64)
        }),
        check("composed_inner_slope", "direct/asymptotic gap vanishes like √λ: 0.45 − fitted slope", 0.0, |cf, _| {
            let cp = harmonic_packet(64)?;
            let errs: Vec<f64> = inner_composed_sweep(&cp, &cp, &cf.run.lambdas, &ComposedQuadrature::default())?
                .iter()
                .map(|r| r.relative_error)
                .collect();
            slope_deficit(loglog_slope(&cf.run.lambdas, &errs), 0.45)
        }),
    ]
}

fn weight_operator(cf: &ScenarioConfig) -> Result<WeightOperator> {
    match &cf.model.weight {
        Some(w) => WeightOperator::new(complex_matrix(w, cf.model.d)?),
        None => {
            let d = cf.model.d;
            WeightOperator::new(CMat::from_fn(d, d, |i, j| if i == j { c(1.5 + 0.5 * i as f64, 0.0) } else { c(0.0, 0.0) }))
        }
    }
}

fn constrained_checks() -> Vec<Check> {
    vec![
        check("vacuum_gaussian_integral", "⟨0,0⟩_L = √(2π)/b for a real line", 1e-6, |cf, _| {
            let basis = ModeBasis::new(1, cf.model.n_max)?;
            let v = FockVector::vacuum(&basis);
            let b = 1.0;
            let r = inner_constrained(&v, &v, &real_plane(b)?, &quadrature(cf))?;
            Ok((r.value() - c(2.0 * PI, 0.0).sqrt() / b).norm())
        }),
        check("one_quantum_null", "|1⟩ is a null vector of the constrained product", 1e-8, |cf, _| {
            let basis = ModeBasis::new(1, cf.model.n_max)?;
            let v = FockVector::number_state(&basis, &[1])?;
            Ok(inner_constrained(&v, &v, &real_plane(1.0)?, &quadrature(cf))?.value().norm())
        }),
        check("positivity", "⟨Y,Y⟩_L ≥ 0: largest negative part over random vectors", 1e-10, |cf, seed| {
            let basis = ModeBasis::new(1, cf.model.n_max)?;
            let plane = make_plane(vec![CVec::from_vec(vec![c(0.8, 0.3)])], 1.0)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let ys: Vec<FockVector> = (0..cf.run.samples).map(|_| FockVector::random(&basis, cf.model.n_max, &mut rng)).collect();
            let q = quadrature(cf);
            let vals = ys
                .par_iter()
                .map(|y| Ok(inner_constrained(y, y, &plane, &q)?.value[0]))
                .collect::<Result<Vec<_>>>()?;
            Ok(max_of(vals.iter().map(|v| -v)))
        }),
        check("regularized_value", "Gaussian-regularized product equals √(2π/(1+2ε))", 1e-10, |cf, _| {
            let basis = ModeBasis::new(1, cf.model.n_max)?;
            let v = FockVector::vacuum(&basis);
            let eps = 0.01;
            let r = regularized_inner(&v, &real_plane(1.0)?, eps, &quadrature(cf))?;
            Ok((r - (2.0 * PI / (1.0 + 2.0 * eps)).sqrt()).abs())
        }),
        check("rotation_invariance", "constrained product is invariant under the rotation flow", 1e-6, |cf, seed| {
            let basis = ModeBasis::new(1, cf.model.n_max)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let y = FockVector::random(&basis, cf.model.n_max.min(6), &mut rng);
            let plane = make_plane(vec![CVec::from_vec(vec![c(0.6, 0.5)])], 1.0)?;
            let r = invariance_check(&y, &plane, &rotation(cf.model.omega, cf.model.hbar), cf.run.t, cf.run.dt, &quadrature(cf))?;
            Ok(r.residual)
        }),
        check("weighted_norm_order", "‖Ψ‖_m ≤ ‖Ψ‖_m^T: largest excess over random vectors", 1e-12, |cf, seed| {
            let w = weight_operator(cf)?;
            let basis = ModeBasis::new(cf.model.d, cf.model.n_max.min(8))?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut worst = f64::NEG_INFINITY;
            for _ in 0..cf.run.samples {
                let y = FockVector::random(&basis, basis.n_max(), &mut rng);
                let m = rng.gen_range(0..3) as f64;
                let rel = (weighted_norm(&y, m, None) - weighted_norm(&y, m, Some(&w))) / weighted_norm(&y, m, Some(&w));
                worst = worst.max(rel);
            }
            Ok(worst)
        }),
    ]
}

fn checks_for(cfg: &ScenarioConfig) -> Result<Vec<Check>> {
    Ok(match cfg.scenario.as_str() {
        "rotation" => rotation_checks(cfg),
        "squeeze" => squeeze_checks(cfg),
        "u2-groupclaw" => group_checks(),
        "su11-metaplectic-loop" => metaplectic_checks(),
        "anomaly-injection" => anomaly_checks(),
        "packet-harmonic" => packet_checks(),
        "constrained-basics" => constrained_checks(),
        other => return Err(Error::Config(format!("unknown scenario {other:?}"))),
    })
}

/// Runs every check of the configured scenario; failures are recorded per check.
pub fn run_scenario(cfg: &ScenarioConfig, seed: u64) -> Result<Report> {
    let diags = cfg.diagnostics();
    if !diags.is_empty() {
        let msg: Vec<String> = diags.iter().map(|d| d.to_string()).collect();
        return Err(Error::Config(msg.join("; ")));
    }
    let checks = checks_for(cfg)?;
    let results: Vec<(CheckRecord, f64)> = checks
        .par_iter()
        .map(|ch| {
            let tol = cfg.tolerance(ch.name, ch.tolerance);
            let start = Instant::now();
            let rec = match (ch.run)(cfg, seed) {
                Ok(r) if r.is_finite() => CheckRecord::measured(ch.name, ch.anchor, r, tol),
                Ok(r) => CheckRecord::failed(ch.name, ch.anchor, tol, format!("non-finite residual {r}")),
                Err(e) => CheckRecord::failed(ch.name, ch.anchor, tol, e.to_string()),
            };
            (rec, start.elapsed().as_secs_f64())
        })
        .collect();
    let mut timings = BTreeMap::new();
    let mut records = Vec::with_capacity(results.len());
    for (rec, secs) in results {
        timings.insert(rec.name.clone(), secs);
        records.push(rec);
    }
    Ok(Report {
        schema_version: SCHEMA_VERSION.into(),
        scenario: cfg.scenario.clone(),
        checks: records,
        environment: Environment::current(seed),
        timings,
    })
}
