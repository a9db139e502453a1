use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::inner::{inner_constrained, QuadratureOptions};
use super::plane::{make_plane_with_tol, make_point_plane, IsotropicPlane};
use crate::error::{Error, Result};
use crate::fock::{apply_matrix, FockVector, ModeBasis};
use crate::linalg::CVec;
use crate::packets::{IsotropicManifold, PacketPoint, PacketTangent};
use crate::symmetry::{group_operator, word_tangent_map, ClassicalSystem, GeneratorFamily, GroupWord, LieAlgebra, PhiFn};

/// Isotropy tolerance for constraint vectors built from differenced tangents.
const NODE_ISOTROPY_TOL: f64 = 1e-9;

/// One α-node of a composed Fock state.
#[derive(Debug, Clone)]
pub struct ComposedNode {
    pub alpha: Vec<f64>,
    /// Quadrature weight times dΣ/dα.
    pub weight: f64,
    pub point: PacketPoint,
    pub tangents: Vec<PacketTangent>,
    pub fiber: FockVector,
    /// B_s(α) = φ_X[∂X/∂α_s].
    pub constraints: Vec<CVec>,
}

/// Fiber vectors Z(α) over the α-grid of an isotropic manifold.
#[derive(Debug, Clone)]
pub struct ComposedFockState {
    pub k: usize,
    pub nodes: Vec<ComposedNode>,
}

impl ComposedFockState {
    pub fn new(manifold: &IsotropicManifold, fiber: &(dyn Fn(&[f64]) -> FockVector + Sync), phi: &PhiFn) -> Result<Self> {
        let k = manifold.k();
        let nodes = manifold
            .nodes(false)
            .into_par_iter()
            .map(|(alpha, w)| {
                let point = manifold.at(&alpha);
                let tangents: Vec<PacketTangent> = (0..k).map(|s| manifold.tangent(&alpha, s)).collect();
                let constraints = tangents.iter().map(|t| phi(&point, t)).collect();
                let weight = w * (manifold.density)(&alpha);
                ComposedNode { fiber: fiber(&alpha), alpha, weight, point, tangents, constraints }
            })
            .collect();
        let state = ComposedFockState { k, nodes };
        for i in 0..state.nodes.len() {
            state.plane(i)?;
        }
        Ok(state)
    }

    /// L_k(α) at node i with unit measure constant.
    pub fn plane(&self, i: usize) -> Result<IsotropicPlane> {
        let n = &self.nodes[i];
        if self.k == 0 {
            return make_point_plane(n.fiber.basis.d(), 1.0);
        }
        make_plane_with_tol(n.constraints.clone(), 1.0, NODE_ISOTROPY_TOL)
            .map_err(|e| Error::NotIsotropic(format!("at α = {:?}: {e}", n.alpha)))
    }
}

/// ∫dΣ ⟨Z₁(α), Z₂(α)⟩_{L_k(α)}.
pub fn composed_inner(s1: &ComposedFockState, s2: &ComposedFockState, opts: &QuadratureOptions) -> Result<C64> {
    if s1.k != s2.k || s1.nodes.len() != s2.nodes.len() {
        return Err(Error::Invalid("composed states live on different α-grids".into()));
    }
    for (a, b) in s1.nodes.iter().zip(&s2.nodes) {
        let same = a.alpha.iter().zip(&b.alpha).all(|(u, v)| (u - v).abs() <= 1e-14)
            && (a.weight - b.weight).abs() <= 1e-14 * a.weight.abs().max(1.0)
            && a.constraints.iter().zip(&b.constraints).all(|(u, v)| (u - v).camax() <= 1e-12);
        if !same {
            return Err(Error::Invalid("composed states live on different manifolds".into()));
        }
    }
    let parts: Vec<Result<C64>> = (0..s1.nodes.len())
        .into_par_iter()
        .map(|i| {
            let n = &s1.nodes[i];
            let plane = s1.plane(i)?;
            Ok(inner_constrained(&n.fiber, &s2.nodes[i].fiber, &plane, opts)?.value() * n.weight)
        })
        .collect();
    parts.into_iter().sum()
}

/// Orthonormal basis of the real span of complex vectors, realified as (Re, Im).
fn real_span(vs: &[CVec]) -> DMatrix<f64> {
    let d = vs[0].len();
    let m = DMatrix::from_fn(2 * d, vs.len(), |r, c| if r < d { vs[c][r].re } else { vs[c][r - d].im });
    m.qr().q()
}

/// ‖P₁ − P₂‖ for the orthogonal projectors onto the two real spans.
pub fn subspace_distance(a: &[CVec], b: &[CVec]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    let (qa, qb) = (real_span(a), real_span(b));
    let diff = &qa * qa.transpose() - &qb * qb.transpose();
    diff.singular_values().iter().cloned().fold(0.0, f64::max)
}

#[derive(Debug, Clone)]
pub struct TransformedState {
    pub state: ComposedFockState,
    /// max over nodes of the distance between L_k(α: u_gΛ) and U_g L_k(α: Λ).
    pub subspace_distance: f64,
}

/// Maps the manifold by u_g, the fibers by U_g[X(α)] and recomputes the constraint vectors.
#[allow(clippy::too_many_arguments)]
pub fn transform_composed(
    state: &ComposedFockState,
    sys: &ClassicalSystem,
    fam: &GeneratorFamily,
    alg: &LieAlgebra,
    g: &DMatrix<f64>,
    basis: &Arc<ModeBasis>,
    dt: f64,
    leak_threshold: f64,
) -> Result<TransformedState> {
    let parts: Vec<Result<(ComposedNode, f64)>> = state
        .nodes
        .par_iter()
        .map(|n| {
            let (alpha, wp) = group_operator(sys, fam, alg, g, &n.point, basis, dt, leak_threshold)?;
            let word = GroupWord::from_second_kind(&alpha);
            let tangents = n
                .tangents
                .iter()
                .map(|t| word_tangent_map(sys, &word, &n.point, t).map(|r| r.1))
                .collect::<Result<Vec<_>>>()?;
            let constraints: Vec<CVec> = tangents.iter().map(|t| (fam.phi)(&wp.end, t)).collect();
            let moved: Vec<CVec> = n.constraints.iter().map(|b| wp.transform_vector(b)).collect();
            let dist = subspace_distance(&constraints, &moved);
            let node = ComposedNode {
                alpha: n.alpha.clone(),
                weight: n.weight,
                point: wp.end.clone(),
                tangents,
                fiber: apply_matrix(&wp.u, &n.fiber),
                constraints,
            };
            Ok((node, dist))
        })
        .collect();
    let mut nodes = Vec::with_capacity(parts.len());
    let mut dist: f64 = 0.0;
    for p in parts {
        let (n, d) = p?;
        dist = dist.max(d);
        nodes.push(n);
    }
    if dist > 1e-6 {
        return Err(Error::Invalid(format!("transformed constraint planes differ from U_g L by {dist:.3e}")));
    }
    let out = ComposedFockState { k: state.k, nodes };
    for i in 0..out.nodes.len() {
        out.plane(i)?;
    }
    Ok(TransformedState { state: out, subspace_distance: dist })
}
