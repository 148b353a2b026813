//! Raviart-Thomas spaces RT_s on triangles.
//!
//! Degrees of freedom are physical moments:
//! - facet moments against the orthonormal Legendre basis of P_s(F) in the
//!   arc-length parameter, taken with respect to the global facet normal and
//!   direction (so the same functional is seen from both sides, which makes
//!   the normal trace single-valued by construction);
//! - interior moments against a per-element L2-orthonormalized monomial
//!   basis of P_{s-1}(K)^2 (s >= 1).
//!
//! The nodal basis of an element is recovered on demand by inverting the
//! moment matrix of Piola-mapped reference monomial candidates.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::mesh::Mesh2D;
use crate::quadrature::{segment_rule, triangle_rule, SegmentRule, TriangleRule};
use crate::spaces::facet_legendre;

#[derive(Debug, Clone, Copy)]
struct MonoTerm {
    ax: u32,
    ay: u32,
    c: f64,
}

fn eval_terms(terms: &[MonoTerm], p: [f64; 2]) -> f64 {
    terms
        .iter()
        .map(|t| t.c * p[0].powi(t.ax as i32) * p[1].powi(t.ay as i32))
        .sum()
}

/// One reference candidate field spanning RT(K,s) = P_s^2 + x P_s.
#[derive(Debug, Clone)]
struct Candidate {
    x: Vec<MonoTerm>,
    y: Vec<MonoTerm>,
    div: Vec<MonoTerm>,
}

fn candidates(s: usize) -> Vec<Candidate> {
    let mut out = Vec::new();
    let mono = |ax: u32, ay: u32, c: f64| MonoTerm { ax, ay, c };
    for d in 0..=s as u32 {
        for a in 0..=d {
            let (ax, ay) = (d - a, a);
            out.push(Candidate {
                x: vec![mono(ax, ay, 1.0)],
                y: vec![],
                div: if ax > 0 { vec![mono(ax - 1, ay, ax as f64)] } else { vec![] },
            });
            out.push(Candidate {
                x: vec![],
                y: vec![mono(ax, ay, 1.0)],
                div: if ay > 0 { vec![mono(ax, ay - 1, ay as f64)] } else { vec![] },
            });
        }
    }
    // x * h for homogeneous h of degree s.
    for a in 0..=s as u32 {
        let (ax, ay) = (s as u32 - a, a);
        out.push(Candidate {
            x: vec![mono(ax + 1, ay, 1.0)],
            y: vec![mono(ax, ay + 1, 1.0)],
            div: vec![mono(ax, ay, (2 + s) as f64)],
        });
    }
    debug_assert_eq!(out.len(), (s + 1) * (s + 3));
    out
}

/// Scalar monomials of total degree <= d, in a fixed order.
fn scalar_monomials(d: isize) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    if d < 0 {
        return out;
    }
    for total in 0..=d as u32 {
        for a in 0..=total {
            out.push((total - a, a));
        }
    }
    out
}

/// Raviart-Thomas space of degree `s` over a mesh.
#[derive(Debug)]
pub struct RtSpace {
    pub mesh: Arc<Mesh2D>,
    pub degree: usize,
    pub num_dofs: usize,
    n_interior: usize,
    cands: Vec<Candidate>,
    /// Scalar monomials generating the interior test space P_{s-1}^2.
    int_monos: Vec<(u32, u32)>,
    /// Rows give reference-orthonormal combinations of the interior vector
    /// monomials; scaled per element by 1/sqrt(det).
    int_combo: DMatrix<f64>,
    facet_rule: SegmentRule,
    volume_rule: TriangleRule,
}

impl RtSpace {
    pub fn new(mesh: Arc<Mesh2D>, degree: usize) -> Arc<Self> {
        let s = degree;
        let cands = candidates(s);
        let int_monos = scalar_monomials(s as isize - 1);
        let n_scalar = int_monos.len();
        let n_interior = 2 * n_scalar;
        let volume_rule = triangle_rule((2 * s + 2).max(2)).expect("quadrature degree");
        let facet_rule = segment_rule(2 * s + 2).expect("quadrature degree");

        // Reference Gram of the vector monomial test basis; block diagonal
        // with two copies of the scalar Gram.
        let int_combo = if n_interior > 0 {
            let mut scalar_gram = DMatrix::zeros(n_scalar, n_scalar);
            for (q, &p) in volume_rule.points.iter().enumerate() {
                let w = volume_rule.weights[q];
                for i in 0..n_scalar {
                    let (ai, bi) = int_monos[i];
                    let vi = p[0].powi(ai as i32) * p[1].powi(bi as i32);
                    for j in 0..n_scalar {
                        let (aj, bj) = int_monos[j];
                        let vj = p[0].powi(aj as i32) * p[1].powi(bj as i32);
                        scalar_gram[(i, j)] += w * vi * vj;
                    }
                }
            }
            let chol = scalar_gram
                .cholesky()
                .expect("monomial Gram matrix is positive definite");
            let linv = chol
                .l()
                .try_inverse()
                .expect("triangular factor is invertible");
            let mut combo = DMatrix::zeros(n_interior, n_interior);
            combo.view_mut((0, 0), (n_scalar, n_scalar)).copy_from(&linv);
            combo
                .view_mut((n_scalar, n_scalar), (n_scalar, n_scalar))
                .copy_from(&linv);
            combo
        } else {
            DMatrix::zeros(0, 0)
        };

        let num_dofs = mesh.facets.len() * (s + 1) + mesh.num_elements() * n_interior;
        Arc::new(RtSpace {
            mesh,
            degree: s,
            num_dofs,
            n_interior,
            cands,
            int_monos,
            int_combo,
            facet_rule,
            volume_rule,
        })
    }

    pub fn moments_per_facet(&self) -> usize {
        self.degree + 1
    }

    pub fn interior_dofs_per_element(&self) -> usize {
        self.n_interior
    }

    pub fn facet_dof(&self, facet: usize, m: usize) -> usize {
        facet * (self.degree + 1) + m
    }

    pub fn interior_dof(&self, element: usize, m: usize) -> usize {
        self.mesh.facets.len() * (self.degree + 1) + element * self.n_interior + m
    }

    pub fn local_dim(&self) -> usize {
        (self.degree + 1) * (self.degree + 3)
    }

    /// Global dof ids of an element in local order: three facets (local edge
    /// order) with their moments, then the interior moments.
    pub fn elem_dofs(&self, e: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.local_dim());
        for use_ in &self.mesh.element_facets[e] {
            for m in 0..=self.degree {
                out.push(self.facet_dof(use_.facet, m));
            }
        }
        for m in 0..self.n_interior {
            out.push(self.interior_dof(e, m));
        }
        out
    }

    /// Values of the orthonormal interior test function `m` at a reference
    /// point of element `e`.
    pub fn interior_test(&self, e: usize, m: usize, p: [f64; 2]) -> [f64; 2] {
        let n_scalar = self.int_monos.len();
        let scale = 1.0 / self.mesh.maps[e].det.sqrt();
        let mut v = [0.0, 0.0];
        // The combo matrix is block diagonal over the x and y components.
        for j in 0..n_scalar {
            let (a, b) = self.int_monos[j];
            let mono = p[0].powi(a as i32) * p[1].powi(b as i32);
            v[0] += self.int_combo[(m, j)] * mono;
            v[1] += self.int_combo[(m, n_scalar + j)] * mono;
        }
        [v[0] * scale, v[1] * scale]
    }

    /// Piola-mapped candidate value at a reference point.
    fn cand_value(&self, e: usize, j: usize, p: [f64; 2]) -> [f64; 2] {
        let c = &self.cands[j];
        let v = [eval_terms(&c.x, p), eval_terms(&c.y, p)];
        self.mesh.maps[e].piola(v)
    }

    fn cand_div(&self, e: usize, j: usize, p: [f64; 2]) -> f64 {
        eval_terms(&self.cands[j].div, p) / self.mesh.maps[e].det
    }

    /// Moment matrix of the candidates: D[i][j] = dof_i(candidate_j).
    fn moment_matrix(&self, e: usize) -> DMatrix<f64> {
        let dim = self.local_dim();
        let mesh = &self.mesh;
        let map = &mesh.maps[e];
        let mut d = DMatrix::zeros(dim, dim);
        let s = self.degree;
        let mut row = 0usize;
        for use_ in &mesh.element_facets[e] {
            let f = &mesh.facets[use_.facet];
            let n = f.normal;
            for m in 0..=s {
                for (q, &t) in self.facet_rule.points.iter().enumerate() {
                    let x = mesh.facet_point(use_.facet, t);
                    let p = map.to_ref(x);
                    let qm = facet_legendre(f.h, m, t);
                    let w = self.facet_rule.weights[q] * f.h;
                    for j in 0..dim {
                        let v = self.cand_value(e, j, p);
                        d[(row, j)] += w * (v[0] * n[0] + v[1] * n[1]) * qm;
                    }
                }
                row += 1;
            }
        }
        for m in 0..self.n_interior {
            for (q, &p) in self.volume_rule.points.iter().enumerate() {
                let w = self.volume_rule.weights[q] * map.det;
                let psi = self.interior_test(e, m, p);
                for j in 0..dim {
                    let v = self.cand_value(e, j, p);
                    d[(row, j)] += w * (v[0] * psi[0] + v[1] * psi[1]);
                }
            }
            row += 1;
        }
        d
    }

    /// Nodal basis of an element: column m holds the candidate coefficients
    /// of the basis field dual to local dof m.
    pub fn element_basis(&self, e: usize) -> ElementBasis<'_> {
        let d = self.moment_matrix(e);
        let dim = d.nrows();
        let inv = d
            .lu()
            .try_inverse()
            .expect("Raviart-Thomas moment matrix is unisolvent");
        ElementBasis { space: self, element: e, coeff: inv, dim }
    }

    pub fn zero_flux(self: &Arc<Self>) -> RtFlux {
        RtFlux { space: self.clone(), coeffs: vec![0.0; self.num_dofs] }
    }
}

/// On-demand nodal basis of one element.
pub struct ElementBasis<'a> {
    space: &'a RtSpace,
    element: usize,
    coeff: DMatrix<f64>,
    dim: usize,
}

impl ElementBasis<'_> {
    /// Value of local basis field `m` at a reference point.
    pub fn value(&self, m: usize, p: [f64; 2]) -> [f64; 2] {
        let mut out = [0.0, 0.0];
        for j in 0..self.dim {
            let c = self.coeff[(j, m)];
            if c != 0.0 {
                let v = self.space.cand_value(self.element, j, p);
                out[0] += c * v[0];
                out[1] += c * v[1];
            }
        }
        out
    }

    pub fn divergence(&self, m: usize, p: [f64; 2]) -> f64 {
        (0..self.dim)
            .map(|j| self.coeff[(j, m)] * self.space.cand_div(self.element, j, p))
            .sum()
    }

    /// Combine local dof values into candidate coefficients.
    fn combine(&self, local_dofs: &[f64]) -> DVector<f64> {
        let d = DVector::from_column_slice(local_dofs);
        &self.coeff * d
    }
}

/// A vector field in an RT space, stored by its global moment dofs.
#[derive(Debug, Clone)]
pub struct RtFlux {
    pub space: Arc<RtSpace>,
    pub coeffs: Vec<f64>,
}

impl RtFlux {
    pub fn new(space: Arc<RtSpace>, coeffs: Vec<f64>) -> Self {
        assert_eq!(coeffs.len(), space.num_dofs);
        RtFlux { space, coeffs }
    }

    fn local_dofs(&self, e: usize) -> Vec<f64> {
        self.space.elem_dofs(e).iter().map(|&g| self.coeffs[g]).collect()
    }

    /// Values at reference points of an element.
    pub fn eval(&self, e: usize, pts: &[[f64; 2]]) -> Vec<[f64; 2]> {
        let basis = self.space.element_basis(e);
        let a = basis.combine(&self.local_dofs(e));
        pts.iter()
            .map(|&p| {
                let mut v = [0.0, 0.0];
                for j in 0..basis.dim {
                    if a[j] != 0.0 {
                        let c = self.space.cand_value(e, j, p);
                        v[0] += a[j] * c[0];
                        v[1] += a[j] * c[1];
                    }
                }
                v
            })
            .collect()
    }

    /// Divergence values at reference points of an element.
    pub fn div(&self, e: usize, pts: &[[f64; 2]]) -> Vec<f64> {
        let basis = self.space.element_basis(e);
        let a = basis.combine(&self.local_dofs(e));
        pts.iter()
            .map(|&p| (0..basis.dim).map(|j| a[j] * self.space.cand_div(e, j, p)).sum())
            .collect()
    }

    /// Normal trace v.n_F along a facet at parameters `ts`, evaluated from
    /// one side. `None` when asking for the plus side of a boundary facet.
    pub fn normal_trace(&self, facet: usize, plus_side: bool, ts: &[f64]) -> Option<Vec<f64>> {
        let mesh = &self.space.mesh;
        let f = &mesh.facets[facet];
        let e = if plus_side { f.plus? } else { f.minus };
        let map = &mesh.maps[e];
        let pts: Vec<[f64; 2]> =
            ts.iter().map(|&t| map.to_ref(mesh.facet_point(facet, t))).collect();
        let vals = self.eval(e, &pts);
        Some(vals.iter().map(|v| v[0] * f.normal[0] + v[1] * f.normal[1]).collect())
    }

    /// Add another flux of the same space.
    pub fn add(&self, other: &RtFlux) -> RtFlux {
        assert!(Arc::ptr_eq(&self.space, &other.space));
        RtFlux {
            space: self.space.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

/// Re-express a flux in a higher-degree RT space over the same mesh by
/// evaluating the target moments on the same polynomial field (exact, since
/// RT_s is contained in RT_s' for s <= s').
pub fn promote(flux: &RtFlux, target: &Arc<RtSpace>) -> RtFlux {
    assert!(Arc::ptr_eq(&flux.space.mesh, &target.mesh));
    assert!(target.degree >= flux.space.degree);
    if Arc::ptr_eq(&flux.space, target) {
        return flux.clone();
    }
    let mesh = &target.mesh;
    let s = target.degree;
    let facet_rule = segment_rule(flux.space.degree + s + 2).expect("quadrature degree");
    let volume_rule =
        triangle_rule((flux.space.degree + 1 + s).max(2)).expect("quadrature degree");
    let mut coeffs = vec![0.0; target.num_dofs];
    for (fid, f) in mesh.facets.iter().enumerate() {
        let traces = flux.normal_trace(fid, false, &facet_rule.points).unwrap();
        for m in 0..=s {
            let mut val = 0.0;
            for (q, &t) in facet_rule.points.iter().enumerate() {
                val += facet_rule.weights[q] * f.h * traces[q] * facet_legendre(f.h, m, t);
            }
            coeffs[target.facet_dof(fid, m)] = val;
        }
    }
    for e in 0..mesh.num_elements() {
        if target.interior_dofs_per_element() == 0 {
            continue;
        }
        let det = mesh.maps[e].det;
        let vals = flux.eval(e, &volume_rule.points);
        for m in 0..target.interior_dofs_per_element() {
            let mut acc = 0.0;
            for (q, &p) in volume_rule.points.iter().enumerate() {
                let psi = target.interior_test(e, m, p);
                acc += volume_rule.weights[q] * det * (vals[q][0] * psi[0] + vals[q][1] * psi[1]);
            }
            coeffs[target.interior_dof(e, m)] = acc;
        }
    }
    RtFlux { space: target.clone(), coeffs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::unit_square_mesh;
    use crate::quadrature::segment_rule;

    fn rand_stream(seed: u64) -> impl FnMut() -> f64 {
        let mut state = seed;
        move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 33) as f64 / u32::MAX as f64 - 0.5
        }
    }

    #[test]
    fn dof_basis_duality_delta_pattern() {
        let mesh = Arc::new(unit_square_mesh(1));
        for s in 0..=2usize {
            let space = RtSpace::new(mesh.clone(), s);
            for e in 0..mesh.num_elements() {
                // moment_matrix(e) applied to the nodal basis must be the
                // identity; equivalently D * C = I.
                let d = space.moment_matrix(e);
                let basis = space.element_basis(e);
                let prod = &d * &basis.coeff;
                for i in 0..d.nrows() {
                    for j in 0..d.ncols() {
                        let expect = if i == j { 1.0 } else { 0.0 };
                        assert!(
                            (prod[(i, j)] - expect).abs() < 1e-11,
                            "s={s} e={e} ({i},{j}): {}",
                            prod[(i, j)]
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn rt0_divergence_matches_net_flux_oracle() {
        let mesh = Arc::new(unit_square_mesh(1));
        let space = RtSpace::new(mesh.clone(), 0);
        // Basis field of the first facet moment of element 0.
        let e = 0usize;
        let fid = mesh.element_facets[e][0].facet;
        let mut flux = space.zero_flux();
        flux.coeffs[space.facet_dof(fid, 0)] = 1.0;
        // Divergence is constant on the element.
        let divs = flux.div(e, &[[0.25, 0.25], [0.5, 0.1], [0.1, 0.6]]);
        for d in &divs {
            assert!((d - divs[0]).abs() < 1e-12);
        }
        // Oracle: integrate the normal flux over the element boundary by
        // quadrature and divide by the area.
        let seg = segment_rule(6).unwrap();
        let mut net = 0.0;
        for use_ in &mesh.element_facets[e] {
            let f = &mesh.facets[use_.facet];
            let vals = flux.normal_trace(use_.facet, use_.sign < 0.0, &seg.points).unwrap();
            let int: f64 = vals.iter().zip(&seg.weights).map(|(v, w)| v * w * f.h).sum();
            net += use_.sign * int;
        }
        let area = mesh.area(e);
        assert!((divs[0] - net / area).abs() < 1e-12);
    }

    #[test]
    fn normal_trace_is_single_valued_for_random_members() {
        let mesh = Arc::new(unit_square_mesh(2));
        let ts = [0.123, 0.5, 0.876];
        for s in 0..=2usize {
            let space = RtSpace::new(mesh.clone(), s);
            let mut rand = rand_stream(5 + s as u64);
            let coeffs: Vec<f64> = (0..space.num_dofs).map(|_| rand()).collect();
            let flux = RtFlux::new(space.clone(), coeffs);
            for (fid, f) in mesh.facets.iter().enumerate() {
                if f.is_boundary() {
                    continue;
                }
                let minus = flux.normal_trace(fid, false, &ts).unwrap();
                let plus = flux.normal_trace(fid, true, &ts).unwrap();
                for (m, p) in minus.iter().zip(&plus) {
                    assert!((m - p).abs() < 1e-12, "s={s} facet {fid}: {m} vs {p}");
                }
            }
        }
    }

    #[test]
    fn divergence_is_a_polynomial_of_degree_s() {
        // Compare div at points against its own projection onto P_s via the
        // interior machinery of a degree s+1 space (which tests against
        // P_s^2); simpler: fit through values at a lattice. Here we check
        // that div of an RT_s member of degree s is reproduced by a
        // Lagrange interpolant of degree s on the element.
        let mesh = Arc::new(unit_square_mesh(1));
        for s in 0..=2usize {
            let space = RtSpace::new(mesh.clone(), s);
            let mut rand = rand_stream(77 + s as u64);
            let coeffs: Vec<f64> = (0..space.num_dofs).map(|_| rand()).collect();
            let flux = RtFlux::new(space, coeffs);
            let basis = crate::spaces::LagrangeBasis::new(s.max(1));
            for e in 0..mesh.num_elements() {
                let nodes: Vec<[f64; 2]> = (0..basis.len()).map(|i| basis.node_ref(i)).collect();
                let dn = flux.div(e, &nodes);
                let probe = [[0.21, 0.33], [0.4, 0.17], [0.05, 0.71]];
                let dp = flux.div(e, &probe);
                for (idx, &p) in probe.iter().enumerate() {
                    let phi = basis.eval(p);
                    let interp: f64 = phi.iter().zip(&dn).map(|(a, b)| a * b).sum();
                    if s == 0 {
                        // Degree-0 divergence: constant; interpolant built
                        // from P1 nodal values is exact for constants too.
                        assert!((interp - dp[idx]).abs() < 1e-11);
                    } else {
                        assert!((interp - dp[idx]).abs() < 1e-11, "s={s}: {interp} vs {}", dp[idx]);
                    }
                }
            }
        }
    }

    #[test]
    fn promotion_preserves_the_field_pointwise() {
        let mesh = Arc::new(unit_square_mesh(1));
        let s0 = RtSpace::new(mesh.clone(), 1);
        let s1 = RtSpace::new(mesh.clone(), 2);
        let mut rand = rand_stream(31);
        let coeffs: Vec<f64> = (0..s0.num_dofs).map(|_| rand()).collect();
        let flux = RtFlux::new(s0, coeffs);
        let promoted = promote(&flux, &s1);
        let pts = [[0.2, 0.3], [0.6, 0.1], [0.05, 0.9]];
        for e in 0..mesh.num_elements() {
            let a = flux.eval(e, &pts);
            let b = promoted.eval(e, &pts);
            for (va, vb) in a.iter().zip(&b) {
                assert!((va[0] - vb[0]).abs() < 1e-10);
                assert!((va[1] - vb[1]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn interior_tests_are_orthonormal() {
        let mesh = Arc::new(unit_square_mesh(1));
        let space = RtSpace::new(mesh.clone(), 2);
        let rule = triangle_rule(6).unwrap();
        for e in 0..mesh.num_elements() {
            let det = mesh.maps[e].det;
            let n = space.interior_dofs_per_element();
            for i in 0..n {
                for j in 0..n {
                    let mut acc = 0.0;
                    for (q, &p) in rule.points.iter().enumerate() {
                        let a = space.interior_test(e, i, p);
                        let b = space.interior_test(e, j, p);
                        acc += rule.weights[q] * det * (a[0] * b[0] + a[1] * b[1]);
                    }
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((acc - expect).abs() < 1e-12, "({i},{j}): {acc}");
                }
            }
        }
    }
}
