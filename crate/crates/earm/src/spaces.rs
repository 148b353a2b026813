//! Lagrange finite element spaces (CG and DG) on triangles, with facet
//! traces, jump/average operators, and local L2 projections.
//!
//! Reference basis functions live on the principal lattice of the reference
//! triangle and are evaluated through the Silvester product formula, which
//! is exact for any degree. Degrees 1..=3 are supported by the rest of the
//! toolkit.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::mesh::{FacetClass, Mesh2D};
use crate::quadrature::{legendre, segment_rule, triangle_rule};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Continuity {
    Cg,
    Dg,
}

/// Where a reference node sits on the triangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    /// Local vertex index.
    Vertex(usize),
    /// Local edge (opposite the vertex of the same index) and the 0-based
    /// position along the local edge direction.
    Edge { edge: usize, index: usize },
    Interior,
}

/// Lagrange basis on the principal lattice of the reference triangle.
#[derive(Debug, Clone)]
pub struct LagrangeBasis {
    pub degree: usize,
    /// Barycentric multi-indices (i0, i1, i2) summing to the degree.
    pub nodes: Vec<[usize; 3]>,
    pub kinds: Vec<NodeKind>,
}

impl LagrangeBasis {
    pub fn new(degree: usize) -> Self {
        assert!(degree >= 1, "degree must be at least 1");
        let k = degree;
        let mut nodes = Vec::new();
        // Vertices first: multi-index k at the vertex position.
        for c in 0..3 {
            let mut m = [0; 3];
            m[c] = k;
            nodes.push(m);
        }
        // Edge nodes: edge e runs from vertex (e+1)%3 to (e+2)%3.
        for e in 0..3 {
            for j in 1..k {
                let mut m = [0; 3];
                m[(e + 1) % 3] = k - j;
                m[(e + 2) % 3] = j;
                nodes.push(m);
            }
        }
        // Interior nodes, lexicographic.
        for i0 in 1..k {
            for i1 in 1..k {
                let rest = k as isize - i0 as isize - i1 as isize;
                if rest >= 1 {
                    nodes.push([i0, i1, rest as usize]);
                }
            }
        }
        debug_assert_eq!(nodes.len(), (k + 1) * (k + 2) / 2);
        let kinds = nodes
            .iter()
            .map(|m| {
                let zeros: Vec<usize> = (0..3).filter(|&c| m[c] == 0).collect();
                match zeros.len() {
                    2 => NodeKind::Vertex((0..3).find(|&c| m[c] == k).unwrap()),
                    1 => {
                        let e = zeros[0];
                        // Position along the edge direction: the weight on
                        // the edge's end vertex.
                        NodeKind::Edge { edge: e, index: m[(e + 2) % 3] - 1 }
                    }
                    _ => NodeKind::Interior,
                }
            })
            .collect();
        LagrangeBasis { degree, nodes, kinds }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Reference coordinates of node `n`.
    pub fn node_ref(&self, n: usize) -> [f64; 2] {
        let m = self.nodes[n];
        let k = self.degree as f64;
        [m[1] as f64 / k, m[2] as f64 / k]
    }

    /// Values of all basis functions at a reference point.
    pub fn eval(&self, p: [f64; 2]) -> Vec<f64> {
        let lambda = [1.0 - p[0] - p[1], p[0], p[1]];
        self.nodes
            .iter()
            .map(|m| (0..3).map(|c| lattice_poly(self.degree, m[c], lambda[c]).0).product())
            .collect()
    }

    /// Values and reference gradients of all basis functions at a point.
    pub fn eval_with_grad(&self, p: [f64; 2]) -> (Vec<f64>, Vec<[f64; 2]>) {
        let lambda = [1.0 - p[0] - p[1], p[0], p[1]];
        let grad_lambda = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
        let mut values = Vec::with_capacity(self.nodes.len());
        let mut grads = Vec::with_capacity(self.nodes.len());
        for m in &self.nodes {
            let parts: [(f64, f64); 3] = [
                lattice_poly(self.degree, m[0], lambda[0]),
                lattice_poly(self.degree, m[1], lambda[1]),
                lattice_poly(self.degree, m[2], lambda[2]),
            ];
            let value = parts[0].0 * parts[1].0 * parts[2].0;
            let mut g = [0.0, 0.0];
            for c in 0..3 {
                let others: f64 =
                    (0..3).filter(|&c2| c2 != c).map(|c2| parts[c2].0).product();
                let d = parts[c].1 * others;
                g[0] += d * grad_lambda[c][0];
                g[1] += d * grad_lambda[c][1];
            }
            values.push(value);
            grads.push(g);
        }
        (values, grads)
    }
}

/// One factor of the Silvester product: P(x) = prod_{m<i} (k x - m)/(i - m)
/// and its derivative, via leave-one-out products.
fn lattice_poly(k: usize, i: usize, x: f64) -> (f64, f64) {
    if i == 0 {
        return (1.0, 0.0);
    }
    let mut value = 1.0;
    for m in 0..i {
        value *= (k as f64 * x - m as f64) / (i - m) as f64;
    }
    let mut deriv = 0.0;
    for m in 0..i {
        let mut prod = k as f64 / (i - m) as f64;
        for m2 in 0..i {
            if m2 != m {
                prod *= (k as f64 * x - m2 as f64) / (i - m2) as f64;
            }
        }
        deriv += prod;
    }
    (value, deriv)
}

/// A CG or DG Lagrange space over a mesh.
#[derive(Debug)]
pub struct LagrangeSpace {
    pub mesh: Arc<Mesh2D>,
    pub degree: usize,
    pub continuity: Continuity,
    pub basis: LagrangeBasis,
    pub num_dofs: usize,
    element_dofs: Vec<usize>,
    /// Physical coordinates of each global dof's Lagrange node.
    pub dof_coords: Vec<[f64; 2]>,
    /// CG only: dofs whose node lies on a Dirichlet facet.
    pub dirichlet_dofs: Vec<usize>,
    pub is_dirichlet: Vec<bool>,
}

impl LagrangeSpace {
    pub fn new(mesh: Arc<Mesh2D>, degree: usize, continuity: Continuity) -> Arc<Self> {
        let basis = LagrangeBasis::new(degree);
        let nloc = basis.len();
        let nelems = mesh.num_elements();
        let mut element_dofs = vec![0usize; nelems * nloc];
        let (num_dofs, dof_coords) = match continuity {
            Continuity::Dg => {
                let n = nelems * nloc;
                let mut coords = vec![[0.0, 0.0]; n];
                for e in 0..nelems {
                    for l in 0..nloc {
                        let g = e * nloc + l;
                        element_dofs[g] = g;
                        coords[g] = mesh.maps[e].from_ref(basis.node_ref(l));
                    }
                }
                (n, coords)
            }
            Continuity::Cg => {
                let nv = mesh.num_vertices();
                let nf = mesh.facets.len();
                let per_facet = degree - 1;
                let n_int = nloc - 3 - 3 * per_facet;
                let n = nv + nf * per_facet + nelems * n_int;
                let mut coords = vec![[0.0, 0.0]; n];
                for e in 0..nelems {
                    let tri = mesh.triangles[e];
                    let mut int_seen = 0usize;
                    for (l, kind) in basis.kinds.iter().enumerate() {
                        let g = match *kind {
                            NodeKind::Vertex(c) => tri[c],
                            NodeKind::Edge { edge, index } => {
                                let fu = mesh.element_facets[e][edge];
                                let f = &mesh.facets[fu.facet];
                                // Local edge direction runs from vertex
                                // (edge+1)%3 to (edge+2)%3; flip when it
                                // disagrees with the global low-to-high
                                // convention.
                                let start = tri[(edge + 1) % 3];
                                let m = if start == f.vertices[0] {
                                    index
                                } else {
                                    per_facet - 1 - index
                                };
                                nv + fu.facet * per_facet + m
                            }
                            NodeKind::Interior => {
                                let g = nv + nf * per_facet + e * n_int + int_seen;
                                int_seen += 1;
                                g
                            }
                        };
                        element_dofs[e * nloc + l] = g;
                        coords[g] = mesh.maps[e].from_ref(basis.node_ref(l));
                    }
                }
                (n, coords)
            }
        };

        let mut is_dirichlet = vec![false; num_dofs];
        if continuity == Continuity::Cg {
            let nv = mesh.num_vertices();
            let per_facet = degree - 1;
            for (fid, f) in mesh.facets.iter().enumerate() {
                if f.class == FacetClass::DirichletBdry {
                    is_dirichlet[f.vertices[0]] = true;
                    is_dirichlet[f.vertices[1]] = true;
                    for m in 0..per_facet {
                        is_dirichlet[nv + fid * per_facet + m] = true;
                    }
                }
            }
        }
        let dirichlet_dofs = (0..num_dofs).filter(|&g| is_dirichlet[g]).collect();

        Arc::new(LagrangeSpace {
            mesh,
            degree,
            continuity,
            basis,
            num_dofs,
            element_dofs,
            dof_coords,
            dirichlet_dofs,
            is_dirichlet,
        })
    }

    pub fn ndofs_per_element(&self) -> usize {
        self.basis.len()
    }

    pub fn elem_dofs(&self, e: usize) -> &[usize] {
        let n = self.basis.len();
        &self.element_dofs[e * n..(e + 1) * n]
    }

    /// Local node indices lying on local edge `edge`, ordered along the
    /// local edge direction including the two endpoints.
    pub fn edge_nodes(&self, edge: usize) -> Vec<usize> {
        let k = self.degree;
        let mut out = Vec::with_capacity(k + 1);
        out.push((edge + 1) % 3); // start vertex
        for (l, kind) in self.basis.kinds.iter().enumerate() {
            if let NodeKind::Edge { edge: e2, .. } = kind {
                if *e2 == edge {
                    out.push(l);
                }
            }
        }
        out.push((edge + 2) % 3); // end vertex
        out
    }

    /// Nodal interpolant of a callable.
    pub fn interpolate(self: &Arc<Self>, f: impl Fn(f64, f64) -> f64) -> FeFunction {
        let coeffs = self.dof_coords.iter().map(|p| f(p[0], p[1])).collect();
        FeFunction { space: self.clone(), coeffs }
    }

    pub fn zero_function(self: &Arc<Self>) -> FeFunction {
        FeFunction { space: self.clone(), coeffs: vec![0.0; self.num_dofs] }
    }
}

/// A finite element function: coefficients over a Lagrange space.
#[derive(Debug, Clone)]
pub struct FeFunction {
    pub space: Arc<LagrangeSpace>,
    pub coeffs: Vec<f64>,
}

impl FeFunction {
    pub fn new(space: Arc<LagrangeSpace>, coeffs: Vec<f64>) -> Self {
        assert_eq!(coeffs.len(), space.num_dofs);
        FeFunction { space, coeffs }
    }

    /// Values at reference points of an element.
    pub fn eval(&self, e: usize, pts: &[[f64; 2]]) -> Vec<f64> {
        let dofs = self.space.elem_dofs(e);
        pts.iter()
            .map(|&p| {
                let phi = self.space.basis.eval(p);
                phi.iter().zip(dofs).map(|(v, &g)| v * self.coeffs[g]).sum()
            })
            .collect()
    }

    /// Physical gradients at reference points of an element.
    pub fn eval_grad(&self, e: usize, pts: &[[f64; 2]]) -> Vec<[f64; 2]> {
        let dofs = self.space.elem_dofs(e);
        let map = &self.space.mesh.maps[e];
        pts.iter()
            .map(|&p| {
                let (_, grads) = self.space.basis.eval_with_grad(p);
                let mut g = [0.0, 0.0];
                for (gr, &gd) in grads.iter().zip(dofs) {
                    let c = self.coeffs[gd];
                    g[0] += c * gr[0];
                    g[1] += c * gr[1];
                }
                map.grad_to_phys(g)
            })
            .collect()
    }

    /// One-sided trace values on a facet at parameters `ts` (facet
    /// parametrization low-to-high vertex index). `None` when asking for the
    /// plus side of a boundary facet.
    pub fn trace(&self, facet: usize, plus_side: bool, ts: &[f64]) -> Option<Vec<f64>> {
        let mesh = &self.space.mesh;
        let f = &mesh.facets[facet];
        let e = if plus_side { f.plus? } else { f.minus };
        let map = &mesh.maps[e];
        let pts: Vec<[f64; 2]> =
            ts.iter().map(|&t| map.to_ref(mesh.facet_point(facet, t))).collect();
        Some(self.eval(e, &pts))
    }

    /// Facet jump [[v]] at parameters `ts`: v^- - v^+ on interior facets,
    /// the one-sided trace on boundary facets.
    pub fn jump(&self, facet: usize, ts: &[f64]) -> Vec<f64> {
        let minus = self.trace(facet, false, ts).unwrap();
        match self.trace(facet, true, ts) {
            Some(plus) => minus.iter().zip(&plus).map(|(m, p)| m - p).collect(),
            None => minus,
        }
    }
}

/// Weighted average {v}_w^F = w^+ v^+ + w^- v^- on interior facets, the
/// one-sided value on boundary facets.
pub fn avg_w(minus: f64, plus: Option<f64>, omega_minus: f64, omega_plus: f64) -> f64 {
    match plus {
        Some(p) => omega_plus * p + omega_minus * minus,
        None => minus,
    }
}

/// Conjugate average {v}_F^w = w^- v^+ + w^+ v^-; zero on boundary facets.
pub fn avg_upper(minus: f64, plus: Option<f64>, omega_minus: f64, omega_plus: f64) -> f64 {
    match plus {
        Some(p) => omega_minus * p + omega_plus * minus,
        None => 0.0,
    }
}

/// Jump [[v]] = v^- - v^+; one-sided trace on boundary facets.
pub fn jump_vals(minus: f64, plus: Option<f64>) -> f64 {
    match plus {
        Some(p) => minus - p,
        None => minus,
    }
}

/// Orthonormal Legendre-type facet basis in the arc-length parameter:
/// q_m(t) = sqrt((2m+1)/h) P_m(2t-1) so that (q_m, q_n)_F = delta_mn.
pub fn facet_legendre(h: f64, m: usize, t: f64) -> f64 {
    ((2.0 * m as f64 + 1.0) / h).sqrt() * legendre(m, 2.0 * t - 1.0)
}

/// L2 projection of a callable onto a DG space, element by element.
pub fn l2_project_dg(
    f: &dyn Fn(f64, f64) -> f64,
    space: &Arc<LagrangeSpace>,
    quad_degree: usize,
) -> FeFunction {
    assert_eq!(space.continuity, Continuity::Dg);
    let mesh = &space.mesh;
    let k = space.degree;
    let rule = triangle_rule(quad_degree.max(2 * k)).expect("quadrature degree");
    let nloc = space.basis.len();
    let mut coeffs = vec![0.0; space.num_dofs];
    // The reference mass matrix is shared by all elements (affine family);
    // the physical det factor cancels between mass and load.
    let mut mass = DMatrix::zeros(nloc, nloc);
    let mut phi_cache = Vec::with_capacity(rule.points.len());
    for (q, &p) in rule.points.iter().enumerate() {
        let phi = space.basis.eval(p);
        for i in 0..nloc {
            for j in 0..nloc {
                mass[(i, j)] += rule.weights[q] * phi[i] * phi[j];
            }
        }
        phi_cache.push(phi);
    }
    let mass_lu = mass.lu();
    for e in 0..mesh.num_elements() {
        let map = &mesh.maps[e];
        let mut rhs = DVector::zeros(nloc);
        for (q, &p) in rule.points.iter().enumerate() {
            let x = map.from_ref(p);
            let fv = f(x[0], x[1]);
            for i in 0..nloc {
                rhs[i] += rule.weights[q] * fv * phi_cache[q][i];
            }
        }
        let sol = mass_lu.solve(&rhs).expect("reference mass matrix is SPD");
        for (l, &g) in space.elem_dofs(e).iter().enumerate() {
            coeffs[g] = sol[l];
        }
    }
    FeFunction { space: space.clone(), coeffs }
}

/// Coefficients of the L2 projection of a callable onto P_s(F) in the
/// orthonormal facet Legendre basis: c_m = (f, q_m)_F.
pub fn l2_project_facet(
    f: &dyn Fn(f64, f64) -> f64,
    mesh: &Mesh2D,
    facet: usize,
    s: usize,
    quad_degree: usize,
) -> Vec<f64> {
    let h = mesh.facets[facet].h;
    let rule = segment_rule(quad_degree.max(2 * s + 2)).expect("quadrature degree");
    (0..=s)
        .map(|m| {
            h * rule.integrate(|t| {
                let x = mesh.facet_point(facet, t);
                f(x[0], x[1]) * facet_legendre(h, m, t)
            })
        })
        .collect()
}

/// Evaluate a facet polynomial given by orthonormal Legendre coefficients.
pub fn eval_facet_poly(coeffs: &[f64], h: f64, t: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(m, c)| c * facet_legendre(h, m, t))
        .sum()
}
