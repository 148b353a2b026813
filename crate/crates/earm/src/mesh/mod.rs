//! Conforming 2D triangular meshes with full facet topology.
//!
//! Triangles are stored positively oriented with the refinement edge first:
//! for a stored triple `[a, b, c]` the refinement edge is `(a, b)` and `c`
//! is the peak (newest) vertex. Local edge `i` is the edge opposite local
//! vertex `i`.
//!
//! Facet orientation conventions:
//! - the global facet normal `n_F` points out of the minus element; for
//!   interior facets the minus element is the one with the lower index,
//!   for boundary facets it is the unique incident element;
//! - `sign_K(F)` is +1 when the outward normal of `K` on `F` equals `n_F`;
//! - the facet parametrization runs from the lower global vertex index to
//!   the higher one.

mod generators;
mod io;
mod refine;

pub use generators::{kellogg_mesh, lshape_mesh, unit_square_mesh};
pub use io::{read_mesh, write_mesh};

use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

use crate::problems::CoefficientField;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("triangle {element} has non-positive signed area {area}")]
    Geometry { element: usize, area: f64 },
    #[error("edge ({0}, {1}) is shared by more than two triangles")]
    OverSharedEdge(usize, usize),
    #[error("hanging vertex {vertex} on edge ({0}, {1})", .edge[0], .edge[1])]
    HangingVertex { vertex: usize, edge: [usize; 2] },
    #[error("boundary facet ({0}, {1}) has no boundary tag", .edge[0], .edge[1])]
    UntaggedBoundaryFacet { edge: [usize; 2] },
    #[error("tag given for ({0}, {1}) which is not a boundary facet", .edge[0], .edge[1])]
    TagOnNonBoundary { edge: [usize; 2] },
    #[error("triangle {element} references vertex {vertex} out of range")]
    VertexOutOfRange { element: usize, vertex: usize },
    #[error("the Dirichlet part of the boundary is empty")]
    NoDirichletBoundary,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Classification of a facet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FacetClass {
    Interior,
    DirichletBdry,
    NeumannBdry,
}

/// A mesh facet (an edge in 2D) with its derived data.
#[derive(Debug, Clone)]
pub struct Facet {
    /// Endpoint vertex indices, ordered `vertices[0] < vertices[1]`.
    pub vertices: [usize; 2],
    /// Facet length.
    pub h: f64,
    /// Global unit normal, outward from the minus element.
    pub normal: [f64; 2],
    /// Minus element (lower index for interior facets).
    pub minus: usize,
    /// Plus element; `None` on the boundary.
    pub plus: Option<usize>,
    pub class: FacetClass,
}

impl Facet {
    pub fn is_boundary(&self) -> bool {
        self.plus.is_none()
    }
}

/// Per-element reference to one of its facets.
#[derive(Debug, Clone, Copy)]
pub struct FacetUse {
    pub facet: usize,
    /// `sign_K(F)`: +1 if the element's outward normal equals the global one.
    pub sign: f64,
}

/// Affine map from the reference triangle (0,0)-(1,0)-(0,1) to an element.
#[derive(Debug, Clone, Copy)]
pub struct ElementMap {
    pub origin: [f64; 2],
    /// Columns are the edge vectors v1-v0 and v2-v0.
    pub jac: [[f64; 2]; 2],
    pub inv: [[f64; 2]; 2],
    pub det: f64,
}

impl ElementMap {
    pub fn from_ref(&self, p: [f64; 2]) -> [f64; 2] {
        [
            self.origin[0] + self.jac[0][0] * p[0] + self.jac[0][1] * p[1],
            self.origin[1] + self.jac[1][0] * p[0] + self.jac[1][1] * p[1],
        ]
    }

    pub fn to_ref(&self, x: [f64; 2]) -> [f64; 2] {
        let d = [x[0] - self.origin[0], x[1] - self.origin[1]];
        [
            self.inv[0][0] * d[0] + self.inv[0][1] * d[1],
            self.inv[1][0] * d[0] + self.inv[1][1] * d[1],
        ]
    }

    /// Push a reference gradient to a physical gradient: J^{-T} grad.
    pub fn grad_to_phys(&self, g: [f64; 2]) -> [f64; 2] {
        [
            self.inv[0][0] * g[0] + self.inv[1][0] * g[1],
            self.inv[0][1] * g[0] + self.inv[1][1] * g[1],
        ]
    }

    /// Piola transform of a reference vector field value: (1/det) J v.
    pub fn piola(&self, v: [f64; 2]) -> [f64; 2] {
        [
            (self.jac[0][0] * v[0] + self.jac[0][1] * v[1]) / self.det,
            (self.jac[1][0] * v[0] + self.jac[1][1] * v[1]) / self.det,
        ]
    }
}

/// Conforming triangulation with facet topology. Immutable after
/// construction; [`Mesh2D::refine`] returns a new mesh.
#[derive(Debug, Clone)]
pub struct Mesh2D {
    pub vertices: Vec<[f64; 2]>,
    /// Positively oriented triples, refinement edge first (peak-last form).
    pub triangles: Vec<[usize; 3]>,
    /// Coefficient region id per element; inherited under refinement.
    pub regions: Vec<u32>,
    /// Parent element in the mesh this one was refined from.
    pub parents: Vec<Option<usize>>,
    pub facets: Vec<Facet>,
    /// For each element, its 3 facets in local edge order (edge i opposite
    /// vertex i) with orientation signs.
    pub element_facets: Vec<[FacetUse; 3]>,
    /// Elements incident to each vertex, ascending.
    pub vertex_elements: Vec<Vec<usize>>,
    pub boundary_vertex: Vec<bool>,
    pub maps: Vec<ElementMap>,
}

/// Patch of elements around a vertex, with the subset attaining the maximal
/// coefficient and the chosen anchor element.
#[derive(Debug, Clone)]
pub struct VertexPatch {
    pub vertex: usize,
    pub elements: Vec<usize>,
    /// Elements attaining the patch-maximal lambda_max(A_K).
    pub hat_elements: Vec<usize>,
    /// Lowest-index element of `hat_elements`.
    pub anchor_element: usize,
}

pub(crate) fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Build a conforming mesh from raw arrays, validating topology and
/// geometry. Refinement edges are normalized to the longest edge of each
/// triangle, which fixes the initial newest-vertex-bisection labeling.
pub fn build_mesh(
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    regions: Vec<u32>,
    boundary_tags: &[([usize; 2], FacetClass)],
) -> Result<Mesh2D, MeshError> {
    let parents = vec![None; triangles.len()];
    Mesh2D::build(vertices, triangles, regions, parents, boundary_tags, true)
}

impl Mesh2D {
    pub(crate) fn build(
        vertices: Vec<[f64; 2]>,
        mut triangles: Vec<[usize; 3]>,
        regions: Vec<u32>,
        parents: Vec<Option<usize>>,
        boundary_tags: &[([usize; 2], FacetClass)],
        normalize_refinement_edges: bool,
    ) -> Result<Mesh2D, MeshError> {
        assert_eq!(triangles.len(), regions.len());
        assert_eq!(triangles.len(), parents.len());
        for (e, tri) in triangles.iter().enumerate() {
            for &v in tri {
                if v >= vertices.len() {
                    return Err(MeshError::VertexOutOfRange { element: e, vertex: v });
                }
            }
            let area = 0.5
                * cross(
                    sub(vertices[tri[1]], vertices[tri[0]]),
                    sub(vertices[tri[2]], vertices[tri[0]]),
                );
            if area <= 0.0 {
                return Err(MeshError::Geometry { element: e, area });
            }
        }

        if normalize_refinement_edges {
            for tri in triangles.iter_mut() {
                // Rotate so the longest edge becomes (v0, v1); cyclic
                // rotations preserve orientation. Ties go to the first
                // candidate for determinism.
                let mut best = 0usize;
                let mut best_len = -1.0;
                for i in 0..3 {
                    let len = dist(vertices[tri[i]], vertices[tri[(i + 1) % 3]]);
                    if len > best_len + 1e-14 * len.max(1.0) {
                        best_len = len;
                        best = i;
                    }
                }
                *tri = [tri[best], tri[(best + 1) % 3], tri[(best + 2) % 3]];
            }
        }

        // Edge incidence.
        let mut edge_elems: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
        for (e, tri) in triangles.iter().enumerate() {
            for local in 0..3usize {
                let (p, q) = (tri[(local + 1) % 3], tri[(local + 2) % 3]);
                edge_elems.entry(edge_key(p, q)).or_default().push((e, local));
            }
        }
        for (&(a, b), inc) in &edge_elems {
            if inc.len() > 2 {
                return Err(MeshError::OverSharedEdge(a, b));
            }
        }

        // Hanging-vertex check on boundary-looking edges: a vertex that is
        // edge-connected to both endpoints and lies strictly inside the
        // segment indicates a non-conforming input.
        let mut vertex_neighbors: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); vertices.len()];
        for &(a, b) in edge_elems.keys() {
            vertex_neighbors[a].insert(b);
            vertex_neighbors[b].insert(a);
        }
        for (&(a, b), inc) in &edge_elems {
            if inc.len() != 1 {
                continue;
            }
            for &c in vertex_neighbors[a].intersection(&vertex_neighbors[b]) {
                let pa = vertices[a];
                let pb = vertices[b];
                let pc = vertices[c];
                let ab = sub(pb, pa);
                let ac = sub(pc, pa);
                let len2 = ab[0] * ab[0] + ab[1] * ab[1];
                let t = (ac[0] * ab[0] + ac[1] * ab[1]) / len2;
                if cross(ab, ac).abs() <= 1e-12 * len2 && t > 1e-12 && t < 1.0 - 1e-12 {
                    return Err(MeshError::HangingVertex { vertex: c, edge: [a, b] });
                }
            }
        }

        let mut tag_map: BTreeMap<(usize, usize), FacetClass> = BTreeMap::new();
        for &(edge, class) in boundary_tags {
            tag_map.insert(edge_key(edge[0], edge[1]), class);
        }

        let mut facets = Vec::with_capacity(edge_elems.len());
        let mut element_facets = vec![[FacetUse { facet: 0, sign: 0.0 }; 3]; triangles.len()];
        for (&(a, b), inc) in &edge_elems {
            let fid = facets.len();
            let (minus, minus_local, plus) = match inc.as_slice() {
                [(e, local)] => (*e, *local, None),
                [(e1, l1), (e2, l2)] => {
                    if e1 < e2 {
                        (*e1, *l1, Some((*e2, *l2)))
                    } else {
                        (*e2, *l2, Some((*e1, *l1)))
                    }
                }
                _ => unreachable!(),
            };
            let class = if plus.is_some() {
                if tag_map.remove(&(a, b)).is_some() {
                    return Err(MeshError::TagOnNonBoundary { edge: [a, b] });
                }
                FacetClass::Interior
            } else {
                match tag_map.remove(&(a, b)) {
                    Some(c) => c,
                    None => return Err(MeshError::UntaggedBoundaryFacet { edge: [a, b] }),
                }
            };
            // Outward normal of the minus element along its CCW edge (p,q).
            let tri = triangles[minus];
            let (p, q) = (tri[(minus_local + 1) % 3], tri[(minus_local + 2) % 3]);
            let t = sub(vertices[q], vertices[p]);
            let h = (t[0] * t[0] + t[1] * t[1]).sqrt();
            let normal = [t[1] / h, -t[0] / h];
            facets.push(Facet {
                vertices: [a, b],
                h,
                normal,
                minus,
                plus: plus.map(|(e, _)| e),
                class,
            });
            element_facets[minus][minus_local] = FacetUse { facet: fid, sign: 1.0 };
            if let Some((e, local)) = plus {
                element_facets[e][local] = FacetUse { facet: fid, sign: -1.0 };
            }
        }
        if let Some((&(a, b), _)) = tag_map.iter().next() {
            return Err(MeshError::TagOnNonBoundary { edge: [a, b] });
        }
        if !facets.iter().any(|f| f.class == FacetClass::DirichletBdry) {
            return Err(MeshError::NoDirichletBoundary);
        }

        let mut vertex_elements: Vec<Vec<usize>> = vec![Vec::new(); vertices.len()];
        for (e, tri) in triangles.iter().enumerate() {
            for &v in tri {
                vertex_elements[v].push(e);
            }
        }
        let mut boundary_vertex = vec![false; vertices.len()];
        for f in &facets {
            if f.is_boundary() {
                boundary_vertex[f.vertices[0]] = true;
                boundary_vertex[f.vertices[1]] = true;
            }
        }

        let maps = triangles
            .iter()
            .map(|tri| {
                let p0 = vertices[tri[0]];
                let e1 = sub(vertices[tri[1]], p0);
                let e2 = sub(vertices[tri[2]], p0);
                let det = cross(e1, e2);
                let jac = [[e1[0], e2[0]], [e1[1], e2[1]]];
                let inv = [
                    [jac[1][1] / det, -jac[0][1] / det],
                    [-jac[1][0] / det, jac[0][0] / det],
                ];
                ElementMap { origin: p0, jac, inv, det }
            })
            .collect();

        Ok(Mesh2D {
            vertices,
            triangles,
            regions,
            parents,
            facets,
            element_facets,
            vertex_elements,
            boundary_vertex,
            maps,
        })
    }

    pub fn num_elements(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_interior_facets(&self) -> usize {
        self.facets.iter().filter(|f| f.class == FacetClass::Interior).count()
    }

    pub fn area(&self, e: usize) -> f64 {
        0.5 * self.maps[e].det
    }

    /// Element diameter (longest edge).
    pub fn diameter(&self, e: usize) -> f64 {
        let t = self.triangles[e];
        (0..3)
            .map(|i| dist(self.vertices[t[i]], self.vertices[t[(i + 1) % 3]]))
            .fold(0.0, f64::max)
    }

    pub fn centroid(&self, e: usize) -> [f64; 2] {
        let t = self.triangles[e];
        let mut c = [0.0, 0.0];
        for &v in &t {
            c[0] += self.vertices[v][0] / 3.0;
            c[1] += self.vertices[v][1] / 3.0;
        }
        c
    }

    /// Smallest interior angle over all elements, in radians.
    pub fn min_angle(&self) -> f64 {
        let mut min = f64::MAX;
        for tri in &self.triangles {
            for i in 0..3 {
                let a = self.vertices[tri[i]];
                let b = self.vertices[tri[(i + 1) % 3]];
                let c = self.vertices[tri[(i + 2) % 3]];
                let u = sub(b, a);
                let v = sub(c, a);
                let ang = cross(u, v)
                    .atan2(u[0] * v[0] + u[1] * v[1]);
                min = min.min(ang.abs());
            }
        }
        min
    }

    /// Physical point on a facet at parameter `t` in [0,1], running from the
    /// lower-index endpoint to the higher one.
    pub fn facet_point(&self, facet: usize, t: f64) -> [f64; 2] {
        let f = &self.facets[facet];
        let a = self.vertices[f.vertices[0]];
        let b = self.vertices[f.vertices[1]];
        [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
    }

    /// One patch per vertex; `hat_elements` uses the scalar ordering
    /// lambda_max(A_K) with ties grouped at relative 1e-12, and the anchor is
    /// the lowest-index hat element.
    pub fn vertex_patches(&self, coeff: &CoefficientField) -> Vec<VertexPatch> {
        (0..self.num_vertices())
            .map(|z| {
                let elements = self.vertex_elements[z].clone();
                let max = elements
                    .iter()
                    .map(|&e| coeff.lambda_max(e))
                    .fold(f64::MIN, f64::max);
                let hat_elements: Vec<usize> = elements
                    .iter()
                    .copied()
                    .filter(|&e| coeff.lambda_max(e) >= max * (1.0 - 1e-12))
                    .collect();
                let anchor_element = hat_elements[0];
                VertexPatch { vertex: z, elements, hat_elements, anchor_element }
            })
            .collect()
    }

    /// Boundary tags of the current mesh as (edge, class) pairs.
    pub(crate) fn boundary_tags(&self) -> Vec<([usize; 2], FacetClass)> {
        self.facets
            .iter()
            .filter(|f| f.is_boundary())
            .map(|f| (f.vertices, f.class))
            .collect()
    }
}
