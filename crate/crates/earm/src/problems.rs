//! Problem definitions: diffusion tensors, facet weights, sources, boundary
//! data, and exact solutions for the benchmark problems.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use thiserror::Error;

use crate::mesh::{kellogg_mesh, lshape_mesh, unit_square_mesh, Mesh2D};

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("region {0} tensor is not symmetric positive definite")]
    NotSpd(u32),
    #[error("element {element} references region {region} with no tensor")]
    MissingRegion { element: usize, region: u32 },
    #[error("unknown problem name `{0}`")]
    UnknownProblem(String),
}

/// Symmetric 2x2 tensor stored as (a11, a12, a22).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tensor2 {
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
}

impl Tensor2 {
    pub fn new(a11: f64, a12: f64, a22: f64) -> Self {
        Tensor2 { a11, a12, a22 }
    }

    pub fn scalar(alpha: f64) -> Self {
        Tensor2 { a11: alpha, a12: 0.0, a22: alpha }
    }

    pub fn diag(a11: f64, a22: f64) -> Self {
        Tensor2 { a11, a12: 0.0, a22 }
    }

    pub fn identity() -> Self {
        Tensor2::scalar(1.0)
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.a11 * v[0] + self.a12 * v[1],
            self.a12 * v[0] + self.a22 * v[1],
        ]
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a12
    }

    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    /// Eigenvalues, ascending.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let mid = 0.5 * self.trace();
        let rad = (0.25 * (self.a11 - self.a22).powi(2) + self.a12 * self.a12).sqrt();
        [mid - rad, mid + rad]
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues()[1]
    }

    pub fn is_spd(&self) -> bool {
        self.eigenvalues()[0] > 0.0
    }

    /// Principal square root of an SPD tensor:
    /// sqrt(T) = (T + sqrt(det) I) / sqrt(tr + 2 sqrt(det)).
    pub fn sqrt(&self) -> Tensor2 {
        let s = self.det().sqrt();
        let d = (self.trace() + 2.0 * s).sqrt();
        Tensor2 {
            a11: (self.a11 + s) / d,
            a12: self.a12 / d,
            a22: (self.a22 + s) / d,
        }
    }

    pub fn inverse(&self) -> Tensor2 {
        let det = self.det();
        Tensor2 {
            a11: self.a22 / det,
            a12: -self.a12 / det,
            a22: self.a11 / det,
        }
    }

    pub fn inv_sqrt(&self) -> Tensor2 {
        self.sqrt().inverse()
    }
}

/// Piecewise-constant SPD tensor field, resolved per element of a mesh.
#[derive(Debug, Clone)]
pub struct CoefficientField {
    region_tensors: BTreeMap<u32, Tensor2>,
    per_element: Vec<Tensor2>,
    lambda: Vec<f64>,
}

impl CoefficientField {
    pub fn new(mesh: &Mesh2D, regions: &BTreeMap<u32, Tensor2>) -> Result<Self, ProblemError> {
        for (&id, t) in regions {
            let symmetric_err = 0.0; // storage is symmetric by construction
            let _ = symmetric_err;
            if !t.is_spd() {
                return Err(ProblemError::NotSpd(id));
            }
        }
        let mut per_element = Vec::with_capacity(mesh.num_elements());
        for (e, &r) in mesh.regions.iter().enumerate() {
            let t = regions
                .get(&r)
                .copied()
                .ok_or(ProblemError::MissingRegion { element: e, region: r })?;
            per_element.push(t);
        }
        let lambda = per_element.iter().map(|t| t.lambda_max()).collect();
        Ok(CoefficientField {
            region_tensors: regions.clone(),
            per_element,
            lambda,
        })
    }

    pub fn uniform(mesh: &Mesh2D, tensor: Tensor2) -> Self {
        let mut regions = BTreeMap::new();
        for &r in &mesh.regions {
            regions.insert(r, tensor);
        }
        Self::new(mesh, &regions).expect("uniform tensor must be SPD")
    }

    pub fn tensor(&self, element: usize) -> Tensor2 {
        self.per_element[element]
    }

    pub fn lambda_max(&self, element: usize) -> f64 {
        self.lambda[element]
    }

    pub fn region_tensors(&self) -> &BTreeMap<u32, Tensor2> {
        &self.region_tensors
    }
}

/// Per-facet diffusion weights built from the maximal eigenvalues on the two
/// sides: omega_F^+- = alpha_F^-+ / (alpha_F^- + alpha_F^+).
#[derive(Debug, Clone)]
pub struct FacetWeights {
    pub alpha_minus: Vec<f64>,
    pub alpha_plus: Vec<f64>,
    pub omega_minus: Vec<f64>,
    pub omega_plus: Vec<f64>,
    pub alpha_min: Vec<f64>,
    pub alpha_max: Vec<f64>,
    /// A_F = min(alpha^+, alpha^-) on interior facets, alpha^- on Dirichlet
    /// facets.
    pub a_f: Vec<f64>,
}

pub fn facet_weights(mesh: &Mesh2D, coeff: &CoefficientField) -> FacetWeights {
    let n = mesh.facets.len();
    let mut w = FacetWeights {
        alpha_minus: vec![0.0; n],
        alpha_plus: vec![0.0; n],
        omega_minus: vec![0.0; n],
        omega_plus: vec![0.0; n],
        alpha_min: vec![0.0; n],
        alpha_max: vec![0.0; n],
        a_f: vec![0.0; n],
    };
    for (fid, f) in mesh.facets.iter().enumerate() {
        let am = coeff.lambda_max(f.minus);
        match f.plus {
            Some(plus) => {
                let ap = coeff.lambda_max(plus);
                w.alpha_minus[fid] = am;
                w.alpha_plus[fid] = ap;
                w.omega_minus[fid] = ap / (am + ap);
                w.omega_plus[fid] = am / (am + ap);
                w.alpha_min[fid] = am.min(ap);
                w.alpha_max[fid] = am.max(ap);
                w.a_f[fid] = am.min(ap);
            }
            None => {
                w.alpha_minus[fid] = am;
                w.alpha_plus[fid] = am;
                w.omega_minus[fid] = 1.0;
                w.omega_plus[fid] = 0.0;
                w.alpha_min[fid] = am;
                w.alpha_max[fid] = am;
                w.a_f[fid] = am;
            }
        }
    }
    w
}

pub type ScalarFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type GradFn = Arc<dyn Fn(f64, f64) -> [f64; 2] + Send + Sync>;

/// Initial-mesh generator attached to a problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshGenerator {
    UnitSquare { n: usize },
    KelloggSquare,
    LShape,
}

/// A diffusion problem: coefficient regions, source, boundary data, and the
/// exact solution when known.
#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub regions: BTreeMap<u32, Tensor2>,
    pub source: ScalarFn,
    /// Neumann data g = -A grad(u) . n on Neumann facets.
    pub neumann: Option<ScalarFn>,
    pub dirichlet: ScalarFn,
    pub exact: Option<ScalarFn>,
    pub exact_grad: Option<GradFn>,
    pub generator: MeshGenerator,
    pub singular_point: Option<[f64; 2]>,
    /// True when the source vanishes identically (both paper benchmarks).
    pub zero_source: bool,
}

impl std::fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("regions", &self.regions)
            .field("generator", &self.generator)
            .field("singular_point", &self.singular_point)
            .finish()
    }
}

impl ProblemSpec {
    pub fn initial_mesh(&self) -> Mesh2D {
        match self.generator {
            MeshGenerator::UnitSquare { n } => unit_square_mesh(n),
            MeshGenerator::KelloggSquare => kellogg_mesh(),
            MeshGenerator::LShape => lshape_mesh(),
        }
    }

    pub fn coefficient(&self, mesh: &Mesh2D) -> CoefficientField {
        CoefficientField::new(mesh, &self.regions).expect("problem regions must cover the mesh")
    }

    /// Override stored region tensors (CLI `region.<id>.tensor` keys).
    pub fn override_region(&mut self, id: u32, tensor: Tensor2) {
        self.regions.insert(id, tensor);
    }
}

/// Kellogg benchmark parameters as printed in the reference solution.
#[derive(Debug, Clone, Copy)]
pub struct KelloggParams {
    pub beta: f64,
    pub r: f64,
    pub rho: f64,
    pub sigma: f64,
}

impl KelloggParams {
    pub fn standard() -> Self {
        KelloggParams {
            beta: 0.1,
            r: 161.4476387975881,
            rho: PI / 4.0,
            sigma: -14.92256510455152,
        }
    }

    /// Angular factor mu(theta), theta in [0, 2pi].
    pub fn mu(&self, theta: f64) -> f64 {
        let b = self.beta;
        let (rho, sigma) = (self.rho, self.sigma);
        if theta <= PI / 2.0 {
            ((PI / 2.0 - sigma) * b).cos() * ((theta - PI / 2.0 + rho) * b).cos()
        } else if theta <= PI {
            (rho * b).cos() * ((theta - PI + sigma) * b).cos()
        } else if theta <= 1.5 * PI {
            (sigma * b).cos() * ((theta - PI - rho) * b).cos()
        } else {
            ((PI / 2.0 - rho) * b).cos() * ((theta - 1.5 * PI - sigma) * b).cos()
        }
    }

    pub fn mu_prime(&self, theta: f64) -> f64 {
        let b = self.beta;
        let (rho, sigma) = (self.rho, self.sigma);
        if theta <= PI / 2.0 {
            -b * ((PI / 2.0 - sigma) * b).cos() * ((theta - PI / 2.0 + rho) * b).sin()
        } else if theta <= PI {
            -b * (rho * b).cos() * ((theta - PI + sigma) * b).sin()
        } else if theta <= 1.5 * PI {
            -b * (sigma * b).cos() * ((theta - PI - rho) * b).sin()
        } else {
            -b * ((PI / 2.0 - rho) * b).cos() * ((theta - 1.5 * PI - sigma) * b).sin()
        }
    }
}

fn polar(x: f64, y: f64) -> (f64, f64) {
    let r = x.hypot(y);
    let mut theta = y.atan2(x);
    if theta < 0.0 {
        theta += 2.0 * PI;
    }
    (r, theta)
}

/// Kellogg interface problem on (-1,1)^2: A = alpha I with alpha = R on the
/// quadrants where x*y > 0, u = r^beta mu(theta), f = 0, Dirichlet data from
/// the exact trace.
pub fn kellogg_problem() -> ProblemSpec {
    let p = KelloggParams::standard();
    let mut regions = BTreeMap::new();
    regions.insert(0, Tensor2::identity());
    regions.insert(1, Tensor2::scalar(p.r));
    let exact: ScalarFn = Arc::new(move |x, y| {
        let (r, theta) = polar(x, y);
        if r == 0.0 {
            0.0
        } else {
            r.powf(p.beta) * p.mu(theta)
        }
    });
    let exact_grad: GradFn = Arc::new(move |x, y| {
        let (r, theta) = polar(x, y);
        let ur = p.beta * r.powf(p.beta - 1.0) * p.mu(theta);
        let ut = r.powf(p.beta - 1.0) * p.mu_prime(theta);
        let (c, s) = (theta.cos(), theta.sin());
        [ur * c - ut * s, ur * s + ut * c]
    });
    ProblemSpec {
        name: "kellogg".into(),
        regions,
        source: Arc::new(|_, _| 0.0),
        neumann: None,
        dirichlet: exact.clone(),
        exact: Some(exact),
        exact_grad: Some(exact_grad),
        generator: MeshGenerator::KelloggSquare,
        singular_point: Some([0.0, 0.0]),
        zero_source: true,
    }
}

/// L-shape benchmark: u = r^(2/3) sin(2 theta / 3) with theta in
/// [0, 3pi/2], A = I, f = 0.
pub fn lshape_problem() -> ProblemSpec {
    let mut regions = BTreeMap::new();
    regions.insert(0, Tensor2::identity());
    let exact: ScalarFn = Arc::new(|x, y| {
        let (r, theta) = polar(x, y);
        r.powf(2.0 / 3.0) * (2.0 * theta / 3.0).sin()
    });
    let exact_grad: GradFn = Arc::new(|x, y| {
        let (r, theta) = polar(x, y);
        let f = 2.0 / 3.0 * r.powf(-1.0 / 3.0);
        let (st, ct) = ((2.0 * theta / 3.0).sin(), (2.0 * theta / 3.0).cos());
        let (c, s) = (theta.cos(), theta.sin());
        [f * (st * c - ct * s), f * (st * s + ct * c)]
    });
    ProblemSpec {
        name: "lshape".into(),
        regions,
        source: Arc::new(|_, _| 0.0),
        neumann: None,
        dirichlet: exact.clone(),
        exact: Some(exact),
        exact_grad: Some(exact_grad),
        generator: MeshGenerator::LShape,
        singular_point: Some([0.0, 0.0]),
        zero_source: true,
    }
}

/// A bivariate polynomial as a list of (px, py, coefficient) terms.
#[derive(Debug, Clone, Default)]
pub struct Poly2 {
    pub terms: Vec<(u32, u32, f64)>,
}

impl Poly2 {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(a, b, c)| c * x.powi(a as i32) * y.powi(b as i32))
            .sum()
    }

    pub fn dx(&self) -> Poly2 {
        Poly2 {
            terms: self
                .terms
                .iter()
                .filter(|&&(a, _, _)| a > 0)
                .map(|&(a, b, c)| (a - 1, b, c * a as f64))
                .collect(),
        }
    }

    pub fn dy(&self) -> Poly2 {
        Poly2 {
            terms: self
                .terms
                .iter()
                .filter(|&&(_, b, _)| b > 0)
                .map(|&(a, b, c)| (a, b - 1, c * b as f64))
                .collect(),
        }
    }

    /// All monomials of total degree <= d with unit coefficients.
    pub fn full(degree: u32) -> Poly2 {
        let mut terms = Vec::new();
        for a in 0..=degree {
            for b in 0..=(degree - a) {
                terms.push((a, b, 1.0));
            }
        }
        Poly2 { terms }
    }
}

/// Manufactured problem on (0,1)^2 with a polynomial exact solution and a
/// constant tensor: f = -div(A grad u) computed by exact differentiation.
pub fn manufactured_from_poly(poly: Poly2, tensor: Tensor2) -> ProblemSpec {
    let mut regions = BTreeMap::new();
    regions.insert(0, tensor);
    let gx = poly.dx();
    let gy = poly.dy();
    let fxx = gx.dx();
    let fxy = gx.dy();
    let fyy = gy.dy();
    let u = poly.clone();
    let exact: ScalarFn = Arc::new(move |x, y| u.eval(x, y));
    let gx2 = gx.clone();
    let gy2 = gy.clone();
    let exact_grad: GradFn = Arc::new(move |x, y| [gx2.eval(x, y), gy2.eval(x, y)]);
    let source: ScalarFn = Arc::new(move |x, y| {
        -(tensor.a11 * fxx.eval(x, y)
            + 2.0 * tensor.a12 * fxy.eval(x, y)
            + tensor.a22 * fyy.eval(x, y))
    });
    ProblemSpec {
        name: "manufactured".into(),
        regions,
        source,
        neumann: None,
        dirichlet: exact.clone(),
        exact: Some(exact),
        exact_grad: Some(exact_grad),
        generator: MeshGenerator::UnitSquare { n: 2 },
        singular_point: None,
        zero_source: false,
    }
}

/// Manufactured problem whose exact solution is the full polynomial of the
/// given total degree (all monomials with unit coefficients).
pub fn manufactured_problem(degree: u32, tensor: Tensor2) -> ProblemSpec {
    assert!(degree >= 1);
    let mut p = manufactured_from_poly(Poly2::full(degree), tensor);
    p.name = format!("manufactured:{degree}");
    p
}

/// Smooth non-polynomial problem u = sin(pi x) sin(pi y) on (0,1)^2 with
/// A = I; used for convergence-rate tests.
pub fn sine_problem() -> ProblemSpec {
    let mut regions = BTreeMap::new();
    regions.insert(0, Tensor2::identity());
    let exact: ScalarFn = Arc::new(|x, y| (PI * x).sin() * (PI * y).sin());
    let exact_grad: GradFn = Arc::new(|x, y| {
        [
            PI * (PI * x).cos() * (PI * y).sin(),
            PI * (PI * x).sin() * (PI * y).cos(),
        ]
    });
    ProblemSpec {
        name: "sine".into(),
        regions,
        source: Arc::new(|x, y| 2.0 * PI * PI * (PI * x).sin() * (PI * y).sin()),
        neumann: None,
        dirichlet: Arc::new(|_, _| 0.0),
        exact: Some(exact),
        exact_grad: Some(exact_grad),
        generator: MeshGenerator::UnitSquare { n: 2 },
        singular_point: None,
        zero_source: false,
    }
}

/// Checkerboard interface problem with exact solution u = x y / alpha on the
/// Kellogg coefficient pattern (alpha = contrast where x*y > 0, else 1).
///
/// The flux A grad(u) = (y, x) is globally continuous and u vanishes on the
/// interfaces, so u is an exact solution with f = 0 for any contrast.
pub fn checkerboard_problem(contrast: f64) -> ProblemSpec {
    assert!(contrast > 0.0);
    let mut regions = BTreeMap::new();
    regions.insert(0, Tensor2::identity());
    regions.insert(1, Tensor2::scalar(contrast));
    let alpha = move |x: f64, y: f64| if x * y > 0.0 { contrast } else { 1.0 };
    let exact: ScalarFn = Arc::new(move |x, y| x * y / alpha(x, y));
    let exact_grad: GradFn = Arc::new(move |x, y| {
        let a = alpha(x, y);
        [y / a, x / a]
    });
    ProblemSpec {
        name: format!("checkerboard:{contrast}"),
        regions,
        source: Arc::new(|_, _| 0.0),
        neumann: None,
        dirichlet: exact.clone(),
        exact: Some(exact),
        exact_grad: Some(exact_grad),
        generator: MeshGenerator::KelloggSquare,
        singular_point: None,
        zero_source: true,
    }
}

/// Problem lookup for the CLI: `kellogg`, `lshape`, `manufactured:<degree>`,
/// `checkerboard:<contrast>`, `sine`.
pub fn problem_by_name(name: &str) -> Result<ProblemSpec, ProblemError> {
    if name == "kellogg" {
        return Ok(kellogg_problem());
    }
    if name == "lshape" {
        return Ok(lshape_problem());
    }
    if name == "sine" {
        return Ok(sine_problem());
    }
    if let Some(d) = name.strip_prefix("manufactured:") {
        if let Ok(d) = d.parse::<u32>() {
            if d >= 1 {
                return Ok(manufactured_problem(d, Tensor2::identity()));
            }
        }
        return Err(ProblemError::UnknownProblem(name.into()));
    }
    if let Some(r) = name.strip_prefix("checkerboard:") {
        if let Ok(r) = r.parse::<f64>() {
            if r > 0.0 {
                return Ok(checkerboard_problem(r));
            }
        }
        return Err(ProblemError::UnknownProblem(name.into()));
    }
    Err(ProblemError::UnknownProblem(name.into()))
}

/// Diagnostic quasi-monotonicity check: the coefficient distribution around
/// vertex z is accepted when every patch element reaches every hat element
/// through a face-adjacent patch path with non-decreasing lambda_max.
pub fn quasi_monotone(mesh: &Mesh2D, coeff: &CoefficientField) -> Vec<bool> {
    let patches = mesh.vertex_patches(coeff);
    patches
        .iter()
        .map(|patch| {
            let elems = &patch.elements;
            let n = elems.len();
            // Face adjacency restricted to the patch.
            let mut adj = vec![Vec::new(); n];
            for (i, &a) in elems.iter().enumerate() {
                for (j, &b) in elems.iter().enumerate() {
                    if i == j {
                        continue;
                    }
                    let shares = mesh.element_facets[a].iter().any(|ua| {
                        mesh.element_facets[b].iter().any(|ub| ua.facet == ub.facet)
                    });
                    if shares {
                        adj[i].push(j);
                    }
                }
            }
            let lam: Vec<f64> = elems.iter().map(|&e| coeff.lambda_max(e)).collect();
            let monotone_path = |from: usize, to: usize| -> bool {
                // DFS over paths with non-decreasing lambda.
                let mut stack = vec![from];
                let mut seen = vec![false; n];
                seen[from] = true;
                while let Some(i) = stack.pop() {
                    if i == to {
                        return true;
                    }
                    for &j in &adj[i] {
                        if !seen[j] && lam[j] >= lam[i] * (1.0 - 1e-12) {
                            seen[j] = true;
                            stack.push(j);
                        }
                    }
                }
                false
            };
            elems.iter().enumerate().all(|(i, _)| {
                patch.hat_elements.iter().all(|h| {
                    let hi = elems.iter().position(|e| e == h).unwrap();
                    monotone_path(i, hi)
                })
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::kellogg_mesh;

    #[test]
    fn tensor_sqrt_is_exact() {
        let t = Tensor2::new(3.0, 1.0, 2.0);
        let s = t.sqrt();
        // s * s == t
        let ss = Tensor2 {
            a11: s.a11 * s.a11 + s.a12 * s.a12,
            a12: s.a11 * s.a12 + s.a12 * s.a22,
            a22: s.a12 * s.a12 + s.a22 * s.a22,
        };
        assert!((ss.a11 - t.a11).abs() < 1e-14);
        assert!((ss.a12 - t.a12).abs() < 1e-14);
        assert!((ss.a22 - t.a22).abs() < 1e-14);
        let isq = t.inv_sqrt();
        let prod = Tensor2 {
            a11: isq.a11 * s.a11 + isq.a12 * s.a12,
            a12: isq.a11 * s.a12 + isq.a12 * s.a22,
            a22: isq.a12 * s.a12 + isq.a22 * s.a22,
        };
        assert!((prod.a11 - 1.0).abs() < 1e-14);
        assert!(prod.a12.abs() < 1e-14);
        assert!((prod.a22 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn kellogg_parameters_pinned() {
        let p = KelloggParams::standard();
        assert_eq!(p.beta, 0.1);
        assert_eq!(p.r, 161.4476387975881);
        assert_eq!(p.rho, PI / 4.0);
        assert_eq!(p.sigma, -14.92256510455152);
    }

    #[test]
    fn kellogg_value_at_origin_is_zero() {
        let prob = kellogg_problem();
        let u = prob.exact.as_ref().unwrap();
        assert_eq!(u(0.0, 0.0), 0.0);
    }

    #[test]
    fn kellogg_value_at_unit_radius_pinned() {
        // mu(pi/4) = cos((pi/2 - sigma) beta) * cos(0); with the printed
        // parameters (pi/2 - sigma) beta = pi/2 + pi/40 up to rounding, so
        // u(1, pi/4) = -sin(pi/40). Direct high-precision evaluation:
        let expected = -0.078459095727844944;
        let p = KelloggParams::standard();
        let x = (PI / 4.0).cos();
        let y = (PI / 4.0).sin();
        let prob = kellogg_problem();
        let u = prob.exact.as_ref().unwrap();
        assert!((u(x, y) - expected).abs() < 1e-12, "got {}", u(x, y));
        assert!((p.mu(PI / 4.0) - expected).abs() < 1e-12);
    }

    #[test]
    fn kellogg_mu_is_continuous_at_interfaces() {
        let p = KelloggParams::standard();
        for theta in [PI / 2.0, PI, 1.5 * PI] {
            let below = p.mu(theta - 1e-13);
            let above = p.mu(theta + 1e-13);
            assert!((below - above).abs() < 1e-10);
        }
        assert!((p.mu(0.0) - p.mu(2.0 * PI)).abs() < 1e-10);
    }

    #[test]
    fn kellogg_solution_continuous_across_interfaces_at_100_radii() {
        let prob = kellogg_problem();
        let u = prob.exact.as_ref().unwrap();
        for i in 1..=100 {
            let r = i as f64 / 101.0;
            for theta in [PI / 2.0, PI, 1.5 * PI] {
                let eps = 1e-9;
                let a = u(r * (theta - eps).cos(), r * (theta - eps).sin());
                let b = u(r * (theta + eps).cos(), r * (theta + eps).sin());
                assert!((a - b).abs() < 1e-8, "r={r} theta={theta}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn kellogg_flux_is_continuous_at_interfaces() {
        // alpha^- mu'(theta^-) = alpha^+ mu'(theta^+) ties (beta, R, rho,
        // sigma) together; residual checks the printed parameters.
        let p = KelloggParams::standard();
        let alpha = |theta: f64| {
            if (theta % (2.0 * PI)) < PI / 2.0
                || ((PI..1.5 * PI).contains(&(theta % (2.0 * PI))))
            {
                p.r
            } else {
                1.0
            }
        };
        for theta in [PI / 2.0, PI, 1.5 * PI] {
            let lhs = alpha(theta - 1e-9) * p.mu_prime(theta - 1e-12);
            let rhs = alpha(theta + 1e-9) * p.mu_prime(theta + 1e-12);
            assert!(
                (lhs - rhs).abs() < 1e-9 * lhs.abs().max(1.0),
                "theta={theta}: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn lshape_vanishes_on_both_legs() {
        let prob = lshape_problem();
        let u = prob.exact.as_ref().unwrap();
        for i in 1..=10 {
            let r = i as f64 / 10.0;
            assert!(u(r, 0.0).abs() < 1e-14); // theta = 0 ray
            assert!(u(0.0, -r).abs() < 1e-13); // theta = 3pi/2 ray
        }
        // u(1, pi/2) = sin(pi/3) = sqrt(3)/2
        let v = u(0.0, 1.0);
        assert!((v - 3.0f64.sqrt() / 2.0).abs() < 1e-14);
    }

    #[test]
    fn manufactured_sources() {
        // degree 1, A = I, u = x + 2y -> f = 0
        let p1 = manufactured_from_poly(
            Poly2 { terms: vec![(1, 0, 1.0), (0, 1, 2.0)] },
            Tensor2::identity(),
        );
        assert_eq!((p1.source)(0.3, 0.7), 0.0);
        // degree 2, A = I, u = x^2 + y^2 -> f = -4
        let p2 = manufactured_from_poly(
            Poly2 { terms: vec![(2, 0, 1.0), (0, 2, 1.0)] },
            Tensor2::identity(),
        );
        assert!(((p2.source)(0.3, 0.7) + 4.0).abs() < 1e-15);
        // u = x^2 y with A = diag(2,3): f = -(2 * 2y) = -4y by hand.
        let p3 = manufactured_from_poly(
            Poly2 { terms: vec![(2, 1, 1.0)] },
            Tensor2::diag(2.0, 3.0),
        );
        for (x, y) in [(0.2, 0.9), (0.5, 0.1)] {
            assert!(((p3.source)(x, y) + 4.0 * y).abs() < 1e-14);
        }
    }

    #[test]
    fn manufactured_satisfies_pde_at_sample_points() {
        // -div(A grad u) = f checked by central differences at interior
        // points of (0,1)^2.
        let p = manufactured_problem(3, Tensor2::new(2.0, 0.5, 3.0));
        let u = p.exact.as_ref().unwrap();
        let t = p.regions[&0];
        let h = 1e-5;
        for (x, y) in [(0.31, 0.41), (0.62, 0.23), (0.5, 0.77)] {
            let uxx = (u(x + h, y) - 2.0 * u(x, y) + u(x - h, y)) / (h * h);
            let uyy = (u(x, y + h) - 2.0 * u(x, y) + u(x, y - h)) / (h * h);
            let uxy = (u(x + h, y + h) - u(x + h, y - h) - u(x - h, y + h)
                + u(x - h, y - h))
                / (4.0 * h * h);
            let lhs = -(t.a11 * uxx + 2.0 * t.a12 * uxy + t.a22 * uyy);
            let f = (p.source)(x, y);
            assert!((lhs - f).abs() < 1e-5 * f.abs().max(1.0), "{lhs} vs {f}");
        }
    }

    #[test]
    fn facet_weight_examples() {
        let mesh = kellogg_mesh();
        let coeff = CoefficientField::uniform(&mesh, Tensor2::scalar(3.5));
        let w = facet_weights(&mesh, &coeff);
        for (fid, f) in mesh.facets.iter().enumerate() {
            if !f.is_boundary() {
                assert!((w.omega_minus[fid] - 0.5).abs() < 1e-15);
                assert!((w.omega_plus[fid] - 0.5).abs() < 1e-15);
            }
        }
        // alpha^- = 1, alpha^+ = 3 by direct formula:
        let (am, ap) = (1.0, 3.0);
        let omega_plus = am / (am + ap);
        let omega_minus = ap / (am + ap);
        assert_eq!(omega_plus, 0.25);
        assert_eq!(omega_minus, 0.75);
        // Kellogg interface facets: omega on the R side equals 1/(1+R).
        let prob = kellogg_problem();
        let coeff = prob.coefficient(&mesh);
        let w = facet_weights(&mesh, &coeff);
        let r = KelloggParams::standard().r;
        let mut seen_interface = false;
        for (fid, f) in mesh.facets.iter().enumerate() {
            if let Some(plus) = f.plus {
                let rm = mesh.regions[f.minus];
                let rp = mesh.regions[plus];
                if rm != rp {
                    seen_interface = true;
                    let omega_r_side = if rm == 1 { w.omega_minus[fid] } else { w.omega_plus[fid] };
                    assert!((omega_r_side - 1.0 / (1.0 + r)).abs() < 1e-15);
                    assert_eq!(w.a_f[fid], 1.0);
                }
            }
        }
        assert!(seen_interface);
    }

    #[test]
    fn weight_inequalities_hold_on_constructed_facets() {
        let prob = kellogg_problem();
        let mesh = kellogg_mesh().refine_uniform();
        let coeff = prob.coefficient(&mesh);
        let w = facet_weights(&mesh, &coeff);
        for (fid, f) in mesh.facets.iter().enumerate() {
            if f.is_boundary() {
                continue;
            }
            let (am, ap) = (w.alpha_minus[fid], w.alpha_plus[fid]);
            let (wm, wp) = (w.omega_minus[fid], w.omega_plus[fid]);
            assert!((wm + wp - 1.0).abs() < 1e-14);
            assert!(wm * am.sqrt() <= w.alpha_min[fid].sqrt() + 1e-14);
            assert!(wp * ap.sqrt() <= w.alpha_min[fid].sqrt() + 1e-14);
            assert!(wp / am.sqrt() <= 1.0 / w.alpha_max[fid].sqrt() + 1e-14);
            assert!(wm / ap.sqrt() <= 1.0 / w.alpha_max[fid].sqrt() + 1e-14);
        }
    }

    #[test]
    fn quasi_monotone_identity_everywhere_checkerboard_fails_at_origin() {
        let mesh = kellogg_mesh();
        let id = CoefficientField::uniform(&mesh, Tensor2::identity());
        assert!(quasi_monotone(&mesh, &id).iter().all(|&b| b));

        let prob = kellogg_problem();
        let coeff = prob.coefficient(&mesh);
        let qm = quasi_monotone(&mesh, &coeff);
        let origin = mesh
            .vertices
            .iter()
            .position(|v| v[0] == 0.0 && v[1] == 0.0)
            .unwrap();
        assert!(!qm[origin], "cross point must not be quasi-monotone");
    }

    #[test]
    fn problem_lookup() {
        assert!(problem_by_name("kellogg").is_ok());
        assert!(problem_by_name("lshape").is_ok());
        assert!(problem_by_name("manufactured:2").is_ok());
        assert!(problem_by_name("checkerboard:100").is_ok());
        assert!(problem_by_name("nope").is_err());
        assert!(problem_by_name("manufactured:0").is_err());
    }
}
