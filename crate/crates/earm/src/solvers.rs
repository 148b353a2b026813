//! Assembly of the CG and interior-penalty DG systems and the sparse solve.
//!
//! Dirichlet conditions are applied by symmetric elimination (the reduced
//! system stays SPD); the solver contract is a relative residual of at most
//! `SparseSystem::tol` on the reduced system, enforced with a few steps of
//! iterative refinement on top of a direct factorization.

use std::sync::Arc;

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use faer::Side;
use thiserror::Error;

use crate::problems::{CoefficientField, FacetWeights, ProblemSpec};
use crate::quadrature::{segment_rule, triangle_rule};
use crate::spaces::{avg_w, Continuity, FeFunction, LagrangeSpace};

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("sparse factorization failed ({0})")]
    Factorization(String),
    #[error("solver reached relative residual {achieved:e}, contract is {wanted:e}")]
    Tolerance { achieved: f64, wanted: f64 },
}

/// Interior-penalty parameters: gamma > 0, delta in {-1, 0, +1}.
#[derive(Debug, Clone, Copy)]
pub struct DgParameters {
    pub gamma: f64,
    pub delta: f64,
}

impl DgParameters {
    /// Default penalty gamma = 10 k^2 with the symmetric variant.
    pub fn for_degree(k: usize) -> Self {
        DgParameters { gamma: 10.0 * (k * k) as f64, delta: 1.0 }
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        if !(self.gamma > 0.0) {
            return Err(SolveError::Parameter(format!(
                "dg penalty gamma must be positive, got {}",
                self.gamma
            )));
        }
        if ![-1.0, 0.0, 1.0].contains(&self.delta) {
            return Err(SolveError::Parameter(format!(
                "dg delta must be -1, 0 or 1, got {}",
                self.delta
            )));
        }
        Ok(())
    }
}

/// Assembled sparse system with symmetric-elimination constraints.
#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub n: usize,
    pub triplets: Vec<(usize, usize, f64)>,
    pub rhs: Vec<f64>,
    /// Dirichlet dofs and their values.
    pub constraints: Vec<(usize, f64)>,
    pub symmetric: bool,
    /// Relative residual contract for [`solve`].
    pub tol: f64,
}

impl SparseSystem {
    fn new(n: usize, symmetric: bool) -> Self {
        SparseSystem {
            n,
            triplets: Vec::new(),
            rhs: vec![0.0; n],
            constraints: Vec::new(),
            symmetric,
            tol: 1e-12,
        }
    }

    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        if v != 0.0 {
            self.triplets.push((i, j, v));
        }
    }

    /// Matrix-vector product from the raw triplets (constraints ignored).
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for &(i, j, v) in &self.triplets {
            y[i] += v * x[j];
        }
        y
    }
}

/// Assemble the conforming system: (A grad u, grad v) = (f, v) - <g, v>_N
/// with Dirichlet values interpolated at boundary nodes.
pub fn assemble_cg(
    space: &Arc<LagrangeSpace>,
    problem: &ProblemSpec,
    coeff: &CoefficientField,
) -> SparseSystem {
    assert_eq!(space.continuity, Continuity::Cg);
    let mesh = &space.mesh;
    let k = space.degree;
    let nloc = space.basis.len();
    let stiff_rule = triangle_rule(2 * k).expect("quadrature degree");
    let load_rule = triangle_rule(2 * k + 4).expect("quadrature degree");
    let mut sys = SparseSystem::new(space.num_dofs, true);

    for e in 0..mesh.num_elements() {
        let map = &mesh.maps[e];
        let a = coeff.tensor(e);
        let dofs = space.elem_dofs(e);
        let mut local = vec![0.0; nloc * nloc];
        for (q, &p) in stiff_rule.points.iter().enumerate() {
            let w = stiff_rule.weights[q] * map.det;
            let (_, ref_grads) = space.basis.eval_with_grad(p);
            let grads: Vec<[f64; 2]> =
                ref_grads.iter().map(|&g| map.grad_to_phys(g)).collect();
            for i in 0..nloc {
                let agi = a.apply(grads[i]);
                for j in 0..nloc {
                    local[i * nloc + j] += w * (agi[0] * grads[j][0] + agi[1] * grads[j][1]);
                }
            }
        }
        for i in 0..nloc {
            for j in 0..nloc {
                sys.push(dofs[i], dofs[j], local[i * nloc + j]);
            }
        }
        for (q, &p) in load_rule.points.iter().enumerate() {
            let w = load_rule.weights[q] * map.det;
            let x = map.from_ref(p);
            let fv = (problem.source)(x[0], x[1]);
            if fv != 0.0 {
                let phi = space.basis.eval(p);
                for i in 0..nloc {
                    sys.rhs[dofs[i]] += w * fv * phi[i];
                }
            }
        }
    }

    if let Some(g) = &problem.neumann {
        let seg = segment_rule(2 * k + 2).expect("quadrature degree");
        for (fid, f) in mesh.facets.iter().enumerate() {
            if f.class != crate::mesh::FacetClass::NeumannBdry {
                continue;
            }
            let e = f.minus;
            let map = &mesh.maps[e];
            let dofs = space.elem_dofs(e);
            for (q, &t) in seg.points.iter().enumerate() {
                let x = mesh.facet_point(fid, t);
                let p = map.to_ref(x);
                let phi = space.basis.eval(p);
                let w = seg.weights[q] * f.h * g(x[0], x[1]);
                for i in 0..space.basis.len() {
                    sys.rhs[dofs[i]] -= w * phi[i];
                }
            }
        }
    }

    for &g in &space.dirichlet_dofs {
        let x = space.dof_coords[g];
        sys.constraints.push((g, (problem.dirichlet)(x[0], x[1])));
    }
    sys
}

/// Assemble the interior-penalty DG system with weighted averages and the
/// penalty gamma alpha_min / h_F on all non-Neumann facets. Inhomogeneous
/// Dirichlet data enters consistently through the penalty and delta terms.
pub fn assemble_dg(
    space: &Arc<LagrangeSpace>,
    problem: &ProblemSpec,
    coeff: &CoefficientField,
    params: DgParameters,
    weights: &FacetWeights,
) -> Result<SparseSystem, SolveError> {
    assert_eq!(space.continuity, Continuity::Dg);
    params.validate()?;
    let mesh = &space.mesh;
    let k = space.degree;
    let nloc = space.basis.len();
    let stiff_rule = triangle_rule(2 * k).expect("quadrature degree");
    let load_rule = triangle_rule(2 * k + 4).expect("quadrature degree");
    let seg = segment_rule(2 * k + 1).expect("quadrature degree");
    let mut sys = SparseSystem::new(space.num_dofs, params.delta == 1.0);

    // Volume terms.
    for e in 0..mesh.num_elements() {
        let map = &mesh.maps[e];
        let a = coeff.tensor(e);
        let dofs = space.elem_dofs(e);
        for (q, &p) in stiff_rule.points.iter().enumerate() {
            let w = stiff_rule.weights[q] * map.det;
            let (_, ref_grads) = space.basis.eval_with_grad(p);
            let grads: Vec<[f64; 2]> =
                ref_grads.iter().map(|&g| map.grad_to_phys(g)).collect();
            for i in 0..nloc {
                let agi = a.apply(grads[i]);
                for j in 0..nloc {
                    sys.push(dofs[i], dofs[j], w * (agi[0] * grads[j][0] + agi[1] * grads[j][1]));
                }
            }
        }
        for (q, &p) in load_rule.points.iter().enumerate() {
            let w = load_rule.weights[q] * map.det;
            let x = map.from_ref(p);
            let fv = (problem.source)(x[0], x[1]);
            if fv != 0.0 {
                let phi = space.basis.eval(p);
                for i in 0..nloc {
                    sys.rhs[dofs[i]] += w * fv * phi[i];
                }
            }
        }
    }

    // Facet terms.
    for (fid, f) in mesh.facets.iter().enumerate() {
        match f.class {
            crate::mesh::FacetClass::NeumannBdry => {
                if let Some(g) = &problem.neumann {
                    let e = f.minus;
                    let map = &mesh.maps[e];
                    let dofs = space.elem_dofs(e);
                    for (q, &t) in seg.points.iter().enumerate() {
                        let x = mesh.facet_point(fid, t);
                        let phi = space.basis.eval(map.to_ref(x));
                        let w = seg.weights[q] * f.h * g(x[0], x[1]);
                        for i in 0..nloc {
                            sys.rhs[dofs[i]] -= w * phi[i];
                        }
                    }
                }
            }
            crate::mesh::FacetClass::Interior => {
                let em = f.minus;
                let ep = f.plus.unwrap();
                let (am, ap) = (coeff.tensor(em), coeff.tensor(ep));
                let (wm, wp) = (weights.omega_minus[fid], weights.omega_plus[fid]);
                let pen = params.gamma * weights.alpha_min[fid] / f.h;
                let dofs_m = space.elem_dofs(em);
                let dofs_p = space.elem_dofs(ep);
                let map_m = &mesh.maps[em];
                let map_p = &mesh.maps[ep];
                let n = f.normal;
                // Side-stacked local blocks: index 0..nloc minus, then plus.
                let dim = 2 * nloc;
                let mut local = vec![0.0; dim * dim];
                for (q, &t) in seg.points.iter().enumerate() {
                    let w = seg.weights[q] * f.h;
                    let x = mesh.facet_point(fid, t);
                    let pm = map_m.to_ref(x);
                    let pp = map_p.to_ref(x);
                    let (phi_m, gm) = space.basis.eval_with_grad(pm);
                    let (phi_p, gp) = space.basis.eval_with_grad(pp);
                    // Jump and weighted-average rows for every local dof.
                    let mut jump = vec![0.0; dim];
                    let mut flux = vec![0.0; dim];
                    for l in 0..nloc {
                        let gml = map_m.grad_to_phys(gm[l]);
                        let gpl = map_p.grad_to_phys(gp[l]);
                        let fm = am.apply(gml);
                        let fp = ap.apply(gpl);
                        jump[l] = phi_m[l];
                        jump[nloc + l] = -phi_p[l];
                        flux[l] = wm * (fm[0] * n[0] + fm[1] * n[1]);
                        flux[nloc + l] = wp * (fp[0] * n[0] + fp[1] * n[1]);
                    }
                    for i in 0..dim {
                        for j in 0..dim {
                            local[i * dim + j] += w
                                * (pen * jump[i] * jump[j] - flux[j] * jump[i]
                                    + params.delta * flux[i] * jump[j]);
                        }
                    }
                }
                let gdof = |l: usize| if l < nloc { dofs_m[l] } else { dofs_p[l - nloc] };
                for i in 0..dim {
                    for j in 0..dim {
                        sys.push(gdof(i), gdof(j), local[i * dim + j]);
                    }
                }
            }
            crate::mesh::FacetClass::DirichletBdry => {
                let e = f.minus;
                let a = coeff.tensor(e);
                let pen = params.gamma * weights.alpha_min[fid] / f.h;
                let dofs = space.elem_dofs(e);
                let map = &mesh.maps[e];
                let n = f.normal;
                for (q, &t) in seg.points.iter().enumerate() {
                    let w = seg.weights[q] * f.h;
                    let x = mesh.facet_point(fid, t);
                    let p = map.to_ref(x);
                    let (phi, gr) = space.basis.eval_with_grad(p);
                    let flux: Vec<f64> = (0..nloc)
                        .map(|l| {
                            let g = map.grad_to_phys(gr[l]);
                            let ag = a.apply(g);
                            ag[0] * n[0] + ag[1] * n[1]
                        })
                        .collect();
                    for i in 0..nloc {
                        for j in 0..nloc {
                            sys.push(
                                dofs[i],
                                dofs[j],
                                w * (pen * phi[i] * phi[j] - flux[j] * phi[i]
                                    + params.delta * flux[i] * phi[j]),
                            );
                        }
                    }
                    // Inhomogeneous Dirichlet data.
                    let ud = (problem.dirichlet)(x[0], x[1]);
                    if ud != 0.0 {
                        for i in 0..nloc {
                            sys.rhs[dofs[i]] +=
                                w * ud * (pen * phi[i] + params.delta * flux[i]);
                        }
                    }
                }
            }
        }
    }
    Ok(sys)
}

/// Direct sparse solve honoring the system's residual contract.
pub fn solve(sys: &SparseSystem) -> Result<Vec<f64>, SolveError> {
    let n = sys.n;
    let mut constrained = vec![false; n];
    let mut values = vec![0.0; n];
    for &(dof, v) in &sys.constraints {
        constrained[dof] = true;
        values[dof] = v;
    }
    let free: Vec<usize> = (0..n).filter(|&i| !constrained[i]).collect();
    let mut free_index = vec![usize::MAX; n];
    for (fi, &g) in free.iter().enumerate() {
        free_index[g] = fi;
    }
    let nf = free.len();
    if nf == 0 {
        return Ok(values);
    }

    // Reduced rhs: b_f - K_fc x_c.
    let mut rhs = vec![0.0; nf];
    for (fi, &g) in free.iter().enumerate() {
        rhs[fi] = sys.rhs[g];
    }
    let mut reduced = Vec::with_capacity(sys.triplets.len());
    for &(i, j, v) in &sys.triplets {
        match (constrained[i], constrained[j]) {
            (false, false) => reduced.push(Triplet::new(free_index[i], free_index[j], v)),
            (false, true) => rhs[free_index[i]] -= v * values[j],
            _ => {}
        }
    }

    let mat = SparseColMat::try_new_from_triplets(nf, nf, &reduced)
        .map_err(|e| SolveError::Factorization(format!("{e:?}")))?;
    let rhs_mat = faer::Mat::from_fn(nf, 1, |i, _| rhs[i]);

    enum Factor {
        Llt(faer::sparse::linalg::solvers::Llt<usize, f64>),
        Lu(faer::sparse::linalg::solvers::Lu<usize, f64>),
    }
    let factor = if sys.symmetric {
        match mat.sp_cholesky(Side::Lower) {
            Ok(llt) => Factor::Llt(llt),
            Err(_) => Factor::Lu(
                mat.sp_lu()
                    .map_err(|e| SolveError::Factorization(format!("{e:?}")))?,
            ),
        }
    } else {
        Factor::Lu(
            mat.sp_lu()
                .map_err(|e| SolveError::Factorization(format!("{e:?}")))?,
        )
    };
    let solve_once = |b: &faer::Mat<f64>| -> faer::Mat<f64> {
        match &factor {
            Factor::Llt(f) => f.solve(b),
            Factor::Lu(f) => f.solve(b),
        }
    };

    let rhs_norm = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut x = solve_once(&rhs_mat);
    let mut achieved = f64::MAX;
    for _ in 0..4 {
        // Residual of the reduced system.
        let mut res = rhs.clone();
        for t in &reduced {
            res[t.row] -= t.val * x[(t.col, 0)];
        }
        let res_norm = res.iter().map(|v| v * v).sum::<f64>().sqrt();
        achieved = if rhs_norm > 0.0 { res_norm / rhs_norm } else { res_norm };
        if achieved <= sys.tol {
            break;
        }
        let res_mat = faer::Mat::from_fn(nf, 1, |i, _| res[i]);
        let dx = solve_once(&res_mat);
        for i in 0..nf {
            x[(i, 0)] += dx[(i, 0)];
        }
    }
    if achieved > sys.tol {
        return Err(SolveError::Tolerance { achieved, wanted: sys.tol });
    }

    for (fi, &g) in free.iter().enumerate() {
        values[g] = x[(fi, 0)];
    }
    Ok(values)
}

/// Solve and wrap the result over the assembly space.
pub fn solve_to_fe(space: &Arc<LagrangeSpace>, sys: &SparseSystem) -> Result<FeFunction, SolveError> {
    Ok(FeFunction::new(space.clone(), solve(sys)?))
}
