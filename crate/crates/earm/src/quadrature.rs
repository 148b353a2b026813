//! Quadrature rules on the reference triangle and on facets.
//!
//! Triangle rules are built from tensor Gauss-Legendre rules through the
//! Duffy (collapsed square) transform, which keeps all weights positive and
//! gives exactness for any requested polynomial degree up to [`MAX_DEGREE`].
//! Facet rules are plain Gauss-Legendre on the unit interval.

use thiserror::Error;

/// Largest polynomial degree the rule constructors accept.
pub const MAX_DEGREE: usize = 48;

#[derive(Debug, Error)]
pub enum QuadratureError {
    #[error("unsupported quadrature degree {0} (max {MAX_DEGREE})")]
    UnsupportedDegree(usize),
}

/// Quadrature rule on the reference triangle (0,0)-(1,0)-(0,1).
#[derive(Debug, Clone)]
pub struct TriangleRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

/// Quadrature rule on the unit interval [0,1].
#[derive(Debug, Clone)]
pub struct SegmentRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Gauss-Legendre nodes and weights on [-1,1], computed by Newton iteration
/// on the Legendre polynomial.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi-style initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_deriv(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x.abs();
        nodes[n - 1 - i] = x.abs();
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss rule on [0,1] exact for polynomials of degree `degree`.
pub fn segment_rule(degree: usize) -> Result<SegmentRule, QuadratureError> {
    if degree > MAX_DEGREE {
        return Err(QuadratureError::UnsupportedDegree(degree));
    }
    let n = degree / 2 + 1;
    let (xs, ws) = gauss_legendre(n);
    Ok(SegmentRule {
        points: xs.iter().map(|x| 0.5 * (x + 1.0)).collect(),
        weights: ws.iter().map(|w| 0.5 * w).collect(),
    })
}

/// Rule on the reference triangle exact for total degree `degree`.
///
/// Duffy transform x = u, y = v(1-u) of a tensor Gauss rule; the extra
/// (1-u) Jacobian raises the u-degree by one, which the node count accounts
/// for.
pub fn triangle_rule(degree: usize) -> Result<TriangleRule, QuadratureError> {
    if degree > MAX_DEGREE {
        return Err(QuadratureError::UnsupportedDegree(degree));
    }
    let n = (degree + 2).div_ceil(2);
    let (xs, ws) = gauss_legendre(n);
    let u: Vec<f64> = xs.iter().map(|x| 0.5 * (x + 1.0)).collect();
    let wu: Vec<f64> = ws.iter().map(|w| 0.5 * w).collect();
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            points.push([u[i], u[j] * (1.0 - u[i])]);
            weights.push(wu[i] * wu[j] * (1.0 - u[i]));
        }
    }
    Ok(TriangleRule { points, weights })
}

impl TriangleRule {
    /// Integrate a function given on the reference triangle.
    pub fn integrate(&self, mut f: impl FnMut(f64, f64) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * f(p[0], p[1]))
            .sum()
    }
}

impl SegmentRule {
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(t, w)| w * f(*t))
            .sum()
    }
}

/// Legendre polynomial P_m on [-1,1].
pub fn legendre(m: usize, x: f64) -> f64 {
    match m {
        0 => 1.0,
        1 => x,
        _ => {
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=m {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            p1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Exact integral of x^a y^b over the reference triangle: a! b! / (a+b+2)!.
    fn monomial_integral(a: u32, b: u32) -> f64 {
        let fact = |n: u32| (1..=n).map(|k| k as f64).product::<f64>().max(1.0);
        fact(a) * fact(b) / fact(a + b + 2)
    }

    #[test]
    fn order_one_rule_integrates_constants() {
        let rule = triangle_rule(1).unwrap();
        let sum: f64 = rule.weights.iter().sum();
        assert!((sum - 0.5).abs() < 1e-14);
    }

    #[test]
    fn monomial_x2y4_matches_analytic_value() {
        // Oracle: a! b! / (a+b+2)! gives 2! 4! / 8! = 1/840.
        assert!((monomial_integral(2, 4) - 1.0 / 840.0).abs() < 1e-18);
        let rule = triangle_rule(6).unwrap();
        let val = rule.integrate(|x, y| x * x * y.powi(4));
        assert!((val - 1.0 / 840.0).abs() < 1e-15, "got {val}");
    }

    #[test]
    fn triangle_rules_exact_for_full_degree_range() {
        for degree in 1..=14usize {
            let rule = triangle_rule(degree).unwrap();
            assert!(rule.weights.iter().all(|w| *w > 0.0));
            for a in 0..=degree as u32 {
                for b in 0..=(degree as u32 - a) {
                    let val = rule.integrate(|x, y| x.powi(a as i32) * y.powi(b as i32));
                    let exact = monomial_integral(a, b);
                    assert!(
                        (val - exact).abs() < 1e-14 * exact.max(1.0),
                        "degree {degree} monomial ({a},{b}): {val} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn gauss_segment_rule_exact_for_odd_degree() {
        // n-point Gauss integrates degree 2n-1 exactly.
        for s in 0..=6usize {
            let rule = segment_rule(2 * s + 1).unwrap();
            for d in 0..=(2 * s + 1) as u32 {
                let val = rule.integrate(|t| t.powi(d as i32));
                let exact = 1.0 / (d as f64 + 1.0);
                assert!((val - exact).abs() < 1e-14, "degree {d}: {val} vs {exact}");
            }
        }
    }

    #[test]
    fn unsupported_degree_is_an_error() {
        assert!(triangle_rule(MAX_DEGREE + 1).is_err());
        assert!(segment_rule(MAX_DEGREE + 1).is_err());
    }

    #[test]
    fn legendre_orthogonality() {
        let rule = segment_rule(12).unwrap();
        for m in 0..=5usize {
            for n in 0..=5usize {
                let val = rule.integrate(|t| legendre(m, 2.0 * t - 1.0) * legendre(n, 2.0 * t - 1.0));
                let exact = if m == n { 1.0 / (2.0 * m as f64 + 1.0) } else { 0.0 };
                assert!((val - exact).abs() < 1e-14);
            }
        }
    }
}
