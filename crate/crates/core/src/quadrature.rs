//! Gaussian expectations `E f(G)`, `G ~ N(0, 1)`.
//!
//! Two rules are available. [`QuadratureRule::Hermite`] is plain
//! probabilists' Gauss–Hermite. [`QuadratureRule::SplitLegendre`] cuts the
//! real line at the integrand's kinks (truncated to `[-10, 10]`, where the
//! Gaussian tail mass is below `1e-22`) and applies Gauss–Legendre on every
//! piece against the normal density. Integrands built from piecewise-linear
//! activations are smooth on each piece, so the split rule converges
//! geometrically where the plain Hermite rule only converges algebraically.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};


use crate::error::{Error, Result};

pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[inline]
pub fn normal_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

#[inline]
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// `P(a < G < b)`, computed on the side of the distribution that avoids cancellation.
pub fn normal_mass(a: f64, b: f64) -> f64 {
    if a >= 0.0 {
        normal_cdf(-a) - normal_cdf(-b)
    } else if b <= 0.0 {
        normal_cdf(b) - normal_cdf(a)
    } else {
        1.0 - normal_cdf(a) - normal_cdf(-b)
    }
}

/// Exact `E f(G)` for `f` piecewise quadratic (affine included) with the
/// pieces separated by `breaks`.
///
/// On each piece `f` is recovered from three interior evaluations and the
/// truncated moments `E[G^k 1{a<G<b}]`, `k = 0, 1, 2`, are applied in closed
/// form. Evaluations never land on a break.
pub fn expect_piecewise_quadratic<const K: usize>(f: impl Fn(f64) -> [f64; K], breaks: &[f64]) -> [f64; K] {
    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|b| b.is_finite()).collect();
    cuts.sort_by(|a, b| a.total_cmp(b));
    cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * (1.0 + b.abs()));
    let mut acc = [0.0; K];
    let n = cuts.len();
    for i in 0..=n {
        let a = if i == 0 { f64::NEG_INFINITY } else { cuts[i - 1] };
        let b = if i == n { f64::INFINITY } else { cuts[i] };
        let mass = normal_mass(a, b);
        if mass == 0.0 {
            continue;
        }
        let pts = match (a.is_finite(), b.is_finite()) {
            (false, false) => [-1.0, 0.0, 1.0],
            (true, false) => [a + 1.0, a + 2.0, a + 3.0],
            (false, true) => [b - 3.0, b - 2.0, b - 1.0],
            (true, true) => {
                let w = b - a;
                [a + 0.25 * w, a + 0.5 * w, a + 0.75 * w]
            }
        };
        let vals = [f(pts[0]), f(pts[1]), f(pts[2])];
        // truncated moments
        let (pa, pb) = (normal_pdf_ext(a), normal_pdf_ext(b));
        let m0 = mass;
        let m1 = pa - pb;
        let m2 = mass + tail_product(a, pa) - tail_product(b, pb);
        let (x0, x1, x2) = (pts[0], pts[1], pts[2]);
        for k in 0..K {
            // Newton form: f = y0 + d1 (g - x0) + d2 (g - x0)(g - x1)
            let (y0, y1, y2) = (vals[0][k], vals[1][k], vals[2][k]);
            let d01 = (y1 - y0) / (x1 - x0);
            let d12 = (y2 - y1) / (x2 - x1);
            let d2 = (d12 - d01) / (x2 - x0);
            let c2 = d2;
            let c1 = d01 - d2 * (x0 + x1);
            let c0 = y0 - d01 * x0 + d2 * x0 * x1;
            acc[k] += c0 * m0 + c1 * m1 + c2 * m2;
        }
    }
    acc
}

fn normal_pdf_ext(x: f64) -> f64 {
    if x.is_finite() {
        normal_pdf(x)
    } else {
        0.0
    }
}

fn tail_product(x: f64, pdf: f64) -> f64 {
    if x.is_finite() {
        x * pdf
    } else {
        0.0
    }
}

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, pm1) = legendre_pair(n, x);
                dp = nf * (x * p - pm1) / (x * x - 1.0);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (p, pm1) = legendre_pair(n, x);
            dp = if p.is_finite() { nf * (x * p - pm1) / (x * x - 1.0) } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }
}

/// Returns `(P_n(x), P_{n-1}(x))`.
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    (p1, p0)
}

/// Probabilists' Gauss–Hermite rule: `Σ w_i f(x_i) ≈ E f(G)`, weights sum to 1.
#[derive(Clone, Debug)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    /// Golub–Welsch on the Jacobi matrix of the probabilists' Hermite recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Hermite needs at least one node");
        let mut jacobi = DMatrix::<f64>::zeros(n, n);
        for k in 1..n {
            let off = (k as f64).sqrt();
            jacobi[(k - 1, k)] = off;
            jacobi[(k, k - 1)] = off;
        }
        let eig = SymmetricEigen::new(jacobi);
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let v0 = eig.eigenvectors[(0, i)];
                (eig.eigenvalues[i], v0 * v0)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        Self {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1 / total).collect(),
        }
    }

    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(*x)).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureRule {
    Hermite,
    #[default]
    SplitLegendre,
}

#[derive(Clone, Debug)]
pub struct GaussianQuadrature {
    rule: QuadratureRule,
    nodes: usize,
    legendre: GaussLegendre,
    hermite: Option<GaussHermite>,
}

impl GaussianQuadrature {
    /// Half-width of the integration window for the split rule.
    pub const TRUNCATION: f64 = 10.0;

    pub fn new(rule: QuadratureRule, nodes: usize) -> Result<Self> {
        if nodes == 0 {
            return Err(Error::invalid("quadrature node count must be positive"));
        }
        let hermite = match rule {
            QuadratureRule::Hermite => Some(GaussHermite::new(nodes)),
            QuadratureRule::SplitLegendre => None,
        };
        Ok(Self {
            rule,
            nodes,
            legendre: GaussLegendre::new(nodes),
            hermite,
        })
    }

    pub fn rule(&self) -> QuadratureRule {
        self.rule
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    /// `E f(G)`. `breaks` lists points where `f` may be non-smooth; they are
    /// ignored by the Hermite rule.
    pub fn expect(&self, f: impl Fn(f64) -> f64, breaks: &[f64]) -> f64 {
        self.expect_many(|g| [f(g)], breaks)[0]
    }

    /// Several expectations sharing nodes and breakpoints.
    pub fn expect_many<const K: usize>(&self, f: impl Fn(f64) -> [f64; K], breaks: &[f64]) -> [f64; K] {
        let mut acc = [0.0; K];
        match &self.hermite {
            Some(h) => {
                for (x, w) in h.nodes.iter().zip(&h.weights) {
                    let v = f(*x);
                    for k in 0..K {
                        acc[k] += w * v[k];
                    }
                }
            }
            None => {
                let lim = Self::TRUNCATION;
                let mut cuts: Vec<f64> = Vec::with_capacity(breaks.len() + 2);
                cuts.push(-lim);
                cuts.extend(breaks.iter().copied().filter(|b| b.is_finite() && *b > -lim && *b < lim));
                cuts.push(lim);
                cuts.sort_by(|a, b| a.total_cmp(b));
                for pair in cuts.windows(2) {
                    let (a, b) = (pair[0], pair[1]);
                    if b - a <= 1e-14 {
                        continue;
                    }
                    let half = 0.5 * (b - a);
                    let mid = 0.5 * (a + b);
                    for (x, w) in self.legendre.nodes.iter().zip(&self.legendre.weights) {
                        let g = mid + half * x;
                        let weight = w * half * normal_pdf(g);
                        let v = f(g);
                        for k in 0..K {
                            acc[k] += weight * v[k];
                        }
                    }
                }
            }
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials() {
        let gl = GaussLegendre::new(8);
        // exact for degree <= 15
        let v = gl.integrate(-1.0, 2.0, |x| x.powi(7) - 3.0 * x.powi(2) + 1.0);
        let exact = (2f64.powi(8) - 1.0) / 8.0 - (8.0 + 1.0) + 3.0;
        assert!((v - exact).abs() < 1e-12, "{v} vs {exact}");
        let w: f64 = GaussLegendre::new(64).weights.iter().sum();
        assert!((w - 2.0).abs() < 1e-13);
    }

    #[test]
    fn hermite_moments() {
        let gh = GaussHermite::new(20);
        assert!((gh.expect(|x| x * x) - 1.0).abs() < 1e-12);
        assert!((gh.expect(|x| x.powi(4)) - 3.0).abs() < 1e-11);
        assert!(gh.expect(|x| x.powi(3)).abs() < 1e-12);
    }

    #[test]
    fn split_rule_relu_mean() {
        let q = GaussianQuadrature::new(QuadratureRule::SplitLegendre, 64).unwrap();
        let v = q.expect(|g| g.max(0.0), &[0.0]);
        assert!((v - INV_SQRT_2PI).abs() < 1e-14);
        let b = 0.3;
        let v2 = q.expect(|g| (g + b).max(0.0), &[-b]);
        let exact = b * normal_cdf(b) + normal_pdf(b);
        assert!((v2 - exact).abs() < 1e-14);
    }

    #[test]
    fn piecewise_quadratic_is_exact() {
        let v = expect_piecewise_quadratic(|g| [g.max(0.0), g * g, (g - 0.3).max(0.0).powi(2)], &[0.0, 0.3]);
        assert!((v[0] - INV_SQRT_2PI).abs() < 1e-15);
        assert!((v[1] - 1.0).abs() < 1e-14);
        // E (G - t)_+^2 = (1 + t^2) Φ(-t) - t φ(t)
        let t = 0.3;
        let exact = (1.0 + t * t) * normal_cdf(-t) - t * normal_pdf(t);
        assert!((v[2] - exact).abs() < 1e-14);
        let q = GaussianQuadrature::new(QuadratureRule::SplitLegendre, 64).unwrap();
        let f = |g: f64| (2.0 * g - 1.0).clamp(-0.5, 3.0);
        let a = expect_piecewise_quadratic(|g| [f(g)], &[0.25, 2.0])[0];
        assert!((a - q.expect(f, &[0.25, 2.0])).abs() < 1e-14);
    }

    #[test]
    fn cdf_tails() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-16);
        assert!(normal_cdf(-40.0) >= 0.0);
        assert!((normal_cdf(1.959_963_984_540_054) - 0.975).abs() < 1e-15);
    }
}
