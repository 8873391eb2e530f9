//! Rotationally reduced risk functionals of the isotropic two-class law.
//!
//! With `τ± = 1 ± Δ`, the building block is
//! `q(t₁, t₂) = E σ₂(t₂ σ₁(t₁ G))`, `G ~ N(0, 1)`, and
//! `q±(r₁, r₂) = q(τ₊ r₁, τ± r₂)`. From it:
//!
//! * `v(r₁, r₂) = -½ q₊(r₁, r₂) + ½ q₋(r₁, r₂)`
//! * `u₀`, the two-term correlated-Gaussian interaction, and its angular
//!   average `u_d` under `Θ ∝ sin^{d-2} θ`
//! * `u∞(r₁, r₂, r₃) = ½ [q₊(r₁,r₂) q₊(r₁,r₃) + q₋(r₁,r₂) q₊(r₁,r₃)]`
//! * `R̄∞(ρ̄) = ½ (1 - ⟨q₊, ρ̄⟩)² + ½ (1 + ⟨q₋, ρ̄⟩)²`
//! * `ψ∞ = λ₊ q₊ + λ₋ q₋` with `λ₊ = ½(⟨q₊, ρ̄⟩ - 1)`, `λ₋ = ½(⟨q₋, ρ̄⟩ + 1)`.
//!
//! `u₀` and `u∞` are implemented in the asymmetric two-term form above. Note
//! that expanding `R̄∞` gives the interaction `½[q₊ q₊' + q₋ q₋']`, which is
//! what [`StaticsContext::u_infinity_symmetric`] and
//! [`StaticsContext::u0_symmetric`] return; the finite-width gap identity is
//! built on that kernel.
//!
//! The two-layer reduction uses `q±(r) = E σ(τ± r G)` with `σ` taken from
//! `activation2` ([`StaticsContext::q_single`]); it coincides with
//! `q±(1/τ₊, r)` when `σ₁` is the identity.
//!
//! For the ReLU model with split radii, `q±(r₁, r₂, b) = b Φ(b/s) + s φ(b/s)`,
//! `s = √((1±Δ)² r₁² + r₂²)`.

use serde::{Deserialize, Serialize};

use crate::activation::ActivationKind;
use crate::data::GaussianMixtureSpec;
use crate::error::{Error, Result};
use crate::network::NetworkParams;
use crate::quadrature::{expect_piecewise_quadratic, normal_cdf, normal_pdf, GaussianQuadrature, QuadratureRule};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub const BOTH: [Sign; 2] = [Sign::Plus, Sign::Minus];
}

/// Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub se: f64,
}

impl McEstimate {
    pub fn from_sums(sum: f64, sum_sq: f64, n: usize) -> Self {
        let nf = n as f64;
        let mean = sum / nf;
        let var = if n > 1 {
            ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0)
        } else {
            0.0
        };
        Self {
            mean,
            se: (var / nf).sqrt(),
        }
    }

    pub fn from_samples(values: &[f64]) -> Self {
        let s: f64 = values.iter().sum();
        let mean = s / values.len() as f64;
        let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        let n = values.len() as f64;
        let var = if values.len() > 1 { ss / (n - 1.0) } else { 0.0 };
        Self {
            mean,
            se: (var / n).sqrt(),
        }
    }
}

/// Probability measure on `[0, ∞)` given by weighted atoms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialMeasure {
    atoms: Vec<(f64, f64)>,
}

impl RadialMeasure {
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::invalid("radial measure needs at least one atom"));
        }
        if atoms.iter().any(|(r, m)| !(r.is_finite() && *r >= 0.0 && m.is_finite() && *m >= 0.0)) {
            return Err(Error::invalid("radial atoms need finite r >= 0 and mass >= 0"));
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("radial masses sum to {total}, expected 1")));
        }
        Ok(Self { atoms })
    }

    /// Equal-mass atoms at the given radii.
    pub fn uniform(radii: &[f64]) -> Result<Self> {
        if radii.is_empty() {
            return Err(Error::invalid("radial measure needs at least one atom"));
        }
        let m = 1.0 / radii.len() as f64;
        let mut atoms: Vec<(f64, f64)> = radii.iter().map(|&r| (r, m)).collect();
        // absorb rounding in the last mass
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if let Some(last) = atoms.last_mut() {
            last.1 += 1.0 - total;
        }
        Self::new(atoms)
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.atoms.iter().map(|&(r, m)| m * f(r)).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsiInfinity {
    pub value: f64,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
}

/// How one-dimensional Gaussian expectations are evaluated.
///
/// Every supported activation is piecewise linear, so the integrands of `q`
/// and its derivatives are piecewise affine in `G` and have exact expressions
/// through `Φ` and `φ` ([`ExpectationMethod::ClosedForm`]). The quadrature
/// path is kept for activations added later and for cross-checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ExpectationMethod {
    #[default]
    ClosedForm,
    Quadrature,
}

#[derive(Clone, Debug)]
pub struct StaticsContext {
    pub delta: f64,
    pub tau_plus: f64,
    pub tau_minus: f64,
    pub activation1: ActivationKind,
    pub activation2: ActivationKind,
    method: ExpectationMethod,
    quad: GaussianQuadrature,
}

pub const DEFAULT_QUAD_NODES: usize = 64;

impl StaticsContext {
    pub fn new(delta: f64, activation1: ActivationKind, activation2: ActivationKind) -> Result<Self> {
        let mut ctx =
            Self::with_quadrature(delta, activation1, activation2, QuadratureRule::SplitLegendre, DEFAULT_QUAD_NODES)?;
        ctx.method = ExpectationMethod::ClosedForm;
        Ok(ctx)
    }

    /// Context for the two-layer reduction: `σ₁` is the identity and `σ₂ = σ`.
    pub fn two_layer(delta: f64, activation: ActivationKind) -> Result<Self> {
        Self::new(delta, ActivationKind::Identity, activation)
    }

    pub fn with_quadrature(
        delta: f64,
        activation1: ActivationKind,
        activation2: ActivationKind,
        rule: QuadratureRule,
        nodes: usize,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&delta) {
            return Err(Error::invalid(format!("delta must lie in [0, 1], got {delta}")));
        }
        activation1.validate()?;
        activation2.validate()?;
        Ok(Self {
            delta,
            tau_plus: 1.0 + delta,
            tau_minus: 1.0 - delta,
            activation1,
            activation2,
            method: ExpectationMethod::Quadrature,
            quad: GaussianQuadrature::new(rule, nodes)?,
        })
    }

    pub fn quad_nodes(&self) -> usize {
        self.quad.nodes()
    }

    pub fn quadrature(&self) -> &GaussianQuadrature {
        &self.quad
    }

    pub fn method(&self) -> ExpectationMethod {
        self.method
    }

    fn expect_1d<const K: usize>(&self, f: impl Fn(f64) -> [f64; K], breaks: &[f64]) -> [f64; K] {
        match self.method {
            ExpectationMethod::ClosedForm => expect_piecewise_quadratic(f, breaks),
            ExpectationMethod::Quadrature => self.quad.expect_many(f, breaks),
        }
    }

    pub fn tau(&self, sign: Sign) -> f64 {
        match sign {
            Sign::Plus => self.tau_plus,
            Sign::Minus => self.tau_minus,
        }
    }

    /// Kinks (in `g`) of `g ↦ σ₂(t₂ σ₁(t₁ g))`.
    fn composite_breaks(&self, t1: f64, t2: f64) -> Vec<f64> {
        // beyond this the Gaussian mass is below f64 resolution
        let lim = 40.0;
        let mut inner: Vec<f64> = if t1 != 0.0 {
            self.activation1.kinks().iter().map(|k| k / t1).collect()
        } else {
            Vec::new()
        };
        inner.retain(|b| b.abs() < lim);
        inner.sort_by(|a, b| a.total_cmp(b));
        let mut out = inner.clone();
        if t2 != 0.0 {
            let outer = self.activation2.kinks();
            let mut edges = Vec::with_capacity(inner.len() + 2);
            edges.push(-lim);
            edges.extend(inner.iter().copied());
            edges.push(lim);
            for p in edges.windows(2) {
                let (a, b) = (p[0], p[1]);
                let m = 0.5 * (a + b);
                let slope = t1 * self.activation1.derivative(t1 * m);
                if slope == 0.0 {
                    continue;
                }
                let level = self.activation1.eval(t1 * m);
                for k in &outer {
                    let g = m + (k / t2 - level) / slope;
                    if g > a && g < b {
                        out.push(g);
                    }
                }
            }
        }
        out
    }

    /// `q(t₁, t₂) = E σ₂(t₂ σ₁(t₁ G))`.
    pub fn q(&self, t1: f64, t2: f64) -> f64 {
        let breaks = self.composite_breaks(t1, t2);
        self.expect_1d(|g| [self.activation2.eval(t2 * self.activation1.eval(t1 * g))], &breaks)[0]
    }

    /// `(q, ∂q/∂t₁, ∂q/∂t₂)`.
    pub fn q_with_grad(&self, t1: f64, t2: f64) -> [f64; 3] {
        let breaks = self.composite_breaks(t1, t2);
        self.expect_1d(
            |g| {
                let inner = self.activation1.eval(t1 * g);
                let arg = t2 * inner;
                let d2 = self.activation2.derivative(arg);
                [
                    self.activation2.eval(arg),
                    d2 * t2 * self.activation1.derivative(t1 * g) * g,
                    d2 * inner,
                ]
            },
            &breaks,
        )
    }

    /// `q±(r₁, r₂) = q(τ₊ r₁, τ± r₂)`.
    pub fn q_pm(&self, r1: f64, r2: f64, sign: Sign) -> f64 {
        self.q(self.tau_plus * r1, self.tau(sign) * r2)
    }

    /// `(q±, ∂q±/∂r₁, ∂q±/∂r₂)`.
    pub fn q_pm_with_grad(&self, r1: f64, r2: f64, sign: Sign) -> [f64; 3] {
        let ts = self.tau(sign);
        let [q, d1, d2] = self.q_with_grad(self.tau_plus * r1, ts * r2);
        [q, self.tau_plus * d1, ts * d2]
    }

    /// Two-layer `q±(r) = E σ(τ± r G)`, with `σ = activation2`.
    pub fn q_single(&self, r: f64, sign: Sign) -> f64 {
        self.q_single_with_grad(r, sign)[0]
    }

    /// `(q±(r), dq±/dr)` for the two-layer reduction.
    pub fn q_single_with_grad(&self, r: f64, sign: Sign) -> [f64; 2] {
        let scale = self.tau(sign) * r;
        let breaks: Vec<f64> = if scale != 0.0 {
            self.activation2.kinks().iter().map(|k| k / scale).collect()
        } else {
            Vec::new()
        };
        let tau = self.tau(sign);
        self.expect_1d(
            |g| {
                let arg = scale * g;
                [self.activation2.eval(arg), self.activation2.derivative(arg) * tau * g]
            },
            &breaks,
        )
    }

    /// Two-layer second moment `E σ(τ± r G)²`.
    pub fn q_single_second_moment(&self, r: f64, sign: Sign) -> f64 {
        let scale = self.tau(sign) * r;
        let breaks: Vec<f64> = if scale != 0.0 {
            self.activation2.kinks().iter().map(|k| k / scale).collect()
        } else {
            Vec::new()
        };
        self.expect_1d(
            |g| {
                let v = self.activation2.eval(scale * g);
                [v * v]
            },
            &breaks,
        )[0]
    }

    /// `v(r₁, r₂) = -½ q(τ₊r₁, τ₊r₂) + ½ q(τ₊r₁, τ₋r₂)`.
    pub fn v(&self, r1: f64, r2: f64) -> f64 {
        -0.5 * self.q_pm(r1, r2, Sign::Plus) + 0.5 * self.q_pm(r1, r2, Sign::Minus)
    }

    fn layer_fn(&self, r1: f64, t2: f64) -> (impl Fn(f64) -> f64 + '_, Vec<f64>) {
        let t1 = self.tau_plus * r1;
        let breaks = self.composite_breaks(t1, t2);
        (move |g: f64| self.activation2.eval(t2 * self.activation1.eval(t1 * g)), breaks)
    }

    /// `E f(G₁) h(G₂)` for standard normals with correlation `c`.
    fn correlated_expect(
        &self,
        f: &impl Fn(f64) -> f64,
        f_breaks: &[f64],
        h: &impl Fn(f64) -> f64,
        h_breaks: &[f64],
        c: f64,
    ) -> f64 {
        let c = c.clamp(-1.0, 1.0);
        let s = (1.0 - c * c).max(0.0).sqrt();
        let mut outer: Vec<f64> = f_breaks.to_vec();
        if c != 0.0 {
            outer.extend(h_breaks.iter().map(|b| b / c));
        }
        if s < 1e-12 {
            return self.expect_1d(|z| [f(z) * h(c * z)], &outer)[0];
        }
        self.quad.expect(
            |z| {
                let fz = f(z);
                if fz == 0.0 {
                    return 0.0;
                }
                let inner: Vec<f64> = h_breaks.iter().map(|b| (b - c * z) / s).collect();
                fz * self.expect_1d(|w| [h(c * z + s * w)], &inner)[0]
            },
            &outer,
        )
    }

    /// `u₀(r₁, r₂, r₃, r₂r₃cos α)` in the printed two-term form:
    /// `½ E{σ₂(τ₊r₂ σ₁(τ₊r₁G₁)) σ₂(τ₊r₃ σ₁(τ₊r₁G₂))} + ½ E{σ₂(τ₋r₂ σ₁(τ₊r₁G₁)) σ₂(τ₊r₃ σ₁(τ₊r₁G₂))}`.
    pub fn u0(&self, r1: f64, r2: f64, r3: f64, cos_alpha: f64) -> Result<f64> {
        check_cos(cos_alpha)?;
        let (f_pp, b_pp) = self.layer_fn(r1, self.tau_plus * r2);
        let (f_mp, b_mp) = self.layer_fn(r1, self.tau_minus * r2);
        let (h, b_h) = self.layer_fn(r1, self.tau_plus * r3);
        Ok(0.5 * self.correlated_expect(&f_pp, &b_pp, &h, &b_h, cos_alpha)
            + 0.5 * self.correlated_expect(&f_mp, &b_mp, &h, &b_h, cos_alpha))
    }

    /// Interaction consistent with the expansion of `R̄∞`:
    /// `½ E{f₊(r₂; G₁) f₊(r₃; G₂)} + ½ E{f₋(r₂; G₁) f₋(r₃; G₂)}`.
    pub fn u0_symmetric(&self, r1: f64, r2: f64, r3: f64, cos_alpha: f64) -> Result<f64> {
        check_cos(cos_alpha)?;
        let mut acc = 0.0;
        for sign in Sign::BOTH {
            let tau = self.tau(sign);
            let (f, bf) = self.layer_fn(r1, tau * r2);
            let (h, bh) = self.layer_fn(r1, tau * r3);
            acc += 0.5 * self.correlated_expect(&f, &bf, &h, &bh, cos_alpha);
        }
        Ok(acc)
    }

    /// `u_d = E u₀(r₁, r₂, r₃, r₂r₃ cos Θ)` by Monte Carlo, with
    /// `cos Θ = ⟨g₁, g₂⟩ / (‖g₁‖ ‖g₂‖)` for independent `g₁, g₂ ~ N(0, I_d)`.
    pub fn u_d(&self, d: usize, r1: f64, r2: f64, r3: f64, mc_samples: usize, seed: u64) -> Result<McEstimate> {
        if d < 2 {
            return Err(Error::invalid(format!("u_d needs d >= 2, got {d}")));
        }
        if mc_samples == 0 {
            return Err(Error::invalid("u_d needs at least one Monte Carlo sample"));
        }
        let mut rng = rng::from_seed(seed);
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..mc_samples {
            let cos = sample_cos_angle(&mut rng, d);
            let u = self.u0(r1, r2, r3, cos)?;
            sum += u;
            sum_sq += u * u;
        }
        Ok(McEstimate::from_sums(sum, sum_sq, mc_samples))
    }

    /// `u∞(r₁, r₂, r₃) = ½ [q(τ₊r₁, τ₊r₂) q(τ₊r₁, τ₊r₃) + q(τ₊r₁, τ₋r₂) q(τ₊r₁, τ₊r₃)]`.
    pub fn u_infinity(&self, r1: f64, r2: f64, r3: f64) -> f64 {
        let q3 = self.q_pm(r1, r3, Sign::Plus);
        0.5 * (self.q_pm(r1, r2, Sign::Plus) * q3 + self.q_pm(r1, r2, Sign::Minus) * q3)
    }

    /// `½ [q₊(r₁,r₂) q₊(r₁,r₃) + q₋(r₁,r₂) q₋(r₁,r₃)]`.
    pub fn u_infinity_symmetric(&self, r1: f64, r2: f64, r3: f64) -> f64 {
        0.5 * (self.q_pm(r1, r2, Sign::Plus) * self.q_pm(r1, r3, Sign::Plus)
            + self.q_pm(r1, r2, Sign::Minus) * self.q_pm(r1, r3, Sign::Minus))
    }

    /// `(⟨q₊, ρ̄⟩, ⟨q₋, ρ̄⟩)` at fixed `r₁`.
    pub fn bracket_means(&self, rho2: &RadialMeasure, r1: f64) -> (f64, f64) {
        (
            rho2.integrate(|r| self.q_pm(r1, r, Sign::Plus)),
            rho2.integrate(|r| self.q_pm(r1, r, Sign::Minus)),
        )
    }

    pub fn risk_infinity(&self, rho2: &RadialMeasure, r1: f64) -> f64 {
        let (mp, mm) = self.bracket_means(rho2, r1);
        risk_from_means(mp, mm)
    }

    pub fn lambdas(&self, rho2: &RadialMeasure, r1: f64) -> (f64, f64) {
        let (mp, mm) = self.bracket_means(rho2, r1);
        lambdas_from_means(mp, mm)
    }

    pub fn psi_infinity(&self, rho2: &RadialMeasure, r1: f64, r2: f64) -> PsiInfinity {
        let (lp, lm) = self.lambdas(rho2, r1);
        PsiInfinity {
            value: lp * self.q_pm(r1, r2, Sign::Plus) + lm * self.q_pm(r1, r2, Sign::Minus),
            lambda_plus: lp,
            lambda_minus: lm,
        }
    }

    /// `∂ψ∞/∂r₂` at `(r₁, r₂)` against `ρ̄` (λ± held at their `ρ̄` values).
    pub fn psi_infinity_dr2(&self, rho2: &RadialMeasure, r1: f64, r2: f64) -> f64 {
        let (lp, lm) = self.lambdas(rho2, r1);
        lp * self.q_pm_with_grad(r1, r2, Sign::Plus)[2] + lm * self.q_pm_with_grad(r1, r2, Sign::Minus)[2]
    }

    /// Two-layer `R̄∞(ρ̄) = ½(1 - ⟨q₊, ρ̄⟩)² + ½(1 + ⟨q₋, ρ̄⟩)²`.
    pub fn risk_infinity_two_layer(&self, rho: &RadialMeasure) -> f64 {
        let mp = rho.integrate(|r| self.q_single(r, Sign::Plus));
        let mm = rho.integrate(|r| self.q_single(r, Sign::Minus));
        risk_from_means(mp, mm)
    }

    /// Two-layer `ψ∞(r; ρ̄)`.
    pub fn psi_infinity_two_layer(&self, rho: &RadialMeasure, r: f64) -> PsiInfinity {
        let mp = rho.integrate(|x| self.q_single(x, Sign::Plus));
        let mm = rho.integrate(|x| self.q_single(x, Sign::Minus));
        let (lp, lm) = lambdas_from_means(mp, mm);
        PsiInfinity {
            value: lp * self.q_single(r, Sign::Plus) + lm * self.q_single(r, Sign::Minus),
            lambda_plus: lp,
            lambda_minus: lm,
        }
    }

    pub fn psi_infinity_two_layer_dr(&self, rho: &RadialMeasure, r: f64) -> f64 {
        let mp = rho.integrate(|x| self.q_single(x, Sign::Plus));
        let mm = rho.integrate(|x| self.q_single(x, Sign::Minus));
        let (lp, lm) = lambdas_from_means(mp, mm);
        lp * self.q_single_with_grad(r, Sign::Plus)[1] + lm * self.q_single_with_grad(r, Sign::Minus)[1]
    }

    /// Two-layer interaction kernel implied by `R̄∞` at finite width:
    /// off-diagonal `½[q₊(r)q₊(r') + q₋(r)q₋(r')]`, diagonal `½[E σ(τ₊rG)² + E σ(τ₋rG)²]`.
    pub fn two_layer_kernel(&self, r: f64, r_prime: f64, same_unit: bool) -> f64 {
        if same_unit {
            0.5 * (self.q_single_second_moment(r, Sign::Plus) + self.q_single_second_moment(r, Sign::Minus))
        } else {
            0.5 * (self.q_single(r, Sign::Plus) * self.q_single(r_prime, Sign::Plus)
                + self.q_single(r, Sign::Minus) * self.q_single(r_prime, Sign::Minus))
        }
    }
}

fn check_cos(c: f64) -> Result<()> {
    if !(c.is_finite() && c.abs() <= 1.0) {
        return Err(Error::invalid(format!("|cos α| must be <= 1, got {c}")));
    }
    Ok(())
}

pub fn sample_cos_angle(rng: &mut rng::StreamRng, d: usize) -> f64 {
    let mut dot = 0.0;
    let mut n1 = 0.0;
    let mut n2 = 0.0;
    for _ in 0..d {
        let a = rng::normal(rng);
        let b = rng::normal(rng);
        dot += a * b;
        n1 += a * a;
        n2 += b * b;
    }
    (dot / (n1 * n2).sqrt()).clamp(-1.0, 1.0)
}

#[inline]
pub fn risk_from_means(mean_plus: f64, mean_minus: f64) -> f64 {
    0.5 * (1.0 - mean_plus).powi(2) + 0.5 * (1.0 + mean_minus).powi(2)
}

#[inline]
pub fn lambdas_from_means(mean_plus: f64, mean_minus: f64) -> (f64, f64) {
    (0.5 * (mean_plus - 1.0), 0.5 * (mean_minus + 1.0))
}

/// One particle of the ReLU model: output scale, bias and the two block radii.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReluAtom {
    pub a: f64,
    pub b: f64,
    pub r1: f64,
    pub r2: f64,
}

fn relu_scale(delta: f64, r1: f64, r2: f64, sign: Sign) -> (f64, f64) {
    let tau = match sign {
        Sign::Plus => 1.0 + delta,
        Sign::Minus => 1.0 - delta,
    };
    ((tau * tau * r1 * r1 + r2 * r2).sqrt(), tau)
}

/// `E max(sG + b, 0) = b Φ(b/s) + s φ(b/s)`, `s = √((1±Δ)² r₁² + r₂²)`.
/// At `s = 0` returns the pointwise limit `max(b, 0)`.
pub fn relu_q_pm(delta: f64, r1: f64, r2: f64, b: f64, sign: Sign) -> f64 {
    let (s, _) = relu_scale(delta, r1, r2, sign);
    if s == 0.0 {
        return b.max(0.0);
    }
    let z = b / s;
    b * normal_cdf(z) + s * normal_pdf(z)
}

/// `(q±, ∂/∂r₁, ∂/∂r₂, ∂/∂b)`, using `∂q/∂b = Φ(b/s)` and `∂q/∂s = φ(b/s)`.
/// At `s = 0` the radial derivatives are taken as 0 and `∂/∂b = 1{b ≥ 0}`.
pub fn relu_q_pm_with_grad(delta: f64, r1: f64, r2: f64, b: f64, sign: Sign) -> [f64; 4] {
    let (s, tau) = relu_scale(delta, r1, r2, sign);
    if s == 0.0 {
        return [b.max(0.0), 0.0, 0.0, if b >= 0.0 { 1.0 } else { 0.0 }];
    }
    let z = b / s;
    let cdf = normal_cdf(z);
    let pdf = normal_pdf(z);
    [b * cdf + s * pdf, pdf * tau * tau * r1 / s, pdf * r2 / s, cdf]
}

/// `R̄∞,J = ½(1 - (1/J) Σ a_i q₊,i)² + ½(1 + (1/J) Σ a_i q₋,i)²`.
pub fn relu_risk_infinity(delta: f64, ensemble: &[ReluAtom]) -> Result<f64> {
    if ensemble.is_empty() {
        return Err(Error::invalid("ReLU ensemble must be nonempty"));
    }
    let j = ensemble.len() as f64;
    let mp: f64 = ensemble.iter().map(|p| p.a * relu_q_pm(delta, p.r1, p.r2, p.b, Sign::Plus)).sum::<f64>() / j;
    let mm: f64 = ensemble.iter().map(|p| p.a * relu_q_pm(delta, p.r1, p.r2, p.b, Sign::Minus)).sum::<f64>() / j;
    Ok(risk_from_means(mp, mm))
}

/// Monte Carlo estimates of `V(θ_m) = -E{y σ*_m}` and `U(θ_m, θ_m') = E{σ*_m σ*_m'}`
/// over the output-layer units of `params`.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialEstimates {
    pub v: Vec<McEstimate>,
    pub u: Vec<Vec<McEstimate>>,
}

pub fn population_potentials_mc(
    spec: &GaussianMixtureSpec,
    params: &NetworkParams,
    samples: usize,
    seed: u64,
) -> Result<PotentialEstimates> {
    if samples == 0 {
        return Err(Error::invalid("potentials need at least one sample"));
    }
    params.validate()?;
    let data = crate::data::sample_auto(spec, seed, samples)?;
    let n = params.output_layer().len();
    let mut v_sum = vec![0.0; n];
    let mut v_sq = vec![0.0; n];
    let mut u_sum = vec![vec![0.0; n]; n];
    let mut u_sq = vec![vec![0.0; n]; n];
    for s in &data {
        let outs = params.output_unit_values(&s.x)?;
        for m in 0..n {
            let vm = -s.y * outs[m];
            v_sum[m] += vm;
            v_sq[m] += vm * vm;
            for mp in 0..n {
                let u = outs[m] * outs[mp];
                u_sum[m][mp] += u;
                u_sq[m][mp] += u * u;
            }
        }
    }
    Ok(PotentialEstimates {
        v: (0..n).map(|m| McEstimate::from_sums(v_sum[m], v_sq[m], samples)).collect(),
        u: (0..n)
            .map(|m| (0..n).map(|mp| McEstimate::from_sums(u_sum[m][mp], u_sq[m][mp], samples)).collect())
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pl_ctx(delta: f64) -> StaticsContext {
        StaticsContext::new(delta, ActivationKind::interpolated_step(), ActivationKind::interpolated_step()).unwrap()
    }

    #[test]
    fn closed_form_matches_quadrature() {
        let exact = pl_ctx(0.8);
        let quad = StaticsContext::with_quadrature(
            0.8,
            ActivationKind::interpolated_step(),
            ActivationKind::interpolated_step(),
            QuadratureRule::SplitLegendre,
            64,
        )
        .unwrap();
        for (t1, t2) in [(1.0, 1.0), (1.8, 0.2), (0.3, 2.5), (4.0, 0.9)] {
            let a = exact.q_with_grad(t1, t2);
            let b = quad.q_with_grad(t1, t2);
            for k in 0..3 {
                assert!((a[k] - b[k]).abs() < 1e-10, "({t1}, {t2})[{k}]: {} vs {}", a[k], b[k]);
            }
        }
    }

    #[test]
    fn q_with_zero_outer_scale_is_sigma2_at_zero() {
        let ctx = pl_ctx(0.8);
        assert!((ctx.q(1.3, 0.0) + 2.5).abs() < 1e-13);
    }

    #[test]
    fn q_with_degenerate_inner_gaussian() {
        let ctx = pl_ctx(0.8);
        let c = ctx.activation1.eval(0.0);
        for t2 in [0.1, 0.7, 2.0] {
            assert!((ctx.q(0.0, t2) - ctx.activation2.eval(t2 * c)).abs() < 1e-13);
        }
    }

    #[test]
    fn q_pm_collapses_at_delta_zero() {
        let ctx = pl_ctx(0.0);
        for (r1, r2) in [(0.3, 0.9), (1.0, 1.0), (2.0, 0.1)] {
            assert_eq!(ctx.q_pm(r1, r2, Sign::Plus), ctx.q_pm(r1, r2, Sign::Minus));
            assert_eq!(ctx.v(r1, r2), 0.0);
        }
    }

    #[test]
    fn q_pm_substitution() {
        let ctx = pl_ctx(0.8);
        assert_eq!(ctx.q_pm(1.0, 1.0, Sign::Plus), ctx.q(1.8, 1.8));
        assert_eq!(ctx.q_pm(1.0, 1.0, Sign::Minus), ctx.q(1.8, 1.0 - 0.8));
    }

    #[test]
    fn single_layer_reduction_matches_identity_inner() {
        let ctx = StaticsContext::two_layer(0.8, ActivationKind::interpolated_step()).unwrap();
        for r in [0.05, 0.4, 0.8, 1.3, 3.0] {
            for sign in Sign::BOTH {
                let a = ctx.q_single(r, sign);
                let b = ctx.q_pm(1.0 / ctx.tau_plus, r, sign);
                assert!((a - b).abs() < 1e-12, "r = {r}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn saturated_v_vanishes() {
        // σ₂ saturates at s1 when τ± r₂ σ₁(…) <= t1 everywhere; choose σ₁ = 0
        // on the bulk by taking r₁ = 0 so that σ₁(0) = s1 < 0 and τ± r₂ s1 < t1.
        let ctx = pl_ctx(0.8);
        assert_eq!(ctx.v(0.0, 0.7), 0.0);
    }

    #[test]
    fn u_infinity_identities() {
        let ctx0 = pl_ctx(0.0);
        let u = ctx0.u_infinity(0.9, 0.7, 1.1);
        let expect = ctx0.q(0.9, 0.7) * ctx0.q(0.9, 1.1);
        assert!((u - expect).abs() < 1e-12);
        let ctx = pl_ctx(0.8);
        let (r1, r2) = (0.9, 0.6);
        let lhs = ctx.u_infinity(r1, r2, r2);
        let qp = ctx.q(ctx.tau_plus * r1, ctx.tau_plus * r2);
        let qm = ctx.q(ctx.tau_plus * r1, ctx.tau_minus * r2);
        assert!((lhs - 0.5 * qp * (qp + qm)).abs() < 1e-12);
    }

    #[test]
    fn u0_factorizes_at_zero_correlation() {
        let ctx = pl_ctx(0.8);
        let (r1, r2, r3) = (0.9, 0.7, 1.2);
        let u = ctx.u0(r1, r2, r3, 0.0).unwrap();
        assert!((u - ctx.u_infinity(r1, r2, r3)).abs() < 1e-10, "{u}");
    }

    #[test]
    fn u0_full_correlation_is_a_square() {
        let ctx = pl_ctx(0.8);
        let (r1, r2) = (0.9, 0.7);
        let u = ctx.u0(r1, r2, r2, 1.0).unwrap();
        let first = ctx.quadrature().expect(
            |g| {
                let v = ctx.activation2.eval(ctx.tau_plus * r2 * ctx.activation1.eval(ctx.tau_plus * r1 * g));
                v * v
            },
            &ctx.composite_breaks(ctx.tau_plus * r1, ctx.tau_plus * r2),
        );
        assert!(first >= 0.0);
        let second = u - 0.5 * first;
        // second term at c = 1 is E{f₋(G) f₊(G)}
        let (f, _) = ctx.layer_fn(r1, ctx.tau_minus * r2);
        let (h, _) = ctx.layer_fn(r1, ctx.tau_plus * r2);
        let mut br = ctx.composite_breaks(ctx.tau_plus * r1, ctx.tau_minus * r2);
        br.extend(ctx.composite_breaks(ctx.tau_plus * r1, ctx.tau_plus * r2));
        let direct = ctx.quadrature().expect(|g| f(g) * h(g), &br);
        assert!((second - 0.5 * direct).abs() < 1e-10);
        assert!(ctx.u0(r1, r2, r2, 1.5).is_err());
    }

    #[test]
    fn u_d_rejects_small_dimension() {
        assert!(pl_ctx(0.8).u_d(1, 1.0, 1.0, 1.0, 10, 1).is_err());
    }

    #[test]
    fn risk_and_psi_basics() {
        let ctx = pl_ctx(0.8);
        let rho = RadialMeasure::uniform(&[0.3, 0.8, 1.4]).unwrap();
        assert!(ctx.risk_infinity(&rho, 1.0) >= 0.0);
        let psi = ctx.psi_infinity(&rho, 1.0, 0.5);
        let (mp, mm) = ctx.bracket_means(&rho, 1.0);
        assert!((psi.lambda_plus - 0.5 * (mp - 1.0)).abs() < 1e-15);
        assert!((psi.lambda_minus - 0.5 * (mm + 1.0)).abs() < 1e-15);
        assert!(RadialMeasure::new(vec![(1.0, 0.5)]).is_err());
        assert!(RadialMeasure::new(vec![(-1.0, 1.0)]).is_err());
    }

    #[test]
    fn psi_at_delta_zero() {
        let ctx = pl_ctx(0.0);
        let rho = RadialMeasure::uniform(&[0.3, 0.8, 1.4]).unwrap();
        let psi = ctx.psi_infinity(&rho, 0.9, 0.6);
        let m = rho.integrate(|r| ctx.q(0.9, r));
        assert!((psi.value - m * ctx.q(0.9, 0.6)).abs() < 1e-12);
    }

    #[test]
    fn relu_closed_form_limits() {
        for (r1, r2) in [(1.0, 0.0), (0.3, 0.4), (0.0, 2.0)] {
            for sign in Sign::BOTH {
                let (s, _) = relu_scale(0.5, r1, r2, sign);
                let q = relu_q_pm(0.5, r1, r2, 0.0, sign);
                assert!((q - s * crate::quadrature::INV_SQRT_2PI).abs() < 1e-15);
            }
        }
        let q = relu_q_pm(0.0, 1.0, 0.0, 50.0, Sign::Plus);
        assert!(((q - 50.0) / 50.0).abs() < 1e-10);
        assert_eq!(relu_q_pm(0.3, 0.0, 0.0, 0.7, Sign::Minus), 0.7);
        assert_eq!(relu_q_pm(0.3, 0.0, 0.0, -0.7, Sign::Minus), 0.0);
    }

    #[test]
    fn relu_risk_edge_cases() {
        let atoms = vec![
            ReluAtom { a: 0.0, b: 1.0, r1: 0.5, r2: 0.5 };
            4
        ];
        assert_eq!(relu_risk_infinity(0.5, &atoms).unwrap(), 1.0);
        assert!(relu_risk_infinity(0.5, &[]).is_err());
        // J = 1 with a zeroing the first bracket
        let (r1, r2, b) = (0.6, 0.4, 0.2);
        let qp = relu_q_pm(0.5, r1, r2, b, Sign::Plus);
        let qm = relu_q_pm(0.5, r1, r2, b, Sign::Minus);
        let a = 1.0 / qp;
        let r = relu_risk_infinity(0.5, &[ReluAtom { a, b, r1, r2 }]).unwrap();
        assert!((r - 0.5 * (1.0 + a * qm).powi(2)).abs() < 1e-12);
    }
}
