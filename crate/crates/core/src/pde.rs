//! Particle integration of the limiting transport dynamics.
//!
//! Under the multiple-deltas ansatz the layer measure is `(1/J) Σ δ_{r_i(t)}`
//! and the transport equation reduces to the ODE system
//! `dr/dt = -J ξ(t) ∇R̄∞,J(r)`, with
//! `R̄∞,J = ½(1 - m₊)² + ½(1 + m₋)²` and `m± = (1/J) Σ_i q±(r_i)`.
//! Three particle kinds are supported:
//!
//! * [`EnsembleKind::Radial1D`]: one radius per particle, `q± = E σ(τ± r G)`.
//! * [`EnsembleKind::ReluABRR`]: `(a, b, r₁, r₂)` per particle with the ReLU
//!   closed form, contribution `a q±(r₁, r₂, b)`.
//! * [`EnsembleKind::ThreeLayerRR`]: `(r₁, r₂)` per particle with
//!   `q±(r₁, r₂) = q(τ₊ r₁, τ± r₂)`.
//!
//! Radial coordinates are clamped at 0 after every update; the number of
//! clamps is reported in [`Trajectory::clamp_events`].

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::network::Xi;
use crate::rng;
use crate::statics::{lambdas_from_means, relu_q_pm, relu_q_pm_with_grad, risk_from_means, ReluAtom, Sign, StaticsContext};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleKind {
    Radial1D,
    ReluABRR,
    ThreeLayerRR,
}

impl EnsembleKind {
    pub fn width(self) -> usize {
        match self {
            EnsembleKind::Radial1D => 1,
            EnsembleKind::ReluABRR => 4,
            EnsembleKind::ThreeLayerRR => 2,
        }
    }

    /// Which coordinates are radii (and therefore clamped at 0).
    pub fn radial_mask(self) -> &'static [bool] {
        match self {
            EnsembleKind::Radial1D => &[true],
            EnsembleKind::ReluABRR => &[false, false, true, true],
            EnsembleKind::ThreeLayerRR => &[true, true],
        }
    }

    pub fn column_names(self) -> &'static [&'static str] {
        match self {
            EnsembleKind::Radial1D => &["r"],
            EnsembleKind::ReluABRR => &["a", "b", "r1", "r2"],
            EnsembleKind::ThreeLayerRR => &["r1", "r2"],
        }
    }
}

/// `J` particles stored row-major, `width()` coordinates each.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParticleEnsemble {
    pub kind: EnsembleKind,
    pub coords: Vec<f64>,
    pub time: f64,
}

impl ParticleEnsemble {
    pub fn new(kind: EnsembleKind, coords: Vec<f64>) -> Result<Self> {
        let w = kind.width();
        if coords.is_empty() || !coords.len().is_multiple_of(w) {
            return Err(Error::invalid(format!(
                "ensemble needs a positive multiple of {w} coordinates, got {}",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("ensemble coordinates must be finite"));
        }
        let mask = kind.radial_mask();
        if coords.chunks(w).any(|p| p.iter().zip(mask).any(|(c, &radial)| radial && *c < 0.0)) {
            return Err(Error::invalid("radial coordinates must be >= 0"));
        }
        Ok(Self { kind, coords, time: 0.0 })
    }

    pub fn radial(radii: &[f64]) -> Result<Self> {
        Self::new(EnsembleKind::Radial1D, radii.to_vec())
    }

    pub fn relu(atoms: &[ReluAtom]) -> Result<Self> {
        Self::new(
            EnsembleKind::ReluABRR,
            atoms.iter().flat_map(|p| [p.a, p.b, p.r1, p.r2]).collect(),
        )
    }

    pub fn three_layer(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(EnsembleKind::ThreeLayerRR, pairs.iter().flat_map(|&(a, b)| [a, b]).collect())
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.kind.width()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn particle(&self, i: usize) -> &[f64] {
        let w = self.kind.width();
        &self.coords[i * w..(i + 1) * w]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        self.coords.chunks(self.kind.width()).map(|p| p[c]).collect()
    }

    pub fn relu_atoms(&self) -> Vec<ReluAtom> {
        self.coords
            .chunks(4)
            .map(|p| ReluAtom {
                a: p[0],
                b: p[1],
                r1: p[2],
                r2: p[3],
            })
            .collect()
    }

    /// Reorders particles; `perm[i]` is the source index of the new particle `i`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let w = self.kind.width();
        let coords = perm.iter().flat_map(|&i| self.coords[i * w..(i + 1) * w].iter().copied()).collect();
        Self {
            kind: self.kind,
            coords,
            time: self.time,
        }
    }
}

/// The risk `R̄∞,J` of one particle kind.
#[derive(Clone, Debug)]
pub enum Landscape {
    /// Two-layer network with `σ = ctx.activation2`.
    PiecewiseTwoLayer(StaticsContext),
    ReluTwoLayer { delta: f64 },
    ThreeLayerJoint(StaticsContext),
}

/// Per-particle contributions to `m±` and their coordinate gradients.
#[derive(Clone, Copy, Debug, Default)]
struct Terms {
    plus: f64,
    minus: f64,
    d_plus: [f64; 4],
    d_minus: [f64; 4],
}

impl Landscape {
    pub fn kind(&self) -> EnsembleKind {
        match self {
            Landscape::PiecewiseTwoLayer(_) => EnsembleKind::Radial1D,
            Landscape::ReluTwoLayer { .. } => EnsembleKind::ReluABRR,
            Landscape::ThreeLayerJoint(_) => EnsembleKind::ThreeLayerRR,
        }
    }

    pub fn delta(&self) -> f64 {
        match self {
            Landscape::PiecewiseTwoLayer(ctx) | Landscape::ThreeLayerJoint(ctx) => ctx.delta,
            Landscape::ReluTwoLayer { delta } => *delta,
        }
    }

    fn check(&self, ens: &ParticleEnsemble) -> Result<()> {
        if ens.kind != self.kind() {
            return Err(Error::invalid(format!(
                "ensemble kind {:?} does not match landscape kind {:?}",
                ens.kind,
                self.kind()
            )));
        }
        if ens.is_empty() {
            return Err(Error::invalid("ensemble must be nonempty"));
        }
        Ok(())
    }

    /// `(contribution to m₊, contribution to m₋)` of one particle.
    pub fn particle_terms(&self, p: &[f64]) -> (f64, f64) {
        match self {
            Landscape::PiecewiseTwoLayer(ctx) => (ctx.q_single(p[0], Sign::Plus), ctx.q_single(p[0], Sign::Minus)),
            Landscape::ReluTwoLayer { delta } => (
                p[0] * relu_q_pm(*delta, p[2], p[3], p[1], Sign::Plus),
                p[0] * relu_q_pm(*delta, p[2], p[3], p[1], Sign::Minus),
            ),
            Landscape::ThreeLayerJoint(ctx) => (ctx.q_pm(p[0], p[1], Sign::Plus), ctx.q_pm(p[0], p[1], Sign::Minus)),
        }
    }

    fn terms_with_grad(&self, p: &[f64]) -> Terms {
        let mut t = Terms::default();
        match self {
            Landscape::PiecewiseTwoLayer(ctx) => {
                let [qp, dp] = ctx.q_single_with_grad(p[0], Sign::Plus);
                let [qm, dm] = ctx.q_single_with_grad(p[0], Sign::Minus);
                t.plus = qp;
                t.minus = qm;
                t.d_plus[0] = dp;
                t.d_minus[0] = dm;
            }
            Landscape::ReluTwoLayer { delta } => {
                let a = p[0];
                for (sign, val, grad) in [
                    (Sign::Plus, &mut t.plus, &mut t.d_plus),
                    (Sign::Minus, &mut t.minus, &mut t.d_minus),
                ] {
                    let [q, dr1, dr2, db] = relu_q_pm_with_grad(*delta, p[2], p[3], p[1], sign);
                    *val = a * q;
                    *grad = [q, a * db, a * dr1, a * dr2];
                }
            }
            Landscape::ThreeLayerJoint(ctx) => {
                let [qp, dp1, dp2] = ctx.q_pm_with_grad(p[0], p[1], Sign::Plus);
                let [qm, dm1, dm2] = ctx.q_pm_with_grad(p[0], p[1], Sign::Minus);
                t.plus = qp;
                t.minus = qm;
                t.d_plus[..2].copy_from_slice(&[dp1, dp2]);
                t.d_minus[..2].copy_from_slice(&[dm1, dm2]);
            }
        }
        t
    }

    fn all_terms(&self, ens: &ParticleEnsemble) -> Vec<Terms> {
        let w = ens.kind.width();
        if ens.len() >= 32 {
            ens.coords.par_chunks(w).map(|p| self.terms_with_grad(p)).collect()
        } else {
            ens.coords.chunks(w).map(|p| self.terms_with_grad(p)).collect()
        }
    }

    /// `(m₊, m₋)`.
    pub fn means(&self, ens: &ParticleEnsemble) -> Result<(f64, f64)> {
        self.check(ens)?;
        let j = ens.len() as f64;
        let terms: Vec<(f64, f64)> = ens.coords.chunks(ens.kind.width()).map(|p| self.particle_terms(p)).collect();
        let sp = order_free_sum(terms.iter().map(|t| t.0));
        let sm = order_free_sum(terms.iter().map(|t| t.1));
        Ok((sp / j, sm / j))
    }

    pub fn risk(&self, ens: &ParticleEnsemble) -> Result<f64> {
        let (mp, mm) = self.means(ens)?;
        Ok(risk_from_means(mp, mm))
    }

    pub fn lambdas(&self, ens: &ParticleEnsemble) -> Result<(f64, f64)> {
        let (mp, mm) = self.means(ens)?;
        Ok(lambdas_from_means(mp, mm))
    }

    /// `∇R̄∞,J`, analytic, laid out like `ens.coords`. Also returns `(m₊, m₋)`.
    pub fn gradient_with_means(&self, ens: &ParticleEnsemble) -> Result<(Vec<f64>, (f64, f64))> {
        self.check(ens)?;
        let terms = self.all_terms(ens);
        let j = ens.len() as f64;
        let mp = order_free_sum(terms.iter().map(|t| t.plus)) / j;
        let mm = order_free_sum(terms.iter().map(|t| t.minus)) / j;
        let cp = -(1.0 - mp) / j;
        let cm = (1.0 + mm) / j;
        let w = ens.kind.width();
        let mut grad = Vec::with_capacity(ens.coords.len());
        for t in &terms {
            for c in 0..w {
                grad.push(cp * t.d_plus[c] + cm * t.d_minus[c]);
            }
        }
        Ok((grad, (mp, mm)))
    }

    pub fn gradient(&self, ens: &ParticleEnsemble) -> Result<Vec<f64>> {
        Ok(self.gradient_with_means(ens)?.0)
    }

    /// Central finite differences of `R̄∞,J` with step `h`. Only the moved
    /// particle's contribution to `m±` is recomputed.
    pub fn gradient_fd(&self, ens: &ParticleEnsemble, h: f64) -> Result<(Vec<f64>, (f64, f64))> {
        self.check(ens)?;
        let w = ens.kind.width();
        let j = ens.len() as f64;
        let base: Vec<(f64, f64)> = ens.coords.chunks(w).map(|p| self.particle_terms(p)).collect();
        let mp = order_free_sum(base.iter().map(|t| t.0)) / j;
        let mm = order_free_sum(base.iter().map(|t| t.1)) / j;
        let per_particle = |(i, p): (usize, &[f64])| -> Vec<f64> {
            let mut buf = p.to_vec();
            let (bp, bm) = base[i];
            (0..w)
                .map(|c| {
                    let x = p[c];
                    buf[c] = x + h;
                    let (up, um) = self.particle_terms(&buf);
                    buf[c] = x - h;
                    let (dp, dm) = self.particle_terms(&buf);
                    buf[c] = x;
                    let r_up = risk_from_means(mp + (up - bp) / j, mm + (um - bm) / j);
                    let r_dn = risk_from_means(mp + (dp - bp) / j, mm + (dm - bm) / j);
                    (r_up - r_dn) / (2.0 * h)
                })
                .collect()
        };
        let grad: Vec<f64> = if ens.len() >= 32 {
            ens.coords.par_chunks(w).enumerate().flat_map_iter(per_particle).collect()
        } else {
            ens.coords.chunks(w).enumerate().flat_map(per_particle).collect()
        };
        Ok((grad, (mp, mm)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GradMode {
    #[default]
    Analytic,
    FiniteDifference { h: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    Euler,
    /// Explicit trapezoid; only for step-size studies.
    Heun,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub steps: usize,
    #[serde(default)]
    pub xi: Xi,
    #[serde(default)]
    pub grad_mode: GradMode,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    #[serde(default)]
    pub scheme: Scheme,
    /// Steps at which the full ensemble is kept.
    #[serde(default)]
    pub checkpoints: Vec<usize>,
}

fn default_record_every() -> usize {
    100
}

impl IntegratorConfig {
    pub fn new(dt: f64, steps: usize) -> Self {
        Self {
            dt,
            steps,
            xi: Xi::default(),
            grad_mode: GradMode::Analytic,
            record_every: default_record_every(),
            scheme: Scheme::Euler,
            checkpoints: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::invalid(format!("dt must be > 0, got {}", self.dt)));
        }
        if let GradMode::FiniteDifference { h } = self.grad_mode {
            if !(1e-8..=1e-4).contains(&h) {
                return Err(Error::invalid(format!("finite-difference h must lie in [1e-8, 1e-4], got {h}")));
            }
        }
        if self.record_every == 0 {
            return Err(Error::invalid("record_every must be >= 1"));
        }
        self.xi.validate()
    }
}

pub const QUANTILE_LEVELS: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 0.9];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub step: usize,
    pub t: f64,
    pub risk: f64,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub column_means: Vec<f64>,
    /// Per column, the values at [`QUANTILE_LEVELS`].
    pub column_quantiles: Vec<[f64; 5]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub records: Vec<TrajectoryRecord>,
    pub checkpoints: Vec<(usize, ParticleEnsemble)>,
    pub final_state: ParticleEnsemble,
    pub steps_taken: usize,
    pub clamp_events: usize,
    /// Largest single-step increase of the risk (negative when it always fell).
    pub max_step_increase: f64,
    pub initial_risk: f64,
    pub final_risk: f64,
    /// True when a deadline stopped the run before `steps`.
    pub interrupted: bool,
}

/// Sum that does not depend on the order of the terms: they are added in
/// sorted order, so permuting the particles leaves every result bit-identical.
fn order_free_sum(terms: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = terms.collect();
    v.sort_unstable_by(f64::total_cmp);
    v.iter().sum()
}

/// Sorted-sample quantile with linear interpolation.
pub fn quantile_sorted(sorted: &[f64], level: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = level.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

fn make_record(step: usize, ens: &ParticleEnsemble, means: (f64, f64)) -> TrajectoryRecord {
    let (lp, lm) = lambdas_from_means(means.0, means.1);
    let w = ens.kind.width();
    let mut column_means = Vec::with_capacity(w);
    let mut column_quantiles = Vec::with_capacity(w);
    for c in 0..w {
        let mut col = ens.column(c);
        column_means.push(order_free_sum(col.iter().copied()) / col.len() as f64);
        col.sort_by(|a, b| a.total_cmp(b));
        column_quantiles.push(QUANTILE_LEVELS.map(|l| quantile_sorted(&col, l)));
    }
    TrajectoryRecord {
        step,
        t: ens.time,
        risk: risk_from_means(means.0, means.1),
        lambda_plus: lp,
        lambda_minus: lm,
        column_means,
        column_quantiles,
    }
}

fn check_finite(grad: &[f64], width: usize, step: usize) -> Result<()> {
    if let Some(pos) = grad.iter().position(|g| !g.is_finite()) {
        return Err(Error::NonFiniteGradient {
            index: pos / width,
            step,
        });
    }
    Ok(())
}

fn clamp_radial(coords: &mut [f64], kind: EnsembleKind) -> usize {
    let mask = kind.radial_mask();
    let mut n = 0;
    for p in coords.chunks_mut(kind.width()) {
        for (c, &radial) in p.iter_mut().zip(mask) {
            if radial && *c < 0.0 {
                *c = 0.0;
                n += 1;
            }
        }
    }
    n
}

/// Stops a run early once `deadline` has passed.
#[derive(Clone, Copy, Debug, Default)]
pub struct RunControl {
    pub deadline: Option<Instant>,
}

impl Landscape {
    fn grad_for(&self, ens: &ParticleEnsemble, mode: GradMode) -> Result<(Vec<f64>, (f64, f64))> {
        match mode {
            GradMode::Analytic => self.gradient_with_means(ens),
            GradMode::FiniteDifference { h } => self.gradient_fd(ens, h),
        }
    }
}

pub fn evolve(init: &ParticleEnsemble, landscape: &Landscape, cfg: &IntegratorConfig) -> Result<Trajectory> {
    evolve_with_control(init, landscape, cfg, RunControl::default())
}

/// Integrates `dr/dt = -J ξ(t) ∇R̄∞,J(r)` for `cfg.steps` steps of size `cfg.dt`.
pub fn evolve_with_control(
    init: &ParticleEnsemble,
    landscape: &Landscape,
    cfg: &IntegratorConfig,
    control: RunControl,
) -> Result<Trajectory> {
    cfg.validate()?;
    landscape.check(init)?;
    let kind = init.kind;
    let width = kind.width();
    let j = init.len() as f64;
    let mut ens = init.clone();
    let mut records = Vec::new();
    let mut checkpoints = Vec::new();
    let mut clamp_events = 0;
    let mut max_step_increase = f64::NEG_INFINITY;
    let mut interrupted = false;
    let mut steps_taken = 0;

    let (mut grad, mut means) = landscape.grad_for(&ens, cfg.grad_mode)?;
    let initial_risk = risk_from_means(means.0, means.1);
    let mut risk = initial_risk;
    for step in 0..cfg.steps {
        if step % cfg.record_every == 0 {
            records.push(make_record(step, &ens, means));
        }
        if cfg.checkpoints.contains(&step) {
            checkpoints.push((step, ens.clone()));
        }
        if let Some(deadline) = control.deadline {
            if Instant::now() >= deadline {
                interrupted = true;
                break;
            }
        }
        check_finite(&grad, width, step)?;
        let xi = cfg.xi.eval_stepped(ens.time, cfg.dt);
        let scale = j * xi * cfg.dt;
        match cfg.scheme {
            Scheme::Euler => {
                for (c, g) in ens.coords.iter_mut().zip(&grad) {
                    *c -= scale * g;
                }
            }
            Scheme::Heun => {
                let mut pred = ens.clone();
                for (c, g) in pred.coords.iter_mut().zip(&grad) {
                    *c -= scale * g;
                }
                clamp_radial(&mut pred.coords, kind);
                pred.time += cfg.dt;
                let (g2, _) = landscape.grad_for(&pred, cfg.grad_mode)?;
                check_finite(&g2, width, step)?;
                let xi2 = cfg.xi.eval_stepped(pred.time, cfg.dt);
                let scale2 = j * xi2 * cfg.dt;
                for ((c, g1), g2) in ens.coords.iter_mut().zip(&grad).zip(&g2) {
                    *c -= 0.5 * (scale * g1 + scale2 * g2);
                }
            }
        }
        clamp_events += clamp_radial(&mut ens.coords, kind);
        ens.time = (step + 1) as f64 * cfg.dt + init.time;
        steps_taken = step + 1;
        (grad, means) = landscape.grad_for(&ens, cfg.grad_mode)?;
        let next = risk_from_means(means.0, means.1);
        if !next.is_finite() {
            return Err(Error::NonFiniteGradient { index: 0, step });
        }
        max_step_increase = max_step_increase.max(next - risk);
        risk = next;
    }
    if steps_taken % cfg.record_every == 0 || records.last().map(|r| r.step) != Some(steps_taken) {
        records.push(make_record(steps_taken, &ens, means));
    }
    if cfg.checkpoints.contains(&steps_taken) && checkpoints.last().map(|c| c.0) != Some(steps_taken) {
        checkpoints.push((steps_taken, ens.clone()));
    }
    Ok(Trajectory {
        records,
        checkpoints,
        final_state: ens,
        steps_taken,
        clamp_events,
        max_step_increase,
        initial_risk,
        final_risk: risk,
        interrupted,
    })
}

fn require_kind(ens: &ParticleEnsemble, kind: EnsembleKind) -> Result<()> {
    if ens.kind != kind {
        return Err(Error::invalid(format!("expected a {kind:?} ensemble, got {:?}", ens.kind)));
    }
    Ok(())
}

pub fn evolve_two_layer_piecewise(
    ens: &ParticleEnsemble,
    ctx: &StaticsContext,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    require_kind(ens, EnsembleKind::Radial1D)?;
    evolve(ens, &Landscape::PiecewiseTwoLayer(ctx.clone()), cfg)
}

pub fn evolve_two_layer_relu(ens: &ParticleEnsemble, delta: f64, cfg: &IntegratorConfig) -> Result<Trajectory> {
    require_kind(ens, EnsembleKind::ReluABRR)?;
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::invalid(format!("delta must lie in [0, 1], got {delta}")));
    }
    evolve(ens, &Landscape::ReluTwoLayer { delta }, cfg)
}

pub fn evolve_three_layer(ens: &ParticleEnsemble, ctx: &StaticsContext, cfg: &IntegratorConfig) -> Result<Trajectory> {
    require_kind(ens, EnsembleKind::ThreeLayerRR)?;
    evolve(ens, &Landscape::ThreeLayerJoint(ctx.clone()), cfg)
}

/// `∇R̄∞,J` for any kind; `ctx` is ignored for the ReLU kind, which takes
/// `ctx.delta` as its `Δ`.
pub fn gradient_risk_j(ens: &ParticleEnsemble, ctx: &StaticsContext) -> Result<Vec<f64>> {
    let landscape = match ens.kind {
        EnsembleKind::Radial1D => Landscape::PiecewiseTwoLayer(ctx.clone()),
        EnsembleKind::ReluABRR => Landscape::ReluTwoLayer { delta: ctx.delta },
        EnsembleKind::ThreeLayerRR => Landscape::ThreeLayerJoint(ctx.clone()),
    };
    landscape.gradient(ens)
}

/// Norm of a `N(0, (Δ²/dim) I_dim)` draw.
fn gaussian_norm(rng: &mut rng::StreamRng, delta: f64, dim: usize) -> f64 {
    let sd = delta / (dim as f64).sqrt();
    (0..dim).map(|_| (sd * rng::normal(rng)).powi(2)).sum::<f64>().sqrt()
}

fn check_init(j: usize, delta: f64, dim: usize) -> Result<()> {
    if j == 0 {
        return Err(Error::invalid("J must be >= 1"));
    }
    if dim == 0 {
        return Err(Error::invalid("dimension must be >= 1"));
    }
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(Error::invalid(format!("delta must be >= 0, got {delta}")));
    }
    Ok(())
}

/// `J` radii drawn as `‖N(0, (Δ²/d) I_d)‖₂`.
pub fn init_radial_gaussian(j: usize, delta: f64, dim: usize, seed: u64) -> Result<ParticleEnsemble> {
    check_init(j, delta, dim)?;
    let mut rng = rng::from_seed(seed);
    ParticleEnsemble::radial(&(0..j).map(|_| gaussian_norm(&mut rng, delta, dim)).collect::<Vec<_>>())
}

/// `J` radii at the mid-quantiles `(i + ½)/J` of `(Δ/√d) χ_d`, the law of
/// `‖N(0, (Δ²/d) I_d)‖₂`.
pub fn init_radial_quantiles(j: usize, delta: f64, dim: usize) -> Result<ParticleEnsemble> {
    check_init(j, delta, dim)?;
    let chi2 = ChiSquared::new(dim as f64).map_err(|e| Error::invalid(e.to_string()))?;
    let scale = delta / (dim as f64).sqrt();
    let radii: Vec<f64> = (0..j)
        .map(|i| scale * chi2.inverse_cdf((i as f64 + 0.5) / j as f64).sqrt())
        .collect();
    ParticleEnsemble::radial(&radii)
}

/// ReLU particles with `a = 1`, `b = 1` and the weight vector split into the
/// first `s0` coordinates and the remaining `d - s0`, each block drawn from
/// `N(0, Δ²/d)` entrywise.
pub fn init_relu(j: usize, delta: f64, dim: usize, s0: usize, seed: u64) -> Result<ParticleEnsemble> {
    check_init(j, delta, dim)?;
    if s0 > dim {
        return Err(Error::invalid(format!("s0 = {s0} exceeds d = {dim}")));
    }
    let mut rng = rng::from_seed(seed);
    let sd = delta / (dim as f64).sqrt();
    let mut block = |len: usize| -> f64 { (0..len).map(|_| (sd * rng::normal(&mut rng)).powi(2)).sum::<f64>().sqrt() };
    let atoms: Vec<ReluAtom> = (0..j)
        .map(|_| {
            let r1 = block(s0);
            let r2 = block(dim - s0);
            ReluAtom { a: 1.0, b: 1.0, r1, r2 }
        })
        .collect();
    ParticleEnsemble::relu(&atoms)
}

/// Three-layer particles with both radii drawn independently as
/// `‖N(0, (Δ²/d) I_d)‖₂`.
pub fn init_three_layer(j: usize, delta: f64, dim: usize, seed: u64) -> Result<ParticleEnsemble> {
    check_init(j, delta, dim)?;
    let mut r1 = rng::substream(seed, 1);
    let mut r2 = rng::substream(seed, 2);
    let pairs: Vec<(f64, f64)> = (0..j)
        .map(|_| (gaussian_norm(&mut r1, delta, dim), gaussian_norm(&mut r2, delta, dim)))
        .collect();
    ParticleEnsemble::three_layer(&pairs)
}
