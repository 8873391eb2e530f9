//! SGD against the matched particle PDE at aligned times `t = kε`.

use super::par_replicates;
use crate::activation::ActivationKind;
use crate::data::{GaussianMixtureSpec, IsotropicStream};
use crate::error::{Error, Result};
use crate::harness::config::{PdeKindName, SgdVsPdeParams};
use crate::harness::fit::mean;
use crate::harness::record::{Budget, RunWriter};
use crate::harness::svg;
use crate::harness::table::Table;
use crate::network::{sgd_step_in_place, GradientMode, NetworkParams, StepSchedule, Trainable, UnitParams};
use crate::pde::{self, IntegratorConfig, Landscape, ParticleEnsemble, RunControl};
use crate::rng;
use crate::statics::StaticsContext;
use crate::stats::distance::{wasserstein2_1d, EmpiricalMeasure1D};

/// Two-layer network whose units are `σ(⟨w, x⟩)` with `a = 1`, `b = 0`
/// frozen and `w ~ N(0, (Δ²/d) I)`: the network the radial PDE describes.
pub struct RadialNetworkInit;

impl RadialNetworkInit {
    pub fn build(n: usize, dim: usize, delta: f64, activation: ActivationKind, seed: u64) -> Result<NetworkParams> {
        if n == 0 || dim == 0 {
            return Err(Error::invalid("width and dimension must be positive"));
        }
        let mut r = rng::substream(seed, 1);
        let sd = delta / (dim as f64).sqrt();
        let units = (0..n)
            .map(|_| UnitParams {
                a: 1.0,
                b: 0.0,
                w: rng::normal_vec(&mut r, dim).into_iter().map(|g| g * sd).collect(),
            })
            .collect();
        let mut p = NetworkParams::two_layer(units, activation);
        p.trainable = Trainable::weights_only();
        Ok(p)
    }

    /// Same, with prescribed norms: unit `i` gets norm `radii[i]` along a
    /// uniformly random direction.
    pub fn with_radii(radii: &[f64], dim: usize, activation: ActivationKind, seed: u64) -> Result<NetworkParams> {
        if radii.is_empty() || dim == 0 {
            return Err(Error::invalid("need at least one radius and a positive dimension"));
        }
        let mut r = rng::substream(seed, 1);
        let units = radii
            .iter()
            .map(|&rad| UnitParams {
                a: 1.0,
                b: 0.0,
                w: random_direction(&mut r, dim, rad),
            })
            .collect();
        let mut p = NetworkParams::two_layer(units, activation);
        p.trainable = Trainable::weights_only();
        Ok(p)
    }
}

pub(crate) fn random_direction(r: &mut rng::StreamRng, dim: usize, norm: f64) -> Vec<f64> {
    loop {
        let g = rng::normal_vec(r, dim);
        let len = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if len > 0.0 {
            return g.into_iter().map(|v| v * norm / len).collect();
        }
    }
}

/// `(a, b, r1, r2)` of each unit; `r1` is the norm of the first `s0`
/// coordinates (all of them when `s0` is `None`).
fn unit_coords(params: &NetworkParams, s0: Option<usize>) -> [Vec<f64>; 4] {
    let mut out: [Vec<f64>; 4] = Default::default();
    for u in &params.layer1 {
        let split = s0.unwrap_or(u.w.len()).min(u.w.len());
        let r1 = u.w[..split].iter().map(|v| v * v).sum::<f64>().sqrt();
        let r2 = u.w[split..].iter().map(|v| v * v).sum::<f64>().sqrt();
        out[0].push(u.a);
        out[1].push(u.b);
        out[2].push(r1);
        out[3].push(r2);
    }
    out
}

fn ensemble_coords(ens: &ParticleEnsemble) -> [Vec<f64>; 4] {
    match ens.kind {
        pde::EnsembleKind::ReluABRR => [ens.column(0), ens.column(1), ens.column(2), ens.column(3)],
        _ => {
            let r = ens.column(0);
            [vec![1.0; r.len()], vec![0.0; r.len()], r.clone(), vec![0.0; r.len()]]
        }
    }
}

const COORDS: [&str; 4] = ["a", "b", "r1", "r2"];

struct DeltaOutcome {
    evolution: Vec<(f64, &'static str, [f64; 4])>,
    w2: Vec<(f64, [f64; 4])>,
    interrupted: bool,
}

fn run_one_delta(p: &SgdVsPdeParams, delta: f64, seed: u64, budget: Budget) -> Result<DeltaOutcome> {
    let relu = p.pde_kind == PdeKindName::Relu2;
    let times: Vec<f64> = (0..=p.checkpoints).map(|c| p.t_end * c as f64 / p.checkpoints as f64).collect();

    // PDE side.
    let (ens, landscape) = if relu {
        (
            pde::init_relu(p.j, delta, p.dim, p.s0, rng::derive_seed(seed, 11))?,
            Landscape::ReluTwoLayer { delta },
        )
    } else {
        (
            pde::init_radial_gaussian(p.j, delta, p.dim, rng::derive_seed(seed, 11))?,
            Landscape::PiecewiseTwoLayer(StaticsContext::two_layer(delta, p.activation.clone())?),
        )
    };
    let pde_steps: Vec<usize> = times.iter().map(|t| (t / p.pde_dt).round() as usize).collect();
    let mut icfg = IntegratorConfig::new(p.pde_dt, *pde_steps.last().unwrap_or(&0));
    icfg.xi = p.xi;
    icfg.record_every = icfg.steps.max(1);
    icfg.checkpoints = pde_steps.clone();
    let traj = pde::evolve_with_control(&ens, &landscape, &icfg, RunControl { deadline: budget.deadline() })
        .map_err(|e| e.in_stage(format!("pde (delta = {delta})")))?;

    // SGD side.
    let (mut net, spec) = if relu {
        (
            NetworkParams::init_gaussian(
                p.dim,
                &[p.n],
                delta,
                ActivationKind::Relu,
                ActivationKind::Relu,
                rng::derive_seed(seed, 12),
            )?,
            GaussianMixtureSpec::isotropic(delta, p.dim).with_informative_dims(p.s0),
        )
    } else {
        (
            RadialNetworkInit::build(p.n, p.dim, delta, p.activation.clone(), rng::derive_seed(seed, 12))?,
            GaussianMixtureSpec::isotropic(delta, p.dim),
        )
    };
    let schedule = StepSchedule {
        epsilon: p.epsilon,
        xi: p.xi,
    };
    let sgd_steps: Vec<usize> = times.iter().map(|t| (t / p.epsilon).round() as usize).collect();
    let mut stream = IsotropicStream::new(&spec, rng::derive_seed(seed, 13))?;
    let s0 = relu.then_some(p.s0);

    let mut out = DeltaOutcome {
        evolution: Vec::new(),
        w2: Vec::new(),
        interrupted: traj.interrupted,
    };
    let mut k = 0usize;
    for (c, &t) in times.iter().enumerate() {
        while k < sgd_steps[c] {
            let sample = stream.draw();
            sgd_step_in_place(&mut net, &sample, k, &schedule, GradientMode::PaperLiteral)
                .map_err(|e| e.in_stage(format!("sgd (delta = {delta})")))?;
            k += 1;
            if k.is_multiple_of(1024) && budget.expired() {
                out.interrupted = true;
                return Ok(out);
            }
        }
        let Some((_, state)) = traj.checkpoints.iter().find(|(s, _)| *s == pde_steps[c]) else {
            out.interrupted = true;
            return Ok(out);
        };
        let sgd = unit_coords(&net, s0);
        let pdec = ensemble_coords(state);
        if sgd.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteGradient { index: 0, step: k }.in_stage(format!("sgd (delta = {delta})")));
        }
        out.evolution.push((t, "sgd", std::array::from_fn(|i| mean(&sgd[i]))));
        out.evolution.push((t, "pde", std::array::from_fn(|i| mean(&pdec[i]))));
        let mut w2 = [0.0; 4];
        for i in 0..4 {
            w2[i] = wasserstein2_1d(&EmpiricalMeasure1D::new(&sgd[i])?, &EmpiricalMeasure1D::new(&pdec[i])?);
        }
        out.w2.push((t, w2));
    }
    Ok(out)
}

pub fn run_sgd_vs_pde(p: &SgdVsPdeParams, seed: u64, w: &mut RunWriter, budget: Budget) -> Result<()> {
    let (outcomes, skipped) = par_replicates(p.deltas.len(), budget, |i| {
        run_one_delta(p, p.deltas[i], rng::derive_seed(seed, i as u64), budget)
    })?;
    w.interrupted |= skipped || outcomes.iter().any(|o| o.interrupted);

    let mut evo = Table::new(&["delta", "t", "source", "a", "b", "r1", "r2"]);
    let mut w2t = Table::new(&["delta", "t", "w2_a", "w2_b", "w2_r1", "w2_r2"]);
    for (o, &delta) in outcomes.iter().zip(&p.deltas) {
        for (t, src, m) in &o.evolution {
            evo.push(vec![delta.into(), (*t).into(), (*src).into(), m[0].into(), m[1].into(), m[2].into(), m[3].into()]);
        }
        for (t, d) in &o.w2 {
            w2t.push(vec![delta.into(), (*t).into(), d[0].into(), d[1].into(), d[2].into(), d[3].into()]);
        }
        if let Some((_, last)) = o.w2.last() {
            for (name, v) in COORDS.iter().zip(last) {
                w.metric(&format!("final_w2_{name}[delta={delta}]"), *v);
            }
        }
        if let Some((_, first)) = o.w2.first() {
            w.metric(&format!("initial_w2_r1[delta={delta}]"), first[2]);
        }
    }
    w.note("pde_kind", format!("{:?}", p.pde_kind).to_lowercase());
    w.note("time_alignment", "t = k * epsilon");
    w.write_table("evolution.csv", &evo)?;
    w.write_table("w2.csv", &w2t)?;
    w.write_bytes("evolution.svg", svg::evolution_panels(&evo).as_bytes())?;
    Ok(())
}
