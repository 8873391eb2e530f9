//! PDE → network → PDE pipeline producing the reference weight densities.
//!
//! 1. Radii `r_i(0) = ‖Z_i‖` with `Z_i ~ N(0, Σ₂)`, `Σ₂` equicorrelated with
//!    diagonal `Δ²/d`, are evolved by the radial particle flow.
//! 2. The evolved radii become the norms of the output-layer units of two
//!    networks: one hidden layer (A) and two hidden layers (B).
//! 3. Both are trained one pass on the correlated law and the output-layer
//!    norms are extracted.
//! 4. The extracted norms are evolved by the same flow.

use super::sgd_vs_pde::{random_direction, RadialNetworkInit};
use crate::data::{CorrelatedStream, GaussianMixtureSpec};
use crate::error::{Error, Result};
use crate::harness::config::TheoreticalParams;
use crate::harness::fit::{count_modes, gaussian_kde, Histogram};
use crate::harness::record::{Budget, RunWriter};
use crate::harness::svg::{self, Panel};
use crate::harness::table::Table;
use crate::network::{train_one_pass, GradientMode, NetworkParams, StepSchedule};
use crate::pde::{self, IntegratorConfig, Landscape, ParticleEnsemble, RunControl};
use crate::rng;
use crate::statics::StaticsContext;
use crate::stats::distance::{kl_and_l1, EmpiricalMeasure1D};

const KDE_POINTS: usize = 512;

/// Norms of `j` draws from `N(0, Σ)` with `Σ_ii = var`, `Σ_ij = cov`
/// (`0 <= cov < var`), using `Z = √(var - cov) G + √cov g 1`.
fn equicorrelated_norms(j: usize, dim: usize, var: f64, cov: f64, seed: u64) -> Vec<f64> {
    let mut r = rng::from_seed(seed);
    let (a, b) = ((var - cov).max(0.0).sqrt(), cov.sqrt());
    (0..j)
        .map(|_| {
            let common = b * rng::normal(&mut r);
            (0..dim)
                .map(|_| (a * rng::normal(&mut r) + common).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .collect()
}

fn evolve_radii(radii: &[f64], ctx: &StaticsContext, p: &TheoreticalParams, budget: Budget, stage: &str) -> Result<Option<Vec<f64>>> {
    let ens = ParticleEnsemble::radial(radii)?;
    let mut icfg = IntegratorConfig::new(p.pde_dt, p.pde_steps);
    icfg.record_every = p.pde_steps.max(1);
    let traj = pde::evolve_with_control(
        &ens,
        &Landscape::PiecewiseTwoLayer(ctx.clone()),
        &icfg,
        RunControl { deadline: budget.deadline() },
    )
    .map_err(|e| e.in_stage(stage))?;
    if traj.interrupted {
        return Ok(None);
    }
    Ok(Some(traj.final_state.column(0)))
}

fn seeded_radii(atoms: &[f64], count: usize) -> Vec<f64> {
    (0..count).map(|i| atoms[i % atoms.len()]).collect()
}

fn train_a(p: &TheoreticalParams, atoms: &[f64], seed: u64) -> Result<Vec<f64>> {
    let net = RadialNetworkInit::with_radii(&seeded_radii(atoms, p.hidden), p.dim, p.activation.clone(), rng::derive_seed(seed, 1))?;
    let spec = GaussianMixtureSpec::correlated(p.delta, p.dim, p.off_diag);
    let stream = CorrelatedStream::new(&spec, rng::derive_seed(seed, 2))?.take(p.n_samples).map(Ok);
    let trace = train_one_pass(&net, stream, &StepSchedule::constant(p.epsilon), GradientMode::PaperLiteral, 0)?;
    Ok(trace.final_params.layer1.iter().map(|u| u.norm()).collect())
}

fn train_b(p: &TheoreticalParams, atoms: &[f64], seed: u64) -> Result<Vec<f64>> {
    let mut net = NetworkParams::init_gaussian(
        p.dim,
        &[p.hidden, p.hidden],
        p.delta,
        p.activation.clone(),
        p.activation.clone(),
        rng::derive_seed(seed, 3),
    )?;
    let mut r = rng::substream(seed, 4);
    for (u, rad) in net.layer2.iter_mut().zip(seeded_radii(atoms, p.hidden)) {
        u.w = random_direction(&mut r, p.hidden, rad);
    }
    let spec = GaussianMixtureSpec::correlated(p.delta, p.dim, p.off_diag);
    let stream = CorrelatedStream::new(&spec, rng::derive_seed(seed, 5))?.take(p.n_samples).map(Ok);
    let trace = train_one_pass(&net, stream, &StepSchedule::constant(p.epsilon), GradientMode::PaperLiteral, 0)?;
    Ok(trace.final_params.layer2.iter().map(|u| u.norm()).collect())
}

pub fn run_theoretical_weights(p: &TheoreticalParams, seed: u64, w: &mut RunWriter, budget: Budget) -> Result<()> {
    let ctx = StaticsContext::two_layer(p.delta, p.activation.clone())?;
    let init = equicorrelated_norms(p.j, p.dim, p.delta * p.delta / p.dim as f64, p.off_diag, rng::derive_seed(seed, 10));
    let mut stages: Vec<(&str, Vec<f64>)> = vec![("initial", init.clone())];

    let finish = |w: &mut RunWriter, stages: &[(&str, Vec<f64>)]| -> Result<()> {
        let mut wt = Table::new(&["stage", "index", "r"]);
        let mut dt = Table::new(&["stage", "bin_lo", "bin_hi", "density"]);
        let mut kt = Table::new(&["stage", "r", "density"]);
        let mut series = Vec::new();
        for (k, (name, vals)) in stages.iter().enumerate() {
            for (i, v) in vals.iter().enumerate() {
                wt.push(vec![(*name).into(), i.into(), (*v).into()]);
            }
            let h = Histogram::of(vals, p.bins)?;
            for (i, d) in h.density.iter().enumerate() {
                dt.push(vec![(*name).into(), h.edges[i].into(), h.edges[i + 1].into(), (*d).into()]);
            }
            if vals.len() >= 2 {
                let (xs, ys) = gaussian_kde(vals, KDE_POINTS)?;
                w.metric(&format!("modes[{name}]"), count_modes(&ys, p.mode_threshold) as f64);
                for (x, y) in xs.iter().zip(&ys) {
                    kt.push(vec![(*name).into(), (*x).into(), (*y).into()]);
                }
            }
            series.push(svg::histogram_series(name, &h, k));
        }
        w.write_table("weights.csv", &wt)?;
        w.write_table("densities.csv", &dt)?;
        w.write_table("kde.csv", &kt)?;
        let panels: Vec<Panel> = series
            .into_iter()
            .map(|s| Panel {
                title: s.name.clone(),
                x_label: "r".into(),
                y_label: "density".into(),
                series: vec![s],
                ..Panel::default()
            })
            .collect();
        w.write_bytes("densities.svg", svg::panels(&panels, 2).as_bytes())?;
        Ok(())
    };

    let Some(evolved) = evolve_radii(&init, &ctx, p, budget, "pde_initial")? else {
        w.interrupted = true;
        return finish(w, &stages);
    };
    stages.push(("evolved", evolved.clone()));

    let ext_a = train_a(p, &evolved, rng::derive_seed(seed, 20)).map_err(|e| e.in_stage("train_one_hidden_layer"))?;
    let ext_b = train_b(p, &evolved, rng::derive_seed(seed, 30)).map_err(|e| e.in_stage("train_two_hidden_layers"))?;
    if ext_a.iter().chain(&ext_b).any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteGradient { index: 0, step: p.n_samples }.in_stage("extract_weights"));
    }
    stages.push(("extracted_a", ext_a.clone()));
    stages.push(("extracted_b", ext_b.clone()));
    if budget.expired() {
        w.interrupted = true;
        return finish(w, &stages);
    }

    let Some(final_a) = evolve_radii(&ext_a, &ctx, p, budget, "pde_final_a")? else {
        w.interrupted = true;
        return finish(w, &stages);
    };
    stages.push(("final_a", final_a.clone()));
    let Some(final_b) = evolve_radii(&ext_b, &ctx, p, budget, "pde_final_b")? else {
        w.interrupted = true;
        return finish(w, &stages);
    };
    stages.push(("final_b", final_b.clone()));

    let ma = EmpiricalMeasure1D::new(&final_a)?;
    let mb = EmpiricalMeasure1D::new(&final_b)?;
    let (kl_ab, l1_ab) = kl_and_l1(&ma, &mb, p.bins, 0.5)?;
    let (kl_aa, l1_aa) = kl_and_l1(&ma, &ma, p.bins, 0.5)?;
    w.metric("kl[a|b]", kl_ab);
    w.metric("l1[a,b]", l1_ab);
    w.metric("kl[a|a]", kl_aa);
    w.metric("l1[a,a]", l1_aa);
    w.note(
        "mode_rule",
        format!(
            "Gaussian KDE (bandwidth 0.9 min(sd, IQR/1.34) n^-1/5, {KDE_POINTS} points, cut 3 bandwidths); a peak counts when it rises at least {} x the highest density above its higher separating saddle",
            p.mode_threshold
        ),
    );
    w.note("seeding", "evolved radii become the norms of the output-layer units (cycled when the layer is wider than J)");
    finish(w, &stages)
}
