//! Final-time `W₂(ρ̂, ρ̄)` over a ladder of widths with `ε ∝ 1/N`.

use super::par_replicates;
use super::sgd_vs_pde::RadialNetworkInit;
use crate::data::{GaussianMixtureSpec, IsotropicStream};
use crate::error::Result;
use crate::harness::config::ConvergenceParams;
use crate::harness::fit::{loglog_slope_bootstrap, median};
use crate::harness::record::{Budget, RunWriter};
use crate::harness::svg::{self, Panel, Series};
use crate::harness::table::Table;
use crate::network::{train_one_pass, GradientMode, StepSchedule};
use crate::pde::{self, IntegratorConfig, Landscape, RunControl};
use crate::rng;
use crate::statics::StaticsContext;
use crate::stats::distance::{wasserstein2_1d, EmpiricalMeasure1D};

pub fn run_convergence_scaling(p: &ConvergenceParams, seed: u64, w: &mut RunWriter, budget: Budget) -> Result<()> {
    let ctx = StaticsContext::two_layer(p.delta, p.activation.clone())?;
    let init = pde::init_radial_quantiles(p.j_ref, p.delta, p.dim)?;
    let mut icfg = IntegratorConfig::new(p.pde_dt, (p.t_end / p.pde_dt).round() as usize);
    icfg.record_every = icfg.steps.max(1);
    let traj = pde::evolve_with_control(
        &init,
        &Landscape::PiecewiseTwoLayer(ctx),
        &icfg,
        RunControl { deadline: budget.deadline() },
    )
    .map_err(|e| e.in_stage("pde reference"))?;
    if traj.interrupted {
        w.interrupted = true;
        return Ok(());
    }
    let reference = EmpiricalMeasure1D::new(&traj.final_state.column(0))?;

    let seeds = p.seeds_per_rung;
    let spec = GaussianMixtureSpec::isotropic(p.delta, p.dim);
    let total = p.ladder.len() * seeds;
    let (results, skipped) = par_replicates(total, budget, |i| {
        let (rung, s) = (i / seeds, i % seeds);
        let n = p.ladder[rung];
        let eps = p.epsilon_for(rung);
        let steps = (p.t_end / eps).round() as usize;
        let run_seed = rng::derive_seed(seed, ((rung as u64) << 32) | s as u64);
        let net = RadialNetworkInit::build(n, p.dim, p.delta, p.activation.clone(), run_seed)?;
        let stream = IsotropicStream::new(&spec, rng::derive_seed(run_seed, 2))?.take(steps).map(Ok);
        let trace = train_one_pass(&net, stream, &StepSchedule::constant(eps), GradientMode::PaperLiteral, 0)
            .map_err(|e| e.in_stage(format!("sgd (N = {n}, seed {s})")))?;
        let radii: Vec<f64> = trace.final_params.layer1.iter().map(|u| u.norm()).collect();
        let w2 = wasserstein2_1d(&EmpiricalMeasure1D::new(&radii)?, &reference);
        Ok((n, eps, s, steps, w2))
    })?;
    w.interrupted |= skipped;

    let mut t = Table::new(&["n", "epsilon", "seed", "steps", "w2"]);
    for &(n, eps, s, steps, w2) in &results {
        t.push(vec![n.into(), eps.into(), s.into(), steps.into(), w2.into()]);
    }
    w.write_table("rungs.csv", &t)?;

    let complete = results.len() / seeds;
    let sizes: Vec<f64> = p.ladder[..complete].iter().map(|&n| n as f64).collect();
    let groups: Vec<Vec<f64>> = (0..complete)
        .map(|r| results[r * seeds..(r + 1) * seeds].iter().map(|x| x.4).collect())
        .collect();
    let mut summary = Table::new(&["n", "epsilon", "median_w2", "mean_w2"]);
    for (r, g) in groups.iter().enumerate() {
        let m = median(g);
        summary.push(vec![p.ladder[r].into(), p.epsilon_for(r).into(), m.into(), (g.iter().sum::<f64>() / g.len() as f64).into()]);
        w.metric(&format!("median_w2[N={}]", p.ladder[r]), m);
    }
    w.write_table("summary.csv", &summary)?;
    if complete >= 2 {
        let fit = loglog_slope_bootstrap(&sizes, &groups, p.bootstrap, p.ci_level, rng::derive_seed(seed, 99))?;
        w.metric("slope", fit.slope);
        w.metric("slope_ci_low", fit.ci_low);
        w.metric("slope_ci_high", fit.ci_high);
        w.metric("ci_excludes_zero", f64::from(u8::from(fit.ci_excludes_zero())));
    }
    w.metric("pde_reference_final_risk", traj.final_risk);

    let panel = Panel {
        title: "final-time W2 vs width".into(),
        x_label: "N".into(),
        y_label: "W2".into(),
        log_x: true,
        log_y: true,
        series: vec![
            Series::new(
                "median",
                sizes.iter().zip(&groups).map(|(&n, g)| (n, median(g))).collect(),
            ),
            Series {
                name: "replicates".into(),
                points: results.iter().map(|x| (x.0 as f64, x.4)).collect(),
                dashed: true,
                color: 1,
            },
        ],
    };
    w.write_bytes("w2_ladder.svg", svg::line_chart(&panel).as_bytes())?;
    Ok(())
}
