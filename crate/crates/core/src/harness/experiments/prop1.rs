//! Finite-width risk gap `E[R_N] - R(ρ*)` for `N` units drawn i.i.d. from an
//! atomic `ρ*`.
//!
//! The atoms of `ρ*` are distinct parameter vectors. In the rotationally
//! reduced `d = ∞` model two distinct units interact through
//! `½[q₊(r)q₊(r') + q₋(r)q₋(r')]` and a unit with itself through
//! `½[E σ(τ₊rG)² + E σ(τ₋rG)²]`; units that draw the same atom are the same
//! vector and use the second form. Then
//! `E[R_N] - R(ρ*) = (1/N)(∫U(θ,θ) dρ* - ∬U dρ* dρ*)` exactly.

use rand::Rng;

use super::par_replicates;
use crate::error::{Error, Result};
use crate::harness::config::Prop1Params;
use crate::harness::fit::ols_slope;
use crate::harness::record::{Budget, RunWriter};
use crate::harness::svg::{self, Panel, Series};
use crate::harness::table::Table;
use crate::pde::{self, IntegratorConfig, Landscape, RunControl};
use crate::rng;
use crate::statics::{McEstimate, Sign, StaticsContext};

/// Per-atom building blocks.
struct Atoms {
    qp: Vec<f64>,
    qm: Vec<f64>,
    diag: Vec<f64>,
}

impl Atoms {
    fn new(ctx: &StaticsContext, radii: &[f64]) -> Self {
        Self {
            qp: radii.iter().map(|&r| ctx.q_single(r, Sign::Plus)).collect(),
            qm: radii.iter().map(|&r| ctx.q_single(r, Sign::Minus)).collect(),
            diag: radii.iter().map(|&r| ctx.two_layer_kernel(r, r, true)).collect(),
        }
    }

    /// `R` of the measure putting weight `c_a / Σc` on atom `a`.
    fn risk_of_counts(&self, counts: &[f64]) -> f64 {
        let n: f64 = counts.iter().sum();
        let (mut sp, mut sm, mut sp2, mut sm2, mut sd, mut v) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for (a, &c) in counts.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            sp += c * self.qp[a];
            sm += c * self.qm[a];
            sp2 += c * c * self.qp[a] * self.qp[a];
            sm2 += c * c * self.qm[a] * self.qm[a];
            sd += c * c * self.diag[a];
            v += c * 0.5 * (self.qm[a] - self.qp[a]);
        }
        let pair = 0.5 * (sp * sp - sp2 + sm * sm - sm2) + sd;
        1.0 + 2.0 * v / n + pair / (n * n)
    }

    fn uniform_risk(&self) -> f64 {
        self.risk_of_counts(&vec![1.0; self.qp.len()])
    }

    /// `ψ(θ_a) = V(θ_a) + ∫U(θ_a, ·) dρ*`.
    fn psi(&self) -> Vec<f64> {
        let j = self.qp.len() as f64;
        let mp = self.qp.iter().sum::<f64>() / j;
        let mm = self.qm.iter().sum::<f64>() / j;
        (0..self.qp.len())
            .map(|a| {
                let cross = 0.5 * (self.qp[a] * mp + self.qm[a] * mm);
                let own = (self.diag[a] - 0.5 * (self.qp[a] * self.qp[a] + self.qm[a] * self.qm[a])) / j;
                0.5 * (self.qm[a] - self.qp[a]) + cross + own
            })
            .collect()
    }

    fn bracket(&self) -> f64 {
        let j = self.qp.len() as f64;
        let mean_diag = self.diag.iter().sum::<f64>() / j;
        let mp = self.qp.iter().sum::<f64>() / j;
        let mm = self.qm.iter().sum::<f64>() / j;
        let sp2 = self.qp.iter().map(|v| v * v).sum::<f64>();
        let sm2 = self.qm.iter().map(|v| v * v).sum::<f64>();
        let double = 0.5 * (mp * mp - sp2 / (j * j) + mm * mm - sm2 / (j * j)) + self.diag.iter().sum::<f64>() / (j * j);
        mean_diag - double
    }
}

/// `∫U(θ,θ) dρ* - ∬U dρ* dρ*` for the uniform measure on `radii`.
pub fn prop1_bracket(ctx: &StaticsContext, radii: &[f64]) -> Result<f64> {
    if radii.is_empty() {
        return Err(Error::invalid("need at least one atom"));
    }
    Ok(Atoms::new(ctx, radii).bracket())
}

/// Risk of the width-`N` network whose units are the given atoms (indices
/// into `radii`, repeats meaning identical units).
pub fn finite_width_risk(ctx: &StaticsContext, radii: &[f64], units: &[usize]) -> Result<f64> {
    if units.is_empty() || units.iter().any(|&u| u >= radii.len()) {
        return Err(Error::invalid("unit indices must be non-empty and within the atom list"));
    }
    let atoms = Atoms::new(ctx, radii);
    let mut counts = vec![0.0; radii.len()];
    for &u in units {
        counts[u] += 1.0;
    }
    Ok(atoms.risk_of_counts(&counts))
}

pub fn run_prop1_gap(p: &Prop1Params, seed: u64, w: &mut RunWriter, budget: Budget) -> Result<()> {
    let ctx = StaticsContext::two_layer(p.delta, p.activation.clone())?;
    let radii = match &p.atoms {
        Some(a) => a.clone(),
        None => {
            let init = pde::init_radial_quantiles(p.j_star, p.delta, p.dim)?;
            let mut icfg = IntegratorConfig::new(p.pde_dt, p.pde_steps);
            icfg.record_every = p.pde_steps.max(1);
            let traj = pde::evolve_with_control(
                &init,
                &Landscape::PiecewiseTwoLayer(ctx.clone()),
                &icfg,
                RunControl { deadline: budget.deadline() },
            )
            .map_err(|e| e.in_stage("rho* proxy"))?;
            if traj.interrupted {
                w.interrupted = true;
                return Ok(());
            }
            w.metric("proxy_initial_risk", traj.initial_risk);
            w.metric("proxy_final_risk", traj.final_risk);
            traj.final_state.column(0)
        }
    };
    let mut atoms_t = Table::new(&["r"]);
    for &r in &radii {
        atoms_t.push(vec![r.into()]);
    }
    w.write_table("rho_star.csv", &atoms_t)?;

    let atoms = Atoms::new(&ctx, &radii);
    let base = atoms.uniform_risk();
    let bracket = atoms.bracket();
    let psi = atoms.psi();
    let psi_mean = psi.iter().sum::<f64>() / psi.len() as f64;
    w.metric("risk_rho_star", base);
    w.metric("bracket", bracket);

    let (rows, skipped) = par_replicates(p.ladder.len(), budget, |li| {
        let n = p.ladder[li];
        let mut r = rng::substream(seed, li as u64 + 1);
        let mut counts = vec![0.0; radii.len()];
        let (mut s, mut s2, mut raw, mut raw2) = (0.0, 0.0, 0.0, 0.0);
        for _ in 0..p.resamples {
            counts.iter_mut().for_each(|c| *c = 0.0);
            let mut lin = 0.0;
            for _ in 0..n {
                let a = r.random_range(0..radii.len());
                counts[a] += 1.0;
                lin += psi[a] - psi_mean;
            }
            let gap = atoms.risk_of_counts(&counts) - base;
            let cv = gap - 2.0 * lin / n as f64;
            s += cv;
            s2 += cv * cv;
            raw += gap;
            raw2 += gap * gap;
        }
        let est = McEstimate::from_sums(s, s2, p.resamples);
        let raw_est = McEstimate::from_sums(raw, raw2, p.resamples);
        Ok((n, est, raw_est, bracket / n as f64))
    })?;
    w.interrupted |= skipped;

    let mut t = Table::new(&["n", "mc_gap", "mc_se", "raw_gap", "raw_se", "exact_gap", "z"]);
    for (n, est, raw, exact) in &rows {
        let z = if est.se > 0.0 { (est.mean - exact) / est.se } else { 0.0 };
        t.push(vec![(*n).into(), est.mean.into(), est.se.into(), raw.mean.into(), raw.se.into(), (*exact).into(), z.into()]);
        w.metric(&format!("z[N={n}]"), z);
        w.metric(&format!("mc_gap[N={n}]"), est.mean);
    }
    w.write_table("gap.csv", &t)?;
    if rows.len() >= 2 && rows.iter().all(|r| r.1.mean > 0.0) {
        let x: Vec<f64> = rows.iter().map(|r| (r.0 as f64).ln()).collect();
        let y: Vec<f64> = rows.iter().map(|r| r.1.mean.ln()).collect();
        w.metric("decay_exponent", ols_slope(&x, &y));
    }
    w.note("control_variate", "linear term (2/N) sum_i [psi(theta_i) - mean psi]");

    let panel = Panel {
        title: "finite-width gap".into(),
        x_label: "N".into(),
        y_label: "E[R_N] - R(rho*)".into(),
        log_x: true,
        log_y: true,
        series: vec![
            Series::new("Monte Carlo", rows.iter().map(|r| (r.0 as f64, r.1.mean)).collect()),
            Series {
                name: "bracket / N".into(),
                points: rows.iter().map(|r| (r.0 as f64, r.3)).collect(),
                dashed: true,
                color: 1,
            },
        ],
    };
    w.write_bytes("gap.svg", svg::line_chart(&panel).as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::ActivationKind;

    fn ctx() -> StaticsContext {
        StaticsContext::two_layer(0.5, ActivationKind::interpolated_step()).unwrap()
    }

    #[test]
    fn single_atom_has_no_gap() {
        let c = ctx();
        assert!(prop1_bracket(&c, &[0.9]).unwrap().abs() < 1e-14);
        let r1 = finite_width_risk(&c, &[0.9], &[0]).unwrap();
        let r5 = finite_width_risk(&c, &[0.9], &[0, 0, 0, 0, 0]).unwrap();
        assert!((r1 - r5).abs() < 1e-12);
    }

    #[test]
    fn exact_expectation_over_all_draws_matches_bracket() {
        // Enumerate every ordered draw of N = 2 units from 3 atoms.
        let c = ctx();
        let radii = [0.3, 0.9, 1.6];
        let base = finite_width_risk(&c, &radii, &[0, 1, 2]).unwrap();
        let mut total = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                total += finite_width_risk(&c, &radii, &[a, b]).unwrap();
            }
        }
        let gap = total / 9.0 - base;
        let bracket = prop1_bracket(&c, &radii).unwrap();
        assert!((gap - bracket / 2.0).abs() < 1e-12, "{gap} vs {}", bracket / 2.0);
    }
}
