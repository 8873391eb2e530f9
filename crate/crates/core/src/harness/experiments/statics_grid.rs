//! Tables of the reduced functionals over a grid of radii.

use crate::activation::ActivationKind;
use crate::error::Result;
use crate::harness::config::StaticsGridParams;
use crate::harness::record::RunWriter;
use crate::harness::svg::{self, Panel, Series};
use crate::harness::table::Table;
use crate::statics::{RadialMeasure, Sign, StaticsContext};

/// Columns `r, q_plus, q_minus` (two-layer `q±(r)`), `v, u_inf` (three-layer
/// `v(r₁, r)`, `u∞(r₁, r, r)`), and `psi_inf, lambda_plus, lambda_minus`
/// (two-layer `ψ∞(r)` against the uniform measure on the grid).
pub fn statics_table(delta: f64, activation: &ActivationKind, radii: &[f64], r1: f64) -> Result<Table> {
    let two = StaticsContext::two_layer(delta, activation.clone())?;
    let three = StaticsContext::new(delta, activation.clone(), activation.clone())?;
    let rho = RadialMeasure::uniform(radii)?;
    let mut t = Table::new(&["r", "q_plus", "q_minus", "v", "u_inf", "psi_inf", "lambda_plus", "lambda_minus"]);
    for &r in radii {
        let psi = two.psi_infinity_two_layer(&rho, r);
        t.push(vec![
            r.into(),
            two.q_single(r, Sign::Plus).into(),
            two.q_single(r, Sign::Minus).into(),
            three.v(r1, r).into(),
            three.u_infinity(r1, r, r).into(),
            psi.value.into(),
            psi.lambda_plus.into(),
            psi.lambda_minus.into(),
        ]);
    }
    Ok(t)
}

pub fn run_statics_grid(p: &StaticsGridParams, w: &mut RunWriter) -> Result<()> {
    let grid = p.grid();
    let t = statics_table(p.delta, &p.activation, &grid, p.r1)?;
    w.write_table("statics.csv", &t)?;
    let series = ["q_plus", "q_minus", "psi_inf"]
        .iter()
        .enumerate()
        .map(|(k, c)| Series {
            name: (*c).into(),
            points: grid.iter().copied().zip(t.column(c).unwrap_or_default()).collect(),
            dashed: false,
            color: k,
        })
        .collect();
    let panel = Panel {
        title: format!("reduced functionals, Δ = {}", p.delta),
        x_label: "r".into(),
        y_label: "value".into(),
        series,
        ..Panel::default()
    };
    w.write_bytes("statics.svg", svg::line_chart(&panel).as_bytes())?;
    w.metric("points", grid.len() as f64);
    Ok(())
}
