//! The experiment kinds. Each `run_*` function takes validated parameters,
//! writes its CSVs through a [`RunWriter`] and records summary metrics.

mod prop1;
mod scaling;
mod sgd_vs_pde;
mod statics_grid;
mod table1;
mod theoretical;

pub use prop1::{finite_width_risk, prop1_bracket, run_prop1_gap};
pub use scaling::run_convergence_scaling;
pub use sgd_vs_pde::{run_sgd_vs_pde, RadialNetworkInit};
pub use statics_grid::{run_statics_grid, statics_table};
pub use table1::{paired_weights, run_hoeffding_table, table1_replicate, PairingPolicy, ReplicateOutcome};
pub use theoretical::run_theoretical_weights;

use std::path::Path;

use rayon::prelude::*;

use super::config::{ExperimentConfig, ExperimentParams};
use super::record::{Budget, RunRecord, RunWriter};
use crate::error::Result;

/// Validates `config`, then runs it into `out_dir`. Nothing is written when
/// validation fails.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path, budget: Budget) -> Result<RunRecord> {
    let params = config.validate()?;
    let mut w = RunWriter::create(out_dir)?;
    w.write_json("config.json", config)?;
    let seed = config.seed;
    match &params {
        ExperimentParams::SgdVsPde(p) => run_sgd_vs_pde(p, seed, &mut w, budget)?,
        ExperimentParams::ConvergenceScaling(p) => run_convergence_scaling(p, seed, &mut w, budget)?,
        ExperimentParams::Prop1Gap(p) => run_prop1_gap(p, seed, &mut w, budget)?,
        ExperimentParams::HoeffdingTable(p) => run_hoeffding_table(p, seed, &mut w, budget)?,
        ExperimentParams::TheoreticalWeights(p) => run_theoretical_weights(p, seed, &mut w, budget)?,
        ExperimentParams::StaticsGrid(p) => run_statics_grid(p, &mut w)?,
    }
    if w.interrupted {
        w.write_json(
            "checkpoint.json",
            &serde_json::json!({
                "interrupted": true,
                "metrics": &w.metrics,
            }),
        )?;
    }
    w.finish(config)
}

/// Runs `f(0..count)` in parallel, in index order, skipping the indices that
/// would start after the budget expired. Returns the completed prefix and
/// whether anything was skipped.
pub(crate) fn par_replicates<T, F>(count: usize, budget: Budget, f: F) -> Result<(Vec<T>, bool)>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    let results: Vec<Option<Result<T>>> = (0..count)
        .into_par_iter()
        .map(|i| if budget.expired() { None } else { Some(f(i)) })
        .collect();
    let mut done = Vec::with_capacity(count);
    let mut skipped = false;
    for r in results {
        match r {
            Some(r) if !skipped => done.push(r?),
            Some(_) | None => skipped = true,
        }
    }
    Ok((done, skipped))
}
