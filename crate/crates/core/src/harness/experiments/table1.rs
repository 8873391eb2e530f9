//! Independence of first- and second-hidden-layer weights after one-pass
//! training of a three-layer network on the correlated law.

use serde::{Deserialize, Serialize};

use super::par_replicates;
use crate::data::{CorrelatedStream, GaussianMixtureSpec};
use crate::error::{Error, Result};
use crate::harness::config::{PMethodName, Table1Params, Table1Row};
use crate::harness::fit::Histogram;
use crate::harness::record::{Budget, RunWriter};
use crate::harness::svg::{self, Panel};
use crate::harness::table::Table;
use crate::network::{train_one_pass, NetworkParams, StepSchedule};
use crate::rng;
use crate::stats::hoeffding::{hoeffding_test, jitter_ties, PMethod};

/// How the two layers' weights are turned into bivariate observations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairingPolicy {
    /// Flatten each layer's incoming weights unit by unit and pair entries by
    /// position, truncating to the shorter sequence.
    FlattenedByIndex,
}

impl PairingPolicy {
    pub fn describe(self) -> &'static str {
        match self {
            PairingPolicy::FlattenedByIndex => {
                "layer-1 and layer-2 incoming weights flattened unit-major, paired by position up to the shorter length"
            }
        }
    }
}

pub fn paired_weights(net: &NetworkParams, policy: PairingPolicy) -> Result<(Vec<f64>, Vec<f64>)> {
    if net.layer2.is_empty() {
        return Err(Error::invalid("weight pairing needs a network with two hidden layers"));
    }
    match policy {
        PairingPolicy::FlattenedByIndex => {
            let x: Vec<f64> = net.layer1.iter().flat_map(|u| u.w.iter().copied()).collect();
            let y: Vec<f64> = net.layer2.iter().flat_map(|u| u.w.iter().copied()).collect();
            let n = x.len().min(y.len());
            Ok((x[..n].to_vec(), y[..n].to_vec()))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicateOutcome {
    pub d_stat: f64,
    pub p_value: f64,
    pub n_pairs: usize,
}

/// One replicate: initialize, train on `row.n_samples` fresh samples, test.
pub fn table1_replicate(p: &Table1Params, row: &Table1Row, seed: u64) -> Result<ReplicateOutcome> {
    let spec = GaussianMixtureSpec::correlated(p.delta, row.dim, row.lambda);
    let net = NetworkParams::init_gaussian(
        row.dim,
        &[row.nodes, row.nodes],
        p.delta,
        p.activation.clone(),
        p.activation.clone(),
        rng::derive_seed(seed, 1),
    )?;
    let stream = CorrelatedStream::new(&spec, rng::derive_seed(seed, 2))?.take(row.n_samples).map(Ok);
    let trace = train_one_pass(&net, stream, &StepSchedule::constant(p.epsilon), p.mode, 0)?;
    let (mut x, mut y) = paired_weights(&trace.final_params, PairingPolicy::FlattenedByIndex)?;
    if x.iter().chain(&y).any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteGradient { index: 0, step: row.n_samples });
    }
    if p.jitter {
        x = jitter_ties(&x, rng::derive_seed(seed, 4));
        y = jitter_ties(&y, rng::derive_seed(seed, 5));
    }
    let method = match p.p_method {
        PMethodName::Permutation => PMethod::Permutation {
            count: p.permutations,
            seed: rng::derive_seed(seed, 3),
        },
        PMethodName::Table => PMethod::TableInterpolation,
    };
    let res = hoeffding_test(&x, &y, method)?;
    Ok(ReplicateOutcome {
        d_stat: res.d_stat,
        p_value: res.p_value.unwrap_or(f64::NAN),
        n_pairs: x.len(),
    })
}

#[derive(Clone, Debug, Serialize)]
struct RowSummary {
    row: usize,
    n_samples: usize,
    lambda: f64,
    nodes: usize,
    dim: usize,
    replicates: usize,
    mean_p: f64,
    reject_fraction: f64,
}

pub fn run_hoeffding_table(p: &Table1Params, seed: u64, w: &mut RunWriter, budget: Budget) -> Result<()> {
    let reps = p.replicates;
    let (outcomes, skipped) = par_replicates(p.rows.len() * reps, budget, |i| {
        let (ri, rep) = (i / reps, i % reps);
        let row = &p.rows[ri];
        table1_replicate(p, row, rng::derive_seed(seed, ((ri as u64) << 32) | rep as u64))
            .map_err(|e| e.in_stage(format!("row {ri} (N = {}, lambda = {}), replicate {rep}", row.n_samples, row.lambda)))
    })?;
    w.interrupted |= skipped;

    let mut rt = Table::new(&["row", "n_samples", "lambda", "nodes", "dim", "replicate", "d_stat", "p_value", "n_pairs"]);
    for (i, o) in outcomes.iter().enumerate() {
        let (ri, rep) = (i / reps, i % reps);
        let row = &p.rows[ri];
        rt.push(vec![
            ri.into(),
            row.n_samples.into(),
            row.lambda.into(),
            row.nodes.into(),
            row.dim.into(),
            rep.into(),
            o.d_stat.into(),
            o.p_value.into(),
            o.n_pairs.into(),
        ]);
    }
    w.write_table("replicates.csv", &rt)?;

    let mut summaries = Vec::new();
    let mut st = Table::new(&["row", "n_samples", "lambda", "nodes", "dim", "replicates", "mean_p", "reject_fraction"]);
    let mut hist_series = Vec::new();
    for (ri, row) in p.rows.iter().enumerate() {
        let ps: Vec<f64> = outcomes.iter().skip(ri * reps).take(reps).map(|o| o.p_value).collect();
        if ps.is_empty() {
            continue;
        }
        let mean_p = ps.iter().sum::<f64>() / ps.len() as f64;
        let reject = ps.iter().filter(|&&v| v < 0.05).count() as f64 / ps.len() as f64;
        st.push(vec![
            ri.into(),
            row.n_samples.into(),
            row.lambda.into(),
            row.nodes.into(),
            row.dim.into(),
            ps.len().into(),
            mean_p.into(),
            reject.into(),
        ]);
        w.metric(&format!("mean_p[row={ri}]"), mean_p);
        w.metric(&format!("reject_fraction[row={ri}]"), reject);
        summaries.push(RowSummary {
            row: ri,
            n_samples: row.n_samples,
            lambda: row.lambda,
            nodes: row.nodes,
            dim: row.dim,
            replicates: ps.len(),
            mean_p,
            reject_fraction: reject,
        });
        let h = Histogram::with_range(&ps, 10, 0.0, 1.0)?;
        hist_series.push(svg::histogram_series(&format!("row {ri}: N={} λ={} nodes={}", row.n_samples, row.lambda, row.nodes), &h, ri));
    }
    w.write_table("rows.csv", &st)?;
    w.write_json(
        "summary.json",
        &serde_json::json!({
            "rows": summaries,
            "pairing": PairingPolicy::FlattenedByIndex.describe(),
            "p_method": p.p_method,
            "permutations": p.permutations,
        }),
    )?;
    w.note("pairing", PairingPolicy::FlattenedByIndex.describe());
    let panel = Panel {
        title: "Hoeffding p-values".into(),
        x_label: "p".into(),
        y_label: "density".into(),
        series: hist_series,
        ..Panel::default()
    };
    w.write_bytes("p_values.svg", svg::line_chart(&panel).as_bytes())?;
    Ok(())
}
