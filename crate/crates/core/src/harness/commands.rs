//! The single-purpose commands behind the CLI: data generation, one SGD run,
//! one PDE run, statics tables, the Hoeffding suite and distance comparison.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::config::{ExperimentConfig, ExperimentKind, InitName, PdeKindName, PdeRunParams};
use super::experiments::{run_experiment, statics_table};
use super::record::{Budget, RunRecord, RunWriter};
use super::table::{Cell, Table};
use crate::activation::ActivationKind;
use crate::data::{self, GaussianMixtureSpec, IsotropicStream};
use crate::error::{Error, Result};
use crate::network::{train_one_pass, GradientMode, NetworkParams, StepSchedule, Xi};
use crate::pde::{self, GradMode, IntegratorConfig, Landscape, RunControl, QUANTILE_LEVELS};
use crate::statics::StaticsContext;
use crate::stats::distance::{bounded_lipschitz_distance, kl_and_l1, wasserstein2_1d, EmpiricalMeasure1D};

/// Reads a config file (TOML, or JSON by extension) into a JSON value.
pub fn read_config_value(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))?;
    if path.extension().and_then(|e| e.to_str()) == Some("json") {
        serde_json::from_str(&text).map_err(|e| Error::config(format!("invalid JSON config: {e}")))
    } else {
        let v: toml::Value = toml::from_str(&text).map_err(|e| Error::config(format!("invalid TOML config: {e}")))?;
        serde_json::to_value(v).map_err(|e| Error::config(e.to_string()))
    }
}

// ---- gen-data ---------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct GenDataArgs {
    pub delta: f64,
    pub dim: usize,
    pub count: usize,
    pub seed: u64,
    /// Correlated law with this off-diagonal covariance (labels 1/0).
    pub off_diag: Option<f64>,
    pub informative_dims: Option<usize>,
}

pub fn gen_data(args: &GenDataArgs, out: &Path) -> Result<()> {
    let spec = match args.off_diag {
        Some(od) => GaussianMixtureSpec::correlated(args.delta, args.dim, od),
        None => GaussianMixtureSpec::isotropic(args.delta, args.dim),
    };
    let spec = match args.informative_dims {
        Some(s0) => spec.with_informative_dims(s0),
        None => spec,
    };
    spec.validate().map_err(|e| Error::config(e.to_string()))?;
    let samples = data::sample_auto(&spec, args.seed, args.count)?;
    if let Some(parent) = out.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let file = std::io::BufWriter::new(std::fs::File::create(out)?);
    data::write_csv(file, &samples)
}

// ---- train-sgd --------------------------------------------------------------

fn de_activation_opt<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Option<ActivationKind>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Spec {
        Name(String),
        Full(ActivationKind),
    }
    match Option::<Spec>::deserialize(d)? {
        None => Ok(None),
        Some(Spec::Name(n)) => ActivationKind::from_name(&n).map(Some).map_err(serde::de::Error::custom),
        Some(Spec::Full(a)) => Ok(Some(a)),
    }
}

fn de_xi_str<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Xi, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Spec {
        Text(String),
        Full(Xi),
    }
    match Spec::deserialize(d)? {
        Spec::Text(t) => Xi::parse(&t).map_err(serde::de::Error::custom),
        Spec::Full(x) => Ok(x),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub delta: f64,
    pub dim: usize,
    pub layers: Vec<usize>,
    #[serde(default, deserialize_with = "de_activation_opt")]
    pub activation: Option<ActivationKind>,
    /// Second-layer activation of a three-layer network (defaults to `activation`).
    #[serde(default, deserialize_with = "de_activation_opt")]
    pub activation2: Option<ActivationKind>,
    pub epsilon: f64,
    #[serde(default, deserialize_with = "de_xi_str")]
    pub xi: Xi,
    pub steps: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub mode: GradientMode,
    #[serde(default)]
    pub snapshot_every: usize,
    /// Train on the correlated law with this off-diagonal covariance.
    #[serde(default)]
    pub off_diag: Option<f64>,
}

impl TrainConfig {
    pub fn from_value(v: Value) -> Result<Self> {
        let c: Self = serde_json::from_value(v).map_err(|e| Error::config(format!("invalid train-sgd config: {e}")))?;
        c.check()?;
        Ok(c)
    }

    pub fn check(&self) -> Result<()> {
        let bad = |m: String| Err(Error::config(m));
        if !(0.0..=1.0).contains(&self.delta) {
            return bad(format!("delta must lie in [0, 1], got {}", self.delta));
        }
        if self.dim == 0 {
            return bad("dim must be >= 1".into());
        }
        if self.layers.is_empty() || self.layers.len() > 2 || self.layers.contains(&0) {
            return bad(format!("layers must be [n1] or [n1, n2] with positive widths, got {:?}", self.layers));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if let Some(od) = self.off_diag {
            if !(od.is_finite() && od >= 0.0) {
                return bad(format!("off_diag must be >= 0, got {od}"));
            }
        }
        self.xi.validate().map_err(|e| Error::config(e.to_string()))?;
        for a in [&self.activation, &self.activation2].into_iter().flatten() {
            a.validate().map_err(|e| Error::config(e.to_string()))?;
        }
        Ok(())
    }
}

pub fn train_sgd(cfg: &TrainConfig, default_seed: u64, out: &Path) -> Result<()> {
    cfg.check()?;
    let seed = cfg.seed.unwrap_or(default_seed);
    let act1 = cfg.activation.clone().unwrap_or_default();
    let act2 = cfg.activation2.clone().unwrap_or_else(|| act1.clone());
    let init = NetworkParams::init_gaussian(cfg.dim, &cfg.layers, cfg.delta, act1, act2, crate::rng::derive_seed(seed, 1))?;
    let schedule = StepSchedule {
        epsilon: cfg.epsilon,
        xi: cfg.xi,
    };
    let data_seed = crate::rng::derive_seed(seed, 2);
    let trace = match cfg.off_diag {
        Some(od) => {
            let spec = GaussianMixtureSpec::correlated(cfg.delta, cfg.dim, od);
            let stream = data::CorrelatedStream::new(&spec, data_seed)?.take(cfg.steps).map(Ok);
            train_one_pass(&init, stream, &schedule, cfg.mode, cfg.snapshot_every)?
        }
        None => {
            let spec = GaussianMixtureSpec::isotropic(cfg.delta, cfg.dim);
            let stream = IsotropicStream::new(&spec, data_seed)?.take(cfg.steps).map(Ok);
            train_one_pass(&init, stream, &schedule, cfg.mode, cfg.snapshot_every)?
        }
    };
    if trace
        .final_params
        .layer1
        .iter()
        .chain(&trace.final_params.layer2)
        .any(|u| !(u.a.is_finite() && u.b.is_finite() && u.w.iter().all(|v| v.is_finite())))
    {
        return Err(Error::NonFiniteGradient { index: 0, step: trace.steps });
    }

    let mut w = RunWriter::create(out)?;
    let layers = cfg.layers.len();
    let mut header = vec!["step".to_string(), "risk_estimate".to_string()];
    for l in 1..=layers {
        for q in QUANTILE_LEVELS {
            header.push(format!("layer{l}_norm_q{}", (q * 100.0).round() as u32));
        }
    }
    let mut tt = Table::new(&header);
    for s in &trace.snapshots {
        let mut row: Vec<Cell> = vec![s.step.into(), s.risk_estimate.unwrap_or(f64::NAN).into()];
        for layer in &s.layers {
            let mut norms = layer.norms.clone();
            norms.sort_by(f64::total_cmp);
            row.extend(QUANTILE_LEVELS.iter().map(|&q| Cell::from(pde::quantile_sorted(&norms, q))));
        }
        tt.push(row);
    }
    w.write_table("trace.csv", &tt)?;

    let mut wt = Table::new(&["layer", "unit", "kind", "index", "value"]);
    for (l, units) in [&trace.final_params.layer1, &trace.final_params.layer2].into_iter().enumerate() {
        for (u, unit) in units.iter().enumerate() {
            wt.push(vec![(l + 1).into(), u.into(), "a".into(), 0usize.into(), unit.a.into()]);
            wt.push(vec![(l + 1).into(), u.into(), "b".into(), 0usize.into(), unit.b.into()]);
            for (k, v) in unit.w.iter().enumerate() {
                wt.push(vec![(l + 1).into(), u.into(), "w".into(), k.into(), (*v).into()]);
            }
        }
    }
    w.write_table("weights_final.csv", &wt)?;
    w.write_json("weights_final.json", &trace.final_params)?;
    w.write_json("train_config.json", cfg)?;
    Ok(())
}

// ---- simulate-pde -----------------------------------------------------------

pub struct PdeRunOutcome {
    pub trajectory: pde::Trajectory,
}

pub fn simulate_pde(kind: PdeKindName, p: &PdeRunParams, out: &Path, budget: Budget) -> Result<PdeRunOutcome> {
    p.check(Some(kind))?;
    let (ens, landscape) = match kind {
        PdeKindName::Piecewise2 => {
            let ens = match p.init {
                InitName::Gaussian => pde::init_radial_gaussian(p.j, p.delta, p.dim, p.seed)?,
                InitName::Quantiles => pde::init_radial_quantiles(p.j, p.delta, p.dim)?,
            };
            (ens, Landscape::PiecewiseTwoLayer(StaticsContext::two_layer(p.delta, p.activation.clone())?))
        }
        PdeKindName::Relu2 => (
            pde::init_relu(p.j, p.delta, p.dim, p.s0, p.seed)?,
            Landscape::ReluTwoLayer { delta: p.delta },
        ),
        PdeKindName::Joint3 => (
            pde::init_three_layer(p.j, p.delta, p.dim, p.seed)?,
            Landscape::ThreeLayerJoint(StaticsContext::new(p.delta, p.activation.clone(), p.activation.clone())?),
        ),
    };
    let mut icfg = IntegratorConfig::new(p.dt, p.steps);
    icfg.xi = p.xi;
    icfg.record_every = p.record_every;
    icfg.scheme = p.scheme;
    icfg.checkpoints = p.checkpoints.clone();
    if let Some(h) = p.fd_step {
        icfg.grad_mode = GradMode::FiniteDifference { h };
    }
    icfg.validate().map_err(|e| Error::config(e.to_string()))?;
    let traj = pde::evolve_with_control(&ens, &landscape, &icfg, RunControl { deadline: budget.deadline() })?;

    let mut w = RunWriter::create(out)?;
    let names = ens.kind.column_names();
    let mut header: Vec<String> = ["step", "t", "risk", "lambda_plus", "lambda_minus"].iter().map(|s| s.to_string()).collect();
    for n in names {
        header.push(format!("{n}_mean"));
        for q in QUANTILE_LEVELS {
            header.push(format!("{n}_q{}", (q * 100.0).round() as u32));
        }
    }
    let mut t = Table::new(&header);
    for r in &traj.records {
        let mut row: Vec<Cell> = vec![r.step.into(), r.t.into(), r.risk.into(), r.lambda_plus.into(), r.lambda_minus.into()];
        for (c, m) in r.column_means.iter().enumerate() {
            row.push((*m).into());
            row.extend(r.column_quantiles[c].iter().map(|&v| Cell::from(v)));
        }
        t.push(row);
    }
    w.write_table("trajectory.csv", &t)?;
    let mut snapshots: Vec<(usize, &pde::ParticleEnsemble)> = traj.checkpoints.iter().map(|(s, e)| (*s, e)).collect();
    if snapshots.last().map(|s| s.0) != Some(traj.steps_taken) {
        snapshots.push((traj.steps_taken, &traj.final_state));
    }
    for (step, e) in snapshots {
        let mut pt = Table::new(names);
        for i in 0..e.len() {
            pt.push(e.particle(i).iter().map(|&v| Cell::from(v)).collect());
        }
        w.write_table(&format!("particles_t{step}.csv"), &pt)?;
    }
    w.metric("initial_risk", traj.initial_risk);
    w.metric("final_risk", traj.final_risk);
    w.metric("max_step_increase", traj.max_step_increase);
    w.metric("clamp_events", traj.clamp_events as f64);
    w.metric("steps_taken", traj.steps_taken as f64);
    w.interrupted = traj.interrupted;
    let mut cfg = ExperimentConfig::new("simulate-pde", ExperimentKind::StaticsGrid, p.seed);
    cfg.parameters = serde_json::json!({ "kind": kind, "run": p }).as_object().cloned().unwrap_or_default();
    w.write_json("pde_config.json", &cfg.parameters)?;
    w.write_json(
        "summary.json",
        &serde_json::json!({
            "initial_risk": traj.initial_risk,
            "final_risk": traj.final_risk,
            "max_step_increase": traj.max_step_increase,
            "clamp_events": traj.clamp_events,
            "steps_taken": traj.steps_taken,
            "interrupted": traj.interrupted,
        }),
    )?;
    Ok(PdeRunOutcome { trajectory: traj })
}

// ---- eval-statics -----------------------------------------------------------

/// Reads radii from a file: one value per line, or a CSV whose column `r`
/// (else the first column) holds them.
pub fn read_values(path: &Path, column: Option<&str>) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    let has_header = first.split(',').any(|f| f.trim().parse::<f64>().is_err());
    let values: Vec<f64> = if has_header {
        let t = Table::parse(&text)?;
        let name = match column {
            Some(c) => c.to_string(),
            None if t.column_index("r").is_some() => "r".to_string(),
            None => t.header[0].clone(),
        };
        t.column(&name)
            .ok_or_else(|| Error::config(format!("{} has no column `{name}`", path.display())))?
    } else {
        let c = match column {
            Some(c) => c.parse::<usize>().map_err(|_| Error::config(format!("column `{c}` is not an index")))?,
            None => 0,
        };
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                l.split(',')
                    .nth(c)
                    .and_then(|f| f.trim().parse::<f64>().ok())
                    .ok_or_else(|| Error::Parse(format!("bad value line `{l}` in {}", path.display())))
            })
            .collect::<Result<_>>()?
    };
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return Err(Error::config(format!("{} must hold a non-empty list of finite numbers", path.display())));
    }
    Ok(values)
}

pub fn eval_statics(delta: f64, activation: &ActivationKind, grid: &[f64], r1: f64, out: &Path) -> Result<()> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::config(format!("delta must lie in [0, 1], got {delta}")));
    }
    if grid.iter().any(|&r| r < 0.0) {
        return Err(Error::config("radii must be >= 0"));
    }
    let t = statics_table(delta, activation, grid, r1)?;
    if let Some(parent) = out.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(out, t.to_csv())?;
    Ok(())
}

// ---- hoeffding-suite --------------------------------------------------------

/// Runs the Table-1 suite from a parameters file (the `[parameters]` table of
/// a `hoeffding_table` experiment, or a full experiment config).
pub fn hoeffding_suite(config: &Path, seed: Option<u64>, out: &Path, budget: Budget) -> Result<RunRecord> {
    let v = read_config_value(config)?;
    let mut cfg = match v.get("kind") {
        Some(_) => serde_json::from_value::<ExperimentConfig>(v).map_err(|e| Error::config(format!("invalid config: {e}")))?,
        None => {
            let mut c = ExperimentConfig::new("hoeffding-suite", ExperimentKind::HoeffdingTable, 0);
            c.parameters = v.as_object().cloned().ok_or_else(|| Error::config("config must be a table"))?;
            c
        }
    };
    if cfg.kind != ExperimentKind::HoeffdingTable {
        return Err(Error::config(format!("expected a hoeffding_table config, got {}", cfg.kind.name())));
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    run_experiment(&cfg, out, budget)
}

// ---- compare-dist -----------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    W2,
    Bl,
    Kl,
    L1,
}

impl Metric {
    pub fn parse_list(text: &str) -> Result<Vec<Metric>> {
        text.split(',')
            .map(|m| match m.trim() {
                "w2" => Ok(Metric::W2),
                "bl" => Ok(Metric::Bl),
                "kl" => Ok(Metric::Kl),
                "l1" => Ok(Metric::L1),
                other => Err(Error::config(format!("unknown metric `{other}` (expected w2, bl, kl, l1)"))),
            })
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct CompareOptions {
    pub bins: usize,
    pub alpha: f64,
    pub resolution: usize,
}

impl Default for CompareOptions {
    fn default() -> Self {
        Self {
            bins: 50,
            alpha: 0.5,
            resolution: 2000,
        }
    }
}

pub fn compare_dist(a: &[f64], b: &[f64], metrics: &[Metric], opts: &CompareOptions) -> Result<Table> {
    let mu = EmpiricalMeasure1D::new(a)?;
    let nu = EmpiricalMeasure1D::new(b)?;
    let mut t = Table::new(&["metric", "value", "note"]);
    let mut kl_l1 = None;
    for m in metrics {
        let (name, value, note) = match m {
            Metric::W2 => ("w2", wasserstein2_1d(&mu, &nu), "exact"),
            Metric::Bl => ("bl", bounded_lipschitz_distance(&mu, &nu, opts.resolution)?, "lower bound"),
            Metric::Kl | Metric::L1 => {
                let (kl, l1) = match kl_l1 {
                    Some(v) => v,
                    None => {
                        let v = kl_and_l1(&mu, &nu, opts.bins, opts.alpha)?;
                        kl_l1 = Some(v);
                        v
                    }
                };
                if *m == Metric::Kl {
                    ("kl", kl, "KL(a || b), smoothed histogram")
                } else {
                    ("l1", l1, "smoothed histogram")
                }
            }
        };
        t.push(vec![name.into(), value.into(), note.into()]);
    }
    Ok(t)
}
