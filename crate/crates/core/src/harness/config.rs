//! Experiment configuration files and per-kind parameter validation.
//!
//! A config file (TOML, or JSON when the extension is `.json`) looks like
//!
//! ```toml
//! name = "ladder"
//! kind = "convergence_scaling"
//! seed = 7
//! output_dir = "runs/ladder"   # optional, the CLI `--out` overrides it
//!
//! [parameters]
//! ladder = [100, 200, 400, 800]
//! ```
//!
//! Every key in `parameters` must be known to the kind and every value must
//! lie in its documented range; [`ExperimentConfig::validate`] checks all of
//! that before anything is computed or written.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::{Map, Value};

use crate::activation::ActivationKind;
use crate::error::{Error, Result};
use crate::network::{GradientMode, Xi};
use crate::pde::Scheme;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    SgdVsPde,
    ConvergenceScaling,
    Prop1Gap,
    HoeffdingTable,
    TheoreticalWeights,
    StaticsGrid,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::SgdVsPde => "sgd_vs_pde",
            ExperimentKind::ConvergenceScaling => "convergence_scaling",
            ExperimentKind::Prop1Gap => "prop1_gap",
            ExperimentKind::HoeffdingTable => "hoeffding_table",
            ExperimentKind::TheoreticalWeights => "theoretical_weights",
            ExperimentKind::StaticsGrid => "statics_grid",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub kind: ExperimentKind,
    #[serde(default)]
    pub parameters: Map<String, Value>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(name: impl Into<String>, kind: ExperimentKind, seed: u64) -> Self {
        Self {
            name: name.into(),
            kind,
            parameters: Map::new(),
            seed,
            output_dir: None,
        }
    }

    /// Sets one parameter; `value` is anything convertible to JSON.
    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.parameters.insert(key.to_string(), value.into());
        self
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(format!("invalid TOML config: {e}")))
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config(format!("invalid JSON config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))?;
        if path.extension().and_then(|e| e.to_str()) == Some("json") {
            Self::from_json_str(&text)
        } else {
            Self::from_toml_str(&text)
        }
    }

    /// Parses and range-checks the kind-specific parameters.
    pub fn validate(&self) -> Result<ExperimentParams> {
        if self.name.trim().is_empty() {
            return Err(Error::config("experiment name must not be empty"));
        }
        let p = &self.parameters;
        let params = match self.kind {
            ExperimentKind::SgdVsPde => ExperimentParams::SgdVsPde(parse(p)?),
            ExperimentKind::ConvergenceScaling => ExperimentParams::ConvergenceScaling(parse(p)?),
            ExperimentKind::Prop1Gap => ExperimentParams::Prop1Gap(parse(p)?),
            ExperimentKind::HoeffdingTable => ExperimentParams::HoeffdingTable(parse(p)?),
            ExperimentKind::TheoreticalWeights => ExperimentParams::TheoreticalWeights(parse(p)?),
            ExperimentKind::StaticsGrid => ExperimentParams::StaticsGrid(parse(p)?),
        };
        params.check().map_err(|e| match e {
            Error::InvalidParameter(m) => Error::config(format!("{}: {m}", self.kind.name())),
            other => other,
        })?;
        Ok(params)
    }
}

fn parse<T: DeserializeOwned>(p: &Map<String, Value>) -> Result<T> {
    serde_json::from_value(Value::Object(p.clone())).map_err(|e| Error::config(format!("invalid parameters: {e}")))
}

/// Accepts an activation either by name (`"relu"`) or as a full table.
fn de_activation<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<ActivationKind, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Spec {
        Name(String),
        Full(ActivationKind),
    }
    match Spec::deserialize(d)? {
        Spec::Name(n) => ActivationKind::from_name(&n).map_err(serde::de::Error::custom),
        Spec::Full(a) => Ok(a),
    }
}

/// Accepts `ξ` either in its CLI spelling (`"pow:-0.25"`) or as a table.
fn de_xi<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Xi, D::Error> {
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

#[derive(Clone, Debug, PartialEq)]
pub enum ExperimentParams {
    SgdVsPde(SgdVsPdeParams),
    ConvergenceScaling(ConvergenceParams),
    Prop1Gap(Prop1Params),
    HoeffdingTable(Table1Params),
    TheoreticalWeights(TheoreticalParams),
    StaticsGrid(StaticsGridParams),
}

impl ExperimentParams {
    pub fn check(&self) -> Result<()> {
        match self {
            ExperimentParams::SgdVsPde(p) => p.check(),
            ExperimentParams::ConvergenceScaling(p) => p.check(),
            ExperimentParams::Prop1Gap(p) => p.check(),
            ExperimentParams::HoeffdingTable(p) => p.check(),
            ExperimentParams::TheoreticalWeights(p) => p.check(),
            ExperimentParams::StaticsGrid(p) => p.check(),
        }
    }
}

fn delta_ok(delta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::invalid(format!("delta must lie in [0, 1], got {delta}")));
    }
    Ok(())
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::invalid(format!("{name} must be positive and finite, got {v}")));
    }
    Ok(())
}

fn non_negative(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v >= 0.0) {
        return Err(Error::invalid(format!("{name} must be >= 0 and finite, got {v}")));
    }
    Ok(())
}

fn at_least(name: &str, v: usize, min: usize) -> Result<()> {
    if v < min {
        return Err(Error::invalid(format!("{name} must be >= {min}, got {v}")));
    }
    Ok(())
}

fn level_ok(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v < 1.0) {
        return Err(Error::invalid(format!("{name} must lie in (0, 1), got {v}")));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PdeKindName {
    Piecewise2,
    Relu2,
    Joint3,
}

impl PdeKindName {
    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "piecewise2" => Ok(Self::Piecewise2),
            "relu2" => Ok(Self::Relu2),
            "joint3" => Ok(Self::Joint3),
            other => Err(Error::config(format!("unknown PDE kind `{other}` (expected piecewise2, relu2 or joint3)"))),
        }
    }
}

// ---- sgd_vs_pde -------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SgdVsPdeParams {
    /// `relu2` (four coordinates a, b, r1, r2) or `piecewise2` (radius only).
    pub pde_kind: PdeKindName,
    pub deltas: Vec<f64>,
    /// Network width.
    pub n: usize,
    pub epsilon: f64,
    #[serde(deserialize_with = "de_xi")]
    pub xi: Xi,
    pub dim: usize,
    /// Informative coordinates for the ReLU kind.
    pub s0: usize,
    pub j: usize,
    pub pde_dt: f64,
    /// Final time `t = kε`.
    pub t_end: f64,
    /// Comparison times (evenly spaced, including 0 and `t_end`).
    pub checkpoints: usize,
    #[serde(deserialize_with = "de_activation")]
    pub activation: ActivationKind,
}

impl Default for SgdVsPdeParams {
    fn default() -> Self {
        Self {
            pde_kind: PdeKindName::Relu2,
            deltas: vec![0.2, 0.4, 0.6, 0.8],
            n: 200,
            epsilon: 2e-4,
            xi: Xi::PowerLaw { exponent: -0.25 },
            dim: 252,
            s0: 120,
            j: 100,
            pde_dt: 1e-3,
            t_end: 0.5,
            checkpoints: 10,
            activation: ActivationKind::interpolated_step(),
        }
    }
}

impl SgdVsPdeParams {
    pub fn check(&self) -> Result<()> {
        if self.pde_kind == PdeKindName::Joint3 {
            return Err(Error::config(
                "sgd_vs_pde compares two-layer networks: pde_kind must be relu2 or piecewise2",
            ));
        }
        if self.deltas.is_empty() {
            return Err(Error::invalid("deltas must not be empty"));
        }
        for &d in &self.deltas {
            delta_ok(d)?;
        }
        at_least("n", self.n, 1)?;
        at_least("j", self.j, 1)?;
        at_least("dim", self.dim, 1)?;
        at_least("checkpoints", self.checkpoints, 1)?;
        positive("epsilon", self.epsilon)?;
        positive("pde_dt", self.pde_dt)?;
        non_negative("t_end", self.t_end)?;
        self.xi.validate()?;
        self.activation.validate()?;
        if self.pde_kind == PdeKindName::Relu2 && self.s0 > self.dim {
            return Err(Error::invalid(format!("s0 = {} exceeds dim = {}", self.s0, self.dim)));
        }
        if self.pde_kind == PdeKindName::Piecewise2 && self.activation == ActivationKind::Relu {
            return Err(Error::config(
                "activation mismatch: piecewise2 needs a bounded activation, use pde_kind = relu2 for ReLU",
            ));
        }
        Ok(())
    }
}

// ---- convergence_scaling ----------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConvergenceParams {
    #[serde(deserialize_with = "de_activation")]
    pub activation: ActivationKind,
    pub delta: f64,
    pub dim: usize,
    pub t_end: f64,
    pub ladder: Vec<usize>,
    /// `ε = epsilon_scale / N` unless `epsilons` is given.
    pub epsilon_scale: f64,
    pub epsilons: Option<Vec<f64>>,
    pub seeds_per_rung: usize,
    /// Quantile atoms of the PDE reference.
    pub j_ref: usize,
    pub pde_dt: f64,
    pub bootstrap: usize,
    pub ci_level: f64,
}

impl Default for ConvergenceParams {
    fn default() -> Self {
        Self {
            activation: ActivationKind::interpolated_step(),
            delta: 0.5,
            dim: 100,
            t_end: 0.2,
            ladder: vec![100, 200, 400, 800],
            epsilon_scale: 0.01,
            epsilons: None,
            seeds_per_rung: 10,
            j_ref: 1000,
            pde_dt: 1e-4,
            bootstrap: 2000,
            ci_level: 0.95,
        }
    }
}

impl ConvergenceParams {
    pub fn check(&self) -> Result<()> {
        delta_ok(self.delta)?;
        self.activation.validate()?;
        if self.activation == ActivationKind::Relu {
            return Err(Error::invalid("convergence_scaling uses the bounded radial model; relu is not supported"));
        }
        if self.ladder.len() < 3 {
            return Err(Error::invalid(format!("ladder needs at least 3 rungs, got {}", self.ladder.len())));
        }
        if self.ladder.contains(&0) {
            return Err(Error::invalid("ladder widths must be positive"));
        }
        at_least("dim", self.dim, 1)?;
        at_least("seeds_per_rung", self.seeds_per_rung, 1)?;
        at_least("j_ref", self.j_ref, 1)?;
        positive("t_end", self.t_end)?;
        positive("epsilon_scale", self.epsilon_scale)?;
        positive("pde_dt", self.pde_dt)?;
        level_ok("ci_level", self.ci_level)?;
        if let Some(eps) = &self.epsilons {
            if eps.len() != self.ladder.len() {
                return Err(Error::invalid("epsilons must have one entry per ladder rung"));
            }
            for &e in eps {
                positive("epsilon", e)?;
            }
        }
        Ok(())
    }

    pub fn epsilon_for(&self, rung: usize) -> f64 {
        match &self.epsilons {
            Some(eps) => eps[rung],
            None => self.epsilon_scale / self.ladder[rung] as f64,
        }
    }
}

// ---- prop1_gap --------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Prop1Params {
    #[serde(deserialize_with = "de_activation")]
    pub activation: ActivationKind,
    pub delta: f64,
    pub dim: usize,
    /// Atoms of the `ρ*` proxy.
    pub j_star: usize,
    pub pde_dt: f64,
    pub pde_steps: usize,
    pub ladder: Vec<usize>,
    pub resamples: usize,
    /// Use the atoms given here as `ρ*` instead of running the PDE.
    pub atoms: Option<Vec<f64>>,
}

impl Default for Prop1Params {
    fn default() -> Self {
        Self {
            activation: ActivationKind::interpolated_step(),
            delta: 0.5,
            dim: 100,
            j_star: 400,
            pde_dt: 1e-3,
            pde_steps: 5000,
            ladder: vec![25, 50, 100, 200, 400],
            resamples: 200,
            atoms: None,
        }
    }
}

impl Prop1Params {
    pub fn check(&self) -> Result<()> {
        delta_ok(self.delta)?;
        self.activation.validate()?;
        if self.activation == ActivationKind::Relu {
            return Err(Error::invalid("prop1_gap uses the bounded radial model; relu is not supported"));
        }
        if self.ladder.len() < 2 {
            return Err(Error::invalid(format!("ladder needs at least 2 rungs, got {}", self.ladder.len())));
        }
        if self.ladder.contains(&0) {
            return Err(Error::invalid("ladder widths must be positive"));
        }
        at_least("dim", self.dim, 1)?;
        at_least("j_star", self.j_star, 1)?;
        at_least("resamples", self.resamples, 2)?;
        positive("pde_dt", self.pde_dt)?;
        if let Some(a) = &self.atoms {
            if a.is_empty() || a.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
                return Err(Error::invalid("atoms must be a non-empty list of radii >= 0"));
            }
        }
        Ok(())
    }
}

// ---- hoeffding_table --------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Table1Row {
    /// Training samples (one pass).
    pub n_samples: usize,
    /// Off-diagonal covariance of the inputs.
    pub lambda: f64,
    /// Width of each of the two hidden layers.
    pub nodes: usize,
    pub dim: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PMethodName {
    Permutation,
    Table,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Table1Params {
    pub rows: Vec<Table1Row>,
    pub replicates: usize,
    pub delta: f64,
    #[serde(deserialize_with = "de_activation")]
    pub activation: ActivationKind,
    pub epsilon: f64,
    pub mode: GradientMode,
    pub p_method: PMethodName,
    pub permutations: usize,
    /// Break ties by a seeded jitter before testing.
    pub jitter: bool,
}

impl Default for Table1Params {
    fn default() -> Self {
        Self {
            rows: vec![
                Table1Row {
                    n_samples: 1000,
                    lambda: 0.01,
                    nodes: 50,
                    dim: 50,
                },
                Table1Row {
                    n_samples: 1000,
                    lambda: 0.001,
                    nodes: 100,
                    dim: 100,
                },
            ],
            replicates: 100,
            delta: 0.5,
            activation: ActivationKind::interpolated_step(),
            epsilon: 2e-4,
            mode: GradientMode::PaperLiteral,
            p_method: PMethodName::Permutation,
            permutations: 999,
            jitter: false,
        }
    }
}

impl Table1Params {
    pub fn check(&self) -> Result<()> {
        if self.rows.is_empty() {
            return Err(Error::invalid("at least one row is required"));
        }
        for (i, r) in self.rows.iter().enumerate() {
            if r.n_samples == 0 || r.nodes == 0 || r.dim == 0 {
                return Err(Error::invalid(format!("row {i}: n_samples, nodes and dim must be positive")));
            }
            if !(r.lambda.is_finite() && r.lambda >= 0.0) {
                return Err(Error::invalid(format!("row {i}: lambda must be >= 0, got {}", r.lambda)));
            }
            if r.lambda >= (1.0 + self.delta).powi(2) {
                return Err(Error::invalid(format!(
                    "row {i}: lambda must stay below the diagonal (1+delta)^2 for a positive-definite covariance"
                )));
            }
            if r.nodes * r.dim.min(r.nodes) < 5 {
                return Err(Error::invalid(format!("row {i}: fewer than 5 paired weights")));
            }
        }
        at_least("replicates", self.replicates, 1)?;
        delta_ok(self.delta)?;
        self.activation.validate()?;
        positive("epsilon", self.epsilon)?;
        if self.p_method == PMethodName::Permutation {
            at_least("permutations", self.permutations, 1)?;
        }
        Ok(())
    }
}

// ---- theoretical_weights ----------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TheoreticalParams {
    #[serde(deserialize_with = "de_activation")]
    pub activation: ActivationKind,
    pub delta: f64,
    pub dim: usize,
    pub j: usize,
    /// Training samples.
    pub n_samples: usize,
    /// Hidden width of both networks.
    pub hidden: usize,
    /// Off-diagonal covariance of the inputs and of the initial weight law.
    pub off_diag: f64,
    pub pde_dt: f64,
    pub pde_steps: usize,
    pub epsilon: f64,
    pub bins: usize,
    /// Persistence threshold of the mode count, relative to the density maximum.
    pub mode_threshold: f64,
}

impl Default for TheoreticalParams {
    fn default() -> Self {
        Self {
            activation: ActivationKind::interpolated_step(),
            delta: 0.8,
            dim: 250,
            j: 100,
            n_samples: 2000,
            hidden: 100,
            off_diag: 0.001,
            pde_dt: 1e-5,
            pde_steps: 100_000,
            epsilon: 2e-4,
            bins: 20,
            mode_threshold: 0.05,
        }
    }
}

impl TheoreticalParams {
    pub fn check(&self) -> Result<()> {
        delta_ok(self.delta)?;
        self.activation.validate()?;
        at_least("dim", self.dim, 1)?;
        at_least("j", self.j, 1)?;
        at_least("hidden", self.hidden, 1)?;
        at_least("bins", self.bins, 1)?;
        positive("pde_dt", self.pde_dt)?;
        positive("epsilon", self.epsilon)?;
        non_negative("off_diag", self.off_diag)?;
        level_ok("mode_threshold", self.mode_threshold)?;
        let weight_var = self.delta * self.delta / self.dim as f64;
        if self.off_diag >= weight_var && self.delta > 0.0 {
            return Err(Error::invalid(format!(
                "off_diag = {} must be below the initial weight variance delta^2/dim = {weight_var}",
                self.off_diag
            )));
        }
        if self.off_diag >= (1.0 + self.delta).powi(2) {
            return Err(Error::invalid("off_diag must be below the input variance (1+delta)^2"));
        }
        Ok(())
    }
}

// ---- statics_grid -----------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StaticsGridParams {
    pub delta: f64,
    #[serde(deserialize_with = "de_activation")]
    pub activation: ActivationKind,
    /// Grid of radii; when absent, `points` values evenly spaced on `[r_min, r_max]`.
    pub radii: Option<Vec<f64>>,
    pub r_min: f64,
    pub r_max: f64,
    pub points: usize,
    /// First-layer radius used for `v` and `u∞`.
    pub r1: f64,
}

impl Default for StaticsGridParams {
    fn default() -> Self {
        Self {
            delta: 0.5,
            activation: ActivationKind::interpolated_step(),
            radii: None,
            r_min: 0.0,
            r_max: 3.0,
            points: 61,
            r1: 1.0,
        }
    }
}

impl StaticsGridParams {
    pub fn check(&self) -> Result<()> {
        delta_ok(self.delta)?;
        self.activation.validate()?;
        non_negative("r1", self.r1)?;
        match &self.radii {
            Some(r) => {
                if r.is_empty() || r.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(Error::invalid("radii must be a non-empty list of values >= 0"));
                }
            }
            None => {
                non_negative("r_min", self.r_min)?;
                if !(self.r_max.is_finite() && self.r_max >= self.r_min) {
                    return Err(Error::invalid("r_max must be finite and >= r_min"));
                }
                at_least("points", self.points, 1)?;
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Vec<f64> {
        match &self.radii {
            Some(r) => r.clone(),
            None if self.points == 1 => vec![self.r_min],
            None => (0..self.points)
                .map(|i| self.r_min + (self.r_max - self.r_min) * i as f64 / (self.points - 1) as f64)
                .collect(),
        }
    }
}

// ---- standalone PDE runs (`simulate-pde`) -----------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitName {
    /// Independent draws of `‖N(0, (Δ²/d) I)‖`.
    Gaussian,
    /// Mid-quantiles of the same law (radial kind only).
    Quantiles,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PdeRunParams {
    pub delta: f64,
    #[serde(rename = "J", alias = "j")]
    pub j: usize,
    pub dt: f64,
    pub steps: usize,
    #[serde(deserialize_with = "de_xi")]
    pub xi: Xi,
    pub seed: u64,
    pub init: InitName,
    pub dim: usize,
    pub s0: usize,
    #[serde(deserialize_with = "de_activation")]
    pub activation: ActivationKind,
    pub record_every: usize,
    /// Steps at which the full particle state is written.
    pub checkpoints: Vec<usize>,
    /// Finite-difference step; analytic gradients when absent.
    pub fd_step: Option<f64>,
    pub scheme: Scheme,
}

impl Default for PdeRunParams {
    fn default() -> Self {
        Self {
            delta: 0.8,
            j: 100,
            dt: 1e-5,
            steps: 1000,
            xi: Xi::default(),
            seed: 0,
            init: InitName::Gaussian,
            dim: 250,
            s0: 120,
            activation: ActivationKind::interpolated_step(),
            record_every: 100,
            checkpoints: Vec::new(),
            fd_step: None,
            scheme: Scheme::Euler,
        }
    }
}

impl PdeRunParams {
    pub fn from_value(v: Value) -> Result<Self> {
        let p: Self = serde_json::from_value(v).map_err(|e| Error::config(format!("invalid PDE config: {e}")))?;
        p.check(None)?;
        Ok(p)
    }

    pub fn check(&self, kind: Option<PdeKindName>) -> Result<()> {
        delta_ok(self.delta).map_err(|e| Error::config(e.to_string()))?;
        let cfg = |m: String| Error::config(m);
        if self.j == 0 {
            return Err(cfg("J must be >= 1".into()));
        }
        if self.dim == 0 {
            return Err(cfg("dim must be >= 1".into()));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(cfg(format!("dt must be positive, got {}", self.dt)));
        }
        if self.record_every == 0 {
            return Err(cfg("record_every must be >= 1".into()));
        }
        if let Some(h) = self.fd_step {
            if !(h.is_finite() && h > 0.0) {
                return Err(cfg(format!("fd_step must be positive, got {h}")));
            }
        }
        self.xi.validate().map_err(|e| cfg(e.to_string()))?;
        self.activation.validate().map_err(|e| cfg(e.to_string()))?;
        if let Some(k) = self.checkpoints.iter().find(|&&k| k > self.steps) {
            return Err(cfg(format!("checkpoint {k} is beyond steps = {}", self.steps)));
        }
        if kind == Some(PdeKindName::Relu2) && self.s0 > self.dim {
            return Err(cfg(format!("s0 = {} exceeds dim = {}", self.s0, self.dim)));
        }
        if kind.is_some_and(|k| k != PdeKindName::Piecewise2) && self.init == InitName::Quantiles {
            return Err(cfg("init = quantiles is only defined for the piecewise2 kind".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_for_every_kind() {
        for kind in [
            ExperimentKind::SgdVsPde,
            ExperimentKind::ConvergenceScaling,
            ExperimentKind::Prop1Gap,
            ExperimentKind::HoeffdingTable,
            ExperimentKind::TheoreticalWeights,
            ExperimentKind::StaticsGrid,
        ] {
            ExperimentConfig::new("x", kind, 0).validate().unwrap();
        }
    }

    #[test]
    fn unknown_keys_are_config_errors() {
        let err = ExperimentConfig::new("x", ExperimentKind::Prop1Gap, 0)
            .with("bogus", 1)
            .validate()
            .unwrap_err();
        assert!(err.is_config(), "{err}");
    }

    #[test]
    fn short_ladder_is_rejected() {
        let err = ExperimentConfig::new("x", ExperimentKind::ConvergenceScaling, 0)
            .with("ladder", vec![100, 200])
            .validate()
            .unwrap_err();
        assert!(err.is_config());
    }

    #[test]
    fn toml_round_trip() {
        let text = r#"
name = "grid"
kind = "statics_grid"
seed = 3
[parameters]
delta = 0.8
activation = "relu"
points = 5
"#;
        let cfg = ExperimentConfig::from_toml_str(text).unwrap();
        match cfg.validate().unwrap() {
            ExperimentParams::StaticsGrid(p) => {
                assert_eq!(p.activation, ActivationKind::Relu);
                assert_eq!(p.grid().len(), 5);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn xi_accepts_cli_spelling() {
        let cfg = ExperimentConfig::new("x", ExperimentKind::SgdVsPde, 0).with("xi", "pow:-0.5");
        match cfg.validate().unwrap() {
            ExperimentParams::SgdVsPde(p) => assert_eq!(p.xi, Xi::PowerLaw { exponent: -0.5 }),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn activation_mismatch_is_a_config_error() {
        let err = ExperimentConfig::new("x", ExperimentKind::SgdVsPde, 0)
            .with("pde_kind", "piecewise2")
            .with("activation", "relu")
            .validate()
            .unwrap_err();
        assert!(err.is_config());
    }
}
