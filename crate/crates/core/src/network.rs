//! Two- and three-layer mean-field networks trained by one-pass SGD.
//!
//! A unit computes `a · σ(⟨w, z⟩ + b)`. A two-layer network averages its
//! units: `ŷ(x) = (1/N) Σ_i a_i σ(⟨w_i, x⟩ + b_i)`. A three-layer network
//! feeds the vector `z = (a_i σ₁(⟨w_i, x⟩ + b_i))_i` of first-layer outputs
//! into a second layer and averages that: `ŷ = (1/N₂) Σ_m a_m σ₂(c⟨w_m, z⟩ + b_m)`,
//! where `c = 1` by default and `c = 1/N₁` when
//! [`NetworkParams::layer1_mean_field_scaling`] is set.
//!
//! SGD moves every unit of the output layer by `2 s_k (y - ŷ) ∇σ*`, i.e. the
//! per-unit gradient without the `1/N` averaging factor. For the first layer
//! of a three-layer network, [`GradientMode::PaperLiteral`] uses the gradient
//! of the unit's own output `∇z_i` with no chain factor through layer 2,
//! while [`GradientMode::FullBackprop`] uses `N₂ ∂ŷ/∂θ_i`, the same scaling as
//! the output layer applied to the true gradient.

use serde::{Deserialize, Serialize};

use crate::activation::ActivationKind;
use crate::data::LabeledSample;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitParams {
    pub a: f64,
    pub b: f64,
    pub w: Vec<f64>,
}

impl UnitParams {
    pub fn norm(&self) -> f64 {
        self.w.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Which parameter groups SGD is allowed to move.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trainable {
    pub a: bool,
    pub b: bool,
    pub w: bool,
}

impl Default for Trainable {
    fn default() -> Self {
        Self {
            a: true,
            b: true,
            w: true,
        }
    }
}

impl Trainable {
    pub fn weights_only() -> Self {
        Self {
            a: false,
            b: false,
            w: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    pub layer1: Vec<UnitParams>,
    /// Empty for a two-layer network.
    pub layer2: Vec<UnitParams>,
    pub activation1: ActivationKind,
    pub activation2: ActivationKind,
    #[serde(default)]
    pub layer1_mean_field_scaling: bool,
    #[serde(default)]
    pub trainable: Trainable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GradientMode {
    #[default]
    PaperLiteral,
    FullBackprop,
}

/// Step-size modulation `ξ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Xi {
    Constant { value: f64 },
    /// `ξ(t) = t^exponent`, exponent in `[-1, 0]`.
    PowerLaw { exponent: f64 },
}

impl Default for Xi {
    fn default() -> Self {
        Xi::Constant { value: 1.0 }
    }
}

impl Xi {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Xi::Constant { value } if value.is_finite() && value >= 0.0 => Ok(()),
            Xi::Constant { value } => Err(Error::invalid(format!("xi constant must be finite and >= 0, got {value}"))),
            Xi::PowerLaw { exponent } if (-1.0..=0.0).contains(&exponent) => Ok(()),
            Xi::PowerLaw { exponent } => Err(Error::invalid(format!("xi exponent must lie in [-1, 0], got {exponent}"))),
        }
    }

    /// `ξ(t)`. A negative power law diverges at 0, so callers evaluate it at
    /// `max(t, h)` with `h` their own time increment ([`Xi::eval_stepped`]).
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Xi::Constant { value } => value,
            Xi::PowerLaw { exponent } => {
                if exponent == 0.0 {
                    1.0
                } else {
                    t.powf(exponent)
                }
            }
        }
    }

    pub fn eval_stepped(&self, t: f64, h: f64) -> f64 {
        self.eval(t.max(h))
    }

    /// Parses `const`, `const:<c>`, `pow:<exponent>`.
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        let xi = if t == "const" || t == "constant" || t == "1" {
            Xi::Constant { value: 1.0 }
        } else if let Some(rest) = t.strip_prefix("const:") {
            Xi::Constant {
                value: rest.parse().map_err(|_| Error::invalid(format!("bad xi `{t}`")))?,
            }
        } else if let Some(rest) = t.strip_prefix("pow:") {
            Xi::PowerLaw {
                exponent: rest.parse().map_err(|_| Error::invalid(format!("bad xi `{t}`")))?,
            }
        } else {
            return Err(Error::invalid(format!("bad xi `{t}` (expected const, const:<c> or pow:<e>)")));
        };
        xi.validate()?;
        Ok(xi)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepSchedule {
    pub epsilon: f64,
    pub xi: Xi,
}

impl StepSchedule {
    pub fn constant(epsilon: f64) -> Self {
        Self {
            epsilon,
            xi: Xi::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::invalid(format!("epsilon must be > 0, got {}", self.epsilon)));
        }
        self.xi.validate()
    }

    /// `s_k = ε ξ(kε)`.
    pub fn step_size(&self, k: usize) -> f64 {
        self.epsilon * self.xi.eval_stepped(k as f64 * self.epsilon, self.epsilon)
    }
}

/// Gradient of a unit's parameters, same layout as [`UnitParams`].
#[derive(Clone, Debug, PartialEq)]
pub struct UnitGrad {
    pub a: f64,
    pub b: f64,
    pub w: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkGrad {
    pub layer1: Vec<UnitGrad>,
    pub layer2: Vec<UnitGrad>,
}

struct Forward {
    pre1: Vec<f64>,
    z: Vec<f64>,
    pre2: Vec<f64>,
    out_scale: f64,
    yhat: f64,
}

impl NetworkParams {
    /// Two-layer network with the given units.
    pub fn two_layer(units: Vec<UnitParams>, activation: ActivationKind) -> Self {
        Self {
            layer1: units,
            layer2: Vec::new(),
            activation1: activation.clone(),
            activation2: activation,
            layer1_mean_field_scaling: false,
            trainable: Trainable::default(),
        }
    }

    /// Default initialization: `w ~ N(0, (Δ²/d) I)`, `a = 1`, `b = 1`, i.i.d.
    /// across units of each layer. `widths = [n1]` or `[n1, n2]`.
    pub fn init_gaussian(
        input_dim: usize,
        widths: &[usize],
        delta: f64,
        activation1: ActivationKind,
        activation2: ActivationKind,
        seed: u64,
    ) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::invalid("input dimension must be positive"));
        }
        if widths.is_empty() || widths.len() > 2 || widths.contains(&0) {
            return Err(Error::invalid(format!("layer widths must be [n1] or [n1, n2] with positive entries, got {widths:?}")));
        }
        activation1.validate()?;
        activation2.validate()?;
        let mut rng1 = rng::substream(seed, 1);
        let sd1 = delta / (input_dim as f64).sqrt();
        let layer1 = (0..widths[0])
            .map(|_| UnitParams {
                a: 1.0,
                b: 1.0,
                w: rng::normal_vec(&mut rng1, input_dim).into_iter().map(|g| g * sd1).collect(),
            })
            .collect();
        let layer2 = if widths.len() == 2 {
            let mut rng2 = rng::substream(seed, 2);
            let sd2 = delta / (widths[0] as f64).sqrt();
            (0..widths[1])
                .map(|_| UnitParams {
                    a: 1.0,
                    b: 1.0,
                    w: rng::normal_vec(&mut rng2, widths[0]).into_iter().map(|g| g * sd2).collect(),
                })
                .collect()
        } else {
            Vec::new()
        };
        Ok(Self {
            layer1,
            layer2,
            activation1,
            activation2,
            layer1_mean_field_scaling: false,
            trainable: Trainable::default(),
        })
    }

    pub fn is_three_layer(&self) -> bool {
        !self.layer2.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.layer1.first().map_or(0, |u| u.w.len())
    }

    /// Units whose outputs are averaged into `ŷ`.
    pub fn output_layer(&self) -> &[UnitParams] {
        if self.is_three_layer() {
            &self.layer2
        } else {
            &self.layer1
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer1.is_empty() {
            return Err(Error::invalid("network needs at least one first-layer unit"));
        }
        self.activation1.validate()?;
        self.activation2.validate()?;
        let d = self.input_dim();
        for u in &self.layer1 {
            if u.w.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: u.w.len(),
                });
            }
        }
        for u in &self.layer2 {
            if u.w.len() != self.layer1.len() {
                return Err(Error::DimensionMismatch {
                    expected: self.layer1.len(),
                    got: u.w.len(),
                });
            }
        }
        Ok(())
    }

    fn layer2_scale(&self) -> f64 {
        if self.layer1_mean_field_scaling {
            1.0 / self.layer1.len() as f64
        } else {
            1.0
        }
    }

    fn forward(&self, x: &[f64]) -> Result<Forward> {
        let d = self.input_dim();
        if x.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: x.len() });
        }
        let pre1: Vec<f64> = self.layer1.iter().map(|u| dot(&u.w, x) + u.b).collect();
        if !self.is_three_layer() {
            let n = self.layer1.len() as f64;
            let yhat = self
                .layer1
                .iter()
                .zip(&pre1)
                .map(|(u, p)| u.a * self.activation1.eval(*p))
                .sum::<f64>()
                / n;
            return Ok(Forward {
                pre1,
                z: Vec::new(),
                pre2: Vec::new(),
                out_scale: 1.0 / n,
                yhat,
            });
        }
        let z: Vec<f64> = self
            .layer1
            .iter()
            .zip(&pre1)
            .map(|(u, p)| u.a * self.activation1.eval(*p))
            .collect();
        let c = self.layer2_scale();
        let pre2: Vec<f64> = self.layer2.iter().map(|u| c * dot(&u.w, &z) + u.b).collect();
        let n2 = self.layer2.len() as f64;
        let yhat = self
            .layer2
            .iter()
            .zip(&pre2)
            .map(|(u, p)| u.a * self.activation2.eval(*p))
            .sum::<f64>()
            / n2;
        Ok(Forward {
            pre1,
            z,
            pre2,
            out_scale: 1.0 / n2,
            yhat,
        })
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        Ok(self.forward(x)?.yhat)
    }

    /// Outputs of the output-layer units `σ*(x; θ_m)` (before averaging).
    pub fn output_unit_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        let f = self.forward(x)?;
        if self.is_three_layer() {
            Ok(self
                .layer2
                .iter()
                .zip(&f.pre2)
                .map(|(u, p)| u.a * self.activation2.eval(*p))
                .collect())
        } else {
            Ok(self
                .layer1
                .iter()
                .zip(&f.pre1)
                .map(|(u, p)| u.a * self.activation1.eval(*p))
                .collect())
        }
    }

    /// `∂ŷ/∂θ` for every unit.
    fn output_gradient(&self, x: &[f64], f: &Forward) -> NetworkGrad {
        let s = f.out_scale;
        if !self.is_three_layer() {
            let layer1 = self
                .layer1
                .iter()
                .zip(&f.pre1)
                .map(|(u, &p)| {
                    let dz = u.a * self.activation1.derivative(p) * s;
                    UnitGrad {
                        a: self.activation1.eval(p) * s,
                        b: dz,
                        w: x.iter().map(|v| v * dz).collect(),
                    }
                })
                .collect();
            return NetworkGrad {
                layer1,
                layer2: Vec::new(),
            };
        }
        let c = self.layer2_scale();
        let mut delta_z = vec![0.0; self.layer1.len()];
        let layer2: Vec<UnitGrad> = self
            .layer2
            .iter()
            .zip(&f.pre2)
            .map(|(u, &p)| {
                let dp = u.a * self.activation2.derivative(p) * s;
                for (dz, w) in delta_z.iter_mut().zip(&u.w) {
                    *dz += dp * c * w;
                }
                UnitGrad {
                    a: self.activation2.eval(p) * s,
                    b: dp,
                    w: f.z.iter().map(|z| dp * c * z).collect(),
                }
            })
            .collect();
        let layer1 = self
            .layer1
            .iter()
            .zip(&f.pre1)
            .zip(&delta_z)
            .map(|((u, &p), &dz)| {
                let dpre = dz * u.a * self.activation1.derivative(p);
                UnitGrad {
                    a: dz * self.activation1.eval(p),
                    b: dpre,
                    w: x.iter().map(|v| v * dpre).collect(),
                }
            })
            .collect();
        NetworkGrad { layer1, layer2 }
    }

    /// Gradient of the per-sample loss `(y - ŷ(x))²` with respect to every
    /// parameter (ordinary backpropagation).
    pub fn loss_gradient(&self, sample: &LabeledSample) -> Result<NetworkGrad> {
        let f = self.forward(&sample.x)?;
        let mut g = self.output_gradient(&sample.x, &f);
        let factor = -2.0 * (sample.y - f.yhat);
        for u in g.layer1.iter_mut().chain(g.layer2.iter_mut()) {
            u.a *= factor;
            u.b *= factor;
            u.w.iter_mut().for_each(|v| *v *= factor);
        }
        Ok(g)
    }

    /// Per-unit update directions `g` such that SGD applies
    /// `θ += 2 s_k (y - ŷ) g`. Returns `(ŷ, g)`.
    fn update_directions(&self, x: &[f64], mode: GradientMode) -> Result<(f64, NetworkGrad)> {
        let f = self.forward(x)?;
        let mut g = self.output_gradient(x, &f);
        let n_out = 1.0 / f.out_scale;
        for u in g.layer1.iter_mut().chain(g.layer2.iter_mut()) {
            u.a *= n_out;
            u.b *= n_out;
            u.w.iter_mut().for_each(|v| *v *= n_out);
        }
        if self.is_three_layer() && mode == GradientMode::PaperLiteral {
            // ∇ of the unit's own output a σ₁(⟨w, x⟩ + b), no chain through layer 2
            for ((grad, u), &p) in g.layer1.iter_mut().zip(&self.layer1).zip(&f.pre1) {
                let dpre = u.a * self.activation1.derivative(p);
                grad.a = self.activation1.eval(p);
                grad.b = dpre;
                for (gw, xv) in grad.w.iter_mut().zip(x) {
                    *gw = dpre * xv;
                }
            }
        }
        Ok((f.yhat, g))
    }

    pub fn for_each_unit_mut(&mut self, mut f: impl FnMut(&mut UnitParams)) {
        self.layer1.iter_mut().for_each(&mut f);
        self.layer2.iter_mut().for_each(&mut f);
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `(1/n) Σ (y_i - ŷ(x_i))²`.
pub fn finite_risk(params: &NetworkParams, data: &[LabeledSample]) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::invalid("finite_risk needs at least one sample"));
    }
    let mut acc = 0.0;
    for s in data {
        let r = s.y - params.predict(&s.x)?;
        acc += r * r;
    }
    Ok(acc / data.len() as f64)
}

/// Sample potentials on a fixed dataset: `R# = mean y²`,
/// `V̂_m = -mean(y σ*_m)`, `Û_{mm'} = mean(σ*_m σ*_m')` over output units.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplePotentials {
    pub r_sharp: f64,
    pub v: Vec<f64>,
    pub u: Vec<Vec<f64>>,
}

impl SamplePotentials {
    /// `R# + (2/N) Σ V̂ + (1/N²) Σ Σ Û`.
    pub fn risk(&self) -> f64 {
        let n = self.v.len() as f64;
        let v_sum: f64 = self.v.iter().sum();
        let u_sum: f64 = self.u.iter().flatten().sum();
        self.r_sharp + 2.0 * v_sum / n + u_sum / (n * n)
    }
}

pub fn sample_potentials(params: &NetworkParams, data: &[LabeledSample]) -> Result<SamplePotentials> {
    if data.is_empty() {
        return Err(Error::invalid("potentials need at least one sample"));
    }
    let n_out = params.output_layer().len();
    let mut v = vec![0.0; n_out];
    let mut u = vec![vec![0.0; n_out]; n_out];
    let mut r_sharp = 0.0;
    for s in data {
        let outs = params.output_unit_values(&s.x)?;
        r_sharp += s.y * s.y;
        for (m, om) in outs.iter().enumerate() {
            v[m] -= s.y * om;
            for (mp, omp) in outs.iter().enumerate() {
                u[m][mp] += om * omp;
            }
        }
    }
    let n = data.len() as f64;
    v.iter_mut().for_each(|x| *x /= n);
    u.iter_mut().flatten().for_each(|x| *x /= n);
    Ok(SamplePotentials {
        r_sharp: r_sharp / n,
        v,
        u,
    })
}

/// One SGD iteration `θ ← θ + 2 s_k (y_k - ŷ(x_k)) g`, see the module docs
/// for `g`. Frozen parameter groups are left untouched.
pub fn sgd_step(
    params: &NetworkParams,
    sample: &LabeledSample,
    k: usize,
    schedule: &StepSchedule,
    mode: GradientMode,
) -> Result<NetworkParams> {
    let mut next = params.clone();
    sgd_step_in_place(&mut next, sample, k, schedule, mode)?;
    Ok(next)
}

/// In-place variant of [`sgd_step`]; returns the residual `y - ŷ` before the update.
pub fn sgd_step_in_place(
    params: &mut NetworkParams,
    sample: &LabeledSample,
    k: usize,
    schedule: &StepSchedule,
    mode: GradientMode,
) -> Result<f64> {
    let (yhat, dirs) = params.update_directions(&sample.x, mode)?;
    let residual = sample.y - yhat;
    let coef = 2.0 * schedule.step_size(k) * residual;
    if coef == 0.0 {
        return Ok(residual);
    }
    let mask = params.trainable;
    let apply = |u: &mut UnitParams, g: &UnitGrad| {
        if mask.a {
            u.a += coef * g.a;
        }
        if mask.b {
            u.b += coef * g.b;
        }
        if mask.w {
            for (w, gw) in u.w.iter_mut().zip(&g.w) {
                *w += coef * gw;
            }
        }
    };
    for (u, g) in params.layer1.iter_mut().zip(&dirs.layer1) {
        apply(u, g);
    }
    for (u, g) in params.layer2.iter_mut().zip(&dirs.layer2) {
        apply(u, g);
    }
    Ok(residual)
}

/// Per-layer summary scalars recorded at a snapshot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerSummary {
    pub norms: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl LayerSummary {
    pub fn of(units: &[UnitParams]) -> Self {
        Self {
            norms: units.iter().map(UnitParams::norm).collect(),
            a: units.iter().map(|u| u.a).collect(),
            b: units.iter().map(|u| u.b).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub step: usize,
    /// Mean squared residual over the steps since the previous snapshot
    /// (`None` for the initialization).
    pub risk_estimate: Option<f64>,
    pub layers: Vec<LayerSummary>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingTrace {
    pub snapshots: Vec<Snapshot>,
    pub final_params: NetworkParams,
    pub steps: usize,
}

fn snapshot(params: &NetworkParams, step: usize, risk_estimate: Option<f64>) -> Snapshot {
    let mut layers = vec![LayerSummary::of(&params.layer1)];
    if params.is_three_layer() {
        layers.push(LayerSummary::of(&params.layer2));
    }
    Snapshot {
        step,
        risk_estimate,
        layers,
    }
}

/// Runs SGD over every sample the stream yields, each used once.
/// `snapshot_every = 0` records only the initialization and the final state.
pub fn train_one_pass<I>(
    init: &NetworkParams,
    stream: I,
    schedule: &StepSchedule,
    mode: GradientMode,
    snapshot_every: usize,
) -> Result<TrainingTrace>
where
    I: IntoIterator<Item = Result<LabeledSample>>,
{
    init.validate()?;
    schedule.validate()?;
    let mut params = init.clone();
    let mut snapshots = vec![snapshot(&params, 0, None)];
    let mut window_sq = 0.0;
    let mut window_n = 0usize;
    let mut k = 0usize;
    for sample in stream {
        let sample = sample?;
        let r = sgd_step_in_place(&mut params, &sample, k, schedule, mode)?;
        window_sq += r * r;
        window_n += 1;
        k += 1;
        if snapshot_every > 0 && k.is_multiple_of(snapshot_every) {
            snapshots.push(snapshot(&params, k, Some(window_sq / window_n as f64)));
            window_sq = 0.0;
            window_n = 0;
        }
    }
    if k > 0 && snapshots.last().map(|s| s.step) != Some(k) {
        let est = (window_n > 0).then(|| window_sq / window_n as f64);
        snapshots.push(snapshot(&params, k, est));
    }
    Ok(TrainingTrace {
        snapshots,
        final_params: params,
        steps: k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{sample_isotropic, GaussianMixtureSpec};

    fn unit(a: f64, b: f64, w: Vec<f64>) -> UnitParams {
        UnitParams { a, b, w }
    }

    #[test]
    fn zero_output_scales_predict_zero() {
        let mut p = NetworkParams::init_gaussian(4, &[3, 5], 0.5, ActivationKind::Relu, ActivationKind::Relu, 1).unwrap();
        p.layer2.iter_mut().for_each(|u| u.a = 0.0);
        assert_eq!(p.predict(&[1.0, -2.0, 0.5, 3.0]).unwrap(), 0.0);
    }

    #[test]
    fn single_relu_unit() {
        let p = NetworkParams::two_layer(vec![unit(1.0, 0.0, vec![1.0, 0.0, 0.0])], ActivationKind::Relu);
        assert_eq!(p.predict(&[2.0, 0.0, 0.0]).unwrap(), 2.0);
    }

    #[test]
    fn interpolated_unit_value() {
        let p = NetworkParams::two_layer(vec![unit(1.0, 0.0, vec![0.5, 0.5])], ActivationKind::interpolated_step());
        assert_eq!(p.predict(&[1.0, 1.0]).unwrap(), 2.5);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let p = NetworkParams::two_layer(vec![unit(1.0, 0.0, vec![1.0, 0.0])], ActivationKind::Relu);
        assert!(matches!(p.predict(&[1.0]), Err(Error::DimensionMismatch { expected: 2, got: 1 })));
    }

    #[test]
    fn relu_bias_step_with_right_subgradient() {
        // y = 1, ŷ = 0, a = 1, b = 0, w = 0, x = e1, s = 0.5 → b = 1
        let p = NetworkParams::two_layer(vec![unit(1.0, 0.0, vec![0.0, 0.0])], ActivationKind::Relu);
        let s = LabeledSample { x: vec![1.0, 0.0], y: 1.0 };
        let next = sgd_step(&p, &s, 0, &StepSchedule::constant(0.5), GradientMode::PaperLiteral).unwrap();
        assert_eq!(next.layer1[0].b, 1.0);
        assert_eq!(next.layer1[0].a, 1.0);
        assert_eq!(next.layer1[0].w, vec![1.0, 0.0]);
    }

    #[test]
    fn zero_residual_leaves_params() {
        let p = NetworkParams::init_gaussian(3, &[4], 0.8, ActivationKind::Relu, ActivationKind::Relu, 2).unwrap();
        let x = vec![0.3, -0.1, 0.7];
        let y = p.predict(&x).unwrap();
        let next = sgd_step(&p, &LabeledSample { x, y }, 3, &StepSchedule::constant(0.1), GradientMode::FullBackprop).unwrap();
        assert_eq!(next, p);
    }

    #[test]
    fn zero_xi_leaves_params() {
        let p = NetworkParams::init_gaussian(3, &[4, 2], 0.8, ActivationKind::Relu, ActivationKind::Relu, 2).unwrap();
        let sched = StepSchedule {
            epsilon: 0.1,
            xi: Xi::Constant { value: 0.0 },
        };
        let s = LabeledSample { x: vec![1.0, 2.0, 3.0], y: 5.0 };
        assert_eq!(sgd_step(&p, &s, 0, &sched, GradientMode::PaperLiteral).unwrap(), p);
    }

    #[test]
    fn modes_coincide_for_two_layer() {
        let p = NetworkParams::init_gaussian(5, &[6], 0.8, ActivationKind::interpolated_step(), ActivationKind::interpolated_step(), 4).unwrap();
        let data = sample_isotropic(&GaussianMixtureSpec::isotropic(0.5, 5), 8, 20).unwrap();
        let sched = StepSchedule::constant(0.01);
        let mut a = p.clone();
        let mut b = p.clone();
        for (k, s) in data.iter().enumerate() {
            sgd_step_in_place(&mut a, s, k, &sched, GradientMode::PaperLiteral).unwrap();
            sgd_step_in_place(&mut b, s, k, &sched, GradientMode::FullBackprop).unwrap();
        }
        assert_eq!(a, b);
    }

    #[test]
    fn frozen_groups_do_not_move() {
        let mut p = NetworkParams::init_gaussian(3, &[4], 0.8, ActivationKind::Identity, ActivationKind::Identity, 5).unwrap();
        p.trainable = Trainable::weights_only();
        let s = LabeledSample { x: vec![1.0, 2.0, 3.0], y: 5.0 };
        let next = sgd_step(&p, &s, 0, &StepSchedule::constant(0.1), GradientMode::PaperLiteral).unwrap();
        for (u, v) in p.layer1.iter().zip(&next.layer1) {
            assert_eq!(u.a, v.a);
            assert_eq!(u.b, v.b);
            assert_ne!(u.w, v.w);
        }
    }

    #[test]
    fn zero_steps_keep_only_init() {
        let p = NetworkParams::init_gaussian(3, &[4], 0.8, ActivationKind::Relu, ActivationKind::Relu, 5).unwrap();
        let trace = train_one_pass(&p, std::iter::empty(), &StepSchedule::constant(0.1), GradientMode::PaperLiteral, 10).unwrap();
        assert_eq!(trace.snapshots.len(), 1);
        assert_eq!(trace.snapshots[0].step, 0);
        assert_eq!(trace.final_params, p);
    }

    #[test]
    fn risk_of_zero_predictor_is_mean_y_squared() {
        let mut p = NetworkParams::init_gaussian(3, &[2], 0.8, ActivationKind::Relu, ActivationKind::Relu, 5).unwrap();
        p.layer1.iter_mut().for_each(|u| u.a = 0.0);
        let data = vec![
            LabeledSample { x: vec![0.0; 3], y: 1.0 },
            LabeledSample { x: vec![1.0; 3], y: 0.0 },
            LabeledSample { x: vec![2.0; 3], y: -3.0 },
        ];
        assert_eq!(finite_risk(&p, &data).unwrap(), 10.0 / 3.0);
        assert!(finite_risk(&p, &[]).is_err());
    }

    #[test]
    fn xi_parsing() {
        assert_eq!(Xi::parse("const").unwrap(), Xi::Constant { value: 1.0 });
        assert_eq!(Xi::parse("pow:-0.25").unwrap(), Xi::PowerLaw { exponent: -0.25 });
        assert!(Xi::parse("pow:0.5").is_err());
        assert!(Xi::parse("exp").is_err());
        let s = StepSchedule {
            epsilon: 2e-4,
            xi: Xi::PowerLaw { exponent: -0.25 },
        };
        // k = 0 is evaluated at t = ε
        assert_eq!(s.step_size(0), s.step_size(1));
        assert!(s.step_size(10) < s.step_size(1));
    }
}
