//! Synthetic two-class Gaussian data.
//!
//! Two laws are provided:
//!
//! * the centered isotropic mixture: with probability 1/2 the label is the
//!   first label value and `x ~ N(0, (1+Δ)² I)`, otherwise the second label
//!   value and `x ~ N(0, (1-Δ)² I)`. When `informative_dims = Some(s0)` only
//!   the first `s0` coordinates carry the class scale and the rest are
//!   standard normal (the layout used for the ReLU experiments);
//! * the correlated law used for the independence simulations: labels are
//!   fair coin flips independent of `x ~ N(0, Σ)`, `Σ_ii = (1+Δ)²`,
//!   `Σ_ij = λ`.

use nalgebra::{Cholesky, DMatrix};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, StreamRng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixtureSpec {
    pub delta: f64,
    pub dim: usize,
    /// `(first, second)` label values.
    pub label_values: (f64, f64),
    pub off_diag: f64,
    #[serde(default)]
    pub informative_dims: Option<usize>,
}

impl GaussianMixtureSpec {
    /// Isotropic mixture with labels `(+1, -1)`.
    pub fn isotropic(delta: f64, dim: usize) -> Self {
        Self {
            delta,
            dim,
            label_values: (1.0, -1.0),
            off_diag: 0.0,
            informative_dims: None,
        }
    }

    /// Correlated law with labels `(1, 0)`.
    pub fn correlated(delta: f64, dim: usize, off_diag: f64) -> Self {
        Self {
            delta,
            dim,
            label_values: (1.0, 0.0),
            off_diag,
            informative_dims: None,
        }
    }

    pub fn with_informative_dims(mut self, s0: usize) -> Self {
        self.informative_dims = Some(s0);
        self
    }

    pub fn tau_plus(&self) -> f64 {
        1.0 + self.delta
    }

    pub fn tau_minus(&self) -> f64 {
        1.0 - self.delta
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(Error::invalid(format!("delta must lie in [0, 1], got {}", self.delta)));
        }
        if self.dim == 0 {
            return Err(Error::invalid("dimension must be positive"));
        }
        if !self.off_diag.is_finite() || self.off_diag < 0.0 {
            return Err(Error::invalid(format!("off_diag must be finite and >= 0, got {}", self.off_diag)));
        }
        if let Some(s0) = self.informative_dims {
            if s0 > self.dim {
                return Err(Error::invalid(format!("informative_dims {s0} exceeds dim {}", self.dim)));
            }
        }
        Ok(())
    }

    /// Dense covariance of the correlated law.
    pub fn correlated_covariance(&self) -> DMatrix<f64> {
        let d = self.dim;
        let diag = self.tau_plus().powi(2);
        DMatrix::from_fn(d, d, |i, j| if i == j { diag } else { self.off_diag })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub x: Vec<f64>,
    pub y: f64,
}

/// Infinite i.i.d. stream from the isotropic law.
pub struct IsotropicStream {
    spec: GaussianMixtureSpec,
    rng: StreamRng,
}

impl IsotropicStream {
    pub fn new(spec: &GaussianMixtureSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        if spec.off_diag != 0.0 {
            return Err(Error::invalid(
                "isotropic sampler requires off_diag = 0; use the correlated sampler",
            ));
        }
        Ok(Self {
            spec: spec.clone(),
            rng: rng::from_seed(seed),
        })
    }

    pub fn draw(&mut self) -> LabeledSample {
        let first = self.rng.random_bool(0.5);
        let (y, scale) = if first {
            (self.spec.label_values.0, self.spec.tau_plus())
        } else {
            (self.spec.label_values.1, self.spec.tau_minus())
        };
        let s0 = self.spec.informative_dims.unwrap_or(self.spec.dim);
        let x = (0..self.spec.dim)
            .map(|i| {
                let g = rng::normal(&mut self.rng);
                if i < s0 {
                    scale * g
                } else {
                    g
                }
            })
            .collect();
        LabeledSample { x, y }
    }
}

impl Iterator for IsotropicStream {
    type Item = LabeledSample;

    fn next(&mut self) -> Option<LabeledSample> {
        Some(self.draw())
    }
}

/// Infinite i.i.d. stream from the correlated law.
pub struct CorrelatedStream {
    labels: (f64, f64),
    factor: DMatrix<f64>,
    rng: StreamRng,
    scratch: Vec<f64>,
}

impl CorrelatedStream {
    pub fn new(spec: &GaussianMixtureSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let chol = Cholesky::new(spec.correlated_covariance()).ok_or(Error::NotPositiveDefinite)?;
        Ok(Self {
            labels: spec.label_values,
            factor: chol.l(),
            rng: rng::from_seed(seed),
            scratch: vec![0.0; spec.dim],
        })
    }

    pub fn draw(&mut self) -> LabeledSample {
        let y = if self.rng.random_bool(0.5) {
            self.labels.0
        } else {
            self.labels.1
        };
        let d = self.scratch.len();
        for g in self.scratch.iter_mut() {
            *g = rng::normal(&mut self.rng);
        }
        let mut x = vec![0.0; d];
        // lower-triangular product L g
        for (i, xi) in x.iter_mut().enumerate() {
            let mut acc = 0.0;
            for j in 0..=i {
                acc += self.factor[(i, j)] * self.scratch[j];
            }
            *xi = acc;
        }
        LabeledSample { x, y }
    }
}

impl Iterator for CorrelatedStream {
    type Item = LabeledSample;

    fn next(&mut self) -> Option<LabeledSample> {
        Some(self.draw())
    }
}

pub fn sample_isotropic(spec: &GaussianMixtureSpec, seed: u64, count: usize) -> Result<Vec<LabeledSample>> {
    if count == 0 {
        return Err(Error::invalid("count must be at least 1"));
    }
    Ok(IsotropicStream::new(spec, seed)?.take(count).collect())
}

pub fn sample_correlated(spec: &GaussianMixtureSpec, seed: u64, count: usize) -> Result<Vec<LabeledSample>> {
    if count == 0 {
        return Err(Error::invalid("count must be at least 1"));
    }
    Ok(CorrelatedStream::new(spec, seed)?.take(count).collect())
}

/// Samples with whichever law the spec describes (`off_diag = 0` → isotropic).
pub fn sample_auto(spec: &GaussianMixtureSpec, seed: u64, count: usize) -> Result<Vec<LabeledSample>> {
    if spec.off_diag == 0.0 {
        sample_isotropic(spec, seed, count)
    } else {
        sample_correlated(spec, seed, count)
    }
}

/// Writes samples as CSV with header `y,x1,...,xd`; floats use the shortest
/// round-trip representation.
pub fn write_csv<W: std::io::Write>(mut out: W, samples: &[LabeledSample]) -> Result<()> {
    let d = samples.first().map_or(0, |s| s.x.len());
    let mut header = String::from("y");
    for i in 1..=d {
        header.push_str(&format!(",x{i}"));
    }
    writeln!(out, "{header}")?;
    let mut line = String::new();
    for s in samples {
        line.clear();
        line.push_str(&format!("{}", s.y));
        for v in &s.x {
            line.push(',');
            line.push_str(&format!("{v}"));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn read_csv(text: &str) -> Result<Vec<LabeledSample>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty data file".into()))?;
    if !header.starts_with('y') {
        return Err(Error::Parse("data header must start with `y`".into()));
    }
    let mut out = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let vals: std::result::Result<Vec<f64>, _> = line.split(',').map(|t| t.trim().parse::<f64>()).collect();
        let vals = vals.map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 2)))?;
        out.push(LabeledSample {
            y: vals[0],
            x: vals[1..].to_vec(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn class_var(samples: &[LabeledSample], label: f64, coord: usize) -> (f64, usize) {
        let vals: Vec<f64> = samples.iter().filter(|s| s.y == label).map(|s| s.x[coord]).collect();
        let n = vals.len() as f64;
        (vals.iter().map(|v| v * v).sum::<f64>() / n, vals.len())
    }

    #[test]
    fn delta_zero_classes_share_unit_variance() {
        let spec = GaussianMixtureSpec::isotropic(0.0, 5);
        let s = sample_isotropic(&spec, 3, 20_000).unwrap();
        let mean_sq: f64 = s.iter().map(|s| s.x.iter().map(|v| v * v).sum::<f64>() / 5.0).sum::<f64>() / 20_000.0;
        // sd of the mean of ||x||^2/d is sqrt(2/(5*20000)) = 0.0045
        assert!((mean_sq - 1.0).abs() < 0.02, "{mean_sq}");
    }

    #[test]
    fn per_class_variance_matches_scales() {
        // Δ = 0.8, d = 250, count = 2000
        let spec = GaussianMixtureSpec::isotropic(0.8, 250);
        let s = sample_isotropic(&spec, 11, 2000).unwrap();
        for (label, tau) in [(1.0, 1.8_f64), (-1.0, 0.2_f64)] {
            let (v, n) = class_var(&s, label, 0);
            let target = tau * tau;
            let se = target * (2.0 / n as f64).sqrt();
            assert!((v - target).abs() < 3.0 * se, "label {label}: {v} vs {target} ± {se}");
        }
    }

    #[test]
    fn streams_are_reproducible() {
        let spec = GaussianMixtureSpec::isotropic(0.5, 7);
        let a = sample_isotropic(&spec, 42, 100).unwrap();
        let b = sample_isotropic(&spec, 42, 100).unwrap();
        let mut ba = Vec::new();
        let mut bb = Vec::new();
        write_csv(&mut ba, &a).unwrap();
        write_csv(&mut bb, &b).unwrap();
        assert_eq!(ba, bb);
        let c = sample_isotropic(&spec, 43, 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn isotropic_rejects_off_diagonal() {
        let spec = GaussianMixtureSpec::correlated(0.5, 3, 0.01);
        assert!(sample_isotropic(&spec, 1, 10).is_err());
        assert!(sample_isotropic(&GaussianMixtureSpec::isotropic(0.5, 3), 1, 0).is_err());
    }

    #[test]
    fn two_by_two_covariance_factorizes() {
        // Σ = [[4, 0.001], [0.001, 4]] has eigenvalues 4 ± 0.001
        let spec = GaussianMixtureSpec::correlated(1.0, 2, 0.001);
        let cov = spec.correlated_covariance();
        assert_eq!(cov[(0, 0)], 4.0);
        assert_eq!(cov[(0, 1)], 0.001);
        assert!(sample_correlated(&spec, 9, 10).is_ok());
    }

    #[test]
    fn non_pd_covariance_fails() {
        // off-diagonal larger than the diagonal with d = 3 is indefinite
        let spec = GaussianMixtureSpec::correlated(0.0, 3, 5.0);
        assert!(matches!(sample_correlated(&spec, 1, 5), Err(Error::NotPositiveDefinite)));
    }

    #[test]
    fn correlated_off_diagonal_covariance() {
        // N = 1000, λ = 0.01, d = 50; average the 1225 off-diagonal sample
        // covariances. Each has sd ≈ (1+Δ)² / sqrt(N); averaging over pairs
        // sharing coordinates keeps the sd below (1+Δ)²·sqrt(2)/N^(1/2)/sqrt(d/2).
        let spec = GaussianMixtureSpec::correlated(0.5, 50, 0.01);
        let s = sample_correlated(&spec, 5, 1000).unwrap();
        let n = s.len() as f64;
        let mut acc = 0.0;
        let mut pairs = 0.0;
        for i in 0..50 {
            for j in (i + 1)..50 {
                acc += s.iter().map(|v| v.x[i] * v.x[j]).sum::<f64>() / n;
                pairs += 1.0;
            }
        }
        let mean_cov = acc / pairs;
        let se = 2.25 / n.sqrt() / (25.0_f64).sqrt();
        assert!((mean_cov - 0.01).abs() < 3.0 * se, "{mean_cov} ± {se}");
        let ones = s.iter().filter(|v| v.y == 1.0).count() as f64;
        assert!((ones / n - 0.5).abs() < 4.0 * (0.25 / n).sqrt());
    }

    #[test]
    fn diagonal_law_has_vanishing_correlations() {
        let spec = GaussianMixtureSpec::correlated(0.5, 4, 0.0);
        let s = sample_correlated(&spec, 21, 20_000).unwrap();
        let n = s.len() as f64;
        let c01 = s.iter().map(|v| v.x[0] * v.x[1]).sum::<f64>() / n / 2.25;
        assert!(c01.abs() < 4.0 / n.sqrt(), "{c01}");
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let spec = GaussianMixtureSpec::isotropic(0.3, 4);
        let s = sample_isotropic(&spec, 2, 25).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &s).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("y,x1,x2,x3,x4\n"));
        assert_eq!(read_csv(&text).unwrap(), s);
    }
}
