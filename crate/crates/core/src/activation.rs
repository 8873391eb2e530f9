//! Scalar activation functions.
//!
//! Every supported activation is piecewise linear, which lets the quadrature
//! code split Gaussian integrals exactly at the kinks. Derivatives follow a
//! fixed tie-breaking rule at kinks: ReLU takes slope 1 at 0, and the
//! interpolated step takes its interior slope on the closed interval
//! `[t1, t2]` (right derivative at `t1`, left derivative at `t2`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ActivationKind {
    /// `s1` below `t1`, `s2` above `t2`, linear in between.
    PiecewiseLinear { t1: f64, t2: f64, s1: f64, s2: f64 },
    Relu,
    Identity,
    /// Linear interpolation through `(x, y)` knots, constant outside.
    Custom { knots: Vec<(f64, f64)> },
}

impl Default for ActivationKind {
    fn default() -> Self {
        Self::interpolated_step()
    }
}

impl ActivationKind {
    /// The interpolated step used throughout the simulations:
    /// `t1 = 0.5, t2 = 1.5, s1 = -2.5, s2 = 7.5`.
    pub fn interpolated_step() -> Self {
        ActivationKind::PiecewiseLinear {
            t1: 0.5,
            t2: 1.5,
            s1: -2.5,
            s2: 7.5,
        }
    }

    /// Parses the CLI names `piecewise`, `relu`, `identity`.
    pub fn from_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "piecewise" | "piecewise_linear" | "interpolated" => Ok(Self::interpolated_step()),
            "relu" => Ok(ActivationKind::Relu),
            "identity" | "linear" => Ok(ActivationKind::Identity),
            other => Err(Error::invalid(format!("unknown activation `{other}`"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ActivationKind::PiecewiseLinear { .. } => "piecewise",
            ActivationKind::Relu => "relu",
            ActivationKind::Identity => "identity",
            ActivationKind::Custom { .. } => "custom",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ActivationKind::PiecewiseLinear { t1, t2, s1, s2 } => {
                if !(t1.is_finite() && t2.is_finite() && s1.is_finite() && s2.is_finite()) {
                    return Err(Error::invalid("piecewise-linear parameters must be finite"));
                }
                if t1 >= t2 {
                    return Err(Error::invalid(format!("piecewise-linear needs t1 < t2 (got {t1}, {t2})")));
                }
                if s1 > s2 {
                    return Err(Error::invalid(format!(
                        "piecewise-linear must be non-decreasing (s1 = {s1} > s2 = {s2})"
                    )));
                }
                Ok(())
            }
            ActivationKind::Custom { knots } => {
                if knots.len() < 2 {
                    return Err(Error::invalid("custom activation needs at least two knots"));
                }
                if knots.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
                    return Err(Error::invalid("custom activation knots must be finite"));
                }
                if knots.windows(2).any(|p| p[1].0 <= p[0].0) {
                    return Err(Error::invalid("custom activation knots must be strictly increasing in x"));
                }
                Ok(())
            }
            ActivationKind::Relu | ActivationKind::Identity => Ok(()),
        }
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            ActivationKind::PiecewiseLinear { t1, t2, s1, s2 } => {
                if t <= *t1 {
                    *s1
                } else if t >= *t2 {
                    *s2
                } else {
                    s1 + (t - t1) / (t2 - t1) * (s2 - s1)
                }
            }
            ActivationKind::Relu => t.max(0.0),
            ActivationKind::Identity => t,
            ActivationKind::Custom { knots } => {
                let first = knots[0];
                let last = knots[knots.len() - 1];
                if t <= first.0 {
                    return first.1;
                }
                if t >= last.0 {
                    return last.1;
                }
                let k = knots.partition_point(|&(x, _)| x <= t) - 1;
                let (x0, y0) = knots[k];
                let (x1, y1) = knots[k + 1];
                y0 + (t - x0) / (x1 - x0) * (y1 - y0)
            }
        }
    }

    #[inline]
    pub fn derivative(&self, t: f64) -> f64 {
        match self {
            ActivationKind::PiecewiseLinear { t1, t2, s1, s2 } => {
                if t >= *t1 && t <= *t2 {
                    (s2 - s1) / (t2 - t1)
                } else {
                    0.0
                }
            }
            ActivationKind::Relu => {
                if t >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ActivationKind::Identity => 1.0,
            ActivationKind::Custom { knots } => {
                let last = knots[knots.len() - 1];
                if t < knots[0].0 || t >= last.0 {
                    return 0.0;
                }
                let k = knots.partition_point(|&(x, _)| x <= t) - 1;
                let (x0, y0) = knots[k];
                let (x1, y1) = knots[k + 1];
                (y1 - y0) / (x1 - x0)
            }
        }
    }

    /// Points where the activation is not differentiable.
    pub fn kinks(&self) -> Vec<f64> {
        match self {
            ActivationKind::PiecewiseLinear { t1, t2, .. } => vec![*t1, *t2],
            ActivationKind::Relu => vec![0.0],
            ActivationKind::Identity => Vec::new(),
            ActivationKind::Custom { knots } => knots.iter().map(|k| k.0).collect(),
        }
    }

    /// Supremum of `|σ|` when finite.
    pub fn bound(&self) -> Option<f64> {
        match self {
            ActivationKind::PiecewiseLinear { s1, s2, .. } => Some(s1.abs().max(s2.abs())),
            ActivationKind::Custom { knots } => Some(knots.iter().fold(0.0_f64, |m, k| m.max(k.1.abs()))),
            ActivationKind::Relu | ActivationKind::Identity => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolated_step_midpoint() {
        let s = ActivationKind::interpolated_step();
        // s1 + (1.0 - 0.5)/(1.5 - 0.5) * (s2 - s1) = -2.5 + 0.5 * 10
        assert_eq!(s.eval(1.0), 2.5);
        assert_eq!(s.eval(0.0), -2.5);
        assert_eq!(s.eval(9.0), 7.5);
        assert_eq!(s.derivative(0.5), 10.0);
        assert_eq!(s.derivative(1.5), 10.0);
        assert_eq!(s.derivative(1.5 + 1e-12), 0.0);
        assert_eq!(s.derivative(0.5 - 1e-12), 0.0);
    }

    #[test]
    fn relu_subgradient_at_zero_is_one() {
        assert_eq!(ActivationKind::Relu.derivative(0.0), 1.0);
        assert_eq!(ActivationKind::Relu.derivative(-1e-300), 0.0);
    }

    #[test]
    fn custom_matches_piecewise() {
        let c = ActivationKind::Custom {
            knots: vec![(0.5, -2.5), (1.5, 7.5)],
        };
        let p = ActivationKind::interpolated_step();
        for i in 0..200 {
            let t = -3.0 + 0.037 * i as f64;
            assert!((c.eval(t) - p.eval(t)).abs() < 1e-12);
        }
        c.validate().unwrap();
    }

    #[test]
    fn rejects_bad_parameters() {
        let bad = ActivationKind::PiecewiseLinear {
            t1: 1.0,
            t2: 0.5,
            s1: 0.0,
            s2: 1.0,
        };
        assert!(bad.validate().is_err());
        let dec = ActivationKind::PiecewiseLinear {
            t1: 0.0,
            t2: 1.0,
            s1: 1.0,
            s2: 0.0,
        };
        assert!(dec.validate().is_err());
        assert!(ActivationKind::from_name("tanh").is_err());
    }
}
