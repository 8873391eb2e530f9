//! Distances between one-dimensional empirical measures.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weighted atoms on the real line, sorted by location.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMeasure1D {
    values: Vec<f64>,
    weights: Vec<f64>,
}

impl EmpiricalMeasure1D {
    /// Uniform weights `1/n`.
    pub fn new(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("empirical measure needs at least one value"));
        }
        let w = 1.0 / values.len() as f64;
        Self::with_weights(values, &vec![w; values.len()])
    }

    pub fn with_weights(values: &[f64], weights: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("empirical measure needs at least one value"));
        }
        if values.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: values.len(),
                got: weights.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) || weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::invalid("values must be finite and weights nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("weights sum to {total}, expected 1")));
        }
        let mut pairs: Vec<(f64, f64)> = values.iter().copied().zip(weights.iter().copied()).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self {
            values: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1 / total).collect(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    pub fn shifted(&self, c: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v + c).collect(),
            weights: self.weights.clone(),
        }
    }
}

/// Exact `W₂` through the monotone (quantile) coupling.
pub fn wasserstein2_1d(mu: &EmpiricalMeasure1D, nu: &EmpiricalMeasure1D) -> f64 {
    if mu.len() == nu.len() && mu.weights.iter().chain(&nu.weights).all(|&w| w == mu.weights[0]) {
        let s: f64 = mu.values.iter().zip(&nu.values).map(|(x, y)| (x - y) * (x - y)).sum();
        return (s / mu.len() as f64).sqrt();
    }
    // walk both quantile functions over the merged cumulative weights
    let (mut i, mut j) = (0, 0);
    let (mut ri, mut rj) = (mu.weights[0], nu.weights[0]);
    let mut acc = 0.0;
    loop {
        let step = ri.min(rj);
        let d = mu.values[i] - nu.values[j];
        acc += step * d * d;
        ri -= step;
        rj -= step;
        if ri <= 1e-15 {
            i += 1;
            if i == mu.len() {
                break;
            }
            ri += mu.weights[i];
        }
        if rj <= 1e-15 {
            j += 1;
            if j == nu.len() {
                break;
            }
            rj += nu.weights[j];
        }
    }
    acc.max(0.0).sqrt()
}

/// Lower bound on the bounded-Lipschitz distance.
///
/// Maximizes `∫ f d(μ - ν)` over functions with `|f| <= 1` and Lipschitz
/// constant 1, restricted to the union of the two supports and to values on
/// a grid of `resolution + 1` levels in `[-1, 1]`. Every such `f` extends to a
/// feasible witness on the whole line, so the result never exceeds `d_BL`.
pub fn bounded_lipschitz_distance(mu: &EmpiricalMeasure1D, nu: &EmpiricalMeasure1D, resolution: usize) -> Result<f64> {
    if resolution < 2 {
        return Err(Error::invalid("witness grid resolution must be >= 2"));
    }
    let mut pts: Vec<(f64, f64)> = mu
        .values
        .iter()
        .zip(&mu.weights)
        .map(|(v, w)| (*v, *w))
        .chain(nu.values.iter().zip(&nu.weights).map(|(v, w)| (*v, -*w)))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut support: Vec<(f64, f64)> = Vec::new();
    for (x, m) in pts {
        match support.last_mut() {
            Some(last) if last.0 == x => last.1 += m,
            _ => support.push((x, m)),
        }
    }
    let levels = resolution + 1;
    let step = 2.0 / resolution as f64;
    let level_value = |l: usize| -1.0 + l as f64 * step;
    let mut best: Vec<f64> = (0..levels).map(|l| level_value(l) * support[0].1).collect();
    let mut next = vec![0.0; levels];
    let mut deque: std::collections::VecDeque<usize> = std::collections::VecDeque::new();
    for k in 1..support.len() {
        let gap = support[k].0 - support[k - 1].0;
        let reach = ((gap / step) + 1e-9).floor().min(levels as f64) as usize;
        // sliding-window maximum of `best` over [l - reach, l + reach]
        deque.clear();
        let mut hi = 0;
        for l in 0..levels {
            let right = (l + reach).min(levels - 1);
            while hi <= right {
                while deque.back().is_some_and(|&b| best[b] <= best[hi]) {
                    deque.pop_back();
                }
                deque.push_back(hi);
                hi += 1;
            }
            while deque.front().is_some_and(|&f| f + reach < l) {
                deque.pop_front();
            }
            next[l] = best[deque[0]] + level_value(l) * support[k].1;
        }
        std::mem::swap(&mut best, &mut next);
    }
    let v = best.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(v.max(0.0))
}

/// `(KL(μ‖ν), Σ|p_i - q_i|)` on a shared histogram.
///
/// `bins` equal-width bins cover the union range; each histogram's counts
/// (mass times sample size) get `alpha` added before normalizing.
pub fn kl_and_l1(mu: &EmpiricalMeasure1D, nu: &EmpiricalMeasure1D, bins: usize, alpha: f64) -> Result<(f64, f64)> {
    if bins == 0 {
        return Err(Error::invalid("histogram needs at least one bin"));
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::invalid(format!("smoothing alpha must be > 0, got {alpha}")));
    }
    let lo = mu.values[0].min(nu.values[0]);
    let hi = mu.values[mu.len() - 1].max(nu.values[nu.len() - 1]);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let hist = |m: &EmpiricalMeasure1D| -> Vec<f64> {
        let mut h = vec![alpha; bins];
        let n = m.len() as f64;
        for (v, w) in m.values.iter().zip(&m.weights) {
            let b = (((v - lo) / width) as usize).min(bins - 1);
            h[b] += w * n;
        }
        let total: f64 = h.iter().sum();
        h.iter_mut().for_each(|x| *x /= total);
        h
    };
    let p = hist(mu);
    let q = hist(nu);
    let kl = p.iter().zip(&q).map(|(a, b)| a * (a / b).ln()).sum::<f64>().max(0.0);
    let l1 = p.iter().zip(&q).map(|(a, b)| (a - b).abs()).sum();
    Ok((kl, l1))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(v: &[f64]) -> EmpiricalMeasure1D {
        EmpiricalMeasure1D::new(v).unwrap()
    }

    #[test]
    fn w2_small_cases() {
        assert_eq!(wasserstein2_1d(&m(&[0.0, 1.0]), &m(&[1.0, 2.0])), 1.0);
        assert_eq!(wasserstein2_1d(&m(&[3.0, -1.0, 2.0]), &m(&[2.0, 3.0, -1.0])), 0.0);
        let a = m(&[0.3, -1.2, 4.0]);
        assert!((wasserstein2_1d(&a, &a.shifted(2.5)) - 2.5).abs() < 1e-14);
    }

    #[test]
    fn w2_unequal_sizes() {
        // {0, 1} vs {0.5}: each atom moves 0.5
        assert!((wasserstein2_1d(&m(&[0.0, 1.0]), &m(&[0.5])) - 0.5).abs() < 1e-15);
        let w = EmpiricalMeasure1D::with_weights(&[0.0, 2.0], &[0.25, 0.75]).unwrap();
        // quantile coupling against {0, 1, 2, 3}: (0,0) (2,1) (2,2) (2,3)
        let v = wasserstein2_1d(&w, &m(&[0.0, 1.0, 2.0, 3.0]));
        assert!((v - (0.25f64 * 2.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn bl_point_masses() {
        for c in [0.5, 1.0, 2.0, 3.0] {
            let v = bounded_lipschitz_distance(&m(&[0.0]), &m(&[c]), 10_000).unwrap();
            assert!((v - f64::min(c, 2.0)).abs() < 1e-9, "c = {c}: {v}");
        }
        assert_eq!(bounded_lipschitz_distance(&m(&[1.0, 2.0]), &m(&[2.0, 1.0]), 100).unwrap(), 0.0);
    }

    #[test]
    fn kl_l1_basics() {
        let a = m(&[0.0, 0.5, 1.0]);
        assert_eq!(kl_and_l1(&a, &a, 10, 0.5).unwrap(), (0.0, 0.0));
        let (_, l1) = kl_and_l1(&m(&[0.0, 0.1]), &m(&[10.0, 10.1]), 2, 1e-9).unwrap();
        assert!((l1 - 2.0).abs() < 1e-6);
        assert!(kl_and_l1(&a, &a, 0, 0.5).is_err());
        assert!(kl_and_l1(&a, &a, 3, 0.0).is_err());
    }

    #[test]
    fn rejects_bad_measures() {
        assert!(EmpiricalMeasure1D::new(&[]).is_err());
        assert!(EmpiricalMeasure1D::with_weights(&[1.0, 2.0], &[0.5, 0.6]).is_err());
        assert!(EmpiricalMeasure1D::new(&[f64::NAN]).is_err());
    }
}
