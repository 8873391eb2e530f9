//! Small fitting and summary helpers used by the experiments.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Least-squares slope of `y` on `x`; 0 when `x` has no spread.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx <= f64::EPSILON * n * (1.0 + mx * mx) {
        return 0.0;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    sxy / sxx
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl SlopeFit {
    pub fn ci_excludes_zero(&self) -> bool {
        self.ci_high < 0.0 || self.ci_low > 0.0
    }
}

/// Log-log slope of `values` against `sizes` with a percentile bootstrap CI.
/// `groups[g]` are the replicate values observed at `sizes[g]`; the
/// bootstrap resamples replicates within each group.
pub fn loglog_slope_bootstrap(
    sizes: &[f64],
    groups: &[Vec<f64>],
    resamples: usize,
    level: f64,
    seed: u64,
) -> Result<SlopeFit> {
    if sizes.len() != groups.len() || sizes.is_empty() {
        return Err(Error::invalid("one replicate group per size is required"));
    }
    if groups.iter().any(|g| g.is_empty() || g.iter().any(|v| !(v.is_finite() && *v > 0.0))) {
        return Err(Error::invalid("log-log fit needs positive finite values in every group"));
    }
    let fit = |gs: &[Vec<f64>]| {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (s, g) in sizes.iter().zip(gs) {
            for v in g {
                x.push(s.ln());
                y.push(v.ln());
            }
        }
        ols_slope(&x, &y)
    };
    let slope = fit(groups);
    let mut rng = rng::from_seed(seed);
    let mut boots: Vec<f64> = (0..resamples)
        .map(|_| {
            let resampled: Vec<Vec<f64>> = groups
                .iter()
                .map(|g| (0..g.len()).map(|_| g[rng.random_range(0..g.len())]).collect())
                .collect();
            fit(&resampled)
        })
        .collect();
    boots.sort_by(f64::total_cmp);
    let (ci_low, ci_high) = if boots.is_empty() {
        (slope, slope)
    } else {
        let tail = (1.0 - level) / 2.0;
        (quantile(&boots, tail), quantile(&boots, 1.0 - tail))
    };
    Ok(SlopeFit { slope, ci_low, ci_high })
}

/// Linear-interpolated quantile of sorted data.
pub fn quantile(sorted: &[f64], level: f64) -> f64 {
    crate::pde::quantile_sorted(sorted, level)
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile(&v, 0.5)
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    /// Probability density per bin (integrates to 1).
    pub density: Vec<f64>,
}

impl Histogram {
    /// Equal-width histogram on `[lo, hi]`; a degenerate range is widened by ±0.5.
    pub fn with_range(values: &[f64], bins: usize, lo: f64, hi: f64) -> Result<Self> {
        if bins == 0 || values.is_empty() {
            return Err(Error::invalid("histogram needs at least one bin and one value"));
        }
        let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
        let width = (hi - lo) / bins as f64;
        let mut counts = vec![0usize; bins];
        for &v in values {
            let idx = (((v - lo) / width).floor() as isize).clamp(0, bins as isize - 1) as usize;
            counts[idx] += 1;
        }
        let n = values.len() as f64;
        Ok(Self {
            edges: (0..=bins).map(|i| lo + i as f64 * width).collect(),
            density: counts.iter().map(|&c| c as f64 / (n * width)).collect(),
        })
    }

    pub fn of(values: &[f64], bins: usize) -> Result<Self> {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self::with_range(values, bins, lo, hi)
    }
}

/// Gaussian kernel density estimate on `points` equally spaced values
/// covering `[min - 3h, max + 3h]`, with the bandwidth
/// `h = 0.9 min(sd, IQR/1.34) n^(-1/5)` (falling back to `sd`, then to 1,
/// when the smaller scale is zero).
pub fn gaussian_kde(values: &[f64], points: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if values.len() < 2 || points < 2 {
        return Err(Error::invalid("a density estimate needs at least two values and two grid points"));
    }
    let n = values.len() as f64;
    let m = mean(values);
    let sd = (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    let mut scale = sd.min(iqr / 1.34);
    if scale <= 0.0 {
        scale = if sd > 0.0 { sd } else { 1.0 };
    }
    let h = 0.9 * scale * n.powf(-0.2);
    let lo = sorted[0] - 3.0 * h;
    let hi = sorted[sorted.len() - 1] + 3.0 * h;
    let norm = 1.0 / (n * h * (2.0 * std::f64::consts::PI).sqrt());
    let xs: Vec<f64> = (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect();
    let ys = xs
        .iter()
        .map(|&x| norm * values.iter().map(|&v| (-0.5 * ((x - v) / h).powi(2)).exp()).sum::<f64>())
        .collect();
    Ok((xs, ys))
}

/// Number of modes of a sequence of bin heights by 0-dimensional persistence:
/// a local maximum counts when it rises above the higher of the two saddles
/// separating it from a taller peak by at least `threshold × max height`. The
/// global maximum always counts.
pub fn count_modes(heights: &[f64], threshold: f64) -> usize {
    let top = heights.iter().copied().fold(0.0, f64::max);
    if top <= 0.0 {
        return 0;
    }
    let min_persistence = threshold * top;
    let n = heights.len();
    let mut modes = 0;
    for i in 0..n {
        let h = heights[i];
        let is_peak = (i == 0 || heights[i - 1] < h) && (i + 1 == n || heights[i + 1] <= h);
        if !is_peak {
            continue;
        }
        // Lowest point reached before climbing above `h`, on each side.
        let walk = |range: &mut dyn Iterator<Item = usize>| -> Option<f64> {
            let mut low = h;
            for j in range {
                if heights[j] > h {
                    return Some(low);
                }
                low = low.min(heights[j]);
            }
            None
        };
        let left = walk(&mut (0..i).rev());
        let right = walk(&mut (i + 1..n));
        let persistence = match (left, right) {
            (None, None) => f64::INFINITY,
            (Some(l), None) => h - l,
            (None, Some(r)) => h - r,
            (Some(l), Some(r)) => h - l.max(r),
        };
        if persistence >= min_persistence {
            modes += 1;
        }
    }
    modes
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_exact_power_law() {
        let sizes = [100.0, 200.0, 400.0, 800.0];
        let groups: Vec<Vec<f64>> = sizes.iter().map(|n: &f64| vec![3.0 / n, 3.0 / n]).collect();
        let fit = loglog_slope_bootstrap(&sizes, &groups, 200, 0.95, 1).unwrap();
        assert!((fit.slope + 1.0).abs() < 1e-12);
        assert!((fit.ci_low + 1.0).abs() < 1e-12 && (fit.ci_high + 1.0).abs() < 1e-12);
    }

    #[test]
    fn identical_rungs_give_zero_slope() {
        let sizes = [100.0, 100.0, 100.0];
        let groups = vec![vec![0.1, 0.2], vec![0.15, 0.3], vec![0.2, 0.1]];
        let fit = loglog_slope_bootstrap(&sizes, &groups, 100, 0.95, 1).unwrap();
        assert_eq!(fit.slope, 0.0);
        assert!(fit.ci_low <= 0.0 && fit.ci_high >= 0.0);
        assert!(!fit.ci_excludes_zero());
    }

    #[test]
    fn histogram_integrates_to_one() {
        let v: Vec<f64> = (0..100).map(|i| i as f64 / 7.0).collect();
        let h = Histogram::of(&v, 13).unwrap();
        let w = h.edges[1] - h.edges[0];
        assert!((h.density.iter().sum::<f64>() * w - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kde_integrates_to_one_and_sees_two_clusters() {
        let mut v: Vec<f64> = (0..50).map(|i| (i as f64 / 50.0) * 0.5).collect();
        v.extend((0..50).map(|i| 5.0 + (i as f64 / 50.0) * 0.5));
        let (xs, ys) = gaussian_kde(&v, 512).unwrap();
        let dx = xs[1] - xs[0];
        assert!((ys.iter().sum::<f64>() * dx - 1.0).abs() < 1e-2);
        assert_eq!(count_modes(&ys, 0.05), 2);
        let (_, one) = gaussian_kde(&v[..50], 512).unwrap();
        assert_eq!(count_modes(&one, 0.05), 1);
    }

    #[test]
    fn mode_counting() {
        assert_eq!(count_modes(&[0.0, 1.0, 3.0, 1.0, 0.0], 0.1), 1);
        assert_eq!(count_modes(&[0.0, 3.0, 0.5, 2.0, 0.0], 0.1), 2);
        // the small bump does not persist
        assert_eq!(count_modes(&[0.0, 3.0, 2.9, 2.95, 1.0], 0.1), 1);
        // plateau peaks count once
        assert_eq!(count_modes(&[1.0, 2.0, 2.0, 1.0], 0.1), 1);
        assert_eq!(count_modes(&[0.0, 0.0], 0.1), 0);
    }
}
