//! Asymptotic null table for Hoeffding's D.
//!
//! Under independence `z = ½π⁴(nD + 1/36)` converges to the
//! Blum–Kiefer–Rosenblatt law `Σ_{j,k} Z²_{jk} / (2 j² k²)`. The table lists
//! upper-tail levels and the matching critical `z`; p-values are read off by
//! linear interpolation in `z`, with `(z = 0, p = 1)` as the left anchor and a
//! log-linear extension past the last entry. The values are produced by
//! `examples/gen_hoeffding_table.rs`.

pub const TAIL_LEVELS: [f64; 30] = [
    0.999, 0.99, 0.975, 0.95, 0.9, 0.85, 0.8, 0.75, 0.7, 0.65, 0.6, 0.55, 0.5, 0.45, 0.4, 0.35, 0.3, 0.25, 0.2, 0.15,
    0.1, 0.075, 0.05, 0.025, 0.01, 0.005, 0.0025, 0.001, 0.0005, 0.0001,
];

pub const CRITICAL_Z: [f64; 30] = [
    0.404205, 0.492311, 0.546862, 0.602476, 0.679377, 0.740986, 0.796821, 0.850425, 0.903729, 0.958082,
    1.014626, 1.074494, 1.138950, 1.209531, 1.288237, 1.377837, 1.482380, 1.608201, 1.766038, 1.976306,
    2.285440, 2.512992, 2.843463, 3.428908, 4.230334, 4.850797, 5.480118, 6.322432, 6.965824, 8.475268,
];

pub fn z_statistic(d: f64, n: usize) -> f64 {
    0.5 * std::f64::consts::PI.powi(4) * (n as f64 * d + 1.0 / 36.0)
}

/// `D` whose `z` equals the tabulated critical value at `alpha`, if tabulated.
pub fn critical_d(alpha: f64, n: usize) -> Option<f64> {
    let i = TAIL_LEVELS.iter().position(|&l| l == alpha)?;
    Some((2.0 * CRITICAL_Z[i] / std::f64::consts::PI.powi(4) - 1.0 / 36.0) / n as f64)
}

pub fn p_value(d: f64, n: usize) -> f64 {
    let z = z_statistic(d, n);
    if z <= 0.0 {
        return 1.0;
    }
    if z <= CRITICAL_Z[0] {
        let f = z / CRITICAL_Z[0];
        return 1.0 + f * (TAIL_LEVELS[0] - 1.0);
    }
    for i in 1..CRITICAL_Z.len() {
        if z <= CRITICAL_Z[i] {
            let (z0, z1) = (CRITICAL_Z[i - 1], CRITICAL_Z[i]);
            let (p0, p1) = (TAIL_LEVELS[i - 1], TAIL_LEVELS[i]);
            return p0 + (z - z0) / (z1 - z0) * (p1 - p0);
        }
    }
    let k = CRITICAL_Z.len();
    let (z0, z1) = (CRITICAL_Z[k - 2], CRITICAL_Z[k - 1]);
    let (l0, l1) = (TAIL_LEVELS[k - 2].ln(), TAIL_LEVELS[k - 1].ln());
    (l1 + (z - z1) * (l1 - l0) / (z1 - z0)).exp().max(1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recorded_critical_values_are_fixed_points() {
        for (i, &alpha) in TAIL_LEVELS.iter().enumerate() {
            let d = critical_d(alpha, 250).unwrap();
            assert!((p_value(d, 250) - alpha).abs() < 1e-12, "level {i}");
        }
        assert!(critical_d(0.123, 10).is_none());
    }

    #[test]
    fn p_decreases_in_d() {
        let mut last = 1.0;
        for k in 0..400 {
            let d = -0.0002 + k as f64 * 2e-5;
            let p = p_value(d, 300);
            assert!(p <= last + 1e-15 && (0.0..=1.0).contains(&p));
            last = p;
        }
        assert!(p_value(1.0 / 30.0, 1000) < 1e-6);
    }
}
