//! Hoeffding's D statistic.
//!
//! With `γ(u) = 1{u ≥ 0}`,
//! `a_α = Σ_β γ(X_α - X_β) - 1`, `b_α = Σ_β γ(Y_α - Y_β) - 1`,
//! `c_α = Σ_β γ(X_α - X_β) γ(Y_α - Y_β) - 1`, and
//!
//! ```text
//! A = Σ a(a-1) b(b-1),  B = Σ (a-1)(b-1) c,  C = Σ c(c-1)
//! D = (A - 2(n-2) B + (n-2)(n-3) C) / (n(n-1)(n-2)(n-3)(n-4))
//! ```
//!
//! Ties count (γ(0) = 1). The counts come from sorting plus a Fenwick tree,
//! so a statistic costs `O(n log n)`; the sums are accumulated in `i128`.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::stats::hoeffding_table;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PMethod {
    Permutation { count: usize, seed: u64 },
    TableInterpolation,
}

impl Default for PMethod {
    fn default() -> Self {
        PMethod::Permutation { count: 999, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HoeffdingResult {
    pub d_stat: f64,
    pub p_value: Option<f64>,
    pub p_method: Option<PMethod>,
    pub n: usize,
    pub a_sum: i128,
    pub b_sum: i128,
    pub c_sum: i128,
    pub a: Vec<i64>,
    pub b: Vec<i64>,
    pub c: Vec<i64>,
}

impl HoeffdingResult {
    /// `D` as the exact ratio `(numerator, denominator)`.
    pub fn rational(&self) -> (i128, i128) {
        let n = self.n as i128;
        (
            d_numerator(n, self.a_sum, self.b_sum, self.c_sum),
            n * (n - 1) * (n - 2) * (n - 3) * (n - 4),
        )
    }
}

pub fn d_numerator(n: i128, a: i128, b: i128, c: i128) -> i128 {
    a - 2 * (n - 2) * b + (n - 2) * (n - 3) * c
}

struct Fenwick {
    tree: Vec<i64>,
}

impl Fenwick {
    fn new(n: usize) -> Self {
        Self { tree: vec![0; n + 1] }
    }

    fn add(&mut self, mut i: usize) {
        i += 1;
        while i < self.tree.len() {
            self.tree[i] += 1;
            i += i & i.wrapping_neg();
        }
    }

    /// Number of inserted indices `<= i`.
    fn prefix(&self, mut i: usize) -> i64 {
        i += 1;
        let mut s = 0;
        while i > 0 {
            s += self.tree[i];
            i -= i & i.wrapping_neg();
        }
        s
    }
}

fn check_inputs(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.len() < 5 {
        return Err(Error::invalid(format!("Hoeffding's D needs n >= 5, got {}", x.len())));
    }
    if x.iter().chain(y).any(|v| v.is_nan()) {
        return Err(Error::invalid("Hoeffding's D input contains NaN"));
    }
    Ok(())
}

/// `#{β : v_β <= v_α}` for every α, and the dense rank of each value.
fn le_counts(v: &[f64]) -> (Vec<i64>, Vec<usize>) {
    let n = v.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut counts = vec![0; n];
    let mut dense = vec![0; n];
    let mut start = 0;
    let mut rank = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && v[order[end]] == v[order[start]] {
            end += 1;
        }
        for &i in &order[start..end] {
            counts[i] = end as i64;
            dense[i] = rank;
        }
        rank += 1;
        start = end;
    }
    (counts, dense)
}

/// The statistic and its intermediates; `p_value` is left empty.
pub fn hoeffding_d(x: &[f64], y: &[f64]) -> Result<HoeffdingResult> {
    check_inputs(x, y)?;
    let n = x.len();
    let (ax, _) = le_counts(x);
    let (by, y_rank) = le_counts(y);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| x[i].total_cmp(&x[j]));
    let mut fen = Fenwick::new(n);
    let mut c = vec![0i64; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && x[order[end]] == x[order[start]] {
            end += 1;
        }
        for &i in &order[start..end] {
            fen.add(y_rank[i]);
        }
        for &i in &order[start..end] {
            c[i] = fen.prefix(y_rank[i]) - 1;
        }
        start = end;
    }
    let a: Vec<i64> = ax.iter().map(|v| v - 1).collect();
    let b: Vec<i64> = by.iter().map(|v| v - 1).collect();
    Ok(assemble(n, a, b, c))
}

fn assemble(n: usize, a: Vec<i64>, b: Vec<i64>, c: Vec<i64>) -> HoeffdingResult {
    let mut sa: i128 = 0;
    let mut sb: i128 = 0;
    let mut sc: i128 = 0;
    for i in 0..n {
        let (ai, bi, ci) = (a[i] as i128, b[i] as i128, c[i] as i128);
        sa += ai * (ai - 1) * bi * (bi - 1);
        sb += (ai - 1) * (bi - 1) * ci;
        sc += ci * (ci - 1);
    }
    let nn = n as i128;
    let num = d_numerator(nn, sa, sb, sc);
    let den = nn * (nn - 1) * (nn - 2) * (nn - 3) * (nn - 4);
    HoeffdingResult {
        d_stat: num as f64 / den as f64,
        p_value: None,
        p_method: None,
        n,
        a_sum: sa,
        b_sum: sb,
        c_sum: sc,
        a,
        b,
        c,
    }
}

/// Statistic plus p-value.
pub fn hoeffding_test(x: &[f64], y: &[f64], method: PMethod) -> Result<HoeffdingResult> {
    let mut res = hoeffding_d(x, y)?;
    let p = match method {
        PMethod::Permutation { count, seed } => permutation_p_value(x, y, res.d_stat, count, seed)?,
        PMethod::TableInterpolation => hoeffding_table::p_value(res.d_stat, res.n),
    };
    res.p_value = Some(p);
    res.p_method = Some(method);
    Ok(res)
}

/// `p = (1 + #{D* >= D}) / (1 + count)` over `count` random permutations of
/// `y`. Permutation `k` draws from substream `k` of `seed`, so the result does
/// not depend on the thread count.
pub fn permutation_p_value(x: &[f64], y: &[f64], d: f64, count: usize, seed: u64) -> Result<f64> {
    check_inputs(x, y)?;
    if count == 0 {
        return Err(Error::invalid("permutation count must be >= 1"));
    }
    let exceed: usize = (0..count)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng::substream(seed, k as u64);
            let mut yp = y.to_vec();
            yp.shuffle(&mut rng);
            // inputs were checked above
            let ds = hoeffding_d(x, &yp).map(|r| r.d_stat).unwrap_or(f64::NEG_INFINITY);
            usize::from(ds >= d - 1e-15 * d.abs().max(1e-300))
        })
        .sum();
    Ok((1 + exceed) as f64 / (1 + count) as f64)
}

/// Replaces values by ranks with ties broken at random; for callers that
/// prefer continuous-data behaviour over counting ties.
pub fn jitter_ties(values: &[f64], seed: u64) -> Vec<f64> {
    let mut rng = rng::from_seed(seed);
    let mut keys: Vec<(f64, u64)> = values.iter().map(|&v| (v, rand::Rng::random(&mut rng))).collect();
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| keys[i].0.total_cmp(&keys[j].0).then(keys[i].1.cmp(&keys[j].1)));
    let mut out = vec![0.0; values.len()];
    for (rank, &i) in order.iter().enumerate() {
        out[i] = rank as f64;
    }
    keys.clear();
    out
}
