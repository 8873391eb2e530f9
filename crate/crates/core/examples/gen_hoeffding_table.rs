//! Regenerates the critical values in `src/stats/hoeffding_table.rs`.
//!
//! The limit of `z = ½π⁴(nD + 1/36)` under independence is
//! `Σ_{j,k≥1} Z²_{jk} / (2 j² k²)`. Pairs are grouped by `m = jk`
//! (multiplicity = number of divisors), truncated at `m <= M`, and the
//! truncated tail's mean is added as a shift. Tail probabilities come from
//! Imhof's inversion formula; critical values from bisection.
//!
//! Run with `cargo run --release -p mflab --example gen_hoeffding_table`.

use mflab::stats::hoeffding::hoeffding_d;
use mflab::stats::hoeffding_table::TAIL_LEVELS;
use rayon::prelude::*;

const M: usize = 600;

fn weights() -> (Vec<(f64, f64)>, f64) {
    let mut tau = vec![0usize; M + 1];
    for j in 1..=M {
        let mut m = j;
        while m <= M {
            tau[m] += 1;
            m += j;
        }
    }
    let w: Vec<(f64, f64)> = (1..=M).map(|m| (0.5 / (m * m) as f64, tau[m] as f64)).collect();
    // Σ_{j,k} 1/(2 j² k²) = ½ (π²/6)²
    let total = 0.5 * (std::f64::consts::PI.powi(2) / 6.0).powi(2);
    let kept: f64 = w.iter().map(|(l, t)| l * t).sum();
    (w, total - kept)
}

/// `P(Σ λ Z² > x)` by Imhof's formula with the trapezoid rule.
fn imhof_tail(w: &[(f64, f64)], x: f64) -> f64 {
    let h = 0.01;
    let mut acc = 0.0;
    let mut u = h;
    loop {
        let mut theta = -0.5 * x * u;
        let mut log_rho = 0.0;
        for &(l, t) in w {
            theta += 0.5 * t * (l * u).atan();
            log_rho += 0.25 * t * (l * l * u * u).ln_1p();
        }
        let term = theta.sin() / (u * log_rho.exp());
        acc += term;
        if log_rho > 40.0 {
            break;
        }
        u += h;
    }
    // limit of the integrand at u -> 0 is ½(Σ tλ - x); half weight at 0
    let at_zero = 0.5 * (w.iter().map(|(l, t)| l * t).sum::<f64>() - x);
    0.5 + (acc + 0.5 * at_zero) * h / std::f64::consts::PI
}

fn main() {
    let (w, shift) = weights();
    let crit: Vec<f64> = TAIL_LEVELS
        .par_iter()
        .map(|&p| {
            let (mut lo, mut hi) = (0.0_f64, 20.0_f64);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if imhof_tail(&w, mid - shift) > p {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        })
        .collect();
    println!("pub const CRITICAL_Z: [f64; {}] = [", crit.len());
    for c in &crit {
        println!("    {c:.6},");
    }
    println!("];");

    // finite-n sanity check against simulated null statistics
    let n = 500;
    let reps = 4000;
    let zs: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = mflab::rng::substream(99, r as u64);
            let x = mflab::rng::normal_vec(&mut rng, n);
            let y = mflab::rng::normal_vec(&mut rng, n);
            let d = hoeffding_d(&x, &y).unwrap().d_stat;
            0.5 * std::f64::consts::PI.powi(4) * (n as f64 * d + 1.0 / 36.0)
        })
        .collect();
    for (p, c) in TAIL_LEVELS.iter().zip(&crit) {
        let emp = zs.iter().filter(|&&z| z > *c).count() as f64 / reps as f64;
        eprintln!("level {p:.4}  z {c:.4}  simulated tail (n={n}) {emp:.4}");
    }
}
