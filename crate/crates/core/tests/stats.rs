use mflab::activation::ActivationKind;
use mflab::data::{sample_isotropic, GaussianMixtureSpec};
use mflab::quadrature::QuadratureRule;
use mflab::rng;
use mflab::statics::StaticsContext;
use mflab::stats::hoeffding::{hoeffding_d, permutation_p_value};
use rayon::prelude::*;

#[test]
fn permutation_p_values_are_calibrated_under_independence() {
    let reps = 2000;
    let rejected: usize = (0..reps as u64)
        .into_par_iter()
        .map(|k| {
            let mut g = rng::substream(41, k);
            let x = rng::normal_vec(&mut g, 200);
            let y = rng::normal_vec(&mut g, 200);
            let d = hoeffding_d(&x, &y).unwrap().d_stat;
            usize::from(permutation_p_value(&x, &y, d, 999, k).unwrap() < 0.05)
        })
        .sum();
    let frac = rejected as f64 / reps as f64;
    assert!((0.03..=0.07).contains(&frac), "rejection fraction {frac}");
}

#[test]
fn doubling_quadrature_nodes_leaves_q_unchanged() {
    let acts = [
        ActivationKind::interpolated_step(),
        ActivationKind::Relu,
        ActivationKind::PiecewiseLinear { t1: -1.0, t2: 2.0, s1: 0.0, s2: 3.0 },
    ];
    for a1 in &acts {
        for a2 in &acts {
            let ctx = |n| StaticsContext::with_quadrature(0.5, a1.clone(), a2.clone(), QuadratureRule::SplitLegendre, n).unwrap();
            let (c64, c128) = (ctx(64), ctx(128));
            for i in 0..=20 {
                for j in 0..=20 {
                    let (t1, t2) = (-10.0 + i as f64, -10.0 + j as f64);
                    let (q64, q128) = (c64.q(t1, t2), c128.q(t1, t2));
                    assert!((q64 - q128).abs() < 1e-8, "{a1:?}/{a2:?} at ({t1}, {t2}): {q64} vs {q128}");
                }
            }
        }
    }
}

#[test]
fn class_frequencies_are_balanced() {
    let count = 20_000;
    let data = sample_isotropic(&GaussianMixtureSpec::isotropic(0.5, 2), 5, count).unwrap();
    let plus = data.iter().filter(|s| s.y > 0.0).count() as f64 / count as f64;
    assert!((plus - 0.5).abs() <= 4.0 * (0.25 / count as f64).sqrt(), "{plus}");
}
