//! Exact moments checked against oracles written from scratch here.
//!
//! Conditioning on the other items: item `i` is sampled exactly when its
//! priority beats `T`, the `k`-th highest priority among the others, and then
//! its estimate is `max(w_i, T)`. Hence `E[w_hat_i^2] = E[w_i max(w_i, T)]`
//! and `Var[w_hat_i] = w_i * integral_{w_i}^inf P(T > t) dt`, where
//! `P(T > t)` is the chance that at least `k` of the independent events
//! `q_h > t` (each with probability `min(1, w_h / t)`) occur.

use priority_sampling::analysis::{
    draw_exact, exact_oracle, exactify, pair_inversion_prob, unit_variance, InclusionScheme,
    OracleMethod, SchemeTag, Statistic,
};
use priority_sampling::SeededGenerator;

fn at_least(ps: &[f64], k: usize) -> f64 {
    // dist[j] = P(exactly j successes so far)
    let mut dist = vec![0.0; ps.len() + 1];
    dist[0] = 1.0;
    for (seen, &p) in ps.iter().enumerate() {
        for j in (0..=seen + 1).rev() {
            let stay = dist[j] * (1.0 - p);
            let step = if j > 0 { dist[j - 1] * p } else { 0.0 };
            dist[j] = stay + step;
        }
    }
    dist[k..].iter().sum()
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    let h = (b - a) / intervals as f64;
    let mut s = f(a) + f(b);
    for j in 1..intervals {
        s += f(a + j as f64 * h) * if j % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn variance_oracle(weights: &[f64], k: usize, i: usize) -> f64 {
    let wi = weights[i];
    let others: Vec<f64> = (0..weights.len())
        .filter(|&h| h != i)
        .map(|h| weights[h])
        .collect();
    if others.iter().filter(|&&w| w > 0.0).count() < k {
        return 0.0;
    }
    let survival = |t: f64| {
        let ps: Vec<f64> = others.iter().map(|&w| (w / t).min(1.0)).collect();
        at_least(&ps, k)
    };
    // t = wi / u maps (wi, inf) onto (0, 1); split where a weight becomes t
    let mut cuts: Vec<f64> = others
        .iter()
        .filter(|&&w| w > wi)
        .map(|&w| wi / w)
        .collect();
    cuts.extend([0.0, 1.0]);
    cuts.sort_by(f64::total_cmp);
    let integral: f64 = cuts
        .windows(2)
        .map(|c| {
            simpson(
                |u| {
                    // the integrand has a finite limit at 0; sample just inside
                    let u = u.max(1e-9);
                    survival(wi / u) * wi / (u * u)
                },
                c[0],
                c[1],
                4000,
            )
        })
        .sum();
    wi * integral
}

fn quad(weights: &[f64], k: usize, i: usize, s: Statistic) -> f64 {
    exact_oracle(weights, k, i, s, OracleMethod::Quadrature)
        .unwrap()
        .value
}

#[test]
fn variance_matches_conditioning_oracle() {
    let sets: [&[f64]; 5] = [
        &[1.0, 1.0, 1.0],
        &[3.0, 2.0, 1.0],
        &[4.0, 2.0, 1.0, 1.0],
        &[10.0, 0.5, 0.25, 7.0],
        &[1.0, 0.0, 2.0, 5.0],
    ];
    for w in sets {
        for k in 2..w.len() {
            for i in 0..w.len() {
                let exact = quad(w, k, i, Statistic::Variance);
                let oracle = variance_oracle(w, k, i);
                assert!(
                    (exact - oracle).abs() <= 1e-8 * oracle.max(1.0),
                    "{w:?} k={k} i={i}: {exact} vs {oracle}"
                );
            }
        }
    }
}

#[test]
fn unit_variance_formula_matches_oracle() {
    for n in [3, 4] {
        for k in 2..n {
            let oracle = variance_oracle(&vec![1.0; n], k, 0);
            let formula = unit_variance(SchemeTag::Pri, n, k).unwrap().value();
            assert!((oracle - formula).abs() < 1e-8, "n={n} k={k}");
        }
    }
}

#[test]
fn means_and_products_are_exact() {
    let w = [4.0, 2.0, 1.0, 1.0];
    for k in 1..=4 {
        for i in 0..4 {
            assert!((quad(&w, k, i, Statistic::Mean) - w[i]).abs() < 1e-10);
            for j in (0..4).filter(|&j| j != i) {
                let product = quad(&w, k, i, Statistic::ProductWith(j));
                let expected = if k >= 2 { w[i] * w[j] } else { 0.0 };
                assert!(
                    (product - expected).abs() < 1e-9,
                    "k={k} {i},{j}: {product}"
                );
            }
        }
    }
}

#[test]
fn variance_respects_the_weight_bound() {
    for w in [
        &[1.0, 1.0, 1.0, 1.0][..],
        &[4.0, 2.0, 1.0, 1.0],
        &[3.0, 2.0, 1.0],
    ] {
        let total: f64 = w.iter().sum();
        for i in 0..w.len() {
            let v = quad(w, 2, i, Statistic::Variance);
            assert!(v < w.len() as f64 * total * w[i]);
        }
    }
}

#[test]
fn inversion_probability_by_simulation() {
    let (ws, wl) = (1.0, 3.0);
    let mut gen = SeededGenerator::new(99);
    let trials = 400_000;
    let hits = (0..trials)
        .filter(|_| ws / gen.draw_alpha() > wl / gen.draw_alpha())
        .count();
    let p = pair_inversion_prob(ws, wl).unwrap();
    let se = (p * (1.0 - p) / trials as f64).sqrt();
    assert!((hits as f64 / trials as f64 - p).abs() < 4.0 * se);
    assert!((p - 1.0 / 6.0).abs() < 1e-15);
}

// The exact-size mixture reproduces threshold sampling's per-item variance
// w * (tau - w) when estimates are max(w, tau).
#[test]
fn exact_size_mixture_keeps_threshold_variance() {
    let weights = [9.0, 4.0, 2.0, 1.0, 1.0, 0.5];
    let k = 3;
    let scheme = InclusionScheme::threshold(&weights, k).unwrap();
    let tau = weights
        .iter()
        .zip(scheme.probs())
        .find(|(_, &p)| p < 1.0)
        .map(|(w, p)| w / p)
        .unwrap();
    let events = exactify(&scheme).unwrap();
    let mut gen = SeededGenerator::new(5);
    let trials = 200_000;
    let mut sums = vec![[0.0f64; 3]; weights.len()];
    for _ in 0..trials {
        let picked = draw_exact(&events, &mut gen);
        assert_eq!(picked.len(), k);
        for (i, &w) in weights.iter().enumerate() {
            let d = if picked.contains(&i) { w.max(tau) } else { 0.0 } - w;
            sums[i][0] += d;
            sums[i][1] += d * d;
            sums[i][2] += d.powi(4);
        }
    }
    let t = trials as f64;
    for (i, &w) in weights.iter().enumerate() {
        let (m1, m2, m4) = (sums[i][0] / t, sums[i][1] / t, sums[i][2] / t);
        let var = m2 - m1 * m1;
        let se = ((m4 - m2 * m2).max(0.0) / t).sqrt();
        let target = w * (tau - w).max(0.0);
        assert!(
            (var - target).abs() <= 3.0 * se + 1e-12,
            "item {i}: {var} vs {target}"
        );
    }
}
