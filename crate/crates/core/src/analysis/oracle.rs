//! Exact moments of priority-sampling estimates on tiny instances.
//!
//! The quadrature method conditions on which item holds the threshold.
//! If item `m` is the `(k+1)`-th highest priority with `alpha_m = u`, then
//! `tau = w_m / u` and every other item `h` independently beats `tau` with
//! probability `min(1, w_h u / w_m)`. Summing over which `k` of them do gives
//! a one-dimensional integral over `u` per `m`. Between the breakpoints
//! `u = w_m / w_h` the integrand is a polynomial for every statistic offered
//! here, so Gauss-Legendre with [`QUADRATURE_DEGREE`] nodes per piece is
//! exact up to rounding.

use gauss_quad::GaussLegendre;

use crate::error::{Error, Result};
use crate::model::validate_weight;
use crate::montecarlo::{run_chunked, Moments, PriorityTrial};

/// Largest instance [`exact_oracle`] accepts.
pub const ORACLE_MAX_ITEMS: usize = 4;

/// Gauss-Legendre nodes per piece.
pub const QUADRATURE_DEGREE: usize = 24;

/// The quantity to compute for the target item `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Statistic {
    /// `E[w_hat_i]`.
    Mean,
    /// `E[w_hat_i^2]`.
    SecondMoment,
    /// `Var[w_hat_i]`.
    Variance,
    /// `E[w_hat_i * w_hat_j]`.
    ProductWith(usize),
    /// `Cov[w_hat_i, w_hat_j]`.
    CovarianceWith(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleMethod {
    /// Piecewise Gauss-Legendre over the threshold item's randomization.
    Quadrature,
    /// Plain simulation.
    MonteCarlo { trials: u64, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleResult {
    /// `f64::INFINITY` when the moment diverges.
    pub value: f64,
    /// Zero for quadrature.
    pub std_error: f64,
    pub method: OracleMethod,
}

/// Computes `statistic` for item `target` under priority sampling with
/// sample size `k`.
///
/// ```
/// use priority_sampling::analysis::{exact_oracle, OracleMethod, Statistic};
///
/// let r = exact_oracle(&[1.0; 4], 2, 0, Statistic::Variance, OracleMethod::Quadrature).unwrap();
/// assert!((r.value - 2.0).abs() < 1e-9);
/// ```
pub fn exact_oracle(
    weights: &[f64],
    k: usize,
    target: usize,
    statistic: Statistic,
    method: OracleMethod,
) -> Result<OracleResult> {
    let n = weights.len();
    if n > ORACLE_MAX_ITEMS {
        return Err(Error::OracleTooLarge {
            max: ORACLE_MAX_ITEMS,
            got: n,
        });
    }
    if k == 0 {
        return Err(Error::ZeroSampleSize);
    }
    for (i, &w) in weights.iter().enumerate() {
        validate_weight(i as u64, w)?;
    }
    let check = |index: usize| {
        if index < n {
            Ok(())
        } else {
            Err(Error::ItemOutOfRange { index, len: n })
        }
    };
    check(target)?;
    if let Statistic::ProductWith(j) | Statistic::CovarianceWith(j) = statistic {
        check(j)?;
    }
    match method {
        OracleMethod::Quadrature => Ok(OracleResult {
            value: quadrature(weights, k, target, statistic),
            std_error: 0.0,
            method,
        }),
        OracleMethod::MonteCarlo { trials, seed } => {
            let (value, std_error) = monte_carlo(weights, k, target, statistic, trials, seed);
            Ok(OracleResult {
                value,
                std_error,
                method,
            })
        }
    }
}

fn quadrature(weights: &[f64], k: usize, i: usize, statistic: Statistic) -> f64 {
    let mean = |j: usize| expectation(weights, k, |est| est[j]);
    let second = |a: usize, b: usize| {
        if diverges(weights, k, a, b) {
            f64::INFINITY
        } else {
            expectation(weights, k, |est| est[a] * est[b])
        }
    };
    match statistic {
        Statistic::Mean => mean(i),
        Statistic::SecondMoment => second(i, i),
        Statistic::Variance => second(i, i) - mean(i).powi(2),
        Statistic::ProductWith(j) => second(i, j),
        Statistic::CovarianceWith(j) => second(i, j) - mean(i) * mean(j),
    }
}

// E[w_hat_a w_hat_b] is infinite only for a single-slot sample that can
// miss a positive item; a product of two distinct items needs two slots.
fn diverges(weights: &[f64], k: usize, a: usize, b: usize) -> bool {
    let positive = weights.iter().filter(|&&w| w > 0.0).count();
    k == 1 && a == b && weights[a] > 0.0 && positive > 1
}

/// `E[f(w_hat)]` where `w_hat` is the full estimate vector (zero for
/// unsampled items). `f` must keep the integrand polynomial between
/// breakpoints for the result to be exact.
pub(crate) fn expectation(weights: &[f64], k: usize, f: impl Fn(&[f64]) -> f64) -> f64 {
    let positive: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] > 0.0).collect();
    if positive.len() <= k {
        return f(weights);
    }
    let rule = GaussLegendre::new(QUADRATURE_DEGREE).expect("valid degree");
    let mut est = vec![0.0; weights.len()];
    let mut total = 0.0;
    for &m in &positive {
        let wm = weights[m];
        let others: Vec<usize> = positive.iter().copied().filter(|&h| h != m).collect();
        let mut cuts: Vec<f64> = others
            .iter()
            .map(|&h| wm / weights[h])
            .filter(|&u| u < 1.0)
            .collect();
        cuts.push(0.0);
        cuts.push(1.0);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        for piece in cuts.windows(2) {
            total += rule.integrate(piece[0], piece[1], |u| {
                let tau = wm / u;
                let mut sum = 0.0;
                for mask in 0u32..(1 << others.len()) {
                    if mask.count_ones() as usize != k {
                        continue;
                    }
                    let mut prob = 1.0;
                    est.iter_mut().for_each(|e| *e = 0.0);
                    for (bit, &h) in others.iter().enumerate() {
                        let p = (weights[h] * u / wm).min(1.0);
                        if mask >> bit & 1 == 1 {
                            prob *= p;
                            est[h] = weights[h].max(tau);
                        } else {
                            prob *= 1.0 - p;
                        }
                    }
                    if prob > 0.0 {
                        sum += prob * f(&est);
                    }
                }
                sum
            });
        }
    }
    total
}

fn monte_carlo(
    weights: &[f64],
    k: usize,
    i: usize,
    statistic: Statistic,
    trials: u64,
    seed: u64,
) -> (f64, f64) {
    let j = match statistic {
        Statistic::ProductWith(j) | Statistic::CovarianceWith(j) => j,
        _ => i,
    };
    // Accumulates w_hat_i, w_hat_j, w_hat_i^2 and w_hat_i w_hat_j.
    let acc = run_chunked(
        trials,
        seed,
        |gen, count| {
            let mut trial = PriorityTrial::new(k);
            let mut m = [Moments::default(); 4];
            let mut est = vec![0.0; weights.len()];
            for _ in 0..count {
                trial.run(weights, gen);
                est.iter_mut().for_each(|e| *e = 0.0);
                for (h, e) in trial.estimates(weights) {
                    est[h] = e;
                }
                m[0].push(est[i]);
                m[1].push(est[j]);
                m[2].push(est[i] * est[i]);
                m[3].push(est[i] * est[j]);
            }
            m
        },
        |a, b| a.iter_mut().zip(&b).for_each(|(x, y)| x.merge(y)),
    );
    let Some([mi, mj, sq, prod]) = acc else {
        return (f64::NAN, f64::NAN);
    };
    match statistic {
        Statistic::Mean => (mi.mean, mi.std_error()),
        Statistic::SecondMoment => (sq.mean, sq.std_error()),
        // delta-method errors are not worth it here; the raw-moment error
        // dominates for every instance this oracle accepts
        Statistic::Variance => (mi.variance(), sq.std_error()),
        Statistic::ProductWith(_) => (prod.mean, prod.std_error()),
        Statistic::CovarianceWith(_) => (prod.mean - mi.mean * mj.mean, prod.std_error()),
    }
}
