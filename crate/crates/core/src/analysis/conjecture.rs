//! Empirical comparison of priority sampling with `k+1` slots against
//! threshold sampling with expected size `k`.

use serde::Serialize;

use super::fixed_thr_item_variance;
use super::oracle::{exact_oracle, OracleMethod, Statistic, ORACLE_MAX_ITEMS};
use crate::error::{Error, Result};
use crate::model::{priority_of, validate_weight};
use crate::montecarlo::{leave_one_out_thresholds, run_chunked, Moments};
use crate::samplers::solve_threshold;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PriorityVarianceMethod {
    Quadrature,
    /// Mean over trials of `sum_i v(w_i, tau_i)`, where `tau_i` is the
    /// `(k+1)`-th highest priority among the items other than `i`.
    MonteCarlo {
        trials: u64,
    },
}

/// Observed totals. This is evidence from one run, not a proof.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConjectureComparison {
    pub n: usize,
    pub k: usize,
    pub thr_threshold: f64,
    /// Exact total variance of threshold sampling with expected size `k`.
    pub thr_total: f64,
    /// Total variance of priority sampling with `k+1` slots.
    pub pri_total: f64,
    /// Zero when `pri_total` is exact.
    pub pri_std_error: f64,
    pub method: PriorityVarianceMethod,
    /// `pri_total <= thr_total` as observed.
    pub ordering_observed: bool,
    /// `pri_total` exceeds `thr_total` by more than three standard errors.
    pub significant_violation: bool,
}

pub fn conjecture_compare(
    weights: &[f64],
    k: usize,
    trials: u64,
    seed: u64,
) -> Result<ConjectureComparison> {
    let n = weights.len();
    if k == 0 {
        return Err(Error::ZeroSampleSize);
    }
    if k + 1 > n {
        return Err(Error::InvalidArgument(format!(
            "comparison needs k + 1 <= n, got n={n}, k={k}"
        )));
    }
    for (i, &w) in weights.iter().enumerate() {
        validate_weight(i as u64, w)?;
    }
    let tau = solve_threshold(weights, k);
    let thr_total: f64 = weights
        .iter()
        .map(|&w| fixed_thr_item_variance(w, tau))
        .sum();

    let (pri_total, pri_std_error, method) = if n <= ORACLE_MAX_ITEMS {
        let mut total = 0.0;
        for i in 0..n {
            total += exact_oracle(
                weights,
                k + 1,
                i,
                Statistic::Variance,
                OracleMethod::Quadrature,
            )?
            .value;
        }
        (total, 0.0, PriorityVarianceMethod::Quadrature)
    } else {
        let m = priority_total_variance(weights, k + 1, trials, seed);
        (
            m.mean,
            m.std_error(),
            PriorityVarianceMethod::MonteCarlo { trials },
        )
    };

    Ok(ConjectureComparison {
        n,
        k,
        thr_threshold: tau,
        thr_total,
        pri_total,
        pri_std_error,
        method,
        ordering_observed: pri_total <= thr_total,
        significant_violation: pri_total - thr_total > 3.0 * pri_std_error,
    })
}

/// Per-trial samples of `sum_i Var[w_hat_i | priorities of the others]`
/// for priority sampling with `slots` slots.
pub(crate) fn priority_total_variance(
    weights: &[f64],
    slots: usize,
    trials: u64,
    seed: u64,
) -> Moments {
    let n = weights.len();
    run_chunked(
        trials,
        seed,
        |gen, count| {
            let mut m = Moments::default();
            let mut q = vec![0.0; n];
            let mut scratch = vec![0.0; n];
            let mut tau = vec![0.0; n];
            for _ in 0..count {
                for (qi, &w) in q.iter_mut().zip(weights) {
                    *qi = priority_of(w, gen.draw_alpha());
                }
                leave_one_out_thresholds(&q, slots, &mut scratch, &mut tau);
                let total: f64 = weights
                    .iter()
                    .zip(&tau)
                    .map(|(&w, &t)| fixed_thr_item_variance(w, t))
                    .sum();
                m.push(total);
            }
            m
        },
        |a, b| a.merge(&b),
    )
    .unwrap_or_default()
}
