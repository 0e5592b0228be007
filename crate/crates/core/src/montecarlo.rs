//! Monte Carlo plumbing shared by the oracle and the verification harness.
//!
//! Trials are cut into fixed-size chunks, each chunk gets a generator
//! derived from `(seed, chunk index)`, and chunk results are merged in chunk
//! order. Results are therefore identical for any thread count.

use rayon::prelude::*;

use crate::model::{priority_of, PriorityKey, SeededGenerator};
use crate::samplers::PriorityReservoir;

/// Trials per chunk.
pub const CHUNK_TRIALS: u64 = 1 << 14;

/// Running mean and second central moment (Welford), mergeable.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    m2: f64,
}

impl Moments {
    #[inline]
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / n;
        self.m2 += other.m2 + delta * delta * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

/// Runs `trials` trials in deterministic chunks and merges the per-chunk
/// accumulators in order.
///
/// `chunk(gen, count)` must run `count` trials with `gen` and return its
/// accumulator; `merge` folds accumulators left to right.
pub fn run_chunked<A, F, M>(trials: u64, seed: u64, chunk: F, mut merge: M) -> Option<A>
where
    A: Send,
    F: Fn(&mut SeededGenerator, u64) -> A + Sync,
    M: FnMut(&mut A, A),
{
    let chunks = trials.div_ceil(CHUNK_TRIALS);
    let parts: Vec<A> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let count = CHUNK_TRIALS.min(trials - c * CHUNK_TRIALS);
            let mut gen = SeededGenerator::derived(seed, c);
            chunk(&mut gen, count)
        })
        .collect();
    let mut iter = parts.into_iter();
    let mut acc = iter.next()?;
    for part in iter {
        merge(&mut acc, part);
    }
    Some(acc)
}

/// One priority-sampling trial over a fixed weight vector, reusing buffers.
///
/// Uses the same heap reservoir as the streaming sampler, fed bare keys
/// whose ids are item indices.
#[derive(Debug, Clone)]
pub struct PriorityTrial {
    k: usize,
    reservoir: PriorityReservoir<PriorityKey>,
    /// Priorities of the last trial, indexed by item.
    pub priorities: Vec<f64>,
    /// Indices of the sampled items in the last trial.
    pub sampled: Vec<usize>,
    /// Threshold of the last trial (0 when everything is sampled).
    pub tau: f64,
}

impl PriorityTrial {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            reservoir: PriorityReservoir::new(k),
            priorities: Vec::new(),
            sampled: Vec::with_capacity(k),
            tau: 0.0,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn run(&mut self, weights: &[f64], gen: &mut SeededGenerator) {
        self.reservoir.reset();
        self.priorities.clear();
        for (i, &w) in weights.iter().enumerate() {
            let q = priority_of(w, gen.draw_alpha());
            self.priorities.push(q);
            self.reservoir.insert(PriorityKey {
                priority: q,
                id: i as u64,
            });
        }
        self.sampled.clear();
        if self.reservoir.items_seen() > self.k as u64 {
            let min = *self.reservoir.min().expect("non-empty");
            self.tau = min.priority;
            for key in self.reservoir.held() {
                if *key != min {
                    self.sampled.push(key.id as usize);
                }
            }
        } else {
            self.tau = 0.0;
            self.sampled
                .extend(self.reservoir.held().iter().map(|k| k.id as usize));
        }
    }

    /// `w_hat_i = max(w_i, tau)` for the sampled items, as `(index, w_hat)`.
    pub fn estimates<'a>(&'a self, weights: &'a [f64]) -> impl Iterator<Item = (usize, f64)> + 'a {
        self.sampled
            .iter()
            .map(move |&i| (i, weights[i].max(self.tau)))
    }
}

/// For every item, the `k`-th highest priority among the *other* items:
/// the threshold item `i` would face if it were sampled.
///
/// Given the other priorities, `w_hat_i` has mean `w_i` and variance
/// `v(w_i, out[i])`, so averaging `v` over trials estimates `Var[w_hat_i]`
/// without waiting for item `i` to be sampled. `scratch` must have the
/// same length as `priorities`.
pub fn leave_one_out_thresholds(
    priorities: &[f64],
    k: usize,
    scratch: &mut [f64],
    out: &mut [f64],
) {
    let n = priorities.len();
    if n <= k || k == 0 {
        out.fill(if k == 0 && n > 0 { f64::INFINITY } else { 0.0 });
        return;
    }
    scratch.copy_from_slice(priorities);
    // scratch[k] becomes the (k+1)-th highest, with the top k in front
    let (top, &mut next, _) = scratch.select_nth_unstable_by(k, |a, b| b.total_cmp(a));
    let kth = top.iter().copied().fold(f64::INFINITY, f64::min);
    for (o, &q) in out.iter_mut().zip(priorities) {
        *o = if q >= kth { next } else { kth };
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_equals_single_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.25).collect();
        let mut whole = Moments::default();
        xs.iter().for_each(|&x| whole.push(x));
        let mut a = Moments::default();
        let mut b = Moments::default();
        xs[..317].iter().for_each(|&x| a.push(x));
        xs[317..].iter().for_each(|&x| b.push(x));
        a.merge(&b);
        assert_eq!(a.count, whole.count);
        assert!((a.mean - whole.mean).abs() < 1e-12);
        assert!((a.variance() - whole.variance()).abs() < 1e-9);
    }

    #[test]
    fn chunked_runs_are_reproducible() {
        let run = || {
            run_chunked(
                50_000,
                7,
                |gen, n| {
                    let mut m = Moments::default();
                    for _ in 0..n {
                        m.push(gen.draw_alpha());
                    }
                    m
                },
                |a, b| a.merge(&b),
            )
            .unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a, b);
        assert_eq!(a.count, 50_000);
    }

    #[test]
    fn trial_samples_top_k() {
        let weights = [5.0, 1.0, 3.0, 2.0];
        let mut gen = SeededGenerator::new(3);
        let mut trial = PriorityTrial::new(2);
        trial.run(&weights, &mut gen);
        assert_eq!(trial.sampled.len(), 2);
        let mut order: Vec<usize> = (0..4).collect();
        order.sort_by(|&a, &b| trial.priorities[b].total_cmp(&trial.priorities[a]));
        let mut top = order[..2].to_vec();
        top.sort_unstable();
        let mut got = trial.sampled.clone();
        got.sort_unstable();
        assert_eq!(got, top);
        assert_eq!(trial.tau, trial.priorities[order[2]]);
    }

    #[test]
    fn leave_one_out_matches_brute_force() {
        let q = [5.0, 1.0, 9.0, 3.0, 7.0];
        let mut scratch = [0.0; 5];
        let mut out = [0.0; 5];
        for k in 1..5 {
            leave_one_out_thresholds(&q, k, &mut scratch, &mut out);
            for i in 0..5 {
                let mut others: Vec<f64> = (0..5).filter(|&j| j != i).map(|j| q[j]).collect();
                others.sort_by(|a, b| b.total_cmp(a));
                let want = if others.len() >= k {
                    others[k - 1]
                } else {
                    0.0
                };
                assert_eq!(out[i], want, "k={k} i={i}");
            }
        }
    }
}
