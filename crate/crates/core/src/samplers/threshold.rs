//! Threshold sampling as a reservoir.
//!
//! The threshold `tau` is kept at the value giving an expected sample size of
//! `k` over everything seen so far, i.e. `sum_i min(1, w_i / tau) = k`.
//! Items of weight at least `tau` form the set `L`; the rest contribute their
//! total weight `U`, so the left-hand side is `|L| + U / tau`.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::model::{PrioritizedItem, PriorityKey};

/// Orders `L` by weight, earlier item first on ties.
#[derive(Debug, Clone, Copy, PartialEq)]
struct WeightKey {
    weight: f64,
    id: u64,
}

impl Eq for WeightKey {}

impl Ord for WeightKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.weight
            .total_cmp(&other.weight)
            .then_with(|| other.id.cmp(&self.id))
    }
}

impl PartialOrd for WeightKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Relative slack tolerated before a threshold decrease is treated as a bug.
const MONOTONE_SLACK: f64 = 1e-9;

/// Streaming threshold sampler with expected sample size `k`.
#[derive(Debug, Clone)]
pub struct ThresholdReservoir {
    k: usize,
    tau: f64,
    sample: BinaryHeap<Reverse<PrioritizedItem>>,
    large: BinaryHeap<Reverse<WeightKey>>,
    small_total: f64,
    items_seen: u64,
}

impl ThresholdReservoir {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            tau: 0.0,
            sample: BinaryHeap::new(),
            large: BinaryHeap::new(),
            small_total: 0.0,
            items_seen: 0,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn threshold(&self) -> f64 {
        self.tau
    }

    pub fn items_seen(&self) -> u64 {
        self.items_seen
    }

    pub fn sample_len(&self) -> usize {
        self.sample.len()
    }

    /// `|L|`, the number of items currently sampled with certainty.
    pub fn large_count(&self) -> usize {
        self.large.len()
    }

    /// `U`, the total weight of items below the threshold.
    pub fn small_total(&self) -> f64 {
        self.small_total
    }

    pub fn insert(&mut self, pitem: PrioritizedItem) {
        thr_insert(self, pitem);
    }

    fn raise_threshold(&mut self) {
        let k = self.k;
        let old = self.tau;
        if k == 0 {
            self.tau = f64::INFINITY;
            return;
        }
        let new = loop {
            let min_large = self.large.peek().map(|Reverse(w)| *w);
            if self.large.len() < k {
                let candidate = self.small_total / (k - self.large.len()) as f64;
                match min_large {
                    None => break candidate,
                    Some(w) if candidate <= w.weight => break candidate,
                    _ => {}
                }
            }
            // either tau* reached the smallest large weight or |L| >= k
            let Reverse(w) = self
                .large
                .pop()
                .expect("|L| >= k > 0 or candidate exceeded min");
            self.small_total += w.weight;
        };
        assert!(
            new >= old * (1.0 - MONOTONE_SLACK),
            "threshold decreased from {old} to {new}"
        );
        self.tau = new.max(old);
    }

    fn evict_below_threshold(&mut self) {
        while let Some(Reverse(min)) = self.sample.peek() {
            if min.priority <= self.tau {
                self.sample.pop();
            } else {
                break;
            }
        }
    }

    pub fn finalize(&self) -> ThresholdSample {
        let mut entries: Vec<PrioritizedItem> =
            self.sample.iter().map(|Reverse(p)| p.clone()).collect();
        entries.sort_unstable_by(|a, b| b.cmp(a));
        ThresholdSample {
            k: self.k,
            threshold: self.tau,
            entries,
            items_seen: self.items_seen,
        }
    }
}

/// Adds one item and raises the threshold to keep the expected size at `k`.
pub fn thr_insert(state: &mut ThresholdReservoir, pitem: PrioritizedItem) {
    state.items_seen += 1;
    let w = pitem.weight();
    if w >= state.tau {
        state.large.push(Reverse(WeightKey {
            weight: w,
            id: pitem.id(),
        }));
    } else {
        state.small_total += w;
    }
    state.sample.push(Reverse(pitem));
    if state.items_seen > state.k as u64 {
        state.raise_threshold();
        state.evict_below_threshold();
    }
}

/// A finalized threshold sample. The size is random with mean `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSample {
    pub k: usize,
    pub threshold: f64,
    pub entries: Vec<PrioritizedItem>,
    pub items_seen: u64,
}

impl ThresholdSample {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: u64) -> Option<&PrioritizedItem> {
        self.entries.iter().find(|e| e.id() == id)
    }
}

/// Offline solution of `sum_i min(1, w_i / tau) = k` for a complete weight
/// list. Returns `0` when `n <= k` or no positive solution exists.
pub fn solve_threshold(weights: &[f64], k: usize) -> f64 {
    if weights.len() <= k || k == 0 {
        return 0.0;
    }
    let mut sorted: Vec<f64> = weights.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    // suffix sums built from the small end, so huge weights never cancel
    let mut tails = vec![0.0; k];
    let mut acc: f64 = sorted[k..].iter().rev().sum();
    for taken in (0..k).rev() {
        acc += sorted[taken];
        tails[taken] = acc;
    }
    for (taken, &w) in sorted.iter().enumerate().take(k) {
        let candidate = tails[taken] / (k - taken) as f64;
        if candidate >= w {
            return candidate;
        }
    }
    // the k largest all exceed tau; only reachable with fewer than k+1 positive weights
    0.0
}

/// Threshold sample from fixed priorities: members are those with priority
/// strictly above `tau`.
pub fn threshold_members(keys: &[PriorityKey], tau: f64) -> impl Iterator<Item = &PriorityKey> {
    keys.iter().filter(move |k| k.priority > tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ItemRecord, SeededGenerator};

    fn expected_size(weights: &[f64], tau: f64) -> f64 {
        weights.iter().map(|&w| (w / tau).min(1.0)).sum()
    }

    fn run(weights: &[f64], k: usize, seed: u64) -> ThresholdReservoir {
        let mut gen = SeededGenerator::new(seed);
        let mut res = ThresholdReservoir::new(k);
        for (i, &w) in weights.iter().enumerate() {
            res.insert(gen.prioritize(ItemRecord::new(i as u64, w).unwrap()));
        }
        res
    }

    #[test]
    fn huge_weights_do_not_swamp_the_tail() {
        let weights = [1e24, 3e20, 2.5, 1.5, 1.0, 0.75, 0.5];
        let tau = solve_threshold(&weights, 4);
        assert!((expected_size(&weights, tau) - 4.0).abs() < 1e-14);
    }

    #[test]
    fn four_two_one_one() {
        let res = run(&[4.0, 2.0, 1.0, 1.0], 2, 7);
        assert_eq!(res.threshold(), 4.0);
        assert_eq!(expected_size(&[4.0, 2.0, 1.0, 1.0], 4.0), 2.0);
    }

    #[test]
    fn unit_weights_threshold_is_n_over_k() {
        let res = run(&[1.0; 4], 2, 1);
        assert_eq!(res.threshold(), 2.0);
    }

    #[test]
    fn at_most_k_items_keeps_everything() {
        let res = run(&[3.0, 0.5, 9.0], 3, 2);
        assert_eq!(res.threshold(), 0.0);
        assert_eq!(res.finalize().len(), 3);
    }

    #[test]
    fn offline_solver_agrees_with_stream() {
        let weights: Vec<f64> = (0..200).map(|i| 1.0 + ((i * 7919) % 101) as f64).collect();
        for k in [1, 5, 50, 199] {
            let res = run(&weights, k, 3);
            let offline = solve_threshold(&weights, k);
            assert!((res.threshold() - offline).abs() <= 1e-9 * offline, "k={k}");
        }
    }

    #[test]
    fn members_are_exactly_priorities_above_tau() {
        let weights: Vec<f64> = (0..500).map(|i| 0.1 + (i % 13) as f64).collect();
        let mut gen = SeededGenerator::new(4);
        let mut res = ThresholdReservoir::new(20);
        let mut all = Vec::new();
        for (i, &w) in weights.iter().enumerate() {
            let p = gen.prioritize(ItemRecord::new(i as u64, w).unwrap());
            all.push(p.key());
            res.insert(p);
        }
        let sample = res.finalize();
        let mut ids: Vec<u64> = sample.entries.iter().map(|e| e.id()).collect();
        ids.sort_unstable();
        let expected: Vec<u64> = threshold_members(&all, sample.threshold)
            .map(|k| k.id)
            .collect();
        assert_eq!(ids, expected);
    }

    #[test]
    fn zero_weights_do_not_break_solver() {
        let res = run(&[3.0, 0.0, 0.0, 0.0], 2, 5);
        assert_eq!(res.threshold(), 0.0);
        let s = res.finalize();
        assert_eq!(s.len(), 1);
        assert_eq!(s.entries[0].weight(), 3.0);
    }
}
