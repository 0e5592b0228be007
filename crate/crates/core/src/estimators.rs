//! Weight, subset-sum, variance, and secondary-variable estimates.
//!
//! Every scheme hands out per-item estimates `w_hat` that are zero for
//! unsampled items and unbiased for the true weight. A subset sum is
//! estimated by adding the estimates of the sampled items the subset
//! selects, and its variance by adding per-item variance estimates.

use serde::{Deserialize, Serialize};

use crate::analysis::{SchemeTag, WrMode};
use crate::error::{Error, Result};
use crate::model::{ItemRecord, PrioritySample};
use crate::samplers::{ThresholdSample, UniformSample, WeightedSample};

/// `max(w, tau)`: the estimate of a sampled item under threshold `tau`.
#[inline]
pub fn thresholded_estimate(weight: f64, tau: f64) -> f64 {
    weight.max(tau)
}

/// Unbiased variance estimate for a sampled item under threshold `tau`:
/// `tau * max(0, tau - w)`.
///
/// Conditioned on the threshold, the item is kept with probability
/// `min(1, w/tau)` and its estimate then has squared deviation giving
/// `w * max(0, tau - w)` on average, which is the true variance.
#[inline]
pub fn thresholded_variance_estimate(weight: f64, tau: f64) -> f64 {
    tau * (tau - weight).max(0.0)
}

/// Inclusion probability of an item under weighted sampling with replacement.
#[inline]
pub fn wr_inclusion_probability(weight: f64, total: f64, k: usize) -> f64 {
    if total <= 0.0 || weight <= 0.0 {
        return 0.0;
    }
    let share = (weight / total).min(1.0);
    // 1 - (1 - share)^k without cancellation for small shares
    -((k as f64) * (-share).ln_1p()).exp_m1()
}

pub fn pri_weight_estimate(sample: &PrioritySample, id: u64) -> f64 {
    sample.get(id).map_or(0.0, |e| {
        thresholded_estimate(e.weight(), sample.threshold())
    })
}

pub fn pri_variance_estimate(sample: &PrioritySample, id: u64) -> f64 {
    sample.get(id).map_or(0.0, |e| {
        thresholded_variance_estimate(e.weight(), sample.threshold())
    })
}

/// Estimate of a secondary variable `x_i`: `max(1, tau / w_i) * x_i` if sampled.
///
/// Items without a secondary value contribute `0`. A zero-weight item with a
/// secondary value is an error: the scaling divides by the weight.
pub fn secondary_estimate(sample: &PrioritySample, id: u64) -> Result<f64> {
    let Some(e) = sample.get(id) else {
        return Ok(0.0);
    };
    let Some(x) = e.item.secondary else {
        return Ok(0.0);
    };
    if e.weight() == 0.0 {
        return Err(Error::ZeroWeightSecondary(id));
    }
    Ok((sample.threshold() / e.weight()).max(1.0) * x)
}

pub fn thr_weight_estimate(sample: &ThresholdSample, id: u64) -> f64 {
    sample
        .get(id)
        .map_or(0.0, |e| thresholded_estimate(e.weight(), sample.threshold))
}

pub fn thr_variance_estimate(sample: &ThresholdSample, id: u64) -> f64 {
    sample.get(id).map_or(0.0, |e| {
        thresholded_variance_estimate(e.weight(), sample.threshold)
    })
}

pub fn uwr_weight_estimate(sample: &UniformSample, id: u64) -> f64 {
    sample
        .get(id)
        .map_or(0.0, |e| sample.expansion() * e.weight)
}

/// Horvitz-Thompson variance estimate `w_hat^2 (1 - p)` with `p = |S| / n`.
pub fn uwr_variance_estimate(sample: &UniformSample, id: u64) -> f64 {
    sample.get(id).map_or(0.0, |e| {
        let scale = sample.expansion();
        let est = scale * e.weight;
        est * est * (1.0 - 1.0 / scale)
    })
}

pub fn wwr_weight_estimate(sample: &WeightedSample, id: u64, mode: WrMode) -> f64 {
    let count = sample.multiplicity(id);
    if count == 0 {
        return 0.0;
    }
    let w = sample
        .slots
        .iter()
        .flatten()
        .find(|s| s.id == id)
        .map_or(0.0, |s| s.weight);
    wr_item_estimate(w, count, sample.total_weight, sample.k, mode)
}

pub fn wwr_variance_estimate(sample: &WeightedSample, id: u64, mode: WrMode) -> f64 {
    let count = sample.multiplicity(id);
    if count == 0 {
        return 0.0;
    }
    let w = sample
        .slots
        .iter()
        .flatten()
        .find(|s| s.id == id)
        .map_or(0.0, |s| s.weight);
    wr_item_variance(w, count, sample.total_weight, sample.k, mode)
}

/// W+R estimate for an item held in `count >= 1` of `k` slots.
pub fn wr_item_estimate(weight: f64, count: usize, total: f64, k: usize, mode: WrMode) -> f64 {
    match mode {
        WrMode::Presence => weight / wr_inclusion_probability(weight, total, k),
        WrMode::Count => count as f64 * total / k as f64,
    }
}

/// W+R variance estimate for an item held in `count >= 1` of `k` slots.
///
/// Presence mode uses `w_hat^2 (1 - p)`; count mode uses the unbiased
/// binomial estimate of `p(1-p)`, which needs `k >= 2` (0 otherwise).
pub fn wr_item_variance(weight: f64, count: usize, total: f64, k: usize, mode: WrMode) -> f64 {
    match mode {
        WrMode::Presence => {
            let p = wr_inclusion_probability(weight, total, k);
            let est = weight / p;
            est * est * (1.0 - p)
        }
        WrMode::Count => {
            if k < 2 {
                return 0.0;
            }
            let c = count as f64;
            let kf = k as f64;
            total * total * c * (kf - c) / (kf * kf * (kf - 1.0))
        }
    }
}

/// Something that selects items for a subset sum.
pub trait Selection {
    fn selects(&self, item: &ItemRecord) -> bool;
}

impl<F: Fn(&ItemRecord) -> bool> Selection for F {
    fn selects(&self, item: &ItemRecord) -> bool {
        self(item)
    }
}

/// A serializable subset: attribute equalities joined by AND, plus an
/// optional inclusive weight range.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SubsetPredicate {
    pub terms: Vec<(String, String)>,
    pub weight_range: Option<(f64, f64)>,
}

impl SubsetPredicate {
    /// Matches everything.
    pub fn all() -> Self {
        Self::default()
    }

    pub fn with_term(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.terms.push((key.into(), value.into()));
        self
    }

    pub fn with_weight_range(mut self, lo: f64, hi: f64) -> Self {
        self.weight_range = Some((lo, hi));
        self
    }

    /// Parses `key=value`.
    pub fn parse_term(s: &str) -> Result<(String, String)> {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| Error::InvalidPredicate(format!("expected key=value, got {s:?}")))?;
        if k.is_empty() {
            return Err(Error::InvalidPredicate(format!("empty key in {s:?}")));
        }
        Ok((k.to_string(), v.to_string()))
    }

    /// Parses `lo:hi`; either side may be empty for an open bound.
    pub fn parse_range(s: &str) -> Result<(f64, f64)> {
        let (lo, hi) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidPredicate(format!("expected lo:hi, got {s:?}")))?;
        let bound = |t: &str, default: f64| -> Result<f64> {
            if t.is_empty() {
                Ok(default)
            } else {
                t.parse()
                    .map_err(|_| Error::InvalidPredicate(format!("bad bound {t:?}")))
            }
        };
        let lo = bound(lo, f64::NEG_INFINITY)?;
        let hi = bound(hi, f64::INFINITY)?;
        if lo > hi {
            return Err(Error::InvalidPredicate(format!("empty range {s:?}")));
        }
        Ok((lo, hi))
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().map(|(k, _)| k.as_str())
    }

    pub fn matches(&self, item: &ItemRecord) -> bool {
        let in_range = self
            .weight_range
            .is_none_or(|(lo, hi)| item.weight >= lo && item.weight <= hi);
        in_range
            && self
                .terms
                .iter()
                .all(|(k, v)| item.attribute(k) == Some(v.as_str()))
    }
}

impl Selection for SubsetPredicate {
    fn selects(&self, item: &ItemRecord) -> bool {
        self.matches(item)
    }
}

/// One sampled item's share of a subset estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contribution {
    pub id: u64,
    pub weight_estimate: f64,
    pub variance_estimate: f64,
}

/// Result of a subset-sum query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub scheme: SchemeTag,
    pub k: usize,
    pub items_seen: u64,
    pub estimate: f64,
    pub variance: f64,
    /// Set for single-item priority samples, where the true variance is
    /// infinite and the variance estimate says nothing useful.
    pub variance_unreliable: bool,
    pub contributions: Vec<Contribution>,
}

/// A finalized sample able to report per-item estimates.
pub trait SampleEstimates {
    fn scheme(&self) -> SchemeTag;
    fn k(&self) -> usize;
    fn items_seen(&self) -> u64;
    /// Calls `f(item, w_hat, v_hat)` once per distinct sampled item.
    fn for_each_estimate(&self, f: &mut dyn FnMut(&ItemRecord, f64, f64));
    fn variance_unreliable(&self) -> bool {
        false
    }
}

impl SampleEstimates for PrioritySample {
    fn scheme(&self) -> SchemeTag {
        SchemeTag::Pri
    }
    fn k(&self) -> usize {
        PrioritySample::k(self)
    }
    fn items_seen(&self) -> u64 {
        PrioritySample::items_seen(self)
    }
    fn for_each_estimate(&self, f: &mut dyn FnMut(&ItemRecord, f64, f64)) {
        let tau = self.threshold();
        for e in self.entries() {
            f(
                &e.item,
                thresholded_estimate(e.weight(), tau),
                thresholded_variance_estimate(e.weight(), tau),
            );
        }
    }
    fn variance_unreliable(&self) -> bool {
        PrioritySample::k(self) == 1 && PrioritySample::items_seen(self) > 1
    }
}

impl SampleEstimates for ThresholdSample {
    fn scheme(&self) -> SchemeTag {
        SchemeTag::Thr
    }
    fn k(&self) -> usize {
        self.k
    }
    fn items_seen(&self) -> u64 {
        self.items_seen
    }
    fn for_each_estimate(&self, f: &mut dyn FnMut(&ItemRecord, f64, f64)) {
        for e in &self.entries {
            f(
                &e.item,
                thresholded_estimate(e.weight(), self.threshold),
                thresholded_variance_estimate(e.weight(), self.threshold),
            );
        }
    }
}

impl SampleEstimates for UniformSample {
    fn scheme(&self) -> SchemeTag {
        SchemeTag::Uwr
    }
    fn k(&self) -> usize {
        self.k
    }
    fn items_seen(&self) -> u64 {
        self.items_seen
    }
    fn for_each_estimate(&self, f: &mut dyn FnMut(&ItemRecord, f64, f64)) {
        let scale = self.expansion();
        for e in &self.entries {
            let est = scale * e.weight;
            f(e, est, est * est * (1.0 - 1.0 / scale));
        }
    }
}

/// A with-replacement sample viewed through one of its two estimators.
#[derive(Debug, Clone, Copy)]
pub struct WeightedEstimates<'a> {
    pub sample: &'a WeightedSample,
    pub mode: WrMode,
}

impl WeightedSample {
    pub fn estimates(&self, mode: WrMode) -> WeightedEstimates<'_> {
        WeightedEstimates { sample: self, mode }
    }
}

impl SampleEstimates for WeightedEstimates<'_> {
    fn scheme(&self) -> SchemeTag {
        SchemeTag::Wwr(self.mode)
    }
    fn k(&self) -> usize {
        self.sample.k
    }
    fn items_seen(&self) -> u64 {
        self.sample.items_seen
    }
    fn for_each_estimate(&self, f: &mut dyn FnMut(&ItemRecord, f64, f64)) {
        let s = self.sample;
        for (item, count) in s.distinct() {
            f(
                item,
                wr_item_estimate(item.weight, count, s.total_weight, s.k, self.mode),
                wr_item_variance(item.weight, count, s.total_weight, s.k, self.mode),
            );
        }
    }
    fn variance_unreliable(&self) -> bool {
        self.mode == WrMode::Count && self.sample.k < 2
    }
}

/// Sums estimates and variance estimates over the sampled items `selection` picks.
pub fn subset_estimate(
    sample: &(impl SampleEstimates + ?Sized),
    selection: &impl Selection,
) -> EstimateReport {
    let mut estimate = 0.0;
    let mut variance = 0.0;
    let mut contributions = Vec::new();
    sample.for_each_estimate(&mut |item, w_hat, v_hat| {
        if selection.selects(item) {
            estimate += w_hat;
            variance += v_hat;
            contributions.push(Contribution {
                id: item.id,
                weight_estimate: w_hat,
                variance_estimate: v_hat,
            });
        }
    });
    EstimateReport {
        scheme: sample.scheme(),
        k: sample.k(),
        items_seen: sample.items_seen(),
        estimate,
        variance,
        variance_unreliable: sample.variance_unreliable(),
        contributions,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::prioritize;

    fn sample_with(weights: &[(u64, f64)], tau: f64, n: u64, k: usize) -> PrioritySample {
        let entries = weights
            .iter()
            .map(|&(id, w)| {
                let mut p = prioritize(ItemRecord::new(id, w).unwrap(), 0.5).unwrap();
                p.priority = tau.max(w) + 1.0;
                p
            })
            .collect();
        PrioritySample::from_parts(k, entries, tau, n).unwrap()
    }

    #[test]
    fn weight_estimate_is_max_of_weight_and_threshold() {
        let s = sample_with(&[(0, 5.0), (1, 2.0)], 3.0, 10, 2);
        assert_eq!(pri_weight_estimate(&s, 0), 5.0);
        assert_eq!(pri_weight_estimate(&s, 1), 3.0);
        assert_eq!(pri_weight_estimate(&s, 42), 0.0);
    }

    #[test]
    fn variance_estimate_formula() {
        let s = sample_with(&[(0, 5.0), (1, 2.0)], 3.0, 10, 2);
        assert_eq!(pri_variance_estimate(&s, 0), 0.0);
        // tau * (tau - w) = 3 * 1
        assert_eq!(pri_variance_estimate(&s, 1), 3.0);
        assert_eq!(pri_variance_estimate(&s, 9), 0.0);
    }

    #[test]
    fn secondary_scaling() {
        let mut s = sample_with(&[(0, 2.0), (1, 4.0)], 3.0, 10, 2);
        let entries: Vec<_> = s
            .entries()
            .iter()
            .cloned()
            .map(|mut e| {
                e.item.secondary = Some(if e.id() == 0 { -10.0 } else { 7.0 });
                e
            })
            .collect();
        s = PrioritySample::from_parts(2, entries, 3.0, 10).unwrap();
        assert_eq!(secondary_estimate(&s, 0).unwrap(), -15.0);
        assert_eq!(secondary_estimate(&s, 1).unwrap(), 7.0);
        assert_eq!(secondary_estimate(&s, 5).unwrap(), 0.0);
    }

    #[test]
    fn secondary_on_zero_weight_is_rejected() {
        let mut p = prioritize(ItemRecord::new(0, 0.0).unwrap(), 0.5).unwrap();
        p.item.secondary = Some(3.0);
        let s = PrioritySample::from_parts(1, vec![p], 0.0, 1).unwrap();
        assert_eq!(
            secondary_estimate(&s, 0),
            Err(Error::ZeroWeightSecondary(0))
        );
    }

    #[test]
    fn subset_sums_and_contributions() {
        let s = sample_with(&[(0, 5.0), (1, 2.0), (2, 1.0)], 3.0, 10, 3);
        let report = subset_estimate(&s, &|item: &ItemRecord| item.id != 0);
        assert_eq!(report.estimate, 6.0);
        assert_eq!(report.variance, 3.0 + 6.0);
        assert_eq!(report.contributions.len(), 2);
        let nothing = subset_estimate(&s, &|_: &ItemRecord| false);
        assert_eq!((nothing.estimate, nothing.variance), (0.0, 0.0));
    }

    #[test]
    fn sample_everything_reproduces_truth() {
        let s = sample_with(&[(0, 5.0), (1, 2.0)], 0.0, 2, 4);
        let report = subset_estimate(&s, &SubsetPredicate::all());
        assert_eq!(report.estimate, 7.0);
        assert_eq!(report.variance, 0.0);
    }

    #[test]
    fn k_one_variance_flagged() {
        let s = sample_with(&[(0, 5.0)], 3.0, 10, 1);
        assert!(subset_estimate(&s, &SubsetPredicate::all()).variance_unreliable);
    }

    #[test]
    fn wr_presence_estimate() {
        // W=10, w=5, k=2: p = 1 - 0.25 = 0.75
        let p = wr_inclusion_probability(5.0, 10.0, 2);
        assert!((p - 0.75).abs() < 1e-15);
        let est = wr_item_estimate(5.0, 1, 10.0, 2, WrMode::Presence);
        assert!((est - 20.0 / 3.0).abs() < 1e-12);
        assert_eq!(wr_item_estimate(5.0, 2, 10.0, 2, WrMode::Count), 10.0);
    }

    #[test]
    fn uniform_estimate_scales_by_n_over_k() {
        let s = UniformSample {
            k: 2,
            items_seen: 10,
            entries: vec![
                ItemRecord::new(3, 7.0).unwrap(),
                ItemRecord::new(5, 1.0).unwrap(),
            ],
        };
        assert_eq!(uwr_weight_estimate(&s, 3), 35.0);
        assert_eq!(uwr_weight_estimate(&s, 4), 0.0);
        let all = UniformSample {
            k: 2,
            items_seen: 2,
            entries: s.entries.clone(),
        };
        assert_eq!(uwr_weight_estimate(&all, 3), 7.0);
        assert_eq!(uwr_variance_estimate(&all, 3), 0.0);
    }

    #[test]
    fn predicate_parsing_and_matching() {
        let (k, v) = SubsetPredicate::parse_term("app=ftp").unwrap();
        let p = SubsetPredicate::all()
            .with_term(k, v)
            .with_weight_range(10.0, 100.0);
        let hit = ItemRecord::new(0, 50.0)
            .unwrap()
            .with_attribute("app", "ftp");
        let light = ItemRecord::new(1, 5.0)
            .unwrap()
            .with_attribute("app", "ftp");
        let other = ItemRecord::new(2, 50.0)
            .unwrap()
            .with_attribute("app", "web");
        assert!(p.matches(&hit));
        assert!(!p.matches(&light));
        assert!(!p.matches(&other));
        assert_eq!(
            SubsetPredicate::parse_range(":5").unwrap(),
            (f64::NEG_INFINITY, 5.0)
        );
        assert!(SubsetPredicate::parse_range("5:1").is_err());
        assert!(SubsetPredicate::parse_term("novalue").is_err());
    }
}
