//! Monte Carlo checks of the estimator identities.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::thresholded_variance_estimate;
use crate::model::validate_weight;
use crate::montecarlo::{leave_one_out_thresholds, run_chunked, Moments, PriorityTrial};

/// Fewest trials [`mc_verify`] accepts.
pub const MIN_TRIALS: u64 = 10_000;

/// Largest `n` for which the pairwise covariance check runs.
pub const MAX_PAIRWISE_ITEMS: usize = 64;

/// Band width in standard errors.
pub const SIGMAS: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    /// `E[w_hat_i] = w_i` for every item and planted subset.
    Unbiased,
    /// `E[k tau] = n` on unit weights.
    UnitThreshold,
    /// `E[(w_hat_i - w_i)(w_hat_j - w_j)] = 0` for every pair.
    ZeroCovariance,
    /// `E[v_hat_i] = Var[w_hat_i]` for every item.
    VarianceEstimator,
    /// `E[sum_S v_hat_i] = Var[sum_S w_hat_i]` for every planted subset.
    SubsetVariance,
    /// With `k >= n` every estimate equals its weight.
    SampleAll,
}

impl Check {
    pub const ALL: [Check; 6] = [
        Check::Unbiased,
        Check::UnitThreshold,
        Check::ZeroCovariance,
        Check::VarianceEstimator,
        Check::SubsetVariance,
        Check::SampleAll,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlantedSubset {
    pub name: String,
    pub members: Vec<usize>,
}

impl PlantedSubset {
    pub fn new(name: impl Into<String>, members: Vec<usize>) -> Self {
        Self {
            name: name.into(),
            members,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifySpec {
    pub weights: Vec<f64>,
    pub k: usize,
    pub trials: u64,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub subsets: Vec<PlantedSubset>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub check: Check,
    /// What was checked, e.g. `item 3` or `pair 0,1`.
    pub label: String,
    pub estimate: f64,
    pub target: f64,
    pub std_error: f64,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub n: usize,
    pub k: usize,
    pub trials: u64,
    pub seed: u64,
    pub outcomes: Vec<Outcome>,
}

impl VerificationReport {
    pub fn failures(&self) -> impl Iterator<Item = &Outcome> {
        self.outcomes.iter().filter(|o| o.status == Status::Fail)
    }

    pub fn passed(&self) -> bool {
        self.failures().next().is_none()
    }

    pub fn count(&self, check: Check, status: Status) -> usize {
        self.outcomes
            .iter()
            .filter(|o| o.check == check && o.status == status)
            .count()
    }
}

#[derive(Debug, Clone, Default)]
struct Acc {
    est: Vec<Moments>,
    /// `v(w_i, tau_i)` with `tau_i` the leave-one-out threshold.
    cond_var: Vec<Moments>,
    deviation: Vec<Moments>,
    subset_est: Vec<Moments>,
    subset_deviation: Vec<Moments>,
    pairs: Vec<Moments>,
    k_tau: Moments,
    max_abs_error: f64,
}

impl Acc {
    fn merge(&mut self, other: Acc) {
        let zip = |a: &mut Vec<Moments>, b: &Vec<Moments>| {
            a.iter_mut().zip(b).for_each(|(x, y)| x.merge(y));
        };
        zip(&mut self.est, &other.est);
        zip(&mut self.cond_var, &other.cond_var);
        zip(&mut self.deviation, &other.deviation);
        zip(&mut self.subset_est, &other.subset_est);
        zip(&mut self.subset_deviation, &other.subset_deviation);
        zip(&mut self.pairs, &other.pairs);
        self.k_tau.merge(&other.k_tau);
        self.max_abs_error = self.max_abs_error.max(other.max_abs_error);
    }
}

/// Runs the requested checks over `spec.trials` independent priority
/// samples.
///
/// Bands are three standard errors wide, with a floor of `1e-9` relative
/// to the target so that zero-variance cases compare exactly. For means
/// the standard error is `sqrt(Var[w_hat] / trials)` with `Var[w_hat]`
/// itself estimated by averaging `v(w_i, tau_i)`, which stays informative
/// when an item is rarely or never sampled. The other checks use the
/// empirical standard error of the tested statistic.
pub fn mc_verify(spec: &VerifySpec) -> Result<VerificationReport> {
    let n = spec.weights.len();
    let k = spec.k;
    if k == 0 {
        return Err(Error::ZeroSampleSize);
    }
    if spec.trials < MIN_TRIALS {
        return Err(Error::InvalidArgument(format!(
            "need at least {MIN_TRIALS} trials, got {}",
            spec.trials
        )));
    }
    for (i, &w) in spec.weights.iter().enumerate() {
        validate_weight(i as u64, w)?;
    }
    for s in &spec.subsets {
        if let Some(&index) = s.members.iter().find(|&&i| i >= n) {
            return Err(Error::ItemOutOfRange { index, len: n });
        }
    }
    let wants = |c: Check| spec.checks.contains(&c);
    let pairwise = wants(Check::ZeroCovariance) && n <= MAX_PAIRWISE_ITEMS;
    let weights = &spec.weights;
    let subset_truth: Vec<f64> = spec
        .subsets
        .iter()
        .map(|s| s.members.iter().map(|&i| weights[i]).sum())
        .collect();

    let acc = run_chunked(
        spec.trials,
        spec.seed,
        |gen, count| {
            let mut acc = Acc {
                est: vec![Moments::default(); n],
                cond_var: vec![Moments::default(); n],
                deviation: vec![Moments::default(); n],
                subset_est: vec![Moments::default(); spec.subsets.len()],
                subset_deviation: vec![Moments::default(); spec.subsets.len()],
                pairs: vec![Moments::default(); if pairwise { n * (n - 1) / 2 } else { 0 }],
                ..Acc::default()
            };
            let mut trial = PriorityTrial::new(k);
            let mut est = vec![0.0; n];
            let mut vhat = vec![0.0; n];
            let mut scratch = vec![0.0; n];
            let mut loo = vec![0.0; n];
            for _ in 0..count {
                trial.run(weights, gen);
                est.fill(0.0);
                vhat.fill(0.0);
                for (i, e) in trial.estimates(weights) {
                    est[i] = e;
                    vhat[i] = thresholded_variance_estimate(weights[i], trial.tau);
                }
                leave_one_out_thresholds(&trial.priorities, k, &mut scratch, &mut loo);
                for i in 0..n {
                    let err = est[i] - weights[i];
                    acc.est[i].push(est[i]);
                    acc.cond_var[i].push(weights[i] * (loo[i] - weights[i]).max(0.0));
                    acc.deviation[i].push(vhat[i] - err * err);
                    acc.max_abs_error = acc.max_abs_error.max(err.abs());
                }
                for (s, subset) in spec.subsets.iter().enumerate() {
                    let total: f64 = subset.members.iter().map(|&i| est[i]).sum();
                    let v: f64 = subset.members.iter().map(|&i| vhat[i]).sum();
                    let err = total - subset_truth[s];
                    acc.subset_est[s].push(total);
                    acc.subset_deviation[s].push(v - err * err);
                }
                if pairwise {
                    let mut p = 0;
                    for i in 0..n {
                        for j in i + 1..n {
                            acc.pairs[p].push((est[i] - weights[i]) * (est[j] - weights[j]));
                            p += 1;
                        }
                    }
                }
                if n > k {
                    acc.k_tau.push(k as f64 * trial.tau);
                }
            }
            acc
        },
        |a, b| a.merge(b),
    )
    .expect("at least one chunk");

    let mut outcomes = Vec::new();
    let trials = spec.trials as f64;
    let mut push = |o: Outcome| outcomes.push(o);
    if wants(Check::Unbiased) {
        for i in 0..n {
            let se = (acc.cond_var[i].mean / trials).sqrt();
            push(measured(
                Check::Unbiased,
                format!("item {i}"),
                acc.est[i].mean,
                weights[i],
                se,
            ));
        }
        for (s, subset) in spec.subsets.iter().enumerate() {
            let var: f64 = subset.members.iter().map(|&i| acc.cond_var[i].mean).sum();
            push(measured(
                Check::Unbiased,
                format!("subset {}", subset.name),
                acc.subset_est[s].mean,
                subset_truth[s],
                (var / trials).sqrt(),
            ));
        }
    }
    if wants(Check::UnitThreshold) {
        if n > k && weights.iter().all(|&w| w == 1.0) {
            push(measured(
                Check::UnitThreshold,
                "k*tau".into(),
                acc.k_tau.mean,
                n as f64,
                acc.k_tau.std_error(),
            ));
        } else {
            push(skipped(
                Check::UnitThreshold,
                "needs unit weights and n > k",
            ));
        }
    }
    if wants(Check::ZeroCovariance) {
        if pairwise {
            let mut p = 0;
            for i in 0..n {
                for j in i + 1..n {
                    let m = &acc.pairs[p];
                    push(measured(
                        Check::ZeroCovariance,
                        format!("pair {i},{j}"),
                        m.mean,
                        0.0,
                        m.std_error(),
                    ));
                    p += 1;
                }
            }
        } else {
            push(skipped(
                Check::ZeroCovariance,
                "too many items for pairwise check",
            ));
        }
    }
    if wants(Check::VarianceEstimator) {
        for i in 0..n {
            let d = &acc.deviation[i];
            push(measured(
                Check::VarianceEstimator,
                format!("item {i}"),
                d.mean,
                0.0,
                d.std_error(),
            ));
        }
    }
    if wants(Check::SubsetVariance) {
        for (s, subset) in spec.subsets.iter().enumerate() {
            let d = &acc.subset_deviation[s];
            push(measured(
                Check::SubsetVariance,
                format!("subset {}", subset.name),
                d.mean,
                0.0,
                d.std_error(),
            ));
        }
    }
    if wants(Check::SampleAll) {
        if n <= k {
            push(measured(
                Check::SampleAll,
                "max |w_hat - w|".into(),
                acc.max_abs_error,
                0.0,
                0.0,
            ));
        } else {
            push(skipped(Check::SampleAll, "needs k >= n"));
        }
    }

    Ok(VerificationReport {
        n,
        k,
        trials: spec.trials,
        seed: spec.seed,
        outcomes,
    })
}

fn measured(check: Check, label: String, estimate: f64, target: f64, se: f64) -> Outcome {
    let tol = (SIGMAS * se).max(1e-9 * target.abs().max(1.0));
    let status = if (estimate - target).abs() <= tol {
        Status::Pass
    } else {
        Status::Fail
    };
    Outcome {
        check,
        label,
        estimate,
        target,
        std_error: se,
        status,
    }
}

fn skipped(check: Check, why: &str) -> Outcome {
    Outcome {
        check,
        label: why.into(),
        estimate: f64::NAN,
        target: f64::NAN,
        std_error: f64::NAN,
        status: Status::Skipped,
    }
}
