//! Verification suites behind `prisample verify`.

use anyhow::Result;
use clap::ValueEnum;
use priority_sampling::analysis::{
    conjecture_compare, exact_oracle, exactify, unit_variance, InclusionScheme, OracleMethod,
    SchemeTag, Statistic, Variance, WrMode,
};
use priority_sampling::harness::{mc_verify, Check, PlantedSubset, Status, VerifySpec};
use priority_sampling::montecarlo::run_chunked;
use priority_sampling::{ItemRecord, SeededGenerator};
use serde::Serialize;

use crate::sampling::{Builder, SamplerKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Identities,
    ClosedForms,
    Oracle,
    Exactify,
    Conjecture,
}

/// One machine-readable result line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Line {
    pub suite: &'static str,
    pub check: String,
    pub label: String,
    pub estimate: f64,
    pub target: f64,
    pub tolerance: f64,
    pub status: Status,
}

impl Line {
    fn new(
        suite: &'static str,
        check: impl Into<String>,
        label: impl Into<String>,
        estimate: f64,
        target: f64,
        tolerance: f64,
    ) -> Self {
        let status = if (estimate - target).abs() <= tolerance || estimate == target {
            Status::Pass
        } else {
            Status::Fail
        };
        Self {
            suite,
            check: check.into(),
            label: label.into(),
            estimate,
            target,
            tolerance,
            status,
        }
    }
}

pub fn run_suite(suite: Suite, trials: u64, seed: u64) -> Result<Vec<Line>> {
    match suite {
        Suite::Identities => identities(trials, seed),
        Suite::ClosedForms => closed_forms(trials, seed),
        Suite::Oracle => oracle(trials, seed),
        Suite::Exactify => exactify_suite(seed),
        Suite::Conjecture => conjecture(trials, seed),
    }
}

fn identities(trials: u64, seed: u64) -> Result<Vec<Line>> {
    let corpus: [(&[f64], usize, Vec<Check>); 3] = [
        (
            &[8.0, 4.0, 2.0, 1.0, 1.0, 1.0],
            3,
            vec![
                Check::Unbiased,
                Check::ZeroCovariance,
                Check::VarianceEstimator,
                Check::SubsetVariance,
            ],
        ),
        (&[1.0; 10], 3, vec![Check::Unbiased, Check::UnitThreshold]),
        (&[5.0, 3.0, 1.0], 3, vec![Check::SampleAll]),
    ];
    let mut lines = Vec::new();
    for (case, (weights, k, checks)) in corpus.into_iter().enumerate() {
        let n = weights.len();
        let report = mc_verify(&VerifySpec {
            weights: weights.to_vec(),
            k,
            trials,
            seed: seed.wrapping_add(case as u64),
            checks,
            subsets: vec![PlantedSubset::new("tail", (n / 2..n).collect())],
        })?;
        for o in report.outcomes {
            if o.status == Status::Skipped {
                continue;
            }
            let check = serde_json::to_value(o.check)?
                .as_str()
                .unwrap_or_default()
                .to_string();
            lines.push(Line {
                suite: "identities",
                check,
                label: format!("n={n} k={k} {}", o.label),
                estimate: o.estimate,
                target: o.target,
                tolerance: 3.0 * o.std_error,
                status: o.status,
            });
        }
    }
    Ok(lines)
}

/// Measures `Var[w_hat_0]` over unit weights with the real samplers.
fn closed_forms(trials: u64, seed: u64) -> Result<Vec<Line>> {
    let (n, k) = (20, 5);
    let items: Vec<ItemRecord> = (0..n as u64)
        .map(|i| ItemRecord::new(i, 1.0))
        .collect::<priority_sampling::Result<_>>()?;
    let cases = [
        (SamplerKind::Pri, SchemeTag::Pri),
        (SamplerKind::Uwr, SchemeTag::Uwr),
        (SamplerKind::Thr, SchemeTag::Thr),
        (SamplerKind::Wwr, SchemeTag::Wwr(WrMode::Presence)),
        (SamplerKind::Wwr, SchemeTag::Wwr(WrMode::Count)),
    ];
    let mut lines = Vec::new();
    for (c, (kind, scheme)) in cases.into_iter().enumerate() {
        let mode = match scheme {
            SchemeTag::Wwr(m) => m,
            _ => WrMode::Presence,
        };
        // sums of d, d^2, d^4 with d = w_hat - 1
        let sums = run_chunked(
            trials,
            seed.wrapping_add(c as u64),
            |gen, count| {
                let mut acc = [0.0; 3];
                for _ in 0..count {
                    let mut b = Builder::new(kind, k);
                    for item in &items {
                        b.push(item.clone(), gen);
                    }
                    let d = b
                        .finish()
                        .estimate(mode, &|i: &ItemRecord| i.id == 0)
                        .estimate
                        - 1.0;
                    acc[0] += d;
                    acc[1] += d * d;
                    acc[2] += d.powi(4);
                }
                acc
            },
            |a, b| a.iter_mut().zip(b).for_each(|(x, y)| *x += y),
        )
        .unwrap_or_default();
        let t = trials as f64;
        let (m1, m2, m4) = (sums[0] / t, sums[1] / t, sums[2] / t);
        let var = m2 - m1 * m1;
        let se = ((m4 - m2 * m2).max(0.0) / t).sqrt();
        let target = unit_variance(scheme, n, k)?.value();
        lines.push(Line::new(
            "closed-forms",
            "unit-variance",
            format!("{scheme} n={n} k={k}"),
            var,
            target,
            3.0 * se,
        ));
    }
    Ok(lines)
}

fn oracle(trials: u64, seed: u64) -> Result<Vec<Line>> {
    let instances: [&[f64]; 5] = [
        &[1.0, 1.0],
        &[1.0, 1.0, 1.0],
        &[1.0, 1.0, 1.0, 1.0],
        &[3.0, 2.0, 1.0],
        &[4.0, 2.0, 1.0, 1.0],
    ];
    let q = OracleMethod::Quadrature;
    let mut lines = Vec::new();
    for w in instances {
        let n = w.len();
        for k in 1..=n {
            for (i, &wi) in w.iter().enumerate() {
                let mean = exact_oracle(w, k, i, Statistic::Mean, q)?.value;
                lines.push(Line::new(
                    "oracle",
                    "exact-mean",
                    format!("{w:?} k={k} item {i}"),
                    mean,
                    wi,
                    1e-9 * wi,
                ));
            }
            if w.iter().all(|&x| x == 1.0) {
                let var = exact_oracle(w, k, 0, Statistic::Variance, q)?.value;
                let target = match unit_variance(SchemeTag::Pri, n, k)? {
                    Variance::Finite(v) => v,
                    Variance::Infinite => f64::INFINITY,
                };
                lines.push(Line::new(
                    "oracle",
                    "unit-variance",
                    format!("n={n} k={k}"),
                    var,
                    target,
                    1e-9,
                ));
            }
            if k >= 2 && k < n && n >= 3 {
                for i in 0..n {
                    let mc = exact_oracle(
                        w,
                        k,
                        i,
                        Statistic::Mean,
                        OracleMethod::MonteCarlo {
                            trials,
                            seed: seed.wrapping_add((10 * k + i) as u64),
                        },
                    )?;
                    lines.push(Line::new(
                        "oracle",
                        "simulated-mean",
                        format!("{w:?} k={k} item {i}"),
                        mc.value,
                        w[i],
                        3.0 * mc.std_error,
                    ));
                }
            }
        }
    }
    Ok(lines)
}

fn exactify_suite(seed: u64) -> Result<Vec<Line>> {
    let mut gen = SeededGenerator::new(seed);
    let (mut mass_err, mut marginal_err, mut extra_events, mut wrong_size) = (0.0f64, 0.0f64, 0, 0);
    let vectors = 1000;
    for _ in 0..vectors {
        let n = 1 + gen.below(12) as usize;
        let weights: Vec<f64> = (0..n)
            .map(|_| {
                if gen.below(6) == 0 {
                    0.0
                } else {
                    gen.draw_alpha().powf(-1.5)
                }
            })
            .collect();
        let positive = weights.iter().filter(|&&w| w > 0.0).count();
        let k = (gen.below(n as u64 + 1) as usize).min(positive);
        let scheme = InclusionScheme::threshold(&weights, k)?;
        let events = exactify(&scheme)?;
        mass_err = mass_err.max((events.iter().map(|e| e.mass).sum::<f64>() - 1.0).abs());
        extra_events += usize::from(events.len() > n);
        wrong_size += events.iter().filter(|e| e.size() != k).count();
        for (i, &p) in scheme.probs().iter().enumerate() {
            let got: f64 = events.iter().map(|e| e.mass * e.inclusion(i)).sum();
            marginal_err = marginal_err.max((got - p).abs());
        }
    }
    let label = format!("{vectors} random vectors, n <= 12");
    Ok(vec![
        Line::new("exactify", "mass-sum", &label, mass_err, 0.0, 1e-12),
        Line::new("exactify", "marginals", &label, marginal_err, 0.0, 1e-9),
        Line::new(
            "exactify",
            "events-over-n",
            &label,
            extra_events as f64,
            0.0,
            0.0,
        ),
        Line::new(
            "exactify",
            "event-size",
            &label,
            wrong_size as f64,
            0.0,
            0.0,
        ),
    ])
}

fn conjecture(trials: u64, seed: u64) -> Result<Vec<Line>> {
    let corpus: [(&[f64], &[usize]); 4] = [
        (&[4.0, 2.0, 1.0, 1.0], &[1, 2]),
        (&[3.0, 2.0, 1.0], &[1]),
        (&[8.0, 4.0, 2.0, 1.0, 1.0, 1.0], &[1, 2, 3]),
        (&[1.0; 20], &[2, 5]),
    ];
    let mut lines = Vec::new();
    for (c, (w, ks)) in corpus.into_iter().enumerate() {
        for &k in ks {
            let r = conjecture_compare(w, k, trials, seed.wrapping_add((10 * c + k) as u64))?;
            let tol = 3.0 * r.pri_std_error;
            let mut line = Line::new(
                "conjecture",
                "pri-k+1-below-thr-k",
                format!("{w:?} k={k}"),
                r.pri_total,
                r.thr_total,
                tol,
            );
            line.status = if r.significant_violation {
                Status::Fail
            } else {
                Status::Pass
            };
            lines.push(line);
        }
    }
    Ok(lines)
}
