//! Replicated scheme comparison on a fixed trace.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::trace::{Trace, IN_KEY, OUT_KEY};
use crate::analysis::{SchemeTag, WrMode};
use crate::error::{Error, Result};
use crate::estimators::{SampleEstimates, Selection, SubsetPredicate};
use crate::model::{derive_seed, ItemRecord, PrioritizedItem, SeededGenerator};
use crate::samplers::{
    pri_finalize, pri_insert, thr_insert, uwr_insert, wwr_insert, PriorityReservoir,
    ThresholdReservoir, UniformReservoir, WeightedReservoir,
};

#[derive(Debug, Clone, PartialEq)]
pub struct NamedSubset {
    pub name: String,
    pub predicate: SubsetPredicate,
}

impl NamedSubset {
    pub fn new(name: impl Into<String>, predicate: SubsetPredicate) -> Self {
        Self {
            name: name.into(),
            predicate,
        }
    }
}

/// Cells are the distinct `(row_key, col_key)` attribute pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatrixSpec {
    pub row_key: String,
    pub col_key: String,
}

impl Default for MatrixSpec {
    fn default() -> Self {
        Self {
            row_key: IN_KEY.into(),
            col_key: OUT_KEY.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonSpec {
    pub schemes: Vec<SchemeTag>,
    pub ks: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    pub subsets: Vec<NamedSubset>,
    pub matrix: Option<MatrixSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub scheme: SchemeTag,
    pub k: usize,
    pub subset: String,
    pub truth: f64,
    pub estimate: f64,
    /// `(estimate - truth) / truth`.
    pub relative_error: f64,
    pub replicate: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistinctCountRow {
    pub scheme: SchemeTag,
    pub k: usize,
    pub distinct: usize,
    pub percent_of_target: f64,
    pub replicate: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixErrorRow {
    pub scheme: SchemeTag,
    pub k: usize,
    /// `sum |estimate - truth| / sum truth` over all cells.
    pub error: f64,
    pub replicate: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ComparisonOutput {
    pub rows: Vec<ComparisonRow>,
    pub distinct: Vec<DistinctCountRow>,
    pub matrix: Vec<MatrixErrorRow>,
}

impl ComparisonOutput {
    /// Median of `|relative_error|` over replicates.
    pub fn median_abs_error(&self, scheme: SchemeTag, k: usize, subset: &str) -> Option<f64> {
        median(
            self.rows
                .iter()
                .filter(|r| r.scheme == scheme && r.k == k && r.subset == subset)
                .map(|r| r.relative_error.abs())
                .collect(),
        )
    }

    pub fn median_matrix_error(&self, scheme: SchemeTag, k: usize) -> Option<f64> {
        median(
            self.matrix
                .iter()
                .filter(|r| r.scheme == scheme && r.k == k)
                .map(|r| r.error)
                .collect(),
        )
    }

    pub fn median_distinct_percent(&self, scheme: SchemeTag, k: usize) -> Option<f64> {
        median(
            self.distinct
                .iter()
                .filter(|r| r.scheme == scheme && r.k == k)
                .map(|r| r.percent_of_target)
                .collect(),
        )
    }
}

fn median(mut xs: Vec<f64>) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    Some(if xs.len() % 2 == 1 {
        xs[m]
    } else {
        (xs[m - 1] + xs[m]) / 2.0
    })
}

/// Priorities for replicate `r`: one alpha per item, shared by the priority
/// and threshold samples at every `k`.
pub fn replicate_priorities(trace: &Trace, seed: u64, replicate: usize) -> Vec<PrioritizedItem> {
    let mut gen = SeededGenerator::derived(seed, 2 * replicate as u64);
    trace
        .items
        .iter()
        .map(|i| gen.prioritize(i.clone()))
        .collect()
}

/// Samples the trace from scratch for every scheme, `k` and replicate and
/// scores the subset and matrix estimates.
pub fn run_comparison(trace: &Trace, spec: &ComparisonSpec) -> Result<ComparisonOutput> {
    if spec.ks.contains(&0) {
        return Err(Error::ZeroSampleSize);
    }
    let truths: Vec<f64> = spec
        .subsets
        .iter()
        .map(|s| {
            trace
                .items
                .iter()
                .filter(|i| s.predicate.selects(i))
                .map(|i| i.weight)
                .sum()
        })
        .collect();
    if let Some(pos) = truths.iter().position(|&t| !(t > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "subset {:?} has no weight in the trace",
            spec.subsets[pos].name
        )));
    }
    let matrix_truth = spec
        .matrix
        .as_ref()
        .map(|m| cell_totals(trace.items.iter().map(|i| (i, i.weight)), m));

    let parts: Vec<ComparisonOutput> = (0..spec.replicates)
        .into_par_iter()
        .map(|r| run_replicate(trace, spec, r, &truths, matrix_truth.as_ref()))
        .collect();
    let mut out = ComparisonOutput::default();
    for part in parts {
        out.rows.extend(part.rows);
        out.distinct.extend(part.distinct);
        out.matrix.extend(part.matrix);
    }
    Ok(out)
}

fn run_replicate(
    trace: &Trace,
    spec: &ComparisonSpec,
    r: usize,
    truths: &[f64],
    matrix_truth: Option<&BTreeMap<(String, String), f64>>,
) -> ComparisonOutput {
    let mut out = ComparisonOutput::default();
    let prioritized = replicate_priorities(trace, spec.seed, r);
    let other_seed = derive_seed(spec.seed, 2 * r as u64 + 1);
    let wants = |s: SchemeTag| spec.schemes.contains(&s);

    for &k in &spec.ks {
        let mut score = |sample: &dyn SampleEstimates, distinct: usize| {
            let scheme = sample.scheme();
            let mut estimates = vec![0.0; spec.subsets.len()];
            let mut cells = Vec::new();
            sample.for_each_estimate(&mut |item, w_hat, _| {
                for (e, s) in estimates.iter_mut().zip(&spec.subsets) {
                    if s.predicate.selects(item) {
                        *e += w_hat;
                    }
                }
                cells.push((item.clone(), w_hat));
            });
            for ((s, &truth), &estimate) in spec.subsets.iter().zip(truths).zip(&estimates) {
                out.rows.push(ComparisonRow {
                    scheme,
                    k,
                    subset: s.name.clone(),
                    truth,
                    estimate,
                    relative_error: (estimate - truth) / truth,
                    replicate: r,
                });
            }
            if let (Some(m), Some(truth)) = (&spec.matrix, matrix_truth) {
                let est = cell_totals(cells.iter().map(|(i, w)| (i, *w)), m);
                out.matrix.push(MatrixErrorRow {
                    scheme,
                    k,
                    error: matrix_error(truth, &est),
                    replicate: r,
                });
            }
            out.distinct.push(DistinctCountRow {
                scheme,
                k,
                distinct,
                percent_of_target: 100.0 * distinct as f64 / k as f64,
                replicate: r,
            });
        };

        if wants(SchemeTag::Pri) {
            let mut res = PriorityReservoir::new(k);
            for p in &prioritized {
                pri_insert(&mut res, p.clone());
            }
            let sample = pri_finalize(res);
            score(&sample, sample.len());
        }
        if wants(SchemeTag::Thr) {
            let mut res = ThresholdReservoir::new(k);
            for p in &prioritized {
                thr_insert(&mut res, p.clone());
            }
            let sample = res.finalize();
            score(&sample, sample.len());
        }
        if wants(SchemeTag::Uwr) {
            let mut gen = SeededGenerator::derived(other_seed, 2 * k as u64);
            let mut res = UniformReservoir::new(k);
            for item in &trace.items {
                uwr_insert(&mut res, item.clone(), &mut gen);
            }
            let sample = res.finalize();
            score(&sample, sample.entries.len());
        }
        let modes: Vec<WrMode> = [WrMode::Presence, WrMode::Count]
            .into_iter()
            .filter(|&m| wants(SchemeTag::Wwr(m)))
            .collect();
        if !modes.is_empty() {
            let mut gen = SeededGenerator::derived(other_seed, 2 * k as u64 + 1);
            let mut res = WeightedReservoir::new(k);
            for item in &trace.items {
                wwr_insert(&mut res, item.clone(), &mut gen);
            }
            let sample = res.finalize();
            let distinct = sample.distinct().len();
            for mode in modes {
                score(&sample.estimates(mode), distinct);
            }
        }
    }
    out
}

fn cell_totals<'a>(
    items: impl Iterator<Item = (&'a ItemRecord, f64)>,
    m: &MatrixSpec,
) -> BTreeMap<(String, String), f64> {
    let mut cells = BTreeMap::new();
    for (item, w) in items {
        let key = (
            item.attribute(&m.row_key).unwrap_or("").to_string(),
            item.attribute(&m.col_key).unwrap_or("").to_string(),
        );
        *cells.entry(key).or_insert(0.0) += w;
    }
    cells
}

fn matrix_error(
    truth: &BTreeMap<(String, String), f64>,
    est: &BTreeMap<(String, String), f64>,
) -> f64 {
    let total: f64 = truth.values().sum();
    let missed: f64 = truth
        .iter()
        .map(|(cell, &t)| (est.get(cell).copied().unwrap_or(0.0) - t).abs())
        .sum();
    missed / total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::trace::{generate_trace, TraceSpec, WeightLaw, APP_KEY};

    fn spec(ks: Vec<usize>, replicates: usize) -> ComparisonSpec {
        ComparisonSpec {
            schemes: SchemeTag::ALL.to_vec(),
            ks,
            replicates,
            seed: 4,
            subsets: vec![
                NamedSubset::new("ftp", SubsetPredicate::all().with_term(APP_KEY, "ftp")),
                NamedSubset::new("all", SubsetPredicate::all()),
            ],
            matrix: Some(MatrixSpec::default()),
        }
    }

    #[test]
    fn exhaustive_samples_are_exact() {
        let trace = generate_trace(&TraceSpec::table1_mix(300, 1)).unwrap();
        let out = run_comparison(&trace, &spec(vec![300], 2)).unwrap();
        for row in out.rows.iter().filter(|r| r.scheme.without_replacement()) {
            assert!(row.relative_error.abs() < 1e-9, "{row:?}");
        }
        for row in out.matrix.iter().filter(|r| r.scheme.without_replacement()) {
            assert!(row.error < 1e-9, "{row:?}");
        }
    }

    #[test]
    fn row_shape() {
        let trace = generate_trace(&TraceSpec::table1_mix(500, 2)).unwrap();
        let out = run_comparison(&trace, &spec(vec![10, 20], 3)).unwrap();
        assert_eq!(out.rows.len(), 3 * 2 * 5 * 2);
        assert_eq!(out.matrix.len(), 3 * 2 * 5);
        for row in out
            .distinct
            .iter()
            .filter(|r| matches!(r.scheme, SchemeTag::Pri | SchemeTag::Uwr))
        {
            assert_eq!(row.percent_of_target, 100.0);
        }
    }

    #[test]
    fn priority_and_threshold_share_priorities() {
        let trace = generate_trace(&TraceSpec::new(WeightLaw::Unit { n: 50 }, 0)).unwrap();
        let a = replicate_priorities(&trace, 9, 3);
        let b = replicate_priorities(&trace, 9, 3);
        assert_eq!(a, b);
        assert_ne!(a, replicate_priorities(&trace, 9, 4));
    }

    #[test]
    fn deterministic_across_runs() {
        let trace = generate_trace(&TraceSpec::table1_mix(400, 5)).unwrap();
        let s = spec(vec![15], 4);
        assert_eq!(
            run_comparison(&trace, &s).unwrap(),
            run_comparison(&trace, &s).unwrap()
        );
    }

    #[test]
    fn rejects_empty_subset() {
        let trace = generate_trace(&TraceSpec::new(WeightLaw::Unit { n: 10 }, 0)).unwrap();
        let mut s = spec(vec![3], 1);
        s.matrix = None;
        assert!(run_comparison(&trace, &s).is_err());
    }
}
