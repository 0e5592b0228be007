//! Synthetic weighted traces.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ItemRecord, SeededGenerator};

/// Attribute holding the application label in mixed traces.
pub const APP_KEY: &str = "app";
/// Attributes holding the interface pair in mixed traces.
pub const IN_KEY: &str = "in_if";
pub const OUT_KEY: &str = "out_if";

const SHARE_TOLERANCE: f64 = 1e-9;

/// One application class in a mixed trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelPlan {
    pub name: String,
    /// Fraction of the items carrying this label.
    pub flow_share: f64,
    /// Fraction of the total weight carrying this label.
    pub byte_share: f64,
    /// Fraction of the label's weight held by its single largest item.
    pub top_share: Option<f64>,
    /// Ratio between the largest and smallest draw of the Pareto body.
    pub spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixPlan {
    pub labels: Vec<LabelPlan>,
    pub total_weight: f64,
    /// Pareto shape of every label's body.
    pub shape: f64,
    /// Interfaces per side of the traffic matrix.
    pub interfaces: u32,
}

impl MixPlan {
    /// Ten minutes of gateway-router flows: ftp, web, dns and the rest.
    pub fn table1() -> Self {
        const TOTAL_BYTES: f64 = 4_265_677_642.0;
        const TOTAL_FLOWS: f64 = 85_680.0;
        let rows = [
            ("ftp", 727.0, 3_394_832_734.0, 3_372_865_057.0, 40.0),
            ("web", 7_787.0, 80_120_429.0, 3_139_196.0, 40.0),
            ("dns", 40_767.0, 4_083_277.0, 621_812.0, 40.0),
        ];
        let mut labels: Vec<LabelPlan> = rows
            .iter()
            .map(|&(name, flows, bytes, max, min)| LabelPlan {
                name: name.into(),
                flow_share: flows / TOTAL_FLOWS,
                byte_share: bytes / TOTAL_BYTES,
                top_share: Some(max / bytes),
                spread: max / min,
            })
            .collect();
        let named_flows: f64 = rows.iter().map(|r| r.1).sum();
        let named_bytes: f64 = rows.iter().map(|r| r.2).sum();
        labels.push(LabelPlan {
            name: "other".into(),
            flow_share: 1.0 - named_flows / TOTAL_FLOWS,
            byte_share: 1.0 - named_bytes / TOTAL_BYTES,
            top_share: None,
            spread: 1e6,
        });
        Self {
            labels,
            total_weight: TOTAL_BYTES,
            shape: 1.1,
            interfaces: 8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidTrace(msg));
        if self.labels.is_empty() {
            return bad("mix has no labels".into());
        }
        for l in &self.labels {
            let shares_ok =
                (0.0..=1.0).contains(&l.flow_share) && (0.0..=1.0).contains(&l.byte_share);
            let top_ok = l.top_share.is_none_or(|t| (0.0..=1.0).contains(&t));
            if !shares_ok || !top_ok || !(l.spread >= 1.0) {
                return bad(format!("label {:?} has out-of-range parameters", l.name));
            }
        }
        let flows: f64 = self.labels.iter().map(|l| l.flow_share).sum();
        let bytes: f64 = self.labels.iter().map(|l| l.byte_share).sum();
        if (flows - 1.0).abs() > SHARE_TOLERANCE {
            return bad(format!("flow shares sum to {flows}, not 1"));
        }
        if (bytes - 1.0).abs() > SHARE_TOLERANCE {
            return bad(format!("byte shares sum to {bytes}, not 1"));
        }
        if !(self.shape > 0.0) || !(self.total_weight > 0.0) || !self.total_weight.is_finite() {
            return bad("shape and total weight must be positive".into());
        }
        if self.interfaces == 0 {
            return bad("need at least one interface".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum WeightLaw {
    Unit {
        n: usize,
    },
    /// `scale * alpha^(-1/shape)`.
    Pareto {
        n: usize,
        shape: f64,
        scale: f64,
    },
    /// `large` items of weight `weight`, then `small` unit items.
    LargeSmall {
        large: usize,
        weight: f64,
        small: usize,
    },
    Mix {
        n: usize,
        plan: MixPlan,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSpec {
    pub law: WeightLaw,
    pub seed: u64,
}

impl TraceSpec {
    pub fn new(law: WeightLaw, seed: u64) -> Self {
        Self { law, seed }
    }

    pub fn table1_mix(n: usize, seed: u64) -> Self {
        Self::new(
            WeightLaw::Mix {
                n,
                plan: MixPlan::table1(),
            },
            seed,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub n: usize,
    pub total_weight: f64,
    /// Totals per application label; empty for unlabeled traces.
    pub label_totals: BTreeMap<String, f64>,
    pub label_counts: BTreeMap<String, usize>,
}

impl TraceSummary {
    pub fn of(items: &[ItemRecord]) -> Self {
        let mut label_totals = BTreeMap::new();
        let mut label_counts = BTreeMap::new();
        for item in items {
            if let Some(app) = item.attribute(APP_KEY) {
                *label_totals.entry(app.to_string()).or_insert(0.0) += item.weight;
                *label_counts.entry(app.to_string()).or_insert(0) += 1;
            }
        }
        Self {
            n: items.len(),
            total_weight: items.iter().map(|i| i.weight).sum(),
            label_totals,
            label_counts,
        }
    }

    pub fn label_share(&self, label: &str) -> f64 {
        self.label_totals.get(label).copied().unwrap_or(0.0) / self.total_weight
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub items: Vec<ItemRecord>,
    pub summary: TraceSummary,
}

impl Trace {
    pub fn weights(&self) -> Vec<f64> {
        self.items.iter().map(|i| i.weight).collect()
    }
}

/// Generates the trace described by `spec`; the same spec always yields
/// the same items.
pub fn generate_trace(spec: &TraceSpec) -> Result<Trace> {
    let mut gen = SeededGenerator::new(spec.seed);
    let items = match &spec.law {
        WeightLaw::Unit { n } => plain((0..*n).map(|_| 1.0))?,
        WeightLaw::Pareto { n, shape, scale } => {
            if !(*shape > 0.0 && *scale > 0.0 && scale.is_finite()) {
                return Err(Error::InvalidTrace(format!(
                    "pareto needs positive shape and scale, got {shape}, {scale}"
                )));
            }
            plain((0..*n).map(|_| scale * gen.draw_alpha().powf(-1.0 / shape)))?
        }
        WeightLaw::LargeSmall {
            large,
            weight,
            small,
        } => {
            if large >= small {
                return Err(Error::InvalidTrace(format!(
                    "large-small needs fewer large items than small ones, got {large} and {small}"
                )));
            }
            let ws = std::iter::repeat_n(*weight, *large).chain(std::iter::repeat_n(1.0, *small));
            plain(ws)?
        }
        WeightLaw::Mix { n, plan } => mix(*n, plan, &mut gen)?,
    };
    let summary = TraceSummary::of(&items);
    Ok(Trace { items, summary })
}

fn plain(weights: impl Iterator<Item = f64>) -> Result<Vec<ItemRecord>> {
    weights
        .enumerate()
        .map(|(i, w)| ItemRecord::new(i as u64, w))
        .collect::<Result<_>>()
        .map_err(|e| Error::InvalidTrace(e.to_string()))
}

fn mix(n: usize, plan: &MixPlan, gen: &mut SeededGenerator) -> Result<Vec<ItemRecord>> {
    plan.validate()?;
    let active: Vec<&LabelPlan> = plan.labels.iter().filter(|l| l.byte_share > 0.0).collect();
    if n < active.len() {
        return Err(Error::InvalidTrace(format!(
            "{n} items cannot cover {} labels",
            active.len()
        )));
    }
    let counts = apportion(n, &plan.labels);
    let mut rows: Vec<(f64, &str)> = Vec::with_capacity(n);
    for (label, &count) in plan.labels.iter().zip(&counts) {
        let budget = label.byte_share * plan.total_weight;
        let mut weights = Vec::with_capacity(count);
        let mut body_budget = budget;
        if let Some(top) = label.top_share.filter(|_| count > 1) {
            weights.push(top * budget);
            body_budget -= top * budget;
        }
        let body = count - weights.len();
        let raw: Vec<f64> = (0..body)
            .map(|_| truncated_pareto(plan.shape, label.spread, gen))
            .collect();
        let raw_total: f64 = raw.iter().sum();
        weights.extend(raw.iter().map(|r| r / raw_total * body_budget));
        rows.extend(weights.into_iter().map(|w| (w, label.name.as_str())));
    }
    gen.shuffle(&mut rows);
    let ifaces = plan.interfaces as u64;
    rows.into_iter()
        .enumerate()
        .map(|(i, (w, app))| {
            let in_if = gen.below(ifaces);
            let out_if = gen.below(ifaces);
            Ok(ItemRecord::new(i as u64, w)
                .map_err(|e| Error::InvalidTrace(e.to_string()))?
                .with_attribute(APP_KEY, app)
                .with_attribute(IN_KEY, in_if.to_string())
                .with_attribute(OUT_KEY, out_if.to_string()))
        })
        .collect()
}

// Largest-remainder rounding of n * flow_share, with at least one item for
// every label that carries weight.
fn apportion(n: usize, labels: &[LabelPlan]) -> Vec<usize> {
    let exact: Vec<f64> = labels.iter().map(|l| l.flow_share * n as f64).collect();
    let mut counts: Vec<usize> = labels
        .iter()
        .zip(&exact)
        .map(|(l, &x)| {
            if l.byte_share > 0.0 {
                (x.floor() as usize).max(1)
            } else {
                x.floor() as usize
            }
        })
        .collect();
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())));
    let mut assigned: usize = counts.iter().sum();
    for &i in order.iter().cycle() {
        if assigned >= n {
            break;
        }
        counts[i] += 1;
        assigned += 1;
    }
    while assigned > n {
        let i = (0..labels.len())
            .max_by_key(|&i| counts[i])
            .expect("labels");
        counts[i] -= 1;
        assigned -= 1;
    }
    counts
}

// Pareto(shape) on [1, spread] by inversion.
fn truncated_pareto(shape: f64, spread: f64, gen: &mut SeededGenerator) -> f64 {
    let tail = spread.powf(-shape);
    (1.0 - gen.draw_alpha() * (1.0 - tail)).powf(-1.0 / shape)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_and_large_small() {
        let t = generate_trace(&TraceSpec::new(WeightLaw::Unit { n: 100 }, 0)).unwrap();
        assert_eq!(t.items.len(), 100);
        assert!(t.items.iter().all(|i| i.weight == 1.0));

        let law = WeightLaw::LargeSmall {
            large: 3,
            weight: 1e6,
            small: 1000,
        };
        let t = generate_trace(&TraceSpec::new(law, 0)).unwrap();
        assert_eq!(t.items.len(), 1003);
        assert!(t.items[..3].iter().all(|i| i.weight == 1e6));
        assert!(t.items[3..].iter().all(|i| i.weight == 1.0));
    }

    #[test]
    fn large_small_needs_more_small_items() {
        let law = WeightLaw::LargeSmall {
            large: 5,
            weight: 10.0,
            small: 5,
        };
        assert!(generate_trace(&TraceSpec::new(law, 0)).is_err());
    }

    #[test]
    fn table1_mix_shares() {
        let t = generate_trace(&TraceSpec::table1_mix(10_000, 3)).unwrap();
        let s = &t.summary;
        assert_eq!(s.n, 10_000);
        // the printed percentages are truncated to two decimals
        for (label, printed) in [("ftp", 79.58), ("web", 1.87), ("dns", 0.09)] {
            let pct = 100.0 * s.label_share(label);
            assert_eq!((pct * 100.0).floor() / 100.0, printed, "{label}: {pct}");
        }
        let ftp = s.label_totals["ftp"];
        let top = t
            .items
            .iter()
            .filter(|i| i.attribute(APP_KEY) == Some("ftp"))
            .map(|i| i.weight)
            .fold(0.0, f64::max);
        assert!(top / ftp > 0.99);
        assert_eq!(s.label_counts["ftp"], 85);
        assert_eq!(s.label_counts.values().sum::<usize>(), 10_000);
    }

    #[test]
    fn generation_is_reproducible() {
        let a = generate_trace(&TraceSpec::table1_mix(2_000, 9)).unwrap();
        let b = generate_trace(&TraceSpec::table1_mix(2_000, 9)).unwrap();
        assert_eq!(a, b);
        let c = generate_trace(&TraceSpec::table1_mix(2_000, 10)).unwrap();
        assert_ne!(a.items, c.items);
    }

    #[test]
    fn rejects_bad_proportions() {
        let mut plan = MixPlan::table1();
        plan.labels[0].flow_share += 0.1;
        let spec = TraceSpec::new(WeightLaw::Mix { n: 100, plan }, 0);
        assert!(matches!(generate_trace(&spec), Err(Error::InvalidTrace(_))));
    }
}
