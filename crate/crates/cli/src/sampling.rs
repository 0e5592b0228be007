//! Scheme selection and streaming sample construction.

use clap::ValueEnum;
use priority_sampling::analysis::{SchemeTag, WrMode};
use priority_sampling::estimators::{subset_estimate, EstimateReport, SampleEstimates, Selection};
use priority_sampling::samplers::{
    PriorityReservoir, RelaxedReservoir, ThresholdReservoir, ThresholdSample, UniformReservoir,
    UniformSample, WeightedReservoir, WeightedSample,
};
use priority_sampling::{ItemRecord, PrioritySample, SeededGenerator};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerKind {
    /// Priority sampling with a heap reservoir.
    Pri,
    /// Priority sampling with the buffered linear-time reservoir.
    PriRelaxed,
    /// Threshold sampling.
    Thr,
    /// Uniform sampling without replacement.
    Uwr,
    /// Weighted sampling with replacement.
    Wwr,
}

impl SamplerKind {
    pub fn name(self) -> &'static str {
        match self {
            SamplerKind::Pri => "pri",
            SamplerKind::PriRelaxed => "pri-relaxed",
            SamplerKind::Thr => "thr",
            SamplerKind::Uwr => "uwr",
            SamplerKind::Wwr => "wwr",
        }
    }
}

enum State {
    Pri(PriorityReservoir),
    Relaxed(RelaxedReservoir),
    Thr(ThresholdReservoir),
    Uwr(UniformReservoir),
    Wwr(WeightedReservoir),
}

/// A reservoir of any scheme fed one item at a time.
pub struct Builder {
    state: State,
}

impl Builder {
    pub fn new(kind: SamplerKind, k: usize) -> Self {
        let state = match kind {
            SamplerKind::Pri => State::Pri(PriorityReservoir::new(k)),
            SamplerKind::PriRelaxed => State::Relaxed(RelaxedReservoir::new(k)),
            SamplerKind::Thr => State::Thr(ThresholdReservoir::new(k)),
            SamplerKind::Uwr => State::Uwr(UniformReservoir::new(k)),
            SamplerKind::Wwr => State::Wwr(WeightedReservoir::new(k)),
        };
        Self { state }
    }

    pub fn push(&mut self, item: ItemRecord, gen: &mut SeededGenerator) {
        match &mut self.state {
            State::Pri(r) => r.insert(gen.prioritize(item)),
            State::Relaxed(r) => r.insert(gen.prioritize(item)),
            State::Thr(r) => r.insert(gen.prioritize(item)),
            State::Uwr(r) => r.insert(item, gen),
            State::Wwr(r) => r.insert(item, gen),
        }
    }

    pub fn finish(&self) -> Built {
        match &self.state {
            State::Pri(r) => Built::Pri(r.finalize()),
            State::Relaxed(r) => Built::Pri(r.finalize()),
            State::Thr(r) => Built::Thr(r.finalize()),
            State::Uwr(r) => Built::Uwr(r.finalize()),
            State::Wwr(r) => Built::Wwr(r.finalize()),
        }
    }
}

/// A finalized sample of any scheme.
#[derive(Debug, Clone, PartialEq)]
pub enum Built {
    Pri(PrioritySample),
    Thr(ThresholdSample),
    Uwr(UniformSample),
    Wwr(WeightedSample),
}

impl Built {
    pub fn items_seen(&self) -> u64 {
        match self {
            Built::Pri(s) => s.items_seen(),
            Built::Thr(s) => s.items_seen,
            Built::Uwr(s) => s.items_seen,
            Built::Wwr(s) => s.items_seen,
        }
    }

    pub fn distinct(&self) -> usize {
        match self {
            Built::Pri(s) => s.len(),
            Built::Thr(s) => s.len(),
            Built::Uwr(s) => s.entries.len(),
            Built::Wwr(s) => s.distinct().len(),
        }
    }

    /// `None` for schemes without a threshold.
    pub fn threshold(&self) -> Option<f64> {
        match self {
            Built::Pri(s) => Some(s.threshold()),
            Built::Thr(s) => Some(s.threshold),
            Built::Uwr(_) | Built::Wwr(_) => None,
        }
    }

    /// The estimator view; `mode` only matters for with-replacement samples.
    pub fn with_estimates<T>(&self, mode: WrMode, f: impl FnOnce(&dyn SampleEstimates) -> T) -> T {
        match self {
            Built::Pri(s) => f(s),
            Built::Thr(s) => f(s),
            Built::Uwr(s) => f(s),
            Built::Wwr(s) => f(&s.estimates(mode)),
        }
    }

    pub fn estimate(&self, mode: WrMode, selection: &impl Selection) -> EstimateReport {
        self.with_estimates(mode, |s| subset_estimate(s, selection))
    }

    pub fn scheme(&self, mode: WrMode) -> SchemeTag {
        self.with_estimates(mode, |s| s.scheme())
    }

    /// Whether any sampled item carries attribute `key`.
    pub fn knows_key(&self, key: &str) -> bool {
        self.with_estimates(WrMode::Presence, |s| {
            let mut seen = false;
            s.for_each_estimate(&mut |item, _, _| seen |= item.attributes.contains_key(key));
            seen
        })
    }
}
