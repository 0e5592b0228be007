//! Synthetic traces, Monte Carlo identity checks, and the replicated
//! scheme comparison.

mod compare;
mod trace;
mod verify;

pub use compare::{
    replicate_priorities, run_comparison, ComparisonOutput, ComparisonRow, ComparisonSpec,
    DistinctCountRow, MatrixErrorRow, MatrixSpec, NamedSubset,
};
pub use trace::{
    generate_trace, LabelPlan, MixPlan, Trace, TraceSpec, TraceSummary, WeightLaw, APP_KEY, IN_KEY,
    OUT_KEY,
};
pub use verify::{
    mc_verify, Check, Outcome, PlantedSubset, Status, VerificationReport, VerifySpec,
    MAX_PAIRWISE_ITEMS, MIN_TRIALS, SIGMAS,
};
