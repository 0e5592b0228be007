//! Streaming reservoirs for the four sampling schemes.
//!
//! | scheme | type | sample size |
//! |--------|------|-------------|
//! | priority | [`PriorityReservoir`], [`RelaxedReservoir`], [`DualBufferReservoir`] | exactly `min(n, k)` |
//! | threshold | [`ThresholdReservoir`] | `k` in expectation |
//! | uniform, no replacement | [`UniformReservoir`] | exactly `min(n, k)` |
//! | weighted, with replacement | [`WeightedReservoir`] | `k` slots, possibly repeated |

pub mod priority;
pub mod relaxed;
pub mod threshold;
pub mod uniform;
pub mod weighted;

pub use priority::{pri_finalize, pri_insert, PriorityReservoir, Ranked};
pub use relaxed::{
    dual_split, relaxed_dual_finalize, relaxed_insert, DualBufferReservoir, RelaxedBuffer,
    RelaxedReservoir,
};
pub use threshold::{solve_threshold, thr_insert, ThresholdReservoir, ThresholdSample};
pub use uniform::{uwr_insert, UniformReservoir, UniformSample};
pub use weighted::{wwr_insert, WeightedReservoir, WeightedSample};
