//! Priority sampling for subset-sum estimation over weighted streams.
//!
//! Each item gets a priority `w / alpha` with `alpha` uniform on `(0, 1)`.
//! A sample of size `k` keeps the `k` highest priorities; the `(k+1)`-th
//! becomes the threshold `tau`, and every sampled item estimates its weight
//! as `max(w, tau)`. Summing those estimates over any subset chosen after
//! the fact gives an unbiased estimate of the subset's total weight.
//!
//! ```
//! use priority_sampling::{ItemRecord, SeededGenerator};
//! use priority_sampling::samplers::{pri_finalize, pri_insert, PriorityReservoir};
//! use priority_sampling::estimators::subset_estimate;
//!
//! let mut gen = SeededGenerator::new(42);
//! let mut reservoir = PriorityReservoir::new(10);
//! for id in 0..1000u64 {
//!     let item = ItemRecord::new(id, 1.0 + (id % 7) as f64).unwrap();
//!     pri_insert(&mut reservoir, gen.prioritize(item));
//! }
//! let sample = pri_finalize(reservoir);
//! let report = subset_estimate(&sample, &|_: &ItemRecord| true);
//! assert_eq!(sample.len(), 10);
//! assert!(report.estimate > 0.0);
//! ```

pub mod analysis;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod model;
pub mod montecarlo;
pub mod samplers;

pub use error::{Error, Result};
pub use model::{
    compare, derive_seed, draw_alpha, prioritize, priority_of, ItemRecord, PrioritizedItem,
    PriorityKey, PrioritySample, SeededGenerator,
};

// README and book chapters, so `cargo test --doc` runs their snippets.
#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
mod readme {}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/priorities.md")]
    mod priorities {}
    #[doc = include_str!("../../../book/src/streaming.md")]
    mod streaming {}
    #[doc = include_str!("../../../book/src/subset-sums.md")]
    mod subset_sums {}
    #[doc = include_str!("../../../book/src/other-schemes.md")]
    mod other_schemes {}
    #[doc = include_str!("../../../book/src/exact-size.md")]
    mod exact_size {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
