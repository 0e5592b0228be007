//! Items, priorities, and the randomization contract.
//!
//! Every scheme in this crate ranks items by a priority `q = w / alpha`
//! where `alpha` is uniform on the open interval `(0, 1)`. Ties between
//! equal priorities go to the earlier item, which makes the ranking a strict
//! total order on any one stream.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One weighted stream element.
///
/// `attributes` carries whatever the producer knew about the item (ports,
/// application, interfaces, ...). Subsets are selected on these after
/// sampling, so nothing about them needs to be known up front.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemRecord {
    pub id: u64,
    pub weight: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub attributes: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub secondary: Option<f64>,
}

impl ItemRecord {
    /// Creates an item, rejecting negative, NaN and infinite weights.
    pub fn new(id: u64, weight: f64) -> Result<Self> {
        validate_weight(id, weight)?;
        Ok(Self {
            id,
            weight,
            attributes: BTreeMap::new(),
            secondary: None,
        })
    }

    pub fn with_attribute(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.attributes.insert(key.into(), value.into());
        self
    }

    pub fn with_secondary(mut self, x: f64) -> Self {
        self.secondary = Some(x);
        self
    }

    pub fn attribute(&self, key: &str) -> Option<&str> {
        self.attributes.get(key).map(String::as_str)
    }
}

pub(crate) fn validate_weight(id: u64, weight: f64) -> Result<()> {
    if weight.is_finite() && weight >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidWeight { id, weight })
    }
}

/// The comparison key of a prioritized item.
///
/// `Ord` is arranged so that the *higher* priority compares greater:
/// `(q_i, i) > (q_j, j)` iff `q_i > q_j`, or `q_i == q_j` and `i < j`.
/// Priorities are never NaN; `+inf` sorts above every finite value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorityKey {
    pub priority: f64,
    pub id: u64,
}

impl Eq for PriorityKey {}

impl Ord for PriorityKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.priority
            .total_cmp(&other.priority)
            .then_with(|| other.id.cmp(&self.id))
    }
}

impl PartialOrd for PriorityKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Priority of weight `w` under randomization `alpha`. Zero weights get
/// priority exactly zero.
#[inline]
pub fn priority_of(weight: f64, alpha: f64) -> f64 {
    if weight == 0.0 {
        0.0
    } else {
        weight / alpha
    }
}

/// An item together with its randomization and priority.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrioritizedItem {
    pub item: ItemRecord,
    pub alpha: f64,
    pub priority: f64,
}

impl PrioritizedItem {
    #[inline]
    pub fn key(&self) -> PriorityKey {
        PriorityKey {
            priority: self.priority,
            id: self.item.id,
        }
    }

    #[inline]
    pub fn id(&self) -> u64 {
        self.item.id
    }

    #[inline]
    pub fn weight(&self) -> f64 {
        self.item.weight
    }
}

impl Eq for PrioritizedItem {}

impl Ord for PrioritizedItem {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

impl PartialOrd for PrioritizedItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Attaches the priority `weight / alpha` to `item`.
pub fn prioritize(item: ItemRecord, alpha: f64) -> Result<PrioritizedItem> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    validate_weight(item.id, item.weight)?;
    let priority = priority_of(item.weight, alpha);
    Ok(PrioritizedItem {
        item,
        alpha,
        priority,
    })
}

/// Orders two prioritized items; `Greater` means `a` has the higher priority.
pub fn compare(a: &PrioritizedItem, b: &PrioritizedItem) -> Ordering {
    a.key().cmp(&b.key())
}

/// Mixes a base seed with a stream index into an independent seed.
///
/// Used to give every replicate, trial chunk, or scheme its own generator.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    // splitmix64 finalizer over a golden-ratio stride
    let mut z = seed
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(stream.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const ALPHA_SCALE: f64 = 1.0 / (1u64 << 52) as f64;

/// Maps 64 random bits to a uniform value strictly inside `(0, 1)`.
///
/// The top 52 bits select one of `2^52` equal cells and the cell midpoint is
/// returned; both `0` and `1` are unreachable and every value is exact.
#[inline]
pub fn alpha_from_bits(u: u64) -> f64 {
    ((u >> 12) as f64 + 0.5) * ALPHA_SCALE
}

/// Deterministic, seedable source of randomization values.
#[derive(Debug, Clone)]
pub struct SeededGenerator {
    seed: u64,
    position: u64,
    rng: ChaCha8Rng,
}

impl SeededGenerator {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            position: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Generator for sub-stream `stream` of `seed`.
    pub fn derived(seed: u64, stream: u64) -> Self {
        Self::new(derive_seed(seed, stream))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of values drawn so far.
    pub fn position(&self) -> u64 {
        self.position
    }

    /// Uniform draw on the open interval `(0, 1)`.
    #[inline]
    pub fn draw_alpha(&mut self) -> f64 {
        self.position += 1;
        alpha_from_bits(self.rng.next_u64())
    }

    /// Uniform integer in `0..bound`. `bound` must be positive.
    #[inline]
    pub fn below(&mut self, bound: u64) -> u64 {
        self.position += 1;
        self.rng.random_range(0..bound)
    }

    /// Shuffles `xs` in place.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        self.position += xs.len() as u64;
        xs.shuffle(&mut self.rng);
    }

    /// Draws alpha and attaches the resulting priority to `item`.
    pub fn prioritize(&mut self, item: ItemRecord) -> PrioritizedItem {
        let alpha = self.draw_alpha();
        let priority = priority_of(item.weight, alpha);
        PrioritizedItem {
            item,
            alpha,
            priority,
        }
    }
}

/// Free-function form of [`SeededGenerator::draw_alpha`].
pub fn draw_alpha(gen: &mut SeededGenerator) -> f64 {
    gen.draw_alpha()
}

/// A finalized priority sample: the `k` highest-priority items and the
/// `(k+1)`-th priority as threshold.
///
/// With `n <= k` every item is retained and the threshold is `0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrioritySample {
    k: usize,
    entries: Vec<PrioritizedItem>,
    threshold: f64,
    items_seen: u64,
}

impl PrioritySample {
    /// Assembles a sample from stored parts, checking the sample invariants.
    pub fn from_parts(
        k: usize,
        mut entries: Vec<PrioritizedItem>,
        threshold: f64,
        items_seen: u64,
    ) -> Result<Self> {
        let expected = (k as u64).min(items_seen) as usize;
        if entries.len() != expected {
            return Err(Error::InvalidArgument(format!(
                "priority sample with k={k}, n={items_seen} must hold {expected} entries, got {}",
                entries.len()
            )));
        }
        if !(threshold >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "threshold {threshold} is negative"
            )));
        }
        if items_seen > k as u64 {
            if let Some(bad) = entries.iter().find(|e| e.priority < threshold) {
                return Err(Error::InvalidArgument(format!(
                    "entry {} has priority {} below threshold {threshold}",
                    bad.id(),
                    bad.priority
                )));
            }
        } else if threshold != 0.0 {
            return Err(Error::InvalidArgument(
                "a sample of everything must have threshold 0".into(),
            ));
        }
        entries.sort_unstable_by(|a, b| b.cmp(a));
        Ok(Self {
            k,
            entries,
            threshold,
            items_seen,
        })
    }

    pub(crate) fn new_unchecked(
        k: usize,
        mut entries: Vec<PrioritizedItem>,
        threshold: f64,
        items_seen: u64,
    ) -> Self {
        entries.sort_unstable_by(|a, b| b.cmp(a));
        Self {
            k,
            entries,
            threshold,
            items_seen,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Retained items in decreasing priority order.
    pub fn entries(&self) -> &[PrioritizedItem] {
        &self.entries
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn items_seen(&self) -> u64 {
        self.items_seen
    }

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
