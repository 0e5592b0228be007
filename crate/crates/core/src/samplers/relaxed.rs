//! Constant amortized time priority sampling.
//!
//! Instead of a heap, arrivals are appended to an unordered buffer of
//! `2k+2` slots. When the buffer fills, a linear-time selection finds the
//! `(k+1)`-st highest priority and everything below it is dropped, so one
//! cleanup of `O(k)` work happens per `k+1` arrivals.

use super::priority::Ranked;
use crate::model::{PrioritizedItem, PriorityKey, PrioritySample};

/// Unordered buffer holding a superset of the top `k+1` items.
#[derive(Debug, Clone)]
pub struct RelaxedBuffer<T = PrioritizedItem> {
    k: usize,
    items: Vec<T>,
    arrivals: u64,
    partition: Option<PriorityKey>,
    cleanups: u64,
    comparisons: u64,
}

impl<T: Ranked> RelaxedBuffer<T> {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            items: Vec::with_capacity(2 * k + 2),
            arrivals: 0,
            partition: None,
            cleanups: 0,
            comparisons: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        2 * self.k + 2
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.items.len() >= self.capacity()
    }

    /// Items ever appended to this buffer.
    pub fn arrivals(&self) -> u64 {
        self.arrivals
    }

    /// The `(k+1)`-st priority found by the most recent cleanup.
    pub fn partition(&self) -> Option<PriorityKey> {
        self.partition
    }

    pub fn cleanups(&self) -> u64 {
        self.cleanups
    }

    pub fn comparisons(&self) -> u64 {
        self.comparisons
    }

    pub fn items(&self) -> &[T] {
        &self.items
    }

    /// Appends without cleaning; callers must check [`Self::is_full`].
    pub fn push(&mut self, item: T) {
        debug_assert!(!self.is_full());
        self.arrivals += 1;
        self.items.push(item);
    }

    /// Reduces the buffer to its top `k+1` items.
    pub fn cleanup(&mut self) {
        let keep = self.k + 1;
        if self.items.len() <= keep {
            return;
        }
        let mut count = 0u64;
        self.items.select_nth_unstable_by(self.k, |a, b| {
            count += 1;
            b.key().cmp(&a.key())
        });
        self.items.truncate(keep);
        self.partition = Some(self.items[self.k].key());
        self.comparisons += count;
        self.cleanups += 1;
    }
}

/// Single-buffer relaxed priority reservoir.
#[derive(Debug, Clone)]
pub struct RelaxedReservoir<T = PrioritizedItem> {
    buffer: RelaxedBuffer<T>,
}

impl<T: Ranked> RelaxedReservoir<T> {
    pub fn new(k: usize) -> Self {
        Self {
            buffer: RelaxedBuffer::new(k),
        }
    }

    pub fn insert(&mut self, item: T) {
        relaxed_insert(&mut self.buffer, item);
    }

    pub fn buffer(&self) -> &RelaxedBuffer<T> {
        &self.buffer
    }

    pub fn items_seen(&self) -> u64 {
        self.buffer.arrivals
    }

    pub fn cleanups(&self) -> u64 {
        self.buffer.cleanups
    }

    /// Comparisons spent on cleanups so far.
    pub fn comparisons(&self) -> u64 {
        self.buffer.comparisons
    }

    pub fn split(self) -> (Vec<T>, Option<T>) {
        let k = self.buffer.k;
        let n = self.buffer.arrivals;
        let mut comparisons = 0;
        top_split(self.buffer.items, k, n, &mut comparisons)
    }

    /// Like [`Self::split`] but also reports the final selection's comparisons.
    pub fn split_counted(self) -> (Vec<T>, Option<T>, u64) {
        let k = self.buffer.k;
        let n = self.buffer.arrivals;
        let mut comparisons = self.buffer.comparisons;
        let (s, t) = top_split(self.buffer.items, k, n, &mut comparisons);
        (s, t, comparisons)
    }
}

impl RelaxedReservoir<PrioritizedItem> {
    pub fn finalize(&self) -> PrioritySample {
        let k = self.buffer.k;
        let n = self.buffer.arrivals;
        let (entries, threshold) = self.clone().split();
        PrioritySample::new_unchecked(k, entries, threshold.map_or(0.0, |t| t.priority), n)
    }
}

/// Appends one item, cleaning the buffer down to `k+1` when it fills.
pub fn relaxed_insert<T: Ranked>(buf: &mut RelaxedBuffer<T>, item: T) {
    buf.push(item);
    if buf.is_full() {
        buf.cleanup();
    }
}

/// Dual-buffer variant: one buffer collects while the other holds a cleaned
/// set, so no arrival ever waits on a cleanup. In this synchronous version
/// the cleanup of the swapped-out buffer runs at swap time.
#[derive(Debug, Clone)]
pub struct DualBufferReservoir<T = PrioritizedItem> {
    collecting: RelaxedBuffer<T>,
    cleaned: RelaxedBuffer<T>,
}

impl<T: Ranked> DualBufferReservoir<T> {
    pub fn new(k: usize) -> Self {
        Self {
            collecting: RelaxedBuffer::new(k),
            cleaned: RelaxedBuffer::new(k),
        }
    }

    pub fn insert(&mut self, item: T) {
        self.collecting.push(item);
        if self.collecting.is_full() {
            std::mem::swap(&mut self.collecting, &mut self.cleaned);
            self.cleaned.cleanup();
        }
    }

    pub fn items_seen(&self) -> u64 {
        self.collecting.arrivals + self.cleaned.arrivals
    }

    pub fn buffers(&self) -> (&RelaxedBuffer<T>, &RelaxedBuffer<T>) {
        (&self.collecting, &self.cleaned)
    }

    pub fn into_buffers(self) -> (RelaxedBuffer<T>, RelaxedBuffer<T>) {
        (self.collecting, self.cleaned)
    }
}

impl DualBufferReservoir<PrioritizedItem> {
    pub fn finalize(&self) -> PrioritySample {
        let (a, b) = self.clone().into_buffers();
        relaxed_dual_finalize(a, b)
    }
}

/// Selects the top `k+1` from the union of two buffers.
pub fn relaxed_dual_finalize(
    buf_a: RelaxedBuffer<PrioritizedItem>,
    buf_b: RelaxedBuffer<PrioritizedItem>,
) -> PrioritySample {
    let k = buf_a.k;
    debug_assert_eq!(k, buf_b.k);
    let (entries, threshold, n) = dual_split(buf_a, buf_b);
    PrioritySample::new_unchecked(k, entries, threshold.map_or(0.0, |t| t.priority), n)
}

/// Generic form of [`relaxed_dual_finalize`]: `(sample, threshold item, n)`.
pub fn dual_split<T: Ranked>(
    buf_a: RelaxedBuffer<T>,
    buf_b: RelaxedBuffer<T>,
) -> (Vec<T>, Option<T>, u64) {
    let k = buf_a.k;
    let n = buf_a.arrivals + buf_b.arrivals;
    let mut union = buf_a.items;
    union.extend(buf_b.items);
    let mut comparisons = 0;
    let (s, t) = top_split(union, k, n, &mut comparisons);
    (s, t, n)
}

/// Picks the `k` highest items and the `(k+1)`-st from an unordered pool
/// drawn from a stream of `n` items.
fn top_split<T: Ranked>(
    mut pool: Vec<T>,
    k: usize,
    n: u64,
    comparisons: &mut u64,
) -> (Vec<T>, Option<T>) {
    if n <= k as u64 {
        return (pool, None);
    }
    debug_assert!(pool.len() > k);
    pool.select_nth_unstable_by(k, |a, b| {
        *comparisons += 1;
        b.key().cmp(&a.key())
    });
    pool.truncate(k + 1);
    let threshold = pool.pop();
    (pool, threshold)
}
