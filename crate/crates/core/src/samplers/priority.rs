use crate::model::{PrioritizedItem, PriorityKey, PrioritySample};

/// Anything carrying a priority key can be held by the priority reservoirs.
///
/// The Monte Carlo harness runs the reservoirs over bare [`PriorityKey`]s;
/// the streaming front ends use full [`PrioritizedItem`]s.
pub trait Ranked {
    fn key(&self) -> PriorityKey;
}

impl Ranked for PriorityKey {
    #[inline]
    fn key(&self) -> PriorityKey {
        *self
    }
}

impl Ranked for PrioritizedItem {
    #[inline]
    fn key(&self) -> PriorityKey {
        PrioritizedItem::key(self)
    }
}

/// Exact priority sampling with a binary min-heap of the `k+1` highest
/// priorities seen so far.
///
/// Every arrival is pushed and, once the heap exceeds `k+1` entries, the
/// minimum is popped. The heap counts its key comparisons so the cost per
/// item can be measured against the relaxed buffers.
#[derive(Debug, Clone)]
pub struct PriorityReservoir<T = PrioritizedItem> {
    k: usize,
    heap: Vec<T>,
    items_seen: u64,
    comparisons: u64,
}

impl<T: Ranked> PriorityReservoir<T> {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            heap: Vec::with_capacity(k + 2),
            items_seen: 0,
            comparisons: 0,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn items_seen(&self) -> u64 {
        self.items_seen
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Key comparisons performed since construction or the last reset.
    pub fn comparisons(&self) -> u64 {
        self.comparisons
    }

    /// Lowest priority currently held.
    pub fn min(&self) -> Option<&T> {
        self.heap.first()
    }

    /// Items currently held, in heap order.
    pub fn held(&self) -> &[T] {
        &self.heap
    }

    pub fn reset(&mut self) {
        self.heap.clear();
        self.items_seen = 0;
        self.comparisons = 0;
    }

    pub fn insert(&mut self, item: T) {
        self.items_seen += 1;
        self.heap.push(item);
        self.sift_up(self.heap.len() - 1);
        if self.heap.len() > self.k + 1 {
            let last = self.heap.len() - 1;
            self.heap.swap(0, last);
            self.heap.pop();
            self.sift_down(0);
        }
    }

    #[inline]
    fn less(&mut self, a: usize, b: usize) -> bool {
        self.comparisons += 1;
        self.heap[a].key() < self.heap[b].key()
    }

    fn sift_up(&mut self, mut pos: usize) {
        while pos > 0 {
            let parent = (pos - 1) / 2;
            if self.less(pos, parent) {
                self.heap.swap(pos, parent);
                pos = parent;
            } else {
                break;
            }
        }
    }

    fn sift_down(&mut self, mut pos: usize) {
        let len = self.heap.len();
        loop {
            let left = 2 * pos + 1;
            if left >= len {
                break;
            }
            let right = left + 1;
            let child = if right < len && self.less(right, left) {
                right
            } else {
                left
            };
            if self.less(child, pos) {
                self.heap.swap(child, pos);
                pos = child;
            } else {
                break;
            }
        }
    }

    /// Splits the held items into `(sample, threshold item)`.
    ///
    /// The threshold item is `None` while `n <= k`.
    pub fn split(mut self) -> (Vec<T>, Option<T>) {
        if self.items_seen > self.k as u64 {
            let last = self.heap.len() - 1;
            self.heap.swap(0, last);
            let threshold = self.heap.pop();
            (self.heap, threshold)
        } else {
            (self.heap, None)
        }
    }
}

impl PriorityReservoir<PrioritizedItem> {
    /// The sample at the current stream position.
    pub fn finalize(&self) -> PrioritySample {
        pri_finalize(self.clone())
    }
}

/// Turns a reservoir into its priority sample: the heap minimum becomes the
/// threshold once more than `k` items have arrived.
pub fn pri_finalize(res: PriorityReservoir<PrioritizedItem>) -> PrioritySample {
    let k = res.k;
    let n = res.items_seen;
    let (entries, threshold) = res.split();
    let tau = threshold.map_or(0.0, |t| t.priority);
    PrioritySample::new_unchecked(k, entries, tau, n)
}

/// Streams prioritized items through a fresh reservoir.
pub fn pri_insert(res: &mut PriorityReservoir<PrioritizedItem>, item: PrioritizedItem) {
    res.insert(item);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ItemRecord, SeededGenerator};

    fn keys(qs: &[f64]) -> Vec<PriorityKey> {
        qs.iter()
            .enumerate()
            .map(|(i, &q)| PriorityKey {
                priority: q,
                id: i as u64,
            })
            .collect()
    }

    #[test]
    fn evicts_only_beyond_k_plus_one() {
        let mut res = PriorityReservoir::new(3);
        for key in keys(&[5.0, 1.0, 7.0, 3.0]) {
            res.insert(key);
        }
        assert_eq!(res.len(), 4);
        res.insert(PriorityKey {
            priority: 4.0,
            id: 4,
        });
        assert_eq!(res.len(), 4);
        let mut held: Vec<f64> = res.held().iter().map(|k| k.priority).collect();
        held.sort_by(f64::total_cmp);
        assert_eq!(held, vec![3.0, 4.0, 5.0, 7.0]);
    }

    #[test]
    fn figure_one_style_threshold() {
        // ten items, sample of three: the threshold is the fourth priority
        let qs = [2.0, 9.0, 4.5, 1.0, 8.0, 3.0, 7.5, 0.5, 6.0, 5.0];
        let mut gen = SeededGenerator::new(0);
        let mut res = PriorityReservoir::new(3);
        for (i, &q) in qs.iter().enumerate() {
            let mut p = gen.prioritize(ItemRecord::new(i as u64, 1.0).unwrap());
            p.priority = q;
            res.insert(p);
        }
        let s = pri_finalize(res);
        assert_eq!(s.threshold(), 6.0);
        let ids: Vec<u64> = s.entries().iter().map(|e| e.id()).collect();
        assert_eq!(ids, vec![1, 4, 6]);
    }

    #[test]
    fn sample_everything_when_n_at_most_k() {
        let mut gen = SeededGenerator::new(1);
        let mut res = PriorityReservoir::new(5);
        for i in 0..5 {
            res.insert(gen.prioritize(ItemRecord::new(i, 1.0 + i as f64).unwrap()));
        }
        let s = pri_finalize(res);
        assert_eq!(s.len(), 5);
        assert_eq!(s.threshold(), 0.0);
    }

    #[test]
    fn empty_stream_gives_empty_sample() {
        let s = pri_finalize(PriorityReservoir::new(4));
        assert!(s.is_empty());
        assert_eq!(s.threshold(), 0.0);
        assert_eq!(s.items_seen(), 0);
    }

    #[test]
    fn heap_matches_offline_sort() {
        let mut gen = SeededGenerator::new(99);
        let mut res = PriorityReservoir::new(100);
        let mut all = Vec::new();
        for i in 0..10_000u64 {
            let w = 1.0 + (i % 17) as f64;
            let key = PriorityKey {
                priority: w / gen.draw_alpha(),
                id: i,
            };
            all.push(key);
            res.insert(key);
        }
        all.sort_by(|a, b| b.cmp(a));
        let mut held = res.held().to_vec();
        held.sort_by(|a, b| b.cmp(a));
        assert_eq!(held, all[..101].to_vec());
    }
}
