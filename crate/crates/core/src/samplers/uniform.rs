use serde::{Deserialize, Serialize};

use crate::model::{ItemRecord, SeededGenerator};

/// Classic uniform reservoir (sampling without replacement).
#[derive(Debug, Clone)]
pub struct UniformReservoir {
    k: usize,
    slots: Vec<ItemRecord>,
    items_seen: u64,
}

impl UniformReservoir {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            slots: Vec::with_capacity(k),
            items_seen: 0,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn items_seen(&self) -> u64 {
        self.items_seen
    }

    pub fn slots(&self) -> &[ItemRecord] {
        &self.slots
    }

    pub fn insert(&mut self, item: ItemRecord, gen: &mut SeededGenerator) {
        uwr_insert(self, item, gen);
    }

    pub fn finalize(&self) -> UniformSample {
        UniformSample {
            k: self.k,
            items_seen: self.items_seen,
            entries: self.slots.clone(),
        }
    }
}

/// Places the `n`-th arrival in slot `j` when a uniform `j` in `0..=n`
/// lands below `k`.
pub fn uwr_insert(res: &mut UniformReservoir, item: ItemRecord, gen: &mut SeededGenerator) {
    let n = res.items_seen;
    if (n as usize) < res.k {
        res.slots.push(item);
    } else if res.k > 0 {
        let j = gen.below(n + 1) as usize;
        if j < res.k {
            res.slots[j] = item;
        }
    }
    res.items_seen += 1;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformSample {
    pub k: usize,
    pub items_seen: u64,
    pub entries: Vec<ItemRecord>,
}

impl UniformSample {
    /// Scale factor `n / |S|` turning a sampled weight into its estimate.
    pub fn expansion(&self) -> f64 {
        if self.entries.is_empty() {
            0.0
        } else {
            self.items_seen as f64 / self.entries.len() as f64
        }
    }

    pub fn get(&self, id: u64) -> Option<&ItemRecord> {
        self.entries.iter().find(|e| e.id == id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fills_in_order_while_n_at_most_k() {
        let mut gen = SeededGenerator::new(0);
        let mut res = UniformReservoir::new(5);
        for i in 0..4 {
            res.insert(ItemRecord::new(i, 1.0).unwrap(), &mut gen);
        }
        let ids: Vec<u64> = res.slots().iter().map(|s| s.id).collect();
        assert_eq!(ids, vec![0, 1, 2, 3]);
        assert_eq!(gen.position(), 0);
    }

    #[test]
    fn zero_capacity_stays_empty() {
        let mut gen = SeededGenerator::new(0);
        let mut res = UniformReservoir::new(0);
        for i in 0..10 {
            res.insert(ItemRecord::new(i, 1.0).unwrap(), &mut gen);
        }
        assert!(res.slots().is_empty());
        assert_eq!(res.items_seen(), 10);
    }
}
