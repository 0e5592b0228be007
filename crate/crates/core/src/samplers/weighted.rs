use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{ItemRecord, SeededGenerator};

/// Weighted sampling with replacement: `k` independent slots, each holding
/// item `i` with probability `w_i / W`.
///
/// Every arrival flips a coin for every slot, so the cost is `Theta(k)` per
/// item; there is no constant-time shortcut here.
#[derive(Debug, Clone)]
pub struct WeightedReservoir {
    k: usize,
    slots: Vec<Option<ItemRecord>>,
    total_weight: f64,
    items_seen: u64,
}

impl WeightedReservoir {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            slots: vec![None; k],
            total_weight: 0.0,
            items_seen: 0,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    pub fn items_seen(&self) -> u64 {
        self.items_seen
    }

    pub fn insert(&mut self, item: ItemRecord, gen: &mut SeededGenerator) {
        wwr_insert(self, item, gen);
    }

    pub fn finalize(&self) -> WeightedSample {
        WeightedSample {
            k: self.k,
            total_weight: self.total_weight,
            items_seen: self.items_seen,
            slots: self.slots.clone(),
        }
    }
}

/// Replaces each slot independently with probability `w_n / (W + w_n)`.
pub fn wwr_insert(state: &mut WeightedReservoir, item: ItemRecord, gen: &mut SeededGenerator) {
    let w = item.weight;
    let combined = state.total_weight + w;
    if combined > 0.0 {
        let p = w / combined;
        for slot in state.slots.iter_mut() {
            if gen.draw_alpha() <= p {
                *slot = Some(item.clone());
            }
        }
    }
    state.total_weight = combined;
    state.items_seen += 1;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedSample {
    pub k: usize,
    pub total_weight: f64,
    pub items_seen: u64,
    pub slots: Vec<Option<ItemRecord>>,
}

impl WeightedSample {
    /// Distinct sampled items with the number of slots each occupies, in id order.
    pub fn distinct(&self) -> Vec<(&ItemRecord, usize)> {
        let mut by_id: BTreeMap<u64, (&ItemRecord, usize)> = BTreeMap::new();
        for item in self.slots.iter().flatten() {
            by_id.entry(item.id).or_insert((item, 0)).1 += 1;
        }
        by_id.into_values().collect()
    }

    pub fn multiplicity(&self, id: u64) -> usize {
        self.slots.iter().flatten().filter(|s| s.id == id).count()
    }
}
