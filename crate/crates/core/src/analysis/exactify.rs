//! Turning independent inclusion probabilities into a mixture of
//! exactly-`k` samples with the same marginals.

use crate::error::{Error, Result};
use crate::model::SeededGenerator;
use crate::samplers::solve_threshold;

const SUM_TOLERANCE: f64 = 1e-9;
const SETTLE_TOLERANCE: f64 = 1e-13;

/// Independent inclusion probabilities summing to an integer `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct InclusionScheme {
    probs: Vec<f64>,
    k: usize,
}

impl InclusionScheme {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if let Some((i, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !(0.0..=1.0).contains(*p))
        {
            return Err(Error::InfeasibleMarginals(format!(
                "p[{i}] = {p} is outside [0, 1]"
            )));
        }
        let sum: f64 = probs.iter().sum();
        let k = sum.round();
        if (sum - k).abs() > SUM_TOLERANCE {
            return Err(Error::InfeasibleMarginals(format!(
                "probabilities sum to {sum}, not an integer"
            )));
        }
        Ok(Self {
            probs,
            k: k as usize,
        })
    }

    /// The marginals of threshold sampling with expected size `k`.
    pub fn threshold(weights: &[f64], k: usize) -> Result<Self> {
        Self::new(inclusion_probabilities(weights, k))
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// `min(1, w_i / tau)` with `tau` solving `sum min(1, w_i / tau) = k`.
pub fn inclusion_probabilities(weights: &[f64], k: usize) -> Vec<f64> {
    if k == 0 {
        return vec![0.0; weights.len()];
    }
    let tau = solve_threshold(weights, k);
    weights
        .iter()
        .map(|&w| {
            if tau > 0.0 {
                (w / tau).min(1.0)
            } else if w > 0.0 {
                1.0
            } else {
                0.0
            }
        })
        .collect()
}

/// One outcome of the exact-size scheme: the `forced` items plus `choose`
/// items drawn uniformly from `pool`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactKEvent {
    pub mass: f64,
    pub forced: Vec<usize>,
    pub pool: Vec<usize>,
    pub choose: usize,
}

impl ExactKEvent {
    pub fn size(&self) -> usize {
        self.forced.len() + self.choose
    }

    /// Probability that item `i` is picked given this event.
    pub fn inclusion(&self, i: usize) -> f64 {
        if self.forced.contains(&i) {
            1.0
        } else if self.pool.contains(&i) {
            self.choose as f64 / self.pool.len() as f64
        } else {
            0.0
        }
    }

    /// Draws the item set of this event.
    pub fn draw(&self, gen: &mut SeededGenerator) -> Vec<usize> {
        let mut pool = self.pool.clone();
        for slot in 0..self.choose {
            let j = slot + gen.below((pool.len() - slot) as u64) as usize;
            pool.swap(slot, j);
        }
        let mut picked = self.forced.clone();
        picked.extend_from_slice(&pool[..self.choose]);
        picked
    }
}

/// Picks an event by mass and draws its item set.
pub fn draw_exact(events: &[ExactKEvent], gen: &mut SeededGenerator) -> Vec<usize> {
    let mut x = gen.draw_alpha();
    for event in events {
        if x < event.mass {
            return event.draw(gen);
        }
        x -= event.mass;
    }
    events.last().map(|e| e.draw(gen)).unwrap_or_default()
}

/// Builds at most `n` events, each picking exactly `k` items, whose
/// mixture includes item `i` with probability `p_i`.
///
/// ```
/// use priority_sampling::analysis::{exactify, InclusionScheme};
///
/// let events = exactify(&InclusionScheme::new(vec![0.75, 0.75, 0.5]).unwrap()).unwrap();
/// assert_eq!(events.len(), 2);
/// assert_eq!(events[0].mass, 0.75);
/// assert_eq!(events[1].forced, vec![0, 1]);
/// ```
pub fn exactify(scheme: &InclusionScheme) -> Result<Vec<ExactKEvent>> {
    let n = scheme.len();
    let k = scheme.k;
    // p[i]: inclusion mass still owed to i; remaining - p[i]: exclusion owed.
    let mut p = scheme.probs.clone();
    let mut remaining = 1.0_f64;
    let mut events = Vec::new();
    loop {
        let mut forced = Vec::new();
        let mut pool = Vec::new();
        for i in 0..n {
            if p[i] <= SETTLE_TOLERANCE {
                p[i] = 0.0;
            } else if remaining - p[i] <= SETTLE_TOLERANCE {
                p[i] = remaining;
                forced.push(i);
            } else {
                pool.push(i);
            }
        }
        let choose = k.checked_sub(forced.len()).filter(|&c| c <= pool.len());
        if choose.is_none() && remaining <= n as f64 * SETTLE_TOLERANCE {
            events.push(dust_event(&p, k, remaining));
            return Ok(events);
        }
        let Some(choose) = choose else {
            return Err(Error::InfeasibleMarginals(format!(
                "{} forced and {} open items cannot make {k}",
                forced.len(),
                pool.len()
            )));
        };
        if pool.is_empty() {
            if choose != 0 {
                return Err(Error::InfeasibleMarginals(format!(
                    "only {} items can ever be picked, need {k}",
                    forced.len()
                )));
            }
            if remaining > 0.0 {
                events.push(ExactKEvent {
                    mass: remaining,
                    forced,
                    pool,
                    choose: 0,
                });
            }
            return Ok(events);
        }
        let (nf, cf) = (pool.len() as f64, choose as f64);
        let mut mass = remaining;
        let mut settles = None;
        for &i in &pool {
            let by_inclusion = if choose > 0 {
                p[i] * nf / cf
            } else {
                f64::INFINITY
            };
            let by_exclusion = if choose < pool.len() {
                (remaining - p[i]) * nf / (nf - cf)
            } else {
                f64::INFINITY
            };
            let cap = by_inclusion.min(by_exclusion);
            if cap < mass {
                mass = cap;
                settles = Some((i, by_inclusion <= by_exclusion));
            }
        }
        for &i in &pool {
            p[i] -= mass * cf / nf;
        }
        for &i in &forced {
            p[i] -= mass;
        }
        remaining -= mass;
        match settles {
            Some((i, true)) => p[i] = 0.0,
            Some((i, false)) => p[i] = remaining,
            None => remaining = 0.0,
        }
        events.push(ExactKEvent {
            mass,
            forced,
            pool,
            choose,
        });
        if remaining <= 0.0 {
            return Ok(events);
        }
    }
}

// Rounding left a sliver of mass that no longer splits cleanly; give it to
// the k items still owed the most.
fn dust_event(p: &[f64], k: usize, mass: f64) -> ExactKEvent {
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&a, &b| p[b].total_cmp(&p[a]).then(a.cmp(&b)));
    order.truncate(k);
    order.sort_unstable();
    ExactKEvent {
        mass,
        forced: order,
        pool: Vec::new(),
        choose: 0,
    }
}
