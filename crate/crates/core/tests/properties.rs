use std::cmp::Ordering;

use proptest::prelude::*;

use priority_sampling::analysis::{exactify, InclusionScheme};
use priority_sampling::estimators::{subset_estimate, SampleEstimates};
use priority_sampling::samplers::{
    DualBufferReservoir, PriorityReservoir, RelaxedReservoir, ThresholdReservoir, UniformReservoir,
    WeightedReservoir,
};
use priority_sampling::{compare, prioritize, ItemRecord, PrioritizedItem, SeededGenerator};

fn weight() -> impl Strategy<Value = f64> {
    prop_oneof![
        Just(0.0),
        0.001f64..10.0,
        (0.0f64..12.0).prop_map(|e| 10f64.powf(e)),
    ]
}

fn stream(seed: u64, weights: &[f64]) -> Vec<PrioritizedItem> {
    let mut gen = SeededGenerator::new(seed);
    weights
        .iter()
        .enumerate()
        .map(|(i, &w)| gen.prioritize(ItemRecord::new(i as u64, w).unwrap()))
        .collect()
}

proptest! {
    #[test]
    fn priority_exceeds_positive_weight(w in 1e-300f64..1e300, alpha in 0.0f64..1.0) {
        prop_assume!(alpha > 0.0);
        let p = prioritize(ItemRecord::new(0, w).unwrap(), alpha).unwrap();
        prop_assert!(p.priority > w);
    }

    #[test]
    fn compare_is_a_total_order(weights in prop::collection::vec(weight(), 3..40), seed in any::<u64>()) {
        let items = stream(seed, &weights);
        for a in &items {
            prop_assert_eq!(compare(a, a), Ordering::Equal);
            for b in &items {
                prop_assert_eq!(compare(a, b), compare(b, a).reverse());
                if a.id() != b.id() {
                    prop_assert_ne!(compare(a, b), Ordering::Equal);
                }
                for c in &items {
                    if compare(a, b) == Ordering::Greater && compare(b, c) == Ordering::Greater {
                        prop_assert_eq!(compare(a, c), Ordering::Greater);
                    }
                }
            }
        }
    }

    #[test]
    fn relaxed_variants_match_the_heap(
        weights in prop::collection::vec(weight(), 0..600),
        k in 1usize..40,
        seed in any::<u64>(),
    ) {
        let items = stream(seed, &weights);
        let mut heap = PriorityReservoir::new(k);
        let mut single = RelaxedReservoir::new(k);
        let mut dual = DualBufferReservoir::new(k);
        for p in &items {
            heap.insert(p.clone());
            single.insert(p.clone());
            dual.insert(p.clone());
        }
        let exact = heap.finalize();
        prop_assert_eq!(&single.finalize(), &exact);
        prop_assert_eq!(&dual.finalize(), &exact);
        prop_assert_eq!(exact.len(), k.min(weights.len()));
    }

    #[test]
    fn same_seed_same_samples(weights in prop::collection::vec(weight(), 1..200), k in 1usize..20, seed in any::<u64>()) {
        let run = || {
            let mut gen = SeededGenerator::new(seed);
            let mut pri = PriorityReservoir::new(k);
            let mut thr = ThresholdReservoir::new(k);
            let mut uwr = UniformReservoir::new(k);
            let mut wwr = WeightedReservoir::new(k);
            for (i, &w) in weights.iter().enumerate() {
                let item = ItemRecord::new(i as u64, w).unwrap();
                let p = gen.prioritize(item.clone());
                pri.insert(p.clone());
                thr.insert(p);
                uwr.insert(item.clone(), &mut gen);
                wwr.insert(item, &mut gen);
            }
            (pri.finalize(), thr.finalize(), uwr.finalize(), wwr.finalize())
        };
        let (a, b) = (run(), run());
        prop_assert_eq!(a.0, b.0);
        prop_assert_eq!(a.1, b.1);
        prop_assert_eq!(a.2.entries.len(), k.min(weights.len()));
        prop_assert_eq!(a.2, b.2);
        prop_assert_eq!(a.3, b.3);
    }

    #[test]
    fn threshold_solver_holds_after_every_insert(
        weights in prop::collection::vec(0.001f64..1e9, 1..300),
        k in 1usize..30,
        seed in any::<u64>(),
    ) {
        let items = stream(seed, &weights);
        let mut res = ThresholdReservoir::new(k);
        for (n, p) in items.iter().enumerate() {
            res.insert(p.clone());
            if n + 1 > k {
                let tau = res.threshold();
                let sum: f64 = weights[..=n].iter().map(|&w| (w / tau).min(1.0)).sum();
                prop_assert!((sum - k as f64).abs() <= 1e-9 * k as f64, "sum {} k {}", sum, k);
            }
        }
        let sample = res.finalize();
        let members: Vec<u64> = items
            .iter()
            .filter(|p| p.priority > sample.threshold)
            .map(|p| p.id())
            .collect();
        let mut held: Vec<u64> = sample.entries.iter().map(|p| p.id()).collect();
        held.sort_unstable();
        prop_assert_eq!(held, members);
    }

    #[test]
    fn estimates_are_nonnegative(weights in prop::collection::vec(weight(), 1..100), k in 1usize..10, seed in any::<u64>()) {
        let mut res = PriorityReservoir::new(k);
        for p in stream(seed, &weights) {
            res.insert(p);
        }
        let sample = res.finalize();
        let mut ok = true;
        sample.for_each_estimate(&mut |item, w_hat, v_hat| {
            ok &= w_hat >= item.weight && v_hat >= 0.0;
        });
        prop_assert!(ok);
        let total = subset_estimate(&sample, &|_: &ItemRecord| true);
        prop_assert!(total.estimate >= 0.0 && total.variance >= 0.0);
    }

    #[test]
    fn exactify_keeps_marginals(weights in prop::collection::vec(weight(), 1..12), k in 0usize..12) {
        let positive = weights.iter().filter(|&&w| w > 0.0).count();
        let k = k.min(positive);
        let scheme = InclusionScheme::threshold(&weights, k).unwrap();
        let events = exactify(&scheme).unwrap();
        prop_assert!(events.len() <= weights.len());
        let mass: f64 = events.iter().map(|e| e.mass).sum();
        prop_assert!((mass - 1.0).abs() <= 1e-12);
        for e in &events {
            prop_assert_eq!(e.size(), k);
        }
        for (i, &p) in scheme.probs().iter().enumerate() {
            let got: f64 = events.iter().map(|e| e.mass * e.inclusion(i)).sum();
            prop_assert!((got - p).abs() <= 1e-9, "item {} got {} want {}", i, got, p);
        }
    }
}

// Kolmogorov-Smirnov against the uniform law of alpha = w / q on (0, 1).
#[test]
fn inverse_priority_is_uniform() {
    let w = 3.5;
    let mut gen = SeededGenerator::new(2024);
    let n = 100_000;
    let mut xs: Vec<f64> = (0..n)
        .map(|i| w / gen.prioritize(ItemRecord::new(i, w).unwrap()).priority)
        .collect();
    xs.sort_by(f64::total_cmp);
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let lo = i as f64 / n as f64;
            let hi = (i + 1) as f64 / n as f64;
            (x - lo).max(hi - x)
        })
        .fold(0.0, f64::max);
    // 1% critical value 1.628 / sqrt(n)
    assert!(d < 1.628 / (n as f64).sqrt(), "D = {d}");
}
