//! Property tests over the numeric and set-algebra invariants.

use owtc_core::discriminator::compute_threshold;
use owtc_core::labeler::{kmeans, mapminmax};
use owtc_core::metrics::{pair_counts, rand_index};
use owtc_core::nn::ops::softmax;
use owtc_core::packet::PacketVector;
use owtc_core::tensor::Tensor;
use proptest::prelude::*;

proptest! {
    #[test]
    fn softmax_sums_to_one_and_ignores_shifts(
        logits in prop::collection::vec(-50.0f64..50.0, 1..20),
        shift in -100.0f64..100.0,
    ) {
        let base = softmax(&Tensor::from_vec(logits.clone()).unwrap()).unwrap();
        let sum: f64 = base.data().iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-9);
        prop_assert!(base.data().iter().all(|&p| p > 0.0 && p <= 1.0));

        let shifted_logits: Vec<f64> = logits.iter().map(|&v| v + shift).collect();
        let shifted = softmax(&Tensor::from_vec(shifted_logits).unwrap()).unwrap();
        for (a, b) in base.data().iter().zip(shifted.data()) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn packet_vectors_stay_in_bounds_and_round_trip(
        payload in prop::collection::vec(any::<u8>(), 1..2200),
    ) {
        let v = PacketVector::from_payload(&payload).unwrap();
        prop_assert_eq!(v.values().len(), 1456);
        prop_assert!(v.values().iter().all(|&x| (0.0..=1.0).contains(&x)));
        let kept = payload.len().min(1456);
        prop_assert_eq!(v.payload_len() as usize, kept);
        // Byte recovery is exact for the kept payload; padding stays zero.
        let bytes = v.to_bytes();
        prop_assert_eq!(&bytes[..kept], &payload[..kept]);
        prop_assert!(bytes[kept..].iter().all(|&b| b == 0));
    }

    #[test]
    fn mapminmax_lands_in_the_unit_interval(
        values in prop::collection::vec(-1e6f64..1e6, 1..64),
    ) {
        let out = mapminmax(&values);
        prop_assert_eq!(out.len(), values.len());
        prop_assert!(out.iter().all(|&x| (0.0..=1.0).contains(&x)));
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if max > min {
            prop_assert!(out.iter().any(|&x| x == 0.0));
            prop_assert!(out.iter().any(|&x| x == 1.0));
        } else {
            prop_assert!(out.iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn threshold_is_the_nearest_rank_quantile(
        scores in prop::collection::vec(0.0f64..1.0, 1..200),
        epsilon in 0.01f64..1.0,
    ) {
        let t = compute_threshold(&scores, epsilon).unwrap();
        // Theta is always one of the observed scores.
        prop_assert!(scores.iter().any(|&s| s == t.theta));
        let n = scores.len();
        let position = (1.0 - epsilon) * n as f64;
        let rank = if position <= 1.0 { 1 } else { (position.ceil() as usize).min(n) };
        let below = scores.iter().filter(|&&s| s < t.theta).count();
        let at_or_below = scores.iter().filter(|&&s| s <= t.theta).count();
        prop_assert!(below <= rank - 1, "{below} strictly below rank {rank}");
        prop_assert!(at_or_below >= rank);
    }

    #[test]
    fn pair_counts_partition_all_pairs_and_survive_permutation(
        labels in prop::collection::vec((0u32..4, 0u32..5), 2..80),
        swap in prop::collection::vec((0usize..80, 0usize..80), 0..10),
    ) {
        let truth: Vec<u32> = labels.iter().map(|&(t, _)| t).collect();
        let pred: Vec<u32> = labels.iter().map(|&(_, p)| p).collect();
        let counts = pair_counts(&truth, &pred).unwrap();
        let n = truth.len() as u64;
        prop_assert_eq!(counts.total(), n * (n - 1) / 2);

        // Jointly permuting the points changes nothing.
        let mut truth_p = truth.clone();
        let mut pred_p = pred.clone();
        for &(a, b) in &swap {
            let (a, b) = (a % truth_p.len(), b % truth_p.len());
            truth_p.swap(a, b);
            pred_p.swap(a, b);
        }
        prop_assert_eq!(pair_counts(&truth_p, &pred_p).unwrap(), counts);
        prop_assert_eq!(
            rand_index(&truth_p, &pred_p).unwrap(),
            rand_index(&truth, &pred).unwrap()
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kmeans_final_assignment_is_a_fixed_point(
        raw in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 4..60),
        k in 1usize..5,
        seed in 0u64..1000,
    ) {
        let points: Vec<Vec<f64>> = raw.iter().map(|&(x, y)| vec![x, y]).collect();
        prop_assume!(k <= points.len());
        let model = kmeans(&points, k, seed, 300).unwrap();
        // Reassigning every point to its nearest centroid changes nothing.
        for (point, &assigned) in points.iter().zip(&model.assignment) {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (c, centroid) in model.centroids.iter().enumerate() {
                let d: f64 = point
                    .iter()
                    .zip(centroid)
                    .map(|(&a, &b)| (a - b) * (a - b))
                    .sum();
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            prop_assert_eq!(best, assigned);
        }
        // Stored R matches a recomputation from the assignment.
        let recomputed: f64 = points
            .iter()
            .zip(&model.assignment)
            .map(|(p, &c)| {
                p.iter()
                    .zip(&model.centroids[c])
                    .map(|(&a, &b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
            })
            .sum();
        prop_assert!((recomputed - model.r).abs() < 1e-9);
    }
}
