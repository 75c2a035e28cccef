//! Separability guarantees of the synthetic traffic generator: distinct
//! byte histograms per profile pair and a depth-2 decision-tree oracle that
//! tells far-apart applications from one another on histogram features.

use owtc_core::packet::{default_profiles, generate_packets, PacketVector};

const BINS: usize = 16;

/// Fraction of payload bytes per 16-wide bucket (padding excluded).
fn histogram(packet: &PacketVector) -> Vec<f64> {
    let bytes = packet.to_bytes();
    let len = packet.payload_len() as usize;
    let mut bins = vec![0.0; BINS];
    for &b in &bytes[..len] {
        bins[b as usize / BINS] += 1.0;
    }
    for v in &mut bins {
        *v /= len as f64;
    }
    bins
}

fn mean_histogram(packets: &[PacketVector]) -> Vec<f64> {
    let mut acc = vec![0.0; BINS];
    for p in packets {
        for (a, h) in acc.iter_mut().zip(histogram(p)) {
            *a += h;
        }
    }
    for v in &mut acc {
        *v /= packets.len() as f64;
    }
    acc
}

fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(&x, &y)| (x - y).abs()).sum::<f64>()
}

#[test]
fn default_profiles_have_separated_histograms() {
    let profiles = default_profiles();
    for i in 0..profiles.len() {
        for j in (i + 1)..profiles.len() {
            let a = generate_packets(&profiles[i], 150, 11).unwrap();
            let b = generate_packets(&profiles[j], 150, 11).unwrap();
            let tv = total_variation(&mean_histogram(&a), &mean_histogram(&b));
            assert!(
                tv > 0.05,
                "profiles {} and {}: total variation {tv:.4} <= 0.05",
                profiles[i].name,
                profiles[j].name
            );
        }
    }
}

// ---------------------------------------------------------------------------
// depth-2 decision tree oracle

struct Stump {
    feature: usize,
    threshold: f64,
    left_label: u32,
    right_label: u32,
}

fn majority(labels: &[u32]) -> u32 {
    let ones = labels.iter().filter(|&&l| l == 1).count();
    u32::from(ones * 2 > labels.len())
}

fn fit_stump(features: &[Vec<f64>], labels: &[u32]) -> Stump {
    let mut best = Stump {
        feature: 0,
        threshold: 0.0,
        left_label: majority(labels),
        right_label: majority(labels),
    };
    let mut best_err = usize::MAX;
    for f in 0..BINS {
        let mut values: Vec<f64> = features.iter().map(|x| x[f]).collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        values.dedup();
        for pair in values.windows(2) {
            let threshold = (pair[0] + pair[1]) / 2.0;
            let (mut left, mut right) = (Vec::new(), Vec::new());
            for (x, &l) in features.iter().zip(labels) {
                if x[f] <= threshold {
                    left.push(l);
                } else {
                    right.push(l);
                }
            }
            let ll = majority(&left);
            let rl = majority(&right);
            let err = left.iter().filter(|&&l| l != ll).count()
                + right.iter().filter(|&&l| l != rl).count();
            if err < best_err {
                best_err = err;
                best = Stump {
                    feature: f,
                    threshold,
                    left_label: ll,
                    right_label: rl,
                };
            }
        }
    }
    best
}

/// Root stump plus one stump per side.
struct DepthTwoTree {
    root: Stump,
    left: Stump,
    right: Stump,
}

fn fit_tree(features: &[Vec<f64>], labels: &[u32]) -> DepthTwoTree {
    let root = fit_stump(features, labels);
    let (mut lf, mut ll, mut rf, mut rl) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (x, &l) in features.iter().zip(labels) {
        if x[root.feature] <= root.threshold {
            lf.push(x.clone());
            ll.push(l);
        } else {
            rf.push(x.clone());
            rl.push(l);
        }
    }
    let fallback = |side: u32| Stump {
        feature: 0,
        threshold: f64::INFINITY,
        left_label: side,
        right_label: side,
    };
    let left = if lf.is_empty() { fallback(root.left_label) } else { fit_stump(&lf, &ll) };
    let right = if rf.is_empty() { fallback(root.right_label) } else { fit_stump(&rf, &rl) };
    DepthTwoTree { root, left, right }
}

fn predict(tree: &DepthTwoTree, x: &[f64]) -> u32 {
    let side = if x[tree.root.feature] <= tree.root.threshold {
        &tree.left
    } else {
        &tree.right
    };
    if x[side.feature] <= side.threshold {
        side.left_label
    } else {
        side.right_label
    }
}

#[test]
fn depth_two_tree_separates_every_default_pair() {
    let profiles = default_profiles();
    // Every seed in the suite, per the generator's separability contract.
    for seed in [1u64, 42, 2024] {
        for i in 0..profiles.len() {
            for j in (i + 1)..profiles.len() {
                let train_a = generate_packets(&profiles[i], 100, seed).unwrap();
                let train_b = generate_packets(&profiles[j], 100, seed).unwrap();
                let test_a = generate_packets(&profiles[i], 100, seed + 1).unwrap();
                let test_b = generate_packets(&profiles[j], 100, seed + 1).unwrap();

                let mut features: Vec<Vec<f64>> = Vec::new();
                let mut labels: Vec<u32> = Vec::new();
                for p in &train_a {
                    features.push(histogram(p));
                    labels.push(0);
                }
                for p in &train_b {
                    features.push(histogram(p));
                    labels.push(1);
                }
                let tree = fit_tree(&features, &labels);

                let mut correct = 0usize;
                for p in &test_a {
                    if predict(&tree, &histogram(p)) == 0 {
                        correct += 1;
                    }
                }
                for p in &test_b {
                    if predict(&tree, &histogram(p)) == 1 {
                        correct += 1;
                    }
                }
                let acc = correct as f64 / 200.0;
                assert!(
                    acc >= 0.9,
                    "seed {seed}, {} vs {}: tree accuracy {acc:.3} < 0.9",
                    profiles[i].name,
                    profiles[j].name
                );
            }
        }
    }
}
