//! K-means clustering with BIC model selection.
//!
//! Lloyd iterations from k distinct seeded start points, convergence on
//! centroid displacement, and a sweep over k = 1..K_max keeping the k whose
//! BIC drops the most relative to k-1. BIC uses
//! `V * ln(R / V) + k * ln(V)` where R is the sum of Euclidean distances of
//! points to their centroids.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::seed;

pub const DEFAULT_MAX_ITERS: usize = 300;
const CONVERGENCE_EPS: f64 = 1e-9;
const RESTARTS: usize = 5;

/// A converged clustering: centroids, per-point assignment, and the error
/// sum R used by BIC.
#[derive(Debug, Clone)]
pub struct ClusterModel {
    pub centroids: Vec<Vec<f64>>,
    pub k: usize,
    pub assignment: Vec<usize>,
    /// Sum of Euclidean distances of points to their assigned centroid.
    pub r: f64,
    pub bic: f64,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

/// Euclidean distance; `d((0,0),(3,4)) = 5`.
pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    squared_distance(a, b).sqrt()
}

fn nearest_centroid(point: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centroids.iter().enumerate() {
        let d = squared_distance(point, c);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

fn sum_root_squared_errors(points: &[Vec<f64>], centroids: &[Vec<f64>], assignment: &[usize]) -> f64 {
    points
        .iter()
        .zip(assignment)
        .map(|(p, &c)| euclidean(p, &centroids[c]))
        .sum()
}

fn sse(points: &[Vec<f64>], centroids: &[Vec<f64>], assignment: &[usize]) -> f64 {
    points
        .iter()
        .zip(assignment)
        .map(|(p, &c)| squared_distance(p, &centroids[c]))
        .sum()
}

/// Lloyd's algorithm from k distinct seeded start points. The clustering
/// objective (sum of squared distances) is non-increasing across iterations;
/// the run stops when no centroid moves more than 1e-9 or after `max_iters`.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed_val: u64, max_iters: usize) -> Result<ClusterModel> {
    if k == 0 {
        return Err(Error::Validation("k must be at least 1".into()));
    }
    if k > points.len() {
        return Err(Error::Validation(format!(
            "k = {k} exceeds the number of points ({})",
            points.len()
        )));
    }

    let mut starts: Vec<usize> = (0..points.len()).collect();
    starts.shuffle(&mut seed::rng(seed_val, "kmeans.init"));
    let mut centroids: Vec<Vec<f64>> = starts[..k].iter().map(|&i| points[i].clone()).collect();

    let mut assignment = vec![0usize; points.len()];
    let mut last_objective = f64::INFINITY;
    for _ in 0..max_iters {
        for (slot, point) in assignment.iter_mut().zip(points) {
            *slot = nearest_centroid(point, &centroids);
        }
        let objective = sse(points, &centroids, &assignment);
        debug_assert!(objective <= last_objective + 1e-9);
        last_objective = objective;

        let dim = points[0].len();
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (point, &c) in points.iter().zip(&assignment) {
            counts[c] += 1;
            for (s, &x) in sums[c].iter_mut().zip(point) {
                *s += x;
            }
        }
        let mut max_shift: f64 = 0.0;
        for c in 0..k {
            if counts[c] == 0 {
                continue; // empty cluster keeps its previous centroid
            }
            let new: Vec<f64> = sums[c].iter().map(|&s| s / counts[c] as f64).collect();
            max_shift = max_shift.max(euclidean(&new, &centroids[c]));
            centroids[c] = new;
        }
        if max_shift < CONVERGENCE_EPS {
            break;
        }
    }
    for (slot, point) in assignment.iter_mut().zip(points) {
        *slot = nearest_centroid(point, &centroids);
    }

    let r = sum_root_squared_errors(points, &centroids, &assignment);
    let mut model = ClusterModel {
        centroids,
        k,
        assignment,
        r,
        bic: 0.0,
    };
    model.bic = bic(&model, points.len());
    Ok(model)
}

/// `BIC = V * ln(R / V) + k * ln(V)`; a perfect clustering (R = 0) is
/// floored at R = 1e-12 before the logarithm.
pub fn bic(model: &ClusterModel, sample_count: usize) -> f64 {
    let v = sample_count as f64;
    let r = model.r.max(1e-12);
    v * (r / v).ln() + model.k as f64 * v.ln()
}

/// One row of the model-selection table.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct BicRow {
    pub k: usize,
    pub r: f64,
    pub bic: f64,
    /// `BIC_k - BIC_{k-1}`, absent for k = 1.
    pub delta: Option<f64>,
}

/// Outcome of the k sweep.
#[derive(Debug, Clone)]
pub struct Autocluster {
    pub best: ClusterModel,
    /// Cluster ids 0..K-1 per point, ordered by cluster size descending.
    pub labels: Vec<u32>,
    pub table: Vec<BicRow>,
    pub chosen_k: usize,
    /// Set when the input had no structure (all points identical); K is
    /// forced to 1.
    pub degenerate: bool,
}

/// Runs K-means for k = 1..=K_max (5 seeded restarts each, best objective
/// kept) and selects the k with the largest BIC decrease.
pub fn autocluster(points: &[Vec<f64>], k_max: usize, seed_val: u64) -> Result<Autocluster> {
    if points.is_empty() {
        return Err(Error::Validation("no points to cluster".into()));
    }
    if k_max < 2 {
        return Err(Error::Validation(format!(
            "K_max must be at least 2, got {k_max}"
        )));
    }
    let k_max = k_max.min(points.len());

    if is_degenerate(points) {
        let model = kmeans(points, 1, seed::derive(seed_val, "autocluster.degenerate"), 1)?;
        let table = vec![BicRow {
            k: 1,
            r: model.r,
            bic: model.bic,
            delta: None,
        }];
        let labels = vec![0u32; points.len()];
        return Ok(Autocluster {
            best: model,
            labels,
            table,
            chosen_k: 1,
            degenerate: true,
        });
    }

    let mut models: Vec<ClusterModel> = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let mut best: Option<(f64, ClusterModel)> = None;
        for restart in 0..RESTARTS {
            let run_seed = seed::derive(seed_val, &format!("autocluster.k{k}.restart{restart}"));
            let model = kmeans(points, k, run_seed, DEFAULT_MAX_ITERS)?;
            let objective = sse(points, &model.centroids, &model.assignment);
            if best.as_ref().is_none_or(|(b, _)| objective < *b) {
                best = Some((objective, model));
            }
        }
        models.push(best.expect("at least one restart ran").1);
    }

    let mut table = Vec::with_capacity(k_max);
    for (i, model) in models.iter().enumerate() {
        let delta = (i > 0).then(|| model.bic - models[i - 1].bic);
        table.push(BicRow {
            k: model.k,
            r: model.r,
            bic: model.bic,
            delta,
        });
    }

    let chosen_k = table
        .iter()
        .filter_map(|row| row.delta.map(|d| (row.k, d)))
        .min_by(|a, b| a.1.partial_cmp(&b.1).expect("finite BIC").then(a.0.cmp(&b.0)))
        .map(|(k, _)| k)
        .expect("k_max >= 2 produces at least one delta");

    let best = relabel_by_size(models.swap_remove(chosen_k - 1));
    let labels = best.assignment.iter().map(|&c| c as u32).collect();
    Ok(Autocluster {
        best,
        labels,
        table,
        chosen_k,
        degenerate: false,
    })
}

fn is_degenerate(points: &[Vec<f64>]) -> bool {
    let first = &points[0];
    points
        .iter()
        .all(|p| p.iter().zip(first).all(|(&a, &b)| (a - b).abs() < 1e-12))
}

/// Renames cluster ids so that 0 is the largest cluster; centroids and
/// assignments are permuted consistently.
fn relabel_by_size(model: ClusterModel) -> ClusterModel {
    let mut sizes = vec![0usize; model.k];
    for &c in &model.assignment {
        sizes[c] += 1;
    }
    let mut order: Vec<usize> = (0..model.k).collect();
    order.sort_by(|&a, &b| sizes[b].cmp(&sizes[a]).then(a.cmp(&b)));
    let mut rename = vec![0usize; model.k];
    for (new_id, &old_id) in order.iter().enumerate() {
        rename[old_id] = new_id;
    }
    let centroids = order.iter().map(|&old| model.centroids[old].clone()).collect();
    let assignment = model.assignment.iter().map(|&c| rename[c]).collect();
    ClusterModel {
        centroids,
        k: model.k,
        assignment,
        r: model.r,
        bic: model.bic,
    }
}
