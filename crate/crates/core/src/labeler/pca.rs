//! Principal component analysis over the feature matrix.
//!
//! Covariance is the sample covariance across packets (columns) after
//! per-column normalization; eigenpairs come from a symmetric
//! eigendecomposition, sorted by descending eigenvalue with a fixed sign
//! convention (first non-zero component of each eigenvector positive). The
//! retained dimension q is the smallest count whose cumulative explained
//! variance reaches the target.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::labeler::FeatureMatrix;

#[derive(Debug, Clone)]
pub struct PrincipalComponents {
    /// Eigenvalues in descending order, numerical negatives clamped to 0.
    pub eigenvalues: Vec<f64>,
    /// Fraction of total variance per component.
    pub explained_ratio: Vec<f64>,
    /// Retained dimension q.
    pub retained: usize,
    /// Projected packets: V points of dimension q (mean-centered data
    /// projected onto the top-q eigenvectors).
    pub points: Vec<Vec<f64>>,
}

/// Reduces the matrix to the dimension that explains `variance_target` of
/// the total variance (default caller value 0.95; 1.0 keeps the full rank).
pub fn pca(features: &FeatureMatrix, variance_target: f64) -> Result<PrincipalComponents> {
    let v = features.column_count();
    let w = features.width();
    if v < 2 {
        return Err(Error::Validation(format!(
            "PCA needs at least two points, got {v}"
        )));
    }
    if !(0.0 < variance_target && variance_target <= 1.0) {
        return Err(Error::Validation(format!(
            "variance target must lie in (0, 1], got {variance_target}"
        )));
    }

    let mut mean: DVector<f64> = DVector::zeros(w);
    for col in features.columns() {
        for (m, &x) in mean.iter_mut().zip(col) {
            *m += x;
        }
    }
    mean /= v as f64;

    let mut cov: DMatrix<f64> = DMatrix::zeros(w, w);
    for col in features.columns() {
        let centered = DVector::from_iterator(w, col.iter().cloned()) - &mean;
        // Accumulate the outer product's upper triangle.
        for i in 0..w {
            let ci = centered[i];
            if ci == 0.0 {
                continue;
            }
            for j in i..w {
                cov[(i, j)] += ci * centered[j];
            }
        }
    }
    let scale = 1.0 / (v as f64 - 1.0);
    for i in 0..w {
        for j in i..w {
            let val = cov[(i, j)] * scale;
            cov[(i, j)] = val;
            cov[(j, i)] = val;
        }
    }

    let eigen = cov.symmetric_eigen();
    let mut order: Vec<usize> = (0..w).collect();
    order.sort_by(|&a, &b| {
        eigen.eigenvalues[b]
            .partial_cmp(&eigen.eigenvalues[a])
            .expect("eigenvalues are finite")
    });

    let mut eigenvalues = Vec::with_capacity(w);
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(w);
    for &idx in &order {
        eigenvalues.push(eigen.eigenvalues[idx].max(0.0));
        let mut vec: Vec<f64> = eigen.eigenvectors.column(idx).iter().cloned().collect();
        fix_sign(&mut vec);
        vectors.push(vec);
    }

    let total: f64 = eigenvalues.iter().sum();
    let explained_ratio: Vec<f64> = if total > 0.0 {
        eigenvalues.iter().map(|&l| l / total).collect()
    } else {
        vec![0.0; w]
    };

    let retained = if total <= 0.0 {
        1
    } else {
        let mut cumulative = 0.0;
        let mut q = w;
        for (i, &r) in explained_ratio.iter().enumerate() {
            cumulative += r;
            if cumulative + 1e-12 >= variance_target {
                q = i + 1;
                break;
            }
        }
        // Never keep numerically-zero directions.
        let rank = eigenvalues
            .iter()
            .filter(|&&l| l > eigenvalues[0] * 1e-12 && l > 0.0)
            .count()
            .max(1);
        q.min(rank)
    };

    let points = features
        .columns()
        .iter()
        .map(|col| {
            let centered: Vec<f64> = col.iter().zip(mean.iter()).map(|(&x, &m)| x - m).collect();
            vectors[..retained]
                .iter()
                .map(|u| u.iter().zip(&centered).map(|(&a, &b)| a * b).sum())
                .collect()
        })
        .collect();

    Ok(PrincipalComponents {
        eigenvalues,
        explained_ratio,
        retained,
        points,
    })
}

fn fix_sign(vector: &mut [f64]) {
    if let Some(&first) = vector.iter().find(|v| v.abs() > 1e-12) {
        if first < 0.0 {
            for v in vector.iter_mut() {
                *v = -*v;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_on_a_line_need_one_component() {
        let columns: Vec<Vec<f64>> = (0..10)
            .map(|i| {
                let t = i as f64;
                vec![1.0 + 2.0 * t, -0.5 + 1.0 * t]
            })
            .collect();
        let features = FeatureMatrix::new(columns).unwrap();
        let pc = pca(&features, 0.95).unwrap();
        assert_eq!(pc.retained, 1);
        assert!((pc.explained_ratio[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn eigenvalues_are_sorted_descending_and_non_negative() {
        let columns: Vec<Vec<f64>> = (0..40)
            .map(|i| {
                let t = i as f64;
                vec![
                    (t * 0.7).sin() * 3.0,
                    (t * 0.3).cos(),
                    (t * 1.1).sin() * 0.2,
                    0.05 * t,
                ]
            })
            .collect();
        let features = FeatureMatrix::new(columns).unwrap();
        let pc = pca(&features, 0.95).unwrap();
        for pair in pc.eigenvalues.windows(2) {
            assert!(pair[0] >= pair[1]);
        }
        assert!(pc.eigenvalues.iter().all(|&l| l >= 0.0));
        let ratio_sum: f64 = pc.explained_ratio.iter().sum();
        assert!((ratio_sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn full_variance_target_keeps_the_rank() {
        // Rank-2 data embedded in 4 dimensions.
        let columns: Vec<Vec<f64>> = (0..30)
            .map(|i| {
                let a = (i as f64 * 0.37).sin();
                let b = (i as f64 * 0.91).cos();
                vec![a, b, a + b, a - b]
            })
            .collect();
        let features = FeatureMatrix::new(columns).unwrap();
        let pc = pca(&features, 1.0).unwrap();
        assert_eq!(pc.retained, 2);
    }

    #[test]
    fn full_rank_projection_preserves_centered_inner_products() {
        let columns: Vec<Vec<f64>> = (0..25)
            .map(|i| {
                let t = i as f64;
                vec![(t * 0.5).sin(), (t * 0.8).cos(), 0.1 * t, (t * 1.7).sin()]
            })
            .collect();
        let features = FeatureMatrix::new(columns.clone()).unwrap();
        let pc = pca(&features, 1.0).unwrap();

        let mean: Vec<f64> = (0..4)
            .map(|d| columns.iter().map(|c| c[d]).sum::<f64>() / columns.len() as f64)
            .collect();
        let centered: Vec<Vec<f64>> = columns
            .iter()
            .map(|c| c.iter().zip(&mean).map(|(&x, &m)| x - m).collect())
            .collect();
        for a in (0..columns.len()).step_by(5) {
            for b in (0..columns.len()).step_by(7) {
                let original: f64 = centered[a].iter().zip(&centered[b]).map(|(x, y)| x * y).sum();
                let projected: f64 = pc.points[a]
                    .iter()
                    .zip(&pc.points[b])
                    .map(|(x, y)| x * y)
                    .sum();
                assert!(
                    (original - projected).abs() < 1e-8,
                    "pair ({a},{b}): {original} vs {projected}"
                );
            }
        }
    }

    #[test]
    fn fewer_than_two_points_is_an_error() {
        let features = FeatureMatrix::new(vec![vec![1.0, 2.0]]).unwrap();
        assert!(pca(&features, 0.95).is_err());
    }
}
