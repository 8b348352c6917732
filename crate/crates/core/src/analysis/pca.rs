use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const JACOBI_SWEEPS: usize = 100;

/// Principal axes of a code matrix, rows of `components` in descending
/// variance order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `n_components × dims`, orthonormal rows.
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
    /// Sum of all covariance eigenvalues.
    pub total_variance: f64,
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues in descending order and unit eigenvectors as the
/// matching columns.
pub fn symmetric_eigen(a: &Array2<f64>) -> (Vec<f64>, Array2<f64>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "matrix must be square");
    let mut a = a.clone();
    let mut v = Array2::<f64>::eye(n);
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    for _ in 0..JACOBI_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[[i, j]] * a[[i, j]])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[[p, q]];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[[k, p]], a[[k, q]]);
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[[p, k]], a[[q, k]]);
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[[k, p]], v[[k, q]]);
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[[j, j]].total_cmp(&a[[i, i]]));
    let values = order.iter().map(|&i| a[[i, i]]).collect();
    let vectors = Array2::from_shape_fn((n, n), |(r, c)| v[[r, order[c]]]);
    (values, vectors)
}

/// Sample covariance (divisor `n - 1`) of the rows of `x`.
pub fn covariance(x: ArrayView2<f64>) -> (Array1<f64>, Array2<f64>) {
    let mean = x.mean_axis(Axis(0)).expect("non-empty");
    let centered = &x - &mean;
    let cov = centered.t().dot(&centered) / (x.nrows() as f64 - 1.0);
    (mean, cov)
}

pub fn pca_fit(codes: ArrayView2<f64>, n_components: usize) -> Result<PcaModel> {
    let (n, dims) = codes.dim();
    if n <= dims || n_components == 0 || n_components > dims {
        return Err(Error::InvalidArgument(format!(
            "PCA of {n} points in {dims} dimensions with {n_components} components"
        )));
    }
    if codes.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("PCA input contains non-finite values".into()));
    }
    let first = codes.row(0);
    if codes.rows().into_iter().all(|r| r == first) {
        return Err(Error::InvalidArgument(
            "PCA input is degenerate: every point is identical".into(),
        ));
    }
    let (mean, cov) = covariance(codes);
    let (values, vectors) = symmetric_eigen(&cov);
    let total_variance: f64 = values.iter().map(|v| v.max(0.0)).sum();
    let components = (0..n_components)
        .map(|c| {
            let mut axis = vectors.column(c).to_vec();
            // Largest-magnitude entry positive, first such entry on ties.
            let pivot = axis
                .iter()
                .enumerate()
                .fold(0, |best, (i, v)| if v.abs() > axis[best].abs() { i } else { best });
            if axis[pivot] < 0.0 {
                axis.iter_mut().for_each(|v| *v = -*v);
            }
            axis
        })
        .collect();
    Ok(PcaModel {
        mean: mean.to_vec(),
        components,
        explained_variance: values[..n_components].iter().map(|v| v.max(0.0)).collect(),
        total_variance,
    })
}

impl PcaModel {
    /// Centered codes times the transposed components: one row per point.
    pub fn project(&self, codes: ArrayView2<f64>) -> Result<Array2<f64>> {
        if codes.ncols() != self.mean.len() {
            return Err(Error::ShapeMismatch(format!(
                "projecting {}-d codes with a {}-d PCA",
                codes.ncols(),
                self.mean.len()
            )));
        }
        let mean = Array1::from(self.mean.clone());
        let comps = Array2::from_shape_fn((self.components.len(), self.mean.len()), |(i, j)| {
            self.components[i][j]
        });
        Ok((&codes - &mean).dot(&comps.t()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::{DMatrix, SymmetricEigen};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_codes(n: usize, dims: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scales: Vec<f64> = (0..dims).map(|j| 1.0 + j as f64).collect();
        let mut x = Array2::from_shape_fn((n, dims), |(_, j)| rng.random_range(-1.0..1.0) * scales[j]);
        // Correlate a pair of axes.
        for i in 0..n {
            x[[i, 1]] += 0.5 * x[[i, dims - 1]];
        }
        x
    }

    #[test]
    fn jacobi_matches_independent_solver() {
        let x = random_codes(200, 10, 1);
        let (_, cov) = covariance(x.view());
        let (values, vectors) = symmetric_eigen(&cov);
        let oracle = SymmetricEigen::new(DMatrix::from_fn(10, 10, |i, j| cov[[i, j]]));
        let mut expected: Vec<f64> = oracle.eigenvalues.iter().copied().collect();
        expected.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in values.iter().zip(&expected) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
        // A v = λ v for every pair.
        for c in 0..10 {
            let v = vectors.column(c);
            let av = cov.dot(&v);
            for i in 0..10 {
                assert_abs_diff_eq!(av[i], values[c] * v[i], epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn projected_variance_equals_oracle_eigenvalues() {
        let x = random_codes(500, 10, 2);
        let pca = pca_fit(x.view(), 2).unwrap();
        let proj = pca.project(x.view()).unwrap();
        let (_, cov) = covariance(x.view());
        let oracle = SymmetricEigen::new(DMatrix::from_fn(10, 10, |i, j| cov[[i, j]]));
        let mut expected: Vec<f64> = oracle.eigenvalues.iter().copied().collect();
        expected.sort_by(|a, b| b.total_cmp(a));
        for axis in 0..2 {
            let col = proj.column(axis);
            let var = col.iter().map(|v| v * v).sum::<f64>() / (col.len() as f64 - 1.0);
            assert_abs_diff_eq!(var, expected[axis], epsilon = 1e-8);
            assert_abs_diff_eq!(pca.explained_variance[axis], expected[axis], epsilon = 1e-8);
        }
    }

    #[test]
    fn line_in_ten_dimensions() {
        let dir: Vec<f64> = (0..10).map(|j| (j as f64 - 2.5) / 10.0).collect();
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        let x = Array2::from_shape_fn((50, 10), |(i, j)| 3.0 + i as f64 * dir[j]);
        let pca = pca_fit(x.view(), 2).unwrap();
        for j in 0..10 {
            assert_abs_diff_eq!(pca.components[0][j], dir[j] / norm, epsilon = 1e-9);
        }
        assert_abs_diff_eq!(pca.explained_variance[0], pca.total_variance, epsilon = 1e-9);
        assert_abs_diff_eq!(pca.explained_variance[1], 0.0, epsilon = 1e-9);
    }

    #[test]
    fn mean_projects_to_origin() {
        let x = random_codes(100, 10, 3);
        let pca = pca_fit(x.view(), 2).unwrap();
        let mean = Array2::from_shape_vec((1, 10), pca.mean.clone()).unwrap();
        let p = pca.project(mean.view()).unwrap();
        assert_abs_diff_eq!(p[[0, 0]], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p[[0, 1]], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        let same = Array2::from_elem((20, 10), 0.7);
        assert!(pca_fit(same.view(), 2).is_err());
        let few = random_codes(10, 10, 4);
        assert!(pca_fit(few.view(), 2).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn components_are_orthonormal_and_sorted(seed in 0u64..10_000, n in 11usize..80) {
            let x = random_codes(n, 10, seed);
            let pca = pca_fit(x.view(), 3).unwrap();
            for a in 0..3 {
                for b in 0..3 {
                    let dot: f64 = pca.components[a].iter().zip(&pca.components[b]).map(|(u, v)| u * v).sum();
                    let expected = if a == b { 1.0 } else { 0.0 };
                    prop_assert!((dot - expected).abs() < 1e-9);
                }
                let c = &pca.components[a];
                let max = c.iter().cloned().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
                prop_assert!(max > 0.0);
            }
            prop_assert!(pca.explained_variance.windows(2).all(|w| w[0] >= w[1]));
            prop_assert!(pca.explained_variance.iter().all(|&v| v >= 0.0));
        }

        #[test]
        fn projection_ignores_constant_shift(seed in 0u64..10_000, shift in -50.0f64..50.0) {
            let x = random_codes(60, 10, seed);
            let shifted = &x + shift;
            let a = pca_fit(x.view(), 2).unwrap().project(x.view()).unwrap();
            let b = pca_fit(shifted.view(), 2).unwrap().project(shifted.view()).unwrap();
            for (u, v) in a.iter().zip(b.iter()) {
                prop_assert!((u - v).abs() < 1e-7);
            }
        }
    }
}
