use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use std::path::Path;

use super::representation::EncoderTag;
use crate::error::{Error, Result};
use crate::nn::{Tensor, TensorFile};

const FILE_KIND: &str = "clusters";

#[derive(Serialize, Deserialize)]
struct ClusterMeta {
    source: EncoderTag,
    inertia: f64,
    inertia_history: Vec<f64>,
    iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub k: usize,
    pub max_iterations: usize,
    /// Lloyd iterations stop once no centroid moves farther than this.
    pub tolerance: f64,
    pub seed: u64,
}

impl KMeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            max_iterations: 300,
            tolerance: 1e-6,
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterModel {
    /// `k × dims`.
    pub centroids: Array2<f64>,
    /// Within-cluster sum of squared distances at the final assignment.
    pub inertia: f64,
    /// Inertia after every assignment step, ending with `inertia`.
    pub inertia_history: Vec<f64>,
    pub iterations: usize,
}

fn squared_distance(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index and squared distance of the nearest centroid; lowest index on ties.
fn nearest(centroids: &Array2<f64>, x: ArrayView1<f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.rows().into_iter().enumerate() {
        let d = squared_distance(centroid, x);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn assign_all(centroids: &Array2<f64>, codes: ArrayView2<f64>) -> (Vec<usize>, Vec<f64>) {
    codes.rows().into_iter().map(|x| nearest(centroids, x)).unzip()
}

/// k-means++ seeding: first centroid uniform, later ones proportional to
/// the squared distance to the closest chosen centroid.
fn seed_centroids(codes: ArrayView2<f64>, k: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let n = codes.nrows();
    let mut centroids = Array2::zeros((k, codes.ncols()));
    centroids.row_mut(0).assign(&codes.row(rng.random_range(0..n)));
    let mut dist: Vec<f64> = codes
        .rows()
        .into_iter()
        .map(|x| squared_distance(x, centroids.row(0)))
        .collect();
    for c in 1..k {
        let total: f64 = dist.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            dist.iter()
                .position(|&d| {
                    acc += d;
                    acc > target
                })
                .unwrap_or_else(|| dist.iter().rposition(|&d| d > 0.0).expect("positive total"))
        } else {
            rng.random_range(0..n)
        };
        centroids.row_mut(c).assign(&codes.row(pick));
        for (d, x) in dist.iter_mut().zip(codes.rows()) {
            *d = d.min(squared_distance(x, centroids.row(c)));
        }
    }
    centroids
}

pub fn kmeans_fit(codes: ArrayView2<f64>, config: &KMeansConfig) -> Result<ClusterModel> {
    let (n, dims) = codes.dim();
    if config.k == 0 || n < config.k {
        return Err(Error::InvalidArgument(format!(
            "cannot form {} clusters from {n} points",
            config.k
        )));
    }
    if codes.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("k-means input contains non-finite values".into()));
    }
    let k = config.k;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut centroids = seed_centroids(codes, k, &mut rng);
    let mut history = Vec::new();
    let mut iterations = 0;

    loop {
        let (labels, dist) = assign_all(&centroids, codes);
        history.push(dist.iter().sum::<f64>());
        if iterations == config.max_iterations {
            break;
        }
        iterations += 1;

        let mut sums = Array2::<f64>::zeros((k, dims));
        let mut counts = vec![0usize; k];
        for (x, &l) in codes.rows().into_iter().zip(&labels) {
            let mut row = sums.row_mut(l);
            row += &x;
            counts[l] += 1;
        }
        // Empty clusters take the points farthest from their centroids.
        let mut far: Vec<usize> = (0..n).collect();
        far.sort_by(|&a, &b| dist[b].total_cmp(&dist[a]).then(a.cmp(&b)));
        let mut far = far.into_iter();
        let mut next = Array2::zeros((k, dims));
        for c in 0..k {
            if counts[c] > 0 {
                let mut row = next.row_mut(c);
                row.assign(&sums.row(c));
                row /= counts[c] as f64;
            } else {
                let p = far.next().expect("k <= n");
                next.row_mut(c).assign(&codes.row(p));
            }
        }
        let shift = (0..k)
            .map(|c| squared_distance(next.row(c), centroids.row(c)).sqrt())
            .fold(0.0, f64::max);
        centroids = next;
        if shift < config.tolerance {
            let (_, dist) = assign_all(&centroids, codes);
            history.push(dist.iter().sum::<f64>());
            break;
        }
    }

    Ok(ClusterModel {
        inertia: *history.last().expect("at least one assignment"),
        centroids,
        inertia_history: history,
        iterations,
    })
}

impl ClusterModel {
    pub fn k(&self) -> usize {
        self.centroids.nrows()
    }

    pub fn dims(&self) -> usize {
        self.centroids.ncols()
    }

    /// Nearest-centroid label of every row.
    pub fn assign(&self, codes: ArrayView2<f64>) -> Result<Vec<usize>> {
        if codes.ncols() != self.dims() {
            return Err(Error::ShapeMismatch(format!(
                "assigning {}-d codes to {}-d centroids",
                codes.ncols(),
                self.dims()
            )));
        }
        Ok(assign_all(&self.centroids, codes).0)
    }

    /// Stores the centroids together with the encoder whose codes they
    /// partition.
    pub fn save(&self, path: impl AsRef<Path>, source: &EncoderTag) -> Result<()> {
        let meta = ClusterMeta {
            source: source.clone(),
            inertia: self.inertia,
            inertia_history: self.inertia_history.clone(),
            iterations: self.iterations,
        };
        TensorFile {
            kind: FILE_KIND.into(),
            meta: serde_json::to_string(&meta)?,
            tensors: vec![(
                "centroids".into(),
                Tensor::new(vec![self.k(), self.dims()], self.centroids.iter().copied().collect())?,
            )],
        }
        .save(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<(Self, EncoderTag)> {
        let file = TensorFile::load(path)?;
        if file.kind != FILE_KIND {
            return Err(Error::Format {
                kind: "clusters",
                reason: format!("expected a cluster file, found `{}`", file.kind),
            });
        }
        let meta: ClusterMeta = serde_json::from_str(&file.meta)?;
        let t = file.require("centroids")?;
        let &[k, dims] = t.shape() else {
            return Err(Error::Format {
                kind: "clusters",
                reason: "centroids must be a matrix".into(),
            });
        };
        let centroids = Array2::from_shape_vec((k, dims), t.values().to_vec())
            .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
        Ok((
            Self {
                centroids,
                inertia: meta.inertia,
                inertia_history: meta.inertia_history,
                iterations: meta.iterations,
            },
            meta.source,
        ))
    }

    /// Sum of squared distances from each row to its nearest centroid.
    pub fn score(&self, codes: ArrayView2<f64>) -> f64 {
        assign_all(&self.centroids, codes).1.iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn blobs(seed: u64) -> (Array2<f64>, Vec<usize>) {
        let centers = [(0.0, 0.0), (6.0, 1.0), (2.0, 7.0)];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut truth = Vec::new();
        let x = Array2::from_shape_fn((300, 2), |(i, j)| {
            let b = i % 3;
            if j == 0 {
                truth.push(b);
            }
            let c = if j == 0 { centers[b].0 } else { centers[b].1 };
            c + 0.6 * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
        });
        (x, truth)
    }

    #[test]
    fn one_point_per_cluster() {
        let x = Array2::from_shape_fn((5, 3), |(i, j)| (i * 3 + j) as f64);
        let m = kmeans_fit(x.view(), &KMeansConfig::new(5, 1)).unwrap();
        assert_eq!(m.inertia, 0.0);
        let mut labels = m.assign(x.view()).unwrap();
        labels.sort();
        assert_eq!(labels, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn identical_points_share_a_label() {
        let x = Array2::from_elem((40, 4), 1.5);
        let m = kmeans_fit(x.view(), &KMeansConfig::new(20, 2)).unwrap();
        assert_eq!(m.inertia, 0.0);
        let labels = m.assign(x.view()).unwrap();
        assert!(labels.iter().all(|&l| l == labels[0]));
    }

    #[test]
    fn recovers_blobs_like_best_of_many_restarts() {
        let (x, truth) = blobs(3);
        let fit = kmeans_fit(x.view(), &KMeansConfig::new(3, 7)).unwrap();
        let best = (0..100)
            .map(|s| kmeans_fit(x.view(), &KMeansConfig::new(3, 1000 + s)).unwrap().inertia)
            .fold(f64::INFINITY, f64::min);
        assert!(fit.inertia <= best * 1.01, "{} vs {best}", fit.inertia);
        // Same partition up to relabelling.
        let labels = fit.assign(x.view()).unwrap();
        for i in 0..x.nrows() {
            for j in 0..x.nrows() {
                assert_eq!(truth[i] == truth[j], labels[i] == labels[j]);
            }
        }
    }

    #[test]
    fn rejects_too_few_points() {
        let x = Array2::<f64>::zeros((3, 2));
        assert!(kmeans_fit(x.view(), &KMeansConfig::new(4, 0)).is_err());
        let m = kmeans_fit(x.view(), &KMeansConfig::new(2, 0)).unwrap();
        assert!(m.assign(Array2::<f64>::zeros((1, 3)).view()).is_err());
    }

    #[test]
    fn file_round_trip() {
        let (x, _) = blobs(5);
        let m = kmeans_fit(x.view(), &KMeansConfig::new(4, 1)).unwrap();
        let tag = EncoderTag {
            model_id: "sm".into(),
            kind: crate::models::ArchKind::Sm,
            code_dims: 2,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("clusters.bin");
        m.save(&path, &tag).unwrap();
        assert_eq!(ClusterModel::load(&path).unwrap(), (m, tag));
    }

    #[test]
    fn deterministic_per_seed() {
        let (x, _) = blobs(4);
        let a = kmeans_fit(x.view(), &KMeansConfig::new(5, 11)).unwrap();
        let b = kmeans_fit(x.view(), &KMeansConfig::new(5, 11)).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn inertia_never_increases(seed in 0u64..100_000, k in 1usize..8, n in 8usize..120) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            // Few distinct values so that empty clusters and ties occur.
            let x = Array2::from_shape_fn((n, 3), |_| f64::from(rng.random_range(0..4u8)));
            let m = kmeans_fit(x.view(), &KMeansConfig::new(k, seed)).unwrap();
            for w in m.inertia_history.windows(2) {
                prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-12, "{:?}", m.inertia_history);
            }
            prop_assert!(m.inertia >= 0.0);
            prop_assert!((m.score(x.view()) - m.inertia).abs() <= 1e-9 * m.inertia.max(1.0));
        }

        #[test]
        fn reassignment_is_stable(seed in 0u64..100_000) {
            let (x, _) = blobs(seed);
            let m = kmeans_fit(x.view(), &KMeansConfig::new(6, seed)).unwrap();
            let a = m.assign(x.view()).unwrap();
            prop_assert_eq!(a.clone(), m.assign(x.view()).unwrap());
            for (row, &l) in x.rows().into_iter().zip(&a) {
                let d = squared_distance(row, m.centroids.row(l));
                for c in m.centroids.rows() {
                    prop_assert!(d <= squared_distance(row, c));
                }
            }
        }
    }
}
