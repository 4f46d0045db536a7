//! Weighted k-means with deterministic k-means++ seeding.
//!
//! Seeding draws from [`SplitMix64`](crate::rng::SplitMix64) over the
//! configured seed: the first center is picked with probability proportional
//! to point weight, each further one proportional to `weight · D²` where `D`
//! is the distance to the closest center chosen so far. Lloyd iterations then
//! alternate nearest-center assignment (ties go to the lowest center index)
//! and weighted-mean updates. The loop stops once the largest center shift is
//! below `tol` and the assignment is stable, so a converged result is a Lloyd
//! fixpoint. A center that loses all of its points is moved onto the point
//! farthest from its own center.

use log::info;
use thiserror::Error;

use crate::rng::SplitMix64;

#[derive(Debug, Error, PartialEq)]
pub enum KMeansError {
    #[error("k-means needs at least one point")]
    Empty,
    #[error("point {index} has a non-finite coordinate")]
    NonFinite { index: usize },
    #[error("weight {index} must be finite and positive")]
    BadWeight { index: usize },
    #[error("{points} points but {weights} weights")]
    WeightCount { points: usize, weights: usize },
    #[error("invalid k-means configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansConfig {
    pub k: usize,
    pub seed: u64,
    pub max_iters: usize,
    pub tol: f64,
}

impl KMeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            seed,
            max_iters: 100,
            tol: 1e-6,
        }
    }

    pub fn validate(&self) -> Result<(), KMeansError> {
        if self.k == 0 {
            return Err(KMeansError::Config("k must be at least 1".into()));
        }
        if self.max_iters == 0 {
            return Err(KMeansError::Config("max_iters must be at least 1".into()));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(KMeansError::Config(format!("tol must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult<const D: usize> {
    pub centroids: Vec<[f64; D]>,
    pub assignment: Vec<usize>,
    pub inertia: f64,
    /// Inertia after every assignment step, including post-reseed ones.
    pub inertia_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub requested_k: usize,
    pub reseeds: usize,
}

impl<const D: usize> KMeansResult<D> {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    pub fn k_reduced(&self) -> bool {
        self.centroids.len() < self.requested_k
    }
}

pub(crate) fn dist2<const D: usize>(a: &[f64; D], b: &[f64; D]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the closest center; ties go to the lowest index.
pub fn nearest<const D: usize>(p: &[f64; D], centroids: &[[f64; D]]) -> (usize, f64) {
    let mut best = 0;
    let mut best_d = dist2(p, &centroids[0]);
    for (j, c) in centroids.iter().enumerate().skip(1) {
        let d = dist2(p, c);
        if d < best_d {
            best = j;
            best_d = d;
        }
    }
    (best, best_d)
}

/// Per-cluster weighted coordinate sums. Partial sums over disjoint point
/// ranges combine with [`merge`](Self::merge).
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSums<const D: usize> {
    pub sum: Vec<[f64; D]>,
    pub weight: Vec<f64>,
    pub count: Vec<usize>,
}

impl<const D: usize> ClusterSums<D> {
    pub fn new(k: usize) -> Self {
        Self {
            sum: vec![[0.0; D]; k],
            weight: vec![0.0; k],
            count: vec![0; k],
        }
    }

    pub fn add(&mut self, cluster: usize, p: &[f64; D], w: f64) {
        for (s, x) in self.sum[cluster].iter_mut().zip(p) {
            *s += w * x;
        }
        self.weight[cluster] += w;
        self.count[cluster] += 1;
    }

    pub fn merge(&mut self, other: &Self) {
        for j in 0..self.weight.len() {
            for d in 0..D {
                self.sum[j][d] += other.sum[j][d];
            }
            self.weight[j] += other.weight[j];
            self.count[j] += other.count[j];
        }
    }

    /// Weighted mean of cluster `j`, `None` when it is empty.
    pub fn mean(&self, j: usize) -> Option<[f64; D]> {
        if self.count[j] == 0 {
            return None;
        }
        let mut m = self.sum[j];
        for v in &mut m {
            *v /= self.weight[j];
        }
        Some(m)
    }
}

const CHUNK: usize = 4096;

fn accumulate<const D: usize>(
    points: &[[f64; D]],
    weights: &[f64],
    assignment: &[usize],
    k: usize,
) -> ClusterSums<D> {
    let mut total = ClusterSums::new(k);
    for start in (0..points.len()).step_by(CHUNK) {
        let end = (start + CHUNK).min(points.len());
        let mut part = ClusterSums::new(k);
        for i in start..end {
            part.add(assignment[i], &points[i], weights[i]);
        }
        total.merge(&part);
    }
    total
}

fn assign<const D: usize>(
    points: &[[f64; D]],
    weights: &[f64],
    centroids: &[[f64; D]],
    assignment: &mut [usize],
) -> f64 {
    let mut inertia = 0.0;
    for (i, p) in points.iter().enumerate() {
        let (j, d) = nearest(p, centroids);
        assignment[i] = j;
        inertia += weights[i] * d;
    }
    inertia
}

fn plus_plus_seed<const D: usize>(
    points: &[[f64; D]],
    weights: &[f64],
    k: usize,
    rng: &mut SplitMix64,
) -> Vec<[f64; D]> {
    let pick = |scores: &[f64], rng: &mut SplitMix64| -> Option<usize> {
        let total: f64 = scores.iter().sum();
        if total <= 0.0 {
            return None;
        }
        let target = rng.next_f64() * total;
        let mut acc = 0.0;
        let mut last = None;
        for (i, &s) in scores.iter().enumerate() {
            if s > 0.0 {
                acc += s;
                last = Some(i);
                if acc > target {
                    return Some(i);
                }
            }
        }
        last
    };

    let first = pick(weights, rng).expect("weights are positive");
    let mut centroids = vec![points[first]];
    let mut d2: Vec<f64> = points.iter().map(|p| dist2(p, &points[first])).collect();
    while centroids.len() < k {
        let scores: Vec<f64> = d2.iter().zip(weights).map(|(d, w)| d * w).collect();
        let Some(next) = pick(&scores, rng) else {
            break;
        };
        let c = points[next];
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(dist2(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

/// Weighted k-means over `D`-dimensional points.
///
/// `weights` default to 1. When there are fewer distinct points than `k`,
/// k shrinks to the number of distinct points and the reduction is logged and
/// visible through [`KMeansResult::k_reduced`].
pub fn kmeans<const D: usize>(
    points: &[[f64; D]],
    weights: Option<&[f64]>,
    cfg: &KMeansConfig,
) -> Result<KMeansResult<D>, KMeansError> {
    cfg.validate()?;
    if points.is_empty() {
        return Err(KMeansError::Empty);
    }
    if let Some(index) = points.iter().position(|p| p.iter().any(|v| !v.is_finite())) {
        return Err(KMeansError::NonFinite { index });
    }
    let weights: Vec<f64> = match weights {
        Some(w) => {
            if w.len() != points.len() {
                return Err(KMeansError::WeightCount {
                    points: points.len(),
                    weights: w.len(),
                });
            }
            if let Some(index) = w.iter().position(|&x| !(x.is_finite() && x > 0.0)) {
                return Err(KMeansError::BadWeight { index });
            }
            w.to_vec()
        }
        None => vec![1.0; points.len()],
    };

    let mut rng = SplitMix64::new(cfg.seed);
    let mut centroids = plus_plus_seed(points, &weights, cfg.k.min(points.len()), &mut rng);
    let k = centroids.len();
    if k < cfg.k {
        info!("k-means: k reduced from {} to {k} (distinct points)", cfg.k);
    }

    let mut assignment = vec![0usize; points.len()];
    let mut history = vec![assign(points, &weights, &centroids, &mut assignment)];
    let mut reseeds = 0;
    let mut converged = false;
    let mut iterations = 0;
    let mut scratch = vec![0usize; points.len()];

    while iterations < cfg.max_iters {
        iterations += 1;
        let mut sums = accumulate(points, &weights, &assignment, k);
        while let Some(empty) = sums.count.iter().position(|&c| c == 0) {
            // farthest point from its own center; lowest index on ties
            let (far, _) = points
                .iter()
                .enumerate()
                .map(|(i, p)| (i, dist2(p, &centroids[assignment[i]])))
                .fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            centroids[empty] = points[far];
            history.push(assign(points, &weights, &centroids, &mut assignment));
            reseeds += 1;
            sums = accumulate(points, &weights, &assignment, k);
        }

        let mut shift: f64 = 0.0;
        for (j, c) in centroids.iter_mut().enumerate() {
            let m = sums.mean(j).expect("no empty clusters after reseeding");
            shift = shift.max(dist2(c, &m).sqrt());
            *c = m;
        }
        let inertia = assign(points, &weights, &centroids, &mut scratch);
        history.push(inertia);
        let stable = scratch == assignment;
        std::mem::swap(&mut assignment, &mut scratch);
        if shift < cfg.tol && stable {
            converged = true;
            break;
        }
    }

    Ok(KMeansResult {
        inertia: *history.last().unwrap(),
        centroids,
        assignment,
        inertia_history: history,
        iterations,
        converged,
        requested_k: cfg.k,
        reseeds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_pure_groups() {
        let pts: Vec<[f64; 1]> = vec![[0.0], [100.0]];
        let r = kmeans(&pts, Some(&[10.0, 10.0]), &KMeansConfig::new(2, 1)).unwrap();
        let mut c: Vec<f64> = r.centroids.iter().map(|c| c[0]).collect();
        c.sort_by(f64::total_cmp);
        assert_eq!(c, vec![0.0, 100.0]);
        assert_eq!(r.inertia, 0.0);
        assert!(r.converged);
    }

    #[test]
    fn single_cluster_is_weighted_mean() {
        let pts: Vec<[f64; 2]> = vec![[0.0, 0.0], [4.0, 0.0], [0.0, 8.0]];
        let w = [1.0, 2.0, 1.0];
        let r = kmeans(&pts, Some(&w), &KMeansConfig::new(1, 9)).unwrap();
        let mean = [8.0 / 4.0, 8.0 / 4.0];
        assert!((r.centroids[0][0] - mean[0]).abs() < 1e-12);
        assert!((r.centroids[0][1] - mean[1]).abs() < 1e-12);
        let expected: f64 = pts.iter().zip(&w).map(|(p, w)| w * dist2(p, &mean)).sum();
        assert!((r.inertia - expected).abs() < 1e-9);
    }

    #[test]
    fn six_points_two_groups_any_seed() {
        let pts: Vec<[f64; 1]> = [0.0, 1.0, 2.0, 100.0, 101.0, 102.0].iter().map(|&v| [v]).collect();
        for seed in 0..200 {
            let r = kmeans(&pts, None, &KMeansConfig::new(2, seed)).unwrap();
            let mut c: Vec<f64> = r.centroids.iter().map(|c| c[0]).collect();
            c.sort_by(f64::total_cmp);
            assert_eq!(c, vec![1.0, 101.0], "seed {seed}");
        }
    }

    #[test]
    fn k_reduced_to_point_count() {
        let pts: Vec<[f64; 2]> = vec![[1.0, 2.0], [3.0, 4.0]];
        let r = kmeans(&pts, None, &KMeansConfig::new(15, 0)).unwrap();
        assert_eq!(r.k(), 2);
        assert!(r.k_reduced());
        let dup: Vec<[f64; 1]> = vec![[5.0]; 4];
        let r = kmeans(&dup, None, &KMeansConfig::new(3, 0)).unwrap();
        assert_eq!(r.k(), 1);
    }

    #[test]
    fn errors() {
        let none: Vec<[f64; 1]> = vec![];
        assert_eq!(kmeans(&none, None, &KMeansConfig::new(2, 0)), Err(KMeansError::Empty));
        let bad = vec![[1.0], [f64::NAN]];
        assert_eq!(
            kmeans(&bad, None, &KMeansConfig::new(1, 0)),
            Err(KMeansError::NonFinite { index: 1 })
        );
        let ok = vec![[1.0]];
        assert!(kmeans(&ok, None, &KMeansConfig::new(0, 0)).is_err());
        assert!(kmeans(&ok, Some(&[0.0]), &KMeansConfig::new(1, 0)).is_err());
    }

    #[test]
    fn partial_sums_merge_in_any_order() {
        let pts: Vec<[f64; 2]> = (0..100).map(|i| [i as f64 * 0.37, (i * i) as f64 * 0.01]).collect();
        let assignment: Vec<usize> = (0..100).map(|i| i % 3).collect();
        let mut whole = ClusterSums::<2>::new(3);
        for (i, p) in pts.iter().enumerate() {
            whole.add(assignment[i], p, 1.0);
        }
        let mut parts: Vec<ClusterSums<2>> = (0..5).map(|_| ClusterSums::new(3)).collect();
        for (i, p) in pts.iter().enumerate() {
            parts[(i * 7) % 5].add(assignment[i], p, 1.0);
        }
        let mut merged = ClusterSums::new(3);
        for part in parts.iter().rev() {
            merged.merge(part);
        }
        for j in 0..3 {
            let (a, b) = (whole.mean(j).unwrap(), merged.mean(j).unwrap());
            assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
            assert_eq!(whole.count[j], merged.count[j]);
        }
    }
}
