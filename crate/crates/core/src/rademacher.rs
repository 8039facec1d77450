//! Monte Carlo estimates of the empirical Rademacher complexity of
//! norm-bounded linear predictors.
//!
//! For a fixed sign vector `sigma` the supremum over the weight ball has a
//! closed form (the dual norm of `sum_i sigma_i x_i`), so each draw is exact
//! and only the outer expectation over signs is sampled.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{label, stream};

pub const DEFAULT_DRAWS: usize = 10_000;
pub const MIN_DRAWS: usize = 100;

/// One experiment's inputs, stored row-wise (`n x l`).
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    points: DMatrix<f64>,
}

impl SampleSet {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let first = rows.first().ok_or_else(|| Error::invalid("sample set is empty"))?;
        let dim = first.len();
        if dim == 0 {
            return Err(Error::invalid("points must have at least one coordinate"));
        }
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != dim) {
            return Err(Error::invalid(format!(
                "point {i} has dimension {} but point 0 has {dim}",
                r.len()
            )));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("points must be finite"));
        }
        Ok(SampleSet {
            points: DMatrix::from_fn(rows.len(), dim, |i, k| rows[i][k]),
        })
    }

    pub fn from_matrix(points: DMatrix<f64>) -> Result<Self> {
        if points.nrows() == 0 || points.ncols() == 0 {
            return Err(Error::invalid("sample set is empty"));
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("points must be finite"));
        }
        Ok(SampleSet { points })
    }

    /// One point per row. A first row that does not parse as numbers is
    /// taken to be a header.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| Error::csv(path, e))?;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| Error::csv(path, e))?;
            let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
            match parsed {
                Ok(row) => rows.push(row),
                Err(_) if i == 0 => continue,
                Err(e) => {
                    return Err(Error::invalid(format!("{} line {}: {e}", path.display(), i + 1)));
                }
            }
        }
        SampleSet::from_rows(&rows)
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn points(&self) -> &DMatrix<f64> {
        &self.points
    }

    fn max_row_norm(&self, ball: WeightBall) -> f64 {
        self.points
            .row_iter()
            .map(|r| match ball {
                WeightBall::L2 => r.norm(),
                WeightBall::L1 => r.amax(),
            })
            .fold(0.0, f64::max)
    }
}

/// Constraint on the weight vector of the linear class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightBall {
    /// `|w|_2 <= W`; the per-draw supremum uses the L2 norm.
    L2,
    /// `|w|_1 <= W`; the per-draw supremum uses the L-infinity norm.
    L1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RademacherEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub draws: usize,
    /// Worst-case `a / sqrt(n)` cap for the same class and sample.
    pub class_bound: f64,
    pub n: usize,
}

/// `sup_{w in ball} (1/n) sum_i sigma_i w^T x_i` for one sign vector.
pub fn sign_draw_supremum(samples: &SampleSet, signs: &[f64], ball: WeightBall, radius: f64) -> f64 {
    debug_assert_eq!(signs.len(), samples.len());
    let sigma = DVector::from_column_slice(signs);
    let v = samples.points.tr_mul(&sigma);
    let dual = match ball {
        WeightBall::L2 => v.norm(),
        WeightBall::L1 => v.amax(),
    };
    radius * dual / samples.len() as f64
}

fn draw_values(samples: &SampleSet, ball: WeightBall, radius: f64, draws: usize, seed: u64) -> Vec<f64> {
    let n = samples.len();
    (0..draws)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(seed, label::RADEMACHER, k as u64);
            let signs: Vec<f64> = (0..n).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect();
            sign_draw_supremum(samples, &signs, ball, radius)
        })
        .collect()
}

/// Estimates the empirical Rademacher complexity of `{x -> w^T x : w in ball}`.
///
/// Draw `k` always uses the stream `(seed, k)`, and the reduction runs in
/// draw order, so the result does not depend on the thread count.
pub fn estimate(
    samples: &SampleSet,
    ball: WeightBall,
    radius: f64,
    draws: usize,
    seed: u64,
) -> Result<RademacherEstimate> {
    if draws < MIN_DRAWS {
        return Err(Error::invalid(format!(
            "need at least {MIN_DRAWS} sign draws, got {draws}"
        )));
    }
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::invalid(format!("weight radius {radius} must be > 0")));
    }
    let values = draw_values(samples, ball, radius, draws, seed);
    let k = draws as f64;
    let mean = values.iter().sum::<f64>() / k;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    let n = samples.len();
    let scale = match ball {
        WeightBall::L2 => 1.0,
        WeightBall::L1 => {
            if samples.dim() < 2 {
                return Err(Error::invalid("the L1 class bound needs dimension >= 2"));
            }
            (2.0 * (samples.dim() as f64).ln()).sqrt()
        }
    };
    let class_bound = radius * samples.max_row_norm(ball) * scale / (n as f64).sqrt();
    Ok(RademacherEstimate {
        mean,
        stderr: (var / k).sqrt(),
        draws,
        class_bound,
        n,
    })
}

pub fn estimate_linear_l2(samples: &SampleSet, w2: f64, draws: usize, seed: u64) -> Result<RademacherEstimate> {
    estimate(samples, WeightBall::L2, w2, draws, seed)
}

pub fn estimate_linear_l1(samples: &SampleSet, w1: f64, draws: usize, seed: u64) -> Result<RademacherEstimate> {
    estimate(samples, WeightBall::L1, w1, draws, seed)
}

/// Khintchine-Kahane lower reference `(W/n) sqrt(sum_i |x_i|^2)`; the L2
/// estimate lies between `1/sqrt(2)` times this value and the value itself.
pub fn l2_second_moment_scale(samples: &SampleSet, w2: f64) -> f64 {
    w2 * samples.points.norm() / samples.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionCheck {
    /// Estimated complexity of the linear predictor class.
    pub estimate: f64,
    pub stderr: f64,
    /// `W2 max_i |x_i|_2 / sqrt(n)`, which also caps the loss class.
    pub class_bound: f64,
}

impl ContractionCheck {
    /// Whether the estimate sits below the cap within `z` standard errors.
    pub fn holds(&self, z: f64) -> bool {
        self.estimate <= self.class_bound + z * self.stderr
    }
}

/// Complexity of the predictor class behind a regression loss, paired with the
/// analytic cap that the contraction argument transfers to the loss class.
pub fn contraction_check(
    samples: &SampleSet,
    labels: &[f64],
    w2: f64,
    draws: usize,
    seed: u64,
) -> Result<ContractionCheck> {
    if labels.len() != samples.len() {
        return Err(Error::invalid(format!(
            "{} labels for {} points",
            labels.len(),
            samples.len()
        )));
    }
    if labels.iter().any(|y| !y.is_finite()) {
        return Err(Error::invalid("labels must be finite"));
    }
    let est = estimate_linear_l2(samples, w2, draws, seed)?;
    Ok(ContractionCheck {
        estimate: est.mean,
        stderr: est.stderr,
        class_bound: est.class_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::StandardNormal;

    fn gaussian_cloud(n: usize, l: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = stream(seed, label::VALIDATION, 0);
        (0..n)
            .map(|_| (0..l).map(|_| rng.sample(StandardNormal)).collect())
            .collect()
    }

    fn identity_rows(n: usize, l: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| (0..l).map(|k| if i == k { 1.0 } else { 0.0 }).collect())
            .collect()
    }

    #[test]
    fn single_unit_point_is_exact() {
        let s = SampleSet::from_rows(&[vec![0.6, 0.8]]).unwrap();
        let est = estimate_linear_l2(&s, 1.0, 500, 3).unwrap();
        assert!((est.mean - 1.0).abs() < 1e-15);
        assert_eq!(est.stderr, 0.0);
        let e1 = SampleSet::from_rows(&[vec![1.0, 0.0, 0.0]]).unwrap();
        let est = estimate_linear_l1(&e1, 1.0, 500, 3).unwrap();
        assert_eq!(est.mean, 1.0);
    }

    #[test]
    fn orthonormal_points_give_inverse_root_n() {
        for n in [1, 4, 9] {
            let s = SampleSet::from_rows(&identity_rows(n, 10)).unwrap();
            let est = estimate_linear_l2(&s, 1.0, 1000, 17).unwrap();
            assert!((est.mean - 1.0 / (n as f64).sqrt()).abs() < 1e-12);
            assert!((est.class_bound - 1.0 / (n as f64).sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn gaussian_cloud_sandwich() {
        let s = SampleSet::from_rows(&gaussian_cloud(200, 10, 99)).unwrap();
        let est = estimate_linear_l2(&s, 1.0, 10_000, 5).unwrap();
        let b = l2_second_moment_scale(&s, 1.0);
        assert!(est.mean >= b / 2f64.sqrt() - 3.0 * est.stderr);
        assert!(est.mean <= b + 3.0 * est.stderr);
        assert!(est.mean <= est.class_bound + 3.0 * est.stderr);
    }

    #[test]
    fn l1_estimate_below_class_bound() {
        for seed in 0..5 {
            let s = SampleSet::from_rows(&gaussian_cloud(60, 8, seed)).unwrap();
            let est = estimate_linear_l1(&s, 2.0, 2000, seed).unwrap();
            assert!(est.mean <= est.class_bound + 3.0 * est.stderr);
        }
    }

    #[test]
    fn duplicating_points_scales_bound() {
        let rows = gaussian_cloud(30, 5, 4);
        let doubled: Vec<Vec<f64>> = rows.iter().chain(rows.iter()).cloned().collect();
        let a = estimate_linear_l1(&SampleSet::from_rows(&rows).unwrap(), 1.0, 200, 0).unwrap();
        let b = estimate_linear_l1(&SampleSet::from_rows(&doubled).unwrap(), 1.0, 200, 0).unwrap();
        assert!((b.class_bound - a.class_bound / 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn supremum_matches_grid_search() {
        // brute force over a polar grid of the radius-W disk
        let rows = gaussian_cloud(5, 2, 8);
        let s = SampleSet::from_rows(&rows).unwrap();
        let w = 1.5;
        let mut rng = stream(1, label::VALIDATION, 1);
        for _ in 0..20 {
            let signs: Vec<f64> = (0..5).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect();
            let exact = sign_draw_supremum(&s, &signs, WeightBall::L2, w);
            let mut best = f64::NEG_INFINITY;
            for ri in 0..=20 {
                let r = w * ri as f64 / 20.0;
                for ti in 0..720 {
                    let t = 2.0 * std::f64::consts::PI * ti as f64 / 720.0;
                    let (w0, w1) = (r * t.cos(), r * t.sin());
                    let val: f64 = rows
                        .iter()
                        .zip(&signs)
                        .map(|(x, s)| s * (w0 * x[0] + w1 * x[1]))
                        .sum::<f64>()
                        / 5.0;
                    best = best.max(val);
                }
            }
            assert!(best <= exact + 1e-12);
            assert!(exact - best <= 0.01 * exact.max(1e-12));
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let s = SampleSet::from_rows(&gaussian_cloud(50, 4, 1)).unwrap();
        let a = estimate_linear_l2(&s, 1.0, 300, 42).unwrap();
        let b = estimate_linear_l2(&s, 1.0, 300, 42).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
        let c = estimate_linear_l2(&s, 1.0, 300, 43).unwrap();
        assert_ne!(a.mean, c.mean);
    }

    #[test]
    fn thread_count_invariant() {
        let s = SampleSet::from_rows(&gaussian_cloud(40, 6, 2)).unwrap();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let many = rayon::ThreadPoolBuilder::new().num_threads(7).build().unwrap();
        let a = one.install(|| estimate_linear_l2(&s, 1.0, 1000, 9).unwrap());
        let b = many.install(|| estimate_linear_l2(&s, 1.0, 1000, 9).unwrap());
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
    }

    #[test]
    fn contraction_examples() {
        let zeros = SampleSet::from_rows(&vec![vec![0.0; 3]; 4]).unwrap();
        let c = contraction_check(&zeros, &[0.0; 4], 1.0, 200, 0).unwrap();
        assert_eq!((c.estimate, c.class_bound), (0.0, 0.0));

        let ortho = SampleSet::from_rows(&identity_rows(4, 4)).unwrap();
        let c = contraction_check(&ortho, &[1.0, -1.0, 0.5, 0.0], 1.0, 200, 0).unwrap();
        assert!((c.estimate - 0.5).abs() < 1e-12);
        assert!((c.class_bound - 0.5).abs() < 1e-15);

        let s = SampleSet::from_rows(&gaussian_cloud(100, 10, 12)).unwrap();
        let labels = vec![0.3; 100];
        let c = contraction_check(&s, &labels, 2.0, 10_000, 4).unwrap();
        assert!(c.holds(3.0));
        assert!(contraction_check(&s, &labels[..10], 2.0, 200, 4).is_err());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(SampleSet::from_rows(&[]).is_err());
        assert!(SampleSet::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
        let s = SampleSet::from_rows(&[vec![1.0, 2.0]]).unwrap();
        assert!(estimate_linear_l2(&s, 1.0, 99, 0).is_err());
        assert!(estimate_linear_l2(&s, 0.0, 100, 0).is_err());
    }

    #[test]
    fn csv_with_and_without_header() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        std::fs::write(&a, "x1,x2\n1,2\n3,4\n").unwrap();
        let b = dir.path().join("b.csv");
        std::fs::write(&b, "1, 2\n3, 4\n").unwrap();
        let sa = SampleSet::read_csv(&a).unwrap();
        assert_eq!(sa, SampleSet::read_csv(&b).unwrap());
        assert_eq!((sa.len(), sa.dim()), (2, 2));
        let bad = dir.path().join("bad.csv");
        std::fs::write(&bad, "1,2\n3,x\n").unwrap();
        assert!(SampleSet::read_csv(&bad).is_err());
    }
}
