//! Ball-constrained least squares over the combined empirical loss
//! `(1/m) sum_j (1/(2 n_j)) sum_i (w^T x_ji - y_ji)^2`, `|w|_2 <= W2`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErmMethod {
    /// Minimum-norm unconstrained minimizer lies inside the ball.
    Interior,
    /// Solved the boundary secular equation `|(H + mu I)^+ g| = W2`.
    Boundary,
    /// Eigen route failed; projected gradient was used instead.
    ProjectedGradient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErmSolution {
    pub w: DVector<f64>,
    pub objective: f64,
    pub method: ErmMethod,
}

/// Combined empirical loss evaluated from residuals.
pub fn erm_objective(dataset: &Dataset, w: &DVector<f64>) -> f64 {
    let m = dataset.experiments.len() as f64;
    dataset
        .experiments
        .iter()
        .map(|e| {
            let r = &e.inputs * w - &e.outputs;
            r.norm_squared() / (2.0 * e.len() as f64)
        })
        .sum::<f64>()
        / m
}

fn check(dataset: &Dataset, w2: f64) -> Result<usize> {
    if dataset.experiments.is_empty() || dataset.experiments.iter().any(|e| e.is_empty()) {
        return Err(Error::invalid("every experiment needs at least one sample"));
    }
    if !(w2.is_finite() && w2 > 0.0) {
        return Err(Error::invalid(format!("weight radius {w2} must be > 0")));
    }
    let l = dataset.dim();
    if dataset.experiments.iter().any(|e| e.inputs.ncols() != l) {
        return Err(Error::invalid("experiments disagree on the input dimension"));
    }
    Ok(l)
}

/// Hessian `H` and linear term `g` of the quadratic `w^T H w / 2 - g^T w + const`.
fn normal_equations(dataset: &Dataset, l: usize) -> (DMatrix<f64>, DVector<f64>) {
    let m = dataset.experiments.len() as f64;
    let mut h = DMatrix::zeros(l, l);
    let mut g = DVector::zeros(l);
    for e in &dataset.experiments {
        let scale = 1.0 / (m * e.len() as f64);
        h += e.inputs.tr_mul(&e.inputs) * scale;
        g += e.inputs.tr_mul(&e.outputs) * scale;
    }
    (h, g)
}

const SECULAR_MAX_ITER: usize = 400;

/// Exact ERM via an eigendecomposition of the normal matrix.
///
/// Directions with eigenvalue below `1e-12 * lambda_max` are treated as
/// unobserved and get a zero coefficient, so degenerate problems return the
/// minimum-norm optimum. If that point leaves the ball, the multiplier `mu`
/// of `|(H + mu I)^{-1} g| = W2` is found by bisection; the norm is strictly
/// decreasing in `mu`.
pub fn solve_erm(dataset: &Dataset, w2: f64) -> Result<ErmSolution> {
    let l = check(dataset, w2)?;
    let (h, g) = normal_equations(dataset, l);
    let eig = SymmetricEigen::new(h);
    let lam = &eig.eigenvalues;
    let q = &eig.eigenvectors;
    if lam.iter().any(|v| !v.is_finite()) || q.iter().any(|v| !v.is_finite()) {
        return solve_erm_projected_gradient(dataset, w2, 100_000, 1e-14);
    }
    let lam_max = lam.iter().copied().fold(0.0, f64::max);
    let floor = 1e-12 * lam_max;
    let b = q.tr_mul(&g);

    let coeffs = |mu: f64| -> DVector<f64> {
        DVector::from_iterator(
            l,
            lam.iter()
                .zip(b.iter())
                .map(|(&lk, &bk)| if lk > floor { bk / (lk + mu) } else { 0.0 }),
        )
    };

    let interior = coeffs(0.0);
    if interior.norm() <= w2 {
        let w = q * interior;
        return Ok(ErmSolution {
            objective: erm_objective(dataset, &w),
            w,
            method: ErmMethod::Interior,
        });
    }

    // |coeffs(mu)| <= |b| / mu, so mu = |b| / W2 is already inside the ball
    let mut lo = 0.0_f64;
    let mut hi = b.norm() / w2;
    for _ in 0..SECULAR_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if coeffs(mid).norm() > w2 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut c = coeffs(hi);
    let norm = c.norm();
    if norm > w2 {
        c *= w2 / norm;
    }
    let w = q * c;
    Ok(ErmSolution {
        objective: erm_objective(dataset, &w),
        w,
        method: ErmMethod::Boundary,
    })
}

fn project(w: &mut DVector<f64>, radius: f64) {
    let n = w.norm();
    if n > radius {
        *w *= radius / n;
    }
}

fn gradient(dataset: &Dataset, w: &DVector<f64>) -> DVector<f64> {
    let m = dataset.experiments.len() as f64;
    let mut grad = DVector::zeros(w.len());
    for e in &dataset.experiments {
        let r = &e.inputs * w - &e.outputs;
        grad += e.inputs.tr_mul(&r) / (m * e.len() as f64);
    }
    grad
}

/// Accelerated projected gradient with backtracking on the step size.
///
/// Works from residuals only, without forming the normal matrix. Stops when
/// the projected step moves less than `tol` (relative to `max(1, |w|)`).
pub fn solve_erm_projected_gradient(dataset: &Dataset, w2: f64, max_iter: usize, tol: f64) -> Result<ErmSolution> {
    let l = check(dataset, w2)?;
    let mut w = DVector::zeros(l);
    let mut y = w.clone();
    let mut t = 1.0_f64;
    let mut step = 1.0_f64;
    let mut moved = f64::INFINITY;
    for _ in 0..max_iter {
        let fy = erm_objective(dataset, &y);
        let gy = gradient(dataset, &y);
        let next = loop {
            let mut cand = &y - &gy * step;
            project(&mut cand, w2);
            let d = &cand - &y;
            let quad = fy + gy.dot(&d) + d.norm_squared() / (2.0 * step);
            if erm_objective(dataset, &cand) <= quad + 1e-15 * fy.abs().max(1.0) || step < 1e-300 {
                break cand;
            }
            step *= 0.5;
        };
        moved = (&next - &w).norm() / w.norm().max(1.0);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        y = &next + (&next - &w) * ((t - 1.0) / t_next);
        // restart momentum if it pushed us uphill
        if erm_objective(dataset, &next) > erm_objective(dataset, &w) {
            y = next.clone();
            t = 1.0;
        } else {
            t = t_next;
        }
        w = next;
        if moved <= tol {
            return Ok(ErmSolution {
                objective: erm_objective(dataset, &w),
                w,
                method: ErmMethod::ProjectedGradient,
            });
        }
    }
    Err(Error::NonConvergence {
        solver: "projected gradient",
        iterations: max_iter,
        residual: moved,
    })
}
