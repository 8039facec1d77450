//! High-probability upper bounds on the divergence `d_m(h_hat, h*)`.
//!
//! All evaluations are closed-form double-precision arithmetic.

use serde::{Deserialize, Serialize};

use crate::allocation::{validate_delta, BudgetProblem, ExperimentSpec, Regime};
use crate::error::{Error, Result};

fn check_complexities(r: &[f64], n: &[f64], delta: f64) -> Result<()> {
    if r.is_empty() {
        return Err(Error::invalid("at least one experiment is required"));
    }
    if r.len() != n.len() {
        return Err(Error::invalid(format!(
            "{} complexities but {} sample counts",
            r.len(),
            n.len()
        )));
    }
    if r.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::invalid("complexities must be finite and >= 0"));
    }
    if n.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::invalid("sample counts must be > 0"));
    }
    validate_delta(delta)
}

fn complexity_bound(r: &[f64], n: &[f64], confidence_term: f64) -> f64 {
    let m = r.len() as f64;
    let inv_n: f64 = n.iter().map(|v| 1.0 / v).sum();
    4.0 / m * r.iter().sum::<f64>() + (confidence_term * inv_n).sqrt() / m
}

/// Bound from expected Rademacher complexities `r_j` at sample counts `n_j`:
/// `(4/m) sum r_j + (1/m) sqrt(2 ln(2/delta) sum 1/n_j)`.
///
/// Sample counts may be fractional so that continuous allocations can be
/// plugged in directly.
pub fn expected_complexity_bound(r: &[f64], n: &[f64], delta: f64) -> Result<f64> {
    check_complexities(r, n, delta)?;
    Ok(complexity_bound(r, n, Regime::Expected.confidence_term(delta)))
}

/// Same shape as [`expected_complexity_bound`] for empirical complexities,
/// with the confidence term `18 ln(3/delta)`. Experiments are weighted
/// uniformly.
pub fn empirical_complexity_bound(r_hat: &[f64], n: &[f64], delta: f64) -> Result<f64> {
    check_complexities(r_hat, n, delta)?;
    Ok(complexity_bound(r_hat, n, Regime::Empirical.confidence_term(delta)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    /// Bound at the optimal allocation, before Cauchy-Schwarz.
    pub tight: f64,
    /// `sqrt(m+1) / (m sqrt(C)) * sum_j sqrt(gamma_j c_j)`.
    pub loose: f64,
    pub per_experiment_a: Vec<f64>,
    pub regime: Regime,
}

/// Both budget forms of the bound for `a_j / sqrt(n_j)` complexities.
pub fn budget_bound(problem: &BudgetProblem) -> Result<BoundReport> {
    problem.validate()?;
    let m = problem.experiments.len() as f64;
    let budget = problem.budget;
    let conf = problem.regime.confidence_term(problem.delta);
    let a: Vec<f64> = problem.experiments.iter().map(|e| e.a).collect();
    let c = problem.costs();
    let gamma = problem.gammas();

    let root_gc: f64 = gamma.iter().zip(&c).map(|(g, c)| (g * c).sqrt()).sum();
    let complexity_part: f64 = a
        .iter()
        .zip(&c)
        .zip(&gamma)
        .map(|((a, c), g)| 4.0 * a * c.powf(0.25) / g.powf(0.25))
        .sum();
    let sampling_part = (conf * c.iter().zip(&gamma).map(|(c, g)| (c / g).sqrt()).sum::<f64>()).sqrt();
    let tight = root_gc.sqrt() / (m * budget.sqrt()) * (complexity_part + sampling_part);
    let loose = (m + 1.0).sqrt() / (m * budget.sqrt()) * root_gc;

    Ok(BoundReport {
        tight,
        loose,
        per_experiment_a: a,
        regime: problem.regime,
    })
}

/// Hypothesis classes with known `a_j / sqrt(n_j)` complexity decay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PredictorClass {
    /// `{w^T x : |w|_2 <= w2}` with `|x_j|_2 <= x2[j]`.
    LinearL2 { x2: Vec<f64>, w2: f64 },
    /// `{w^T x : |w|_1 <= w1}` with `|x_j|_inf <= xinf[j]` in dimension `l`.
    LinearLinfL1 { xinf: Vec<f64>, w1: f64, l: u32 },
    /// Two-layer network with 1-Lipschitz activation. `b` is an absolute
    /// constant the user must supply (1 when omitted).
    TwoLayerNn {
        #[serde(default = "default_nn_constant")]
        b: f64,
        xinf: Vec<f64>,
        l: u32,
    },
    /// Kernel expansions with RKHS radius `b[j]` and `ek[j] = E[k(x, x)]`.
    Kernel { b: Vec<f64>, ek: Vec<f64> },
}

fn default_nn_constant() -> f64 {
    1.0
}

impl PredictorClass {
    pub fn len(&self) -> usize {
        match self {
            PredictorClass::LinearL2 { x2, .. } => x2.len(),
            PredictorClass::LinearLinfL1 { xinf, .. } | PredictorClass::TwoLayerNn { xinf, .. } => xinf.len(),
            PredictorClass::Kernel { b, .. } => b.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn name(&self) -> &'static str {
        match self {
            PredictorClass::LinearL2 { .. } => "linear_l2",
            PredictorClass::LinearLinfL1 { .. } => "linear_linf_l1",
            PredictorClass::TwoLayerNn { .. } => "two_layer_nn",
            PredictorClass::Kernel { .. } => "kernel",
        }
    }

    /// The complexity flavor each class's constant is known for: empirical
    /// for the linear classes, expected for networks and kernels.
    pub fn regime(&self) -> Regime {
        match self {
            PredictorClass::LinearL2 { .. } | PredictorClass::LinearLinfL1 { .. } => Regime::Empirical,
            PredictorClass::TwoLayerNn { .. } | PredictorClass::Kernel { .. } => Regime::Expected,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: &[f64], what: &str| -> Result<()> {
            if v.is_empty() {
                return Err(Error::invalid(format!("{what} must not be empty")));
            }
            if v.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                return Err(Error::invalid(format!("{what} must be positive")));
            }
            Ok(())
        };
        let scalar = |x: f64, what: &str| -> Result<()> {
            if x.is_finite() && x > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(format!("{what} = {x} must be positive")))
            }
        };
        let dim = |l: u32| -> Result<()> {
            if l >= 2 {
                Ok(())
            } else {
                Err(Error::invalid(format!("dimension l = {l} must be >= 2")))
            }
        };
        match self {
            PredictorClass::LinearL2 { x2, w2 } => {
                positive(x2, "x2")?;
                scalar(*w2, "w2")
            }
            PredictorClass::LinearLinfL1 { xinf, w1, l } => {
                positive(xinf, "xinf")?;
                scalar(*w1, "w1")?;
                dim(*l)
            }
            PredictorClass::TwoLayerNn { b, xinf, l } => {
                positive(xinf, "xinf")?;
                scalar(*b, "b")?;
                dim(*l)
            }
            PredictorClass::Kernel { b, ek } => {
                positive(b, "b")?;
                if ek.len() != b.len() {
                    return Err(Error::invalid(format!(
                        "{} radii but {} kernel moments",
                        b.len(),
                        ek.len()
                    )));
                }
                if ek.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                    return Err(Error::invalid("kernel moments must be >= 0"));
                }
                Ok(())
            }
        }
    }
}

/// Per-experiment complexity constants `a_j` of a predictor class.
pub fn class_constants(class: &PredictorClass) -> Result<Vec<f64>> {
    class.validate()?;
    Ok(match class {
        PredictorClass::LinearL2 { x2, w2 } => x2.iter().map(|x| x * w2).collect(),
        PredictorClass::LinearLinfL1 { xinf, w1, l } => {
            let f = (2.0 * (*l as f64).ln()).sqrt();
            xinf.iter().map(|x| x * w1 * f).collect()
        }
        PredictorClass::TwoLayerNn { b, xinf, l } => {
            let f = (*l as f64).ln().sqrt();
            xinf.iter().map(|x| b * x * f).collect()
        }
        PredictorClass::Kernel { b, ek } => b.iter().zip(ek).map(|(b, e)| 2.0 * b * e.sqrt()).collect(),
    })
}

/// Budget-form bound for a predictor class, written out per class.
pub fn class_bound(class: &PredictorClass, costs: &[f64], budget: f64, delta: f64) -> Result<f64> {
    class.validate()?;
    validate_delta(delta)?;
    if costs.len() != class.len() {
        return Err(Error::invalid(format!(
            "{} costs for {} experiments",
            costs.len(),
            class.len()
        )));
    }
    if costs.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
        return Err(Error::invalid("costs must be positive"));
    }
    if !(budget.is_finite() && budget > 0.0) {
        return Err(Error::invalid(format!("budget {budget} must be > 0")));
    }
    let m = costs.len() as f64;
    let emp = 18.0 * (3.0 / delta).ln();
    let exp = 2.0 * (2.0 / delta).ln();
    let sum: f64 = match class {
        PredictorClass::LinearL2 { x2, w2 } => x2
            .iter()
            .zip(costs)
            .map(|(x, c)| (16.0 * x * x * w2 * w2 * c + emp * c).sqrt())
            .sum(),
        PredictorClass::LinearLinfL1 { xinf, w1, l } => {
            let log_l = (*l as f64).ln();
            xinf.iter()
                .zip(costs)
                .map(|(x, c)| (32.0 * x * x * w1 * w1 * c * log_l + emp * c).sqrt())
                .sum()
        }
        PredictorClass::TwoLayerNn { b, xinf, l } => {
            let log_l = (*l as f64).ln();
            xinf.iter()
                .zip(costs)
                .map(|(x, c)| (16.0 * b * b * x * x * c * log_l + exp * c).sqrt())
                .sum()
        }
        PredictorClass::Kernel { b, ek } => b
            .iter()
            .zip(ek)
            .zip(costs)
            .map(|((b, e), c)| (64.0 * b * b * e * c + exp * c).sqrt())
            .sum(),
    };
    Ok((m + 1.0).sqrt() / (m * budget.sqrt()) * sum)
}

/// Assembles the [`BudgetProblem`] a predictor class induces.
pub fn class_problem(class: &PredictorClass, costs: &[f64], budget: f64, delta: f64) -> Result<BudgetProblem> {
    let a = class_constants(class)?;
    if costs.len() != a.len() {
        return Err(Error::invalid(format!(
            "{} costs for {} experiments",
            costs.len(),
            a.len()
        )));
    }
    let experiments = a
        .into_iter()
        .zip(costs)
        .map(|(a, &c)| ExperimentSpec::new(a, c))
        .collect::<Result<Vec<_>>>()?;
    Ok(BudgetProblem::new(experiments, budget, delta, class.regime()))
}

fn check_series_args(a_scale: f64, k_scale: f64, decay: f64, m: usize, budget: f64) -> Result<()> {
    if !(decay.is_finite() && decay > 0.0) {
        return Err(Error::invalid(format!("cost decay s = {decay} must be > 0")));
    }
    if !(a_scale > 0.0 && k_scale > 0.0) {
        return Err(Error::invalid("scale constants must be positive"));
    }
    if m == 0 {
        return Err(Error::invalid("m must be >= 1"));
    }
    if !(budget.is_finite() && budget > 0.0) {
        return Err(Error::invalid(format!("budget {budget} must be > 0")));
    }
    Ok(())
}

/// Closed-form cap for growing complexities `a_j = A j^2` and geometrically
/// cheaper samples `c_j = K e^{-s j}`:
/// `4 A sqrt(K) e^{s/2} / ((e^{s/4} - 1)^4 m sqrt(C))`.
pub fn large_constant_cap(a_scale: f64, k_scale: f64, decay: f64, m: usize, budget: f64) -> Result<f64> {
    check_series_args(a_scale, k_scale, decay, m, budget)?;
    let q = (decay / 4.0).exp() - 1.0;
    Ok(4.0 * a_scale * k_scale.sqrt() * (decay / 2.0).exp() / (q.powi(4) * m as f64 * budget.sqrt()))
}

/// `4 (sum_{j=1}^{terms} sqrt(a_j sqrt(c_j)))^2 / (m sqrt(C))` for the same
/// schedules as [`large_constant_cap`].
pub fn large_constant_series(
    a_scale: f64,
    k_scale: f64,
    decay: f64,
    m: usize,
    budget: f64,
    terms: usize,
) -> Result<f64> {
    check_series_args(a_scale, k_scale, decay, m, budget)?;
    let sum: f64 = (1..=terms)
        .map(|j| {
            let j = j as f64;
            let a = a_scale * j * j;
            let c = k_scale * (-decay * j).exp();
            (a * c.sqrt()).sqrt()
        })
        .sum();
    Ok(4.0 * sum * sum / (m as f64 * budget.sqrt()))
}
