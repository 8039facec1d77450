//! Budget-optimal allocation of samples across experiments.
//!
//! Minimizes `sum_j gamma_j / n_j` subject to `sum_j c_j n_j <= C`, where
//! `gamma_j = 16 a_j^2 + kappa * ln(kappa' / delta)` collects the complexity
//! constant of experiment `j` and the confidence term of the chosen regime.
//! The optimum is `n_j = C sqrt(gamma_j) / (sqrt(c_j) sum_k sqrt(gamma_k c_k))`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which Rademacher complexity the bound is stated in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// Expected complexity; confidence term `2 ln(2/delta)`.
    Expected,
    /// Empirical complexity; confidence term `18 ln(3/delta)`.
    Empirical,
}

impl Regime {
    /// The additive confidence term entering every `gamma_j`.
    pub fn confidence_term(self, delta: f64) -> f64 {
        match self {
            Regime::Expected => 2.0 * (2.0 / delta).ln(),
            Regime::Empirical => 18.0 * (3.0 / delta).ln(),
        }
    }

    pub fn gamma(self, a: f64, delta: f64) -> f64 {
        16.0 * a * a + self.confidence_term(delta)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Expected => "expected",
            Regime::Empirical => "empirical",
        }
    }
}

/// One experiment: complexity numerator `a` and per-sample cost `c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub a: f64,
    pub c: f64,
}

impl ExperimentSpec {
    pub fn new(a: f64, c: f64) -> Result<Self> {
        let spec = ExperimentSpec { a, c };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        if !(self.a.is_finite() && self.a >= 0.0) {
            return Err(Error::invalid(format!(
                "complexity constant a = {} must be >= 0",
                self.a
            )));
        }
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(Error::invalid(format!("per-sample cost c = {} must be > 0", self.c)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetProblem {
    pub experiments: Vec<ExperimentSpec>,
    pub budget: f64,
    pub delta: f64,
    pub regime: Regime,
    /// Force at least one integer sample per experiment.
    #[serde(default)]
    pub min_one_sample: bool,
}

impl BudgetProblem {
    pub fn new(experiments: Vec<ExperimentSpec>, budget: f64, delta: f64, regime: Regime) -> Self {
        BudgetProblem {
            experiments,
            budget,
            delta,
            regime,
            min_one_sample: false,
        }
    }

    pub fn with_min_one_sample(mut self, on: bool) -> Self {
        self.min_one_sample = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.experiments.is_empty() {
            return Err(Error::invalid("at least one experiment is required"));
        }
        for e in &self.experiments {
            e.validate()?;
        }
        if !(self.budget.is_finite() && self.budget > 0.0) {
            return Err(Error::invalid(format!("budget {} must be > 0", self.budget)));
        }
        validate_delta(self.delta)?;
        Ok(())
    }

    pub fn costs(&self) -> Vec<f64> {
        self.experiments.iter().map(|e| e.c).collect()
    }

    pub fn gammas(&self) -> Vec<f64> {
        self.experiments
            .iter()
            .map(|e| self.regime.gamma(e.a, self.delta))
            .collect()
    }
}

pub(crate) fn validate_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("delta {delta} must lie in (0, 1)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationPlan {
    /// Optimal continuous sample counts; they exhaust the budget.
    pub n_real: Vec<f64>,
    /// Integer counts that never overspend.
    pub n_int: Vec<u64>,
    /// `sum_j gamma_j / n_real_j`.
    pub objective: f64,
    pub gamma: Vec<f64>,
}

impl AllocationPlan {
    fn from_real(problem: &BudgetProblem, gamma: Vec<f64>, n_real: Vec<f64>) -> Result<Self> {
        let costs = problem.costs();
        let n_int = round_to_budget(&n_real, &costs, problem.budget, problem.min_one_sample)?;
        let objective = gamma.iter().zip(&n_real).map(|(g, n)| g / n).sum();
        Ok(AllocationPlan {
            n_real,
            n_int,
            objective,
            gamma,
        })
    }

    pub fn spent_real(&self, costs: &[f64]) -> f64 {
        self.n_real.iter().zip(costs).map(|(n, c)| n * c).sum()
    }
}

/// Closed-form optimal allocation.
///
/// If every `a_j` is zero the weights reduce to the confidence term alone and
/// the split follows `1 / sqrt(c_j)`.
pub fn allocate(problem: &BudgetProblem) -> Result<AllocationPlan> {
    problem.validate()?;
    let gamma = problem.gammas();
    let costs = problem.costs();
    let norm: f64 = gamma.iter().zip(&costs).map(|(g, c)| (g * c).sqrt()).sum();
    let n_real = gamma
        .iter()
        .zip(&costs)
        .map(|(g, c)| problem.budget * g.sqrt() / (c.sqrt() * norm))
        .collect();
    AllocationPlan::from_real(problem, gamma, n_real)
}

const ORACLE_MAX_ITER: usize = 200;
const ORACLE_TOL: f64 = 1e-12;

/// Independent numerical solution of the same problem.
///
/// Stationarity gives `n_j(lambda) = sqrt(gamma_j / (c_j lambda))`; the spend
/// `sum_j c_j n_j(lambda)` is strictly decreasing in `lambda`, so bisection on
/// `log lambda` finds the multiplier at which the budget binds.
pub fn allocate_oracle(problem: &BudgetProblem) -> Result<AllocationPlan> {
    problem.validate()?;
    let gamma = problem.gammas();
    let costs = problem.costs();
    let budget = problem.budget;

    let counts = |lambda: f64| -> Vec<f64> {
        gamma
            .iter()
            .zip(&costs)
            .map(|(g, c)| (g / (c * lambda)).sqrt())
            .collect()
    };
    let spend = |lambda: f64| -> f64 { counts(lambda).iter().zip(&costs).map(|(n, c)| n * c).sum() };

    let mut lo = 1.0_f64;
    let mut hi = 1.0_f64;
    let mut guard = 0;
    while spend(lo) < budget {
        lo /= 16.0;
        guard += 1;
        if guard > 512 {
            return Err(Error::NonConvergence {
                solver: "allocation oracle bracket",
                iterations: guard,
                residual: spend(lo) - budget,
            });
        }
    }
    while spend(hi) > budget {
        hi *= 16.0;
        guard += 1;
        if guard > 512 {
            return Err(Error::NonConvergence {
                solver: "allocation oracle bracket",
                iterations: guard,
                residual: spend(hi) - budget,
            });
        }
    }

    let mut residual = f64::INFINITY;
    for _ in 0..ORACLE_MAX_ITER {
        let mid = (lo * hi).sqrt();
        let s = spend(mid);
        residual = (s - budget) / budget;
        if residual.abs() <= ORACLE_TOL {
            return AllocationPlan::from_real(problem, gamma.clone(), counts(mid));
        }
        if s > budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NonConvergence {
        solver: "allocation oracle bisection",
        iterations: ORACLE_MAX_ITER,
        residual,
    })
}

/// Sample split proportional to `x_j / sqrt(c_j)`, scaled to spend exactly `budget`.
///
/// This is the large-complexity limit of [`allocate`] with `a_j` proportional
/// to `x_j`.
pub fn proportionality_split(x: &[f64], costs: &[f64], budget: f64) -> Result<Vec<f64>> {
    if x.is_empty() || costs.is_empty() {
        return Err(Error::invalid("proportionality split needs at least one experiment"));
    }
    if x.len() != costs.len() {
        return Err(Error::invalid(format!("{} weights but {} costs", x.len(), costs.len())));
    }
    if x.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::invalid("weights must be positive"));
    }
    if costs.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::invalid("costs must be positive"));
    }
    if !(budget.is_finite() && budget > 0.0) {
        return Err(Error::invalid(format!("budget {budget} must be > 0")));
    }
    let norm: f64 = x.iter().zip(costs).map(|(x, c)| x * c.sqrt()).sum();
    Ok(x.iter()
        .zip(costs)
        .map(|(x, c)| budget * x / (c.sqrt() * norm))
        .collect())
}

fn spend_int(n: &[u64], costs: &[f64]) -> f64 {
    n.iter().zip(costs).map(|(n, c)| *n as f64 * c).sum()
}

/// Rounds continuous counts to integers without overspending.
///
/// Floors every count, then walks experiments in order of decreasing
/// fractional part and adds one sample wherever the budget still allows.
/// With `min_one_sample` every experiment keeps at least one sample; samples
/// are taken back from the most over-rounded experiments if that overspends.
pub fn round_to_budget(n_real: &[f64], costs: &[f64], budget: f64, min_one_sample: bool) -> Result<Vec<u64>> {
    debug_assert_eq!(n_real.len(), costs.len());
    let mut n: Vec<u64> = n_real.iter().map(|v| v.max(0.0).floor() as u64).collect();

    if min_one_sample {
        let required: f64 = costs.iter().sum();
        if required > budget {
            return Err(Error::InfeasibleBudget { budget, required });
        }
        for v in n.iter_mut() {
            if *v == 0 {
                *v = 1;
            }
        }
        while spend_int(&n, costs) > budget {
            // give back a sample where it hurts the continuous target least
            let j = (0..n.len())
                .filter(|&j| n[j] > 1)
                .min_by(|&i, &j| {
                    let di = n_real[i] - (n[i] - 1) as f64;
                    let dj = n_real[j] - (n[j] - 1) as f64;
                    di.total_cmp(&dj).then(i.cmp(&j))
                })
                .ok_or(Error::InfeasibleBudget { budget, required })?;
            n[j] -= 1;
        }
    }

    let mut order: Vec<usize> = (0..n.len()).collect();
    let frac = |j: usize| n_real[j] - n_real[j].floor();
    order.sort_by(|&i, &j| frac(j).total_cmp(&frac(i)));
    for j in order {
        if (n[j] as f64) > n_real[j] {
            continue;
        }
        n[j] += 1;
        if spend_int(&n, costs) > budget {
            n[j] -= 1;
        }
    }
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn problem(a: &[f64], c: &[f64], budget: f64, delta: f64, regime: Regime) -> BudgetProblem {
        let exps = a
            .iter()
            .zip(c)
            .map(|(&a, &c)| ExperimentSpec::new(a, c).unwrap())
            .collect();
        BudgetProblem::new(exps, budget, delta, regime)
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn symmetric_instance_splits_evenly() {
        let p = problem(&[1.0, 1.0], &[1.0, 1.0], 100.0, 0.1, Regime::Expected);
        for plan in [allocate(&p).unwrap(), allocate_oracle(&p).unwrap()] {
            assert!(rel(plan.n_real[0], 50.0) < 1e-12);
            assert!(rel(plan.n_real[1], 50.0) < 1e-12);
            assert_eq!(plan.n_int, vec![50, 50]);
        }
    }

    #[test]
    fn asymmetric_instance_matches_scalar_minimizer() {
        // frozen from a bounded 1-D minimization of g1/n1 + g2/((100 - n1)/4)
        let p = problem(&[1.0, 2.0], &[1.0, 4.0], 100.0, 0.1, Regime::Expected);
        let plan = allocate(&p).unwrap();
        assert!(rel(plan.n_real[0], 21.89139467431102) < 1e-6);
        assert!(rel(plan.n_real[1], 19.527151331422246) < 1e-6);
        assert!(rel(plan.objective, 4.588886356689575) < 1e-9);
        let oracle = allocate_oracle(&p).unwrap();
        for (x, y) in plan.n_real.iter().zip(&oracle.n_real) {
            assert!(rel(*x, *y) < 1e-6);
        }
        assert!(rel(plan.gamma[0], 21.99146454710798) < 1e-12);
    }

    #[test]
    fn single_experiment_takes_whole_budget() {
        for regime in [Regime::Expected, Regime::Empirical] {
            let p = problem(&[3.7], &[2.5], 40.0, 0.3, regime);
            let plan = allocate(&p).unwrap();
            assert!(rel(plan.n_real[0], 16.0) < 1e-14);
            assert_eq!(plan.n_int, vec![16]);
        }
    }

    #[test]
    fn oracle_hand_checkable_instance() {
        // a = 0 and delta = 1/2 give gamma = 2 ln 4 for both experiments
        let p = problem(&[0.0, 0.0], &[1.0, 1.0], 2.0, 0.5, Regime::Expected);
        let plan = allocate_oracle(&p).unwrap();
        let g = 2.0 * 4f64.ln();
        assert!(rel(plan.gamma[0], g) < 1e-14);
        assert!(rel(plan.n_real[0], 1.0) < 1e-10);
        assert!(rel(plan.n_real[1], 1.0) < 1e-10);
        assert!(rel(plan.objective, 2.0 * g) < 1e-10);
    }

    #[test]
    fn empirical_regime_uses_larger_confidence_term() {
        let d = 0.1;
        assert!(rel(Regime::Expected.gamma(1.0, d), 16.0 + 2.0 * 20f64.ln()) < 1e-15);
        assert!(rel(Regime::Empirical.gamma(1.0, d), 16.0 + 18.0 * 30f64.ln()) < 1e-15);
    }

    #[test]
    fn zero_complexity_follows_inverse_root_cost() {
        let p = problem(&[0.0, 0.0], &[1.0, 4.0], 30.0, 0.2, Regime::Expected);
        let plan = allocate(&p).unwrap();
        assert!(rel(plan.n_real[0] / plan.n_real[1], 2.0) < 1e-12);
    }

    #[test]
    fn rejects_bad_problems() {
        let empty = BudgetProblem::new(vec![], 10.0, 0.1, Regime::Expected);
        assert!(matches!(allocate(&empty), Err(Error::InvalidInput(_))));
        assert!(allocate(&problem(&[1.0], &[1.0], 0.0, 0.1, Regime::Expected)).is_err());
        assert!(allocate(&problem(&[1.0], &[1.0], 1.0, 1.0, Regime::Expected)).is_err());
        assert!(ExperimentSpec::new(-1.0, 1.0).is_err());
        assert!(ExperimentSpec::new(1.0, 0.0).is_err());
    }

    #[test]
    fn min_one_sample_floor() {
        // the cheap, complex experiment dominates; the other rounds to zero
        let p = problem(&[100.0, 0.0], &[1.0, 10.0], 12.0, 0.5, Regime::Expected);
        let plain = allocate(&p).unwrap();
        assert_eq!(plain.n_int[1], 0);
        let floored = allocate(&p.clone().with_min_one_sample(true)).unwrap();
        assert!(floored.n_int.iter().all(|&n| n >= 1));
        assert!(spend_int(&floored.n_int, &p.costs()) <= p.budget);

        let tight = problem(&[1.0, 1.0], &[5.0, 6.0], 10.0, 0.5, Regime::Expected).with_min_one_sample(true);
        assert!(matches!(allocate(&tight), Err(Error::InfeasibleBudget { .. })));
    }

    #[test]
    fn rounding_prefers_largest_fraction() {
        let n = round_to_budget(&[1.6, 1.3, 1.1], &[1.0, 1.0, 1.0], 4.0, false).unwrap();
        assert_eq!(n, vec![2, 1, 1]);
        let n = round_to_budget(&[1.6, 1.3, 1.1], &[3.0, 1.0, 1.0], 6.0, false).unwrap();
        // 3 + 1 + 1 = 5; adding to the first would overspend, so the second gets it
        assert_eq!(n, vec![1, 2, 1]);
    }

    #[test]
    fn split_even_and_reference_parameters() {
        let n = proportionality_split(&[1.0, 1.0], &[1.0, 1.0], 10.0).unwrap();
        assert_eq!(n, vec![5.0, 5.0]);

        let l: f64 = 10.0;
        let x: Vec<f64> = [4.0, 3.0, 2.0, 1.0, 0.0].iter().map(|k| l.powf(k / 8.0)).collect();
        let c: Vec<f64> = (1..=5).map(|j| (1f64.exp() - 1.0) * (-(j as f64)).exp()).collect();
        let n = proportionality_split(&x, &c, 500.0).unwrap();
        let frozen = [
            439.78060608035787,
            543.7300235286176,
            672.2496044593895,
            831.1469132475081,
            1027.6022281283356,
        ];
        for (v, f) in n.iter().zip(frozen) {
            assert!(rel(*v, f) < 1e-12);
        }

        let scaled = problem(
            &x.iter().map(|v| v * 1e6).collect::<Vec<_>>(),
            &c,
            500.0,
            0.1,
            Regime::Expected,
        );
        let plan = allocate(&scaled).unwrap();
        for (v, w) in n.iter().zip(&plan.n_real) {
            assert!(rel(*v, *w) < 1e-4);
        }
    }

    #[test]
    fn split_rejects_empty_and_mismatched() {
        assert!(proportionality_split(&[], &[], 1.0).is_err());
        assert!(proportionality_split(&[1.0], &[1.0, 2.0], 1.0).is_err());
        assert!(proportionality_split(&[0.0], &[1.0], 1.0).is_err());
    }

    fn arb_problem() -> impl Strategy<Value = BudgetProblem> {
        (1usize..=10)
            .prop_flat_map(|m| {
                (
                    prop::collection::vec(0.0f64..10.0, m),
                    prop::collection::vec(0.01f64..5.0, m),
                    10.0f64..1e4,
                    0.01f64..0.99,
                    any::<bool>(),
                )
            })
            .prop_map(|(a, c, budget, delta, emp)| {
                let regime = if emp { Regime::Empirical } else { Regime::Expected };
                problem(&a, &c, budget, delta, regime)
            })
    }

    proptest! {
        #[test]
        fn budget_is_exhausted(p in arb_problem()) {
            let plan = allocate(&p).unwrap();
            prop_assert!(rel(plan.spent_real(&p.costs()), p.budget) < 1e-9);
            prop_assert!(spend_int(&plan.n_int, &p.costs()) <= p.budget);
            prop_assert!(plan.n_real.iter().all(|&n| n > 0.0));
        }

        #[test]
        fn oracle_agrees(p in arb_problem()) {
            let a = allocate(&p).unwrap();
            let b = allocate_oracle(&p).unwrap();
            for (x, y) in a.n_real.iter().zip(&b.n_real) {
                prop_assert!(rel(*x, *y) < 1e-6);
            }
        }

        #[test]
        fn gamma_scale_invariance(p in arb_problem(), t in 0.1f64..10.0) {
            // scaling a and the confidence term together scales gamma; emulate
            // by comparing the closed form on gamma and t * gamma directly
            let g = p.gammas();
            let c = p.costs();
            let base = proportionality_split(&g.iter().map(|v| v.sqrt()).collect::<Vec<_>>(), &c, p.budget).unwrap();
            let scaled = proportionality_split(&g.iter().map(|v| (t * v).sqrt()).collect::<Vec<_>>(), &c, p.budget).unwrap();
            let closed = allocate(&p).unwrap();
            for ((x, y), z) in base.iter().zip(&scaled).zip(&closed.n_real) {
                prop_assert!(rel(*x, *y) < 1e-12);
                prop_assert!(rel(*x, *z) < 1e-12);
            }
        }

        #[test]
        fn cost_increase_reduces_count(p in arb_problem(), bump in 1.01f64..3.0) {
            let j = p.experiments.len() - 1;
            let mut q = p.clone();
            q.experiments[j].c *= bump;
            let before = allocate(&p).unwrap().n_real[j];
            let after = allocate(&q).unwrap().n_real[j];
            prop_assert!(after < before);
        }

        #[test]
        fn single_experiment_ignores_a_and_delta(a in 0.0f64..50.0, c in 0.01f64..5.0, budget in 1.0f64..1e4, delta in 0.01f64..0.99) {
            let p = problem(&[a], &[c], budget, delta, Regime::Empirical);
            prop_assert!(rel(allocate(&p).unwrap().n_real[0], budget / c) < 1e-14);
        }
    }
}
