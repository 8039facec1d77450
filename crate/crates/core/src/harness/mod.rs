//! Repetition sweeps of the synthetic study over `(C, m)` grids.
//!
//! Every repetition derives its own seed from `(master seed, C index, m, rep)`
//! and draws all of its randomness from streams keyed by that seed, so the
//! aggregated result is identical for any thread count.

mod output;
mod svg;

pub use output::{emit_csv, emit_metadata, emit_records_csv, read_sweep_csv, SWEEP_CSV_HEADER};
pub use svg::{emit_svg, render_svg, Metric};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::allocation::{proportionality_split, round_to_budget};
use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::synthetic::{
    analytic_divergence, generate_dataset, generate_world, identifiability_dimension, solve_erm, SyntheticConfig,
    X2Schedule,
};

/// Per-sample costs `c_j = (e^s - 1) e^{-s j}`, `j = 1..m`; the infinite
/// series sums to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostSchedule {
    pub s: f64,
    pub m: usize,
}

impl CostSchedule {
    pub fn new(s: f64, m: usize) -> Result<Self> {
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::invalid(format!("cost decay {s} must be > 0")));
        }
        Ok(CostSchedule { s, m })
    }

    pub fn costs(&self) -> Vec<f64> {
        let lead = self.s.exp_m1();
        (1..=self.m).map(|j| lead * (-self.s * j as f64).exp()).collect()
    }

    /// `sum_{j<=m} c_j = 1 - e^{-s m}`.
    pub fn partial_sum(&self) -> f64 {
        -(-self.s * self.m as f64).exp_m1()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Success when `d_m(h_hat, h*)` is below this.
    pub d_m: f64,
    /// Success when `|w_hat - w*|_2` is below this.
    pub w: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { d_m: 1e-4, w: 0.01 }
    }
}

pub const DEFAULT_REPS: usize = 100;

fn default_reps() -> usize {
    DEFAULT_REPS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub base: SyntheticConfig,
    /// Total budgets `C` to evaluate.
    pub c_grid: Vec<f64>,
    /// Use the first `m` experiments of `base` for each value.
    pub m_values: Vec<usize>,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default)]
    pub thresholds: Thresholds,
    /// Overrides `base.x2` when set.
    #[serde(default)]
    pub x2_mode: Option<X2Schedule>,
    /// Keep one world per `(C, m)` cell instead of redrawing it every repetition.
    #[serde(default)]
    pub fixed_world: bool,
}

impl SweepConfig {
    /// Reference study at desk scale: `l = 10`, five
    /// experiments, `W2 = 10`, `s = 1`, noise half-width 0.1.
    pub fn reference_study(schedule: X2Schedule, seed: u64) -> SweepConfig {
        SweepConfig {
            base: SyntheticConfig {
                l: 10,
                m: 5,
                w2: 10.0,
                x2: schedule.caps(10, 5),
                s: 1.0,
                eps_b: 0.1,
                seed,
            },
            c_grid: vec![50.0, 100.0, 200.0, 500.0, 1000.0],
            m_values: (1..=5).collect(),
            reps: DEFAULT_REPS,
            thresholds: Thresholds::default(),
            x2_mode: Some(schedule),
            fixed_world: false,
        }
    }

    /// Base configuration with the input-cap schedule applied.
    pub fn effective_base(&self) -> SyntheticConfig {
        let mut base = self.base.clone();
        if let Some(mode) = self.x2_mode {
            base.x2 = mode.caps(base.l, base.m);
        }
        base
    }

    pub fn validate(&self) -> Result<()> {
        self.effective_base().validate()?;
        if self.reps == 0 {
            return Err(Error::invalid("reps must be >= 1"));
        }
        if let Some(m) = self.m_values.iter().find(|&&m| m == 0 || m > self.base.m) {
            return Err(Error::invalid(format!("m = {m} outside 1..={}", self.base.m)));
        }
        if self.c_grid.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return Err(Error::invalid("budgets must be positive"));
        }
        if !(self.thresholds.d_m > 0.0 && self.thresholds.w > 0.0) {
            return Err(Error::invalid("thresholds must be positive"));
        }
        Ok(())
    }

    pub fn world_policy(&self) -> &'static str {
        if self.fixed_world {
            "fixed per (C, m) cell"
        } else {
            "redrawn every repetition"
        }
    }
}

/// Outcome of one repetition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepRecord {
    pub budget: f64,
    pub m: usize,
    pub rep: usize,
    pub seed: u64,
    pub n: Vec<u64>,
    pub d_m: Option<f64>,
    pub w_error: Option<f64>,
    pub success_dm: bool,
    pub success_w: bool,
    /// Why the repetition could not run, if it could not.
    pub failure: Option<String>,
}

/// Aggregated success frequencies for one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(rename = "C")]
    pub budget: f64,
    pub m: usize,
    pub success_dm: f64,
    pub success_w: f64,
    pub reps: usize,
    pub seed: u64,
}

impl SweepRow {
    /// Binomial standard error of a success frequency.
    pub fn stderr(p: f64, reps: usize) -> f64 {
        (p * (1.0 - p) / reps as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub records: Vec<RepRecord>,
    pub world_policy: String,
}

impl SweepResult {
    pub fn row(&self, budget: f64, m: usize) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.budget == budget && r.m == m)
    }
}

/// Single study run: allocate, sample, fit, score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Simulation {
    pub budget: f64,
    pub m: usize,
    pub n: Vec<u64>,
    pub d_m: f64,
    pub w_error: f64,
    pub objective: f64,
    pub invisible_dims: usize,
}

enum RunFailure {
    Starved(String),
    Error(Error),
}

fn sample_counts(config: &SyntheticConfig, budget: f64) -> Result<Vec<u64>> {
    let costs = CostSchedule::new(config.s, config.m)?.costs();
    let n_real = proportionality_split(&config.x2, &costs, budget)?;
    round_to_budget(&n_real, &costs, budget, false)
}

fn run_once(
    world_config: &SyntheticConfig,
    data_config: &SyntheticConfig,
    budget: f64,
) -> Result<Simulation, RunFailure> {
    let n = sample_counts(data_config, budget).map_err(RunFailure::Error)?;
    if let Some(j) = n.iter().position(|&v| v == 0) {
        return Err(RunFailure::Starved(format!("experiment {} received no samples", j + 1)));
    }
    let world = generate_world(world_config).map_err(RunFailure::Error)?;
    let counts: Vec<usize> = n.iter().map(|&v| v as usize).collect();
    let data = generate_dataset(&world, data_config, &counts).map_err(RunFailure::Error)?;
    let sol = solve_erm(&data, data_config.w2).map_err(RunFailure::Error)?;
    let d_m = analytic_divergence(&world, data_config, &sol.w).map_err(RunFailure::Error)?;
    Ok(Simulation {
        budget,
        m: data_config.m,
        n,
        d_m,
        w_error: (&sol.w - &world.w_star).norm(),
        objective: sol.objective,
        invisible_dims: identifiability_dimension(&world),
    })
}

/// One run of the study with the configuration's own seed.
pub fn simulate(config: &SyntheticConfig, budget: f64) -> Result<Simulation> {
    config.validate()?;
    if !(budget.is_finite() && budget > 0.0) {
        return Err(Error::invalid(format!("budget {budget} must be > 0")));
    }
    match run_once(config, config, budget) {
        Ok(s) => Ok(s),
        Err(RunFailure::Error(e)) => Err(e),
        Err(RunFailure::Starved(why)) => Err(Error::invalid(why)),
    }
}

fn run_rep(config: &SweepConfig, base: &SyntheticConfig, c_idx: usize, m: usize, rep: usize) -> Result<RepRecord> {
    let budget = config.c_grid[c_idx];
    let master = base.seed;
    let seed = derive_seed(&[master, c_idx as u64, m as u64, rep as u64]);
    let world_seed = if config.fixed_world {
        derive_seed(&[master, c_idx as u64, m as u64])
    } else {
        seed
    };
    let sub = base.prefix(m)?;
    let outcome = run_once(&sub.with_seed(world_seed), &sub.with_seed(seed), budget);
    let mut record = RepRecord {
        budget,
        m,
        rep,
        seed,
        n: Vec::new(),
        d_m: None,
        w_error: None,
        success_dm: false,
        success_w: false,
        failure: None,
    };
    match outcome {
        Ok(sim) => {
            record.success_dm = sim.d_m < config.thresholds.d_m;
            record.success_w = sim.w_error < config.thresholds.w;
            record.n = sim.n;
            record.d_m = Some(sim.d_m);
            record.w_error = Some(sim.w_error);
        }
        Err(RunFailure::Starved(why)) => {
            record.n = sample_counts(&sub, budget)?;
            record.failure = Some(why);
        }
        Err(RunFailure::Error(e)) => return Err(e),
    }
    Ok(record)
}

/// Runs every `(C, m, rep)` job on the current rayon pool.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    config.validate()?;
    let base = config.effective_base();

    let mut cells: Vec<(usize, usize)> = (0..config.c_grid.len())
        .flat_map(|c| config.m_values.iter().map(move |&m| (c, m)))
        .collect();
    cells.sort_by(|a, b| config.c_grid[a.0].total_cmp(&config.c_grid[b.0]).then(a.1.cmp(&b.1)));
    cells.dedup();

    let jobs: Vec<(usize, usize, usize)> = cells
        .iter()
        .flat_map(|&(c, m)| (0..config.reps).map(move |r| (c, m, r)))
        .collect();
    let records = jobs
        .par_iter()
        .map(|&(c, m, r)| run_rep(config, &base, c, m, r))
        .collect::<Result<Vec<_>>>()?;

    let rows = records
        .chunks(config.reps)
        .map(|chunk| {
            let reps = chunk.len();
            let dm = chunk.iter().filter(|r| r.success_dm).count();
            let w = chunk.iter().filter(|r| r.success_w).count();
            SweepRow {
                budget: chunk[0].budget,
                m: chunk[0].m,
                success_dm: dm as f64 / reps as f64,
                success_w: w as f64 / reps as f64,
                reps,
                seed: base.seed,
            }
        })
        .collect();

    Ok(SweepResult {
        rows,
        records,
        world_policy: config.world_policy().to_string(),
    })
}

/// [`run_sweep`] on a dedicated pool with `threads` workers.
pub fn run_sweep_with_threads(config: &SweepConfig, threads: usize) -> Result<SweepResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("cannot build thread pool: {e}")))?;
    pool.install(|| run_sweep(config))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(reps: usize) -> SweepConfig {
        let mut cfg = SweepConfig::reference_study(X2Schedule::Decreasing, 11);
        cfg.c_grid = vec![100.0, 50.0];
        cfg.m_values = vec![2, 1];
        cfg.reps = reps;
        cfg
    }

    #[test]
    fn cost_schedule_partial_sums() {
        for s in [0.1, 1.0, 2.5] {
            for m in [1, 3, 10, 40] {
                let sched = CostSchedule::new(s, m).unwrap();
                let c = sched.costs();
                assert!(c.windows(2).all(|p| p[1] < p[0]));
                assert!(c.iter().all(|&v| v > 0.0));
                let sum: f64 = c.iter().sum();
                assert!((sum - sched.partial_sum()).abs() < 1e-12);
                assert!((sched.partial_sum() - (1.0 - (-s * m as f64).exp())).abs() < 1e-15);
            }
        }
        assert!(CostSchedule::new(0.0, 3).is_err());
    }

    #[test]
    fn rows_are_ordered_and_deterministic() {
        let cfg = small(3);
        let a = run_sweep(&cfg).unwrap();
        let order: Vec<(f64, usize)> = a.rows.iter().map(|r| (r.budget, r.m)).collect();
        assert_eq!(order, vec![(50.0, 1), (50.0, 2), (100.0, 1), (100.0, 2)]);
        assert_eq!(a, run_sweep(&cfg).unwrap());
        assert!(a
            .rows
            .iter()
            .all(|r| (0.0..=1.0).contains(&r.success_dm) && r.reps == 3));
    }

    #[test]
    fn thread_count_invariance() {
        let cfg = small(4);
        assert_eq!(
            run_sweep_with_threads(&cfg, 1).unwrap(),
            run_sweep_with_threads(&cfg, 8).unwrap()
        );
    }

    #[test]
    fn noiseless_huge_budget_recovers() {
        let mut cfg = SweepConfig::reference_study(X2Schedule::Decreasing, 5);
        cfg.base.eps_b = 0.0;
        cfg.c_grid = vec![1e5];
        cfg.m_values = vec![5];
        cfg.reps = 1;
        let r = run_sweep(&cfg).unwrap();
        assert_eq!(r.rows[0].success_dm, 1.0);
        assert_eq!(r.rows[0].success_w, 1.0);
    }

    #[test]
    fn starved_experiment_is_a_recorded_failure() {
        let mut cfg = small(2);
        cfg.c_grid = vec![0.5];
        cfg.m_values = vec![2];
        let r = run_sweep(&cfg).unwrap();
        assert_eq!(r.rows[0].success_w, 0.0);
        assert!(r.records.iter().all(|rec| rec.failure.is_some() && rec.d_m.is_none()));
    }

    #[test]
    fn fixed_world_shares_projections_across_reps() {
        let mut cfg = small(3);
        cfg.fixed_world = true;
        cfg.base.eps_b = 0.0;
        let r = run_sweep(&cfg).unwrap();
        assert_eq!(r.world_policy, "fixed per (C, m) cell");
        let seeds: std::collections::BTreeSet<u64> = r.records.iter().map(|x| x.seed).collect();
        assert_eq!(seeds.len(), r.records.len());
    }

    #[test]
    fn invalid_sweeps_rejected() {
        let mut cfg = small(1);
        cfg.m_values = vec![6];
        assert!(run_sweep(&cfg).is_err());
        let mut cfg = small(1);
        cfg.reps = 0;
        assert!(run_sweep(&cfg).is_err());
    }
}
