//! Split a budget across three experiments and compare with the bisection oracle.
//!
//!     cargo run --example allocate_budget

use costaware::allocation::{allocate, allocate_oracle, BudgetProblem, ExperimentSpec, Regime};

fn main() -> costaware::Result<()> {
    let experiments = vec![
        ExperimentSpec::new(1.0, 1.0)?,
        ExperimentSpec::new(2.0, 4.0)?,
        ExperimentSpec::new(0.5, 0.25)?,
    ];
    let problem = BudgetProblem::new(experiments, 250.0, 0.05, Regime::Expected);
    let plan = allocate(&problem)?;
    let check = allocate_oracle(&problem)?;

    println!(
        "{:>3} {:>6} {:>6} {:>10} {:>12} {:>6}",
        "j", "a", "c", "gamma", "n_real", "n_int"
    );
    for (j, e) in problem.experiments.iter().enumerate() {
        println!(
            "{:>3} {:>6} {:>6} {:>10.4} {:>12.4} {:>6}",
            j + 1,
            e.a,
            e.c,
            plan.gamma[j],
            plan.n_real[j],
            plan.n_int[j]
        );
    }
    let costs = problem.costs();
    let spent: f64 = plan.n_int.iter().zip(&costs).map(|(n, c)| *n as f64 * c).sum();
    println!("objective {:.6} (oracle {:.6})", plan.objective, check.objective);
    println!("integer plan spends {spent} of {}", problem.budget);
    Ok(())
}
