//! Budget bounds for each predictor class at a few budgets.
//!
//!     cargo run --example bound_table

use costaware::bounds::{budget_bound, class_problem, PredictorClass};

fn main() -> costaware::Result<()> {
    let costs = [1.0, 0.5, 0.25];
    let classes = [
        PredictorClass::LinearL2 {
            x2: vec![1.0, 2.0, 3.0],
            w2: 1.0,
        },
        PredictorClass::LinearLinfL1 {
            xinf: vec![1.0, 1.0, 1.0],
            w1: 1.0,
            l: 50,
        },
        PredictorClass::TwoLayerNn {
            b: 1.0,
            xinf: vec![1.0, 1.0, 1.0],
            l: 50,
        },
        PredictorClass::Kernel {
            b: vec![1.0; 3],
            ek: vec![1.0, 0.5, 0.25],
        },
    ];
    println!(
        "{:<16} {:>8} {:>10} {:>10} {:>10}",
        "class", "C", "regime", "tight", "loose"
    );
    for class in &classes {
        for budget in [100.0, 400.0, 1600.0] {
            let report = budget_bound(&class_problem(class, &costs, budget, 0.05)?)?;
            println!(
                "{:<16} {:>8} {:>10} {:>10.4} {:>10.4}",
                class.name(),
                budget,
                report.regime.as_str(),
                report.tight,
                report.loose
            );
        }
    }
    Ok(())
}
