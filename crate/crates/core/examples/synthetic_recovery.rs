//! One synthetic study run per budget: allocate, sample, fit, score.
//!
//!     cargo run --release --example synthetic_recovery

use costaware::harness::simulate;
use costaware::synthetic::{SyntheticConfig, X2Schedule};

fn main() -> costaware::Result<()> {
    let config = SyntheticConfig {
        l: 10,
        m: 5,
        w2: 10.0,
        x2: X2Schedule::Decreasing.caps(10, 5),
        s: 1.0,
        eps_b: 0.1,
        seed: 17,
    };
    println!("{:>8} {:>30} {:>12} {:>12}", "C", "n", "d_m", "|w - w*|");
    for budget in [50.0, 200.0, 1000.0, 5000.0] {
        let sim = simulate(&config, budget)?;
        println!(
            "{:>8} {:>30} {:>12.3e} {:>12.4}",
            budget,
            format!("{:?}", sim.n),
            sim.d_m,
            sim.w_error
        );
    }
    Ok(())
}
