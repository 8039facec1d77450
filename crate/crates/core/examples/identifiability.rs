//! How many weight directions stay invisible as experiments are added,
//! plus the finite-grid argmin comparison.
//!
//!     cargo run --example identifiability

use costaware::synthetic::{generate_world, grid_argmins, identifiability_dimension, SyntheticConfig, X2Schedule};

fn main() -> costaware::Result<()> {
    let config = SyntheticConfig {
        l: 10,
        m: 5,
        w2: 10.0,
        x2: X2Schedule::Increasing.caps(10, 5),
        s: 1.0,
        eps_b: 0.1,
        seed: 3,
    };
    let world = generate_world(&config)?;
    for m in 1..=config.m {
        println!(
            "m = {m}: {} invisible dimensions",
            identifiability_dimension(&world.prefix(m))
        );
    }

    // hypothesis 2 is optimal for both experiments
    let losses = vec![vec![0.4, 0.1, 0.0, 0.0], vec![0.0, 0.3, 0.0, 0.2]];
    let sets = grid_argmins(&losses)?;
    println!(
        "combined argmin {:?}, per-experiment intersection {:?}",
        sets.combined, sets.intersection
    );
    Ok(())
}
