//! Growing complexities `a_j = A j^2` against geometrically cheaper samples:
//! partial sums of the bound approach the closed-form cap.
//!
//!     cargo run --example large_constant_series

use costaware::bounds::{large_constant_cap, large_constant_series};

fn main() -> costaware::Result<()> {
    let (a, k, s, m, budget) = (1.0, 1.0, 1.0, 5, 100.0);
    let cap = large_constant_cap(a, k, s, m, budget)?;
    for terms in [1, 5, 10, 20, 50, 100, 10_000] {
        let partial = large_constant_series(a, k, s, m, budget, terms)?;
        println!("{terms:>6} terms: {partial:.10}  gap {:.3e}", cap - partial);
    }
    println!("closed form: {cap:.10}");
    Ok(())
}
