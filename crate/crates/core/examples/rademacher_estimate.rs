//! Monte Carlo Rademacher complexity of an L2 ball on a random sample,
//! next to its analytic caps.
//!
//!     cargo run --release --example rademacher_estimate

use nalgebra::DMatrix;
use rand::Rng;

use costaware::rademacher::{estimate_linear_l1, estimate_linear_l2, l2_second_moment_scale, SampleSet, DEFAULT_DRAWS};
use costaware::rng::{label, stream};

fn main() -> costaware::Result<()> {
    let mut rng = stream(7, label::VALIDATION, 0);
    let points = DMatrix::from_fn(200, 10, |_, _| rng.gen_range(-1.0..1.0));
    let set = SampleSet::from_matrix(points)?;

    let l2 = estimate_linear_l2(&set, 1.0, DEFAULT_DRAWS, 1)?;
    println!(
        "L2 ball:  {:.5} +- {:.5}  (second-moment cap {:.5}, worst-case cap {:.5})",
        l2.mean,
        l2.stderr,
        l2_second_moment_scale(&set, 1.0),
        l2.class_bound
    );
    let l1 = estimate_linear_l1(&set, 1.0, DEFAULT_DRAWS, 1)?;
    println!(
        "L1 ball:  {:.5} +- {:.5}  (cap {:.5})",
        l1.mean, l1.stderr, l1.class_bound
    );
    Ok(())
}
