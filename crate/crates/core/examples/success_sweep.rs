//! Success-probability sweep over budgets and experiment counts, written as
//! CSV and two SVG charts.
//!
//!     cargo run --release --example success_sweep -- [out_dir] [increasing]

use std::path::PathBuf;

use costaware::harness::{emit_csv, emit_svg, run_sweep, Metric, SweepConfig};
use costaware::synthetic::X2Schedule;

fn main() -> costaware::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "sweep-out".into()));
    let schedule = match args.next().as_deref() {
        Some("increasing") => X2Schedule::Increasing,
        _ => X2Schedule::Decreasing,
    };
    std::fs::create_dir_all(&out).map_err(|e| costaware::Error::io(&out, e))?;

    let config = SweepConfig::reference_study(schedule, 2024);
    let result = run_sweep(&config)?;
    emit_csv(&result, &out.join("sweep.csv"))?;
    emit_svg(&result.rows, Metric::Divergence, &out.join("success_dm.svg"))?;
    emit_svg(&result.rows, Metric::WeightError, &out.join("success_w.svg"))?;

    for row in &result.rows {
        println!(
            "C = {:>6}  m = {}  P(d_m) = {:.2}  P(w) = {:.2}",
            row.budget, row.m, row.success_dm, row.success_w
        );
    }
    println!("wrote {}", out.display());
    Ok(())
}
