use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::{SweepConfig, SweepResult, SweepRow};
use crate::error::{Error, Result};

pub const SWEEP_CSV_HEADER: [&str; 6] = ["C", "m", "success_dm", "success_w", "reps", "seed"];

/// One row per `(C, m)` point, ordered by `C` then `m`.
pub fn emit_csv(result: &SweepResult, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(SWEEP_CSV_HEADER).map_err(|e| Error::csv(path, e))?;
    for r in &result.rows {
        w.write_record([
            r.budget.to_string(),
            r.m.to_string(),
            r.success_dm.to_string(),
            r.success_w.to_string(),
            r.reps.to_string(),
            r.seed.to_string(),
        ])
        .map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_sweep_csv(path: &Path) -> Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let header = r.headers().map_err(|e| Error::csv(path, e))?.clone();
    if header.iter().ne(SWEEP_CSV_HEADER) {
        return Err(Error::invalid(format!(
            "{}: unexpected header {:?}",
            path.display(),
            header
        )));
    }
    r.deserialize()
        .map(|row| row.map_err(|e| Error::csv(path, e)))
        .collect()
}

/// Per-repetition outcomes, including why a repetition could not run.
pub fn emit_records_csv(result: &SweepResult, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record([
        "C",
        "m",
        "rep",
        "seed",
        "n",
        "d_m",
        "w_error",
        "success_dm",
        "success_w",
        "failure",
    ])
    .map_err(|e| Error::csv(path, e))?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for rec in &result.records {
        let n: Vec<String> = rec.n.iter().map(u64::to_string).collect();
        w.write_record([
            rec.budget.to_string(),
            rec.m.to_string(),
            rec.rep.to_string(),
            rec.seed.to_string(),
            n.join(";"),
            opt(rec.d_m),
            opt(rec.w_error),
            rec.success_dm.to_string(),
            rec.success_w.to_string(),
            rec.failure.clone().unwrap_or_default(),
        ])
        .map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct Metadata<'a> {
    config: &'a SweepConfig,
    world_policy: &'a str,
    failed_reps: usize,
    crate_version: &'static str,
}

/// JSON sidecar describing how a sweep CSV was produced.
pub fn emit_metadata(config: &SweepConfig, result: &SweepResult, path: &Path) -> Result<()> {
    let meta = Metadata {
        config,
        world_policy: &result.world_policy,
        failed_reps: result.records.iter().filter(|r| r.failure.is_some()).count(),
        crate_version: env!("CARGO_PKG_VERSION"),
    };
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    serde_json::to_writer_pretty(&mut f, &meta).map_err(|e| Error::json(path, e))?;
    f.write_all(b"\n").map_err(|e| Error::io(path, e))
}
