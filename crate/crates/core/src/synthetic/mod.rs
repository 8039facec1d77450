//! Hidden-variable regression study.
//!
//! Experiment `j` observes `x = A_j zeta` where `A_j` is an `l x l/2` sign
//! matrix and `zeta` has i.i.d. uniform entries of half-width
//! `2 X2_j / l^{3/2}`, so every input satisfies `|x|_2 <= X2_j`. Outputs are
//! `y = w*^T x + eps` with uniform noise. A single experiment only sees the
//! `l/2`-dimensional column space of its `A_j`; the rest of `w*` is invisible
//! to it.

mod erm;
mod identifiability;

pub use erm::{erm_objective, solve_erm, solve_erm_projected_gradient, ErmMethod, ErmSolution};
pub use identifiability::{grid_argmins, identifiability_dimension, numerical_rank, GridArgmins, RANK_RTOL};

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{label, stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    /// Ambient dimension; even, so hidden variables have `l/2` coordinates.
    pub l: usize,
    /// Number of experiments.
    pub m: usize,
    /// Radius of the weight ball.
    pub w2: f64,
    /// Per-experiment input norm caps.
    pub x2: Vec<f64>,
    /// Cost decay rate `s` of `c_j = (e^s - 1) e^{-s j}`.
    pub s: f64,
    /// Half-width of the uniform output noise.
    pub eps_b: f64,
    #[serde(default)]
    pub seed: u64,
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.l < 2 || !self.l.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "dimension l = {} must be even and >= 2",
                self.l
            )));
        }
        if self.m == 0 {
            return Err(Error::invalid("at least one experiment is required"));
        }
        if self.x2.len() != self.m {
            return Err(Error::invalid(format!(
                "{} input caps for {} experiments",
                self.x2.len(),
                self.m
            )));
        }
        if self.x2.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::invalid("input caps must be positive"));
        }
        if !(self.w2.is_finite() && self.w2 > 0.0) {
            return Err(Error::invalid(format!("weight radius {} must be > 0", self.w2)));
        }
        if !(self.s.is_finite() && self.s > 0.0) {
            return Err(Error::invalid(format!("cost decay {} must be > 0", self.s)));
        }
        if !(self.eps_b.is_finite() && self.eps_b >= 0.0) {
            return Err(Error::invalid(format!("noise half-width {} must be >= 0", self.eps_b)));
        }
        Ok(())
    }

    /// The first `m` experiments of this configuration.
    pub fn prefix(&self, m: usize) -> Result<SyntheticConfig> {
        if m == 0 || m > self.m {
            return Err(Error::invalid(format!("prefix {m} outside 1..={}", self.m)));
        }
        let mut c = self.clone();
        c.m = m;
        c.x2.truncate(m);
        Ok(c)
    }

    pub fn with_seed(&self, seed: u64) -> SyntheticConfig {
        SyntheticConfig { seed, ..self.clone() }
    }

    /// Half-width of the uniform hidden-variable entries for experiment `j`.
    pub fn hidden_half_width(&self, j: usize) -> f64 {
        2.0 * self.x2[j] / (self.l as f64).powf(1.5)
    }
}

/// Which input-cap ordering to use across experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum X2Schedule {
    /// `X2_j = l^{(m - j)/8}` for `j = 1..m`.
    Decreasing,
    /// `X2_j = l^{(j - 1)/8}` for `j = 1..m`.
    Increasing,
}

impl X2Schedule {
    pub fn caps(self, l: usize, m: usize) -> Vec<f64> {
        let l = l as f64;
        (1..=m)
            .map(|j| {
                let e = match self {
                    X2Schedule::Decreasing => (m - j) as f64,
                    X2Schedule::Increasing => (j - 1) as f64,
                };
                l.powf(e / 8.0)
            })
            .collect()
    }
}

/// Projection matrices and true weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticWorld {
    pub projections: Vec<DMatrix<f64>>,
    pub w_star: DVector<f64>,
}

impl SyntheticWorld {
    pub fn m(&self) -> usize {
        self.projections.len()
    }

    pub fn l(&self) -> usize {
        self.w_star.len()
    }

    /// The world restricted to its first `m` experiments.
    pub fn prefix(&self, m: usize) -> SyntheticWorld {
        SyntheticWorld {
            projections: self.projections[..m].to_vec(),
            w_star: self.w_star.clone(),
        }
    }

    /// `[A_1 ... A_m]`, the `l x (m l / 2)` matrix of all visible directions.
    pub fn stacked(&self) -> DMatrix<f64> {
        let l = self.l();
        let cols: usize = self.projections.iter().map(|a| a.ncols()).sum();
        let mut out = DMatrix::zeros(l, cols);
        let mut at = 0;
        for a in &self.projections {
            out.columns_mut(at, a.ncols()).copy_from(a);
            at += a.ncols();
        }
        out
    }
}

/// Draws `w*` and then `A_1, ..., A_m` from one stream, so worlds built from
/// the same seed with fewer experiments are prefixes of larger ones.
pub fn generate_world(config: &SyntheticConfig) -> Result<SyntheticWorld> {
    config.validate()?;
    let l = config.l;
    let half = l / 2;
    let mut rng = stream(config.seed, label::WORLD, 0);
    let bound = config.w2 / (l as f64).sqrt();
    let w_star = DVector::from_iterator(l, (0..l).map(|_| rng.gen_range(-bound..bound)));
    let projections = (0..config.m)
        .map(|_| {
            let mut a = DMatrix::zeros(l, half);
            for r in 0..l {
                for c in 0..half {
                    a[(r, c)] = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                }
            }
            a
        })
        .collect();
    Ok(SyntheticWorld { projections, w_star })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentData {
    /// `n_j x l`, one sample per row.
    pub inputs: DMatrix<f64>,
    pub outputs: DVector<f64>,
}

impl ExperimentData {
    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub experiments: Vec<ExperimentData>,
}

impl Dataset {
    pub fn counts(&self) -> Vec<usize> {
        self.experiments.iter().map(ExperimentData::len).collect()
    }

    pub fn dim(&self) -> usize {
        self.experiments.first().map_or(0, |e| e.inputs.ncols())
    }
}

/// Samples `n[j]` points from experiment `j`. Experiment `j` draws from its own
/// stream, so its samples do not depend on the other counts.
pub fn generate_dataset(world: &SyntheticWorld, config: &SyntheticConfig, n: &[usize]) -> Result<Dataset> {
    config.validate()?;
    if world.m() != config.m || world.l() != config.l {
        return Err(Error::invalid("world and configuration disagree on l or m"));
    }
    if n.len() != config.m {
        return Err(Error::invalid(format!(
            "{} sample counts for {} experiments",
            n.len(),
            config.m
        )));
    }
    if let Some(j) = n.iter().position(|&v| v == 0) {
        return Err(Error::invalid(format!("experiment {j} has no samples")));
    }
    let l = config.l;
    let half = l / 2;
    let experiments = world
        .projections
        .iter()
        .zip(n)
        .enumerate()
        .map(|(j, (a, &nj))| {
            let mut rng = stream(config.seed, label::DATASET, j as u64);
            let h = config.hidden_half_width(j);
            let mut inputs = DMatrix::zeros(nj, l);
            let mut outputs = DVector::zeros(nj);
            let mut zeta = DVector::zeros(half);
            for i in 0..nj {
                for k in 0..half {
                    zeta[k] = rng.gen_range(-h..h);
                }
                let x = a * &zeta;
                assert!(
                    x.norm() <= config.x2[j] * (1.0 + 1e-12),
                    "generated input exceeds its norm cap"
                );
                let eps = if config.eps_b > 0.0 {
                    rng.gen_range(-config.eps_b..config.eps_b)
                } else {
                    0.0
                };
                outputs[i] = world.w_star.dot(&x) + eps;
                inputs.row_mut(i).copy_from(&x.transpose());
            }
            ExperimentData { inputs, outputs }
        })
        .collect();
    Ok(Dataset { experiments })
}

/// Excess combined squared loss of `w_hat` over `w*` under the generative
/// model: `2 / (3 m l^3) * sum_j X2_j^2 |(w_hat - w*)^T A_j|^2`.
///
/// The loss is not clipped at 1 here.
pub fn analytic_divergence(world: &SyntheticWorld, config: &SyntheticConfig, w_hat: &DVector<f64>) -> Result<f64> {
    if w_hat.len() != world.l() || config.x2.len() != world.m() || config.l != world.l() {
        return Err(Error::invalid(
            "dimension mismatch between world, configuration and hypothesis",
        ));
    }
    let d = w_hat - &world.w_star;
    let l = world.l() as f64;
    let m = world.m() as f64;
    let sum: f64 = world
        .projections
        .iter()
        .zip(&config.x2)
        .map(|(a, x)| x * x * a.tr_mul(&d).norm_squared())
        .sum();
    Ok(2.0 / (3.0 * m * l.powi(3)) * sum)
}

/// Writes `experiment,x1..xl,y` rows.
pub fn write_dataset_csv(dataset: &Dataset, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let l = dataset.dim();
    let mut header = vec!["experiment".to_string()];
    header.extend((1..=l).map(|k| format!("x{k}")));
    header.push("y".into());
    w.write_record(&header).map_err(|e| Error::csv(path, e))?;
    for (j, e) in dataset.experiments.iter().enumerate() {
        for i in 0..e.len() {
            let mut rec = vec![j.to_string()];
            rec.extend(e.inputs.row(i).iter().map(|v| v.to_string()));
            rec.push(e.outputs[i].to_string());
            w.write_record(&rec).map_err(|e| Error::csv(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_dataset_csv(path: &Path) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(BufReader::new(file));
    let width = r.headers().map_err(|e| Error::csv(path, e))?.len();
    if width < 3 {
        return Err(Error::invalid(format!(
            "{}: expected experiment, inputs and y columns",
            path.display()
        )));
    }
    let l = width - 2;
    let mut rows: Vec<Vec<(Vec<f64>, f64)>> = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let parse = |s: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::invalid(format!("{}: cannot parse {s:?}", path.display())))
        };
        let j: usize = rec[0]
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("{}: bad experiment index {:?}", path.display(), &rec[0])))?;
        let x = (1..=l).map(|k| parse(&rec[k])).collect::<Result<Vec<_>>>()?;
        let y = parse(&rec[l + 1])?;
        if rows.len() <= j {
            rows.resize_with(j + 1, Vec::new);
        }
        rows[j].push((x, y));
    }
    let experiments = rows
        .into_iter()
        .map(|samples| ExperimentData {
            inputs: DMatrix::from_fn(samples.len(), l, |i, k| samples[i].0[k]),
            outputs: DVector::from_iterator(samples.len(), samples.iter().map(|s| s.1)),
        })
        .collect();
    Ok(Dataset { experiments })
}

/// Row-major matrix for JSON export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixDocument {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldDocument {
    pub l: usize,
    pub m: usize,
    pub w_star: Vec<f64>,
    pub projections: Vec<MatrixDocument>,
}

impl From<&SyntheticWorld> for WorldDocument {
    fn from(w: &SyntheticWorld) -> Self {
        WorldDocument {
            l: w.l(),
            m: w.m(),
            w_star: w.w_star.iter().copied().collect(),
            projections: w
                .projections
                .iter()
                .map(|a| MatrixDocument {
                    rows: a.nrows(),
                    cols: a.ncols(),
                    data: a
                        .row_iter()
                        .flat_map(|r| r.iter().copied().collect::<Vec<_>>())
                        .collect(),
                })
                .collect(),
        }
    }
}

impl TryFrom<WorldDocument> for SyntheticWorld {
    type Error = Error;

    fn try_from(doc: WorldDocument) -> Result<Self> {
        if doc.w_star.len() != doc.l || doc.projections.len() != doc.m {
            return Err(Error::invalid("world document sizes do not match l and m"));
        }
        let projections = doc
            .projections
            .into_iter()
            .map(|p| {
                if p.rows != doc.l || p.rows * p.cols != p.data.len() {
                    return Err(Error::invalid("projection matrix has inconsistent shape"));
                }
                Ok(DMatrix::from_row_slice(p.rows, p.cols, &p.data))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SyntheticWorld {
            projections,
            w_star: DVector::from_vec(doc.w_star),
        })
    }
}

pub fn write_world_json(world: &SyntheticWorld, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, &WorldDocument::from(world)).map_err(|e| Error::json(path, e))?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))
}

pub fn read_world_json(path: &Path) -> Result<SyntheticWorld> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let doc: WorldDocument = serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::json(path, e))?;
    doc.try_into()
}
