use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::SyntheticWorld;
use crate::error::{Error, Result};

/// Singular values at or below this fraction of the largest one count as zero.
pub const RANK_RTOL: f64 = 1e-9;

pub fn numerical_rank(a: &DMatrix<f64>, rtol: f64) -> usize {
    if a.is_empty() {
        return 0;
    }
    let sv = a.singular_values();
    let top = sv.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rtol * top).count()
}

/// Number of weight directions that no experiment can see:
/// `l - rank([A_1 ... A_m])`.
pub fn identifiability_dimension(world: &SyntheticWorld) -> usize {
    world.l() - numerical_rank(&world.stacked(), RANK_RTOL)
}

/// Minimizers of a finite hypothesis grid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridArgmins {
    /// Indices minimizing the average loss over experiments.
    pub combined: Vec<usize>,
    /// Indices that minimize every experiment's loss simultaneously.
    pub intersection: Vec<usize>,
}

impl GridArgmins {
    /// When a common minimizer exists the two sets coincide.
    pub fn consistent(&self) -> bool {
        self.intersection.is_empty() || self.combined == self.intersection
    }
}

fn argmin_set(values: impl Iterator<Item = f64> + Clone) -> Vec<usize> {
    let min = values.clone().fold(f64::INFINITY, f64::min);
    values.enumerate().filter(|(_, v)| *v == min).map(|(i, _)| i).collect()
}

/// `losses[j][h]` is the expected loss of grid hypothesis `h` in experiment `j`.
///
/// Minimizers are compared exactly: ties must be bit-identical.
pub fn grid_argmins(losses: &[Vec<f64>]) -> Result<GridArgmins> {
    let first = losses
        .first()
        .ok_or_else(|| Error::invalid("need at least one experiment"))?;
    let size = first.len();
    if size == 0 {
        return Err(Error::invalid("hypothesis grid is empty"));
    }
    if losses.iter().any(|l| l.len() != size) {
        return Err(Error::invalid("every experiment must score the same grid"));
    }
    if losses.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::invalid("losses must be finite"));
    }
    let m = losses.len() as f64;
    let combined = argmin_set((0..size).map(|h| losses.iter().map(|l| l[h]).sum::<f64>() / m));
    let mut intersection: Vec<usize> = (0..size).collect();
    for l in losses {
        let best = argmin_set(l.iter().copied());
        intersection.retain(|h| best.binary_search(h).is_ok());
    }
    Ok(GridArgmins { combined, intersection })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::{generate_world, SyntheticConfig, X2Schedule};

    #[test]
    fn hand_checkable_grid() {
        let r = grid_argmins(&[vec![0.0, 0.0, 1.0], vec![0.0, 1.0, 0.0]]).unwrap();
        assert_eq!(r.combined, vec![0]);
        assert_eq!(r.intersection, vec![0]);
    }

    #[test]
    fn identical_experiments() {
        let l = vec![0.3, 0.1, 0.7, 0.1];
        let r = grid_argmins(&[l.clone(), l.clone(), l]).unwrap();
        assert_eq!(r.combined, vec![1, 3]);
        assert_eq!(r.intersection, vec![1, 3]);
    }

    #[test]
    fn no_common_minimizer() {
        let r = grid_argmins(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!(r.intersection.is_empty());
        assert_eq!(r.combined, vec![0, 1]);
        assert!(r.consistent());
    }

    #[test]
    fn empty_grid_rejected() {
        assert!(grid_argmins(&[]).is_err());
        assert!(grid_argmins(&[vec![]]).is_err());
        assert!(grid_argmins(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn one_experiment_hides_half_the_space() {
        let c = SyntheticConfig {
            l: 10,
            m: 5,
            w2: 10.0,
            x2: X2Schedule::Decreasing.caps(10, 5),
            s: 1.0,
            eps_b: 0.1,
            seed: 3,
        };
        let w = generate_world(&c).unwrap();
        let dims: Vec<usize> = (1..=5).map(|m| identifiability_dimension(&w.prefix(m))).collect();
        assert_eq!(dims[0], 10 - numerical_rank(&w.projections[0], RANK_RTOL));
        assert!(dims.windows(2).all(|p| p[1] <= p[0]));
        assert_eq!(dims[4], 0);
    }

    #[test]
    fn rank_of_zero_and_duplicated_columns() {
        assert_eq!(numerical_rank(&DMatrix::zeros(3, 3), RANK_RTOL), 0);
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, -1.0, -1.0, 1.0, 1.0]);
        assert_eq!(numerical_rank(&a, RANK_RTOL), 1);
    }
}
