use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{Solution, SolveError, SolveOptions};
use crate::bodies::ImplicitBody;
use crate::configuration::{CrossConfig, ResidualMap};

/// Generic dimension of the solution family in `R^d`.
pub fn expected_nullity(d: usize) -> usize {
    (d - 1) * (d.saturating_sub(2)) / 2
}

/// Full right-singular structure of a chart Jacobian, sorted by decreasing
/// singular value. The Jacobian is padded with zero rows to a square matrix,
/// so every chart direction gets a singular value.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: Vec<f64>,
    /// Row `k` is the right singular vector for `values[k]`.
    pub right: DMatrix<f64>,
}

impl Spectrum {
    pub fn from_jacobian(jac: &DMatrix<f64>) -> Self {
        let n = jac.ncols();
        let mut padded = DMatrix::zeros(jac.nrows().max(n), n);
        padded.rows_mut(0, jac.nrows()).copy_from(jac);
        let svd = padded.svd(false, true);
        let v_t = svd.v_t.expect("right vectors requested");
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let values = order.iter().map(|&k| svd.singular_values[k]).collect();
        let right = DMatrix::from_fn(order.len(), n, |r, c| v_t[(order[r], c)]);
        Spectrum { values, right }
    }

    pub fn rank(&self, rank_threshold: f64) -> usize {
        let cutoff = rank_threshold * self.values.first().copied().unwrap_or(0.0);
        self.values.iter().filter(|&&s| s >= cutoff && s > 0.0).count()
    }

    pub fn nullity(&self, rank_threshold: f64) -> usize {
        self.values.len() - self.rank(rank_threshold)
    }

    /// Orthonormal basis of the numerical null space, one vector per column.
    pub fn null_basis(&self, rank_threshold: f64) -> DMatrix<f64> {
        let rank = self.rank(rank_threshold);
        self.right.rows(rank, self.values.len() - rank).transpose()
    }

    /// Right singular vector of the smallest singular value.
    pub fn smallest(&self) -> DVector<f64> {
        self.right.row(self.values.len() - 1).transpose()
    }
}

/// Spectrum of the solution's own residual form at its configuration.
pub fn jacobian_spectrum(body: &ImplicitBody, solution: &Solution) -> Result<Spectrum, SolveError> {
    let map = ResidualMap::new(body, solution.form, &solution.config.frame)?;
    Ok(Spectrum::from_jacobian(&map.jacobian(&solution.config)?))
}

pub(crate) fn numerical_nullity_at(
    map: &ResidualMap<'_>,
    config: &CrossConfig,
    rank_threshold: f64,
) -> Result<usize, SolveError> {
    Ok(Spectrum::from_jacobian(&map.jacobian(config)?).nullity(rank_threshold))
}

/// Number of chart directions along which the residual is numerically flat.
pub fn numerical_nullity(body: &ImplicitBody, solution: &Solution, opts: &SolveOptions) -> Result<usize, SolveError> {
    Ok(jacobian_spectrum(body, solution)?.nullity(opts.rank_threshold))
}

/// Nullity together with the spectrum it was read from.
#[derive(Debug, Clone, Serialize)]
pub struct NullityReport {
    pub nullity: usize,
    pub expected: usize,
    pub singular_values: Vec<f64>,
    /// Smallest retained over largest discarded singular value; infinite if
    /// the discarded ones are exactly zero or nothing is discarded.
    pub gap: f64,
}

pub fn nullity_report(body: &ImplicitBody, solution: &Solution, opts: &SolveOptions) -> Result<NullityReport, SolveError> {
    let spec = jacobian_spectrum(body, solution)?;
    let rank = spec.rank(opts.rank_threshold);
    let kept = spec.values.get(rank.wrapping_sub(1)).copied().unwrap_or(0.0);
    let dropped = spec.values.get(rank).copied().unwrap_or(0.0);
    Ok(NullityReport {
        nullity: spec.values.len() - rank,
        expected: expected_nullity(body.dim()),
        gap: if dropped > 0.0 { kept / dropped } else { f64::INFINITY },
        singular_values: spec.values,
    })
}
