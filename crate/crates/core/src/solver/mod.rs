//! Zero finding on `R^d x R x SO(d)`.
//!
//! The residual systems are underdetermined: the level-set form has
//! `d + 1 + d(d-1)/2` unknowns for `2d` equations, so generic zero sets are
//! manifolds of dimension `(d-1)(d-2)/2`. All linear solves therefore go
//! through the SVD and return minimum-norm steps.

mod continuation;
mod multistart;
mod newton;
mod nullity;
mod sweep;
mod track;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bodies::ImplicitBody;
use crate::configuration::{CrossConfig, ResidualForm};
use crate::error::Error;

pub use continuation::{chart_distance, continue_homotopy, ContinuationSample, ContinuationTrace, StepStats, CONTINUITY_BOUND};
pub use multistart::{dedup_solutions, multistart_solve, multistart_solve_detailed, seed_config, MultistartOutcome, SeedOutcome, DEDUP_TOL};
pub use newton::{gauss_newton, gauss_newton_with_history};
pub use nullity::{expected_nullity, jacobian_spectrum, numerical_nullity, nullity_report, NullityReport, Spectrum};
pub use sweep::{sweep_family, SweepResult};
pub use track::{track_toward, TrackOutcome};

/// Solver knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveOptions {
    pub max_iters: usize,
    pub residual_tol: f64,
    pub step_tol: f64,
    /// Initial Levenberg parameter; halved-by-three on success, doubled on rejection.
    pub damping: f64,
    /// Singular values below `rank_threshold * sigma_max` count as null.
    pub rank_threshold: f64,
    /// Smallest admissible scale. `None` means `1e-4` times the body's
    /// circumradius estimate.
    pub lambda_min: Option<f64>,
    pub seed_count: usize,
    /// Base seed; start `k` of a multi-start run uses `seed + k`.
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            max_iters: 200,
            residual_tol: 1e-10,
            step_tol: 1e-14,
            damping: 1e-3,
            rank_threshold: 1e-6,
            lambda_min: None,
            seed_count: 32,
            seed: 0,
        }
    }
}

impl SolveOptions {
    pub fn lambda_min_for(&self, body: &ImplicitBody) -> f64 {
        self.lambda_min.unwrap_or(1e-4 * body.circumradius_estimate())
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        let positive = [self.residual_tol, self.step_tol, self.damping, self.rank_threshold];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Input("solver tolerances must be positive".into()).into());
        }
        if let Some(l) = self.lambda_min {
            if !(l > 0.0) {
                return Err(Error::Input("lambda_min must be positive".into()).into());
            }
        }
        Ok(())
    }
}

/// How a solution was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Direct,
    Continuation,
    Sweep,
    OracleRefined,
}

/// A converged inscribed configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub config: CrossConfig,
    pub form: ResidualForm,
    pub residual_norm: f64,
    pub nullity: usize,
    pub iterations: usize,
    pub provenance: Provenance,
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Geometry(#[from] Error),

    #[error("no convergence after {iterations} iterations (best residual {residual_norm:e})")]
    NonConvergence {
        best: Box<CrossConfig>,
        residual_norm: f64,
        iterations: usize,
    },

    #[error("crosspolytope degenerated: scale {scale:e} fell below {lambda_min:e}")]
    Degeneration {
        scale: f64,
        lambda_min: f64,
        trace: Option<Box<ContinuationTrace>>,
    },

    #[error("center left the body during iteration")]
    InteriorLost { last: Box<CrossConfig> },

    #[error("continuation stuck at t = {t} (step underflow)")]
    Stuck { t: f64, trace: Box<ContinuationTrace> },
}
