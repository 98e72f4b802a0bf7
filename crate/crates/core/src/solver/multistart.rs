use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::{gauss_newton, Solution, SolveError, SolveOptions};
use crate::bodies::ImplicitBody;
use crate::configuration::{random_rotation, vertex_hausdorff, BaseFrame, CrossConfig, ResidualForm};
use crate::error::{check_dim, Error};
use crate::verify::{classify_guarantee, Guarantee};

/// Vertex-set Hausdorff distance below which two solutions are the same.
pub const DEDUP_TOL: f64 = 1e-6;

/// Stream offset separating the jitter generator from the rotation generator.
const JITTER_STREAM: u64 = 0x6a09_e667_f3bc_c908;

/// Outcome of one start.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedOutcome {
    pub seed: u64,
    pub converged: bool,
    pub iterations: Option<usize>,
    pub residual_norm: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct MultistartOutcome {
    /// Deduplicated solutions in seed order.
    pub solutions: Vec<Solution>,
    pub seeds: Vec<SeedOutcome>,
    pub guarantee: Guarantee,
}

impl MultistartOutcome {
    pub fn converged_count(&self) -> usize {
        self.seeds.iter().filter(|s| s.converged).count()
    }
}

/// Starting configuration for `seed`.
pub fn seed_config(body: &ImplicitBody, frame: &BaseFrame, seed: u64) -> Result<CrossConfig, Error> {
    let d = body.dim();
    check_dim(d, frame.dim())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ JITTER_STREAM);
    let jitter = 0.1 * body.inradius_estimate();
    let center = body.interior_point()
        + DVector::from_fn(d, |_, _| {
            let z: f64 = StandardNormal.sample(&mut rng);
            jitter * z
        });
    let center = if body.value_at(center.as_slice()) < 0.0 {
        center
    } else {
        body.interior_point().clone()
    };
    let rotation = random_rotation(seed, d);
    let axes = rotation.matrix() * frame.vectors();
    let mut total = 0.0;
    for i in 0..d {
        let len = axes.column(i).norm();
        let u: Vec<f64> = axes.column(i).iter().map(|x| x / len).collect();
        let neg: Vec<f64> = u.iter().map(|x| -x).collect();
        let chord = body.ray_root(center.as_slice(), &u)? + body.ray_root(center.as_slice(), &neg)?;
        total += chord / len;
    }
    CrossConfig::new(center, 0.5 * total / d as f64, rotation, frame.clone())
}

/// Keeps the first of every group of solutions whose vertex sets agree.
pub fn dedup_solutions(solutions: Vec<Solution>, tol: f64) -> Vec<Solution> {
    let mut kept: Vec<Solution> = Vec::new();
    for s in solutions {
        if kept.iter().all(|k| vertex_hausdorff(&k.config, &s.config) >= tol) {
            kept.push(s);
        }
    }
    kept
}

/// Gauss-Newton from `opts.seed_count` seeded starts, deduplicated.
pub fn multistart_solve(
    body: &ImplicitBody,
    frame: &BaseFrame,
    form: ResidualForm,
    opts: &SolveOptions,
) -> Result<Vec<Solution>, SolveError> {
    Ok(multistart_solve_detailed(body, frame, form, opts)?.solutions)
}

pub fn multistart_solve_detailed(
    body: &ImplicitBody,
    frame: &BaseFrame,
    form: ResidualForm,
    opts: &SolveOptions,
) -> Result<MultistartOutcome, SolveError> {
    opts.validate()?;
    check_dim(body.dim(), frame.dim())?;
    if form == ResidualForm::Chord {
        // surface precondition errors once rather than per seed
        crate::configuration::ResidualMap::new(body, form, frame)?;
    }
    let runs: Vec<(u64, Result<Solution, SolveError>)> = (0..opts.seed_count as u64)
        .into_par_iter()
        .map(|k| {
            let seed = opts.seed.wrapping_add(k);
            let result = seed_config(body, frame, seed)
                .map_err(SolveError::from)
                .and_then(|start| gauss_newton(body, &start, form, opts));
            (seed, result)
        })
        .collect();

    let mut seeds = Vec::with_capacity(runs.len());
    let mut converged = Vec::new();
    for (seed, result) in runs {
        match result {
            Ok(sol) => {
                seeds.push(SeedOutcome {
                    seed,
                    converged: true,
                    iterations: Some(sol.iterations),
                    residual_norm: Some(sol.residual_norm),
                    error: None,
                });
                converged.push(sol);
            }
            Err(e) => {
                let (iterations, residual_norm) = match &e {
                    SolveError::NonConvergence { iterations, residual_norm, .. } => {
                        (Some(*iterations), Some(*residual_norm))
                    }
                    _ => (None, None),
                };
                seeds.push(SeedOutcome {
                    seed,
                    converged: false,
                    iterations,
                    residual_norm,
                    error: Some(e.to_string()),
                });
            }
        }
    }
    Ok(MultistartOutcome {
        solutions: dedup_solutions(converged, DEDUP_TOL),
        seeds,
        guarantee: classify_guarantee(body.dim(), body),
    })
}
