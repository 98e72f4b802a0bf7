use nalgebra::{DMatrix, DVector};

use super::{nullity::numerical_nullity_at, Provenance, Solution, SolveError, SolveOptions};
use crate::bodies::ImplicitBody;
use crate::configuration::{CrossConfig, ResidualForm, ResidualMap};
use crate::error::Error;

/// Accepted steps between QR clean-ups of the rotation.
const REORTHO_EVERY: usize = 10;
/// Extra iterations allowed after the tolerance is first met.
const POLISH_ITERS: usize = 3;

/// Levenberg-Marquardt on `0.5 |r|^2` over the chart.
pub fn gauss_newton(
    body: &ImplicitBody,
    start: &CrossConfig,
    form: ResidualForm,
    opts: &SolveOptions,
) -> Result<Solution, SolveError> {
    run(body, start, form, opts, None)
}

/// As [`gauss_newton`], also returning `0.5 |r|^2` after every accepted step
/// (the first entry is the starting cost).
pub fn gauss_newton_with_history(
    body: &ImplicitBody,
    start: &CrossConfig,
    form: ResidualForm,
    opts: &SolveOptions,
) -> (Result<Solution, SolveError>, Vec<f64>) {
    let mut history = Vec::new();
    let result = run(body, start, form, opts, Some(&mut history));
    (result, history)
}

/// Minimum-norm damped step `-V diag(s / (s^2 + mu)) U^T r`.
struct StepSolver {
    u: DMatrix<f64>,
    s: DVector<f64>,
    v_t: DMatrix<f64>,
}

impl StepSolver {
    fn new(jac: DMatrix<f64>) -> Self {
        let svd = jac.svd(true, true);
        StepSolver {
            u: svd.u.expect("left vectors requested"),
            s: svd.singular_values,
            v_t: svd.v_t.expect("right vectors requested"),
        }
    }

    fn step(&self, r: &DVector<f64>, mu: f64) -> DVector<f64> {
        let proj = self.u.transpose() * r;
        let mut coeff = DVector::zeros(self.s.len());
        for k in 0..self.s.len() {
            let s = self.s[k];
            coeff[k] = -s * proj[k] / (s * s + mu);
        }
        self.v_t.transpose() * coeff
    }
}

fn check_start(body: &ImplicitBody, start: &CrossConfig) -> Result<(), SolveError> {
    if start.dim() != body.dim() {
        return Err(Error::DimensionMismatch {
            expected: body.dim(),
            got: start.dim(),
        }
        .into());
    }
    let reach = (&start.center - body.interior_point()).norm();
    if !(reach <= 2.0 * body.circumradius_estimate()) {
        return Err(Error::Input(format!(
            "start center is {reach:.3e} from the body, outside its bounding ball"
        ))
        .into());
    }
    if start.center.iter().any(|v| !v.is_finite()) || !start.scale.is_finite() {
        return Err(Error::Input("start configuration is not finite".into()).into());
    }
    Ok(())
}

fn current_scale(map: &ResidualMap<'_>, config: &CrossConfig) -> f64 {
    match map.form() {
        ResidualForm::Levelset => config.scale,
        ResidualForm::Chord => map.chord_scale(config).unwrap_or(config.scale),
    }
}

fn run(
    body: &ImplicitBody,
    start: &CrossConfig,
    form: ResidualForm,
    opts: &SolveOptions,
    mut history: Option<&mut Vec<f64>>,
) -> Result<Solution, SolveError> {
    opts.validate()?;
    check_start(body, start)?;
    let map = ResidualMap::new(body, form, &start.frame)?;
    let lambda_min = opts.lambda_min_for(body);

    let mut config = start.clone();
    let mut r = map.residual(&config)?;
    let mut cost = 0.5 * r.norm_squared();
    if let Some(h) = history.as_deref_mut() {
        h.push(cost);
    }
    let mut mu = opts.damping;
    let mut iterations = 0;
    let mut accepted = 0;
    let mut polish_left = POLISH_ITERS;
    let mut lost_interior = false;
    let mut solver: Option<StepSolver> = None;

    loop {
        if r.norm() < opts.residual_tol {
            if polish_left == 0 || iterations >= opts.max_iters {
                break;
            }
            polish_left -= 1;
        }
        if iterations >= opts.max_iters {
            return Err(if lost_interior {
                SolveError::InteriorLost { last: Box::new(config) }
            } else {
                SolveError::NonConvergence {
                    best: Box::new(config),
                    residual_norm: r.norm(),
                    iterations,
                }
            });
        }
        iterations += 1;
        if solver.is_none() {
            solver = Some(StepSolver::new(map.jacobian(&config)?));
        }
        let delta = solver.as_ref().expect("built above").step(&r, mu);
        if delta.norm() < opts.step_tol {
            if r.norm() < opts.residual_tol {
                break;
            }
            return Err(SolveError::NonConvergence {
                best: Box::new(config),
                residual_norm: r.norm(),
                iterations,
            });
        }
        let trial = map.retract(&config, &delta);
        if form == ResidualForm::Levelset && !(trial.scale > 0.0) {
            mu *= 2.0;
            continue;
        }
        let trial_r = match map.residual(&trial) {
            Ok(v) => v,
            Err(Error::NotInterior { .. }) | Err(Error::NoIntersection) => {
                lost_interior = true;
                mu *= 2.0;
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let trial_cost = 0.5 * trial_r.norm_squared();
        if trial_cost < cost {
            lost_interior = false;
            config = trial;
            r = trial_r;
            cost = trial_cost;
            mu = (mu / 3.0).max(1e-20);
            accepted += 1;
            solver = None;
            if accepted % REORTHO_EVERY == 0 {
                config.rotation = config.rotation.reorthonormalized();
                r = map.residual(&config)?;
                cost = 0.5 * r.norm_squared();
            }
            if let Some(h) = history.as_deref_mut() {
                h.push(cost);
            }
            let scale = current_scale(&map, &config);
            if scale < lambda_min {
                return Err(SolveError::Degeneration {
                    scale,
                    lambda_min,
                    trace: None,
                });
            }
        } else {
            if r.norm() < opts.residual_tol {
                // no further decrease available at machine precision
                break;
            }
            mu *= 2.0;
        }
    }

    if form == ResidualForm::Chord {
        config.scale = map.chord_scale(&config)?;
    }
    let nullity = numerical_nullity_at(&map, &config, opts.rank_threshold)?;
    Ok(Solution {
        config,
        form,
        residual_norm: r.norm(),
        nullity,
        iterations,
        provenance: Provenance::Direct,
    })
}
