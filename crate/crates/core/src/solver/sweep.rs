use nalgebra::DVector;

use super::{gauss_newton, jacobian_spectrum, Provenance, Solution, SolveError, SolveOptions};
use crate::bodies::ImplicitBody;
use crate::configuration::{vertex_hausdorff, ResidualMap};
use crate::error::Error;

#[derive(Debug, Clone)]
pub struct SweepResult {
    /// The starting solution followed by every distinct corrected step.
    pub solutions: Vec<Solution>,
    pub truncated: bool,
    pub warning: Option<String>,
}

/// Walks the local solution family along its numerical null space.
pub fn sweep_family(
    body: &ImplicitBody,
    solution: &Solution,
    steps: usize,
    step_size: f64,
    opts: &SolveOptions,
) -> Result<SweepResult, SolveError> {
    if !(step_size > 0.0 && step_size.is_finite()) {
        return Err(Error::Input(format!("step size must be positive, got {step_size}")).into());
    }
    let spec = jacobian_spectrum(body, solution)?;
    if spec.nullity(opts.rank_threshold) == 0 {
        return Err(Error::Input("solution is isolated (numerical nullity 0)".into()).into());
    }
    let map = ResidualMap::new(body, solution.form, &solution.config.frame)?;
    let min_sep = step_size / 10.0;

    let mut kept = vec![solution.clone()];
    let mut current = solution.clone();
    let mut heading: Option<DVector<f64>> = None;
    let mut truncated = false;
    let mut warning = None;

    for k in 0..steps {
        let spec = jacobian_spectrum(body, &current)?;
        let basis = spec.null_basis(opts.rank_threshold);
        let mut dir = match &heading {
            // keep the previous direction as far as the null space allows
            Some(h) if basis.ncols() > 0 => {
                let p = &basis * (basis.transpose() * h);
                if p.norm() > 1e-8 {
                    p.normalize()
                } else {
                    spec.smallest()
                }
            }
            _ => spec.smallest(),
        };
        match &heading {
            Some(h) if dir.dot(h) < 0.0 => dir = -dir,
            None => {
                let lead = dir.iamax();
                if dir[lead] < 0.0 {
                    dir = -dir;
                }
            }
            _ => {}
        }
        let predicted = map.retract(&current.config, &(&dir * step_size));
        match gauss_newton(body, &predicted, solution.form, opts) {
            Ok(mut next) => {
                next.provenance = Provenance::Sweep;
                if kept.iter().all(|s| vertex_hausdorff(&s.config, &next.config) > min_sep) {
                    kept.push(next.clone());
                }
                current = next;
                heading = Some(dir);
            }
            Err(e) => {
                truncated = true;
                warning = Some(format!("corrector failed at step {}: {e}", k + 1));
                break;
            }
        }
    }
    Ok(SweepResult {
        solutions: kept,
        truncated,
        warning,
    })
}
