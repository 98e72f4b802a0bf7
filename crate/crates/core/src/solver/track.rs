use nalgebra::{DMatrix, DVector};

use super::{gauss_newton, Solution, SolveError, SolveOptions, Spectrum};
use crate::bodies::ImplicitBody;
use crate::configuration::{vertex_hausdorff, CrossConfig, ResidualForm, ResidualMap};

/// Result of walking a solution family toward a target configuration.
#[derive(Debug, Clone)]
pub struct TrackOutcome {
    /// Last family member reached.
    pub solution: Solution,
    /// Vertex-set Hausdorff distance from `solution` to the target.
    pub distance: f64,
    pub steps: usize,
}

const MAX_STEP: f64 = 0.2;
const VERTEX_FD: f64 = 1e-7;

/// Stacked vertex coordinates after matching each vertex of `config` to its
/// nearest target vertex, as `(current - matched)`.
fn mismatch(config: &CrossConfig, target: &[DVector<f64>]) -> DVector<f64> {
    let verts = config.vertices();
    let d = config.dim();
    let mut out = DVector::zeros(verts.len() * d);
    for (k, v) in verts.iter().enumerate() {
        let w = target
            .iter()
            .min_by(|a, b| (v - *a).norm_squared().total_cmp(&(v - *b).norm_squared()))
            .expect("non-empty vertex set");
        out.rows_mut(k * d, d).copy_from(&(v - w));
    }
    out
}

fn vertex_jacobian(map: &ResidualMap<'_>, config: &CrossConfig) -> DMatrix<f64> {
    let n = map.chart_dim();
    let flat = |c: &CrossConfig| DVector::from_iterator(2 * c.dim() * c.dim(), c.vertices().iter().flat_map(|v| v.iter().copied().collect::<Vec<_>>()));
    let mut jac = DMatrix::zeros(2 * config.dim() * config.dim(), n);
    let mut delta = DVector::zeros(n);
    for k in 0..n {
        delta[k] = VERTEX_FD;
        let plus = flat(&map.retract(config, &delta));
        delta[k] = -VERTEX_FD;
        let minus = flat(&map.retract(config, &delta));
        delta[k] = 0.0;
        jac.set_column(k, &((plus - minus) / (2.0 * VERTEX_FD)));
    }
    jac
}

/// Moves along the solution family through `solution` toward `target`:
/// Gauss-Newton on the vertex mismatch restricted to the numerical null space
/// of the level-set Jacobian, followed by a corrector back onto the zero set.
/// The distance stops decreasing when the target is off the family.
pub fn track_toward(
    body: &ImplicitBody,
    solution: &Solution,
    target: &CrossConfig,
    max_steps: usize,
    opts: &SolveOptions,
) -> Result<TrackOutcome, SolveError> {
    let form = ResidualForm::Levelset;
    let map = ResidualMap::new(body, form, &solution.config.frame)?;
    let goal = target.vertices();
    let mut current = if solution.form == form {
        solution.clone()
    } else {
        gauss_newton(body, &solution.config, form, opts)?
    };
    let mut distance = vertex_hausdorff(&current.config, target);
    let mut radius = MAX_STEP;
    let mut steps = 0;
    while steps < max_steps && distance > 1e-13 && radius > 1e-12 {
        steps += 1;
        let spec = Spectrum::from_jacobian(&map.jacobian(&current.config)?);
        let null = spec.null_basis(opts.rank_threshold);
        if null.ncols() == 0 {
            break;
        }
        let jv = vertex_jacobian(&map, &current.config) * &null;
        let m = mismatch(&current.config, &goal);
        let z = jv.svd(true, true).solve(&(-m), 1e-12).map_err(|e| crate::error::Error::Input(e.into()))?;
        let mut delta = &null * z;
        if delta.norm() > radius {
            delta *= radius / delta.norm();
        }
        let trial = gauss_newton(body, &map.retract(&current.config, &delta), form, opts);
        match trial {
            Ok(next) => {
                let d = vertex_hausdorff(&next.config, target);
                if d < distance {
                    current = next;
                    distance = d;
                    radius = MAX_STEP;
                } else {
                    radius *= 0.25;
                }
            }
            Err(_) => radius *= 0.25,
        }
    }
    Ok(TrackOutcome {
        solution: current,
        distance,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::configuration::{random_rotation, Rotation};

    #[test]
    fn ball_members_are_connected() {
        let ball = ImplicitBody::ball(3, 1.0).unwrap();
        let opts = SolveOptions::default();
        let a = CrossConfig::standard(DVector::zeros(3), 1.0, Rotation::identity(3)).unwrap();
        let s = gauss_newton(&ball, &a, ResidualForm::Levelset, &opts).unwrap();
        let target = CrossConfig::standard(DVector::zeros(3), 1.0, random_rotation(11, 3)).unwrap();
        let out = track_toward(&ball, &s, &target, 100, &opts).unwrap();
        assert!(out.distance < 1e-9, "{}", out.distance);
    }

    #[test]
    fn off_family_target_is_not_reached() {
        let ball = ImplicitBody::ball(3, 1.0).unwrap();
        let opts = SolveOptions::default();
        let a = CrossConfig::standard(DVector::zeros(3), 1.0, Rotation::identity(3)).unwrap();
        let s = gauss_newton(&ball, &a, ResidualForm::Levelset, &opts).unwrap();
        let target = CrossConfig::standard(DVector::zeros(3), 0.9, Rotation::identity(3)).unwrap();
        let out = track_toward(&ball, &s, &target, 50, &opts).unwrap();
        assert!(out.distance > 0.09);
    }
}
