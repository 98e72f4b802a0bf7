use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{expected_nullity, gauss_newton, Provenance, Solution, SolveError, SolveOptions, Spectrum};
use crate::bodies::HomotopyFamily;
use crate::configuration::{CrossConfig, ResidualForm, ResidualMap};
use crate::error::check_dim;

/// Consecutive samples must be closer than this in chart distance.
pub const CONTINUITY_BOUND: f64 = 0.5;

const INITIAL_DT: f64 = 0.05;
const MIN_DT: f64 = 1e-6;
const GROWTH: f64 = 1.5;
const GROW_AFTER: usize = 3;
/// Parameter at which a branch is picked when the start is a bifurcation point.
const BRANCH_T: f64 = 1e-3;
/// Null-space displacement tried when the start is stationary for the
/// branch-picking corrector.
const BRANCH_KICK: f64 = 0.3;
const BRANCH_TRIES: usize = 6;
const BRANCH_STREAM: u64 = 0x6272_616e_6368;

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationSample {
    pub t: f64,
    pub solution: Solution,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub min_dt: f64,
    pub max_dt: f64,
    pub corrector_iterations: usize,
    /// Whether the start had excess nullity and was replaced by the member
    /// of its family that continues into `t > 0`.
    pub branch_selected: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ContinuationTrace {
    pub samples: Vec<ContinuationSample>,
    pub stats: StepStats,
}

impl ContinuationTrace {
    pub fn last(&self) -> Option<&ContinuationSample> {
        self.samples.last()
    }
}

/// `sqrt(|dx|^2 + dlambda^2 + |d rho|_F^2 / 2)`.
pub fn chart_distance(a: &CrossConfig, b: &CrossConfig) -> f64 {
    let dx = (&a.center - &b.center).norm_squared();
    let dl = (a.scale - b.scale).powi(2);
    let dr = (a.rotation.matrix() - b.rotation.matrix()).norm_squared();
    (dx + dl + 0.5 * dr).sqrt()
}

fn pseudo_solve(jac: &DMatrix<f64>, rhs: &DVector<f64>, rank_threshold: f64) -> DVector<f64> {
    let svd = jac.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let cutoff = rank_threshold * smax;
    let u = svd.u.expect("left vectors requested");
    let v_t = svd.v_t.expect("right vectors requested");
    let proj = u.transpose() * rhs;
    let coeff = DVector::from_fn(svd.singular_values.len(), |k, _| {
        let s = svd.singular_values[k];
        if s > cutoff && s > 0.0 {
            proj[k] / s
        } else {
            0.0
        }
    });
    v_t.transpose() * coeff
}

/// Solution of the body at `BRANCH_T` near `start`. A symmetric start can be
/// a stationary point of the least-squares cost there, and so can its
/// displacements along coordinate null directions. On failure the start is
/// displaced by `BRANCH_KICK` along `BRANCH_TRIES` fixed pseudo-random null
/// directions and the converged result closest to the start is kept.
fn pick_branch(family: &HomotopyFamily, start: &Solution, form: ResidualForm, opts: &SolveOptions) -> Result<Solution, SolveError> {
    let near = family.body_at(BRANCH_T)?;
    let first = match gauss_newton(&near, &start.config, form, opts) {
        Ok(s) => return Ok(s),
        Err(e @ SolveError::Degeneration { .. }) => return Err(e),
        Err(e) => e,
    };
    let body0 = family.body_at(0.0)?;
    let map = ResidualMap::new(&body0, form, &start.config.frame)?;
    let null = Spectrum::from_jacobian(&map.jacobian(&start.config)?).null_basis(opts.rank_threshold);
    if null.ncols() == 0 {
        return Err(first);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(BRANCH_STREAM);
    let mut best: Option<(f64, Solution)> = None;
    for _ in 0..BRANCH_TRIES {
        let z = DVector::from_fn(null.ncols(), |_, _| -> f64 { StandardNormal.sample(&mut rng) });
        let kicked = map.retract(&start.config, &(&null * z.normalize() * BRANCH_KICK));
        if let Ok(s) = gauss_newton(&near, &kicked, form, opts) {
            let d = chart_distance(&start.config, &s.config);
            if best.as_ref().map_or(true, |(b, _)| d < *b) {
                best = Some((d, s));
            }
        }
    }
    best.map(|(_, s)| s).ok_or(first)
}

fn tag(mut s: Solution) -> Solution {
    s.provenance = Provenance::Continuation;
    s
}

fn attach(err: SolveError, t: f64, trace: &ContinuationTrace) -> SolveError {
    match err {
        SolveError::Degeneration { scale, lambda_min, .. } => SolveError::Degeneration {
            scale,
            lambda_min,
            trace: Some(Box::new(trace.clone())),
        },
        _ => SolveError::Stuck {
            t,
            trace: Box::new(trace.clone()),
        },
    }
}

/// Predictor-corrector continuation from `t = 0` to `t = 1`.
pub fn continue_homotopy(
    family: &HomotopyFamily,
    start: &Solution,
    opts: &SolveOptions,
) -> Result<ContinuationTrace, SolveError> {
    opts.validate()?;
    check_dim(family.dim(), start.config.dim())?;
    let form = start.form;
    let mut trace = ContinuationTrace {
        stats: StepStats {
            min_dt: f64::INFINITY,
            ..StepStats::default()
        },
        ..ContinuationTrace::default()
    };

    let body0 = family.body_at(0.0)?;
    let mut current = gauss_newton(&body0, &start.config, form, opts)?;
    if current.nullity > expected_nullity(family.dim()) {
        let picked = pick_branch(family, &current, form, opts).map_err(|e| attach(e, 0.0, &trace))?;
        current = gauss_newton(&body0, &picked.config, form, opts).map_err(|e| attach(e, 0.0, &trace))?;
        trace.stats.branch_selected = true;
    }
    trace.samples.push(ContinuationSample {
        t: 0.0,
        solution: tag(current.clone()),
    });

    let dfdt = |x: &[f64]| family.parameter_derivative(x);
    let mut t = 0.0;
    let mut dt = INITIAL_DT;
    let mut streak = 0;
    while t < 1.0 {
        let mut t_next = (t + dt).min(1.0);
        if 1.0 - t_next < 1e-12 {
            t_next = 1.0;
        }
        let step = t_next - t;
        let body_t = family.body_at(t)?;
        let map = ResidualMap::new(&body_t, form, &current.config.frame)?;
        let predicted = map
            .jacobian(&current.config)
            .and_then(|j| Ok((j, map.parameter_derivative(&current.config, &dfdt)?)))
            .map(|(j, rt)| map.retract(&current.config, &pseudo_solve(&j, &(-rt * step), opts.rank_threshold)));

        let outcome = match predicted {
            Ok(p) if p.scale > 0.0 => {
                let body_next = family.body_at(t_next)?;
                match gauss_newton(&body_next, &p, form, opts) {
                    Ok(sol) if chart_distance(&current.config, &sol.config) < CONTINUITY_BOUND => Some(sol),
                    Ok(_) => None,
                    Err(e @ SolveError::Degeneration { .. }) => return Err(attach(e, t_next, &trace)),
                    Err(_) => None,
                }
            }
            _ => None,
        };

        match outcome {
            Some(sol) => {
                trace.stats.accepted += 1;
                trace.stats.corrector_iterations += sol.iterations;
                trace.stats.min_dt = trace.stats.min_dt.min(step);
                trace.stats.max_dt = trace.stats.max_dt.max(step);
                t = t_next;
                current = sol;
                trace.samples.push(ContinuationSample {
                    t,
                    solution: tag(current.clone()),
                });
                streak += 1;
                if streak >= GROW_AFTER {
                    dt *= GROWTH;
                    streak = 0;
                }
            }
            None => {
                trace.stats.rejected += 1;
                streak = 0;
                dt *= 0.5;
                if dt < MIN_DT {
                    return Err(SolveError::Stuck {
                        t,
                        trace: Box::new(trace),
                    });
                }
            }
        }
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bodies::ImplicitBody;
    use crate::configuration::{random_rotation, ResidualForm};

    fn ball_start(seed: u64) -> (ImplicitBody, Solution) {
        let ball = ImplicitBody::ball(3, 1.0).unwrap();
        let c = CrossConfig::standard(DVector::zeros(3), 1.0, random_rotation(seed, 3)).unwrap();
        let s = gauss_newton(&ball, &c, ResidualForm::Levelset, &SolveOptions::default()).unwrap();
        (ball, s)
    }

    #[test]
    fn identity_family_does_not_drift() {
        let (ball, s) = ball_start(2);
        let fam = HomotopyFamily::new(ball.clone(), ball).unwrap();
        let trace = continue_homotopy(&fam, &s, &SolveOptions::default()).unwrap();
        assert_eq!(trace.last().unwrap().t, 1.0);
        for smp in &trace.samples {
            assert!(smp.solution.config.center.norm() < 1e-10);
            assert!((smp.solution.config.scale - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn ball_to_ellipsoid_reaches_closed_form_scale() {
        let (ball, s) = ball_start(7);
        let fam = HomotopyFamily::new(ball, ImplicitBody::ellipsoid(vec![1.0, 1.0, 2.0]).unwrap()).unwrap();
        let trace = continue_homotopy(&fam, &s, &SolveOptions::default()).unwrap();
        assert!(trace.stats.branch_selected);
        let end = &trace.last().unwrap().solution;
        assert!((end.config.scale - 2.0 / 3f64.sqrt()).abs() < 1e-8, "{}", end.config.scale);
        for w in trace.samples.windows(2) {
            assert!(w[1].t > w[0].t);
            assert!(chart_distance(&w[0].solution.config, &w[1].solution.config) < CONTINUITY_BOUND);
        }
    }

    #[test]
    fn symmetric_start_still_finds_a_branch() {
        let ball = ImplicitBody::ball(3, 1.0).unwrap();
        let c = CrossConfig::standard(DVector::zeros(3), 1.0, crate::configuration::Rotation::identity(3)).unwrap();
        let s = gauss_newton(&ball, &c, ResidualForm::Levelset, &SolveOptions::default()).unwrap();
        let fam = HomotopyFamily::new(ball, ImplicitBody::ellipsoid(vec![1.0, 1.0, 2.0]).unwrap()).unwrap();
        let trace = continue_homotopy(&fam, &s, &SolveOptions::default()).unwrap();
        let end = &trace.last().unwrap().solution;
        assert_eq!(trace.last().unwrap().t, 1.0);
        assert!((end.config.scale - 2.0 / 3f64.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn chart_distance_of_rotation_only_change() {
        let a = CrossConfig::standard(DVector::zeros(2), 1.0, crate::configuration::Rotation::identity(2)).unwrap();
        let mut b = a.clone();
        b.rotation = a.rotation.retract(&DVector::from_element(1, 0.1));
        // |R(0.1) - I|_F^2 / 2 = 2 (1 - cos 0.1)
        let expected = (2.0 * (1.0 - 0.1f64.cos())).sqrt();
        assert!((chart_distance(&a, &b) - expected).abs() < 1e-14);
    }
}
