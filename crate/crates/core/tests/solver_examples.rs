use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crossfit::bodies::{Halfspace, HomotopyFamily, ImplicitBody};
use crossfit::configuration::{random_rotation, vertex_hausdorff, BaseFrame, CrossConfig, ResidualForm, Rotation};
use crossfit::solver::{
    continue_homotopy, gauss_newton, multistart_solve, numerical_nullity, sweep_family, track_toward, Solution,
    SolveError, SolveOptions,
};

fn rho_m() -> Rotation {
    let c = (2.0f64 / 3.0).sqrt();
    let z = 1.0 / 3f64.sqrt();
    let cols: Vec<f64> = (0..3)
        .flat_map(|k| {
            let a = 2.0 * std::f64::consts::PI * k as f64 / 3.0;
            [c * a.cos(), c * a.sin(), z]
        })
        .collect();
    Rotation::from_matrix(DMatrix::from_column_slice(3, 3, &cols)).unwrap()
}

fn ellipsoid_112() -> ImplicitBody {
    ImplicitBody::ellipsoid(vec![1.0, 1.0, 2.0]).unwrap()
}

fn cube() -> ImplicitBody {
    let hs = (0..3)
        .flat_map(|i| {
            [1.0, -1.0].map(|s| {
                let mut n = vec![0.0; 3];
                n[i] = s;
                Halfspace::new(n, 1.0)
            })
        })
        .collect();
    ImplicitBody::smoothed_polytope(hs, 20.0).unwrap()
}

fn in_closed_form_family(s: &Solution, tol: f64) -> bool {
    let axes = s.config.axes();
    (s.config.scale - 2.0 / 3f64.sqrt()).abs() < tol && (0..3).all(|i| (axes[(2, i)].powi(2) - 1.0 / 3.0).abs() < tol)
}

#[test]
fn perturbed_rho_m_start_returns_to_family() {
    let e = ellipsoid_112();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..5 {
        let omega = DVector::from_fn(3, |_, _| 0.1 * rng.random_range(-1.0..1.0));
        let center = DVector::from_fn(3, |_, _| 0.05 * rng.random_range(-1.0..1.0));
        let start = CrossConfig::standard(center, 1.2, rho_m().retract(&omega)).unwrap();
        let s = gauss_newton(&e, &start, ResidualForm::Levelset, &SolveOptions::default()).unwrap();
        assert!(s.residual_norm < 1e-10);
        assert!(in_closed_form_family(&s, 1e-8));
    }
}

#[test]
fn superellipsoid_multistart_is_nonempty() {
    let body = ImplicitBody::superellipsoid(vec![1.0, 1.0, 1.0], 4).unwrap();
    let sols = multistart_solve(&body, &BaseFrame::standard(3), ResidualForm::Levelset, &SolveOptions::default()).unwrap();
    assert!(!sols.is_empty());
    assert!(sols.iter().all(|s| s.residual_norm < 1e-10));
}

#[test]
fn multistart_is_deterministic() {
    let body = ImplicitBody::superellipsoid(vec![1.0, 1.2, 0.9], 4).unwrap();
    let opts = SolveOptions { seed_count: 12, seed: 77, ..SolveOptions::default() };
    let a = multistart_solve(&body, &BaseFrame::standard(3), ResidualForm::Levelset, &opts).unwrap();
    let b = multistart_solve(&body, &BaseFrame::standard(3), ResidualForm::Levelset, &opts).unwrap();
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.config, y.config);
    }
}

#[test]
fn chord_form_multistart_matches_levelset_scale() {
    let e = ellipsoid_112();
    let opts = SolveOptions { seed_count: 8, ..SolveOptions::default() };
    let sols = multistart_solve(&e, &BaseFrame::standard(3), ResidualForm::Chord, &opts).unwrap();
    assert!(!sols.is_empty());
    assert!(sols.iter().all(|s| in_closed_form_family(s, 1e-8)));
}

#[test]
fn chord_form_refuses_non_convex_bodies() {
    let ps = ImplicitBody::perturbed_sphere(3, vec![crossfit::bodies::MonomialTerm::new(vec![0, 0, 3], 0.2)]).unwrap();
    let start = CrossConfig::standard(DVector::zeros(3), 1.0, Rotation::identity(3)).unwrap();
    assert!(matches!(
        gauss_newton(&ps, &start, ResidualForm::Chord, &SolveOptions::default()),
        Err(SolveError::Geometry(_))
    ));
}

#[test]
fn scale_floor_reports_degeneration() {
    let e = ellipsoid_112();
    let start = CrossConfig::standard(DVector::zeros(3), 0.9, random_rotation(2, 3)).unwrap();
    let opts = SolveOptions { lambda_min: Some(5.0), ..SolveOptions::default() };
    assert!(matches!(
        gauss_newton(&e, &start, ResidualForm::Levelset, &opts),
        Err(SolveError::Degeneration { trace: None, .. })
    ));
}

#[test]
fn nullity_examples() {
    let opts = SolveOptions::default();
    let e = ellipsoid_112();
    let start = CrossConfig::standard(DVector::zeros(3), 1.2, rho_m()).unwrap();
    let s = gauss_newton(&e, &start, ResidualForm::Levelset, &opts).unwrap();
    assert_eq!(numerical_nullity(&e, &s, &opts).unwrap(), 1);

    let ball = ImplicitBody::ball(3, 1.0).unwrap();
    let s = gauss_newton(&ball, &CrossConfig::standard(DVector::zeros(3), 1.0, random_rotation(4, 3)).unwrap(), ResidualForm::Levelset, &opts).unwrap();
    assert_eq!(numerical_nullity(&ball, &s, &opts).unwrap(), 3);

    let e5 = ImplicitBody::ellipsoid(vec![1.0, 1.1, 1.2, 1.3, 1.4]).unwrap();
    let sols = multistart_solve(&e5, &BaseFrame::standard(5), ResidualForm::Levelset, &SolveOptions { seed_count: 4, ..opts.clone() }).unwrap();
    assert!(!sols.is_empty());
    for s in &sols {
        assert_eq!(numerical_nullity(&e5, s, &opts).unwrap(), 6);
    }
}

fn ball_solution(seed: u64) -> (ImplicitBody, Solution) {
    let ball = ImplicitBody::ball(3, 1.0).unwrap();
    let c = CrossConfig::standard(DVector::zeros(3), 1.0, random_rotation(seed, 3)).unwrap();
    let s = gauss_newton(&ball, &c, ResidualForm::Levelset, &SolveOptions::default()).unwrap();
    (ball, s)
}

#[test]
fn continuation_to_cube_is_confirmed_by_multistart() {
    let opts = SolveOptions::default();
    let (ball, s0) = ball_solution(5);
    let target = cube();
    let trace = continue_homotopy(&HomotopyFamily::new(ball, target.clone()).unwrap(), &s0, &opts).unwrap();
    let end = &trace.last().unwrap().solution;
    assert_eq!(trace.last().unwrap().t, 1.0);
    assert!(end.residual_norm < 1e-10);
    let ms = multistart_solve(&target, &BaseFrame::standard(3), ResidualForm::Levelset, &opts).unwrap();
    // the end point lies on the family of some multistart solution
    let best = ms
        .iter()
        .filter_map(|s| track_toward(&target, s, &end.config, 200, &opts).ok())
        .map(|t| t.distance)
        .fold(f64::INFINITY, f64::min);
    assert!(best < 1e-6, "{best:e}");
}

#[test]
fn continuation_endpoint_agrees_with_multistart_on_ellipsoid() {
    let opts = SolveOptions::default();
    let (ball, s0) = ball_solution(6);
    let e = ellipsoid_112();
    let trace = continue_homotopy(&HomotopyFamily::new(ball, e.clone()).unwrap(), &s0, &opts).unwrap();
    let end = &trace.last().unwrap().solution;
    assert!(in_closed_form_family(end, 1e-8));
    let ms = multistart_solve(&e, &BaseFrame::standard(3), ResidualForm::Levelset, &opts).unwrap();
    let best = ms
        .iter()
        .take(4)
        .filter_map(|s| track_toward(&e, s, &end.config, 200, &opts).ok())
        .map(|t| t.distance)
        .fold(f64::INFINITY, f64::min);
    assert!(best < 1e-6, "{best:e}");
}

#[test]
fn continuation_samples_increase_and_stay_close() {
    let (ball, s0) = ball_solution(8);
    let trace = continue_homotopy(&HomotopyFamily::new(ball, cube()).unwrap(), &s0, &SolveOptions::default()).unwrap();
    assert_eq!(trace.samples[0].t, 0.0);
    for w in trace.samples.windows(2) {
        assert!(w[1].t > w[0].t);
        assert!(crossfit::solver::chart_distance(&w[0].solution.config, &w[1].solution.config) < 0.5);
    }
}

#[test]
fn sweep_on_smoothed_cube() {
    let opts = SolveOptions::default();
    let body = cube();
    let sols = multistart_solve(&body, &BaseFrame::standard(3), ResidualForm::Levelset, &SolveOptions { seed_count: 4, ..opts.clone() }).unwrap();
    let out = sweep_family(&body, &sols[0], 30, 0.05, &opts).unwrap();
    assert!(out.solutions.len() >= 10, "{}", out.solutions.len());
    assert!(out.solutions.iter().all(|s| s.residual_norm < 1e-10));
    for (i, a) in out.solutions.iter().enumerate() {
        for b in &out.solutions[i + 1..] {
            assert!(vertex_hausdorff(&a.config, &b.config) > 0.005);
        }
    }
}
