use nalgebra::DVector;

use crossfit::bodies::ImplicitBody;
use crossfit::configuration::{BaseFrame, CrossConfig, ResidualForm, Rotation};
use crossfit::oracle::{brute_force_search, refine_candidates, zyz_matrix, GridSpec};
use crossfit::solver::{gauss_newton, Provenance, SolveOptions};
use crossfit::verify::{check_equivariance, check_solution, classify_guarantee, Guarantee};

fn coarse(euler: usize) -> GridSpec {
    GridSpec {
        euler_resolution: euler,
        center_resolution: 3,
        scale_resolution: 17,
        coarse_tol: 0.3,
        max_candidates: usize::MAX,
    }
}

#[test]
fn ellipsoid_candidates_refine_into_family() {
    let e = ImplicitBody::ellipsoid(vec![1.0, 1.0, 2.0]).unwrap();
    let cands = brute_force_search(&e, &BaseFrame::standard(3), &GridSpec::default()).unwrap();
    assert!(!cands.is_empty());
    let out = refine_candidates(&e, &cands, &SolveOptions::default());
    assert!(!out.solutions.is_empty());
    for s in &out.solutions {
        assert_eq!(s.provenance, Provenance::OracleRefined);
        assert!((s.config.scale - 2.0 / 3f64.sqrt()).abs() < 1e-8);
        let axes = s.config.axes();
        assert!((0..3).all(|i| (axes[(2, i)].powi(2) - 1.0 / 3.0).abs() < 1e-8));
    }
}

#[test]
fn search_is_deterministic() {
    let body = ImplicitBody::superellipsoid(vec![1.0, 1.1, 0.9], 4).unwrap();
    let a = brute_force_search(&body, &BaseFrame::standard(3), &coarse(8)).unwrap();
    let b = brute_force_search(&body, &BaseFrame::standard(3), &coarse(8)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn doubling_euler_resolution_keeps_clusters() {
    let body = ImplicitBody::superellipsoid(vec![1.0, 1.0, 1.0], 4).unwrap();
    let frame = BaseFrame::standard(3);
    let low = brute_force_search(&body, &frame, &coarse(8)).unwrap();
    let high = brute_force_search(&body, &frame, &coarse(16)).unwrap();
    assert!(!low.is_empty());
    // cluster radius: two grid spacings of the coarse angle grid, measured
    // as rotation distance, plus two scale spacings
    let spacing = 2.0 * std::f64::consts::PI / 8.0;
    let rot_radius = 2.0 * spacing * 2f64.sqrt();
    let scale_spacing = 1.8 * body.inradius_estimate() / 16.0;
    for c in &low {
        let kept = high.iter().any(|h| {
            let dr = (c.config.rotation.matrix() - h.config.rotation.matrix()).norm();
            dr <= rot_radius
                && (c.config.scale - h.config.scale).abs() <= 2.0 * scale_spacing + 1e-12
                && (&c.config.center - &h.config.center).norm() <= 1e-12
        });
        assert!(kept, "lost cluster at {:?}", c.euler);
    }
}

#[test]
fn zyz_grid_matrices_are_rotations() {
    for k in 0..10 {
        let m = zyz_matrix(0.7 * k as f64, 0.3 * k as f64, -0.2 * k as f64);
        assert!(Rotation::from_matrix(m).is_ok());
    }
}

#[test]
fn verify_examples() {
    let ball = ImplicitBody::ball(3, 1.0).unwrap();
    let c = CrossConfig::standard(DVector::zeros(3), 1.0, Rotation::identity(3)).unwrap();
    let s = gauss_newton(&ball, &c, ResidualForm::Levelset, &SolveOptions::default()).unwrap();
    let r = check_solution(&ball, &s, 1e-9);
    assert!(r.passed);
    assert_eq!(r.guarantee, Guarantee::OddPrimePower);
    assert!(r.frame_orthonormality_defect.unwrap() < 1e-15);
    assert!(check_equivariance(&ball, &c, 50));

    let mut bad = s.clone();
    bad.config.scale += 0.01;
    let r = check_solution(&ball, &bad, 1e-9);
    assert!(!r.passed && r.max_surface_defect > 1e-3);

    assert_eq!(classify_guarantee(2, &ImplicitBody::ball(2, 1.0).unwrap()), Guarantee::CentrallySymmetricAnyD);
    assert_eq!(classify_guarantee(4, &ImplicitBody::ellipsoid(vec![1.0, 2.0, 1.0, 1.0]).unwrap()), Guarantee::CentrallySymmetricAnyD);
    assert_eq!(classify_guarantee(9, &ImplicitBody::ball(9, 1.0).unwrap()), Guarantee::OddPrimePower);
}

#[test]
fn non_orthonormal_frame_is_inscribed_but_not_regular() {
    let frame = BaseFrame::from_matrix(nalgebra::DMatrix::from_row_slice(
        3,
        3,
        &[1.0, 0.3, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
    ))
    .unwrap();
    assert!(!frame.is_regular());
    let e = ImplicitBody::ellipsoid(vec![1.0, 1.2, 1.5]).unwrap();
    let start = CrossConfig::new(DVector::zeros(3), 1.0, crossfit::configuration::random_rotation(3, 3), frame).unwrap();
    let s = gauss_newton(&e, &start, ResidualForm::Levelset, &SolveOptions::default()).unwrap();
    let r = check_solution(&e, &s, 1e-9);
    assert!(r.inscribed);
    assert!(r.frame_orthonormality_defect.is_none());
    assert!(!check_equivariance(&e, &s.config, 5));
}
