//! Audits of configurations and solutions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bodies::ImplicitBody;
use crate::configuration::{
    residual_levelset, CrossConfig, ResidualForm, ResidualMap, Rotation, SignedPermutation, FD_STEP,
};
use crate::solver::{expected_nullity, Solution, Spectrum};

/// Which existence statement covers a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Guarantee {
    /// `d = p^k` for an odd prime `p`.
    OddPrimePower,
    /// Convex and centrally symmetric body, any `d`.
    CentrallySymmetricAnyD,
    None,
}

impl Guarantee {
    pub fn as_str(self) -> &'static str {
        match self {
            Guarantee::OddPrimePower => "odd_prime_power",
            Guarantee::CentrallySymmetricAnyD => "centrally_symmetric_any_d",
            Guarantee::None => "none",
        }
    }
}

/// True iff `d = p^k` with `p` an odd prime and `k >= 1`.
pub fn is_odd_prime_power(d: u64) -> bool {
    if d < 3 || d % 2 == 0 {
        return false;
    }
    let mut p = 3;
    while p * p <= d && d % p != 0 {
        p += 2;
    }
    if d % p != 0 {
        // no factor up to sqrt(d): d is prime
        return true;
    }
    let mut m = d;
    while m % p == 0 {
        m /= p;
    }
    m == 1
}

/// Symmetry is read from construction metadata, not detected numerically.
pub fn classify_guarantee(d: usize, body: &ImplicitBody) -> Guarantee {
    if is_odd_prime_power(d as u64) {
        Guarantee::OddPrimePower
    } else if body.is_convex() && body.is_centrally_symmetric() {
        Guarantee::CentrallySymmetricAnyD
    } else {
        Guarantee::None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub max_surface_defect: f64,
    /// `|E^T E - I|_max`; absent for frames that are not orthonormal.
    pub frame_orthonormality_defect: Option<f64>,
    pub rotation_defect: f64,
    pub nullity: usize,
    pub expected_nullity: usize,
    pub guarantee: Guarantee,
    pub inscribed: bool,
    pub passed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub require_nullity: bool,
    pub rank_threshold: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            require_nullity: true,
            rank_threshold: 1e-6,
        }
    }
}

/// Audit with the nullity bound enforced.
pub fn check_solution(body: &ImplicitBody, solution: &Solution, tol: f64) -> VerificationReport {
    check_solution_with(body, solution, tol, &VerifyOptions::default())
}

pub fn check_solution_with(
    body: &ImplicitBody,
    solution: &Solution,
    tol: f64,
    opts: &VerifyOptions,
) -> VerificationReport {
    check_config_with(body, &solution.config, tol, opts)
}

/// Audit of a bare configuration. The nullity comes from a central-difference
/// level-set Jacobian, independent of the solver's analytic one.
pub fn check_config_with(body: &ImplicitBody, config: &CrossConfig, tol: f64, opts: &VerifyOptions) -> VerificationReport {
    let d = body.dim();
    let expected = expected_nullity(d);
    let guarantee = classify_guarantee(d, body);
    let max_surface_defect = match residual_levelset(body, config) {
        Ok(r) => r.values.amax(),
        Err(_) => f64::INFINITY,
    };
    let frame_orthonormality_defect = config.frame.is_regular().then(|| config.frame.orthonormality_defect());
    let rotation_defect = config.rotation.orthogonality_defect();
    let nullity = ResidualMap::new(body, ResidualForm::Levelset, &config.frame)
        .and_then(|m| m.jacobian_fd(config, FD_STEP))
        .map(|j| Spectrum::from_jacobian(&j).nullity(opts.rank_threshold))
        .unwrap_or(0);
    let nan_safe = |v: f64| v.is_finite() && v < tol;
    let inscribed = nan_safe(max_surface_defect) && config.scale > 0.0;
    let passed = inscribed
        && frame_orthonormality_defect.map_or(true, nan_safe)
        && nan_safe(rotation_defect)
        && (!opts.require_nullity || nullity >= expected);
    VerificationReport {
        max_surface_defect,
        frame_orthonormality_defect,
        rotation_defect,
        nullity,
        expected_nullity: expected,
        guarantee,
        inscribed,
        passed,
    }
}

/// Checks `r(rho sigma) = P_sigma r(rho)` for one signed permutation.
pub fn equivariance_defect(body: &ImplicitBody, config: &CrossConfig, sigma: &SignedPermutation) -> f64 {
    let Ok(base) = residual_levelset(body, config) else {
        return f64::INFINITY;
    };
    let Ok(s) = Rotation::from_matrix(sigma.matrix()) else {
        return f64::INFINITY;
    };
    let mut moved = config.clone();
    moved.rotation = config.rotation.compose(&s);
    let Ok(image) = residual_levelset(body, &moved) else {
        return f64::INFINITY;
    };
    sigma
        .vertex_map()
        .iter()
        .enumerate()
        .map(|(k, &m)| (image.values[k] - base.values[m]).abs())
        .fold(0.0, f64::max)
}

/// Runs `trials` random signed permutations (det +1) with a fixed seed.
/// Returns false for non-standard frames, where the relabelling identity
/// does not apply.
pub fn check_equivariance(body: &ImplicitBody, config: &CrossConfig, trials: usize) -> bool {
    check_equivariance_seeded(body, config, trials, 0)
}

pub fn check_equivariance_seeded(body: &ImplicitBody, config: &CrossConfig, trials: usize, seed: u64) -> bool {
    if !config.frame.is_standard() || config.dim() != body.dim() {
        return false;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials).all(|_| {
        let sigma = SignedPermutation::random(config.dim(), &mut rng);
        equivariance_defect(body, config, &sigma) <= 1e-12
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::Provenance;
    use nalgebra::DVector;

    fn solution(config: CrossConfig) -> Solution {
        Solution {
            config,
            form: ResidualForm::Levelset,
            residual_norm: 0.0,
            nullity: 0,
            iterations: 0,
            provenance: Provenance::Direct,
        }
    }

    #[test]
    fn prime_powers() {
        let yes = [3, 5, 7, 9, 25, 27, 49, 81, 121, 243, 343];
        let no = [0, 1, 2, 4, 6, 8, 12, 15, 21, 45, 100, 225];
        assert!(yes.iter().all(|&d| is_odd_prime_power(d)));
        assert!(no.iter().all(|&d| !is_odd_prime_power(d)));
    }

    #[test]
    fn guarantee_examples() {
        let ball2 = ImplicitBody::ball(2, 1.0).unwrap();
        assert_eq!(classify_guarantee(2, &ball2), Guarantee::CentrallySymmetricAnyD);
        assert_eq!(classify_guarantee(3, &ImplicitBody::ball(3, 1.0).unwrap()), Guarantee::OddPrimePower);
        let ps = ImplicitBody::perturbed_sphere(6, vec![crate::bodies::MonomialTerm::new(vec![1, 0, 0, 0, 0, 0], 0.2)]).unwrap();
        assert_eq!(classify_guarantee(6, &ps), Guarantee::None);
    }

    #[test]
    fn ball_identity_passes_and_corruption_fails() {
        let ball = ImplicitBody::ball(3, 1.0).unwrap();
        let c = CrossConfig::standard(DVector::zeros(3), 1.0, Rotation::identity(3)).unwrap();
        let r = check_solution(&ball, &solution(c.clone()), 1e-9);
        assert!(r.passed);
        assert_eq!(r.max_surface_defect, 0.0);
        assert_eq!(r.nullity, 3);
        let mut bad = c;
        bad.scale += 0.01;
        let r = check_solution(&ball, &solution(bad), 1e-9);
        assert!(r.max_surface_defect > 1e-3);
        assert!(!r.passed);
    }

    #[test]
    fn ellipsoid_closed_form_solution() {
        let e = ImplicitBody::ellipsoid(vec![1.0, 1.0, 2.0]).unwrap();
        let c = CrossConfig::standard(DVector::zeros(3), 2.0 / 3f64.sqrt(), crate::configuration::tests::rho_m()).unwrap();
        let r = check_solution(&e, &solution(c), 1e-9);
        assert!(r.passed, "{r:?}");
        assert_eq!((r.nullity, r.expected_nullity), (1, 1));
    }

    #[test]
    fn cyclic_axis_permutation() {
        let e = ImplicitBody::ellipsoid(vec![1.0, 1.0, 2.0]).unwrap();
        let c = CrossConfig::standard(DVector::zeros(3), 1.0, Rotation::identity(3)).unwrap();
        // e_1 -> e_3 -> e_2 -> e_1
        let sigma = SignedPermutation::new(vec![2, 0, 1], vec![1.0; 3]).unwrap();
        assert_eq!(sigma.determinant(), 1.0);
        let base = residual_levelset(&e, &c).unwrap().values;
        assert_eq!(base.as_slice(), &[0.0, 0.0, 0.0, 0.0, -0.75, -0.75]);
        let mut moved = c.clone();
        moved.rotation = Rotation::from_matrix(sigma.matrix()).unwrap();
        let image = residual_levelset(&e, &moved).unwrap().values;
        assert_eq!(image.as_slice(), &[-0.75, -0.75, 0.0, 0.0, 0.0, 0.0]);
        let permuted: Vec<f64> = sigma.vertex_map().iter().map(|&m| base[m]).collect();
        assert_eq!(image.as_slice(), &permuted[..]);
        assert_eq!(equivariance_defect(&e, &c, &sigma), 0.0);
        assert!(check_equivariance(&e, &c, 20));
        assert_eq!(equivariance_defect(&e, &c, &SignedPermutation::identity(3)), 0.0);
    }
}
