//! Crosspolytope configurations and the two residual maps whose zeros are
//! inscribed crosspolytopes.
//!
//! A configuration `(x, lambda, rho, E)` has the `2d` vertices
//! `x +- lambda rho e_i`, listed in the fixed order
//! `+e_1, -e_1, ..., +e_d, -e_d`.
//!
//! * The level-set residual evaluates `f` at the `2d` vertices.
//! * The chord residual works on convex bodies: for a center `p` and frame
//!   axes `u_i = rho e_i` it measures the forward and backward chord lengths
//!   `a_i`, `b_i`, forms `s_i = a_i + b_i`, `t_i = a_i - b_i`, and returns
//!   `(t_1..t_d, s_1 - s_bar, ..., s_{d-1} - s_bar)`. Adding a constant to all
//!   `s_i` does not change it.

mod jacobian;
mod rotation;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bodies::ImplicitBody;
use crate::error::{check_dim, Error, Result};

pub use jacobian::{ResidualMap, FD_STEP};
pub use rotation::{random_rotation, retract, skew, tangent_dim, tangent_pairs, Rotation, ROTATION_TOL};

/// Which residual map to drive to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualForm {
    Levelset,
    Chord,
}

impl ResidualForm {
    pub fn as_str(self) -> &'static str {
        match self {
            ResidualForm::Levelset => "levelset",
            ResidualForm::Chord => "chord",
        }
    }
}

impl std::str::FromStr for ResidualForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "levelset" => Ok(ResidualForm::Levelset),
            "chord" => Ok(ResidualForm::Chord),
            other => Err(Error::Input(format!("unknown residual form `{other}`"))),
        }
    }
}

/// Base frame `(e_1, ..., e_d)` stored as the columns of an invertible matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseFrame {
    vectors: DMatrix<f64>,
    regular: bool,
}

impl BaseFrame {
    pub fn standard(d: usize) -> Self {
        BaseFrame {
            vectors: DMatrix::identity(d, d),
            regular: true,
        }
    }

    pub fn from_matrix(vectors: DMatrix<f64>) -> Result<Self> {
        if !vectors.is_square() || vectors.nrows() == 0 {
            return Err(Error::Input("frame must be a non-empty square matrix".into()));
        }
        if vectors.determinant().abs() <= f64::EPSILON * vectors.amax().powi(vectors.nrows() as i32) {
            return Err(Error::Input("frame vectors must be linearly independent".into()));
        }
        let d = vectors.nrows();
        let regular = (vectors.transpose() * &vectors - DMatrix::<f64>::identity(d, d)).amax() < 1e-12;
        Ok(BaseFrame { vectors, regular })
    }

    pub fn dim(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    /// True when the columns are orthonormal within `1e-12`.
    pub fn is_regular(&self) -> bool {
        self.regular
    }

    /// `|E^T E - I|_max`.
    pub fn orthonormality_defect(&self) -> f64 {
        let d = self.dim();
        (self.vectors.transpose() * &self.vectors - DMatrix::<f64>::identity(d, d)).amax()
    }

    pub fn is_standard(&self) -> bool {
        self.vectors == DMatrix::<f64>::identity(self.dim(), self.dim())
    }
}

/// Candidate crosspolytope: center, positive scale, rotation and base frame.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossConfig {
    pub center: DVector<f64>,
    pub scale: f64,
    pub rotation: Rotation,
    pub frame: BaseFrame,
}

impl CrossConfig {
    pub fn new(center: DVector<f64>, scale: f64, rotation: Rotation, frame: BaseFrame) -> Result<Self> {
        let d = center.len();
        check_dim(d, rotation.dim())?;
        check_dim(d, frame.dim())?;
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::Input(format!("scale must be positive, got {scale}")));
        }
        Ok(CrossConfig {
            center,
            scale,
            rotation,
            frame,
        })
    }

    /// Configuration with the standard frame.
    pub fn standard(center: DVector<f64>, scale: f64, rotation: Rotation) -> Result<Self> {
        let d = center.len();
        Self::new(center, scale, rotation, BaseFrame::standard(d))
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// World-frame axis `rho e_i`.
    pub fn axis(&self, i: usize) -> DVector<f64> {
        self.rotation.matrix() * self.frame.vectors().column(i)
    }

    /// All axes `rho E` as matrix columns.
    pub fn axes(&self) -> DMatrix<f64> {
        self.rotation.matrix() * self.frame.vectors()
    }

    /// The `2d` vertices in the order `+e_1, -e_1, ..., +e_d, -e_d`.
    pub fn vertices(&self) -> Vec<DVector<f64>> {
        let axes = self.axes();
        let mut out = Vec::with_capacity(2 * self.dim());
        for i in 0..self.dim() {
            let u = axes.column(i) * self.scale;
            out.push(&self.center + &u);
            out.push(&self.center - &u);
        }
        out
    }
}

/// Free-function form of [`CrossConfig::vertices`].
pub fn vertices(config: &CrossConfig) -> Vec<DVector<f64>> {
    config.vertices()
}

/// Forward/backward chord lengths along the frame axes.
#[derive(Debug, Clone, PartialEq)]
pub struct ChordData {
    pub a: DVector<f64>,
    pub b: DVector<f64>,
    pub s: DVector<f64>,
    pub t: DVector<f64>,
}

impl ChordData {
    fn from_lengths(a: DVector<f64>, b: DVector<f64>) -> Self {
        let s = &a + &b;
        let t = &a - &b;
        ChordData { a, b, s, t }
    }

    /// Mean chord length `s_bar`.
    pub fn mean_length(&self) -> f64 {
        self.s.mean()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualValue {
    pub form: ResidualForm,
    pub values: DVector<f64>,
}

impl ResidualValue {
    pub fn norm(&self) -> f64 {
        self.values.norm()
    }
}

/// Level-set residual: `f` at the `2d` vertices.
pub fn residual_levelset(body: &ImplicitBody, config: &CrossConfig) -> Result<ResidualValue> {
    check_dim(body.dim(), config.dim())?;
    let values = DVector::from_iterator(
        2 * config.dim(),
        config.vertices().iter().map(|v| body.value_at(v.as_slice())),
    );
    Ok(ResidualValue {
        form: ResidualForm::Levelset,
        values,
    })
}

pub(crate) fn check_chord_preconditions(body: &ImplicitBody, frame: &BaseFrame) -> Result<()> {
    if !body.is_convex() {
        return Err(Error::UnsupportedForm("a convex body"));
    }
    if !frame.is_regular() {
        return Err(Error::UnsupportedForm("an orthonormal frame"));
    }
    Ok(())
}

/// Chord lengths from `p` along `+-rho e_i`.
pub fn chords(body: &ImplicitBody, p: &DVector<f64>, rotation: &Rotation, frame: &BaseFrame) -> Result<ChordData> {
    check_dim(body.dim(), p.len())?;
    check_dim(body.dim(), rotation.dim())?;
    check_dim(body.dim(), frame.dim())?;
    check_chord_preconditions(body, frame)?;
    let f0 = body.value_at(p.as_slice());
    if !(f0 < 0.0) {
        return Err(Error::NotInterior { value: f0 });
    }
    let d = body.dim();
    let axes = rotation.matrix() * frame.vectors();
    let mut a = DVector::zeros(d);
    let mut b = DVector::zeros(d);
    for i in 0..d {
        let u: Vec<f64> = axes.column(i).iter().copied().collect();
        let neg: Vec<f64> = u.iter().map(|x| -x).collect();
        a[i] = body.ray_root(p.as_slice(), &u)?;
        b[i] = body.ray_root(p.as_slice(), &neg)?;
    }
    Ok(ChordData::from_lengths(a, b))
}

/// Projects chord coordinates to `(t_1..t_d, s_1 - s_bar, ..., s_{d-1} - s_bar)`.
pub fn project_chords(t: &DVector<f64>, s: &DVector<f64>) -> DVector<f64> {
    let d = t.len();
    let mean = s.mean();
    let mut out = DVector::zeros(2 * d - 1);
    out.rows_mut(0, d).copy_from(t);
    for i in 0..d - 1 {
        out[d + i] = s[i] - mean;
    }
    out
}

/// Chord residual at center `p` and rotation `rho`.
pub fn residual_chord(body: &ImplicitBody, p: &DVector<f64>, rotation: &Rotation, frame: &BaseFrame) -> Result<ResidualValue> {
    let c = chords(body, p, rotation, frame)?;
    Ok(ResidualValue {
        form: ResidualForm::Chord,
        values: project_chords(&c.t, &c.s),
    })
}

/// Hausdorff distance between two finite point sets.
pub fn hausdorff(a: &[DVector<f64>], b: &[DVector<f64>]) -> f64 {
    let directed = |x: &[DVector<f64>], y: &[DVector<f64>]| {
        x.iter()
            .map(|p| y.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}

/// Hausdorff distance between the vertex sets of two configurations.
pub fn vertex_hausdorff(a: &CrossConfig, b: &CrossConfig) -> f64 {
    hausdorff(&a.vertices(), &b.vertices())
}

/// Signed permutation `sigma e_i = signs[i] e_{perm[i]}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedPermutation {
    perm: Vec<usize>,
    signs: Vec<f64>,
}

impl SignedPermutation {
    pub fn new(perm: Vec<usize>, signs: Vec<f64>) -> Result<Self> {
        let d = perm.len();
        check_dim(d, signs.len())?;
        let mut seen = vec![false; d];
        for &p in &perm {
            if p >= d || seen[p] {
                return Err(Error::Input("not a permutation".into()));
            }
            seen[p] = true;
        }
        if signs.iter().any(|s| s.abs() != 1.0) {
            return Err(Error::Input("signs must be +-1".into()));
        }
        Ok(SignedPermutation { perm, signs })
    }

    pub fn identity(d: usize) -> Self {
        SignedPermutation {
            perm: (0..d).collect(),
            signs: vec![1.0; d],
        }
    }

    /// Uniformly random signed permutation with determinant `+1`.
    pub fn random<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Self {
        let mut perm: Vec<usize> = (0..d).collect();
        perm.shuffle(rng);
        let mut signs: Vec<f64> = (0..d).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
        let mut sp = SignedPermutation { perm, signs: signs.clone() };
        if sp.determinant() < 0.0 {
            signs[0] = -signs[0];
            sp.signs = signs;
        }
        sp
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let d = self.perm.len();
        let mut m = DMatrix::zeros(d, d);
        for i in 0..d {
            m[(self.perm[i], i)] = self.signs[i];
        }
        m
    }

    pub fn determinant(&self) -> f64 {
        let mut visited = vec![false; self.perm.len()];
        let mut parity = 1.0;
        for start in 0..self.perm.len() {
            let mut len = 0;
            let mut j = start;
            while !visited[j] {
                visited[j] = true;
                j = self.perm[j];
                len += 1;
            }
            if len > 0 && len % 2 == 0 {
                parity = -parity;
            }
        }
        parity * self.signs.iter().product::<f64>()
    }

    /// Vertex index map: vertex `k` of the configuration rotated by
    /// `rho sigma` is vertex `map[k]` of the configuration rotated by `rho`.
    pub fn vertex_map(&self) -> Vec<usize> {
        let mut map = Vec::with_capacity(2 * self.perm.len());
        for i in 0..self.perm.len() {
            let base = 2 * self.perm[i];
            if self.signs[i] > 0.0 {
                map.extend([base, base + 1]);
            } else {
                map.extend([base + 1, base]);
            }
        }
        map
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::bodies::{Halfspace, MonomialTerm, RigidMotion};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(x)
    }

    /// Rotation whose columns `u_k` have `u_z = 1/sqrt(3)`.
    pub(crate) fn rho_m() -> Rotation {
        let mut m = DMatrix::zeros(3, 3);
        for k in 0..3 {
            let ang = 2.0 * std::f64::consts::PI * k as f64 / 3.0;
            let r = (2.0f64 / 3.0).sqrt();
            m[(0, k)] = r * ang.cos();
            m[(1, k)] = r * ang.sin();
            m[(2, k)] = 1.0 / 3f64.sqrt();
        }
        Rotation::from_matrix(m).unwrap()
    }

    fn ellipsoid_112() -> ImplicitBody {
        ImplicitBody::ellipsoid(vec![1.0, 1.0, 2.0]).unwrap()
    }

    #[test]
    fn identity_vertices() {
        let c = CrossConfig::standard(DVector::zeros(3), 1.0, Rotation::identity(3)).unwrap();
        let vs = c.vertices();
        assert_eq!(vs.len(), 6);
        assert_eq!(vs[0], v(&[1.0, 0.0, 0.0]));
        assert_eq!(vs[1], v(&[-1.0, 0.0, 0.0]));
        assert_eq!(vs[5], v(&[0.0, 0.0, -1.0]));
    }

    #[test]
    fn translated_scaled_vertices() {
        let c = CrossConfig::standard(v(&[1.0, 0.0, 0.0]), 2.0, Rotation::identity(3)).unwrap();
        let vs = c.vertices();
        assert_eq!(vs[0], v(&[3.0, 0.0, 0.0]));
        assert_eq!(vs[1], v(&[-1.0, 0.0, 0.0]));
        assert_eq!(vs[2], v(&[1.0, 2.0, 0.0]));
        assert_eq!(vs[3], v(&[1.0, -2.0, 0.0]));
    }

    #[test]
    fn vertices_are_centrally_symmetric() {
        let c = CrossConfig::standard(v(&[0.3, -0.2, 0.5]), 0.7, Rotation::random(3, 3)).unwrap();
        let vs = c.vertices();
        let reflected: Vec<_> = vs.iter().map(|p| &c.center * 2.0 - p).collect();
        assert!(hausdorff(&vs, &reflected) < 1e-15);
    }

    #[test]
    fn config_rejects_bad_scale() {
        assert!(CrossConfig::standard(DVector::zeros(3), 0.0, Rotation::identity(3)).is_err());
        assert!(CrossConfig::standard(DVector::zeros(2), 1.0, Rotation::identity(3)).is_err());
    }

    #[test]
    fn levelset_examples() {
        let ball = ImplicitBody::ball(3, 1.0).unwrap();
        let c = CrossConfig::standard(DVector::zeros(3), 1.0, Rotation::random(1, 3)).unwrap();
        assert!(residual_levelset(&ball, &c).unwrap().values.amax() < 1e-15);

        let e = ellipsoid_112();
        let c = CrossConfig::standard(DVector::zeros(3), 1.0, Rotation::identity(3)).unwrap();
        let r = residual_levelset(&e, &c).unwrap();
        assert_eq!(r.values, v(&[0.0, 0.0, 0.0, 0.0, -0.75, -0.75]));

        let c = CrossConfig::standard(DVector::zeros(3), 2.0 / 3f64.sqrt(), rho_m()).unwrap();
        assert!(residual_levelset(&e, &c).unwrap().values.amax() < 1e-12);
    }

    #[test]
    fn chord_examples() {
        let ball = ImplicitBody::ball(3, 1.0).unwrap();
        let std = BaseFrame::standard(3);
        let c = chords(&ball, &DVector::zeros(3), &Rotation::identity(3), &std).unwrap();
        assert_eq!(c.a, v(&[1.0; 3]));
        assert_eq!(c.s, v(&[2.0; 3]));
        assert_eq!(c.t, v(&[0.0; 3]));

        let cc = 0.3;
        let c = chords(&ball, &v(&[cc, 0.0, 0.0]), &Rotation::identity(3), &std).unwrap();
        assert_abs_diff_eq!(c.a[0], 1.0 - cc, epsilon = 1e-15);
        assert_abs_diff_eq!(c.b[0], 1.0 + cc, epsilon = 1e-15);
        assert_abs_diff_eq!(c.t[0], -2.0 * cc, epsilon = 1e-15);
        assert_abs_diff_eq!(c.s[0], 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c.a[1], (1.0 - cc * cc).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(c.b[1], (1.0 - cc * cc).sqrt(), epsilon = 1e-15);

        // chord of the ellipsoid along unit u through the center is 2 / sqrt(u^T Q u)
        let c = chords(&ellipsoid_112(), &DVector::zeros(3), &rho_m(), &std).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(c.s[i], 4.0 / 3f64.sqrt(), epsilon = 1e-14);
            assert_abs_diff_eq!(c.t[i], 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn chord_residual_examples() {
        let std = BaseFrame::standard(3);
        let ball = ImplicitBody::ball(3, 1.0).unwrap();
        let r = residual_chord(&ball, &DVector::zeros(3), &Rotation::random(4, 3), &std).unwrap();
        assert_eq!(r.values.len(), 5);
        assert!(r.values.amax() < 1e-14);

        let r = residual_chord(&ellipsoid_112(), &DVector::zeros(3), &Rotation::identity(3), &std).unwrap();
        let expected = v(&[0.0, 0.0, 0.0, -2.0 / 3.0, -2.0 / 3.0]);
        assert!((r.values - expected).amax() < 1e-15);

        let r = residual_chord(&ellipsoid_112(), &DVector::zeros(3), &rho_m(), &std).unwrap();
        assert!(r.values.amax() < 1e-12);
    }

    #[test]
    fn chord_preconditions() {
        let std = BaseFrame::standard(3);
        let ball = ImplicitBody::ball(3, 1.0).unwrap();
        assert!(matches!(
            chords(&ball, &v(&[2.0, 0.0, 0.0]), &Rotation::identity(3), &std),
            Err(Error::NotInterior { .. })
        ));
        let sphere = ImplicitBody::perturbed_sphere(3, vec![MonomialTerm::new(vec![0, 0, 1], 0.1)]).unwrap();
        assert!(matches!(
            chords(&sphere, &DVector::zeros(3), &Rotation::identity(3), &std),
            Err(Error::UnsupportedForm(_))
        ));
        let skewed = BaseFrame::from_matrix(DMatrix::from_row_slice(3, 3, &[1.0, 0.5, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0])).unwrap();
        assert!(!skewed.is_regular());
        assert!(matches!(
            chords(&ball, &DVector::zeros(3), &Rotation::identity(3), &skewed),
            Err(Error::UnsupportedForm(_))
        ));
    }

    #[test]
    fn quotient_invariance() {
        let t = v(&[0.1, -0.2, 0.3]);
        let s = v(&[2.0, 2.5, 1.7]);
        let shifted = s.add_scalar(0.77);
        assert!((project_chords(&t, &s) - project_chords(&t, &shifted)).amax() < 1e-15);
    }

    #[test]
    fn signed_permutation_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let e = ImplicitBody::superellipsoid(vec![1.0, 1.3, 0.8], 4).unwrap();
        for _ in 0..20 {
            let sigma = SignedPermutation::random(3, &mut rng);
            assert_eq!(sigma.determinant(), 1.0);
            assert!((sigma.matrix().determinant() - 1.0).abs() < 1e-15);
            let c = CrossConfig::standard(v(&[0.05, -0.1, 0.02]), 0.8, Rotation::random(rng.random(), 3)).unwrap();
            let mut cs = c.clone();
            cs.rotation = c.rotation.compose(&Rotation::from_matrix(sigma.matrix()).unwrap());
            assert!(hausdorff(&c.vertices(), &cs.vertices()) < 1e-15);
            let r = residual_levelset(&e, &c).unwrap().values;
            let rs = residual_levelset(&e, &cs).unwrap().values;
            for (k, &m) in sigma.vertex_map().iter().enumerate() {
                assert!((rs[k] - r[m]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn rigid_motion_covariance() {
        let hs: Vec<Halfspace> = (0..3)
            .flat_map(|i| {
                [1.0, -1.0].map(|s| {
                    let mut n = vec![0.0; 3];
                    n[i] = s;
                    Halfspace::new(n, 1.0)
                })
            })
            .collect();
        let body = ImplicitBody::smoothed_polytope(hs, 12.0).unwrap();
        let g = Rotation::random(77, 3);
        let motion = RigidMotion::new(g.matrix().clone(), v(&[0.4, -0.3, 1.2])).unwrap();
        let moved = body.transformed(&motion).unwrap();
        let c = CrossConfig::standard(v(&[0.1, 0.0, -0.05]), 0.9, Rotation::random(8, 3)).unwrap();
        let mc = CrossConfig::standard(motion.apply(&c.center), c.scale, g.compose(&c.rotation)).unwrap();
        let r0 = residual_levelset(&body, &c).unwrap().values;
        let r1 = residual_levelset(&moved, &mc).unwrap().values;
        assert!((r0 - r1).amax() < 1e-10);
        let std = BaseFrame::standard(3);
        let q0 = residual_chord(&body, &c.center, &c.rotation, &std).unwrap().values;
        let q1 = residual_chord(&moved, &mc.center, &mc.rotation, &std).unwrap().values;
        assert!((q0 - q1).amax() < 1e-10);
    }
}
