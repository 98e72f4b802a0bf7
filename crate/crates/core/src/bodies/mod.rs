//! Level-set bodies.
//!
//! Every body is the sublevel set `{f <= 0}` of a smooth function `f` that is
//! negative strictly inside, zero on the boundary and positive outside. The
//! built-in kinds are balls, axis-aligned ellipsoids, even-exponent
//! superellipsoids, log-sum-exp smoothed polytopes and radially perturbed
//! spheres. Bodies can be rigidly moved and affinely blended (see
//! [`HomotopyFamily`]).

mod family;
mod parse;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};

pub use family::HomotopyFamily;
pub use parse::parse_body;

/// Residual tolerance targeted by [`ImplicitBody::ray_intersect`].
pub const ROOT_TOL: f64 = 1e-12;

/// Ratio between the bracket cap and the initial bracket step.
const BRACKET_CAP_DOUBLINGS: u32 = 40;
const INITIAL_BRACKET_STEP: f64 = 1e-3;

/// Kind tag of an [`ImplicitBody`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BodyKind {
    Ball,
    Ellipsoid,
    Superellipsoid,
    SmoothedPolytope,
    PerturbedSphere,
    /// Affine blend of two bodies, produced by [`HomotopyFamily::body_at`].
    Blend,
}

impl BodyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BodyKind::Ball => "ball",
            BodyKind::Ellipsoid => "ellipsoid",
            BodyKind::Superellipsoid => "superellipsoid",
            BodyKind::SmoothedPolytope => "smoothed_polytope",
            BodyKind::PerturbedSphere => "perturbed_sphere",
            BodyKind::Blend => "blend",
        }
    }
}

/// A halfspace `<normal, x> <= offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct Halfspace {
    pub normal: DVector<f64>,
    pub offset: f64,
}

impl Halfspace {
    pub fn new(normal: impl Into<Vec<f64>>, offset: f64) -> Self {
        Halfspace {
            normal: DVector::from_vec(normal.into()),
            offset,
        }
    }
}

/// One term `coeff * prod_k u_k^exponents[k]` of a radial perturbation.
#[derive(Debug, Clone, PartialEq)]
pub struct MonomialTerm {
    pub exponents: Vec<u32>,
    pub coeff: f64,
}

impl MonomialTerm {
    pub fn new(exponents: impl Into<Vec<u32>>, coeff: f64) -> Self {
        MonomialTerm {
            exponents: exponents.into(),
            coeff,
        }
    }

    fn degree(&self) -> u32 {
        self.exponents.iter().sum()
    }

    fn value(&self, u: &[f64]) -> f64 {
        self.coeff
            * self
                .exponents
                .iter()
                .zip(u)
                .map(|(&e, &x)| x.powi(e as i32))
                .product::<f64>()
    }

    /// Accumulates the gradient of the term with respect to `u` into `out`.
    fn add_gradient(&self, u: &[f64], out: &mut [f64]) {
        for k in 0..u.len() {
            let ek = self.exponents[k];
            if ek == 0 {
                continue;
            }
            let mut prod = self.coeff * ek as f64 * u[k].powi(ek as i32 - 1);
            for (j, (&e, &x)) in self.exponents.iter().zip(u).enumerate() {
                if j != k {
                    prod *= x.powi(e as i32);
                }
            }
            out[k] += prod;
        }
    }
}

/// Rigid motion `x -> R x + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct RigidMotion {
    pub rotation: DMatrix<f64>,
    pub translation: DVector<f64>,
}

impl RigidMotion {
    pub fn new(rotation: DMatrix<f64>, translation: DVector<f64>) -> Result<Self> {
        if !rotation.is_square() {
            return Err(Error::Input("rigid motion rotation must be square".into()));
        }
        check_dim(rotation.nrows(), translation.len())?;
        Ok(RigidMotion {
            rotation,
            translation,
        })
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.rotation * x + &self.translation
    }

    fn compose(&self, inner: &RigidMotion) -> RigidMotion {
        RigidMotion {
            rotation: &self.rotation * &inner.rotation,
            translation: &self.rotation * &inner.translation + &self.translation,
        }
    }

    fn to_local(&self, x: &[f64]) -> Vec<f64> {
        let d = x.len();
        let mut y = vec![0.0; d];
        for (j, yj) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for i in 0..d {
                acc += self.rotation[(i, j)] * (x[i] - self.translation[i]);
            }
            *yj = acc;
        }
        y
    }

    fn vector_to_world(&self, v: &[f64]) -> Vec<f64> {
        let d = v.len();
        (0..d)
            .map(|i| (0..d).map(|j| self.rotation[(i, j)] * v[j]).sum())
            .collect()
    }

    fn vector_to_local(&self, v: &[f64]) -> Vec<f64> {
        let d = v.len();
        (0..d)
            .map(|j| (0..d).map(|i| self.rotation[(i, j)] * v[i]).sum())
            .collect()
    }
}

#[derive(Debug, Clone)]
enum Shape {
    Ball {
        radius: f64,
    },
    Ellipsoid {
        semi_axes: Vec<f64>,
    },
    Superellipsoid {
        semi_axes: Vec<f64>,
        exponent: u32,
    },
    SmoothedPolytope {
        halfspaces: Vec<Halfspace>,
        sharpness: f64,
    },
    PerturbedSphere {
        terms: Vec<MonomialTerm>,
    },
    Blend {
        start: Arc<ImplicitBody>,
        end: Arc<ImplicitBody>,
        t: f64,
    },
}

/// A smooth body given by a level-set function.
///
/// Immutable once built; all queries are pure.
#[derive(Debug, Clone)]
pub struct ImplicitBody {
    shape: Shape,
    dim: usize,
    interior_point: DVector<f64>,
    convex: bool,
    placement: Option<RigidMotion>,
    inradius: f64,
    circumradius: f64,
}

impl ImplicitBody {
    /// `f(x) = |x|^2 / r^2 - 1`.
    pub fn ball(dim: usize, radius: f64) -> Result<Self> {
        check_min_dim(dim)?;
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::Input(format!("radius must be positive, got {radius}")));
        }
        Self::finish(Shape::Ball { radius }, dim, DVector::zeros(dim), true)
    }

    /// `f(x) = sum_i (x_i / a_i)^2 - 1`.
    pub fn ellipsoid(semi_axes: impl Into<Vec<f64>>) -> Result<Self> {
        let semi_axes = semi_axes.into();
        check_min_dim(semi_axes.len())?;
        check_semi_axes(&semi_axes)?;
        let dim = semi_axes.len();
        Self::finish(Shape::Ellipsoid { semi_axes }, dim, DVector::zeros(dim), true)
    }

    /// `f(x) = sum_i (x_i / a_i)^n - 1` for an even exponent `n >= 2`.
    pub fn superellipsoid(semi_axes: impl Into<Vec<f64>>, exponent: u32) -> Result<Self> {
        let semi_axes = semi_axes.into();
        check_min_dim(semi_axes.len())?;
        check_semi_axes(&semi_axes)?;
        if exponent < 2 || exponent % 2 != 0 {
            return Err(Error::Input(format!(
                "superellipsoid exponent must be even and >= 2, got {exponent}"
            )));
        }
        let dim = semi_axes.len();
        Self::finish(
            Shape::Superellipsoid {
                semi_axes,
                exponent,
            },
            dim,
            DVector::zeros(dim),
            true,
        )
    }

    /// `f(x) = log(sum_j exp(beta (<n_j, x> - c_j))) / beta`, a smooth convex
    /// surrogate of the polytope `{<n_j, x> <= c_j}`.
    pub fn smoothed_polytope(halfspaces: Vec<Halfspace>, sharpness: f64) -> Result<Self> {
        let Some(first) = halfspaces.first() else {
            return Err(Error::Input("smoothed polytope needs halfspaces".into()));
        };
        let dim = first.normal.len();
        check_min_dim(dim)?;
        if halfspaces.len() <= dim {
            return Err(Error::Input(format!(
                "a bounded polytope in dimension {dim} needs more than {dim} halfspaces"
            )));
        }
        for h in &halfspaces {
            check_dim(dim, h.normal.len())?;
            if !(h.normal.norm() > 0.0 && h.normal.iter().all(|v| v.is_finite()))
                || !h.offset.is_finite()
            {
                return Err(Error::Input("halfspace normals must be finite and nonzero".into()));
            }
        }
        if !(sharpness.is_finite() && sharpness > 0.0) {
            return Err(Error::Input(format!("sharpness must be positive, got {sharpness}")));
        }
        let shape = Shape::SmoothedPolytope {
            halfspaces,
            sharpness,
        };
        let interior = minimize_level(&shape, dim)?;
        Self::finish(shape, dim, interior, true)
    }

    /// `f(x) = |x| - r(x / |x|)` with `r(u) = 1 + sum_m c_m u^m`.
    ///
    /// Requires `sum |c_m| < 0.5`, which keeps the surface star-shaped about
    /// the origin with radii in `(0.5, 1.5)`.
    pub fn perturbed_sphere(dim: usize, terms: Vec<MonomialTerm>) -> Result<Self> {
        check_min_dim(dim)?;
        let mut total = 0.0;
        for term in &terms {
            check_dim(dim, term.exponents.len())?;
            if !term.coeff.is_finite() {
                return Err(Error::Input("perturbation coefficients must be finite".into()));
            }
            total += term.coeff.abs();
        }
        if total >= 0.5 {
            return Err(Error::Input(format!(
                "perturbation coefficients must satisfy sum |c| < 0.5, got {total}"
            )));
        }
        Self::finish(Shape::PerturbedSphere { terms }, dim, DVector::zeros(dim), false)
    }

    fn finish(shape: Shape, dim: usize, interior_point: DVector<f64>, convex: bool) -> Result<Self> {
        let mut body = ImplicitBody {
            shape,
            dim,
            interior_point,
            convex,
            placement: None,
            inradius: 0.0,
            circumradius: 0.0,
        };
        let f0 = body.value_at(body.interior_point.as_slice());
        if !(f0 < 0.0) {
            return Err(Error::Input(format!(
                "body has no interior point (f = {f0:e} at the candidate)"
            )));
        }
        body.estimate_radii()?;
        Ok(body)
    }

    fn estimate_radii(&mut self) -> Result<()> {
        let d = self.dim;
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        let mut dir = DVector::zeros(d);
        let probe = |dir: &DVector<f64>, lo: &mut f64, hi: &mut f64| -> Result<()> {
            let r = self.ray_intersect(&self.interior_point, dir).map_err(|e| match e {
                Error::NoIntersection => Error::Input("body is unbounded".into()),
                other => other,
            })?;
            *lo = lo.min(r);
            *hi = hi.max(r);
            Ok(())
        };
        for i in 0..d {
            for s in [1.0, -1.0] {
                dir.fill(0.0);
                dir[i] = s;
                probe(&dir, &mut lo, &mut hi)?;
            }
            for j in (i + 1)..d {
                for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                    dir.fill(0.0);
                    dir[i] = si * std::f64::consts::FRAC_1_SQRT_2;
                    dir[j] = sj * std::f64::consts::FRAC_1_SQRT_2;
                    probe(&dir, &mut lo, &mut hi)?;
                }
            }
        }
        self.inradius = lo;
        self.circumradius = hi;
        Ok(())
    }

    pub fn kind(&self) -> BodyKind {
        match self.shape {
            Shape::Ball { .. } => BodyKind::Ball,
            Shape::Ellipsoid { .. } => BodyKind::Ellipsoid,
            Shape::Superellipsoid { .. } => BodyKind::Superellipsoid,
            Shape::SmoothedPolytope { .. } => BodyKind::SmoothedPolytope,
            Shape::PerturbedSphere { .. } => BodyKind::PerturbedSphere,
            Shape::Blend { .. } => BodyKind::Blend,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn interior_point(&self) -> &DVector<f64> {
        &self.interior_point
    }

    pub fn is_convex(&self) -> bool {
        self.convex
    }

    /// Smallest distance from the interior point to the surface over a fixed
    /// set of probe directions.
    pub fn inradius_estimate(&self) -> f64 {
        self.inradius
    }

    /// Largest distance from the interior point to the surface over the same
    /// probe directions.
    pub fn circumradius_estimate(&self) -> f64 {
        self.circumradius
    }

    /// Center of point symmetry when the body is centrally symmetric by
    /// construction.
    pub fn symmetry_center(&self) -> Option<DVector<f64>> {
        let local = match &self.shape {
            Shape::Ball { .. } | Shape::Ellipsoid { .. } | Shape::Superellipsoid { .. } => {
                Some(DVector::zeros(self.dim))
            }
            Shape::SmoothedPolytope { halfspaces, .. } => {
                let symmetric = halfspaces.iter().all(|h| {
                    halfspaces.iter().any(|g| {
                        (&g.normal + &h.normal).amax() <= 1e-12 && (g.offset - h.offset).abs() <= 1e-12
                    })
                });
                symmetric.then(|| DVector::zeros(self.dim))
            }
            Shape::PerturbedSphere { terms } => terms
                .iter()
                .all(|t| t.degree() % 2 == 0)
                .then(|| DVector::zeros(self.dim)),
            Shape::Blend { start, end, .. } => {
                let (a, b) = (start.symmetry_center()?, end.symmetry_center()?);
                return ((&a - &b).amax() <= 1e-12).then_some(a);
            }
        }?;
        Some(match &self.placement {
            Some(p) => p.apply(&local),
            None => local,
        })
    }

    pub fn is_centrally_symmetric(&self) -> bool {
        self.symmetry_center().is_some()
    }

    /// The body moved by `motion`: `f'(y) = f(motion^-1 y)`.
    pub fn transformed(&self, motion: &RigidMotion) -> Result<ImplicitBody> {
        check_dim(self.dim, motion.translation.len())?;
        let mut out = self.clone();
        match &self.shape {
            Shape::Blend { start, end, t } => {
                out.shape = Shape::Blend {
                    start: Arc::new(start.transformed(motion)?),
                    end: Arc::new(end.transformed(motion)?),
                    t: *t,
                };
            }
            _ => {
                out.placement = Some(match &self.placement {
                    Some(p) => motion.compose(p),
                    None => motion.clone(),
                });
            }
        }
        out.interior_point = motion.apply(&self.interior_point);
        Ok(out)
    }

    /// Level-set value `f(x)`: negative inside, zero on the surface, positive
    /// outside.
    pub fn evaluate(&self, x: &DVector<f64>) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        Ok(self.value_at(x.as_slice()))
    }

    /// Analytic gradient of `f`.
    pub fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.dim, x.len())?;
        Ok(self.value_and_gradient(x.as_slice()).1)
    }

    /// Unchecked evaluation for hot loops; `x.len()` must equal `dim()`.
    pub fn value_at(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        match &self.placement {
            None => self.shape_value(x),
            Some(p) => self.shape_value(&p.to_local(x)),
        }
    }

    /// Unchecked value and gradient; `x.len()` must equal `dim()`.
    pub fn value_and_gradient(&self, x: &[f64]) -> (f64, DVector<f64>) {
        debug_assert_eq!(x.len(), self.dim);
        let mut g = vec![0.0; self.dim];
        let v = match &self.placement {
            None => self.shape_value_gradient(x, &mut g),
            Some(p) => {
                let v = self.shape_value_gradient(&p.to_local(x), &mut g);
                g = p.vector_to_world(&g);
                v
            }
        };
        (v, DVector::from_vec(g))
    }

    fn shape_value(&self, x: &[f64]) -> f64 {
        match &self.shape {
            Shape::Ball { radius } => x.iter().map(|v| v * v).sum::<f64>() / (radius * radius) - 1.0,
            Shape::Ellipsoid { semi_axes } => {
                x.iter().zip(semi_axes).map(|(v, a)| (v / a) * (v / a)).sum::<f64>() - 1.0
            }
            Shape::Superellipsoid {
                semi_axes,
                exponent,
            } => {
                x.iter()
                    .zip(semi_axes)
                    .map(|(v, a)| (v / a).powi(*exponent as i32))
                    .sum::<f64>()
                    - 1.0
            }
            Shape::SmoothedPolytope {
                halfspaces,
                sharpness,
            } => {
                let z: Vec<f64> = halfspaces
                    .iter()
                    .map(|h| sharpness * (dot(h.normal.as_slice(), x) - h.offset))
                    .collect();
                let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let s: f64 = z.iter().map(|zj| (zj - m).exp()).sum();
                (m + s.ln()) / sharpness
            }
            Shape::PerturbedSphere { terms } => {
                let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                if r == 0.0 {
                    // Below every radius of the star-shaped surface.
                    return -(1.0 - terms.iter().map(|t| t.coeff.abs()).sum::<f64>());
                }
                let u: Vec<f64> = x.iter().map(|v| v / r).collect();
                r - radial(terms, &u)
            }
            Shape::Blend { start, end, t } => {
                (1.0 - t) * start.value_at(x) + t * end.value_at(x)
            }
        }
    }

    fn shape_value_gradient(&self, x: &[f64], g: &mut [f64]) -> f64 {
        match &self.shape {
            Shape::Ball { radius } => {
                let r2 = radius * radius;
                for (gi, xi) in g.iter_mut().zip(x) {
                    *gi = 2.0 * xi / r2;
                }
                x.iter().map(|v| v * v).sum::<f64>() / r2 - 1.0
            }
            Shape::Ellipsoid { semi_axes } => {
                let mut v = -1.0;
                for ((gi, xi), a) in g.iter_mut().zip(x).zip(semi_axes) {
                    *gi = 2.0 * xi / (a * a);
                    v += (xi / a) * (xi / a);
                }
                v
            }
            Shape::Superellipsoid {
                semi_axes,
                exponent,
            } => {
                let n = *exponent as i32;
                let mut v = -1.0;
                for ((gi, xi), a) in g.iter_mut().zip(x).zip(semi_axes) {
                    let q = xi / a;
                    let qn1 = q.powi(n - 1);
                    *gi = n as f64 * qn1 / a;
                    v += qn1 * q;
                }
                v
            }
            Shape::SmoothedPolytope {
                halfspaces,
                sharpness,
            } => {
                let z: Vec<f64> = halfspaces
                    .iter()
                    .map(|h| sharpness * (dot(h.normal.as_slice(), x) - h.offset))
                    .collect();
                let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let w: Vec<f64> = z.iter().map(|zj| (zj - m).exp()).collect();
                let s: f64 = w.iter().sum();
                g.fill(0.0);
                for (h, wj) in halfspaces.iter().zip(&w) {
                    for (gi, ni) in g.iter_mut().zip(h.normal.iter()) {
                        *gi += wj / s * ni;
                    }
                }
                (m + s.ln()) / sharpness
            }
            Shape::PerturbedSphere { terms } => {
                let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                if r == 0.0 {
                    g.fill(0.0);
                    return self.shape_value(x);
                }
                let u: Vec<f64> = x.iter().map(|v| v / r).collect();
                let mut gu = vec![0.0; x.len()];
                for t in terms {
                    t.add_gradient(&u, &mut gu);
                }
                let ug = dot(&u, &gu);
                for k in 0..x.len() {
                    g[k] = u[k] - (gu[k] - ug * u[k]) / r;
                }
                r - radial(terms, &u)
            }
            Shape::Blend { start, end, t } => {
                let (f0, g0) = start.value_and_gradient(x);
                let (f1, g1) = end.value_and_gradient(x);
                for k in 0..x.len() {
                    g[k] = (1.0 - t) * g0[k] + t * g1[k];
                }
                (1.0 - t) * f0 + t * f1
            }
        }
    }

    /// Smallest `a > 0` with `f(origin + a * direction) = 0`.
    ///
    /// Ellipsoids and balls use the closed-form quadratic root. Everything else
    /// expands a bracket by doubling and then runs a safeguarded
    /// Newton/bisection hybrid.
    pub fn ray_intersect(&self, origin: &DVector<f64>, direction: &DVector<f64>) -> Result<f64> {
        check_dim(self.dim, origin.len())?;
        check_dim(self.dim, direction.len())?;
        let n = direction.norm();
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::Input(format!("direction must be a unit vector, |u| = {n}")));
        }
        self.ray_root(origin.as_slice(), direction.as_slice())
    }

    /// Unchecked ray intersection; requires matching lengths and a unit direction.
    pub(crate) fn ray_root(&self, origin: &[f64], direction: &[f64]) -> Result<f64> {
        let f0 = self.value_at(origin);
        if !(f0 < 0.0) {
            return Err(Error::NotInterior { value: f0 });
        }
        if let Some(root) = self.quadric_root(origin, direction) {
            return Ok(root);
        }
        let point = |a: f64| -> Vec<f64> { origin.iter().zip(direction).map(|(o, d)| o + a * d).collect() };

        let mut lo = 0.0;
        let mut hi = INITIAL_BRACKET_STEP;
        let cap = INITIAL_BRACKET_STEP * 2f64.powi(BRACKET_CAP_DOUBLINGS as i32);
        let mut f_hi = self.value_at(&point(hi));
        while f_hi < 0.0 {
            lo = hi;
            hi *= 2.0;
            if hi > cap {
                return Err(Error::NoIntersection);
            }
            f_hi = self.value_at(&point(hi));
        }
        if !f_hi.is_finite() {
            return Err(Error::NoIntersection);
        }

        let mut a = 0.5 * (lo + hi);
        for _ in 0..200 {
            let x = point(a);
            let (fa, grad) = self.value_and_gradient(&x);
            if fa.abs() <= ROOT_TOL {
                return Ok(a);
            }
            if fa < 0.0 {
                lo = a;
            } else {
                hi = a;
            }
            if hi - lo <= 4.0 * f64::EPSILON * hi {
                return Ok(a);
            }
            let slope = dot(grad.as_slice(), direction);
            let newton = a - fa / slope;
            a = if slope.is_finite() && slope != 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
        }
        Ok(a)
    }

    fn quadric_root(&self, origin: &[f64], direction: &[f64]) -> Option<f64> {
        let (o, d);
        let (o_ref, d_ref) = match &self.placement {
            None => (origin, direction),
            Some(p) => {
                o = p.to_local(origin);
                d = p.vector_to_local(direction);
                (o.as_slice(), d.as_slice())
            }
        };
        let inv_sq = |i: usize| -> Option<f64> {
            match &self.shape {
                Shape::Ball { radius } => Some(1.0 / (radius * radius)),
                Shape::Ellipsoid { semi_axes } => Some(1.0 / (semi_axes[i] * semi_axes[i])),
                _ => None,
            }
        };
        let (mut qa, mut qb, mut qc) = (0.0, 0.0, -1.0);
        for i in 0..self.dim {
            let w = inv_sq(i)?;
            qa += w * d_ref[i] * d_ref[i];
            qb += w * o_ref[i] * d_ref[i];
            qc += w * o_ref[i] * o_ref[i];
        }
        // qa a^2 + 2 qb a + qc = 0 with qc < 0; take the positive root stably.
        let disc = (qb * qb - qa * qc).sqrt();
        Some(if qb <= 0.0 { (disc - qb) / qa } else { -qc / (qb + disc) })
    }

    pub(crate) fn blend(start: Arc<ImplicitBody>, end: Arc<ImplicitBody>, t: f64) -> ImplicitBody {
        ImplicitBody {
            dim: start.dim,
            interior_point: start.interior_point.clone(),
            convex: start.convex && end.convex,
            placement: None,
            inradius: start.inradius.min(end.inradius),
            circumradius: start.circumradius.max(end.circumradius),
            shape: Shape::Blend { start, end, t },
        }
    }

    pub(crate) fn set_interior_point(&mut self, p: DVector<f64>) {
        self.interior_point = p;
    }

    pub(crate) fn refresh_radii(&mut self) -> Result<()> {
        self.estimate_radii()
    }
}

fn radial(terms: &[MonomialTerm], u: &[f64]) -> f64 {
    1.0 + terms.iter().map(|t| t.value(u)).sum::<f64>()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_min_dim(dim: usize) -> Result<()> {
    if dim < 2 {
        return Err(Error::Input(format!("dimension must be at least 2, got {dim}")));
    }
    Ok(())
}

fn check_semi_axes(semi_axes: &[f64]) -> Result<()> {
    if semi_axes.iter().all(|a| a.is_finite() && *a > 0.0) {
        Ok(())
    } else {
        Err(Error::Input("semi-axes must be positive and finite".into()))
    }
}

/// Approximate minimizer of a convex level-set function by gradient descent
/// with backtracking, started at the origin.
fn minimize_level(shape: &Shape, dim: usize) -> Result<DVector<f64>> {
    let probe = ImplicitBody {
        shape: shape.clone(),
        dim,
        interior_point: DVector::zeros(dim),
        convex: true,
        placement: None,
        inradius: 0.0,
        circumradius: 0.0,
    };
    let mut x = DVector::zeros(dim);
    let (mut fx, mut g) = probe.value_and_gradient(x.as_slice());
    let mut step = 1.0;
    for _ in 0..500 {
        if g.norm() < 1e-10 {
            break;
        }
        let mut accepted = false;
        for _ in 0..60 {
            let trial = &x - &g * step;
            let ft = probe.value_at(trial.as_slice());
            if ft < fx - 0.5 * step * g.norm_squared() {
                x = trial;
                fx = ft;
                step *= 2.0;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        g = probe.value_and_gradient(x.as_slice()).1;
    }
    if fx < 0.0 {
        Ok(x)
    } else {
        Err(Error::Input(format!("body is empty (min f = {fx:e})")))
    }
}
