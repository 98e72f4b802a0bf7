//! Charts on `SO(d)`.
//!
//! Tangent vectors are `d(d-1)/2`-vectors indexed by pairs `i < j` in
//! lexicographic order. The pair `(i, j)` generates the skew matrix with `+1`
//! at `(j, i)` and `-1` at `(i, j)`, so in the plane `omega = theta` is the
//! counter-clockwise rotation by `theta`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Tolerance for `|R^T R - I|_max` accepted by [`Rotation::from_matrix`].
pub const ROTATION_TOL: f64 = 1e-10;

/// Dimension of the tangent space of `SO(d)`.
pub fn tangent_dim(d: usize) -> usize {
    d * (d - 1) / 2
}

/// Lexicographic list of the index pairs `(i, j)`, `i < j`.
pub fn tangent_pairs(d: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..d).flat_map(move |i| ((i + 1)..d).map(move |j| (i, j)))
}

/// Skew-symmetric matrix for the tangent vector `omega`.
pub fn skew(d: usize, omega: &DVector<f64>) -> DMatrix<f64> {
    assert_eq!(omega.len(), tangent_dim(d), "tangent vector length");
    let mut s = DMatrix::zeros(d, d);
    for (k, (i, j)) in tangent_pairs(d).enumerate() {
        s[(i, j)] = -omega[k];
        s[(j, i)] = omega[k];
    }
    s
}

/// A proper rotation matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Rotation(DMatrix<f64>);

impl Rotation {
    pub fn identity(d: usize) -> Self {
        Rotation(DMatrix::identity(d, d))
    }

    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::Input("rotation must be a non-empty square matrix".into()));
        }
        let r = Rotation(m);
        let defect = r.orthogonality_defect();
        if defect >= ROTATION_TOL {
            return Err(Error::Input(format!("rotation is not orthogonal (defect {defect:e})")));
        }
        if r.0.determinant() <= 0.0 {
            return Err(Error::Input("rotation must have positive determinant".into()));
        }
        Ok(r)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    /// `|R^T R - I|_max`.
    pub fn orthogonality_defect(&self) -> f64 {
        let d = self.dim();
        (self.0.transpose() * &self.0 - DMatrix::<f64>::identity(d, d)).amax()
    }

    /// `R exp(S(omega))`.
    pub fn retract(&self, omega: &DVector<f64>) -> Rotation {
        if omega.iter().all(|w| *w == 0.0) {
            return self.clone();
        }
        Rotation(&self.0 * skew(self.dim(), omega).exp())
    }

    /// Nearest rotation by QR with a positive-diagonal `R` factor.
    pub fn reorthonormalized(&self) -> Rotation {
        Rotation(orthonormalize(self.0.clone()))
    }

    pub fn transpose(&self) -> Rotation {
        Rotation(self.0.transpose())
    }

    /// `self * other`.
    pub fn compose(&self, other: &Rotation) -> Rotation {
        Rotation(&self.0 * &other.0)
    }

    /// Deterministic random rotation: Gaussian matrix, QR with sign fixing,
    /// last column negated if the determinant is negative.
    pub fn random(seed: u64, d: usize) -> Rotation {
        assert!(d >= 2, "random_rotation needs d >= 2");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = DMatrix::from_fn(d, d, |_, _| StandardNormal.sample(&mut rng));
        Rotation(orthonormalize(g))
    }
}

/// Free-function form of [`Rotation::retract`].
pub fn retract(rotation: &Rotation, omega: &DVector<f64>) -> Rotation {
    rotation.retract(omega)
}

/// Free-function form of [`Rotation::random`].
pub fn random_rotation(seed: u64, d: usize) -> Rotation {
    Rotation::random(seed, d)
}

fn orthonormalize(m: DMatrix<f64>) -> DMatrix<f64> {
    let d = m.nrows();
    let qr = m.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    if q.determinant() < 0.0 {
        q.column_mut(d - 1).neg_mut();
    }
    q
}
