//! Brute-force grid search over ZYZ Euler angles, centers and scales in three
//! dimensions. Independent of the solver: it only evaluates the level-set
//! residual on a fixed grid.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bodies::ImplicitBody;
use crate::configuration::{BaseFrame, CrossConfig, ResidualForm, Rotation};
use crate::error::{check_dim, Error, Result};
use crate::solver::{dedup_solutions, gauss_newton, Provenance, Solution, SolveOptions, DEDUP_TOL};

/// Largest admissible number of grid cells.
pub const GRID_BUDGET: u128 = 100_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    /// Samples per full turn for the azimuthal angles; the polar angle gets
    /// the matching spacing on `[0, pi]`.
    pub euler_resolution: usize,
    /// Points per axis on `interior +- 0.3 * inradius`.
    pub center_resolution: usize,
    /// Points on `[0.2, 2] * inradius`.
    pub scale_resolution: usize,
    pub coarse_tol: f64,
    /// Number of best local minima returned.
    pub max_candidates: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            euler_resolution: 24,
            center_resolution: 9,
            scale_resolution: 17,
            coarse_tol: 0.2,
            max_candidates: 256,
        }
    }
}

impl GridSpec {
    fn validate(&self) -> Result<()> {
        if self.euler_resolution < 2 || self.center_resolution < 2 || self.scale_resolution < 2 {
            return Err(Error::Input("grid resolutions must be at least 2".into()));
        }
        if !(self.coarse_tol > 0.0) {
            return Err(Error::Input("coarse_tol must be positive".into()));
        }
        Ok(())
    }

    pub fn polar_resolution(&self) -> usize {
        self.euler_resolution / 2 + 1
    }

    /// Total number of grid cells.
    pub fn points(&self) -> u128 {
        let e = self.euler_resolution as u128;
        let c = self.center_resolution as u128;
        e * e * self.polar_resolution() as u128 * c * c * c * self.scale_resolution as u128
    }
}

/// A grid cell that is a local minimum of `|r|_inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub config: CrossConfig,
    pub residual_inf: f64,
    /// `(alpha, beta, gamma)` in radians.
    pub euler: [f64; 3],
    pub index: u64,
}

type Mat3 = [[f64; 3]; 3];

/// `Rz(alpha) Ry(beta) Rz(gamma)`.
pub fn zyz_matrix(alpha: f64, beta: f64, gamma: f64) -> DMatrix<f64> {
    let m = zyz(alpha, beta, gamma);
    DMatrix::from_fn(3, 3, |r, c| m[r][c])
}

fn zyz(alpha: f64, beta: f64, gamma: f64) -> Mat3 {
    let (sa, ca) = alpha.sin_cos();
    let (sb, cb) = beta.sin_cos();
    let (sg, cg) = gamma.sin_cos();
    [
        [ca * cb * cg - sa * sg, -ca * cb * sg - sa * cg, ca * sb],
        [sa * cb * cg + ca * sg, -sa * cb * sg + ca * cg, sa * sb],
        [-sb * cg, sb * sg, cb],
    ]
}

struct Grid {
    ne: usize,
    nb: usize,
    nc: usize,
    ns: usize,
    centers: Vec<f64>,
    scales: Vec<f64>,
    origin: [f64; 3],
}

impl Grid {
    fn new(body: &ImplicitBody, spec: &GridSpec) -> Self {
        let r = body.inradius_estimate();
        let lin = |n: usize, lo: f64, hi: f64| -> Vec<f64> {
            (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
        };
        let p = body.interior_point();
        Grid {
            ne: spec.euler_resolution,
            nb: spec.polar_resolution(),
            nc: spec.center_resolution,
            ns: spec.scale_resolution,
            centers: lin(spec.center_resolution, -0.3 * r, 0.3 * r),
            scales: lin(spec.scale_resolution, 0.2 * r, 2.0 * r),
            origin: [p[0], p[1], p[2]],
        }
    }

    fn euler(&self, rot: usize) -> [f64; 3] {
        let ia = rot / (self.nb * self.ne);
        let ib = (rot / self.ne) % self.nb;
        let ig = rot % self.ne;
        let step = 2.0 * PI / self.ne as f64;
        let polar = if self.nb > 1 { PI / (self.nb - 1) as f64 } else { 0.0 };
        [ia as f64 * step, ib as f64 * polar, ig as f64 * step]
    }

    fn rotations(&self) -> usize {
        self.ne * self.nb * self.ne
    }

    fn cells_per_rotation(&self) -> usize {
        self.nc * self.nc * self.nc * self.ns
    }

    /// Multi-index `[alpha, beta, gamma, cx, cy, cz, scale]`.
    fn unflatten(&self, mut idx: u64) -> [usize; 7] {
        let dims = self.dims();
        let mut out = [0; 7];
        for k in (0..7).rev() {
            out[k] = (idx % dims[k] as u64) as usize;
            idx /= dims[k] as u64;
        }
        out
    }

    fn flatten(&self, m: &[usize; 7]) -> u64 {
        let dims = self.dims();
        m.iter().zip(dims).fold(0u64, |acc, (&i, n)| acc * n as u64 + i as u64)
    }

    fn dims(&self) -> [usize; 7] {
        [self.ne, self.nb, self.ne, self.nc, self.nc, self.nc, self.ns]
    }

    /// Axis neighbours; both azimuthal angles wrap around.
    fn neighbours(&self, idx: u64) -> Vec<u64> {
        let m = self.unflatten(idx);
        let dims = self.dims();
        let mut out = Vec::with_capacity(14);
        for k in 0..7 {
            let periodic = k == 0 || k == 2;
            for step in [-1i64, 1] {
                let j = m[k] as i64 + step;
                let j = if periodic {
                    j.rem_euclid(dims[k] as i64)
                } else if j < 0 || j >= dims[k] as i64 {
                    continue;
                } else {
                    j
                };
                let mut n = m;
                n[k] = j as usize;
                if n != m {
                    out.push(self.flatten(&n));
                }
            }
        }
        out
    }
}

/// Grid search for inscribed octahedra. Returns local minima of the
/// level-set residual's max-norm below `coarse_tol`, best first, ties broken
/// by grid index.
pub fn brute_force_search(body: &ImplicitBody, frame: &BaseFrame, spec: &GridSpec) -> Result<Vec<Candidate>> {
    if body.dim() != 3 {
        return Err(Error::UnsupportedDimension {
            supported: 3,
            got: body.dim(),
        });
    }
    check_dim(3, frame.dim())?;
    spec.validate()?;
    if spec.points() >= GRID_BUDGET {
        return Err(Error::GridBudget {
            points: spec.points(),
            limit: GRID_BUDGET,
        });
    }
    let grid = Grid::new(body, spec);
    let e = frame.vectors();
    let tol = spec.coarse_tol;

    let below: Vec<(u64, f64)> = (0..grid.rotations())
        .into_par_iter()
        .flat_map_iter(|rot| {
            let [a, b, g] = grid.euler(rot);
            let r = zyz(a, b, g);
            let mut axes = [[0.0; 3]; 3];
            for (i, axis) in axes.iter_mut().enumerate() {
                for (row, out) in axis.iter_mut().enumerate() {
                    *out = (0..3).map(|k| r[row][k] * e[(k, i)]).sum();
                }
            }
            let mut hits = Vec::new();
            let base = rot as u64 * grid.cells_per_rotation() as u64;
            let mut cell = 0u64;
            for &cx in &grid.centers {
                for &cy in &grid.centers {
                    for &cz in &grid.centers {
                        let c = [grid.origin[0] + cx, grid.origin[1] + cy, grid.origin[2] + cz];
                        for &s in &grid.scales {
                            let mut worst = 0.0f64;
                            'vertices: for axis in &axes {
                                for sign in [1.0, -1.0] {
                                    let v = [
                                        c[0] + sign * s * axis[0],
                                        c[1] + sign * s * axis[1],
                                        c[2] + sign * s * axis[2],
                                    ];
                                    worst = worst.max(body.value_at(&v).abs());
                                    if !(worst < tol) {
                                        break 'vertices;
                                    }
                                }
                            }
                            if worst < tol {
                                hits.push((base + cell, worst));
                            }
                            cell += 1;
                        }
                    }
                }
            }
            hits
        })
        .collect();

    // `below` is sorted by index; cells not in it are at or above `tol`
    let lookup = |idx: u64| below.binary_search_by_key(&idx, |&(i, _)| i).ok().map(|k| below[k].1);
    let mut minima: Vec<(u64, f64)> = below
        .iter()
        .copied()
        .filter(|&(idx, v)| grid.neighbours(idx).into_iter().all(|n| lookup(n).map_or(true, |w| v <= w)))
        .collect();
    minima.sort_by(|x, y| x.1.total_cmp(&y.1).then(x.0.cmp(&y.0)));
    minima.truncate(spec.max_candidates);

    minima
        .into_iter()
        .map(|(idx, v)| {
            let m = grid.unflatten(idx);
            let rot = (m[0] * grid.nb + m[1]) * grid.ne + m[2];
            let euler = grid.euler(rot);
            let rotation = Rotation::from_matrix(zyz_matrix(euler[0], euler[1], euler[2]))?;
            let center = DVector::from_fn(3, |k, _| grid.origin[k] + grid.centers[m[3 + k]]);
            Ok(Candidate {
                config: CrossConfig::new(center, grid.scales[m[6]], rotation, frame.clone())?,
                residual_inf: v,
                euler,
                index: idx,
            })
        })
        .collect()
}

/// Result of refining grid candidates.
#[derive(Debug, Clone)]
pub struct RefineOutcome {
    pub solutions: Vec<Solution>,
    pub attempted: usize,
    pub converged: usize,
    pub dropped: usize,
}

/// Gauss-Newton from each candidate; non-convergent candidates are dropped
/// and counted.
pub fn refine_candidates(body: &ImplicitBody, candidates: &[Candidate], opts: &SolveOptions) -> RefineOutcome {
    let results: Vec<Option<Solution>> = candidates
        .par_iter()
        .map(|c| gauss_newton(body, &c.config, ResidualForm::Levelset, opts).ok())
        .collect();
    let converged: Vec<Solution> = results
        .into_iter()
        .flatten()
        .map(|mut s| {
            s.provenance = Provenance::OracleRefined;
            s
        })
        .collect();
    let n = converged.len();
    RefineOutcome {
        solutions: dedup_solutions(converged, DEDUP_TOL),
        attempted: candidates.len(),
        converged: n,
        dropped: candidates.len() - n,
    }
}
