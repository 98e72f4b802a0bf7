//! Residual maps in chart coordinates.
//!
//! The chart around a configuration `(x, lambda, rho)` is
//! `(dx, dlambda, omega) -> (x + dx, lambda + dlambda, rho exp(S(omega)))`.
//! The chord form has no scale coordinate: the scale follows from the chord
//! lengths as `s_bar / 2`.

use nalgebra::{DMatrix, DVector};

use super::{check_chord_preconditions, project_chords, tangent_dim, tangent_pairs, BaseFrame, CrossConfig, ResidualForm};
use crate::bodies::{dot, ImplicitBody};
use crate::error::{check_dim, Error, Result};

/// Step used for central-difference Jacobians.
pub const FD_STEP: f64 = 1e-6;

/// A residual form bound to a body and a base frame.
#[derive(Debug, Clone, Copy)]
pub struct ResidualMap<'a> {
    body: &'a ImplicitBody,
    form: ResidualForm,
}

/// Per-axis chord geometry needed for implicit differentiation.
struct AxisChord {
    u: DVector<f64>,
    a: f64,
    b: f64,
    grad_a: DVector<f64>,
    grad_b: DVector<f64>,
    va: Vec<f64>,
    vb: Vec<f64>,
}

impl<'a> ResidualMap<'a> {
    pub fn new(body: &'a ImplicitBody, form: ResidualForm, frame: &BaseFrame) -> Result<Self> {
        check_dim(body.dim(), frame.dim())?;
        if form == ResidualForm::Chord {
            check_chord_preconditions(body, frame)?;
        }
        Ok(ResidualMap { body, form })
    }

    pub fn body(&self) -> &'a ImplicitBody {
        self.body
    }

    pub fn form(&self) -> ResidualForm {
        self.form
    }

    pub fn dim(&self) -> usize {
        self.body.dim()
    }

    fn has_scale(&self) -> bool {
        self.form == ResidualForm::Levelset
    }

    /// Offset of the rotation block in chart coordinates.
    pub fn rotation_offset(&self) -> usize {
        self.dim() + usize::from(self.has_scale())
    }

    /// Number of chart coordinates.
    pub fn chart_dim(&self) -> usize {
        self.rotation_offset() + tangent_dim(self.dim())
    }

    pub fn residual_len(&self) -> usize {
        match self.form {
            ResidualForm::Levelset => 2 * self.dim(),
            ResidualForm::Chord => 2 * self.dim() - 1,
        }
    }

    /// Applies a chart step. For the chord form the scale is left untouched.
    pub fn retract(&self, config: &CrossConfig, delta: &DVector<f64>) -> CrossConfig {
        let d = self.dim();
        assert_eq!(delta.len(), self.chart_dim(), "chart step length");
        let off = self.rotation_offset();
        let omega = delta.rows(off, tangent_dim(d)).into_owned();
        CrossConfig {
            center: &config.center + delta.rows(0, d),
            scale: if self.has_scale() { config.scale + delta[d] } else { config.scale },
            rotation: config.rotation.retract(&omega),
            frame: config.frame.clone(),
        }
    }

    pub fn residual(&self, config: &CrossConfig) -> Result<DVector<f64>> {
        check_dim(self.dim(), config.dim())?;
        match self.form {
            ResidualForm::Levelset => Ok(DVector::from_iterator(
                2 * self.dim(),
                config.vertices().iter().map(|v| self.body.value_at(v.as_slice())),
            )),
            ResidualForm::Chord => {
                let c = super::chords(self.body, &config.center, &config.rotation, &config.frame)?;
                Ok(project_chords(&c.t, &c.s))
            }
        }
    }

    /// Scale `s_bar / 2` implied by the chords at the configuration's center.
    pub fn chord_scale(&self, config: &CrossConfig) -> Result<f64> {
        let c = super::chords(self.body, &config.center, &config.rotation, &config.frame)?;
        Ok(0.5 * c.mean_length())
    }

    fn axis_chords(&self, config: &CrossConfig) -> Result<Vec<AxisChord>> {
        let p = config.center.as_slice();
        let f0 = self.body.value_at(p);
        if !(f0 < 0.0) {
            return Err(Error::NotInterior { value: f0 });
        }
        let axes = config.axes();
        (0..self.dim())
            .map(|i| {
                let u: DVector<f64> = axes.column(i).into_owned();
                let neg = -&u;
                let a = self.body.ray_root(p, u.as_slice())?;
                let b = self.body.ray_root(p, neg.as_slice())?;
                let va: Vec<f64> = p.iter().zip(u.iter()).map(|(x, ui)| x + a * ui).collect();
                let vb: Vec<f64> = p.iter().zip(u.iter()).map(|(x, ui)| x - b * ui).collect();
                let grad_a = self.body.value_and_gradient(&va).1;
                let grad_b = self.body.value_and_gradient(&vb).1;
                Ok(AxisChord { u, a, b, grad_a, grad_b, va, vb })
            })
            .collect()
    }

    /// Derivatives of the axis directions `u_i = rho e_i` with respect to
    /// the rotation chart: entry `[i][k]` is `d u_i / d omega_k`.
    fn axis_derivatives(config: &CrossConfig) -> Vec<Vec<DVector<f64>>> {
        let d = config.dim();
        let rho = config.rotation.matrix();
        let e = config.frame.vectors();
        (0..d)
            .map(|i| {
                tangent_pairs(d)
                    .map(|(a, b)| rho.column(b) * e[(a, i)] - rho.column(a) * e[(b, i)])
                    .collect()
            })
            .collect()
    }

    /// Analytic Jacobian in chart coordinates.
    pub fn jacobian(&self, config: &CrossConfig) -> Result<DMatrix<f64>> {
        check_dim(self.dim(), config.dim())?;
        let d = self.dim();
        let off = self.rotation_offset();
        let du = Self::axis_derivatives(config);
        let mut jac = DMatrix::zeros(self.residual_len(), self.chart_dim());
        match self.form {
            ResidualForm::Levelset => {
                let axes = config.axes();
                for i in 0..d {
                    let u = axes.column(i);
                    for (k, sign) in [1.0, -1.0].into_iter().enumerate() {
                        let row = 2 * i + k;
                        let v: Vec<f64> = config
                            .center
                            .iter()
                            .zip(u.iter())
                            .map(|(x, ui)| x + sign * config.scale * ui)
                            .collect();
                        let g = self.body.value_and_gradient(&v).1;
                        for c in 0..d {
                            jac[(row, c)] = g[c];
                        }
                        jac[(row, d)] = sign * g.dot(&u);
                        for (m, dum) in du[i].iter().enumerate() {
                            jac[(row, off + m)] = sign * config.scale * g.dot(dum);
                        }
                    }
                }
            }
            ResidualForm::Chord => {
                let chords = self.axis_chords(config)?;
                let n = self.chart_dim();
                // rows of d a_i and d b_i in chart coordinates
                let mut da = DMatrix::zeros(d, n);
                let mut db = DMatrix::zeros(d, n);
                for (i, ch) in chords.iter().enumerate() {
                    let ga_u = ch.grad_a.dot(&ch.u);
                    let gb_u = ch.grad_b.dot(&ch.u);
                    for c in 0..d {
                        da[(i, c)] = -ch.grad_a[c] / ga_u;
                        db[(i, c)] = ch.grad_b[c] / gb_u;
                    }
                    for (m, dum) in du[i].iter().enumerate() {
                        da[(i, off + m)] = -ch.a * ch.grad_a.dot(dum) / ga_u;
                        db[(i, off + m)] = -ch.b * ch.grad_b.dot(dum) / gb_u;
                    }
                }
                let dt = &da - &db;
                let ds = &da + &db;
                jac.rows_mut(0, d).copy_from(&dt);
                let mean = ds.row_mean();
                for i in 0..d - 1 {
                    jac.row_mut(d + i).copy_from(&(ds.row(i) - &mean));
                }
            }
        }
        Ok(jac)
    }

    /// Central-difference Jacobian in chart coordinates.
    pub fn jacobian_fd(&self, config: &CrossConfig, step: f64) -> Result<DMatrix<f64>> {
        let n = self.chart_dim();
        let mut jac = DMatrix::zeros(self.residual_len(), n);
        let mut delta = DVector::zeros(n);
        for k in 0..n {
            delta[k] = step;
            let plus = self.residual(&self.retract(config, &delta))?;
            delta[k] = -step;
            let minus = self.residual(&self.retract(config, &delta))?;
            delta[k] = 0.0;
            jac.set_column(k, &((plus - minus) / (2.0 * step)));
        }
        Ok(jac)
    }

    /// Derivative of the residual with respect to a body parameter `t`,
    /// given `df/dt` as a function of position.
    pub fn parameter_derivative(&self, config: &CrossConfig, dfdt: &dyn Fn(&[f64]) -> f64) -> Result<DVector<f64>> {
        check_dim(self.dim(), config.dim())?;
        let d = self.dim();
        match self.form {
            ResidualForm::Levelset => Ok(DVector::from_iterator(
                2 * d,
                config.vertices().iter().map(|v| dfdt(v.as_slice())),
            )),
            ResidualForm::Chord => {
                let chords = self.axis_chords(config)?;
                let mut da = DVector::zeros(d);
                let mut db = DVector::zeros(d);
                for (i, ch) in chords.iter().enumerate() {
                    da[i] = -dfdt(&ch.va) / dot(ch.grad_a.as_slice(), ch.u.as_slice());
                    db[i] = dfdt(&ch.vb) / dot(ch.grad_b.as_slice(), ch.u.as_slice());
                }
                Ok(project_chords(&(&da - &db), &(&da + &db)))
            }
        }
    }
}
