use std::sync::Arc;

use nalgebra::DVector;

use super::ImplicitBody;
use crate::error::{check_dim, Error, Result};

const DESCENT_STEPS: usize = 1000;

/// One-parameter family `f_t = (1 - t) f_start + t f_end`, `t in [0, 1]`.
#[derive(Debug, Clone)]
pub struct HomotopyFamily {
    start: Arc<ImplicitBody>,
    end: Arc<ImplicitBody>,
}

impl HomotopyFamily {
    pub fn new(start: ImplicitBody, end: ImplicitBody) -> Result<Self> {
        check_dim(start.dim(), end.dim())?;
        Ok(HomotopyFamily {
            start: Arc::new(start),
            end: Arc::new(end),
        })
    }

    pub fn start(&self) -> &ImplicitBody {
        &self.start
    }

    pub fn end(&self) -> &ImplicitBody {
        &self.end
    }

    pub fn dim(&self) -> usize {
        self.start.dim()
    }

    /// `d f_t / d t = f_end - f_start` at `x`.
    pub fn parameter_derivative(&self, x: &[f64]) -> f64 {
        self.end.value_at(x) - self.start.value_at(x)
    }

    /// The blended body at `t`.
    ///
    /// The endpoints return clones of the start and end bodies. Elsewhere the
    /// interior point is inherited from the start body when it is still inside
    /// `f_t`, and otherwise re-derived by damped gradient descent on `f_t`.
    pub fn body_at(&self, t: f64) -> Result<ImplicitBody> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Input(format!("homotopy parameter must lie in [0, 1], got {t}")));
        }
        if t == 0.0 {
            return Ok((*self.start).clone());
        }
        if t == 1.0 {
            return Ok((*self.end).clone());
        }
        let mut body = ImplicitBody::blend(self.start.clone(), self.end.clone(), t);
        let p = self.start.interior_point();
        if body.value_at(p.as_slice()) >= 0.0 {
            let q = descend_inside(&body, p).ok_or(Error::DegenerateFamily { t })?;
            body.set_interior_point(q);
        }
        body.refresh_radii()
            .map_err(|_| Error::DegenerateFamily { t })?;
        Ok(body)
    }
}

fn descend_inside(body: &ImplicitBody, from: &DVector<f64>) -> Option<DVector<f64>> {
    let mut x = from.clone();
    let (mut fx, mut g) = body.value_and_gradient(x.as_slice());
    let mut step = 1e-2;
    for _ in 0..DESCENT_STEPS {
        if fx < 0.0 {
            return Some(x);
        }
        let gn = g.norm();
        if gn == 0.0 || !gn.is_finite() {
            return None;
        }
        let trial = &x - &g * (step / gn);
        let ft = body.value_at(trial.as_slice());
        if ft < fx {
            x = trial;
            fx = ft;
            g = body.value_and_gradient(x.as_slice()).1;
            step *= 1.5;
        } else {
            step *= 0.5;
        }
    }
    (fx < 0.0).then_some(x)
}
