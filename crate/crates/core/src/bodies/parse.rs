//! JSON body documents.
//!
//! ```json
//! {"kind": "superellipsoid", "semi_axes": [1, 1, 1], "exponent": 4}
//! ```

use serde::Deserialize;

use super::{Halfspace, ImplicitBody, MonomialTerm};
use crate::error::{Error, Result};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBody {
    kind: String,
    dim: Option<i64>,
    radius: Option<f64>,
    semi_axes: Option<Vec<f64>>,
    exponent: Option<i64>,
    halfspaces: Option<Vec<RawHalfspace>>,
    sharpness: Option<f64>,
    coeffs: Option<Vec<RawCoeff>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHalfspace {
    normal: Vec<f64>,
    offset: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCoeff {
    monomial: Vec<u32>,
    c: f64,
}

fn perr(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.into(),
        message: message.into(),
    }
}

/// Parses one body document.
pub fn parse_body(text: &str) -> Result<ImplicitBody> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawBody = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        perr(path, e.into_inner().to_string())
    })?;
    build(raw)
}

impl ImplicitBody {
    /// Parses a body from an already-decoded JSON value.
    pub fn from_json(value: &serde_json::Value) -> Result<ImplicitBody> {
        parse_body(&value.to_string())
    }
}

fn build(raw: RawBody) -> Result<ImplicitBody> {
    let allowed: &[&str] = match raw.kind.as_str() {
        "ball" => &["dim", "radius"],
        "ellipsoid" => &["dim", "semi_axes"],
        "superellipsoid" => &["dim", "semi_axes", "exponent"],
        "smoothed_polytope" => &["dim", "halfspaces", "sharpness"],
        "perturbed_sphere" => &["dim", "coeffs"],
        other => return Err(perr("kind", format!("unknown body kind `{other}`"))),
    };
    let present = [
        ("dim", raw.dim.is_some()),
        ("radius", raw.radius.is_some()),
        ("semi_axes", raw.semi_axes.is_some()),
        ("exponent", raw.exponent.is_some()),
        ("halfspaces", raw.halfspaces.is_some()),
        ("sharpness", raw.sharpness.is_some()),
        ("coeffs", raw.coeffs.is_some()),
    ];
    for (name, is_set) in present {
        if is_set && !allowed.contains(&name) {
            return Err(perr(name, format!("field not used by kind `{}`", raw.kind)));
        }
    }
    let dim = match raw.dim {
        Some(d) if d < 2 => return Err(perr("dim", format!("dimension must be at least 2, got {d}"))),
        Some(d) => Some(d as usize),
        None => None,
    };
    let check_implied = |implied: usize, field: &str| -> Result<usize> {
        match dim {
            Some(d) if d != implied => Err(perr(
                "dim",
                format!("dim {d} disagrees with `{field}` of length {implied}"),
            )),
            _ => Ok(implied),
        }
    };
    fn field_err(field: &'static str) -> impl Fn(Error) -> Error {
        move |e| perr(field, e.to_string())
    }

    match raw.kind.as_str() {
        "ball" => {
            let d = dim.ok_or_else(|| perr("dim", "ball requires `dim`"))?;
            ImplicitBody::ball(d, raw.radius.unwrap_or(1.0)).map_err(field_err("radius"))
        }
        "ellipsoid" | "superellipsoid" => {
            let axes = raw.semi_axes.ok_or_else(|| perr("semi_axes", "missing `semi_axes`"))?;
            check_implied(axes.len(), "semi_axes")?;
            if raw.kind == "ellipsoid" {
                return ImplicitBody::ellipsoid(axes).map_err(field_err("semi_axes"));
            }
            let exponent = raw.exponent.ok_or_else(|| perr("exponent", "missing `exponent`"))?;
            if exponent < 2 || exponent % 2 != 0 {
                return Err(perr("exponent", format!("exponent must be even and >= 2, got {exponent}")));
            }
            ImplicitBody::superellipsoid(axes, exponent as u32).map_err(field_err("semi_axes"))
        }
        "smoothed_polytope" => {
            let hs = raw.halfspaces.ok_or_else(|| perr("halfspaces", "missing `halfspaces`"))?;
            let sharpness = raw.sharpness.ok_or_else(|| perr("sharpness", "missing `sharpness`"))?;
            if !(sharpness > 0.0 && sharpness.is_finite()) {
                return Err(perr("sharpness", format!("sharpness must be > 0, got {sharpness}")));
            }
            let d = hs
                .first()
                .map(|h| h.normal.len())
                .ok_or_else(|| perr("halfspaces", "empty halfspace list"))?;
            check_implied(d, "halfspaces[0].normal")?;
            for (i, h) in hs.iter().enumerate() {
                if h.normal.len() != d {
                    return Err(perr(
                        format!("halfspaces[{i}].normal"),
                        format!("expected {d} components, got {}", h.normal.len()),
                    ));
                }
            }
            let hs = hs.into_iter().map(|h| Halfspace::new(h.normal, h.offset)).collect();
            ImplicitBody::smoothed_polytope(hs, sharpness).map_err(field_err("halfspaces"))
        }
        "perturbed_sphere" => {
            let coeffs = raw.coeffs.unwrap_or_default();
            let d = match (coeffs.first(), dim) {
                (Some(c), _) => check_implied(c.monomial.len(), "coeffs[0].monomial")?,
                (None, Some(d)) => d,
                (None, None) => return Err(perr("dim", "perturbed sphere without coeffs requires `dim`")),
            };
            for (i, c) in coeffs.iter().enumerate() {
                if c.monomial.len() != d {
                    return Err(perr(
                        format!("coeffs[{i}].monomial"),
                        format!("expected {d} exponents, got {}", c.monomial.len()),
                    ));
                }
            }
            let terms = coeffs.into_iter().map(|c| MonomialTerm::new(c.monomial, c.c)).collect();
            ImplicitBody::perturbed_sphere(d, terms).map_err(field_err("coeffs"))
        }
        _ => unreachable!(),
    }
}
