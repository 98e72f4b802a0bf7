//! JSON output with 17 significant digits and the configuration document.

use std::io;

use anyhow::{anyhow, bail, Context, Result};
use crossfit::configuration::{BaseFrame, CrossConfig, Rotation};
use crossfit::solver::Solution;
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::{json, Map, Value};

/// Pretty printer that writes every float as `d.dddddddddddddddde[-]x`.
struct Precise<'a>(PrettyFormatter<'a>);

impl Formatter for Precise<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Precise(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(String::from_utf8(out).expect("serde_json writes UTF-8"))
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn vector(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

/// `{"center", "scale", "rotation" (row-major), "frame" (only when not the standard basis)}`.
pub fn config_json(config: &CrossConfig) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("center".into(), json!(vector(&config.center)));
    m.insert("scale".into(), json!(config.scale));
    m.insert("rotation".into(), json!(rows(config.rotation.matrix())));
    if !config.frame.is_standard() {
        m.insert("frame".into(), json!(rows(config.frame.vectors())));
    }
    m
}

/// A configuration followed by the solver's diagnostics.
pub fn solution_json(s: &Solution) -> Value {
    let mut m = config_json(&s.config);
    m.insert("form".into(), json!(s.form));
    m.insert("residual_norm".into(), json!(s.residual_norm));
    m.insert("nullity".into(), json!(s.nullity));
    m.insert("iterations".into(), json!(s.iterations));
    m.insert("provenance".into(), json!(s.provenance));
    Value::Object(m)
}

fn matrix(value: &Value, field: &str, d: usize) -> Result<DMatrix<f64>> {
    let rows: Vec<Vec<f64>> =
        serde_json::from_value(value.clone()).with_context(|| format!("`{field}` must be a matrix of numbers"))?;
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        bail!("`{field}` must be {d}x{d}");
    }
    Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
}

/// Reads a configuration document. Extra fields, such as the diagnostics of
/// a solution entry, are ignored.
pub fn parse_config(value: &Value) -> Result<CrossConfig> {
    let obj = value.as_object().ok_or_else(|| anyhow!("configuration must be a JSON object"))?;
    let field = |name: &str| obj.get(name).ok_or_else(|| anyhow!("configuration is missing `{name}`"));
    let center: Vec<f64> = serde_json::from_value(field("center")?.clone()).context("`center` must be an array of numbers")?;
    let d = center.len();
    if d < 2 {
        bail!("`center` must have at least 2 entries");
    }
    let scale = field("scale")?.as_f64().ok_or_else(|| anyhow!("`scale` must be a number"))?;
    let rotation = Rotation::from_matrix(matrix(field("rotation")?, "rotation", d)?).context("`rotation`")?;
    let frame = match obj.get("frame") {
        Some(f) => BaseFrame::from_matrix(matrix(f, "frame", d)?).context("`frame`")?,
        None => BaseFrame::standard(d),
    };
    CrossConfig::new(DVector::from_vec(center), scale, rotation, frame).context("configuration")
}

/// Picks a configuration out of a document: a bare configuration, the
/// `final` entry of a continuation report, or entry `index` of a
/// `solutions` array.
pub fn select_config(doc: &Value, index: usize) -> Result<Value> {
    if let Some(list) = doc.get("solutions").and_then(Value::as_array) {
        return list
            .get(index)
            .cloned()
            .ok_or_else(|| anyhow!("report has {} solutions, index {index} requested", list.len()));
    }
    if let Some(last) = doc.get("final").filter(|v| v.is_object()) {
        return Ok(last.clone());
    }
    if doc.get("center").is_some() {
        return Ok(doc.clone());
    }
    bail!("document holds no configuration")
}
