//! Command execution from a manifest. Replay goes through the same path.

use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use crossfit::bodies::{HomotopyFamily, ImplicitBody};
use crossfit::configuration::{residual_levelset, BaseFrame, CrossConfig};
use crossfit::oracle::{brute_force_search, refine_candidates};
use crossfit::solver::{
    continue_homotopy, gauss_newton, multistart_solve_detailed, sweep_family, ContinuationTrace, Solution,
    SolveError,
};
use crossfit::verify::{check_config_with, check_equivariance, VerifyOptions};
use serde_json::{json, Map, Value};

use crate::export::to_obj;
use crate::json::{config_json, parse_config, solution_json, to_string};
use crate::manifest::{ExportFormat, RunManifest};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INPUT: u8 = 1;
pub const EXIT_NONE: u8 = 2;
pub const EXIT_DEGENERATE: u8 = 3;

const EQUIVARIANCE_TRIALS: usize = 20;

/// Text to print and the process exit code.
#[derive(Debug)]
pub struct Outcome {
    pub text: String,
    pub exit: u8,
}

/// Report body and exit code of one command.
struct Report {
    body: Map<String, Value>,
    exit: u8,
}

impl Report {
    fn new(status: &str, exit: u8) -> Self {
        let mut body = Map::new();
        body.insert("status".into(), json!(status));
        Report { body, exit }
    }

    fn with(mut self, key: &str, value: Value) -> Self {
        self.body.insert(key.into(), value);
        self
    }
}

fn body(manifest: &RunManifest, i: usize) -> Result<ImplicitBody> {
    let doc = manifest
        .bodies
        .get(i)
        .ok_or_else(|| anyhow!("`{}` needs {} body document(s)", manifest.command, i + 1))?;
    ImplicitBody::from_json(doc).with_context(|| format!("body {}", i + 1))
}

fn input_config(manifest: &RunManifest) -> Result<Option<CrossConfig>> {
    manifest.config.as_ref().map(parse_config).transpose()
}

fn verify_opts(manifest: &RunManifest) -> VerifyOptions {
    VerifyOptions {
        rank_threshold: manifest.options.solve.rank_threshold,
        ..VerifyOptions::default()
    }
}

/// Exit code for a solver failure on valid input.
fn failure_exit(e: &SolveError) -> u8 {
    match e {
        SolveError::Geometry(_) => EXIT_INPUT,
        SolveError::Degeneration { .. } => EXIT_DEGENERATE,
        _ => EXIT_NONE,
    }
}

fn failure_status(e: &SolveError) -> &'static str {
    match e {
        SolveError::Geometry(_) => "input_error",
        SolveError::NonConvergence { .. } => "no_convergence",
        SolveError::Degeneration { .. } => "degenerated",
        SolveError::InteriorLost { .. } => "interior_lost",
        SolveError::Stuck { .. } => "stuck",
    }
}

/// Runs the command and stamps the wall time into the manifest copy that
/// heads the report.
pub fn run(manifest: &RunManifest) -> Result<Outcome> {
    manifest.options.solve.validate()?;
    let start = Instant::now();
    if manifest.command == "export" && manifest.options.format == ExportFormat::Obj {
        let config = input_config(manifest)?.ok_or_else(|| anyhow!("export needs a configuration"))?;
        return Ok(Outcome {
            text: to_obj(&body(manifest, 0)?, &config)?,
            exit: EXIT_OK,
        });
    }
    let report = match manifest.command.as_str() {
        "solve" => solve(manifest)?,
        "continue" => continuation(manifest)?,
        "sweep" => sweep(manifest)?,
        "oracle" => oracle(manifest)?,
        "verify" => verify(manifest)?,
        "export" => export_json(manifest)?,
        other => bail!("unknown command `{other}`"),
    };
    let mut stamped = manifest.clone();
    stamped.wall_time_s = start.elapsed().as_secs_f64();
    let mut doc = Map::new();
    doc.insert("manifest".into(), serde_json::to_value(&stamped)?);
    doc.extend(report.body);
    Ok(Outcome {
        text: to_string(&doc)?,
        exit: report.exit,
    })
}

fn solve(manifest: &RunManifest) -> Result<Report> {
    let body = body(manifest, 0)?;
    let frame = BaseFrame::standard(body.dim());
    let out = multistart_solve_detailed(&body, &frame, manifest.options.form, &manifest.options.solve)?;
    let seeds: Vec<Value> = out
        .seeds
        .iter()
        .map(|s| {
            json!({
                "seed": s.seed,
                "converged": s.converged,
                "iterations": s.iterations,
                "residual_norm": s.residual_norm,
                "error": s.error,
            })
        })
        .collect();
    let (status, exit) = if out.solutions.is_empty() {
        ("no_solution", EXIT_NONE)
    } else {
        ("ok", EXIT_OK)
    };
    Ok(Report::new(status, exit)
        .with("dim", json!(body.dim()))
        .with("guarantee", json!(out.guarantee))
        .with("converged_count", json!(out.converged_count()))
        .with("seed_count", json!(out.seeds.len()))
        .with("seeds", json!(seeds))
        .with("solutions", json!(out.solutions.iter().map(solution_json).collect::<Vec<_>>())))
}

fn trace_json(trace: &ContinuationTrace) -> Value {
    let s = &trace.stats;
    json!({
        "samples": trace.samples.iter().map(|x| json!({"t": x.t, "solution": solution_json(&x.solution)})).collect::<Vec<_>>(),
        "stats": {
            "accepted": s.accepted,
            "rejected": s.rejected,
            "min_dt": s.min_dt,
            "max_dt": s.max_dt,
            "corrector_iterations": s.corrector_iterations,
            "branch_selected": s.branch_selected,
        },
    })
}

fn continuation(manifest: &RunManifest) -> Result<Report> {
    let start_body = body(manifest, 0)?;
    let end_body = body(manifest, 1)?;
    if start_body.dim() != end_body.dim() {
        bail!("dimension mismatch: start body has d = {}, end body has d = {}", start_body.dim(), end_body.dim());
    }
    let family = HomotopyFamily::new(start_body.clone(), end_body.clone())?;
    let opts = &manifest.options.solve;
    let frame = BaseFrame::standard(start_body.dim());
    let seeded = match input_config(manifest)? {
        Some(c) => gauss_newton(&start_body, &c, manifest.options.form, opts).map(|s| vec![s]),
        None => multistart_solve_detailed(&start_body, &frame, manifest.options.form, opts).map(|o| o.solutions),
    };
    let start = match seeded {
        Ok(list) if !list.is_empty() => list.into_iter().next().unwrap(),
        Ok(_) => return Ok(Report::new("no_start_solution", EXIT_NONE)),
        Err(SolveError::Geometry(e)) => return Err(e.into()),
        Err(e) => return Ok(Report::new("no_start_solution", EXIT_NONE).with("error", json!(e.to_string()))),
    };
    let report = match continue_homotopy(&family, &start, opts) {
        Ok(trace) => {
            let last = trace.last().expect("trace holds the start sample").solution.clone();
            let audit = check_config_with(&end_body, &last.config, manifest.options.verify_tol, &verify_opts(manifest));
            Report::new("complete", EXIT_OK)
                .with("trace", trace_json(&trace))
                .with("final", solution_json(&last))
                .with("final_verification", serde_json::to_value(audit)?)
        }
        Err(SolveError::Geometry(e)) => return Err(e.into()),
        Err(e) => {
            let trace = match &e {
                SolveError::Degeneration { trace, .. } => trace.as_deref().cloned(),
                SolveError::Stuck { trace, .. } => Some((**trace).clone()),
                _ => None,
            };
            let mut r = Report::new(failure_status(&e), failure_exit(&e)).with("error", json!(e.to_string()));
            if let Some(t) = trace {
                r = r.with("trace", trace_json(&t));
            }
            r.with("final", Value::Null)
        }
    };
    Ok(report.with("start", solution_json(&start)))
}

fn sweep(manifest: &RunManifest) -> Result<Report> {
    let body = body(manifest, 0)?;
    let opts = &manifest.options.solve;
    let start: Solution = match input_config(manifest)? {
        Some(c) => match gauss_newton(&body, &c, manifest.options.form, opts) {
            Ok(s) => s,
            Err(SolveError::Geometry(e)) => return Err(e.into()),
            Err(e) => return Ok(Report::new(failure_status(&e), failure_exit(&e)).with("error", json!(e.to_string()))),
        },
        None => {
            let frame = BaseFrame::standard(body.dim());
            match multistart_solve_detailed(&body, &frame, manifest.options.form, opts)?.solutions.into_iter().next() {
                Some(s) => s,
                None => return Ok(Report::new("no_start_solution", EXIT_NONE)),
            }
        }
    };
    let out = sweep_family(&body, &start, manifest.options.steps, manifest.options.step_size, opts)?;
    Ok(Report::new("ok", EXIT_OK)
        .with("truncated", json!(out.truncated))
        .with("warning", json!(out.warning))
        .with("count", json!(out.solutions.len()))
        .with("solutions", json!(out.solutions.iter().map(solution_json).collect::<Vec<_>>())))
}

fn oracle(manifest: &RunManifest) -> Result<Report> {
    let body = body(manifest, 0)?;
    let grid = &manifest.options.grid;
    let candidates = brute_force_search(&body, &BaseFrame::standard(body.dim()), grid)?;
    let refined = refine_candidates(&body, &candidates, &manifest.options.solve);
    let listed: Vec<Value> = candidates
        .iter()
        .map(|c| {
            let mut m = config_json(&c.config);
            m.insert("residual_inf".into(), json!(c.residual_inf));
            m.insert("euler".into(), json!(c.euler));
            m.insert("index".into(), json!(c.index));
            Value::Object(m)
        })
        .collect();
    let (status, exit) = if refined.solutions.is_empty() {
        ("no_solution", EXIT_NONE)
    } else {
        ("ok", EXIT_OK)
    };
    Ok(Report::new(status, exit)
        .with("grid_points", json!(grid.points() as u64))
        .with("candidates", json!(listed))
        .with(
            "refinement",
            json!({"attempted": refined.attempted, "converged": refined.converged, "dropped": refined.dropped}),
        )
        .with("solutions", json!(refined.solutions.iter().map(solution_json).collect::<Vec<_>>())))
}

fn verify(manifest: &RunManifest) -> Result<Report> {
    let body = body(manifest, 0)?;
    let config = input_config(manifest)?.ok_or_else(|| anyhow!("verify needs a configuration"))?;
    if config.dim() != body.dim() {
        bail!("dimension mismatch: body has d = {}, configuration has d = {}", body.dim(), config.dim());
    }
    let audit = check_config_with(&body, &config, manifest.options.verify_tol, &verify_opts(manifest));
    let equivariant = config
        .frame
        .is_standard()
        .then(|| check_equivariance(&body, &config, EQUIVARIANCE_TRIALS));
    let (status, exit) = if audit.passed {
        ("passed", EXIT_OK)
    } else {
        ("failed", EXIT_NONE)
    };
    Ok(Report::new(status, exit)
        .with("verification", serde_json::to_value(audit)?)
        .with("equivariant", json!(equivariant)))
}

fn export_json(manifest: &RunManifest) -> Result<Report> {
    let body = body(manifest, 0)?;
    let config = input_config(manifest)?.ok_or_else(|| anyhow!("export needs a configuration"))?;
    if config.dim() != body.dim() {
        bail!("dimension mismatch: body has d = {}, configuration has d = {}", body.dim(), config.dim());
    }
    let defect = residual_levelset(&body, &config)?.values.amax();
    let vertices: Vec<Vec<f64>> = config.vertices().iter().map(|v| v.iter().copied().collect()).collect();
    Ok(Report::new("ok", EXIT_OK)
        .with("dim", json!(config.dim()))
        .with("config", Value::Object(config_json(&config)))
        .with("vertices", json!(vertices))
        .with("max_surface_defect", json!(defect)))
}

/// Parses a report produced by [`run`] and executes its manifest again.
pub fn replay(report: &str) -> Result<Outcome> {
    let doc: Value = serde_json::from_str(report).context("report is not valid JSON")?;
    let manifest = doc.get("manifest").ok_or_else(|| anyhow!("report carries no manifest"))?;
    let manifest: RunManifest = serde_json::from_value(manifest.clone()).context("malformed manifest")?;
    run(&manifest)
}
