//! Everything needed to rerun a command.

use crossfit::configuration::ResidualForm;
use crossfit::oracle::GridSpec;
use crossfit::solver::SolveOptions;
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ExportFormat {
    Json,
    Obj,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunOptions {
    pub form: ResidualForm,
    pub solve: SolveOptions,
    /// Tolerance for the surface defect in audits.
    pub verify_tol: f64,
    pub steps: usize,
    pub step_size: f64,
    pub grid: GridSpec,
    pub format: ExportFormat,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            form: ResidualForm::Levelset,
            solve: SolveOptions::default(),
            verify_tol: 1e-9,
            steps: 50,
            step_size: 0.05,
            grid: GridSpec::default(),
            format: ExportFormat::Json,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub command: String,
    /// Body documents as read, in argument order.
    pub bodies: Vec<Value>,
    /// Input configuration, for commands that take one.
    pub config: Option<Value>,
    pub options: RunOptions,
    pub seed: u64,
    pub version: String,
    pub wall_time_s: f64,
}

impl RunManifest {
    pub fn new(command: &str, bodies: Vec<Value>, config: Option<Value>, options: RunOptions) -> Self {
        RunManifest {
            command: command.into(),
            bodies,
            config,
            seed: options.solve.seed,
            options,
            version: env!("CARGO_PKG_VERSION").into(),
            wall_time_s: 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn round_trips_through_json() {
        let mut options = RunOptions::default();
        options.solve.seed = 12345678901234;
        options.solve.lambda_min = Some(0.1 + 0.2);
        options.step_size = 1.0 / 3.0;
        let mut m = RunManifest::new(
            "verify",
            vec![json!({"kind": "ellipsoid", "semi_axes": [1.0, 1.0, 2.0 / 3.0]})],
            Some(json!({"center": [0.1, 0.0, 0.0], "scale": 0.7, "rotation": [[1, 0, 0], [0, 1, 0], [0, 0, 1]]})),
            options,
        );
        m.wall_time_s = 0.123456789;
        let text = crate::json::to_string(&m).unwrap();
        let back: RunManifest = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(crate::json::to_string(&back).unwrap(), text);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let mut v = serde_json::to_value(RunManifest::new("solve", vec![], None, RunOptions::default())).unwrap();
        v["extra"] = json!(1);
        assert!(serde_json::from_value::<RunManifest>(v).is_err());
    }
}
