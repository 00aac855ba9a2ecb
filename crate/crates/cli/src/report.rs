use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use mera_kit::{Tensor, C64};
use serde::Serialize;
use serde_json::{json, Value};

/// Machine-readable record of one invocation.
#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: String,
    pub inputs: Value,
    pub results: Value,
    /// Wall-clock seconds per phase.
    pub timings: BTreeMap<String, f64>,
    pub tolerances: BTreeMap<String, f64>,
    /// `None` for commands that define no check.
    pub pass: Option<bool>,
}

impl RunReport {
    pub fn new(command: &str, inputs: &impl Serialize) -> Self {
        RunReport {
            command: command.to_string(),
            inputs: serde_json::to_value(inputs).unwrap_or(Value::Null),
            results: Value::Null,
            timings: BTreeMap::new(),
            tolerances: BTreeMap::new(),
            pass: None,
        }
    }

    /// Runs `f` and records its duration under `phase`.
    pub fn timed<T>(&mut self, phase: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        *self.timings.entry(phase.to_string()).or_default() += start.elapsed().as_secs_f64();
        out
    }

    pub fn tolerance(&mut self, name: &str, value: f64) {
        self.tolerances.insert(name.to_string(), value);
    }

    /// Folds one check into the overall verdict.
    pub fn check(&mut self, ok: bool) {
        self.pass = Some(self.pass.unwrap_or(true) && ok);
    }

    pub fn emit(&self, out: Option<&Path>) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        match out {
            Some(path) => std::fs::write(path, text + "\n"),
            None => {
                println!("{text}");
                Ok(())
            }
        }
    }
}

/// `{value, tolerance, pass}` entry for a checked quantity.
pub fn checked(value: f64, tolerance: f64) -> (Value, bool) {
    let pass = value <= tolerance;
    (json!({ "value": value, "tolerance": tolerance, "pass": pass }), pass)
}

pub fn complex(z: C64) -> Value {
    json!([z.re, z.im])
}

/// Row-major nested `[re, im]` pairs of a matrix.
pub fn matrix(t: &Tensor) -> Value {
    let (rows, cols) = (t.shape()[0], t.shape()[1]);
    let rows: Vec<Value> = (0..rows)
        .map(|i| Value::Array((0..cols).map(|j| complex(t.get(&[i, j]))).collect()))
        .collect();
    Value::Array(rows)
}
