//! JSON reports `{command, config, results[{id, h, linf, l2, order, pass}], ...}`.
//! Every float is written with 17 significant digits.

use std::io::Write;
use std::path::Path;

use serde_json::{Map, Value};

use crate::config::{self, RunConfig};

/// A float as a JSON number with 17 significant digits; `null` if not finite.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        serde_json::from_str(&format!("{x:.16e}")).expect("exponent notation is valid JSON")
    } else {
        Value::Null
    }
}

pub fn opt_num(x: Option<f64>) -> Value {
    x.map_or(Value::Null, num)
}

pub fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().copied().map(num).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub id: String,
    pub h: Option<f64>,
    pub linf: Option<f64>,
    pub l2: Option<f64>,
    pub order: Option<f64>,
    pub pass: bool,
}

impl Row {
    fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("id".into(), Value::String(self.id.clone()));
        m.insert("h".into(), opt_num(self.h));
        m.insert("linf".into(), opt_num(self.linf));
        m.insert("l2".into(), opt_num(self.l2));
        m.insert("order".into(), opt_num(self.order));
        m.insert("pass".into(), Value::Bool(self.pass));
        Value::Object(m)
    }

    /// One human-readable line.
    pub fn summary(&self) -> String {
        let f = |x: Option<f64>| x.map_or("-".to_string(), |x| format!("{x:.4e}"));
        format!(
            "{} {} h={} linf={} l2={} order={}",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            f(self.h),
            f(self.linf),
            f(self.l2),
            self.order.map_or("-".to_string(), |o| format!("{o:.3}")),
        )
    }
}

fn config_json(cfg: &RunConfig) -> Value {
    let mut m = Map::new();
    for (k, v) in cfg.entries() {
        let v = match v {
            config::Value::None => Value::Null,
            config::Value::Text(s) => Value::String(s),
            config::Value::Real(x) => num(x),
            config::Value::Reals(xs) => nums(&xs),
            config::Value::Int(n) => Value::from(n),
        };
        m.insert(k.into(), v);
    }
    Value::Object(m)
}

pub struct Report<'a> {
    pub config: &'a RunConfig,
    pub results: Vec<Row>,
    /// Command-specific sections appended after `results`.
    pub extra: Vec<(&'static str, Value)>,
}

impl Report<'_> {
    pub fn to_json(&self) -> String {
        let mut m = Map::new();
        m.insert("command".into(), Value::String(self.config.command.to_string()));
        m.insert("config".into(), config_json(self.config));
        m.insert("results".into(), Value::Array(self.results.iter().map(Row::to_json).collect()));
        for (k, v) in &self.extra {
            m.insert((*k).into(), v.clone());
        }
        let mut s = serde_json::to_string_pretty(&Value::Object(m)).expect("report serializes");
        s.push('\n');
        s
    }

    /// To the configured file (with a summary on stdout) or to stdout.
    pub fn emit(&self) -> std::io::Result<()> {
        match &self.config.out_json {
            Some(path) => {
                write_file(path, self.to_json().as_bytes())?;
                let mut out = std::io::stdout().lock();
                for r in &self.results {
                    writeln!(out, "{}", r.summary())?;
                }
                Ok(())
            }
            None => std::io::stdout().lock().write_all(self.to_json().as_bytes()),
        }
    }
}

pub fn write_file(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    std::fs::write(path, bytes).map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Command;

    #[test]
    fn seventeen_digits() {
        assert_eq!(num(0.1).to_string(), "1.0000000000000001e-1");
        assert_eq!(num(f64::NAN), Value::Null);
        for x in [0.1, -2.0, 1.0 / 3.0, 6.02e23, -1e-300] {
            let text = num(x).to_string();
            let mantissa = text.split('e').next().unwrap();
            assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17, "{text}");
            assert_eq!(text.parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn report_schema() {
        let cfg = RunConfig::new(Command::Verify, "lb-disk");
        let report = Report {
            config: &cfg,
            results: vec![Row { id: "x".into(), h: Some(0.5), linf: Some(1.0), l2: None, order: None, pass: true }],
            extra: vec![],
        };
        let v: Value = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(v["command"], "verify");
        assert_eq!(v["config"]["problem"], "lb-disk");
        let row = &v["results"][0];
        for key in ["id", "h", "linf", "l2", "order", "pass"] {
            assert!(row.get(key).is_some(), "missing {key}");
        }
        assert_eq!(row["l2"], Value::Null);
    }
}
