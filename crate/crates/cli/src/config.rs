//! `RunConfig`: everything a run depends on, with a canonical text form
//! (`key = value` lines in a fixed order) that parses back to itself.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use qcfactor::Scheme;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Convert,
    Verify,
    Solve,
    Heat,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Command::Convert => "convert",
            Command::Verify => "verify",
            Command::Solve => "solve",
            Command::Heat => "heat",
        })
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "convert" => Ok(Command::Convert),
            "verify" => Ok(Command::Verify),
            "solve" => Ok(Command::Solve),
            "heat" => Ok(Command::Heat),
            _ => Err(format!("unknown command `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    /// Catalog id (verify), boundary data (solve), `heat-kernel` (heat) or
    /// `mu:<re>,<im>` / `tensor:<a11>,<a12>,<a22>` (convert).
    pub problem: String,
    pub tensor: Option<String>,
    pub nu: Option<String>,
    pub q: Option<f64>,
    pub lambda: Option<f64>,
    pub r: Option<f64>,
    pub f: Option<String>,
    pub a: Option<f64>,
    pub times: Vec<f64>,
    pub h: Vec<f64>,
    pub margin: Option<f64>,
    pub rho: f64,
    pub center: [f64; 2],
    pub scheme: Scheme,
    pub relaxation: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub bound: Option<f64>,
    pub out_json: Option<PathBuf>,
    pub out_csv: Option<PathBuf>,
    pub out_u_csv: Option<PathBuf>,
    pub seed: u64,
}

impl RunConfig {
    pub fn new(command: Command, problem: impl Into<String>) -> Self {
        RunConfig {
            command,
            problem: problem.into(),
            tensor: None,
            nu: None,
            q: None,
            lambda: None,
            r: None,
            f: None,
            a: None,
            times: Vec::new(),
            h: Vec::new(),
            margin: None,
            rho: 1.0,
            center: [0.0, 0.0],
            scheme: Scheme::Picard,
            relaxation: 0.8,
            max_iterations: 5000,
            tolerance: 1e-6,
            bound: None,
            out_json: None,
            out_csv: None,
            out_u_csv: None,
            seed: 0,
        }
    }

    /// The key/value pairs in canonical order.
    pub fn entries(&self) -> Vec<(&'static str, Value)> {
        let text = |s: &Option<String>| s.clone().map_or(Value::None, Value::Text);
        let real = |x: Option<f64>| x.map_or(Value::None, Value::Real);
        let path = |p: &Option<PathBuf>| p.as_ref().map_or(Value::None, |p| Value::Text(p.display().to_string()));
        vec![
            ("command", Value::Text(self.command.to_string())),
            ("problem", Value::Text(self.problem.clone())),
            ("tensor", text(&self.tensor)),
            ("nu", text(&self.nu)),
            ("q", real(self.q)),
            ("lambda", real(self.lambda)),
            ("r", real(self.r)),
            ("f", text(&self.f)),
            ("a", real(self.a)),
            ("times", Value::Reals(self.times.clone())),
            ("h", Value::Reals(self.h.clone())),
            ("margin", real(self.margin)),
            ("rho", Value::Real(self.rho)),
            ("center", Value::Reals(self.center.to_vec())),
            ("scheme", Value::Text(self.scheme.to_string())),
            ("relaxation", Value::Real(self.relaxation)),
            ("max_iterations", Value::Int(self.max_iterations as u64)),
            ("tolerance", Value::Real(self.tolerance)),
            ("bound", real(self.bound)),
            ("out_json", path(&self.out_json)),
            ("out_csv", path(&self.out_csv)),
            ("out_u_csv", path(&self.out_u_csv)),
            ("seed", Value::Int(self.seed)),
        ]
    }

    /// The disk as solver options see it.
    pub fn solve_options(&self, h: f64) -> qcfactor::SolveOptions {
        qcfactor::SolveOptions {
            scheme: self.scheme,
            relaxation: self.relaxation,
            max_iterations: self.max_iterations,
            tolerance: self.tolerance,
            h,
            rho: self.rho,
            center: self.center,
        }
    }
}

/// A config value. `None` prints as `-`.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    None,
    Text(String),
    Real(f64),
    Reals(Vec<f64>),
    Int(u64),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::None => f.write_str("-"),
            Value::Text(s) => f.write_str(s),
            // `Display` for f64 is the shortest text that parses back exactly.
            Value::Real(x) => write!(f, "{x}"),
            Value::Reals(xs) => {
                let parts: Vec<String> = xs.iter().map(|x| x.to_string()).collect();
                f.write_str(&parts.join(","))
            }
            Value::Int(n) => write!(f, "{n}"),
        }
    }
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.entries() {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64, String> {
    v.parse().map_err(|_| format!("{key}: `{v}` is not a number"))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>, String> {
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|p| parse_f64(key, p)).collect()
}

fn opt(v: &str) -> Option<&str> {
    (v != "-").then_some(v)
}

impl FromStr for RunConfig {
    type Err = String;

    fn from_str(text: &str) -> Result<Self, String> {
        let mut pairs = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| format!("line {}: expected `key = value`", n + 1))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        let get = |key: &str| -> Result<&str, String> {
            let mut hits = pairs.iter().filter(|(k, _)| k == key);
            let v = hits.next().ok_or_else(|| format!("missing key `{key}`"))?;
            if hits.next().is_some() {
                return Err(format!("duplicate key `{key}`"));
            }
            Ok(v.1.as_str())
        };
        let mut cfg = RunConfig::new(get("command")?.parse()?, get("problem")?);
        let known: Vec<&str> = cfg.entries().iter().map(|e| e.0).collect();
        if let Some((k, _)) = pairs.iter().find(|(k, _)| !known.contains(&k.as_str())) {
            return Err(format!("unknown key `{k}`"));
        }
        let real = |key: &str| -> Result<Option<f64>, String> { opt(get(key)?).map(|v| parse_f64(key, v)).transpose() };
        let text = |key: &str| -> Result<Option<String>, String> { Ok(opt(get(key)?).map(str::to_string)) };
        cfg.tensor = text("tensor")?;
        cfg.nu = text("nu")?;
        cfg.q = real("q")?;
        cfg.lambda = real("lambda")?;
        cfg.r = real("r")?;
        cfg.f = text("f")?;
        cfg.a = real("a")?;
        cfg.times = parse_list("times", get("times")?)?;
        cfg.h = parse_list("h", get("h")?)?;
        cfg.margin = real("margin")?;
        cfg.rho = parse_f64("rho", get("rho")?)?;
        cfg.center = match parse_list("center", get("center")?)?.as_slice() {
            &[x, y] => [x, y],
            _ => return Err("center: expected `x,y`".into()),
        };
        cfg.scheme = get("scheme")?.parse().map_err(|e: qcfactor::Error| e.to_string())?;
        cfg.relaxation = parse_f64("relaxation", get("relaxation")?)?;
        cfg.max_iterations = get("max_iterations")?.parse().map_err(|_| "max_iterations: expected an integer")?;
        cfg.tolerance = parse_f64("tolerance", get("tolerance")?)?;
        cfg.bound = real("bound")?;
        cfg.out_json = text("out_json")?.map(PathBuf::from);
        cfg.out_csv = text("out_csv")?.map(PathBuf::from);
        cfg.out_u_csv = text("out_u_csv")?.map(PathBuf::from);
        cfg.seed = get("seed")?.parse().map_err(|_| "seed: expected an integer")?;
        Ok(cfg)
    }
}
