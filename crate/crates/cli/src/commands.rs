use std::f64::consts::{FRAC_1_SQRT_2, TAU};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use qcfactor::exact::{
    dead_zone_entry, halfplane_entry, lb_annulus_entry, lb_disk_entry, lb_punctured_disk_entry, ExactSolution,
    HalfplaneVariant, HeatKernel, CATALOG_ANNULUS_R,
};
use qcfactor::verify::{heat_residual, SingularSet};
use qcfactor::{
    convergence_order, ellipticity_constant, factorize, mu_from_tensor, strong_residual, tensor_from_mu,
    ConductivityTensor, DomainDescriptor, GridSpec, Nonlinearity, Rect, ResidualReport, ScalarField, SolveStatus,
    StructureTag, TensorEntries,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{Map, Value};

use crate::config::RunConfig;
use crate::grammar;
use crate::report::{num, nums, write_file, Report, Row};

/// Why a run did not pass. Maps onto the exit codes 1, 2 and 3.
#[derive(Debug)]
pub enum Failure {
    /// Bad input: unknown ids, malformed specs, out-of-range parameters.
    Usage(String),
    /// A numerical or I/O error while running.
    Runtime(String),
    Diverged(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Runtime(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Diverged(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Runtime(m) | Failure::Diverged(m) => m,
        }
    }
}

fn usage(e: impl ToString) -> Failure {
    Failure::Usage(e.to_string())
}

fn runtime(e: impl ToString) -> Failure {
    Failure::Runtime(e.to_string())
}

/// Bad input versus a failure of the computation itself.
fn classify(e: qcfactor::Error) -> Failure {
    use qcfactor::Error as E;
    match e {
        E::InvalidTensor { .. }
        | E::DegenerateDilatation { .. }
        | E::InvalidParameter(_)
        | E::UnsupportedStructure(_)
        | E::InverseUnavailable(_)
        | E::OutsideDomain { .. }
        | E::AgreementFailure { .. } => usage(e),
        E::Diverged { .. } => Failure::Diverged(e.to_string()),
        _ => runtime(e),
    }
}

/// `Ok(true)` iff every check passed.
pub type Outcome = Result<bool, Failure>;

pub const DEFAULT_HS: [f64; 3] = [1.0 / 64.0, 1.0 / 128.0, 1.0 / 256.0];
const ORDER_RANGE: (f64, f64) = (1.8, 2.2);

fn order_ok(order: f64) -> bool {
    (ORDER_RANGE.0..=ORDER_RANGE.1).contains(&order)
}

fn warn(msg: &str) {
    eprintln!("warning: {msg}");
}

fn f17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn run(cfg: &RunConfig) -> Outcome {
    match cfg.command {
        crate::config::Command::Convert => convert(cfg),
        crate::config::Command::Verify => verify(cfg),
        crate::config::Command::Solve => solve(cfg),
        crate::config::Command::Heat => heat(cfg),
    }
}

// ---------------------------------------------------------------- convert

fn convert(cfg: &RunConfig) -> Outcome {
    let (mu, a, roundtrip) = match cfg.problem.split_once(':') {
        Some(("mu", v)) => {
            let [re, im]: [f64; 2] =
                grammar::reals(v)?.try_into().map_err(|_| usage("mu: expected two numbers"))?;
            let mu = Complex64::new(re, im);
            let a = tensor_from_mu(mu).map_err(usage)?;
            let back = mu_from_tensor(&a).map_err(runtime)?;
            (mu, a, (back - mu).norm())
        }
        Some(("tensor", v)) => {
            let [a11, a12, a22]: [f64; 3] =
                grammar::reals(v)?.try_into().map_err(|_| usage("tensor: expected three numbers"))?;
            let a = TensorEntries::new(a11, a12, a22);
            a.validate(Complex64::new(0.0, 0.0)).map_err(usage)?;
            let mu = mu_from_tensor(&a).map_err(usage)?;
            let back = tensor_from_mu(mu).map_err(runtime)?;
            (mu, a, back.max_abs_diff(&a))
        }
        _ => return Err(usage(format!("convert needs mu:<re>,<im> or tensor:<a11>,<a12>,<a22>, got `{}`", cfg.problem))),
    };
    let k = ellipticity_constant(mu).map_err(usage)?;
    println!("mu  = {} {}", f17(mu.re), f17(mu.im));
    println!("a11 = {}", f17(a.a11));
    println!("a12 = {}", f17(a.a12));
    println!("a22 = {}", f17(a.a22));
    println!("det = {}", f17(a.det()));
    println!("K   = {}", f17(k));
    println!("round-trip error = {}", f17(roundtrip));
    if let Some(path) = &cfg.out_json {
        let report = Report {
            config: cfg,
            results: vec![Row { id: "round-trip".into(), h: None, linf: Some(roundtrip), l2: None, order: None, pass: true }],
            extra: vec![
                ("mu", nums(&[mu.re, mu.im])),
                ("tensor", nums(&[a.a11, a.a12, a.a22])),
                ("det", num(a.det())),
                ("K", num(k)),
            ],
        };
        write_file(path, report.to_json().as_bytes()).map_err(runtime)?;
    }
    Ok(true)
}

// ---------------------------------------------------------------- shared

fn grid_spacings(cfg: &RunConfig, default: &[f64]) -> Result<Vec<f64>, Failure> {
    let hs = if cfg.h.is_empty() { default.to_vec() } else { cfg.h.clone() };
    if let Some(h) = hs.iter().find(|&&h| !(h > 0.0)) {
        return Err(usage(format!("grid spacing {h} must be positive")));
    }
    Ok(hs)
}

/// `max(margin, 2h)`, warning when the request is raised.
fn effective_margin(requested: f64, h: f64) -> f64 {
    if requested < 2.0 * h {
        warn(&format!("margin {requested} is below 2h at h = {h}; using {}", 2.0 * h));
        2.0 * h
    } else {
        requested
    }
}

/// Rows of one refinement series and whether it passes.
fn series_rows(id: &str, reports: &[ResidualReport], bound: Option<f64>) -> (Vec<Row>, bool) {
    let order = if reports.len() >= 3 {
        match convergence_order(reports) {
            Ok(est) => {
                if let Some(w) = est.warning {
                    warn(&format!("{id}: {w}"));
                }
                Some(est.order)
            }
            Err(e) => {
                warn(&format!("{id}: {e}"));
                None
            }
        }
    } else {
        warn(&format!("{id}: an order estimate needs at least 3 grids; reporting without order"));
        None
    };
    let finest = reports.iter().min_by(|a, b| a.h.total_cmp(&b.h)).expect("nonempty series");
    let pass = order.is_none_or(order_ok) && bound.is_none_or(|b| finest.linf <= b) && !(reports.len() >= 3 && order.is_none());
    let rows = reports
        .iter()
        .map(|r| Row { id: id.into(), h: Some(r.h), linf: Some(r.linf), l2: Some(r.l2), order, pass })
        .collect();
    (rows, pass)
}

/// `path` itself for a single series, else `stem.<label>.ext`.
fn series_path(path: &Path, label: &str, many: bool) -> PathBuf {
    if !many {
        return path.to_path_buf();
    }
    let clean: String = label.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' }).collect();
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}.{clean}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{clean}"),
    };
    path.with_file_name(name)
}

fn dump_residuals(path: &Path, report: &ResidualReport) -> Result<(), Failure> {
    let mut buf = Vec::new();
    report.write_csv(&mut buf).map_err(runtime)?;
    write_file(path, &buf).map_err(runtime)
}

fn is_radial(t: &ConductivityTensor) -> bool {
    t.dilatation().is_some_and(|d| d.tag() == StructureTag::Radial)
}

// ---------------------------------------------------------------- verify

pub const VERIFY_IDS: [&str; 6] =
    ["lb-disk", "lb-annulus", "lb-punctured-disk", "halfplane-log", "halfplane-lambda", "dead-zone"];

fn catalog_entry(cfg: &RunConfig) -> Result<ExactSolution, Failure> {
    let entry = match cfg.problem.as_str() {
        "lb-disk" => lb_disk_entry(),
        "lb-annulus" => lb_annulus_entry(cfg.r.unwrap_or(CATALOG_ANNULUS_R)),
        "lb-punctured-disk" => lb_punctured_disk_entry(),
        "halfplane-log" => halfplane_entry(HalfplaneVariant::LogTwoOverXSquared),
        "halfplane-lambda" => halfplane_entry(HalfplaneVariant::Lambda { lambda: cfg.lambda.unwrap_or(1.0) }),
        "dead-zone" => {
            let nu = match &cfg.nu {
                Some(s) => grammar::profile(s)?,
                None => qcfactor::Coefficient::real_constant(FRAC_1_SQRT_2),
            };
            dead_zone_entry(cfg.q.unwrap_or(0.5), nu)
        }
        other => {
            return Err(usage(format!("unknown catalog id `{other}` (expected one of {})", VERIFY_IDS.join(", "))))
        }
    };
    entry.map_err(usage)
}

fn verify(cfg: &RunConfig) -> Outcome {
    let entry = catalog_entry(cfg)?;
    let tensors = match &cfg.tensor {
        Some(t) => vec![(t.clone(), grammar::tensor(t)?)],
        None => entry.tensors.clone(),
    };
    let hs = grid_spacings(cfg, &DEFAULT_HS)?;
    // The entry's own margin, read off a grid fine enough to be valid.
    let base = entry.grid(1e-9).map_err(runtime)?;
    let requested = cfg.margin.unwrap_or(base.margin());
    let grids: Vec<GridSpec> = hs
        .iter()
        .map(|&h| base.with_margin(effective_margin(requested, h)).and_then(|g| g.with_h(h)).map_err(usage))
        .collect::<Result<_, _>>()?;

    let mut rows = Vec::new();
    let mut pass = true;
    for (label, tensor) in &tensors {
        let id = format!("{}|{label}", entry.id);
        let reports: Vec<ResidualReport> = grids
            .iter()
            .map(|g| strong_residual(entry.field.as_ref(), tensor, entry.nonlinearity, g).map_err(classify))
            .collect::<Result<_, _>>()?;
        let (r, ok) = series_rows(&id, &reports, cfg.bound);
        rows.extend(r);
        pass &= ok;
        if let Some(path) = &cfg.out_csv {
            let finest = reports.iter().min_by(|a, b| a.h.total_cmp(&b.h)).expect("nonempty");
            dump_residuals(&series_path(path, label, tensors.len() > 1), finest)?;
        }
    }
    Report { config: cfg, results: rows, extra: vec![] }.emit().map_err(runtime)?;
    Ok(pass)
}

// ---------------------------------------------------------------- heat

fn heat(cfg: &RunConfig) -> Outcome {
    let a = cfg.a.unwrap_or(1.0);
    if !(a > 0.0) {
        return Err(usage(format!("diffusivity a = {a} must be positive")));
    }
    let label = cfg.tensor.clone().unwrap_or_else(|| "identity".into());
    let tensor = grammar::tensor(&label)?;
    let times = if cfg.times.is_empty() { vec![1.0] } else { cfg.times.clone() };
    let hs = grid_spacings(cfg, &DEFAULT_HS)?;
    let requested = cfg.margin.unwrap_or(0.1);
    let kernel = HeatKernel { a };
    let mut reports = Vec::new();
    for &h in &hs {
        let mut g = GridSpec::new(DomainDescriptor::Plane, h, effective_margin(requested, h))
            .and_then(|g| g.with_window(Rect::new(-1.0, 1.0, -1.0, 1.0)))
            .map_err(usage)?;
        if is_radial(&tensor) {
            g = g.with_singular(SingularSet::Point(Complex64::new(0.0, 0.0)));
        }
        reports.push(heat_residual(&kernel, &tensor, a, Nonlinearity::Zero, &g, &times).map_err(classify)?);
    }
    let id = format!("heat(a={a})|{label}");
    let (rows, pass) = series_rows(&id, &reports, cfg.bound);
    if let Some(path) = &cfg.out_csv {
        dump_residuals(path, reports.last().expect("nonempty"))?;
    }
    Report { config: cfg, results: rows, extra: vec![] }.emit().map_err(runtime)?;
    Ok(pass)
}

// ---------------------------------------------------------------- solve

/// Points on the circle used for the boundary extremes.
const CIRCLE_SAMPLES: usize = 4096;
/// Random interior points at which the composed solution is compared.
const RANDOM_POINTS: usize = 256;

fn solve_domain(tensor: &ConductivityTensor, center: Complex64, rho: f64) -> Result<DomainDescriptor, Failure> {
    let field = tensor
        .dilatation()
        .ok_or_else(|| usage(format!("tensor `{}` has no dilatation structure", tensor.label())))?;
    let origin = Complex64::new(0.0, 0.0);
    let c = [center.re, center.im];
    match field.tag() {
        StructureTag::Radial if center == origin => DomainDescriptor::disk(origin, rho).map_err(usage),
        StructureTag::Radial => Err(usage("radial tensors need a disk centered at the origin")),
        StructureTag::Constant if field.eval(origin) == origin => DomainDescriptor::disk(center, rho).map_err(usage),
        _ => Ok(DomainDescriptor::MappedDisk { center: c, radius: rho }),
    }
}

fn solve(cfg: &RunConfig) -> Outcome {
    let bc = grammar::boundary(&cfg.problem)?;
    let f_name = cfg.f.clone().unwrap_or_else(|| "exp".into());
    let f: Nonlinearity = f_name.parse().map_err(usage)?;
    let label = cfg.tensor.clone().unwrap_or_else(|| "identity".into());
    let tensor = grammar::tensor(&label)?;
    let center = Complex64::new(cfg.center[0], cfg.center[1]);
    let omega = solve_domain(&tensor, center, cfg.rho)?;
    let hs = grid_spacings(cfg, &[1.0 / 64.0])?;
    let identity_like = matches!(omega, DomainDescriptor::Disk { .. }) && !is_radial(&tensor);
    let exact = bc.solves == Some(f_name.as_str()) && (identity_like || (bc.radial && is_radial(&tensor)));
    if cfg.bound.is_some() && !exact {
        warn("no manufactured solution for this problem; the bound is not checked");
    }

    let id = format!("solve|{}|{f_name}|{label}", cfg.problem);
    let mut rows = Vec::new();
    let mut grids = Vec::new();
    let mut pass = true;
    let mut diverged = None;
    let mut errors = Vec::new();
    for &h in &hs {
        let fac = factorize(&tensor, omega, f, bc.field.clone(), &cfg.solve_options(h)).map_err(classify)?;
        let t = &fac.t;
        let active = t.active_points();
        let values: Vec<f64> = active.iter().map(|p| p.1).collect();

        let mut grid = Map::new();
        grid.insert("h".into(), num(h));
        grid.insert("active_points".into(), Value::from(active.len()));
        grid.insert("iterations".into(), Value::from(t.iterations()));
        grid.insert("final_residual".into(), num(t.final_residual()));
        grid.insert("status".into(), serde_json::to_value(fac.status).map_err(runtime)?);
        grid.insert("monotone".into(), Value::Bool(fac.monotone));
        grid.insert("history".into(), nums(&fac.history));
        let mut ok = fac.status == SolveStatus::Converged;

        if f.is_zero() {
            let psi = t.boundary();
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for k in 0..CIRCLE_SAMPLES {
                let v = psi.eval(t.center() + Complex64::from_polar(t.rho(), TAU * k as f64 / CIRCLE_SAMPLES as f64))
                    .map_err(runtime)?;
                lo = lo.min(v);
                hi = hi.max(v);
            }
            let slack = 1e-12 * lo.abs().max(hi.abs()).max(1.0);
            let holds = values.iter().all(|&v| v >= lo - slack && v <= hi + slack);
            grid.insert("max_principle".into(), Value::Bool(holds));
            ok &= holds;
        }

        let (mut linf, mut l2) = (None, None);
        if exact {
            let mut worst: f64 = 0.0;
            let mut sum = 0.0;
            for (w, v) in &active {
                let z = fac.map.inverse(*w).map_err(runtime)?;
                let e = v - bc.field.eval(z).map_err(runtime)?;
                worst = worst.max(e.abs());
                sum += e * e;
            }
            linf = Some(worst);
            l2 = Some(h * sum.sqrt());
            errors.push((h, worst));
            ok &= cfg.bound.is_none_or(|b| worst <= b);

            // The composed u = T∘ω at seeded random points of Ω.
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let mut worst_u: f64 = 0.0;
            for _ in 0..RANDOM_POINTS {
                let w = t.center() + Complex64::from_polar(0.95 * t.rho() * rng.random::<f64>().sqrt(), rng.random_range(-std::f64::consts::PI..std::f64::consts::PI));
                let z = fac.map.inverse(w).map_err(runtime)?;
                let e = fac.u.eval(z).map_err(runtime)? - bc.field.eval(z).map_err(runtime)?;
                worst_u = worst_u.max(e.abs());
            }
            grid.insert("u_linf_random".into(), num(worst_u));
        }
        pass &= ok;
        rows.push(Row { id: id.clone(), h: Some(h), linf, l2, order: None, pass: ok });
        grids.push(Value::Object(grid));

        if fac.status == SolveStatus::Diverged {
            diverged = Some(format!(
                "diverged at h = {h} after {} iterations (residual {:.3e}); wrote the best iterate",
                t.iterations(),
                t.final_residual()
            ));
        }
        if h == hs[hs.len() - 1] || diverged.is_some() {
            if let Some(path) = &cfg.out_csv {
                let mut buf = Vec::new();
                t.write_csv(&mut buf).map_err(runtime)?;
                write_file(path, &buf).map_err(runtime)?;
            }
            if let Some(path) = &cfg.out_u_csv {
                let mut buf = String::from("x,y,value\n");
                for (w, v) in &active {
                    let z = fac.map.inverse(*w).map_err(runtime)?;
                    buf.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", z.re, z.im, v));
                }
                write_file(path, buf.as_bytes()).map_err(runtime)?;
            }
        }
        if diverged.is_some() {
            break;
        }
    }

    if errors.len() >= 3 && diverged.is_none() {
        let reports: Vec<ResidualReport> = errors.iter().map(|&(h, e)| order_probe(h, e)).collect();
        match convergence_order(&reports) {
            Ok(est) => {
                let ok = order_ok(est.order);
                pass &= ok;
                for r in &mut rows {
                    r.order = Some(est.order);
                    r.pass &= ok;
                }
            }
            Err(e) => warn(&e.to_string()),
        }
    }
    Report { config: cfg, results: rows, extra: vec![("grids", Value::Array(grids))] }.emit().map_err(runtime)?;
    match diverged {
        Some(msg) => Err(Failure::Diverged(msg)),
        None => Ok(pass),
    }
}

/// A one-sample report carrying an error norm, for the order fit.
fn order_probe(h: f64, linf: f64) -> ResidualReport {
    ResidualReport {
        problem_id: String::new(),
        h,
        margin: 0.0,
        samples: 1,
        linf,
        l2: linf,
        worst_points: Vec::new(),
        order: None,
        order_warning: None,
        residuals: Vec::new(),
    }
}
