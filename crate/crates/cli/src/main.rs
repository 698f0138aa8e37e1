//! `qcfactor`: conversions, catalog verification, disk solves and heat-kernel
//! checks from the command line.
//!
//! Exit codes: 0 pass, 1 verification failure, 2 usage error, 3 divergence.

mod commands;
mod config;
mod grammar;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{Failure, DEFAULT_HS};
use config::{Command, RunConfig};

impl From<String> for Failure {
    fn from(msg: String) -> Self {
        Failure::Usage(msg)
    }
}

#[derive(Parser)]
#[command(name = "qcfactor", version, about = "Factorization toolkit for div(A grad u) = f(u)")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// Write the JSON report here (a summary goes to stdout).
    #[arg(long)]
    out_json: Option<PathBuf>,
    /// Print the canonical run configuration and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Convert between a dilatation μ and a unit-determinant tensor.
    Convert {
        #[arg(long, num_args = 2, value_names = ["RE", "IM"], allow_negative_numbers = true, conflicts_with = "tensor", required_unless_present = "tensor")]
        mu: Option<Vec<String>>,
        #[arg(long, num_args = 3, value_names = ["A11", "A12", "A22"], allow_negative_numbers = true)]
        tensor: Option<Vec<String>>,
        #[command(flatten)]
        common: Common,
    },
    /// Residual-check a catalog solution under refinement.
    Verify {
        /// lb-disk, lb-annulus, lb-punctured-disk, halfplane-log, halfplane-lambda or dead-zone.
        id: String,
        /// Tensor spec; defaults to every admissible tensor of the entry.
        #[arg(long)]
        tensor: Option<String>,
        /// Profile ν of the dead-zone solution.
        #[arg(long)]
        nu: Option<String>,
        /// Exponent of the dead-zone solution.
        #[arg(long)]
        q: Option<String>,
        #[arg(long)]
        lambda: Option<String>,
        /// Inner radius of the annulus solution.
        #[arg(long)]
        r: Option<String>,
        /// Comma-separated grid spacings, e.g. 1/64,1/128,1/256.
        #[arg(long)]
        h: Option<String>,
        #[arg(long)]
        margin: Option<String>,
        /// Upper bound on the finest-grid L∞ residual.
        #[arg(long)]
        bound: Option<String>,
        /// Residuals of the finest grid as x,y,value.
        #[arg(long)]
        out_csv: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Solve div(A grad u) = f(u) on a disk via u = T∘ω.
    Solve {
        /// zero, exp, power:<q> or exp-scaled:<a>.
        #[arg(long, default_value = "exp")]
        f: String,
        /// lb-disk, lb-punctured-disk, re, im, zero or const:<v>.
        #[arg(long, default_value = "lb-disk")]
        bc: String,
        #[arg(long, default_value = "identity")]
        tensor: String,
        #[arg(long, default_value = "1")]
        rho: String,
        /// Disk center in the ω-plane as x,y.
        #[arg(long, default_value = "0,0", allow_hyphen_values = true)]
        center: String,
        #[arg(long, default_value = "1/64")]
        h: String,
        #[arg(long, default_value = "picard")]
        scheme: String,
        #[arg(long, default_value = "0.8")]
        relaxation: String,
        #[arg(long, default_value_t = 5000)]
        max_iterations: usize,
        #[arg(long, default_value = "1e-6")]
        tolerance: String,
        /// Upper bound on the L∞ error against a manufactured solution.
        #[arg(long)]
        bound: Option<String>,
        /// Seed for the random comparison points.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// T on the w-lattice as x,y,value.
        #[arg(long)]
        out_csv: Option<PathBuf>,
        /// u = T∘ω at the preimages of the lattice nodes.
        #[arg(long)]
        out_u_csv: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Space-time residual of the heat kernel.
    Heat {
        /// Diffusivity.
        #[arg(long, default_value = "1")]
        a: String,
        #[arg(long, default_value = "identity")]
        tensor: String,
        /// Comma-separated times, each at least 0.1.
        #[arg(long, default_value = "1")]
        t: String,
        #[arg(long)]
        h: Option<String>,
        #[arg(long, default_value = "0.1")]
        margin: String,
        #[arg(long)]
        bound: Option<String>,
        #[arg(long)]
        out_csv: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Execute a saved run configuration.
    Run { config: PathBuf },
}

fn opt_real(s: &Option<String>) -> Result<Option<f64>, String> {
    s.as_deref().map(grammar::real).transpose()
}

fn hs(s: &Option<String>) -> Result<Vec<f64>, String> {
    match s {
        Some(s) => grammar::reals(s),
        None => Ok(DEFAULT_HS.to_vec()),
    }
}

/// Canonical spelling of parsed numbers, so configs compare by value.
fn canonical(xs: &[f64]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn build(cmd: Cmd) -> Result<(RunConfig, bool), Failure> {
    Ok(match cmd {
        Cmd::Convert { mu, tensor, common } => {
            let problem = match (mu, tensor) {
                (Some(v), _) => format!("mu:{}", canonical(&grammar::reals(&v.join(","))?)),
                (None, Some(v)) => format!("tensor:{}", canonical(&grammar::reals(&v.join(","))?)),
                (None, None) => return Err(Failure::Usage("convert needs --mu or --tensor".into())),
            };
            let mut cfg = RunConfig::new(Command::Convert, problem);
            cfg.out_json = common.out_json;
            (cfg, common.print_config)
        }
        Cmd::Verify { id, tensor, nu, q, lambda, r, h, margin, bound, out_csv, common } => {
            let mut cfg = RunConfig::new(Command::Verify, id);
            cfg.tensor = tensor;
            cfg.nu = nu;
            cfg.q = opt_real(&q)?;
            cfg.lambda = opt_real(&lambda)?;
            cfg.r = opt_real(&r)?;
            cfg.h = hs(&h)?;
            cfg.margin = opt_real(&margin)?;
            cfg.bound = opt_real(&bound)?;
            cfg.out_csv = out_csv;
            cfg.out_json = common.out_json;
            (cfg, common.print_config)
        }
        Cmd::Solve {
            f,
            bc,
            tensor,
            rho,
            center,
            h,
            scheme,
            relaxation,
            max_iterations,
            tolerance,
            bound,
            seed,
            out_csv,
            out_u_csv,
            common,
        } => {
            let mut cfg = RunConfig::new(Command::Solve, bc);
            cfg.f = Some(f);
            cfg.tensor = Some(tensor);
            cfg.rho = grammar::real(&rho)?;
            cfg.center = grammar::reals(&center)?
                .try_into()
                .map_err(|_| Failure::Usage(format!("--center: expected x,y, got `{center}`")))?;
            cfg.h = grammar::reals(&h)?;
            cfg.scheme = scheme.parse().map_err(|e: qcfactor::Error| Failure::Usage(e.to_string()))?;
            cfg.relaxation = grammar::real(&relaxation)?;
            cfg.max_iterations = max_iterations;
            cfg.tolerance = grammar::real(&tolerance)?;
            cfg.bound = opt_real(&bound)?;
            cfg.seed = seed;
            cfg.out_csv = out_csv;
            cfg.out_u_csv = out_u_csv;
            cfg.out_json = common.out_json;
            (cfg, common.print_config)
        }
        Cmd::Heat { a, tensor, t, h, margin, bound, out_csv, common } => {
            let mut cfg = RunConfig::new(Command::Heat, "heat-kernel");
            cfg.a = Some(grammar::real(&a)?);
            cfg.tensor = Some(tensor);
            cfg.times = grammar::reals(&t)?;
            cfg.h = hs(&h)?;
            cfg.margin = Some(grammar::real(&margin)?);
            cfg.bound = opt_real(&bound)?;
            cfg.out_csv = out_csv;
            cfg.out_json = common.out_json;
            (cfg, common.print_config)
        }
        Cmd::Run { config } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| Failure::Usage(format!("{}: {e}", config.display())))?;
            let cfg = text.parse().map_err(|e: String| Failure::Usage(format!("{}: {e}", config.display())))?;
            (cfg, false)
        }
    })
}

/// Honour `QCFACTOR_THREADS` as a cap on the worker pool.
fn configure_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("QCFACTOR_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Usage(format!("QCFACTOR_THREADS = `{v}` is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Runtime(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| build(cli.command)).and_then(|(cfg, print)| {
        if print {
            print!("{cfg}");
            Ok(true)
        } else {
            commands::run(&cfg)
        }
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
