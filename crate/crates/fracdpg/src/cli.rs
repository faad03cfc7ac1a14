//! Command-line front end: configures a convergence run and writes CSV
//! tables (one `convergence.csv`, one `mesh_<k>.csv` per step) plus a
//! `summary.txt` with fitted convergence orders.
//!
//! Flags override an optional `key = value` config file. Output uses 17
//! significant digits so plotting scripts and CI assertions can compare
//! byte-exactly; in `--serial` mode the wall-time column is written as 0 to
//! keep repeat runs byte-identical.

use crate::experiments::{
    example1_with_alpha, example2, example3, fit_eoc, run_convergence, ExampleProblem, Quantity,
    RunParams,
};
use crate::{FracDpgError, Result};
use clap::Parser;
use std::fmt::Write as _;
use std::path::PathBuf;

/// A fully resolved run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub example: u32,
    pub alpha: f64,
    pub lambda: Option<f64>,
    pub p: usize,
    pub q: usize,
    pub m: usize,
    pub n: usize,
    pub theta: f64,
    pub n0: usize,
    pub max_steps: usize,
    pub dof_budget: usize,
    pub out_dir: PathBuf,
    pub serial: bool,
    pub tail: usize,
}

#[derive(Parser, Debug)]
#[command(
    name = "fracdpg",
    about = "Ultra-weak DPG solver for 1D fractional advection-diffusion",
    disable_version_flag = true
)]
struct CliArgs {
    /// Which model problem to run (1, 2, or 3)
    #[arg(long)]
    example: Option<u32>,
    /// Fractional order alpha in (1, 2)
    #[arg(long)]
    alpha: Option<f64>,
    /// Solution exponent lambda in (1/2, 3/2); example 2 only
    #[arg(long)]
    lambda: Option<f64>,
    /// Polynomial degree of sigma_h
    #[arg(long)]
    p: Option<usize>,
    /// Polynomial degree of u_h
    #[arg(long)]
    q: Option<usize>,
    /// Polynomial degree of the tau test component
    #[arg(long)]
    m: Option<usize>,
    /// Polynomial degree of the v test component
    #[arg(long)]
    n: Option<usize>,
    /// Doerfler parameter in (0, 1]; 1 refines uniformly
    #[arg(long)]
    theta: Option<f64>,
    /// Number of elements of the initial uniform mesh
    #[arg(long)]
    n0: Option<usize>,
    /// Maximum number of refinement steps
    #[arg(long)]
    max_steps: Option<usize>,
    /// Stop once the trial dimension reaches this bound
    #[arg(long)]
    dof_budget: Option<usize>,
    /// Output directory for the CSV tables
    #[arg(long)]
    out: Option<PathBuf>,
    /// Plain key = value config file; flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
    /// Single-threaded deterministic mode (byte-identical output)
    #[arg(long)]
    serial: bool,
    /// Number of tail records used for the EOC fits
    #[arg(long)]
    tail: Option<usize>,
}

#[derive(Debug, Default, Clone)]
struct PartialConfig {
    example: Option<u32>,
    alpha: Option<f64>,
    lambda: Option<f64>,
    p: Option<usize>,
    q: Option<usize>,
    m: Option<usize>,
    n: Option<usize>,
    theta: Option<f64>,
    n0: Option<usize>,
    max_steps: Option<usize>,
    dof_budget: Option<usize>,
    out: Option<PathBuf>,
    serial: Option<bool>,
    tail: Option<usize>,
}

fn config_err(msg: impl Into<String>) -> FracDpgError {
    FracDpgError::Config(msg.into())
}

/// Parse a `key = value` config file. Unknown keys are rejected by name.
fn parse_config_file(text: &str) -> Result<PartialConfig> {
    let mut out = PartialConfig::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| config_err(format!("line {}: expected key = value", lineno + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        macro_rules! parse_as {
            ($ty:ty) => {
                Some(value.parse::<$ty>().map_err(|_| {
                    config_err(format!("key '{key}': cannot parse '{value}'"))
                })?)
            };
        }
        match key {
            "example" => out.example = parse_as!(u32),
            "alpha" => out.alpha = parse_as!(f64),
            "lambda" => out.lambda = parse_as!(f64),
            "p" => out.p = parse_as!(usize),
            "q" => out.q = parse_as!(usize),
            "m" => out.m = parse_as!(usize),
            "n" => out.n = parse_as!(usize),
            "theta" => out.theta = parse_as!(f64),
            "n0" => out.n0 = parse_as!(usize),
            "max_steps" => out.max_steps = parse_as!(usize),
            "dof_budget" => out.dof_budget = parse_as!(usize),
            "out" => out.out = Some(PathBuf::from(value)),
            "serial" => out.serial = parse_as!(bool),
            "tail" => out.tail = parse_as!(usize),
            other => return Err(config_err(format!("unknown config key '{other}'"))),
        }
    }
    Ok(out)
}

/// Serialize a config in the config-file format (round-trips through
/// `parse_config_file`).
pub fn emit_config(cfg: &RunConfig) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "example = {}", cfg.example);
    let _ = writeln!(s, "alpha = {}", cfg.alpha);
    if let Some(l) = cfg.lambda {
        let _ = writeln!(s, "lambda = {l}");
    }
    let _ = writeln!(s, "p = {}", cfg.p);
    let _ = writeln!(s, "q = {}", cfg.q);
    let _ = writeln!(s, "m = {}", cfg.m);
    let _ = writeln!(s, "n = {}", cfg.n);
    let _ = writeln!(s, "theta = {}", cfg.theta);
    let _ = writeln!(s, "n0 = {}", cfg.n0);
    let _ = writeln!(s, "max_steps = {}", cfg.max_steps);
    let _ = writeln!(s, "dof_budget = {}", cfg.dof_budget);
    let _ = writeln!(s, "out = {}", cfg.out_dir.display());
    let _ = writeln!(s, "serial = {}", cfg.serial);
    let _ = writeln!(s, "tail = {}", cfg.tail);
    s
}

/// Parse flags (and the optional config file) into a validated RunConfig.
pub fn parse_config<I, T>(args: I) -> Result<RunConfig>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = CliArgs::try_parse_from(args).map_err(|e| {
        use clap::error::ErrorKind;
        if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
            let _ = e.print();
            std::process::exit(0);
        }
        config_err(e.to_string())
    })?;

    let file = match &cli.config {
        Some(path) => parse_config_file(&std::fs::read_to_string(path)?)?,
        None => PartialConfig::default(),
    };

    let example = cli
        .example
        .or(file.example)
        .ok_or_else(|| config_err("missing required --example (1, 2, or 3)"))?;
    if !(1..=3).contains(&example) {
        return Err(config_err(format!("example must be 1, 2, or 3, got {example}")));
    }
    let alpha = cli
        .alpha
        .or(file.alpha)
        .ok_or_else(|| config_err("missing required --alpha"))?;
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(config_err(format!("alpha must lie in (1, 2), got {alpha}")));
    }
    let lambda = cli.lambda.or(file.lambda);
    match (example, lambda) {
        (2, None) => return Err(config_err("example 2 requires --lambda")),
        (2, Some(l)) if !(l > 0.5 && l < 1.5) => {
            return Err(config_err(format!("lambda must lie in (1/2, 3/2), got {l}")))
        }
        (e, Some(_)) if e != 2 => {
            return Err(config_err("--lambda only applies to example 2"))
        }
        _ => {}
    }
    let theta = cli.theta.or(file.theta).unwrap_or(1.0);
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(config_err(format!("theta must lie in (0, 1], got {theta}")));
    }
    let n0 = cli.n0.or(file.n0).unwrap_or(2);
    if n0 == 0 {
        return Err(config_err("n0 must be at least 1"));
    }
    let tail = cli.tail.or(file.tail).unwrap_or(4);
    if tail < 2 {
        return Err(config_err("tail must be at least 2"));
    }

    Ok(RunConfig {
        example,
        alpha,
        lambda,
        p: cli.p.or(file.p).unwrap_or(0),
        q: cli.q.or(file.q).unwrap_or(0),
        m: cli.m.or(file.m).unwrap_or(2),
        n: cli.n.or(file.n).unwrap_or(2),
        theta,
        n0,
        max_steps: cli.max_steps.or(file.max_steps).unwrap_or(25),
        dof_budget: cli.dof_budget.or(file.dof_budget).unwrap_or(30_000),
        out_dir: cli.out.or(file.out).unwrap_or_else(|| PathBuf::from("out")),
        serial: cli.serial || file.serial.unwrap_or(false),
        tail,
    })
}

fn resolve_problem(cfg: &RunConfig) -> Result<ExampleProblem> {
    match cfg.example {
        1 => example1_with_alpha(cfg.alpha),
        2 => example2(cfg.lambda.expect("validated"), cfg.alpha),
        3 => example3(cfg.alpha),
        _ => unreachable!("validated"),
    }
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Execute a configured run and write the artifacts.
pub fn run(cfg: &RunConfig) -> Result<()> {
    let problem = resolve_problem(cfg)?;
    let params = RunParams {
        p: cfg.p,
        q: cfg.q,
        m: cfg.m,
        n: cfg.n,
        theta: cfg.theta,
        n0: cfg.n0,
        max_steps: cfg.max_steps,
        dof_budget: cfg.dof_budget,
    };
    let report = run_convergence(&problem, &params)?;

    std::fs::create_dir_all(&cfg.out_dir)?;

    let mut csv = String::from("step,N,dofs,est,err_u,err_sigma,err_uhat,err_sigmahat,seconds\n");
    for r in &report.records {
        let errs = match &r.errors {
            Some(e) => format!(
                "{},{},{},{}",
                fmt17(e.err_u),
                fmt17(e.err_sigma),
                fmt17(e.err_uhat),
                fmt17(e.err_sigmahat)
            ),
            None => ",,,".to_string(),
        };
        let seconds = if cfg.serial { 0.0 } else { r.seconds };
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            r.step,
            r.n_elements,
            r.dofs,
            fmt17(r.est),
            errs,
            fmt17(seconds)
        );
    }
    std::fs::write(cfg.out_dir.join("convergence.csv"), csv)?;

    for (k, detail) in report.details.iter().enumerate() {
        let mut mesh_csv = String::from("x_left,x_right,est_T\n");
        for (e, est_sq) in detail.est_sq_per_element.iter().enumerate() {
            let _ = writeln!(
                mesh_csv,
                "{},{},{}",
                fmt17(detail.nodes[e]),
                fmt17(detail.nodes[e + 1]),
                fmt17(est_sq.sqrt())
            );
        }
        std::fs::write(cfg.out_dir.join(format!("mesh_{k}.csv")), mesh_csv)?;
    }

    let mut summary = String::new();
    let _ = writeln!(summary, "run: {}", problem.name);
    let last = report.records.last().expect("at least one record");
    let _ = writeln!(
        summary,
        "steps = {}, final N = {}, final dofs = {}, final est = {}",
        report.records.len(),
        last.n_elements,
        last.dofs,
        fmt17(last.est)
    );
    let quantities: &[Quantity] = if report.records[0].errors.is_some() {
        &[
            Quantity::Est,
            Quantity::ErrU,
            Quantity::ErrSigma,
            Quantity::ErrUhat,
            Quantity::ErrSigmahat,
        ]
    } else {
        &[Quantity::Est]
    };
    for q in quantities {
        match fit_eoc(&report.records, *q, cfg.tail) {
            Ok(slope) => {
                let _ = writeln!(summary, "eoc[{}] = {:.4}", q.label(), slope);
            }
            Err(_) => {
                let _ = writeln!(summary, "eoc[{}] = n/a", q.label());
            }
        }
    }
    std::fs::write(cfg.out_dir.join("summary.txt"), summary)?;
    Ok(())
}
