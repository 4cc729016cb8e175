//! `krnorm` command-line front end.
//!
//! Exit status: 0 success, 2 invalid input or usage, 3 infeasible, 4 a
//! certificate or verification check failed.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod document;
mod error;
mod selftest;

use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use krnorm::matchnorm::Convention;

use commands::{Body, Output};
use error::CliError;

#[derive(Parser)]
#[command(
    name = "krnorm",
    version,
    about = "Transshipment norms, minimal flows and transport densities"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimal connection (optimal matching) with its potential certificate.
    Connect(DocArgs),
    /// Optimal 1-Lipschitz potential from the dual linear program.
    Dual(DocArgs),
    /// Flat norm of a possibly unbalanced measure.
    Flatnorm {
        #[command(flatten)]
        doc: DocArgs,
        #[arg(long, value_enum, default_value_t = ConventionArg::Max)]
        convention: ConventionArg,
    },
    /// Minimal-divergence flow on the complete graph or on a grid.
    Beckmann {
        #[command(flatten)]
        doc: DocArgs,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Check a generalized plan against the document's distribution.
    PlanCheck(DocArgs),
    /// Rasterize the transport density.
    Density {
        #[command(flatten)]
        doc: DocArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Deterministic data-parallel rasterization.
        #[arg(long)]
        parallel: bool,
    },
    /// Tangential/normal decomposition with a dual witness.
    Decompose(DocArgs),
    /// Certified (epsilon, C_epsilon, k) table of a dipole chain.
    Modulus {
        #[command(flatten)]
        doc: DocArgs,
        /// Comma-separated truncation levels; overrides the document options.
        #[arg(long, value_delimiter = ',')]
        eps: Vec<f64>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Run the built-in duality, oracle and raster suites.
    Selftest {
        /// Run only suites whose name contains this text.
        #[arg(long)]
        filter: Option<String>,
        /// Flip one bit of every golden value.
        #[arg(long)]
        inject_fault: bool,
        #[arg(long)]
        out: Option<String>,
    },
}

#[derive(Args)]
struct DocArgs {
    /// JSON input document.
    document: String,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<String>,
    #[arg(long, default_value_t = 1e-9)]
    tol_abs: f64,
    #[arg(long, default_value_t = 1e-7)]
    tol_rel: f64,
    /// Accepted for reproducible invocations; no command draws random numbers.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct GridArgs {
    /// Cells per axis, e.g. 64x64 or 8x8x8.
    #[arg(long, value_parser = parse_grid)]
    grid: Option<GridSpec>,
    /// Add diagonal neighbors to grid networks.
    #[arg(long)]
    diagonals: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ConventionArg {
    Max,
    Sum,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Svg,
    Ascii,
}

pub struct Tolerances {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerances {
    /// abs + rel·scale
    pub fn bound(&self, scale: f64) -> f64 {
        self.abs + self.rel * scale.abs()
    }
}

#[derive(Clone, Debug, PartialEq)]
struct GridSpec(Vec<usize>);

fn parse_grid(s: &str) -> Result<GridSpec, String> {
    let cells: Vec<usize> = s
        .split('x')
        .map(|p| {
            p.parse::<usize>()
                .map_err(|_| format!("bad cell count {p:?} in {s:?}"))
        })
        .collect::<Result<_, _>>()?;
    if !(2..=3).contains(&cells.len()) || cells.contains(&0) {
        return Err(format!(
            "grid {s:?} must be RxC or RxCxD with positive counts"
        ));
    }
    Ok(GridSpec(cells))
}

impl DocArgs {
    fn tolerances(&self) -> Result<Tolerances, CliError> {
        if !(self.tol_abs >= 0.0 && self.tol_rel >= 0.0) {
            return Err(CliError::Validation(
                "tolerances must be nonnegative".into(),
            ));
        }
        Ok(Tolerances {
            abs: self.tol_abs,
            rel: self.tol_rel,
        })
    }
}

fn emit(body: &Body, out: Option<&str>) -> Result<(), CliError> {
    let bytes = match body {
        Body::Json(v) => {
            let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
            s.push('\n');
            s.into_bytes()
        }
        Body::Raw(b) => b.clone(),
    };
    match out {
        Some(path) => std::fs::write(path, bytes)
            .map_err(|e| CliError::Io(format!("cannot write {path}: {e}"))),
        None => std::io::stdout()
            .write_all(&bytes)
            .map_err(|e| CliError::Io(format!("cannot write to stdout: {e}"))),
    }
}

fn envelope(command: &str, digest: &str, result: Value) -> Value {
    json!({
        "command": command,
        "input_sha256": digest,
        "krnorm_version": env!("CARGO_PKG_VERSION"),
        "result": result,
    })
}

fn run_document(
    name: &str,
    args: &DocArgs,
    f: impl FnOnce(&document::Document, &Tolerances) -> Result<Output, CliError>,
) -> Result<(), CliError> {
    let tol = args.tolerances()?;
    let loaded = document::load(&args.document)?;
    let output = f(&loaded.doc, &tol)?;
    let body = match output.body {
        Body::Json(v) => {
            let mut v = envelope(name, &loaded.digest, v);
            if let Some(reason) = &output.failure {
                v["verification_failure"] = json!(reason);
            }
            Body::Json(v)
        }
        raw => raw,
    };
    emit(&body, args.out.as_deref())?;
    match output.failure {
        Some(reason) => Err(CliError::Verification(reason)),
        None => Ok(()),
    }
}

fn selftest(filter: Option<&str>, fault: bool, out: Option<&str>) -> Result<(), CliError> {
    let reports = selftest::run(filter, fault);
    if reports.is_empty() {
        return Err(CliError::Validation(format!(
            "no suite matches {:?}; suites are {}",
            filter.unwrap_or_default(),
            selftest::SUITES.join(", ")
        )));
    }
    let passed = reports.iter().all(|r| r.passed);
    let v = json!({
        "command": "selftest",
        "fault_injected": fault,
        "krnorm_version": env!("CARGO_PKG_VERSION"),
        "passed": passed,
        "suites": reports,
    });
    emit(&Body::Json(v), out)?;
    if passed {
        Ok(())
    } else {
        Err(CliError::Verification("selftest failed".into()))
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Connect(a) => run_document("connect", &a, commands::connect),
        Command::Dual(a) => run_document("dual", &a, commands::dual),
        Command::Flatnorm { doc, convention } => {
            let c = match convention {
                ConventionArg::Max => Convention::Max,
                ConventionArg::Sum => Convention::Sum,
            };
            run_document("flatnorm", &doc, |d, t| commands::flatnorm(d, c, t))
        }
        Command::Beckmann { doc, grid } => run_document("beckmann", &doc, |d, t| {
            commands::beckmann(d, grid.grid.as_ref().map(|g| &g.0[..]), grid.diagonals, t)
        }),
        Command::PlanCheck(a) => run_document("plan-check", &a, commands::plan_check),
        Command::Density {
            doc,
            grid,
            format,
            parallel,
        } => {
            if grid.diagonals {
                return Err(CliError::Validation(
                    "--diagonals applies to beckmann only".into(),
                ));
            }
            let GridSpec(res) = grid
                .grid
                .ok_or_else(|| CliError::Validation("density needs --grid".into()))?;
            run_document("density", &doc, |d, _| {
                commands::density(d, &res, format, parallel)
            })
        }
        Command::Decompose(a) => run_document("decompose", &a, |d, _| commands::decompose_cmd(d)),
        Command::Modulus { doc, eps, format } => run_document("modulus", &doc, |d, _| {
            commands::modulus_cmd(d, &eps, format)
        }),
        Command::Selftest {
            filter,
            inject_fault,
            out,
        } => selftest(filter.as_deref(), inject_fault, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
