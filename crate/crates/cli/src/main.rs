//! Command-line front end: loads a JSON system model, dispatches to the
//! analysis library, and emits machine-readable CSV or JSON reports.
//!
//! Reports go to stdout (or `--output`); diagnostics and the optional
//! `--meta` header go to stderr, so report bytes depend only on the
//! arguments and the model file. Exit codes: 0 success, 2 validation
//! error, 3 numerical failure (no convergence or overflow).

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use lograte::{
    classify_antifragility, closed_form_eigenvalue, compare_protocols, dip_rate, dominant_rate,
    dose_grid, estimate_log_rate, flux_decompose, load_model, perron_eigenpair, simulate, sweep,
    Error, FamilyVariant, Objective, Protocol, SystemModel,
};

#[derive(Parser)]
#[command(
    name = "lograte",
    version,
    about = "Logarithmic growth rates of dose-parameterized positive linear systems",
    long_about = "Computes the logarithmic rate rho(u) — the Perron-Frobenius eigenvalue \
                  lambda_F of the Metzler matrix A(u) — across dose grids, classifies the \
                  dose response as convex or concave (antifragile for reward maximization \
                  or cost minimization), and compares pulsed against uniform dosing at \
                  equal total drug."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct Io {
    /// Model file (JSON schema: n, family, c, x0, dose_domain)
    #[arg(long)]
    model: PathBuf,
    /// Report format
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Write the report here instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
    /// Print a metadata header (tool version, argv, model path) on stderr
    #[arg(long)]
    meta: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Check a model file: Metzler structure, dose-domain feasibility, positive c and x0
    Validate {
        #[command(flatten)]
        io: Io,
    },
    /// Logarithmic rate rho(u) = lambda_F(A(u)) at one dose
    Rate {
        #[command(flatten)]
        io: Io,
        /// Dose u
        #[arg(long)]
        dose: f64,
    },
    /// Sample rho(u) over a dose grid and classify convexity (antifragility)
    Sweep {
        #[command(flatten)]
        io: Io,
        /// Uniform dose grid MIN:MAX:COUNT
        #[arg(long)]
        grid: GridSpec,
    },
    /// Simulate a dosing protocol exactly via matrix exponentials
    Simulate {
        #[command(flatten)]
        io: Io,
        /// Constant dose (uniform protocol)
        #[arg(long, conflicts_with_all = ["u", "v"])]
        dose: Option<f64>,
        /// High dose of a pulsed protocol (requires --v)
        #[arg(long, requires = "v")]
        u: Option<f64>,
        /// Low dose of a pulsed protocol (requires --u)
        #[arg(long, requires = "u")]
        v: Option<f64>,
        /// Number of unit periods
        #[arg(long = "N", default_value_t = 10)]
        n_periods: u32,
        /// Interior sample points per segment
        #[arg(long, default_value_t = 8)]
        samples: usize,
        /// Fraction of the horizon used for the tail rate estimate
        #[arg(long, default_value_t = 0.5)]
        tail_fraction: f64,
    },
    /// Pulsed (u, v) versus uniform (u+v)/2 at equal total drug
    Compare {
        #[command(flatten)]
        io: Io,
        /// High dose
        #[arg(long)]
        u: f64,
        /// Low dose
        #[arg(long)]
        v: f64,
        /// Number of unit periods
        #[arg(long = "N", default_value_t = 40)]
        n_periods: u32,
        /// Interior sample points per segment
        #[arg(long, default_value_t = 8)]
        samples: usize,
    },
    /// Fast-exchange limit of the two-type model: lambda_max(a) against the DIP rate
    Dip {
        #[command(flatten)]
        io: Io,
        /// Dose u at which the limit is evaluated
        #[arg(long)]
        dose: f64,
    },
    /// Flux-growth decomposition of A(u): inter-compartment fluxes and net growth rates
    Decompose {
        #[command(flatten)]
        io: Io,
        /// Dose u
        #[arg(long)]
        dose: f64,
    },
}

#[derive(Clone)]
struct GridSpec {
    min: f64,
    max: f64,
    count: usize,
}

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected MIN:MAX:COUNT, got '{s}'"));
        }
        let min = parts[0].parse::<f64>().map_err(|e| format!("bad MIN '{}': {e}", parts[0]))?;
        let max = parts[1].parse::<f64>().map_err(|e| format!("bad MAX '{}': {e}", parts[1]))?;
        let count =
            parts[2].parse::<usize>().map_err(|e| format!("bad COUNT '{}': {e}", parts[2]))?;
        Ok(GridSpec { min, max, count })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn of(operation: &str, err: Error) -> Self {
        let code = match err {
            Error::NoConvergence { .. } | Error::Overflow { .. } => 3,
            _ => 2,
        };
        Failure { code, message: format!("{operation}: {err}") }
    }

    fn validation(operation: &str, message: impl Into<String>) -> Self {
        Failure { code: 2, message: format!("{operation}: {}", message.into()) }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Validate { io } => {
            let model = load(&io)?;
            let (lo, hi) = model.family.dose_domain();
            let family = match model.family.variant() {
                FamilyVariant::Affine { .. } => "affine",
                FamilyVariant::Dip { .. } => "dip",
                FamilyVariant::Tabulated { .. } => "tabulated",
            };
            let report = json!({
                "valid": true,
                "n": model.n(),
                "family": family,
                "dose_domain": [lo, hi],
                "irreducible_at_domain_ends": [
                    model.matrix_at(lo).map(|m| m.is_irreducible()).unwrap_or(false),
                    model.matrix_at(hi).map(|m| m.is_irreducible()).unwrap_or(false),
                ],
            });
            emit(&io, pretty(&report))
        }
        Command::Rate { io, dose } => {
            let model = load(&io)?;
            let (rho, irreducible) =
                dominant_rate(&model, dose).map_err(|e| Failure::of("rate", e))?;
            let mut report = json!({ "rho": rho, "irreducible": irreducible });
            if !irreducible {
                report["warning"] = json!(
                    "matrix is reducible at this dose; rho is the dominant eigenvalue but \
                     the rate theorem for irreducible positive systems does not apply"
                );
            }
            emit(&io, pretty(&report))
        }
        Command::Sweep { io, grid } => {
            let model = load(&io)?;
            let doses = dose_grid(grid.min, grid.max, grid.count)
                .map_err(|e| Failure::of("sweep", e))?;
            let profile = sweep(&model, &doses).map_err(|e| Failure::of("sweep", e))?;
            match io.format {
                Format::Csv => emit(&io, profile.to_csv()),
                Format::Json => {
                    let reward = classify_antifragility(&profile, Objective::RewardMax);
                    let cost = classify_antifragility(&profile, Objective::CostMin);
                    let report = json!({
                        "profile": profile,
                        "antifragility": { "reward_max": reward, "cost_min": cost },
                    });
                    emit(&io, pretty(&report))
                }
            }
        }
        Command::Simulate { io, dose, u, v, n_periods, samples, tail_fraction } => {
            let model = load(&io)?;
            let protocol = match (dose, u, v) {
                (Some(w), None, None) => Protocol::uniform(w, 1.0, n_periods),
                (None, Some(u), Some(v)) => Protocol::pulsed(u, v, n_periods),
                _ => {
                    return Err(Failure::validation(
                        "simulate",
                        "specify either --dose (uniform) or --u and --v (pulsed)",
                    ))
                }
            }
            .map_err(|e| Failure::of("simulate", e))?;
            let traj =
                simulate(&model, &protocol, samples).map_err(|e| Failure::of("simulate", e))?;

            let mut sidecar: serde_json::Value =
                serde_json::from_str(&traj.sidecar_json()).expect("sidecar is valid JSON");
            match estimate_log_rate(&traj, tail_fraction) {
                Ok(rate) => sidecar["estimated_rate"] = json!(rate),
                Err(e) => eprintln!("warning: simulate: rate estimate unavailable: {e}"),
            }
            if let Some(dose) = dose {
                warn_short_horizon(&model, dose, traj.final_time(), tail_fraction);
            }

            match &io.output {
                Some(path) => {
                    let sidecar_path = path.with_extension(format!(
                        "{}json",
                        path.extension().map(|e| format!("{}.", e.to_string_lossy())).unwrap_or_default()
                    ));
                    std::fs::write(&sidecar_path, pretty(&sidecar))
                        .map_err(|e| Failure::validation("simulate", e.to_string()))?;
                }
                None => eprintln!("{}", pretty(&sidecar)),
            }
            emit(&io, traj.to_csv())
        }
        Command::Compare { io, u, v, n_periods, samples } => {
            let model = load(&io)?;
            let report = compare_protocols(&model, u, v, n_periods, samples)
                .map_err(|e| Failure::of("compare", e))?;
            emit(&io, pretty(&serde_json::to_value(&report).expect("comparison serializes")))
        }
        Command::Dip { io, dose } => {
            let model = load(&io)?;
            let FamilyVariant::Dip { b, d, k, .. } = *model.family.variant() else {
                return Err(Failure::validation(
                    "dip",
                    format!("model '{}' is not a dip family", io.model.display()),
                ));
            };
            let rho = dip_rate(b, d, k, dose);
            let scales = [1e2, 1e3, 1e4, 1e5];
            let mut rows = Vec::new();
            for &a in &scales {
                let cf = closed_form_eigenvalue(a, b, d, k, dose)
                    .map_err(|e| Failure::of("dip", e))?;
                rows.push((a, cf.lambda_max, rho, (cf.lambda_max - rho).abs()));
            }
            match io.format {
                Format::Csv => {
                    let mut out = String::from("a,lambda_max,dip_rate,abs_error\n");
                    for (a, lambda, rho, err) in &rows {
                        writeln!(out, "{a},{lambda},{rho},{err}").unwrap();
                    }
                    emit(&io, out)
                }
                Format::Json => {
                    let report = json!({
                        "dose": dose,
                        "dip_rate": rho,
                        "table": rows.iter().map(|(a, lambda, rho, err)| json!({
                            "a": a, "lambda_max": lambda, "dip_rate": rho, "abs_error": err,
                        })).collect::<Vec<_>>(),
                        "branch_note": "lambda_max takes the + branch of the quadratic \
                            formula, (T + sqrt(T^2 - 4D)) / 2; with the substitution x = -T \
                            this is (-x + sqrt(x^2 - px + q)) / 2, whose x -> infinity limit \
                            -p/2 equals the DIP rate. Only the + branch matches the \
                            Perron eigenvalue.",
                    });
                    emit(&io, pretty(&report))
                }
            }
        }
        Command::Decompose { io, dose } => {
            let model = load(&io)?;
            let matrix = model.matrix_at(dose).map_err(|e| Failure::of("decompose", e))?;
            let parts = flux_decompose(&matrix);
            let n = matrix.n();
            let flux_rows: Vec<Vec<f64>> =
                (0..n).map(|i| (0..n).map(|j| parts.fluxes[(i, j)]).collect()).collect();
            let growth: Vec<f64> = parts.growth.iter().copied().collect();
            match io.format {
                Format::Csv => {
                    let mut out = String::from("kind,i,j,value\n");
                    for i in 0..n {
                        for j in 0..n {
                            if i != j {
                                writeln!(out, "flux,{},{},{}", i + 1, j + 1, flux_rows[i][j])
                                    .unwrap();
                            }
                        }
                    }
                    for (i, g) in growth.iter().enumerate() {
                        writeln!(out, "growth,{},,{g}", i + 1).unwrap();
                    }
                    emit(&io, out)
                }
                Format::Json => {
                    emit(&io, pretty(&json!({ "fluxes": flux_rows, "growth": growth })))
                }
            }
        }
    }
}

fn load(io: &Io) -> Result<SystemModel, Failure> {
    if io.meta {
        eprintln!("# lograte {}", env!("CARGO_PKG_VERSION"));
        eprintln!("# argv: {}", std::env::args().collect::<Vec<_>>().join(" "));
        eprintln!("# model: {}", io.model.display());
    }
    let text = std::fs::read_to_string(&io.model).map_err(|e| {
        Failure::validation("load_model", format!("{}: {e}", io.model.display()))
    })?;
    load_model(&text).map_err(|e| Failure::of("load_model", e))
}

fn pretty(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn emit(io: &Io, report: String) -> Result<(), Failure> {
    match &io.output {
        Some(path) => std::fs::write(path, report)
            .map_err(|e| Failure::validation("write_report", format!("{}: {e}", path.display()))),
        None => {
            print!("{report}");
            Ok(())
        }
    }
}

/// The tail rate estimate needs the transient, which dies at the spectral
/// gap, to have cleared the estimation window.
fn warn_short_horizon(model: &SystemModel, dose: f64, horizon: f64, tail_fraction: f64) {
    let Ok(matrix) = model.matrix_at(dose) else { return };
    if !matrix.is_irreducible() {
        return;
    }
    if let Ok(p) = perron_eigenpair(&matrix) {
        if p.gap * horizon * tail_fraction < 10.0 {
            eprintln!(
                "warning: simulate: gap * horizon * tail_fraction = {:.2} < 10; \
                 the tail window may still contain transient",
                p.gap * horizon * tail_fraction
            );
        }
    }
}
