//! `arakelov`: reports on fibral intersection data and bounds for the self-intersection of
//! the dualizing sheaf of modular and Fermat curves.

mod error;
mod report;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use arakelov_core::bounds::{ap_upper_bound, compute_bp};
use arakelov_core::catalog::{
    fermat_report, first_failure, valid_levels, x0n_fiber, x0n_report, x0n_sweep, xn_report,
    Check,
};
use arakelov_core::divisors::prime_contribution;
use arakelov_core::exact::format_rational;
use arakelov_core::fiber::FiberError;
use arakelov_core::fiber_io::{parse_fiber_json, to_fiber_json};
use arakelov_core::green::selftest;
use arakelov_core::Execution;

use error::{from_divisor_error, CliError};
use report::{
    ComponentDoc, FermatDocument, FiberDocument, FiberInputs, GreenDocument, SweepDocument,
    X0NDocument, XNDocument,
};

#[derive(Debug, Parser)]
#[command(name = "arakelov", version, about = "Exact fibral intersection data and dualizing-sheaf bounds")]
struct Cli {
    /// Run every computation on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Full report for X0(N): fibers, correction divisors, a_p, b_p and the total bound.
    X0n {
        #[arg(long = "N", value_name = "N")]
        n: u64,
        /// Restrict the per-prime tables to these primes (repeatable).
        #[arg(long = "prime", value_name = "P")]
        primes: Vec<u64>,
        /// Bind a named constant for numeric evaluation, e.g. `kappa0=1` (repeatable).
        #[arg(long = "bind", value_name = "NAME=VALUE", value_parser = parse_binding)]
        bindings: Vec<(String, f64)>,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Runs the X0(N) report over every admissible level up to a cap.
    Sweep {
        #[arg(long, env = "ARAKELOV_MAX_N", default_value_t = 200)]
        max_n: u64,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Writes the X0(N) fiber at p as a fiber description file.
    FiberExport {
        #[arg(long = "N", value_name = "N")]
        n: u64,
        #[arg(long = "prime", value_name = "P")]
        prime: u64,
        /// Output path; standard output when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Analyzes a fiber description file.
    FiberAnalyze {
        #[arg(long, value_name = "PATH")]
        input: PathBuf,
        #[arg(long)]
        genus: u64,
        /// Degree of the covering of the projective line.
        #[arg(long)]
        degree: u64,
        /// Fail when the file carries no section (cusp) data.
        #[arg(long)]
        sections_required: bool,
        /// The curve is a Galois cover of the projective line (sharper a_p bound).
        #[arg(long)]
        galois: bool,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Parameters, b_p against its envelope, and the bound for a Fermat curve.
    Fermat {
        #[arg(long)]
        p: u64,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Fiber parameters and the bound for X(N).
    Xn {
        #[arg(long = "N", value_name = "N")]
        n: u64,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Checks the discrete Green-function identities on random instances.
    GreenSelftest {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        trials: u64,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
}

fn parse_binding(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| format!("expected NAME=VALUE, got {s:?}"))?;
    let name = name.trim();
    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return Err(format!("invalid constant name {name:?}"));
    }
    let value: f64 = value
        .trim()
        .parse()
        .map_err(|e| format!("invalid value for {name}: {e}"))?;
    if !value.is_finite() {
        return Err(format!("value for {name} must be finite"));
    }
    Ok((name.to_string(), value))
}

/// Rendered output plus an optional failure to report after printing it.
struct Outcome {
    text: String,
    failure: Option<CliError>,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Self { text, failure: None }
    }
}

fn render<T: Serialize>(format: Format, doc: &T, table: impl FnOnce() -> String) -> Result<String, CliError> {
    Ok(match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(doc)?;
            s.push('\n');
            s
        }
        Format::Table => table(),
    })
}

fn failed_check(checks: &[Check]) -> Option<CliError> {
    first_failure(checks)
        .map(|c| CliError::Internal(format!("exact check failed: {}", c.name)))
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    match cli.command {
        Command::X0n {
            n,
            primes,
            bindings,
            format,
        } => {
            let report = x0n_report(n, exec)?;
            if let Some(p) = primes.iter().find(|p| !report.data.prime_factors.contains(p)) {
                return Err(CliError::usage(format!("prime {p} does not divide N = {n}")));
            }
            let bindings: BTreeMap<String, f64> = bindings.into_iter().collect();
            let doc = X0NDocument::new(&report, &primes, &bindings);
            Ok(Outcome {
                text: render(format, &doc, || doc.table())?,
                failure: failed_check(&report.checks),
            })
        }
        Command::Sweep { max_n, format } => {
            let reports = x0n_sweep(max_n, exec)?;
            debug_assert_eq!(reports.len(), valid_levels(max_n).len());
            let doc = SweepDocument::new(max_n, &reports);
            let failure = reports
                .iter()
                .find_map(|r| failed_check(&r.checks).map(|e| (r.data.n, e)))
                .map(|(n, e)| CliError::Internal(format!("N = {n}: {e}")));
            Ok(Outcome {
                text: render(format, &doc, || doc.table())?,
                failure,
            })
        }
        Command::FiberExport { n, prime, output } => {
            let fiber = x0n_fiber(n, prime)?;
            let text = to_fiber_json(&fiber) + "\n";
            match output {
                Some(path) => {
                    std::fs::write(&path, &text).map_err(|e| {
                        CliError::usage(format!("cannot write {}: {e}", path.display()))
                    })?;
                    Ok(Outcome::ok(String::new()))
                }
                None => Ok(Outcome::ok(text)),
            }
        }
        Command::FiberAnalyze {
            input,
            genus,
            degree,
            sections_required,
            galois,
            format,
        } => fiber_analyze(
            FiberInputs {
                input: input.display().to_string(),
                genus,
                degree,
                galois,
                sections_required,
            },
            &input,
            format,
        ),
        Command::Fermat { p, format } => {
            let report = fermat_report(p)?;
            let doc = FermatDocument::new(&report);
            Ok(Outcome::ok(render(format, &doc, || doc.table())?))
        }
        Command::Xn { n, format } => {
            let report = xn_report(n)?;
            let doc = XNDocument::new(&report);
            Ok(Outcome::ok(render(format, &doc, || doc.table())?))
        }
        Command::GreenSelftest {
            n,
            seed,
            trials,
            format,
        } => {
            if n < 2 {
                return Err(CliError::usage(format!("--n must be at least 2, got {n}")));
            }
            let report = selftest(n, seed, trials, exec)?;
            let doc = GreenDocument::new(&report);
            let failure = report.failures().next().map(|f| {
                let what = f
                    .identities
                    .first_failure
                    .clone()
                    .unwrap_or_else(|| "spectral sandwich".into());
                CliError::Internal(format!(
                    "trial {} (instance seed {}) failed: {what}",
                    f.trial, f.instance_seed
                ))
            });
            Ok(Outcome {
                text: render(format, &doc, || doc.table())?,
                failure,
            })
        }
    }
}

fn fiber_analyze(inputs: FiberInputs, path: &Path, format: Format) -> Result<Outcome, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    let marked = parse_fiber_json(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    if inputs.genus < 2 {
        return Err(CliError::usage(format!("genus must be at least 2, got {}", inputs.genus)));
    }
    let violations = marked.validate(Some(inputs.degree));
    if !violations.is_empty() {
        let lines: Vec<String> = violations.iter().map(|v| format!("  {v}")).collect();
        return Err(CliError::usage(format!(
            "{}: invalid fiber\n{}",
            path.display(),
            lines.join("\n")
        )));
    }
    if marked.sections.is_empty() && inputs.sections_required {
        return Err(CliError::usage(format!("{}: fiber has no section data", path.display())));
    }

    let f = &marked.fiber;
    let self_int = f.self_intersections().map_err(|e| CliError::usage(e.to_string()))?;
    let stats = match f.dual_graph_stats() {
        Ok(s) => Some(s),
        Err(FiberError::SingleComponent { .. }) => None,
        Err(e) => return Err(CliError::usage(e.to_string())),
    };
    let b_p = stats
        .as_ref()
        .map(compute_bp)
        .transpose()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    let bound = b_p.as_ref().map(|b| ap_upper_bound(inputs.genus, b, inputs.galois));
    let contribution = if marked.sections.is_empty() {
        None
    } else {
        Some(prime_contribution(&marked, inputs.genus, inputs.degree).map_err(from_divisor_error)?)
    };

    let mut checks = Vec::new();
    if let (Some(pc), Some(bound)) = (&contribution, &bound) {
        let name = if inputs.galois { "a_p <= 2 b_p" } else { "a_p <= 2g b_p" };
        checks.push(Check::new(name, &pc.a_p <= bound));
    }
    if let Some(pc) = &contribution {
        let widths: u64 = pc.cusps.iter().map(|c| c.width).sum();
        checks.push(Check::new("cusp widths sum to d", widths == inputs.degree));
    }

    let doc = FiberDocument {
        command: "fiber-analyze",
        prime_norm: f.prime_norm(),
        residue_char: f.residue_char(),
        components: f
            .components()
            .iter()
            .zip(&self_int)
            .map(|(record, s)| ComponentDoc {
                record,
                self_intersection: format_rational(s),
            })
            .collect(),
        stats,
        b_p: b_p.as_ref().map(format_rational),
        a_p_bound: bound.as_ref().map(format_rational),
        contribution,
        all_checks_passed: checks.iter().all(|c| c.passed),
        checks,
        inputs,
    };
    let failure = failed_check(&doc.checks);
    Ok(Outcome {
        text: render(format, &doc, || doc.table())?,
        failure,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (text, failure) = match run(cli) {
        Ok(Outcome { text, failure }) => (text, failure),
        Err(e) => (String::new(), Some(e)),
    };
    print!("{text}");
    match failure {
        None => ExitCode::SUCCESS,
        Some(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
