//! Report documents: each subcommand builds one of these and renders it either as an
//! aligned text table or as deterministic JSON.
//!
//! Exact quantities are carried as `"num/den"` strings; floating-point values appear only
//! inside a `numeric` block.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use arakelov_core::catalog::{Check, FermatReport, X0NPrimeReport, X0NReport, XNReport};
use arakelov_core::divisors::PrimeContribution;
use arakelov_core::exact::format_rational;
use arakelov_core::fiber::{ComponentRecord, DualStats};
use arakelov_core::green::SelftestReport;
use arakelov_core::{BoundExpression, FormalLogSum};

/// A symbolic expression both as structured terms and as a display string.
#[derive(Debug, Serialize)]
pub struct ExprDoc {
    pub display: String,
    pub terms: BoundExpression,
}

impl From<&BoundExpression> for ExprDoc {
    fn from(e: &BoundExpression) -> Self {
        Self {
            display: e.to_string(),
            terms: e.clone(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct LogSumDoc {
    pub display: String,
    pub terms: FormalLogSum,
}

impl From<&FormalLogSum> for LogSumDoc {
    fn from(s: &FormalLogSum) -> Self {
        Self {
            display: s.to_string(),
            terms: s.clone(),
        }
    }
}

/// Numeric evaluation of an expression under user bindings.
#[derive(Debug, Serialize)]
pub struct Evaluation {
    /// Full value, or `null` while some symbol is unbound.
    pub value: Option<f64>,
    /// Value of the terms whose symbols are all bound.
    pub evaluable_part: f64,
    /// Exact remainder that could not be evaluated.
    pub unevaluated: ExprDoc,
    pub unbound_symbols: Vec<String>,
}

impl Evaluation {
    pub fn new(e: &BoundExpression, bindings: &BTreeMap<String, f64>) -> Self {
        let (bound, rest) = e.partition_by_bindings(bindings);
        let evaluable_part = bound.eval(bindings).expect("all symbols bound");
        Self {
            value: rest.is_zero().then_some(evaluable_part),
            evaluable_part,
            unevaluated: ExprDoc::from(&rest),
            unbound_symbols: e.unbound_symbols(bindings).into_iter().collect(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct NumericBlock {
    pub bindings: BTreeMap<String, f64>,
    pub evaluations: BTreeMap<String, Evaluation>,
}

impl NumericBlock {
    pub fn new<'a>(
        bindings: &BTreeMap<String, f64>,
        exprs: impl IntoIterator<Item = (&'a str, &'a BoundExpression)>,
    ) -> Self {
        Self {
            bindings: bindings.clone(),
            evaluations: exprs
                .into_iter()
                .map(|(k, e)| (k.to_string(), Evaluation::new(e, bindings)))
                .collect(),
        }
    }

    fn render(&self, out: &mut String) {
        let binds: Vec<String> = self.bindings.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let _ = writeln!(out, "\nnumeric evaluation ({})", binds.join(", "));
        for (name, ev) in &self.evaluations {
            match ev.value {
                Some(v) => {
                    let _ = writeln!(out, "  {name:<10} {v:.6}");
                }
                None => {
                    let _ = writeln!(
                        out,
                        "  {name:<10} {:.6} + ({})   [unbound: {}]",
                        ev.evaluable_part,
                        ev.unevaluated.display,
                        ev.unbound_symbols.join(", ")
                    );
                }
            }
        }
    }
}

fn render_checks(checks: &[Check], out: &mut String) {
    if checks.is_empty() {
        return;
    }
    let _ = writeln!(out, "\nchecks");
    for c in checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        match &c.detail {
            Some(d) => {
                let _ = writeln!(out, "  [{status}] {} ({d})", c.name);
            }
            None => {
                let _ = writeln!(out, "  [{status}] {}", c.name);
            }
        }
    }
}

/// Left-aligned columns separated by two spaces.
fn table(headers: &[&str], rows: &[Vec<String>], out: &mut String) {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, cell) in widths.iter_mut().zip(r) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>, out: &mut String| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}", w = *w))
            .collect();
        let _ = writeln!(out, "  {}", parts.join("  ").trim_end());
    };
    line(headers.to_vec(), out);
    for r in rows {
        line(r.iter().map(String::as_str).collect(), out);
    }
}

fn stats_cell(s: &DualStats) -> String {
    format!("({}, {}, {}, {})", s.r, s.u, s.l, s.c)
}

fn contribution_table(pc: &PrimeContribution, out: &mut String) {
    let rows: Vec<Vec<String>> = pc
        .cusps
        .iter()
        .map(|c| {
            vec![
                c.name.clone(),
                c.width.to_string(),
                format_rational(&c.g_self_intersection),
                format_rational(&c.f_self_intersection),
                coeff_list(&c.g_coefficients),
                coeff_list(&c.f_coefficients),
            ]
        })
        .collect();
    table(&["cusp", "b", "G^2", "F^2", "G", "F"], &rows, out);
}

fn coeff_list(v: &[arakelov_core::Rational]) -> String {
    let parts: Vec<String> = v.iter().map(format_rational).collect();
    format!("[{}]", parts.join(", "))
}

#[derive(Debug, Serialize)]
pub struct X0NInputs {
    #[serde(rename = "N")]
    pub n: u64,
    pub primes: Vec<u64>,
}

#[derive(Debug, Serialize)]
pub struct X0NDocument<'a> {
    pub command: &'static str,
    pub inputs: X0NInputs,
    #[serde(rename = "N")]
    pub n: u64,
    pub genus: u64,
    pub degree: u64,
    pub prime_factors: &'a [u64],
    pub cusps: &'a [arakelov_core::catalog::Cusp],
    pub primes: Vec<&'a X0NPrimeReport>,
    pub geometric: LogSumDoc,
    pub geometric_closed_form: LogSumDoc,
    pub analytic: ExprDoc,
    pub total: ExprDoc,
    pub leading_term: ExprDoc,
    pub checks: &'a [Check],
    pub all_checks_passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub numeric: Option<NumericBlock>,
}

impl<'a> X0NDocument<'a> {
    pub fn new(r: &'a X0NReport, filter: &[u64], bindings: &BTreeMap<String, f64>) -> Self {
        let primes = r
            .primes
            .iter()
            .filter(|p| filter.is_empty() || filter.contains(&p.p))
            .collect();
        let numeric = (!bindings.is_empty()).then(|| {
            NumericBlock::new(
                bindings,
                [
                    ("analytic", &r.analytic),
                    ("total", &r.total),
                    ("leading", &r.leading_term),
                ],
            )
        });
        Self {
            command: "x0n",
            inputs: X0NInputs {
                n: r.data.n,
                primes: filter.to_vec(),
            },
            n: r.data.n,
            genus: r.data.g,
            degree: r.data.d,
            prime_factors: &r.data.prime_factors,
            cusps: &r.data.cusps,
            primes,
            geometric: LogSumDoc::from(&r.geometric),
            geometric_closed_form: LogSumDoc::from(&r.geometric_closed_form),
            analytic: ExprDoc::from(&r.analytic),
            total: ExprDoc::from(&r.total),
            leading_term: ExprDoc::from(&r.leading_term),
            checks: &r.checks,
            all_checks_passed: r.all_passed(),
            numeric,
        }
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "X0({})  genus g = {}  degree d = {}  primes {:?}",
            self.n, self.genus, self.degree, self.prime_factors
        );
        let cusp_rows: Vec<Vec<String>> = self
            .cusps
            .iter()
            .map(|c| vec![c.name.clone(), c.width.to_string()])
            .collect();
        let _ = writeln!(out, "\ncusps");
        table(&["cusp", "width"], &cusp_rows, &mut out);

        let rows: Vec<Vec<String>> = self
            .primes
            .iter()
            .map(|p| {
                vec![
                    p.p.to_string(),
                    p.components.len().to_string(),
                    stats_cell(&p.stats),
                    format_rational(&p.solved.weighted_g2),
                    format_rational(&p.solved.weighted_f2),
                    format_rational(&p.solved.a_p),
                    format_rational(&p.b_p),
                    format_rational(&p.a_p_bound),
                ]
            })
            .collect();
        let _ = writeln!(out, "\nfibers");
        table(
            &["p", "r", "(r,u,l,c)", "sum bG^2", "sum bF^2", "a_p", "b_p", "2g b_p"],
            &rows,
            &mut out,
        );
        for p in &self.primes {
            let _ = writeln!(out, "\ncorrection divisors at p = {} (components {})", p.p, p.components.join(" "));
            contribution_table(&p.solved, &mut out);
        }
        let _ = writeln!(out, "\ngeometric    {}", self.geometric.display);
        let _ = writeln!(out, "closed form  {}", self.geometric_closed_form.display);
        let _ = writeln!(out, "analytic     {}", self.analytic.display);
        let _ = writeln!(out, "total        {}", self.total.display);
        let _ = writeln!(out, "leading      {}", self.leading_term.display);
        render_checks(self.checks, &mut out);
        if let Some(n) = &self.numeric {
            n.render(&mut out);
        }
        out
    }
}

#[derive(Debug, Serialize)]
pub struct SweepLevel {
    #[serde(rename = "N")]
    pub n: u64,
    pub genus: u64,
    pub degree: u64,
    pub a_p: BTreeMap<u64, String>,
    pub b_p: BTreeMap<u64, String>,
    pub geometric: LogSumDoc,
    pub failed_checks: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct SweepDocument {
    pub command: &'static str,
    pub max_n: u64,
    pub levels: Vec<SweepLevel>,
    pub all_checks_passed: bool,
}

impl SweepDocument {
    pub fn new(max_n: u64, reports: &[X0NReport]) -> Self {
        let levels: Vec<SweepLevel> = reports
            .iter()
            .map(|r| SweepLevel {
                n: r.data.n,
                genus: r.data.g,
                degree: r.data.d,
                a_p: r.primes.iter().map(|p| (p.p, format_rational(&p.solved.a_p))).collect(),
                b_p: r.primes.iter().map(|p| (p.p, format_rational(&p.b_p))).collect(),
                geometric: LogSumDoc::from(&r.geometric),
                failed_checks: r
                    .checks
                    .iter()
                    .filter(|c| !c.passed)
                    .map(|c| c.name.clone())
                    .collect(),
            })
            .collect();
        Self {
            command: "sweep",
            max_n,
            all_checks_passed: levels.iter().all(|l| l.failed_checks.is_empty()),
            levels,
        }
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        let rows: Vec<Vec<String>> = self
            .levels
            .iter()
            .map(|l| {
                let status = if l.failed_checks.is_empty() {
                    "ok".to_string()
                } else {
                    format!("FAILED: {}", l.failed_checks.join("; "))
                };
                vec![
                    l.n.to_string(),
                    l.genus.to_string(),
                    l.degree.to_string(),
                    l.geometric.display.clone(),
                    status,
                ]
            })
            .collect();
        table(&["N", "g", "d", "sum a_p log p", "checks"], &rows, &mut out);
        let _ = writeln!(out, "\n{} levels up to N = {}", self.levels.len(), self.max_n);
        out
    }
}

#[derive(Debug, Serialize)]
pub struct ComponentDoc<'a> {
    #[serde(flatten)]
    pub record: &'a ComponentRecord,
    pub self_intersection: String,
}

#[derive(Debug, Serialize)]
pub struct FiberInputs {
    pub input: String,
    pub genus: u64,
    pub degree: u64,
    pub galois: bool,
    pub sections_required: bool,
}

#[derive(Debug, Serialize)]
pub struct FiberDocument<'a> {
    pub command: &'static str,
    pub inputs: FiberInputs,
    pub prime_norm: u64,
    pub residue_char: u64,
    pub components: Vec<ComponentDoc<'a>>,
    /// `null` for a single-component fiber, where the statistics are undefined.
    pub stats: Option<DualStats>,
    pub b_p: Option<String>,
    pub a_p_bound: Option<String>,
    /// `null` when the file carries no section data.
    pub contribution: Option<PrimeContribution>,
    pub checks: Vec<Check>,
    pub all_checks_passed: bool,
}

impl FiberDocument<'_> {
    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "fiber over Nm p = {} (char {}), genus {}, degree {}",
            self.prime_norm, self.residue_char, self.inputs.genus, self.inputs.degree
        );
        let rows: Vec<Vec<String>> = self
            .components
            .iter()
            .map(|c| {
                vec![
                    c.record.name.clone(),
                    c.record.multiplicity.to_string(),
                    c.record.genus.to_string(),
                    c.record.local_degree.as_ref().map(format_rational).unwrap_or_else(|| "-".into()),
                    c.self_intersection.clone(),
                ]
            })
            .collect();
        let _ = writeln!(out, "\ncomponents");
        table(&["name", "m", "p_a", "deg", "C^2"], &rows, &mut out);
        let _ = writeln!(out);
        match &self.stats {
            Some(s) => {
                let _ = writeln!(out, "(r,u,l,c)  {}", stats_cell(s));
            }
            None => {
                let _ = writeln!(out, "(r,u,l,c)  undefined (single component)");
            }
        }
        let opt = |v: &Option<String>| v.clone().unwrap_or_else(|| "-".into());
        let _ = writeln!(out, "b_p        {}", opt(&self.b_p));
        let _ = writeln!(out, "bound      {}", opt(&self.a_p_bound));
        match &self.contribution {
            Some(pc) => {
                let _ = writeln!(out, "sum bG^2   {}", format_rational(&pc.weighted_g2));
                let _ = writeln!(out, "sum bF^2   {}", format_rational(&pc.weighted_f2));
                let _ = writeln!(out, "a_p        {}", format_rational(&pc.a_p));
                let _ = writeln!(out);
                contribution_table(pc, &mut out);
            }
            None => {
                let _ = writeln!(out, "a_p        - (no section data)");
            }
        }
        render_checks(&self.checks, &mut out);
        out
    }
}

#[derive(Debug, Serialize)]
pub struct FermatDocument<'a> {
    pub command: &'static str,
    pub p: u64,
    #[serde(flatten)]
    pub report: &'a FermatReport,
    pub bound_display: String,
    pub bound_raw_display: String,
}

impl<'a> FermatDocument<'a> {
    pub fn new(report: &'a FermatReport) -> Self {
        Self {
            command: "fermat",
            p: report.params.p,
            report,
            bound_display: report.bound.to_string(),
            bound_raw_display: report.bound_raw.to_string(),
        }
    }

    pub fn table(&self) -> String {
        let r = self.report;
        let f = &r.params;
        let mut out = String::new();
        let _ = writeln!(out, "Fermat curve of exponent p = {}", f.p);
        let rows = vec![
            vec!["genus".into(), f.genus.to_string()],
            vec!["[K:Q]".into(), f.field_degree.to_string()],
            vec!["r_max".into(), f.r_max.to_string()],
            vec!["(u, l, c)".into(), format!("({}, {}, {})", f.u, f.l, f.c)],
            vec!["b_p raw".into(), format_rational(&r.b_p_raw)],
            vec!["envelope".into(), format_rational(&r.envelope)],
            vec!["flag".into(), r.flag.to_string()],
        ];
        table(&["parameter", "value"], &rows, &mut out);
        let _ = writeln!(out, "\nbound (envelope)  {}", self.bound_display);
        let _ = writeln!(out, "bound (raw b_p)   {}", self.bound_raw_display);
        out
    }
}

#[derive(Debug, Serialize)]
pub struct XNDocument<'a> {
    pub command: &'static str,
    #[serde(flatten)]
    pub report: &'a XNReport,
    pub bound_display: String,
}

impl<'a> XNDocument<'a> {
    pub fn new(report: &'a XNReport) -> Self {
        Self {
            command: "xn",
            report,
            bound_display: report.bound.to_string(),
        }
    }

    pub fn table(&self) -> String {
        let p = &self.report.params;
        let mut out = String::new();
        let _ = writeln!(out, "X({})  genus {}  [K:Q] = {}", p.n, p.genus, p.field_degree);
        let rows: Vec<Vec<String>> = p
            .primes
            .iter()
            .map(|q| {
                vec![
                    q.p.to_string(),
                    q.k.to_string(),
                    q.m.to_string(),
                    q.r.to_string(),
                    q.s.to_string(),
                    q.m_p.to_string(),
                    format_rational(&q.envelope),
                ]
            })
            .collect();
        let _ = writeln!(out);
        table(&["p", "k", "m", "r", "s", "m_p", "b envelope"], &rows, &mut out);
        let _ = writeln!(out, "\nbound  {}", self.bound_display);
        out
    }
}

#[derive(Debug, Serialize)]
pub struct InstanceNumeric {
    pub lambda1: f64,
    pub bound_resolvent: f64,
    pub bound_doubled: f64,
}

#[derive(Debug, Serialize)]
pub struct InstanceDoc {
    pub trial: u64,
    pub instance_seed: u64,
    pub passed: bool,
    pub identities: Vec<Check>,
    pub c: String,
    pub f_norm_sq: String,
    pub sandwich_holds: bool,
    pub numeric: InstanceNumeric,
}

#[derive(Debug, Serialize)]
pub struct GreenDocument {
    pub command: &'static str,
    pub n: usize,
    pub seed: u64,
    pub trials: u64,
    pub passed: u64,
    pub all_passed: bool,
    pub instances: Vec<InstanceDoc>,
}

impl GreenDocument {
    pub fn new(r: &SelftestReport) -> Self {
        Self {
            command: "green-selftest",
            n: r.n,
            seed: r.seed,
            trials: r.trials,
            passed: r.passed,
            all_passed: r.all_passed(),
            instances: r
                .instances
                .iter()
                .map(|i| InstanceDoc {
                    trial: i.trial,
                    instance_seed: i.instance_seed,
                    passed: i.passed(),
                    identities: i.identities.checks.clone(),
                    c: format_rational(&i.spectral.c_exact),
                    f_norm_sq: format_rational(&i.spectral.f_norm_sq),
                    sandwich_holds: i.spectral.sandwich_holds,
                    numeric: InstanceNumeric {
                        lambda1: i.spectral.lambda1,
                        bound_resolvent: i.spectral.bound_resolvent,
                        bound_doubled: i.spectral.bound_doubled,
                    },
                })
                .collect(),
        }
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "Green identities on {} random surfaces with n = {} (seed {})",
            self.trials, self.n, self.seed
        );
        let rows: Vec<Vec<String>> = self
            .instances
            .iter()
            .map(|i| {
                vec![
                    i.trial.to_string(),
                    i.instance_seed.to_string(),
                    i.c.clone(),
                    format!("{:.6e}", i.numeric.lambda1),
                    format!("{:.6e}", i.numeric.bound_resolvent),
                    if i.passed { "ok".into() } else { "FAILED".into() },
                ]
            })
            .collect();
        let _ = writeln!(out);
        table(&["trial", "seed", "c", "lambda1", "|f|^2/lambda1", "status"], &rows, &mut out);
        let _ = writeln!(out, "\n{}/{} instances passed", self.passed, self.trials);
        out
    }
}
