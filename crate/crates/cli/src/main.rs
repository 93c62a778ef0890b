//! `divlift`: command-line driver for exact q-series, Hecke operators,
//! divisor lifts, quadratic forms, L-values, certified evaluation, twisted
//! traces, twisted Borcherds products and the verification suites.
//!
//! Exit codes: 0 on success, 1 when a mathematical check fails, 2 on a usage
//! error. Every report is assembled in full before anything is printed.

use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use rug::Rational;

use divlift::ball::{format_float, PrecisionCtx, RealBall};
use divlift::borcherds::{
    borcherds_product, borcherds_trace_series, bp_identity_check, gbhe_check, zagier_basis, zagier_basis_report, ProductMode,
    ProductSeries,
};
use divlift::hecke::{half_integral_ptp2, hecke_tn, mult_hecke, WeightedForm};
use divlift::lifts::{akn_generating, divisor_lift, divisor_solve, dlift_equivariance_check, equivariance_input_order};
use divlift::lvalues::{dirichlet_l1, fundamental_unit, regulator_product};
use divlift::numeval::{eval_modular, parse_tau, pointwise_hecke, ModularName};
use divlift::qforms::{class_number, enumerate_forms, genus_character, BinaryQF};
use divlift::series::{faber, standard_series, RSeries, StandardSeries};
use divlift::traces::{
    kronecker_limit_check, trace_classes, trace_hecke_relation, trace_relation_psquare, twisted_trace, Traceable,
};
use divlift::verify::{render_csv, render_text, run_all, run_suite, SuiteReport};
use divlift::Error;

const SCHEMA: &str = "divlift-report/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Parser, Debug)]
#[command(name = "divlift", version, about = "Divisor lifts, Hecke operators and twisted traces on the j-line")]
struct Cli {
    /// Decimal digits for numerical work (defaults are per command).
    #[arg(long, global = true, env = "DIVLIFT_DIGITS")]
    digits: Option<u32>,
    /// Number of stored q-expansion coefficients.
    #[arg(long, global = true, env = "DIVLIFT_ORDER")]
    order: Option<usize>,
    /// Worker threads (0 uses every core).
    #[arg(long, global = true, env = "DIVLIFT_THREADS", default_value_t = 0)]
    threads: usize,
    /// Output format.
    #[arg(long, global = true, env = "DIVLIFT_FORMAT", value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Expansion of a named series (E2, E4, E6, delta, j, theta, eta:m^r,...).
    Series { name: String },
    /// The Faber series J_n = F_n(j) and the polynomial F_n.
    Faber { n: u64 },
    /// Hecke operators on q-expansions.
    Hecke {
        #[command(subcommand)]
        action: HeckeAction,
    },
    /// Divisor lifts and their checks.
    Lift {
        #[command(subcommand)]
        action: LiftAction,
    },
    /// Binary quadratic forms.
    Qf {
        #[command(subcommand)]
        action: QfAction,
    },
    /// L-values, units and regulators.
    Lv {
        #[command(subcommand)]
        action: LvAction,
    },
    /// Certified value of a modular function.
    Eval {
        /// one, eta, j, J<n>, J0bold or frakf.
        name: String,
        /// The point, written x,y for x + iy.
        #[arg(long, allow_hyphen_values = true)]
        tau: String,
        /// Apply the pointwise Hecke operator for this prime first.
        #[arg(long)]
        hecke: Option<u64>,
        /// Weight used by the pointwise Hecke operator.
        #[arg(long, default_value_t = 0)]
        weight: i64,
    },
    /// Twisted traces: a value with --delta --d --f, or a relation check.
    Trace(TraceCmd),
    /// Zagier basis elements and twisted Borcherds products.
    Bz {
        #[command(subcommand)]
        action: BzAction,
    },
    /// Run a verification suite, or `all`.
    Verify { suite: String },
}

#[derive(Subcommand, Debug)]
enum HeckeAction {
    /// The additive operator T_n on a named series of the given weight.
    Tn {
        name: String,
        #[arg(long)]
        weight: i64,
        #[arg(long)]
        n: u64,
    },
    /// The multiplicative operator for the prime p on a normalized series.
    Mult {
        name: String,
        #[arg(long)]
        p: u64,
    },
    /// The plus-space operator p T(p^2) applied to the basis element f_d.
    Half {
        d: u64,
        #[arg(long)]
        p: u64,
    },
}

#[derive(Subcommand, Debug)]
enum LiftAction {
    /// D(f) = -Theta f/f + k E2/12 and the divisor of f it encodes.
    Divisor {
        name: String,
        #[arg(long)]
        weight: i64,
    },
    /// The generating function sum_n F_n(L) q^n.
    Akn,
    /// D(f|T(p)) against D(f)|T_p.
    CheckEquivariance {
        name: String,
        #[arg(long)]
        weight: i64,
        #[arg(long)]
        p: u64,
    },
}

#[derive(Subcommand, Debug)]
enum QfAction {
    /// Reduced classes of a negative discriminant.
    List {
        #[arg(allow_hyphen_values = true)]
        disc: i64,
        /// Fundamental discriminant for the genus character column.
        #[arg(long)]
        delta: Option<i64>,
    },
    /// The genus character of the form [a, b, c].
    Chi {
        delta: i64,
        a: i64,
        #[arg(allow_hyphen_values = true)]
        b: i64,
        c: i64,
    },
}

#[derive(Subcommand, Debug)]
enum LvAction {
    /// L(1, chi_D) by every available method.
    #[command(name = "L1", alias = "l1")]
    L1 {
        #[arg(allow_hyphen_values = true)]
        disc: i64,
    },
    /// The fundamental unit of a positive discriminant.
    Unit { disc: i64 },
    /// h log eps under each class-number and unit convention.
    Reg { disc: i64 },
}

#[derive(clap::Args, Debug)]
#[command(args_conflicts_with_subcommands = true)]
struct TraceCmd {
    #[command(subcommand)]
    action: Option<TraceAction>,
    #[arg(long)]
    delta: Option<i64>,
    #[arg(long)]
    d: Option<i64>,
    /// one, J<n>, J0bold or frakf.
    #[arg(long)]
    f: Option<String>,
}

#[derive(Subcommand, Debug)]
enum TraceAction {
    /// A Hecke trace relation, evaluated where it can be.
    Relation {
        #[arg(long)]
        delta: i64,
        #[arg(long)]
        d: i64,
        #[arg(long)]
        p: u64,
        /// Power of p in the index p^m n.
        #[arg(long, default_value_t = 1)]
        m: u32,
        /// Index n of J_(p^m n).
        #[arg(long, conflicts_with = "f")]
        n: Option<u64>,
        /// Use the p^2 specialization for this traceable instead.
        #[arg(long)]
        f: Option<String>,
    },
    /// The Kronecker limit identity under each convention.
    Klf {
        #[arg(long)]
        delta: i64,
        #[arg(long)]
        d: i64,
    },
}

#[derive(Subcommand, Debug)]
enum BzAction {
    /// The plus-space basis element f_d.
    Basis { d: u64 },
    /// The product Psi_Delta(f_d) and its exponents.
    Product {
        delta: i64,
        d: u64,
        /// Evaluate coefficients as balls instead of exact cyclotomic numbers.
        #[arg(long)]
        ball: bool,
    },
    /// Checks of the product lift.
    Check {
        #[command(subcommand)]
        kind: BzCheck,
    },
}

#[derive(Subcommand, Debug)]
enum BzCheck {
    /// The product formula against the finite product over CM points.
    Bp {
        delta: i64,
        d: u64,
        #[arg(long, allow_hyphen_values = true, default_value = "0,2")]
        tau: String,
        #[arg(long, default_value_t = 40)]
        terms: usize,
    },
    /// Hecke equivariance of the product lift.
    Gbhe { delta: i64, d: u64, p: u64 },
    /// Coefficients of D(Psi) against twisted traces of J_n.
    Traces {
        delta: i64,
        d: u64,
        #[arg(long, default_value_t = 6)]
        n: usize,
    },
}

/// Why a command stopped.
enum Failure {
    Usage(String),
    Check(Box<Output>),
    Math(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::UnknownName(_) | Error::Parse(_) | Error::InvalidArgument(_) | Error::NotInvariant(_) => {
                Failure::Usage(e.to_string())
            }
            e if e.is_check_failure() => Failure::Math(e.to_string()),
            e => Failure::Usage(e.to_string()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast::<Error>() {
            Ok(inner) => inner.into(),
            Err(e) => Failure::Usage(format!("{e:#}")),
        }
    }
}

type Outcome = std::result::Result<Output, Failure>;

/// A report in the three output shapes.
struct Output {
    json: Value,
    text: String,
    csv: String,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("error: cannot configure {} threads: {e}", cli.threads);
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(out) => {
            emit(&cli, &out);
            ExitCode::SUCCESS
        }
        Err(Failure::Check(out)) => {
            emit(&cli, &out);
            ExitCode::from(1)
        }
        Err(Failure::Math(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn emit(cli: &Cli, out: &Output) {
    match cli.format {
        Format::Json => {
            let envelope = json!({
                "schema": SCHEMA,
                "command": command_name(&cli.command),
                "digits": cli.digits,
                "order": cli.order,
                "result": out.json,
            });
            println!("{}", serde_json::to_string_pretty(&envelope).expect("reports serialize"));
        }
        Format::Text => print!("{}", ensure_newline(&out.text)),
        Format::Csv => {
            if out.csv.is_empty() {
                print!("{}", ensure_newline(&out.text));
            } else {
                print!("{}", out.csv);
            }
        }
    }
}

fn ensure_newline(s: &str) -> String {
    if s.ends_with('\n') {
        s.to_string()
    } else {
        format!("{s}\n")
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Series { .. } => "series",
        Command::Faber { .. } => "faber",
        Command::Hecke { .. } => "hecke",
        Command::Lift { .. } => "lift",
        Command::Qf { .. } => "qf",
        Command::Lv { .. } => "lv",
        Command::Eval { .. } => "eval",
        Command::Trace { .. } => "trace",
        Command::Bz { .. } => "bz",
        Command::Verify { .. } => "verify",
    }
}

fn ctx(cli: &Cli, default: u32) -> PrecisionCtx {
    PrecisionCtx::new(cli.digits.unwrap_or(default))
}

fn order(cli: &Cli, default: usize) -> usize {
    cli.order.unwrap_or(default)
}

fn series_output(label: Value, s: &RSeries) -> Output {
    let js = s.to_json();
    let mut csv = String::from("exponent,coefficient\n");
    for (i, c) in js.coeffs.iter().enumerate() {
        csv.push_str(&format!("{},{}\n", js.lead + i as i64, c));
    }
    let text = format!("{} + O(q^{})", render_series(s), s.prec());
    let mut json = json!({ "series": js, "method": "exact rational arithmetic" });
    if let (Value::Object(m), Value::Object(extra)) = (&mut json, label) {
        m.extend(extra);
    }
    Output { json, text, csv }
}

fn render_series(s: &RSeries) -> String {
    let terms: Vec<String> = s
        .coeffs()
        .iter()
        .enumerate()
        .filter(|(_, c)| c.cmp0() != std::cmp::Ordering::Equal)
        .map(|(i, c)| format!("{c}*q^{}", s.lead() + i as i64))
        .collect();
    if terms.is_empty() {
        "0".into()
    } else {
        terms.join(" + ")
    }
}

fn named_series(name: &str, order: usize) -> Result<RSeries, Failure> {
    Ok(standard_series(&StandardSeries::parse(name)?, order)?)
}

/// Turns a failed check into exit code 1 with the full report attached.
fn checked(pass: bool, out: Output) -> Outcome {
    if pass {
        Ok(out)
    } else {
        Err(Failure::Check(Box::new(out)))
    }
}

fn ball_json(b: &RealBall) -> Value {
    json!({ "value": b.mid_string(40), "radius": b.rad_string() })
}

fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Series { name } => {
            let s = named_series(name, order(cli, 20))?;
            Ok(series_output(json!({ "name": name }), &s))
        }
        Command::Faber { n } => {
            let (s, poly) = faber(*n, order(cli, 20))?;
            let poly_text = poly.to_string();
            let mut out = series_output(
                json!({ "n": n, "polynomial": poly_text, "method": "J_1|T_n checked against the multiply-and-reduce recursion" }),
                &s,
            );
            out.text = format!("F_{n}(L) = {poly_text}\nJ_{n} = {}", out.text);
            Ok(out)
        }
        Command::Hecke { action } => run_hecke(cli, action),
        Command::Lift { action } => run_lift(cli, action),
        Command::Qf { action } => run_qf(action),
        Command::Lv { action } => run_lv(cli, action),
        Command::Eval { name, tau, hecke, weight } => {
            let c = ctx(cli, 30);
            let z = parse_tau(tau, c.bits()).context("parsing --tau")?;
            let f = ModularName::parse(name)?;
            let (v, method) = match hecke {
                Some(p) => (pointwise_hecke(&f, *weight, *p, &z, &c)?, format!("pointwise T_{p} of {f}")),
                None => (eval_modular(&f, &z, &c)?, format!("{f} after reduction to the fundamental domain")),
            };
            let sig = (c.digits + 5) as usize;
            let json = json!({
                "name": name,
                "tau": tau,
                "digits": c.digits,
                "re": format_float(v.mid().real(), sig),
                "im": format_float(v.mid().imag(), sig),
                "rad": format_float(v.rad(), 6),
                "method": method,
            });
            Ok(Output { json, text: format!("{v}\n"), csv: String::new() })
        }
        Command::Trace(cmd) => run_trace(cli, cmd),
        Command::Bz { action } => run_bz(cli, action),
        Command::Verify { suite } => {
            let reports: Vec<SuiteReport> =
                if suite == "all" { run_all(cli.digits)? } else { vec![run_suite(suite, cli.digits)?] };
            let pass = reports.iter().all(|r| r.pass);
            let json = json!({ "suite": suite, "pass": pass, "reports": reports });
            let out = Output { json, text: render_text(&reports), csv: render_csv(&reports) };
            checked(pass, out)
        }
    }
}

fn run_hecke(cli: &Cli, action: &HeckeAction) -> Outcome {
    let ord = order(cli, 20);
    match action {
        HeckeAction::Tn { name, weight, n } => {
            let input = named_series(name, (ord + 2) * (*n as usize) + 2)?;
            let f = WeightedForm::new(input, *weight)?;
            let g = hecke_tn(&f, *n)?.with_order(ord)?;
            Ok(series_output(json!({ "name": name, "weight": weight, "operator": format!("T_{n}") }), &g))
        }
        HeckeAction::Mult { name, p } => {
            let input = named_series(name, (ord + 2) * (*p as usize) + 2)?;
            let g = mult_hecke(&input, *p)?.with_order(ord)?;
            Ok(series_output(json!({ "name": name, "operator": format!("multiplicative T({p})") }), &g))
        }
        HeckeAction::Half { d, p } => {
            let need = (*d as usize + ord + 2) * (*p * *p) as usize + 8;
            let f = zagier_basis(*d, need)?;
            let g = half_integral_ptp2(&f, *p)?;
            let s = g.series().truncate(ord as i64)?;
            Ok(series_output(json!({ "d": d, "operator": format!("{p} T({p}^2) on the plus space") }), &s))
        }
    }
}

fn run_lift(cli: &Cli, action: &LiftAction) -> Outcome {
    let ord = order(cli, 20);
    match action {
        LiftAction::Divisor { name, weight } => {
            let f = WeightedForm::new(named_series(name, ord + 1)?, *weight)?;
            let d = divisor_lift(&f)?;
            let mut out = series_output(json!({ "name": name, "weight": weight }), &d);
            let sums: Vec<_> = (1..d.prec()).map(|n| d.coeff(n)).collect::<divlift::Result<_>>()?;
            let data = divisor_solve(&sums, &Rational::from((*weight, 12)))?;
            if let Value::Object(m) = &mut out.json {
                m.insert("divisor".into(), data.to_json());
            }
            out.text = format!("{}\ndivisor: {data}", out.text);
            Ok(out)
        }
        LiftAction::Akn => {
            let g = akn_generating(ord)?;
            let polys: Vec<String> = g.coeffs().iter().map(|c| c.to_string()).collect();
            let text: String = polys.iter().enumerate().map(|(n, p)| format!("F_{n}(L) = {p}\n")).collect();
            let json = json!({ "order": ord, "polynomials": polys, "method": "-Theta j / (j - L) over Q[L]" });
            Ok(Output { json, text, csv: String::new() })
        }
        LiftAction::CheckEquivariance { name, weight, p } => {
            let f = WeightedForm::new(named_series(name, equivariance_input_order(*p, ord))?, *weight)?;
            let r = dlift_equivariance_check(&f, *p, ord)?;
            let json = serde_json::to_value(&r).expect("report serializes");
            let text = format!("D({name}|T({p})) = D({name})|T_{p} through q^{}: {}\n", ord - 1, verdict(r.pass));
            checked(r.pass, Output { json, text, csv: String::new() })
        }
    }
}

fn run_qf(action: &QfAction) -> Outcome {
    match action {
        QfAction::List { disc, delta } => {
            let forms = enumerate_forms(*disc)?;
            let h = class_number(*disc)?;
            let mut rows = Vec::new();
            let mut text = format!("discriminant {disc}: class number {h}\n");
            for (q, w) in &forms {
                let chi = match delta {
                    Some(de) => Some(genus_character(*de, q)?),
                    None => None,
                };
                rows.push(json!({ "a": q.a, "b": q.b, "c": q.c, "omega": w, "chi": chi }));
                text.push_str(&format!("{q} omega {w}"));
                if let Some(c) = chi {
                    text.push_str(&format!(" chi {c}"));
                }
                text.push('\n');
            }
            let json = json!({ "disc": disc, "class_number": h, "delta": delta, "forms": rows, "method": "Gauss reduction" });
            Ok(Output { json, text, csv: String::new() })
        }
        QfAction::Chi { delta, a, b, c } => {
            let q = BinaryQF::new(*a, *b, *c);
            let chi = genus_character(*delta, &q)?;
            let json = json!({ "a": a, "b": b, "c": c, "omega": q.reduce().omega(), "chi": chi, "delta": delta });
            Ok(Output { json, text: format!("chi_{delta}({q}) = {chi}\n"), csv: String::new() })
        }
    }
}

fn run_lv(cli: &Cli, action: &LvAction) -> Outcome {
    let c = ctx(cli, 30);
    match action {
        LvAction::L1 { disc } => {
            let l = dirichlet_l1(*disc, &c)?;
            let per: serde_json::Map<String, Value> = l.per_method.iter().map(|(k, v)| (k.clone(), ball_json(v))).collect();
            let json = json!({
                "disc": disc,
                "digits": c.digits,
                "value": l.value.mid_string(c.digits as usize + 5),
                "radius": l.value.rad_string(),
                "per_method": per,
            });
            Ok(Output { json, text: format!("L(1, chi_{disc}) = {}\n", l.value), csv: String::new() })
        }
        LvAction::Unit { disc } => {
            let u = fundamental_unit(*disc)?;
            let log = u.log(c.bits())?;
            let json = json!({
                "disc": disc,
                "x": u.x.to_string(),
                "y": u.y.to_string(),
                "norm": u.norm,
                "value": log.exp().mid_string(c.digits as usize + 5),
                "log": ball_json(&log),
            });
            let text = format!("eps = ({} + {} sqrt({disc}))/2, norm {}, log eps = {log}\n", u.x, u.y, u.norm);
            Ok(Output { json, text, csv: String::new() })
        }
        LvAction::Reg { disc } => {
            let r = regulator_product(*disc, &c)?;
            let per = json!({
                "wide": ball_json(&r.wide),
                "narrow_ordinary_unit": ball_json(&r.narrow_ordinary_unit),
                "narrow_totally_positive_unit": ball_json(&r.narrow_totally_positive_unit),
                "character_sum": ball_json(&r.character_sum),
            });
            let json = json!({
                "disc": disc,
                "digits": c.digits,
                "value": r.wide.mid_string(c.digits as usize + 5),
                "radius": r.wide.rad_string(),
                "wide_class_number": r.wide_class_number,
                "narrow_class_number": r.narrow_class_number,
                "unit": { "x": r.unit.x.to_string(), "y": r.unit.y.to_string(), "norm": r.unit.norm },
                "per_method": per,
            });
            let text = format!(
                "h = {}, h+ = {}; h log eps = {}; h+ log eps = {}; h+ log eps+ = {}\n",
                r.wide_class_number, r.narrow_class_number, r.wide, r.narrow_ordinary_unit, r.narrow_totally_positive_unit
            );
            Ok(Output { json, text, csv: String::new() })
        }
    }
}

fn run_trace(cli: &Cli, cmd: &TraceCmd) -> Outcome {
    let c = ctx(cli, 30);
    match &cmd.action {
        None => {
            let (Some(delta), Some(d), Some(name)) = (cmd.delta, cmd.d, cmd.f.as_ref()) else {
                return Err(Failure::Usage("trace needs --delta, --d and --f (or a subcommand)".into()));
            };
            let f = Traceable::parse(name)?;
            let v = twisted_trace(delta, d, &f, &c)?;
            let json = json!({
                "delta": delta,
                "d": d,
                "function": f.to_string(),
                "digits": c.digits,
                "value": v.mid_string(c.digits as usize + 5),
                "radius": v.rad_string(),
                "classes": trace_classes(delta, d)?.iter().map(|(q, w, chi)| json!({ "a": q.a, "b": q.b, "c": q.c, "omega": w, "chi": chi })).collect::<Vec<_>>(),
            });
            Ok(Output { json, text: format!("Tr_({delta},{d})({f}) = {v}\n"), csv: String::new() })
        }
        Some(TraceAction::Relation { delta, d, p, m, n, f }) => {
            let rel = match (n, f) {
                (Some(n), None) => trace_hecke_relation(*delta, *d, *p, *m, *n)?,
                (None, Some(f)) => trace_relation_psquare(*delta, *d, *p, &Traceable::parse(f)?)?,
                _ => return Err(Failure::Usage("pass exactly one of --n or --f".into())),
            };
            let check = rel.evaluate(&c)?;
            let json = json!({
                "relation": rel.to_string(),
                "digits": c.digits,
                "lhs": ball_json(&check.lhs),
                "rhs": ball_json(&check.rhs),
                "difference": ball_json(&check.difference),
                "pass": check.pass,
            });
            let text = format!("{rel}\n  lhs {}\n  rhs {}\n  {}\n", check.lhs, check.rhs, verdict(check.pass));
            checked(check.pass, Output { json, text, csv: String::new() })
        }
        Some(TraceAction::Klf { delta, d }) => {
            let r = kronecker_limit_check(*delta, *d, &c)?;
            let per = |m: &std::collections::BTreeMap<String, RealBall>| -> Value {
                Value::Object(m.iter().map(|(k, v)| (k.clone(), ball_json(v))).collect())
            };
            let json = json!({
                "delta": delta,
                "d": d,
                "digits": c.digits,
                "lhs": { "reduced_points": ball_json(&r.lhs), "unreduced_points": ball_json(&r.lhs_alt), "from_j0": ball_json(&r.lhs_from_j0) },
                "rhs": per(&r.rhs),
                "rhs_character_sums": ball_json(&r.rhs_alt),
                "ratio": per(&r.ratio),
                "convention_with_ratio_one": r.convention_with_ratio_one,
                "internal_lhs_spread": r.internal_lhs_spread,
                "internal_rhs_spread": r.internal_rhs_spread,
            });
            let mut text = format!("Tr_({delta},{d})(frakf) = {}\n", r.lhs);
            for (k, v) in &r.ratio {
                text.push_str(&format!("  ratio ({k}) = {}\n", v.mid_string(20)));
            }
            Ok(Output { json, text, csv: String::new() })
        }
    }
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "FAIL"
    }
}

fn run_bz(cli: &Cli, action: &BzAction) -> Outcome {
    match action {
        BzAction::Basis { d } => {
            let ord = order(cli, *d as usize + 20).max(*d as usize + 8);
            let f = zagier_basis(*d, ord)?;
            let report = zagier_basis_report(*d, ord)?;
            let mut out = series_output(json!({ "d": d, "method": "eta-quotient spanning sets, exact linear solve" }), f.series());
            if let Value::Object(m) = &mut out.json {
                m.insert("checks".into(), serde_json::to_value(&report).expect("report serializes"));
            }
            Ok(out)
        }
        BzAction::Product { delta, d, ball } => {
            let c = ctx(cli, 30);
            let ord = order(cli, 10);
            let mode = if *ball { ProductMode::Ball } else { ProductMode::Exact };
            let data = borcherds_product(*delta, *d, ord, mode, &c)?;
            let exps: Vec<Value> = data
                .exponents
                .iter()
                .filter(|(_, v)| v.cmp0() != std::cmp::Ordering::Equal)
                .map(|((n, b), v)| json!({ "n": n, "b": b, "exponent": v.to_string() }))
                .collect();
            let coeffs: Vec<String> = match &data.series {
                ProductSeries::Exact(s) => s.coeffs().iter().map(|x| x.to_string()).collect(),
                ProductSeries::Ball(s) => s.coeffs().iter().map(|x| x.to_string()).collect(),
            };
            let mut text = format!("Psi_{delta}(f_{d}) through q^{}\n", data.series.prec() - 1);
            for (i, c) in coeffs.iter().enumerate() {
                text.push_str(&format!("q^{i}: {c}\n"));
            }
            let json = json!({
                "delta": delta,
                "d": d,
                "order": ord,
                "mode": if *ball { "ball" } else { "exact" },
                "exponents": exps,
                "coefficients": coeffs,
                "method": "exponential of the logarithmic sum over Gauss sums",
            });
            Ok(Output { json, text, csv: String::new() })
        }
        BzAction::Check { kind } => run_bz_check(cli, kind),
    }
}

fn run_bz_check(cli: &Cli, kind: &BzCheck) -> Outcome {
    match kind {
        BzCheck::Bp { delta, d, tau, terms } => {
            let c = ctx(cli, 50);
            let z = parse_tau(tau, c.bits()).context("parsing --tau")?;
            let r = bp_identity_check(*delta, *d, &z, *terms, &c)?;
            let json = serde_json::to_value(&r).expect("report serializes");
            let text = format!(
                "Psi_{delta}(f_{d}) at {tau} with {terms} factors: modulus residual {:.3e}, certified radius {:.3e}, omitted-factor estimate {:.3e}: {}\n",
                r.modulus_residual_abs,
                r.certified_radius,
                r.tail_estimate,
                verdict(r.pass_certified)
            );
            checked(r.pass_certified, Output { json, text, csv: String::new() })
        }
        BzCheck::Gbhe { delta, d, p } => {
            let r = gbhe_check(*delta, *d, *p, order(cli, 31))?;
            let json = serde_json::to_value(&r).expect("report serializes");
            let text = format!("Psi({delta}, f_{d})|T({p}) against the image {}: {}\n", r.combination, verdict(r.pass));
            checked(r.pass, Output { json, text, csv: String::new() })
        }
        BzCheck::Traces { delta, d, n } => {
            let c = ctx(cli, 40);
            let r = borcherds_trace_series(*delta, *d, *n, &c)?;
            let json = serde_json::to_value(&r).expect("report serializes");
            let mut text = String::new();
            for row in &r.rows {
                text.push_str(&format!(
                    "n = {}: [q^n] D(Psi) = {}, Tr(J_n) = {}\n",
                    row.n, row.d_coefficient, row.trace
                ));
            }
            text.push_str(&format!("-[q^n] D(Psi) = Tr(J_n): {}\n", verdict(r.pass_minus_sign)));
            text.push_str(&format!("[q^n] D(Psi) = Tr(J_n): {}\n", verdict(r.pass_plus_sign)));
            checked(r.pass_minus_sign, Output { json, text, csv: String::new() })
        }
    }
}
