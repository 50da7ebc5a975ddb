//! The `gs` command line: classification, catalog solutions, reductions,
//! symmetry maps, field outputs and figure data.

pub mod emit;
pub mod figures;

use crate::catalog::{instantiate, instantiate_unchecked, CatalogError, Family, Params};
use crate::expr::Expr;
use crate::fields::{b_field, p0_for_boundary, p_and_i_maps_signed, PressureCurrent};
use crate::grid::{GridField, GridSpec};
use crate::profiles::{approx_number, classify, parse_profile, ProfileError, ProfileSpec, Role, SymmetryClass, Tag};
use crate::reductions::{integrate, midpoint_residual_ratio, reconstruct, reduce, ReducedKind, ReducedOde, ReducedTable, Start};
use crate::residual::{grid_residual_study, residual_sampled, DEFAULT_SEED};
use crate::solution::{SampleBox, Solution};
use crate::symmetry::{exceptional_map, exp_case_map, scaling_map};
use clap::{Args, Parser, Subcommand, ValueEnum};
use emit::{grid_csv, report_json, table_csv, write_pair, Emission};
use serde_json::{json, Value};
use std::ffi::OsString;
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_NO_CLASS: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;
pub const EXIT_NUMERIC: i32 = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    fn parse(m: impl Into<String>) -> Self {
        Self::new(EXIT_PARSE, m)
    }

    fn verify(m: impl Into<String>) -> Self {
        Self::new(EXIT_VERIFY, m)
    }

    fn numeric(m: impl Into<String>) -> Self {
        Self::new(EXIT_NUMERIC, m)
    }
}

impl From<CatalogError> for CliError {
    fn from(e: CatalogError) -> Self {
        let code = match e {
            CatalogError::ConstraintViolated { .. } => EXIT_VERIFY,
            CatalogError::Unsolvable(_) => EXIT_NUMERIC,
            _ => EXIT_PARSE,
        };
        Self::new(code, e.to_string())
    }
}

impl From<ProfileError> for CliError {
    fn from(e: ProfileError) -> Self {
        Self::parse(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "gs", version, about = "Grad-Shafranov equilibria from symmetry reductions", args_override_self = true)]
pub struct Cli {
    /// JSON file whose keys mirror the long flags of the subcommand.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for residual sampling; the GS_SEED environment variable wins.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Symmetry class of a profile pair, as JSON.
    Classify(ClassifyArgs),
    /// Residual-gated grid of a catalog solution.
    Solution(SolutionArgs),
    /// Integrate a reduced ODE and reconstruct psi on a grid.
    Reduce(ReduceArgs),
    /// Apply a finite symmetry map to a catalog solution.
    Map(MapArgs),
    /// psi, p, I and B on a grid for a q = -1/4 profile pair.
    Fields(FieldsArgs),
    /// Data behind one of the figures.
    Figure(FigureArgs),
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct ClassifyArgs {
    #[arg(long = "F")]
    pub f: String,
    #[arg(long = "G")]
    pub g: String,
}

/// Family parameters; any other key goes through `--param key=value`.
#[derive(Debug, Clone, Default, Args)]
pub struct ParamArgs {
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long = "A")]
    pub amp: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub c0: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub sign: Option<f64>,
    #[arg(long = "param", value_name = "KEY=VALUE")]
    pub extra: Vec<String>,
}

impl ParamArgs {
    fn named(&self) -> [(&'static str, Option<f64>); 12] {
        [
            ("lambda", self.lambda),
            ("A", self.amp),
            ("sigma", self.sigma),
            ("a", self.a),
            ("b", self.b),
            ("q", self.q),
            ("kappa", self.kappa),
            ("c", self.c),
            ("c0", self.c0),
            ("beta", self.beta),
            ("alpha", self.alpha),
            ("sign", self.sign),
        ]
    }

    /// Family defaults overlaid with the given values. For `weak_power` the
    /// default `(a, b)` is dropped as soon as anything is given, since it is
    /// tied to the default `q` and `sigma`.
    fn params(&self, family: Family) -> CliResult<Params> {
        let mut given = Params::new();
        for (k, v) in self.named() {
            if let Some(v) = v {
                given.insert(k.into(), v);
            }
        }
        for kv in &self.extra {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| CliError::parse(format!("--param expects KEY=VALUE, got `{kv}`")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| CliError::parse(format!("--param {k}: `{v}` is not a number")))?;
            given.insert(k.trim().to_string(), v);
        }
        let mut p = family.default_params();
        if family == Family::WeakPower && !given.is_empty() {
            p.remove("a");
            p.remove("b");
        }
        p.extend(given);
        Ok(p)
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct GridArgs {
    #[arg(long)]
    pub r_min: Option<f64>,
    #[arg(long)]
    pub r_max: Option<f64>,
    #[arg(long)]
    pub z_min: Option<f64>,
    #[arg(long)]
    pub z_max: Option<f64>,
    #[arg(long)]
    pub nr: Option<usize>,
    #[arg(long)]
    pub nz: Option<usize>,
}

impl GridArgs {
    fn spec(&self, default: SampleBox, n: usize) -> CliResult<GridSpec> {
        GridSpec::new(
            (self.r_min.unwrap_or(default.r.0), self.r_max.unwrap_or(default.r.1)),
            (self.z_min.unwrap_or(default.z.0), self.z_max.unwrap_or(default.z.1)),
            self.nr.unwrap_or(n),
            self.nz.unwrap_or(n),
        )
        .map_err(|e| CliError::parse(e.to_string()))
    }
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct SolutionArgs {
    #[arg(long)]
    pub family: String,
    #[command(flatten)]
    pub params: ParamArgs,
    /// Place the D-shape circle centers on z = 0.
    #[arg(long)]
    pub shift_z0: bool,
    /// Take parameters literally, skipping constraint checks (the residual
    /// gate still applies).
    #[arg(long)]
    pub unchecked: bool,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Relative residual gate.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// Residual sample size.
    #[arg(long, default_value_t = 1000)]
    pub check_points: usize,
    /// CSV path; the metadata goes next to it with a `.json` extension.
    /// Without it the CSV goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Branch {
    Regular,
    Singular,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct ReduceArgs {
    /// Class tag to reduce by (`a`, `a''`, `b`, `conditional-kappa`, ...).
    #[arg(long)]
    pub class: String,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    /// Profiles as text; required unless the class is `a`.
    #[arg(long = "F")]
    pub f: Option<String>,
    #[arg(long = "G")]
    pub g: Option<String>,
    /// Power-law start near t = 0 for the similarity reduction.
    #[arg(long, value_enum, default_value_t = Branch::Regular)]
    pub branch: Branch,
    #[arg(long, default_value_t = 1e-3)]
    pub eps: f64,
    /// Start from values `(t0, w0, dw0)` instead of a branch.
    #[arg(long, requires_all = ["w0", "dw0"])]
    pub t0: Option<f64>,
    #[arg(long)]
    pub w0: Option<f64>,
    #[arg(long)]
    pub dw0: Option<f64>,
    #[arg(long)]
    pub span_lo: Option<f64>,
    #[arg(long, default_value_t = 5.0)]
    pub span_hi: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Reconstructed grid CSV (stdout without it).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// ODE table CSV `t,w,dw`.
    #[arg(long)]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MapKind {
    Exceptional,
    Scaling,
    ExpCase,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct MapArgs {
    #[arg(long, conflicts_with_all = ["scaling", "exp_case"])]
    pub exceptional: bool,
    #[arg(long, conflicts_with = "exp_case")]
    pub scaling: bool,
    #[arg(long)]
    pub exp_case: bool,
    /// Group parameter of the map.
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Scaling-map class `(q, c)`; read from the profiles when omitted.
    #[arg(long = "map-q")]
    pub map_q: Option<f64>,
    #[arg(long = "map-c")]
    pub map_c: Option<f64>,
    /// Source solution; defaults to `(r^2 - z^2)^(1/4)`.
    #[arg(long)]
    pub family: Option<String>,
    /// Source parameters.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    pub params: Vec<String>,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct FieldsArgs {
    #[arg(long, default_value = "dshape")]
    pub family: String,
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long)]
    pub shift_z0: bool,
    /// Plasma border: nodes with psi <= psi0 are masked and p(psi0) = 0
    /// unless `--p0` is given.
    #[arg(long)]
    pub psi0: Option<f64>,
    #[arg(long)]
    pub p0: Option<f64>,
    #[arg(long = "I0", default_value_t = 0.0)]
    pub i0: f64,
    /// Sign of the I branch.
    #[arg(long, default_value_t = 1.0)]
    pub i_sign: f64,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
}

#[derive(Debug, Args)]
pub struct FigureArgs {
    #[arg(value_enum)]
    pub which: Figure,
    #[arg(long, default_value = "figures")]
    pub out_dir: PathBuf,
    /// Grid nodes per side.
    #[arg(long, default_value_t = 121)]
    pub n: usize,
}

const SUBCOMMANDS: [&str; 6] = ["classify", "solution", "reduce", "map", "fields", "figure"];

/// Splices the config file's flags in right after the subcommand, so that
/// flags on the command line override them.
fn with_config(args: Vec<OsString>) -> CliResult<Vec<OsString>> {
    let mut path = None;
    for (k, a) in args.iter().enumerate() {
        let s = a.to_string_lossy();
        if let Some(p) = s.strip_prefix("--config=") {
            path = Some(PathBuf::from(p));
        } else if s == "--config" {
            path = args.get(k + 1).map(PathBuf::from);
        }
    }
    let Some(path) = path else { return Ok(args) };
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::parse(format!("config {}: {e}", path.display())))?;
    let cfg: Value = serde_json::from_str(&text).map_err(|e| CliError::parse(format!("config {}: {e}", path.display())))?;
    let Value::Object(map) = cfg else {
        return Err(CliError::parse("config must be a JSON object"));
    };
    let mut tokens: Vec<OsString> = Vec::new();
    let mut command = None;
    for (k, v) in &map {
        if k == "command" {
            command = v.as_str().map(str::to_string);
            continue;
        }
        let flag = format!("--{}", k.replace('_', "-"));
        let mut push = |v: &Value| -> CliResult<()> {
            match v {
                Value::Bool(true) => tokens.push(flag.clone().into()),
                Value::Bool(false) | Value::Null => {}
                Value::Number(n) => {
                    tokens.push(flag.clone().into());
                    tokens.push(n.to_string().into());
                }
                Value::String(s) => {
                    tokens.push(flag.clone().into());
                    tokens.push(s.into());
                }
                _ => return Err(CliError::parse(format!("config key `{k}` has an unsupported value"))),
            }
            Ok(())
        };
        match v {
            Value::Array(items) => items.iter().try_for_each(&mut push)?,
            other => push(other)?,
        }
    }
    let pos = args.iter().position(|a| SUBCOMMANDS.contains(&a.to_string_lossy().as_ref()));
    let mut out = args.clone();
    match (pos, command) {
        (Some(p), _) => {
            out.splice(p + 1..p + 1, tokens);
        }
        (None, Some(c)) => {
            let at = out.len().min(1);
            out.splice(at..at, std::iter::once(c.into()).chain(tokens));
        }
        (None, None) => return Err(CliError::parse("no subcommand on the command line or in the config")),
    }
    Ok(out)
}

fn effective_seed(flag: Option<u64>) -> CliResult<u64> {
    match std::env::var("GS_SEED") {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| CliError::parse(format!("GS_SEED = `{s}` is not an unsigned integer"))),
        Err(_) => Ok(flag.unwrap_or(DEFAULT_SEED)),
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match with_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {}", e.message);
            return e.code;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

fn execute(cli: &Cli) -> CliResult<i32> {
    let seed = effective_seed(cli.seed)?;
    match &cli.command {
        Command::Classify(a) => cmd_classify(a),
        Command::Solution(a) => {
            let e = cmd_solution(a, seed)?;
            deliver(a.out.as_ref(), &e)
        }
        Command::Reduce(a) => {
            let (grid, table) = cmd_reduce(a, seed)?;
            if let Some(p) = &a.table {
                write_pair(p, &table).map_err(|e| CliError::numeric(format!("{}: {e}", p.display())))?;
            }
            deliver(a.out.as_ref(), &grid)
        }
        Command::Map(a) => {
            let e = cmd_map(a, seed)?;
            deliver(a.out.as_ref(), &e)
        }
        Command::Fields(a) => {
            let e = cmd_fields(a, seed)?;
            deliver(a.out.as_ref(), &e)
        }
        Command::Figure(a) => {
            let files = figures::cmd_figure(a.which, a.n, seed)?;
            for e in &files {
                let p = a.out_dir.join(&e.name);
                write_pair(&p, e).map_err(|err| CliError::numeric(format!("{}: {err}", p.display())))?;
                println!("{}", p.display());
            }
            Ok(EXIT_OK)
        }
    }
}

fn deliver(out: Option<&PathBuf>, e: &Emission) -> CliResult<i32> {
    match out {
        Some(p) => write_pair(p, e).map_err(|err| CliError::numeric(format!("{}: {err}", p.display())))?,
        None => print!("{}", e.csv),
    }
    Ok(EXIT_OK)
}

fn parse_pair(f: &str, g: &str) -> CliResult<(ProfileSpec, ProfileSpec)> {
    let pf = parse_profile(f, Role::F).map_err(|e| CliError::parse(format!("--F: {e}")))?;
    let pg = parse_profile(g, Role::G).map_err(|e| CliError::parse(format!("--G: {e}")))?;
    Ok((pf, pg))
}

pub fn cmd_classify(a: &ClassifyArgs) -> CliResult<i32> {
    let (f, g) = parse_pair(&a.f, &a.g)?;
    let classes = classify(&f, &g);
    let first = classes.first().copied().unwrap_or_else(SymmetryClass::none);
    let mut v = serde_json::to_value(first).map_err(|e| CliError::numeric(e.to_string()))?;
    if let Value::Object(m) = &mut v {
        m.insert("F".into(), f.to_string().into());
        m.insert("G".into(), g.to_string().into());
        m.insert(
            "all".into(),
            serde_json::to_value(&classes).map_err(|e| CliError::numeric(e.to_string()))?,
        );
    }
    println!("{}", serde_json::to_string(&v).map_err(|e| CliError::numeric(e.to_string()))?);
    Ok(if first.tag == Tag::None { EXIT_NO_CLASS } else { EXIT_OK })
}

fn family_of(name: &str) -> CliResult<Family> {
    name.parse::<Family>().map_err(CliError::from)
}

fn solution_meta(s: &Solution, grid: &GridSpec, seed: u64, tol: f64, report: &Value) -> Value {
    json!({
        "family": s.family,
        "params": s.params,
        "formula": s.formula,
        "F": s.f.to_string(),
        "G": s.g.to_string(),
        "grid": grid,
        "seed": seed,
        "tol": tol,
        "residual": report,
    })
}

/// Exact-jet residual gate at seeded random points.
fn gate(s: &Solution, n: usize, seed: u64, tol: f64) -> CliResult<Value> {
    let rep = residual_sampled(s, n, seed).map_err(|e| CliError::numeric(format!("residual: {e}")))?;
    if !rep.passes(tol) {
        return Err(CliError::verify(format!(
            "residual gate failed for {}: max relative residual {:e} > {tol:e}",
            s.family, rep.max_rel
        )));
    }
    Ok(report_json(&rep))
}

fn build_solution(family: Family, params: &ParamArgs, shift: bool, unchecked: bool) -> CliResult<Solution> {
    let mut p = params.params(family)?;
    if shift {
        p.insert("shift_z0".into(), 1.0);
    }
    Ok(if unchecked {
        instantiate_unchecked(family, &p)?
    } else {
        instantiate(family, &p)?
    })
}

pub fn solution_emission(s: &Solution, spec: GridSpec, seed: u64, tol: f64, check_points: usize, name: &str) -> CliResult<Emission> {
    let report = gate(s, check_points, seed, tol)?;
    let grid = GridField::sample(&*s.field, spec);
    Ok(Emission {
        name: name.into(),
        csv: grid_csv(&grid, &[], |_, _, _| Some(vec![])),
        meta: solution_meta(s, &spec, seed, tol, &report),
    })
}

pub fn cmd_solution(a: &SolutionArgs, seed: u64) -> CliResult<Emission> {
    let family = family_of(&a.family)?;
    let s = build_solution(family, &a.params, a.shift_z0, a.unchecked)?;
    let spec = a.grid.spec(s.sample, 101)?;
    let mut e = solution_emission(&s, spec, seed, a.tol, a.check_points, "solution.csv")?;
    e.meta["command"] = "solution".into();
    e.meta["unchecked"] = a.unchecked.into();
    Ok(e)
}

fn k(x: f64) -> Expr {
    Expr::Num(approx_number(x))
}

/// `F = a psi^(1 + 2/q)`, `G = b psi^(1 + 1/q)`.
pub fn power_profiles(q: f64, a: f64, b: f64) -> CliResult<(ProfileSpec, ProfileSpec)> {
    if q == 0.0 {
        return Err(CliError::parse("q must be nonzero"));
    }
    let psi = Expr::psi;
    let f = ProfileSpec::from_expr(Role::F, k(a) * Expr::pow(psi(), k(1.0 + 2.0 / q)))?;
    let g = ProfileSpec::from_expr(Role::G, k(b) * Expr::pow(psi(), k(1.0 + 1.0 / q)))?;
    Ok((f, g))
}

fn tag_of(name: &str) -> CliResult<Tag> {
    let all = [
        Tag::A,
        Tag::APrime,
        Tag::ADoublePrime,
        Tag::B,
        Tag::ConditionalKappa,
        Tag::ConditionalRotation,
        Tag::WeakSigma,
        Tag::CPrime,
        Tag::CDoublePrime,
        Tag::CTriplePrime,
        Tag::CQuadruplePrime,
        Tag::D,
    ];
    all.into_iter()
        .find(|t| t.name() == name)
        .ok_or_else(|| CliError::parse(format!("unknown class `{name}`")))
}

/// Reduced ODE, table and reconstructed grid for `reduce`; shared with the
/// first figure.
pub struct Reduction {
    pub ode: ReducedOde,
    pub table: ReducedTable,
    pub grid: GridField,
    pub meta: Value,
}

pub fn run_reduction(
    tag: Tag,
    f: ProfileSpec,
    g: ProfileSpec,
    start: Start,
    span: (f64, f64),
    tol: f64,
    spec: GridSpec,
) -> CliResult<Reduction> {
    let class = classify(&f, &g).into_iter().find(|c| c.tag == tag).ok_or_else(|| {
        CliError::new(
            EXIT_NO_CLASS,
            format!("profiles F = {f}, G = {g} do not belong to class `{tag}`"),
        )
    })?;
    let ode = reduce(&class, &f, &g).map_err(|e| CliError::new(EXIT_NO_CLASS, e.to_string()))?;
    let table = integrate(&ode, start, span, tol).map_err(|e| CliError::numeric(e.to_string()))?;
    let ratio = midpoint_residual_ratio(&ode, &table);
    if ratio > 100.0 {
        return Err(CliError::verify(format!(
            "dense-output residual {ratio:.3e} x tol exceeds 100 x tol"
        )));
    }
    let grid = reconstruct(&ode, &table, spec).map_err(|e| CliError::numeric(e.to_string()))?;
    let study = grid_residual_study(
        |s| reconstruct(&ode, &table, s).unwrap_or_else(|_| GridField::from_fn(s, |_, _| None)),
        spec,
        &f,
        &g,
    );
    let (grid_report, order) = match study {
        Ok((rep, order)) => (report_json(&rep), json!(order)),
        Err(e) => (json!(e.to_string()), Value::Null),
    };
    let (t0, t1) = table.span();
    let meta = json!({
        "class": class,
        "kind": ode.kind,
        "F": f.to_string(),
        "G": g.to_string(),
        "span": [t0, t1],
        "tol": tol,
        "steps": table.stats.steps,
        "rejected": table.stats.rejected,
        "evaluations": table.stats.evaluations,
        "truncated": table.truncated,
        "midpoint_residual_over_tol": ratio,
        "grid": spec,
        "fd_residual": grid_report,
        "fd_order": order,
    });
    Ok(Reduction { ode, table, grid, meta })
}

/// Relative change of `w(1)` when the branch start moves from `eps` to `eps/2`.
pub fn eps_drift(ode: &ReducedOde, m: f64, eps: f64, hi: f64, tol: f64) -> Option<f64> {
    if !(eps < 1.0 && hi > 1.0) {
        return None;
    }
    let w1 = |e: f64| -> Option<f64> {
        let t = integrate(ode, Start::Branch { m, eps: e }, (e, hi), tol).ok()?;
        let (u, _) = t.hermite(1.0)?;
        Some(u[0])
    };
    let (a, b) = (w1(eps)?, w1(0.5 * eps)?);
    Some((a - b).abs() / b.abs().max(f64::MIN_POSITIVE))
}

fn default_reduce_box(kind: ReducedKind) -> SampleBox {
    match kind {
        ReducedKind::X1Similarity | ReducedKind::ExpCase => SampleBox::new((0.05, 2.0), (-2.0, 2.0)),
        _ => SampleBox::new((0.1, 2.0), (-2.0, 2.0)),
    }
}

pub fn cmd_reduce(a: &ReduceArgs, _seed: u64) -> CliResult<(Emission, Emission)> {
    let tag = tag_of(&a.class)?;
    let (f, g) = match (&a.f, &a.g) {
        (Some(f), Some(g)) => parse_pair(f, g)?,
        _ if tag == Tag::A => {
            let need = |v: Option<f64>, n: &str| v.ok_or_else(|| CliError::parse(format!("class a needs --{n}")));
            power_profiles(need(a.q, "q")?, need(a.a, "a")?, need(a.b, "b")?)?
        }
        _ => return Err(CliError::parse(format!("class `{tag}` needs --F and --G"))),
    };
    let class_q = classify(&f, &g).into_iter().find(|c| c.tag == tag).and_then(|c| c.params.q);
    let (start, lo) = match (a.t0, a.w0, a.dw0) {
        (Some(t0), Some(w), Some(dw)) => (Start::Values { t0, w, dw }, a.span_lo.unwrap_or(t0)),
        _ => {
            let q = class_q.or(a.q).unwrap_or(0.0);
            let s = match a.branch {
                Branch::Regular => Start::regular(q, a.eps),
                Branch::Singular => Start::singular(q, a.eps),
            };
            (s, a.span_lo.unwrap_or(a.eps))
        }
    };
    // The grid default depends on the kind, known only after reduction.
    let probe_kind = classify(&f, &g)
        .into_iter()
        .find(|c| c.tag == tag)
        .and_then(|c| reduce(&c, &f, &g).ok())
        .map(|o| o.kind)
        .unwrap_or(ReducedKind::X1Similarity);
    let spec = a.grid.spec(default_reduce_box(probe_kind), 81)?;
    let red = run_reduction(tag, f, g, start, (lo, a.span_hi), a.tol, spec)?;
    let mut meta = red.meta.clone();
    meta["command"] = "reduce".into();
    if let Start::Branch { m, eps } = start {
        meta["branch"] = json!({ "m": m, "eps": eps });
        meta["eps_half_drift_at_1"] = json!(eps_drift(&red.ode, m, eps, a.span_hi, a.tol));
    }
    let grid = Emission {
        name: "reduce.csv".into(),
        csv: grid_csv(&red.grid, &[], |_, _, _| Some(vec![])),
        meta: meta.clone(),
    };
    let table = Emission {
        name: "reduce-table.csv".into(),
        csv: table_csv(
            &["t", "w", "dw"],
            red.table.t.iter().zip(&red.table.y).map(|(t, u)| vec![*t, u[0], u[1]]),
        ),
        meta,
    };
    Ok((grid, table))
}

/// The default map source `(r^2 - z^2)^(1/4)`.
pub fn exceptional_seed() -> CliResult<Solution> {
    let p: Params = [("q", -0.25), ("sigma", -1.0), ("A", -1.0)]
        .iter()
        .map(|(k, v)| (k.to_string(), *v))
        .collect();
    Ok(instantiate(Family::WeakPower, &p)?)
}

pub fn cmd_map(a: &MapArgs, seed: u64) -> CliResult<Emission> {
    let src = match &a.family {
        Some(name) => {
            let pa = ParamArgs {
                extra: a.params.clone(),
                ..Default::default()
            };
            build_solution(family_of(name)?, &pa, false, false)?
        }
        None => exceptional_seed()?,
    };
    let kind = if a.scaling {
        MapKind::Scaling
    } else if a.exp_case {
        MapKind::ExpCase
    } else {
        MapKind::Exceptional
    };
    let mapped = match kind {
        MapKind::Exceptional => exceptional_map(&src, a.lambda),
        MapKind::ExpCase => exp_case_map(&src, a.lambda),
        MapKind::Scaling => {
            let cls = classify(&src.f, &src.g).into_iter().find(|c| c.tag.is_power_family());
            let q = a.map_q.or(cls.and_then(|c| c.params.q));
            let c = a.map_c.or(cls.and_then(|c| c.params.c)).unwrap_or(0.0);
            let q = q.ok_or_else(|| CliError::new(EXIT_NO_CLASS, "source profiles carry no power class; pass --map-q"))?;
            scaling_map(&src, a.lambda, q, c)
        }
    }
    .map_err(|e| CliError::new(EXIT_NO_CLASS, e.to_string()))?;
    let spec = a.grid.spec(mapped.sample, 101)?;
    let mut e = solution_emission(&mapped, spec, seed, a.tol, 1000, "map.csv")?;
    e.meta["command"] = "map".into();
    e.meta["map"] = json!({ "kind": format!("{kind:?}").to_lowercase(), "lambda": a.lambda });
    Ok(e)
}

/// Pressure and current maps for a solution of a q = -1/4 pair.
pub fn profiles_for(s: &Solution, psi0: Option<f64>, p0: Option<f64>, i0: f64, sign: f64) -> CliResult<PressureCurrent> {
    let cls = classify(&s.f, &s.g)
        .into_iter()
        .find(|c| c.tag.is_power_family() && c.params.q.is_some_and(|q| (q + 0.25).abs() < 1e-12));
    let cls = cls.ok_or_else(|| CliError::new(EXIT_NO_CLASS, format!("`{}` does not solve a q = -1/4 pair", s.family)))?;
    if cls.params.c.is_some_and(|c| c != 0.0) {
        return Err(CliError::parse("shifted q = -1/4 pairs are not supported for field output"));
    }
    let a = cls.params.a.unwrap_or(0.0);
    let b = cls.params.b.unwrap_or(0.0);
    let p0 = match (p0, psi0) {
        (Some(p), _) => p,
        (None, Some(psi0)) => p0_for_boundary(a, psi0),
        (None, None) => 0.0,
    };
    Ok(p_and_i_maps_signed(a, b, p0, i0, sign))
}

/// Grid of `psi, p, I` (and optionally `B`), masked to `psi > psi0`.
pub fn fields_csv(s: &Solution, pc: &PressureCurrent, spec: GridSpec, psi0: Option<f64>, with_b: bool) -> String {
    let grid = GridField::sample(&*s.field, spec).map(|_, _, psi| psi0.map_or(true, |p| psi > p).then_some(psi));
    let cols: &[&str] = if with_b {
        &["p", "i", "b_r", "b_phi", "b_z"]
    } else {
        &["p", "i"]
    };
    grid_csv(&grid, cols, |r, z, psi| {
        let p = pc.pressure(psi).ok()?;
        let i = pc.current(psi).ok()?;
        let mut v = vec![p, i];
        if with_b {
            let b = b_field(&*s.field, &pc.i, r, z).ok()?;
            v.extend([b.b_r, b.b_phi, b.b_z]);
        }
        Some(v)
    })
}

pub fn cmd_fields(a: &FieldsArgs, seed: u64) -> CliResult<Emission> {
    let family = family_of(&a.family)?;
    let s = build_solution(family, &a.params, a.shift_z0, false)?;
    let pc = profiles_for(&s, a.psi0, a.p0, a.i0, a.i_sign)?;
    let spec = a.grid.spec(s.sample, 101)?;
    let report = gate(&s, 1000, seed, a.tol)?;
    let mut meta = solution_meta(&s, &spec, seed, a.tol, &report);
    meta["command"] = "fields".into();
    meta["pressure"] = pc.p.expr.to_string().into();
    meta["current"] = pc.i.expr.to_string().into();
    meta["psi0"] = json!(a.psi0);
    meta["I0"] = json!(a.i0);
    meta["p0"] = json!(pc.p0);
    Ok(Emission {
        name: "fields.csv".into(),
        csv: fields_csv(&s, &pc, spec, a.psi0, true),
        meta,
    })
}
