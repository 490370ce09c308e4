//! Command-line experiments over the `sphfield` library.
//!
//! Every subcommand writes one self-describing artifact: CSV with a `# `
//! header block echoing the configuration and summary, or a JSON document
//! with the same content. Failures print a one-line JSON error record on
//! stderr and exit with a code from the `EXIT_*` constants.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use sphfield::bump::{c3_reference, spectral_weight_sum, BumpProfile, SmoothingKernel};
use sphfield::field::{pseudo_diff, FieldRealization};
use sphfield::modulus::{recommended_l_max, run_modulus_experiment, ModulusExperiment, StatisticKind};
use sphfield::slnd::{slnd_scan, Geometry, ScanConfig};
use sphfield::special::{
    legendre_batch, log_grid, mehler_dirichlet_p, polylog, polylog_direct, riemann_zeta, sum_poly_asymptotic_check,
    sum_poly_rows,
};
use sphfield::variogram::sandwich_report;
use sphfield::{AccuracyPolicy, Envelope, Error, PowerSpectrum, SpherePoint};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_RESOURCE: i32 = 4;
pub const EXIT_NUMERICAL: i32 = 5;

/// Default output directory when `--output` is absent.
pub const OUTPUT_DIR_ENV: &str = "SPHFIELD_OUTPUT_DIR";

const SUBCOMMANDS: [&str; 7] = ["spectrum", "special", "variogram", "bump", "slnd", "modulus", "synth"];
const GLOBAL_VALUE_FLAGS: [&str; 4] = ["--config", "--threads", "--format", "--output"];

#[derive(Debug, Parser)]
#[command(name = "sphfield", version, about = "Isotropic Gaussian fields on the sphere", args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// File of `key = value` lines mirroring the flags; flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Output file; otherwise $SPHFIELD_OUTPUT_DIR/<subcommand>.<ext> or stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tabulate C_ℓ.
    #[command(args_override_self = true)]
    Spectrum(SpectrumArgs),
    /// Special-function checks.
    #[command(args_override_self = true)]
    Special(SpecialArgs),
    /// Variogram d_T² and its ratio to ρ_α² on a log grid.
    #[command(args_override_self = true)]
    Variogram(VariogramArgs),
    /// Zonal bump δ_ε and its coefficients.
    #[command(args_override_self = true)]
    Bump(BumpArgs),
    /// Conditional-variance scan.
    #[command(args_override_self = true)]
    Slnd(SlndArgs),
    /// Modulus-of-continuity experiment.
    #[command(args_override_self = true)]
    Modulus(ModulusArgs),
    /// Sample a field on a θ×φ grid.
    #[command(args_override_self = true)]
    Synth(SynthArgs),
}

/// Comma-separated reals.
#[derive(Debug, Clone, PartialEq)]
struct F64List(Vec<f64>);

impl FromStr for F64List {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let v: Result<Vec<f64>, _> = s.split(',').map(|t| t.trim().parse::<f64>()).collect();
        match v {
            Ok(v) if !v.is_empty() => Ok(F64List(v)),
            _ => Err(format!("expected comma-separated numbers, got '{s}'")),
        }
    }
}

/// Dyadic levels as `a-b` or a comma list.
#[derive(Debug, Clone, PartialEq)]
struct Levels(Vec<u32>);

impl FromStr for Levels {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || format!("expected levels like 4-9 or 4,6,8, got '{s}'");
        if let Some((a, b)) = s.split_once('-') {
            let a: u32 = a.trim().parse().map_err(|_| bad())?;
            let b: u32 = b.trim().parse().map_err(|_| bad())?;
            if a > b {
                return Err(bad());
            }
            return Ok(Levels((a..=b).collect()));
        }
        let v: Result<Vec<u32>, _> = s.split(',').map(|t| t.trim().parse::<u32>()).collect();
        v.map(Levels).map_err(|_| bad())
    }
}

#[derive(Debug, Args)]
struct SpectrumOpts {
    #[arg(long)]
    alpha: f64,
    /// constant:g, oscillating:a or table:g1,g2,...
    #[arg(long, default_value = "constant:1")]
    envelope: String,
    /// Envelope bound c₀ (default: the smallest valid one).
    #[arg(long)]
    c0: Option<f64>,
    #[arg(long)]
    l_max: Option<usize>,
}

impl SpectrumOpts {
    fn build(&self, default_l_max: usize) -> Result<PowerSpectrum, Error> {
        let env: Envelope = self.envelope.parse()?;
        let c0 = self.c0.unwrap_or_else(|| env.minimal_bound());
        PowerSpectrum::new(self.alpha, env, c0, self.l_max.unwrap_or(default_l_max))
    }

    fn echo(&self, spec: &PowerSpectrum, cfg: &mut Config) {
        cfg.push("alpha", spec.alpha());
        cfg.push("envelope", spec.envelope());
        cfg.push("c0", spec.c0());
        cfg.push("l_max", spec.l_max());
    }
}

#[derive(Debug, Args)]
struct SpectrumArgs {
    #[command(flatten)]
    spec: SpectrumOpts,
    /// Derivative order k: list the spectrum of (1 − Δ)^{k/2}T.
    #[arg(long, default_value_t = 0)]
    k: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Check {
    Sumpoly,
    Legendre,
    Polylog,
    Zeta,
}

#[derive(Debug, Args)]
struct SpecialArgs {
    #[arg(long, value_enum)]
    check: Check,
    /// Series or polylogarithm order(s).
    #[arg(long)]
    s: Option<F64List>,
    /// Explicit angles; otherwise a grid from --theta-min/--theta-max/--points.
    #[arg(long)]
    theta: Option<F64List>,
    #[arg(long)]
    theta_min: Option<f64>,
    #[arg(long)]
    theta_max: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    /// Polylogarithm arguments ψ in e^{iψ}.
    #[arg(long)]
    psi: Option<F64List>,
    #[arg(long, default_value_t = 200)]
    l_max: usize,
    /// Fit the small-angle order (sumpoly).
    #[arg(long)]
    fit: bool,
}

#[derive(Debug, Args)]
struct VariogramArgs {
    #[command(flatten)]
    spec: SpectrumOpts,
    #[arg(long, default_value_t = 1e-4)]
    theta_min: f64,
    #[arg(long, default_value_t = 0.05)]
    theta_max: f64,
    #[arg(long, default_value_t = 64)]
    points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BumpTable {
    Profile,
    Coefficients,
}

#[derive(Debug, Args)]
struct BumpArgs {
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    /// Convolution order of the kernel (2 is p⋆p).
    #[arg(long, default_value_t = 2)]
    order: usize,
    #[arg(long, default_value_t = 4096)]
    l_max: usize,
    /// Angles in the profile table, equally spaced on [0, π].
    #[arg(long, default_value_t = 200)]
    points: usize,
    #[arg(long, value_enum, default_value_t = BumpTable::Profile)]
    table: BumpTable,
    /// Report Σ(2ℓ+1)/(4π)·b_ℓ²/C_ℓ for C_ℓ = ℓ^{−α}.
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Debug, Args)]
struct SlndArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = 4)]
    n: usize,
    #[arg(long, default_value = "ring")]
    geometry: String,
    #[arg(long, alias = "epsilon")]
    eps: F64List,
    #[arg(long, default_value_t = 100)]
    replicates: usize,
    #[arg(long)]
    seed: u64,
    /// Allow α ≥ 4 (output is non-certifying).
    #[arg(long)]
    exploratory: bool,
}

#[derive(Debug, Args)]
struct ModulusArgs {
    #[command(flatten)]
    spec: SpectrumOpts,
    /// Derivative order k.
    #[arg(long, default_value_t = 0)]
    k: u32,
    /// Dyadic levels j (scales 2^{−j}), e.g. 4-9.
    #[arg(long, default_value = "4-9")]
    scales: Levels,
    #[arg(long, default_value_t = 20)]
    replicates: usize,
    #[arg(long, default_value_t = 200)]
    pairs_per_scale: usize,
    /// rho_form, geodesic_form, alpha4_form or derivative_form.
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    seed: u64,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[command(flatten)]
    spec: SpectrumOpts,
    #[arg(long, default_value_t = 0)]
    k: u32,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    replicate: u64,
    #[arg(long, default_value_t = 32)]
    n_theta: usize,
    #[arg(long, default_value_t = 64)]
    n_phi: usize,
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            kind: "usage",
            message: message.into(),
        }
    }

    fn validation(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_VALIDATION,
            kind: "validation",
            message: message.into(),
        }
    }

    fn resource(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_RESOURCE,
            kind: "resource",
            message: message.into(),
        }
    }

    pub fn record(&self) -> String {
        json!({"error": self.kind, "exit_code": self.code, "message": self.message}).to_string()
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let (code, kind) = match e {
            Error::Domain(_) | Error::Range(_) | Error::Parse(_) => (EXIT_VALIDATION, "validation"),
            Error::Budget(_) => (EXIT_RESOURCE, "resource"),
            Error::Convergence(_) | Error::Consistency(_) | Error::Numerical(_) | Error::Fit(_) => {
                (EXIT_NUMERICAL, "numerical")
            }
        };
        Self {
            code,
            kind,
            message: e.to_string(),
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

/// Ordered key/value echo of the configuration.
#[derive(Debug, Default)]
struct Config(Vec<(String, String)>);

impl Config {
    fn push(&mut self, key: &str, value: impl std::fmt::Display) {
        self.0.push((key.to_string(), value.to_string()));
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Cell {
    F(f64),
    U(u64),
    B(bool),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::F(x) => fmt_f64(*x),
            Cell::U(u) => u.to_string(),
            Cell::B(b) => (*b as u8).to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::F(x) => num(*x),
            Cell::U(u) => json!(u),
            Cell::B(b) => json!(b),
        }
    }
}

/// Shortest round-trip text, switching to exponent form outside [1e−4, 1e15).
fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else if x == 0.0 || (1e-4..1e15).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(fmt_f64(x))
    }
}

fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

struct Artifact {
    subcommand: &'static str,
    config: Config,
    summary: Vec<(String, Value)>,
    columns: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
}

impl Artifact {
    fn new(subcommand: &'static str, config: Config, columns: &[&'static str]) -> Self {
        Self {
            subcommand,
            config,
            summary: Vec::new(),
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    fn summarize(&mut self, key: &str, value: Value) {
        self.summary.push((key.to_string(), value));
    }

    fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.render_csv(),
            Format::Json => self.render_json(),
        }
    }

    fn render_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# sphfield {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(out, "# subcommand: {}", self.subcommand);
        for (k, v) in &self.config.0 {
            let _ = writeln!(out, "# config.{k}: {v}");
        }
        for (k, v) in &self.summary {
            let text = match v {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            let _ = writeln!(out, "# summary.{k}: {text}");
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    fn render_json(&self) -> String {
        let mut cfg = Map::new();
        for (k, v) in &self.config.0 {
            cfg.insert(k.clone(), json!(v));
        }
        let mut summary = Map::new();
        for (k, v) in &self.summary {
            summary.insert(k.clone(), v.clone());
        }
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Array(r.iter().map(Cell::json).collect()))
            .collect();
        let doc = json!({
            "artifact": "sphfield",
            "version": env!("CARGO_PKG_VERSION"),
            "subcommand": self.subcommand,
            "config": cfg,
            "summary": summary,
            "columns": self.columns,
            "rows": rows,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("json values serialize");
        s.push('\n');
        s
    }
}

/// Runs the CLI on `argv` (program name first) and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    match execute(argv) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("{}", f.record());
            f.code
        }
    }
}

fn execute(argv: Vec<OsString>) -> Outcome<i32> {
    let argv = with_config_file(argv)?;
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return Ok(EXIT_OK);
            }
            return Err(Failure::usage(e.render().to_string().trim_end()));
        }
    };
    let artifact = match cli.threads {
        Some(0) => return Err(Failure::validation("--threads must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Failure::resource(format!("cannot start {n} worker threads: {e}")))?
            .install(|| dispatch(&cli.command))?,
        None => dispatch(&cli.command)?,
    };
    let text = artifact.render(cli.format);
    let target = cli.output.clone().or_else(|| {
        std::env::var_os(OUTPUT_DIR_ENV).map(|d| {
            let ext = match cli.format {
                Format::Csv => "csv",
                Format::Json => "json",
            };
            Path::new(&d).join(format!("{}.{ext}", artifact.subcommand))
        })
    });
    match target {
        Some(path) => std::fs::write(&path, text)
            .map_err(|e| Failure::resource(format!("cannot write {}: {e}", path.display())))?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Failure::resource(format!("cannot write to stdout: {e}")))?;
        }
    }
    Ok(EXIT_OK)
}

/// Inserts `--key=value` tokens from the `--config` file right after the
/// subcommand, so that later command-line flags override them.
fn with_config_file(argv: Vec<OsString>) -> Outcome<Vec<OsString>> {
    let strs: Vec<Option<&str>> = argv.iter().map(|a| a.to_str()).collect();
    let mut config_path = None;
    let mut sub_at = None;
    let mut i = 1;
    while i < argv.len() {
        let Some(tok) = strs[i] else {
            i += 1;
            continue;
        };
        if let Some(p) = tok.strip_prefix("--config=") {
            config_path = Some(PathBuf::from(p));
        } else if tok == "--config" {
            config_path = argv.get(i + 1).map(PathBuf::from);
            i += 1;
        } else if GLOBAL_VALUE_FLAGS.contains(&tok) {
            i += 1;
        } else if sub_at.is_none() && SUBCOMMANDS.contains(&tok) {
            sub_at = Some(i);
        }
        i += 1;
    }
    let (Some(path), Some(at)) = (config_path, sub_at) else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Failure::resource(format!("cannot read config {}: {e}", path.display())))?;
    let mut tokens = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Failure::usage(format!(
                "{}:{}: expected key = value, got '{line}'",
                path.display(),
                n + 1
            )));
        };
        let key = k.trim().replace('_', "-");
        if key == "config" {
            return Err(Failure::usage("config files cannot include other config files"));
        }
        match v.trim() {
            "true" => tokens.push(OsString::from(format!("--{key}"))),
            "false" => {}
            value => tokens.push(OsString::from(format!("--{key}={value}"))),
        }
    }
    let mut out = argv[..=at].to_vec();
    out.extend(tokens);
    out.extend_from_slice(&argv[at + 1..]);
    Ok(out)
}

fn dispatch(cmd: &Command) -> Outcome<Artifact> {
    match cmd {
        Command::Spectrum(a) => spectrum(a),
        Command::Special(a) => special(a),
        Command::Variogram(a) => variogram(a),
        Command::Bump(a) => bump(a),
        Command::Slnd(a) => slnd(a),
        Command::Modulus(a) => modulus(a),
        Command::Synth(a) => synth(a),
    }
}

fn spectrum(a: &SpectrumArgs) -> Outcome<Artifact> {
    let base = a.spec.build(1024)?;
    let spec = if a.k > 0 { base.derived(a.k)? } else { base.clone() };
    let mut cfg = Config::default();
    a.spec.echo(&base, &mut cfg);
    cfg.push("k", a.k);
    let mut art = Artifact::new("spectrum", cfg, &["ell", "c_ell"]);
    for l in 1..=spec.l_max() {
        art.rows.push(vec![Cell::U(l as u64), Cell::F(spec.value_unchecked(l))]);
    }
    let tv = spec.total_variance();
    art.summarize("effective_alpha", num(spec.effective_alpha()));
    art.summarize("total_variance", num(tv.value));
    art.summarize("total_variance_tail_bound", num(tv.tail_bound));
    art.summarize("upper_constant", num(spec.upper_constant()));
    Ok(art)
}

fn theta_values(a: &SpecialArgs, lo: f64, hi: f64, n: usize, log: bool) -> Outcome<Vec<f64>> {
    if let Some(t) = &a.theta {
        return Ok(t.0.clone());
    }
    let lo = a.theta_min.unwrap_or(lo);
    let hi = a.theta_max.unwrap_or(hi);
    let n = a.points.unwrap_or(n);
    if !(lo > 0.0 && hi > lo && n >= 2) {
        return Err(Failure::validation(format!(
            "need 0 < theta-min < theta-max and at least 2 points (got {lo}, {hi}, {n})"
        )));
    }
    Ok(if log {
        log_grid(lo, hi, n)
    } else {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    })
}

fn required_s(a: &SpecialArgs) -> Outcome<Vec<f64>> {
    a.s.as_ref()
        .map(|s| s.0.clone())
        .ok_or_else(|| Failure::validation("this check needs --s"))
}

fn special(a: &SpecialArgs) -> Outcome<Artifact> {
    let policy = AccuracyPolicy::default();
    let mut cfg = Config::default();
    let check = match a.check {
        Check::Sumpoly => "sumpoly",
        Check::Legendre => "legendre",
        Check::Polylog => "polylog",
        Check::Zeta => "zeta",
    };
    cfg.push("check", check);
    match a.check {
        Check::Sumpoly => {
            let ss = required_s(a)?;
            let thetas = theta_values(a, 1e-4, 1e-2, 16, true)?;
            cfg.push("s", join(&ss));
            cfg.push("theta", join(&thetas));
            cfg.push("fit", a.fit);
            let mut art = Artifact::new("special", cfg, &["s", "theta", "sum", "diff", "ratio"]);
            for &s in &ss {
                for r in sum_poly_rows(s, &thetas, &policy)? {
                    art.rows
                        .push(vec![Cell::F(s), Cell::F(r.theta), Cell::F(r.sum), Cell::F(r.deficit), Cell::F(r.ratio)]);
                }
                if a.fit {
                    let rep = sum_poly_asymptotic_check(s, &thetas, &policy)?;
                    let mut fit = Map::new();
                    fit.insert("case".into(), json!(rep.case.label()));
                    fit.insert("predicted_order".into(), num(rep.predicted_order));
                    fit.insert("fitted_slope".into(), num(rep.fitted_slope));
                    fit.insert("slope_fit_residual".into(), num(rep.slope_fit_residual));
                    if let Some(lf) = rep.log_fit {
                        fit.insert("log_coefficient".into(), num(lf.log_coefficient));
                        fit.insert("log_fit_residual".into(), num(lf.max_relative_residual));
                    }
                    art.summarize(&format!("fit_s{}", fmt_f64(s)), Value::Object(fit));
                }
            }
            Ok(art)
        }
        Check::Legendre => {
            let thetas = theta_values(a, 0.01, 3.1, 50, false)?;
            cfg.push("l_max", a.l_max);
            cfg.push("theta", join(&thetas));
            let mut art = Artifact::new(
                "special",
                cfg,
                &["theta", "ell", "recurrence", "mehler_dirichlet", "abs_diff"],
            );
            let mut worst = 0.0f64;
            for &t in &thetas {
                if !(t > 0.0 && t < std::f64::consts::PI) {
                    return Err(Failure::validation(format!("theta must lie in (0, pi), got {t}")));
                }
                let rec = legendre_batch(a.l_max, t.cos())?;
                for (l, &p) in rec.iter().enumerate() {
                    let md = mehler_dirichlet_p(l, t, &policy)?;
                    worst = worst.max((p - md).abs());
                    art.rows
                        .push(vec![Cell::F(t), Cell::U(l as u64), Cell::F(p), Cell::F(md), Cell::F((p - md).abs())]);
                }
            }
            art.summarize("max_abs_diff", num(worst));
            Ok(art)
        }
        Check::Polylog => {
            let ss = required_s(a)?;
            let psis = a
                .psi
                .as_ref()
                .map(|p| p.0.clone())
                .ok_or_else(|| Failure::validation("polylog check needs --psi"))?;
            cfg.push("s", join(&ss));
            cfg.push("psi", join(&psis));
            let mut art = Artifact::new(
                "special",
                cfg,
                &["s", "psi", "re", "im", "direct_re", "direct_im", "abs_diff"],
            );
            for &s in &ss {
                for &psi in &psis {
                    let v = polylog(s, psi, &policy)?;
                    let d = polylog_direct(s, psi, &policy)?;
                    art.rows.push(vec![
                        Cell::F(s),
                        Cell::F(psi),
                        Cell::F(v.re),
                        Cell::F(v.im),
                        Cell::F(d.re),
                        Cell::F(d.im),
                        Cell::F((v - d).norm()),
                    ]);
                }
            }
            Ok(art)
        }
        Check::Zeta => {
            let ss = required_s(a)?;
            cfg.push("s", join(&ss));
            let mut art = Artifact::new("special", cfg, &["s", "zeta"]);
            for &s in &ss {
                art.rows.push(vec![Cell::F(s), Cell::F(riemann_zeta(s)?)]);
            }
            Ok(art)
        }
    }
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(|&x| fmt_f64(x)).collect::<Vec<_>>().join(",")
}

fn variogram(a: &VariogramArgs) -> Outcome<Artifact> {
    let spec = a.spec.build(4096)?;
    if !(a.theta_min > 0.0 && a.theta_max > a.theta_min && a.theta_max <= std::f64::consts::PI && a.points >= 2) {
        return Err(Failure::validation(
            "need 0 < theta-min < theta-max <= pi and at least 2 points",
        ));
    }
    let grid = log_grid(a.theta_min, a.theta_max, a.points);
    let mut cfg = Config::default();
    a.spec.echo(&spec, &mut cfg);
    cfg.push("theta_min", fmt_f64(a.theta_min));
    cfg.push("theta_max", fmt_f64(a.theta_max));
    cfg.push("points", a.points);
    let rep = sandwich_report(&spec, &grid)?;
    let p = &rep.profile;
    let mut art = Artifact::new("variogram", cfg, &["theta", "variogram", "rho_sq", "ratio", "tail_bound"]);
    for i in 0..p.theta_grid.len() {
        art.rows.push(vec![
            Cell::F(p.theta_grid[i]),
            Cell::F(p.values[i]),
            Cell::F(p.rho_sq[i]),
            Cell::F(p.ratios[i]),
            Cell::F(p.tail_bounds[i]),
        ]);
    }
    art.summarize("c1_estimate", num(rep.c1_estimate));
    art.summarize("spread", num(rep.spread));
    art.summarize("log_slope", num(rep.log_slope));
    art.summarize("unbounded", json!(rep.unbounded));
    Ok(art)
}

fn bump(a: &BumpArgs) -> Outcome<Artifact> {
    let kernel = SmoothingKernel::new(a.order)?;
    if a.points < 2 {
        return Err(Failure::validation("--points must be at least 2"));
    }
    let spec = match a.alpha {
        Some(alpha) => Some(PowerSpectrum::power_law(alpha, a.l_max)?),
        None => None,
    };
    let prof = BumpProfile::new(&kernel, a.eps, a.l_max)?;
    let mut cfg = Config::default();
    cfg.push("eps", fmt_f64(a.eps));
    cfg.push("order", a.order);
    cfg.push("l_max", a.l_max);
    cfg.push("points", a.points);
    cfg.push("table", format!("{:?}", a.table).to_lowercase());
    if let Some(alpha) = a.alpha {
        cfg.push("alpha", alpha);
    }
    let d0 = prof.delta_at_pole();
    let mut art = match a.table {
        BumpTable::Profile => {
            let thetas: Vec<f64> = (0..a.points)
                .map(|i| std::f64::consts::PI * i as f64 / (a.points - 1) as f64)
                .collect();
            let vals = prof.delta_grid(&thetas)?;
            let outside = thetas
                .iter()
                .zip(&vals)
                .filter(|(t, _)| **t >= 1.2 * a.eps)
                .map(|(_, v)| v.abs())
                .fold(0.0, f64::max);
            let tail = prof.delta_tail_bound();
            let mut art = Artifact::new("bump", cfg, &["theta", "delta", "tail_bound"]);
            for (t, v) in thetas.iter().zip(vals) {
                art.rows.push(vec![Cell::F(*t), Cell::F(v), Cell::F(tail)]);
            }
            art.summarize("max_abs_outside_cap", num(outside));
            art
        }
        BumpTable::Coefficients => {
            let mut art = Artifact::new("bump", cfg, &["ell", "b_ell", "kappa"]);
            for l in 1..=prof.l_max() {
                art.rows
                    .push(vec![Cell::U(l as u64), Cell::F(prof.b(l)), Cell::F(prof.kappa(l, 0))]);
            }
            art
        }
    };
    let (c4, c5) = prof.coefficient_constants();
    art.summarize("delta_at_pole", num(d0));
    art.summarize("delta_at_pole_eps2", num(d0 * a.eps * a.eps));
    art.summarize("c3_reference", num(c3_reference(&kernel)));
    art.summarize("decay_sup", num(prof.decay_sup(1)));
    art.summarize("c4", num(c4));
    art.summarize("c5", num(c5));
    if let Some(spec) = spec {
        let w = spectral_weight_sum(&prof, &spec)?;
        art.summarize("spectral_weight", num(w.total.value));
        art.summarize("spectral_weight_tail_bound", num(w.total.tail_bound));
        art.summarize(
            "spectral_weight_scaled",
            num(w.total.value * a.eps.powf(spec.alpha() + 2.0)),
        );
    }
    Ok(art)
}

fn slnd(a: &SlndArgs) -> Outcome<Artifact> {
    let geometry: Geometry = a.geometry.parse()?;
    let scan = ScanConfig {
        alpha: a.alpha,
        epsilons: a.eps.0.clone(),
        n: a.n,
        geometry,
        replicates: a.replicates,
        seed: a.seed,
        exploratory: a.exploratory,
    };
    scan.validate()?;
    let mut cfg = Config::default();
    cfg.push("alpha", a.alpha);
    cfg.push("n", a.n);
    cfg.push("geometry", geometry);
    cfg.push("eps", join(&scan.epsilons));
    cfg.push("replicates", a.replicates);
    cfg.push("seed", a.seed);
    cfg.push("exploratory", a.exploratory);
    let rep = slnd_scan(&scan)?;
    let mut art = Artifact::new(
        "slnd",
        cfg,
        &["epsilon", "replicate", "min_dist", "var", "ratio_c2", "ratio_nd"],
    );
    for r in &rep.rows {
        art.rows.push(vec![
            Cell::F(r.epsilon),
            Cell::U(r.replicate as u64),
            Cell::F(r.min_dist),
            Cell::F(r.var),
            Cell::F(r.ratio_c2),
            Cell::F(r.ratio_nd),
        ]);
    }
    art.summarize("l_max", json!(rep.l_max));
    art.summarize("min_ratio_c2", nums(&rep.min_ratio));
    art.summarize("slope", num(rep.slope));
    art.summarize("collapsed", json!(rep.collapsed));
    art.summarize(&rep.estimate.name, num(rep.estimate.value));
    art.summarize("config_digest", json!(rep.estimate.config_digest));
    art.summarize("non_certifying", json!(rep.non_certifying));
    Ok(art)
}

fn modulus(a: &ModulusArgs) -> Outcome<Artifact> {
    let finest = a.scales.0.iter().copied().max().unwrap_or(1);
    let spec = a.spec.build(recommended_l_max(finest, 4096))?;
    let kind = match &a.kind {
        Some(k) => k.parse::<StatisticKind>()?,
        None if a.k > 0 => StatisticKind::DerivativeForm,
        None if a.spec.alpha == 4.0 => StatisticKind::Alpha4Form,
        None => StatisticKind::RhoForm,
    };
    let exp = ModulusExperiment {
        spec,
        levels: a.scales.0.clone(),
        replicates: a.replicates,
        pairs_per_scale: a.pairs_per_scale,
        kind,
        derivative_order: a.k,
        seed: a.seed,
    };
    exp.validate()?;
    let mut cfg = Config::default();
    a.spec.echo(&exp.spec, &mut cfg);
    cfg.push("k", a.k);
    cfg.push(
        "scales",
        a.scales.0.iter().map(|j| j.to_string()).collect::<Vec<_>>().join(","),
    );
    cfg.push("replicates", a.replicates);
    cfg.push("pairs_per_scale", a.pairs_per_scale);
    cfg.push("kind", kind);
    cfg.push("seed", a.seed);
    let rep = run_modulus_experiment(&exp)?;
    if rep.under_resolved {
        eprintln!(
            "{}",
            json!({"warning": "under_resolved", "message": "some scales are finer than 10/l_max; their statistics are flagged"})
        );
    }
    let mut art = Artifact::new("modulus", cfg, &["scale", "replicate", "statistic", "resolved_flag"]);
    for r in &rep.rows {
        art.rows.push(vec![
            Cell::F(r.scale),
            Cell::U(r.replicate as u64),
            Cell::F(r.statistic),
            Cell::B(r.resolved),
        ]);
    }
    art.summarize("medians", nums(&rep.medians));
    art.summarize("maxima", nums(&rep.maxima));
    art.summarize("median_spread", num(rep.median_spread));
    art.summarize("under_resolved", json!(rep.under_resolved));
    if let Some(e) = &rep.estimate {
        art.summarize(&e.name, num(e.value));
        art.summarize("config_digest", json!(e.config_digest));
    }
    Ok(art)
}

fn synth(a: &SynthArgs) -> Outcome<Artifact> {
    let spec = a.spec.build(256)?;
    if a.n_theta == 0 || a.n_phi == 0 {
        return Err(Failure::validation("grid sizes must be positive"));
    }
    let mut cfg = Config::default();
    a.spec.echo(&spec, &mut cfg);
    cfg.push("k", a.k);
    cfg.push("seed", a.seed);
    cfg.push("replicate", a.replicate);
    cfg.push("n_theta", a.n_theta);
    cfg.push("n_phi", a.n_phi);
    let mut field = FieldRealization::sample(&spec, a.seed, a.replicate);
    if a.k > 0 {
        field = pseudo_diff(&field, a.k);
    }
    let pi = std::f64::consts::PI;
    let mut pts = Vec::with_capacity(a.n_theta * a.n_phi);
    let mut angles = Vec::with_capacity(pts.capacity());
    for i in 0..a.n_theta {
        let theta = pi * (i as f64 + 0.5) / a.n_theta as f64;
        for j in 0..a.n_phi {
            let phi = 2.0 * pi * j as f64 / a.n_phi as f64;
            pts.push(SpherePoint::from_angles(theta, phi));
            angles.push((theta, phi));
        }
    }
    let vals = field.evaluate(&pts)?;
    let mut art = Artifact::new("synth", cfg, &["theta", "phi", "value"]);
    for ((t, p), v) in angles.iter().zip(&vals) {
        art.rows.push(vec![Cell::F(*t), Cell::F(*p), Cell::F(*v)]);
    }
    art.summarize("variance_diverges_in_limit", json!(field.variance_diverges_in_limit()));
    art.summarize("effective_alpha", num(field.spectrum().effective_alpha()));
    Ok(art)
}
