//! Command-line front end.

use crate::curves::CurveError;
use crate::hermitian::{PseudoMatrix, PseudoVector, C64};
use crate::io::{to_canonical_json, write_scan, CurveFile, IoError, Model, ScanRow};
use crate::isoparametric::{Configuration, IsoError, IsoparametricSpec, Kind, RationalRatio};
use crate::knots::{configured_workers, KnotError, LinkOptions};
use crate::reconstruct::{reconstruct, InvariantProfile, ReconError, ReconOptions};
use crate::report::{invariant_report, link_report, Pushoff, ReportError};
use crate::sphere::{chain_from_normal, chain_through, ChainSpec, HeisenbergPoint, SphereError};
use crate::strain::{critical_config, StrainError};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Iso(#[from] IsoError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error(transparent)]
    Knot(#[from] KnotError),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Sphere(#[from] SphereError),
    #[error(transparent)]
    Strain(#[from] StrainError),
    #[error(transparent)]
    Recon(#[from] ReconError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("cannot write output: {0}")]
    Output(#[from] std::io::Error),
}

fn iso_code(e: &IsoError) -> i32 {
    match e {
        IsoError::NoConvergence(_) => 3,
        IsoError::DomainError(_) | IsoError::BadRatio(_) => 2,
        IsoError::Sphere(_) => 1,
    }
}

fn curve_code(e: &CurveError) -> i32 {
    match e {
        CurveError::NonTransversal(_) => 4,
        CurveError::InflectionPresent(_) => 5,
        _ => 1,
    }
}

fn knot_code(e: &KnotError) -> i32 {
    match e {
        KnotError::Unstable { .. } | KnotError::EpsilonTooLarge { .. } => 6,
        KnotError::CurvesIntersect(_) | KnotError::SelfIntersecting(_) => 7,
        KnotError::Curve(c) => curve_code(c),
        _ => 1,
    }
}

impl CliError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Iso(e) => iso_code(e),
            CliError::Report(e) => match e {
                ReportError::NonTransversal => 4,
                ReportError::Inflection { .. } => 5,
                ReportError::Curve(c) => curve_code(c),
                ReportError::Knot(k) => knot_code(k),
                ReportError::Iso(i) => iso_code(i),
            },
            CliError::Knot(e) => knot_code(e),
            CliError::Curve(e) => curve_code(e),
            CliError::Sphere(SphereError::DomainError(_)) => 2,
            CliError::Strain(StrainError::Iso(e)) => iso_code(e),
            CliError::Strain(StrainError::InvalidType(..)) => 2,
            CliError::Recon(ReconError::InvalidStep(_)) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "cr3", version, about = "CR invariants of transversal curves in the 3-sphere")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a symmetrical configuration and write it as a curve file.
    Construct(ConstructArgs),
    /// Bending, twist, Maslov index, spin, anomaly and strain of a curve file.
    Invariants(InvariantsArgs),
    /// Linking number of a closed curve with a push-off.
    Link(LinkArgs),
    /// The critical configuration of a positive torus type.
    Critical(CriticalArgs),
    /// Closed-form invariants over a parameter grid, as CSV.
    Scan(ScanArgs),
    /// Integrate the frame equation for given bending and twist.
    Reconstruct(ReconstructArgs),
    /// Sample a chain.
    Chain(ChainArgs),
}

#[derive(Debug, Args)]
pub struct ConstructArgs {
    #[arg(long)]
    pub kind: Kind,
    /// Spectral ratio as M/N.
    #[arg(long, allow_hyphen_values = true)]
    pub r: RationalRatio,
    #[arg(long, allow_hyphen_values = true)]
    pub rho: f64,
    #[arg(long, default_value_t = 512)]
    pub samples: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "lift")]
    pub model: ModelArg,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum ModelArg {
    Heisenberg,
    Lift,
}

impl From<ModelArg> for Model {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Heisenberg => Model::Heisenberg,
            ModelArg::Lift => Model::Lift,
        }
    }
}

#[derive(Debug, Args)]
pub struct InvariantsArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LinkArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub pushoff: Pushoff,
    /// Push-off distance; chosen from the curve geometry when omitted.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, default_value_t = 1024)]
    pub quadrature: usize,
    /// Raise the quadrature so that the grid spacing stays below epsilon/2.
    #[arg(long)]
    pub refine: bool,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CriticalArgs {
    #[arg(long)]
    pub p: i64,
    #[arg(long)]
    pub q: i64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[arg(long)]
    pub kind: Kind,
    /// Comma-separated ratios M/N.
    #[arg(long, allow_hyphen_values = true, value_delimiter = ',', required = true)]
    pub r_list: Vec<RationalRatio>,
    /// lo:hi:n, n equally spaced values including both ends.
    #[arg(long)]
    pub rho_grid: RhoGrid,
    /// Also estimate the Bennequin and self-linking numbers.
    #[arg(long)]
    pub links: bool,
    #[arg(long, default_value_t = 1024)]
    pub samples: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    /// Expression in `s`, or a CSV file of `s,value` rows on a uniform grid.
    #[arg(long, allow_hyphen_values = true)]
    pub kappa: String,
    #[arg(long, allow_hyphen_values = true)]
    pub tau: String,
    #[arg(long)]
    pub length: f64,
    #[arg(long, default_value_t = 0.01)]
    pub step: f64,
    /// Relative tolerance for recognizing a closed frame.
    #[arg(long, default_value_t = 1e-6)]
    pub closing_tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "lift")]
    pub model: ModelArg,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("chain").required(true).args(["normal", "through"])))]
pub struct ChainArgs {
    /// Complex normal vector a,b,c (e.g. 0.9,0.7071+0.7071i,-1i).
    #[arg(long, allow_hyphen_values = true, value_delimiter = ',', num_args = 1)]
    pub normal: Option<Vec<C64>>,
    #[arg(long, allow_hyphen_values = true, value_delimiter = ',', requires = "dir")]
    pub through: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true, value_delimiter = ',')]
    pub dir: Option<Vec<f64>>,
    #[arg(long, default_value_t = 256)]
    pub samples: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoGrid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl RhoGrid {
    pub fn values(&self) -> Vec<f64> {
        match self.n {
            0 => vec![],
            1 => vec![self.lo],
            n => (0..n).map(|k| self.lo + (self.hi - self.lo) * k as f64 / (n - 1) as f64).collect(),
        }
    }
}

impl std::str::FromStr for RhoGrid {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || format!("expected lo:hi:n, got '{s}'");
        if parts.len() != 3 {
            return Err(bad());
        }
        Ok(RhoGrid {
            lo: parts[0].trim().parse().map_err(|_| bad())?,
            hi: parts[1].trim().parse().map_err(|_| bad())?,
            n: parts[2].trim().parse().map_err(|_| bad())?,
        })
    }
}

fn emit(out: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text)
            .map_err(|source| IoError::File { path: p.display().to_string(), source })?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn emit_json<T: Serialize>(out: Option<&Path>, value: &T, stdout: &mut dyn Write) -> Result<(), CliError> {
    emit(out, &to_canonical_json(value)?, stdout)
}

fn config_meta(cfg: &Configuration, samples: usize) -> Map<String, Value> {
    let f = &cfg.forms;
    let mut m = Map::new();
    m.insert("kind".into(), cfg.spec.kind.to_string().into());
    m.insert("r".into(), cfg.spec.r.to_string().into());
    m.insert("rho".into(), json!(cfg.spec.rho));
    m.insert("samples".into(), json!(samples));
    m.insert("knot".into(), format!("({},{})", f.knot.0, f.knot.1).into());
    m.insert("spin".into(), f.spin.to_string().into());
    m.insert("anomaly".into(), f.anomaly.to_string().into());
    m.insert("maslov".into(), json!(f.maslov));
    m.insert("kappa".into(), json!(cfg.kappa));
    m.insert("tau".into(), json!(cfg.tau));
    m.insert("speed".into(), json!(cfg.speed));
    m.insert("sigma".into(), json!([cfg.sigma.re, cfg.sigma.im]));
    m.insert("omega_lift".into(), json!(cfg.omega_lift()));
    m.insert("curve_period".into(), json!(cfg.curve_period()));
    m
}

fn cmd_construct(a: &ConstructArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    if a.samples < 8 {
        return Err(CliError::Usage(format!("--samples must be at least 8, got {}", a.samples)));
    }
    let cfg = Configuration::new(IsoparametricSpec::new(a.kind, a.r, a.rho)?)?;
    let curve = match a.model {
        ModelArg::Lift => cfg.sampled_lift(a.samples),
        ModelArg::Heisenberg => cfg.sampled_heisenberg(a.samples)?,
    };
    let file = CurveFile::from_curve(&curve, a.model.into(), config_meta(&cfg, a.samples))?;
    emit_json(a.out.as_deref(), &file, stdout)
}

fn cmd_invariants(a: &InvariantsArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let file = CurveFile::read(&a.input)?;
    let report = invariant_report(&file.to_curve()?, &file.meta)?;
    emit_json(a.report.as_deref(), &report, stdout)
}

fn cmd_link(a: &LinkArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    if let Some(e) = a.epsilon {
        if !(e > 0.0) {
            return Err(CliError::Usage(format!("--epsilon must be positive, got {e}")));
        }
    }
    if a.quadrature < 16 {
        return Err(CliError::Usage(format!("--quadrature must be at least 16, got {}", a.quadrature)));
    }
    let file = CurveFile::read(&a.input)?;
    let curve = file.to_curve()?;
    if !curve.periodic {
        return Err(KnotError::NotClosed.into());
    }
    let opts = LinkOptions { quadrature: a.quadrature, epsilon: a.epsilon, refine: a.refine };
    let report = link_report(&curve, a.pushoff, &opts)?;
    emit_json(a.report.as_deref(), &report, stdout)
}

fn cmd_critical(a: &CriticalArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let (solution, _, found) = critical_config(a.p, a.q)?;
    let out = json!({
        "p": solution.p,
        "q": solution.q,
        "r": solution.r,
        "rho_star": solution.rho_star,
        "kappa": solution.kappa,
        "tau": solution.tau,
        "residual": solution.residual,
        "end_to_end_residual": solution.end_to_end_residual,
        "roots": found.roots,
        "quartic_at_root": found.quartic_at_root,
        "comparisons": found.report,
    });
    emit_json(a.out.as_deref(), &out, stdout)
}

fn scan_row(kind: Kind, r: RationalRatio, rho: f64, samples: usize, links: bool) -> Result<ScanRow, CliError> {
    let cfg = Configuration::new(IsoparametricSpec::new(kind, r, rho)?)?;
    let f = &cfg.forms;
    let mut row = ScanRow {
        kind: kind.to_string(),
        r: r.to_string(),
        rho,
        kappa: cfg.kappa,
        tau: cfg.tau,
        p: f.knot.0,
        q: f.knot.1,
        spin: f.spin.to_string(),
        maslov: f.maslov,
        omega: cfg.omega_lift(),
        // the configuration is naturally parametrized
        strain: cfg.curve_period(),
        beta_raw: None,
        beta: None,
        sl_raw: None,
        sl: None,
    };
    if links {
        let curve = cfg.sampled_lift(samples);
        let opts = LinkOptions { refine: false, ..LinkOptions::default() };
        if let Ok(b) = link_report(&curve, Pushoff::Contact, &opts) {
            row.beta_raw = Some(b.result.raw_integral);
            row.beta = Some(b.result.rounded);
        }
        if let Ok(s) = link_report(&curve, Pushoff::CrNormal, &opts) {
            row.sl_raw = Some(s.result.raw_integral);
            row.sl = Some(s.result.rounded);
        }
    }
    Ok(row)
}

fn cmd_scan(a: &ScanArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    if a.rho_grid.n == 0 {
        return Err(CliError::Usage("--rho-grid needs at least one point".into()));
    }
    let points: Vec<(RationalRatio, f64)> = a
        .r_list
        .iter()
        .flat_map(|&r| a.rho_grid.values().into_iter().map(move |rho| (r, rho)))
        .collect();
    let run = || -> Vec<Result<ScanRow, CliError>> {
        points
            .par_iter()
            .map(|&(r, rho)| scan_row(a.kind, r, rho, a.samples, a.links))
            .collect()
    };
    let results = match configured_workers() {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map(|pool| pool.install(run))
            .unwrap_or_else(|_| run()),
        None => run(),
    };
    let mut rows = Vec::with_capacity(results.len());
    for ((r, rho), res) in points.iter().zip(results) {
        match res {
            Ok(row) => rows.push(row),
            Err(e) => writeln!(stderr, "skipping r = {r}, rho = {rho}: {e}")?,
        }
    }
    let mut buf = Vec::new();
    write_scan(&mut buf, &rows)?;
    emit(a.out.as_deref(), &String::from_utf8(buf).expect("csv writes UTF-8"), stdout)
}

type Scalar = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

fn math_context() -> evalexpr::HashMapContext {
    use evalexpr::{ContextWithMutableFunctions, ContextWithMutableVariables, Function, Value};
    let mut ctx = evalexpr::HashMapContext::new();
    let unary: [(&str, fn(f64) -> f64); 10] = [
        ("sin", f64::sin),
        ("cos", f64::cos),
        ("tan", f64::tan),
        ("exp", f64::exp),
        ("ln", f64::ln),
        ("sqrt", f64::sqrt),
        ("abs", f64::abs),
        ("sinh", f64::sinh),
        ("cosh", f64::cosh),
        ("tanh", f64::tanh),
    ];
    for (name, f) in unary {
        ctx.set_function(name.into(), Function::new(move |v| Ok(Value::Float(f(v.as_number()?)))))
            .expect("function names are valid");
    }
    ctx.set_value("pi".into(), Value::Float(std::f64::consts::PI)).expect("constant");
    ctx
}

fn expression_scalar(expr: &str) -> Result<Scalar, CliError> {
    use evalexpr::{ContextWithMutableVariables, Value};
    let tree = evalexpr::build_operator_tree(expr)
        .map_err(|e| CliError::Usage(format!("cannot parse expression '{expr}': {e}")))?;
    let ctx = Mutex::new(math_context());
    let eval = move |s: f64| -> Result<f64, evalexpr::EvalexprError> {
        let mut ctx = ctx.lock().unwrap_or_else(|p| p.into_inner());
        ctx.set_value("s".into(), Value::Float(s))?;
        tree.eval_number_with_context(&*ctx)
    };
    eval(0.0).map_err(|e| CliError::Usage(format!("cannot evaluate '{expr}': {e}")))?;
    Ok(Arc::new(move |s| eval(s).unwrap_or(f64::NAN)))
}

fn sampled_scalar(path: &Path) -> Result<Scalar, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(IoError::from)?;
    let mut s = Vec::new();
    let mut v = Vec::new();
    for rec in reader.deserialize::<(f64, f64)>() {
        let (a, b) = rec.map_err(IoError::from)?;
        s.push(a);
        v.push(b);
    }
    if s.len() < 2 {
        return Err(CliError::Usage(format!("{}: need at least two rows", path.display())));
    }
    let step = (s[s.len() - 1] - s[0]) / (s.len() - 1) as f64;
    let uniform = step > 0.0
        && s.iter().enumerate().all(|(k, &x)| (x - s[0] - k as f64 * step).abs() <= 1e-9 * step.max(1.0));
    if !uniform {
        return Err(CliError::Usage(format!("{}: grid is not uniform and increasing", path.display())));
    }
    let profile = InvariantProfile::Sampled { start: s[0], step, kappa: v.clone(), tau: v };
    Ok(Arc::new(move |x| profile.eval(x).map(|p| p.0).unwrap_or(f64::NAN)))
}

fn scalar_source(arg: &str) -> Result<Scalar, CliError> {
    let path = Path::new(arg);
    if path.is_file() {
        sampled_scalar(path)
    } else {
        expression_scalar(arg)
    }
}

fn cmd_reconstruct(a: &ReconstructArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    if !(a.length > 0.0) || !(a.step > 0.0) || a.step > a.length {
        return Err(CliError::Usage(format!(
            "need 0 < step <= length, got step {} and length {}",
            a.step, a.length
        )));
    }
    let kappa = scalar_source(&a.kappa)?;
    let tau = scalar_source(&a.tau)?;
    let profile = InvariantProfile::function(move |s| (kappa(s), tau(s)));
    let run = reconstruct(&profile, &PseudoMatrix::identity(), 0.0, a.length, a.step, ReconOptions::default())?;
    if run.frames.iter().any(|f| f.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())) {
        return Err(CliError::Usage("bending or twist is undefined on part of [0, length]".into()));
    }
    let closing = run.closing_factor(a.closing_tol);
    let curve = match closing {
        Some(_) => run.periodic_curve(a.closing_tol)?,
        None => run.curve(),
    };
    let mut meta = Map::new();
    meta.insert("kappa".into(), a.kappa.clone().into());
    meta.insert("tau".into(), a.tau.clone().into());
    meta.insert("length".into(), json!(a.length));
    meta.insert("step".into(), json!(run.params[1] - run.params[0]));
    meta.insert("closed".into(), json!(closing.is_some()));
    meta.insert("max_drift".into(), json!(run.max_drift));
    meta.insert("max_error_estimate".into(), json!(run.max_error_estimate));
    let file = CurveFile::from_curve(&curve, a.model.into(), meta)?;
    emit_json(a.out.as_deref(), &file, stdout)
}

fn cmd_chain(a: &ChainArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let mut meta = Map::new();
    let curve = if let Some(n) = &a.normal {
        if n.len() != 3 {
            return Err(CliError::Usage(format!("--normal needs three complex entries, got {}", n.len())));
        }
        let spec = ChainSpec::new(PseudoVector::new(n[0], n[1], n[2]))?;
        let (radius, cx, cy, z0) = spec.ellipse()?;
        meta.insert("normal".into(), json!(n.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>()));
        meta.insert("radius".into(), json!(radius));
        meta.insert("center".into(), json!([cx, cy, z0]));
        chain_from_normal(&spec, a.samples)?
    } else {
        let (p, d) = match (&a.through, &a.dir) {
            (Some(p), Some(d)) if p.len() == 3 && d.len() == 3 => (p, d),
            _ => return Err(CliError::Usage("--through and --dir need three coordinates each".into())),
        };
        meta.insert("through".into(), json!(p));
        meta.insert("dir".into(), json!(d));
        chain_through(HeisenbergPoint::new(p[0], p[1], p[2]), [d[0], d[1], d[2]], a.samples)?
    };
    let file = CurveFile::from_curve(&curve, Model::Heisenberg, meta)?;
    emit_json(a.out.as_deref(), &file, stdout)
}

pub fn execute(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Construct(a) => cmd_construct(a, stdout),
        Command::Invariants(a) => cmd_invariants(a, stdout),
        Command::Link(a) => cmd_link(a, stdout),
        Command::Critical(a) => cmd_critical(a, stdout),
        Command::Scan(a) => cmd_scan(a, stdout, stderr),
        Command::Reconstruct(a) => cmd_reconstruct(a, stdout),
        Command::Chain(a) => cmd_chain(a, stdout),
    }
}

/// Parses `args`, runs the command and returns the exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
