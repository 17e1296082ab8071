//! The `cartan3` command-line tool.
//!
//! Exit codes: 0 success, 1 failed verification, 2 invalid input, 3 numerical failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::domains::{random_interior_point, DomainPoint, DomainTag};
use crate::error::{Error, Result};
use crate::geometry::{hamiltonian_residual, moment, Action, GroupGenerator, MomentValue};
use crate::linalg::{ComplexSymMatrix, PosDefMatrix, RealSymMatrix, C64};
use crate::montecarlo::{McConfig, MIN_SAMPLES};
use crate::oracle::{
    commutator_check, gram_matrix, monomial_basis, reproduce_check, toeplitz_matrix, CheckReport, Integrator, Monomial,
    Verdict,
};
use crate::spectral::{
    c_coeff, c_coeff_full, c_elliptic, fourier_laplace_adjoint, gamma_parabolic, CoeffConfig, CoeffMethod,
    ConeQuadConfig, Signature, SpectralTable,
};
use crate::symbols::{
    invariance_residual, symbol_from_json, ConeProfile, Group, RawBuiltin, ScalarProfile, SymbolKind, SymbolSpec,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "cartan3",
    version,
    about = "Toeplitz spectra, moment maps and kernel checks on Cartan domains of type III"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Eigenvalues c(α) of a U(n)-invariant Toeplitz operator on the bounded domain.
    CTable(CTableArgs),
    /// The parabolic spectral function on a grid of diagonal matrices.
    Gamma(GammaArgs),
    /// Value of a moment map at a point, as JSON.
    Moment(MomentArgs),
    /// Run a verification suite and report each check.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Options shared by the computing commands.
#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100_000)]
    pub mc_samples: u64,
    #[arg(long, default_value_t = 32)]
    pub quad_order: usize,
    /// Worker threads for Monte Carlo (defaults to CARTAN3_WORKERS, then the core count).
    #[arg(long, env = "CARTAN3_WORKERS")]
    pub workers: Option<usize>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Validated run settings, embedded in every output (except the destination, so the same
/// run written to different files gives identical bytes).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub seed: u64,
    pub mc_samples: u64,
    pub quad_order: usize,
    pub workers: usize,
    pub output: OutputFormat,
    #[serde(skip)]
    pub out_path: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_args(a: &RunArgs) -> Result<Self> {
        if a.mc_samples < MIN_SAMPLES {
            return Err(Error::InvalidInput(format!("--mc-samples must be at least {MIN_SAMPLES}")));
        }
        if a.quad_order < 4 {
            return Err(Error::InvalidInput("--quad-order must be at least 4".into()));
        }
        let workers = a.workers.unwrap_or_else(crate::montecarlo::default_workers);
        if workers == 0 {
            return Err(Error::InvalidInput("--workers must be at least 1".into()));
        }
        Ok(Self {
            seed: a.seed,
            mc_samples: a.mc_samples,
            quad_order: a.quad_order,
            workers,
            output: a.format,
            out_path: a.out.clone(),
        })
    }

    pub fn mc(&self) -> McConfig {
        McConfig { samples: self.mc_samples, seed: self.seed, workers: self.workers }
    }
}

#[derive(Debug, Clone, Args)]
#[command(group(ArgGroup::new("alphas_or_degree").required(true).args(["alphas", "max_degree"])))]
pub struct CTableArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub lambda: f64,
    /// Symbol as JSON, or @path to a JSON file.
    #[arg(long)]
    pub symbol: String,
    /// Signatures separated by ';', entries by ',' (e.g. "2,1;1,1").
    #[arg(long)]
    pub alphas: Option<String>,
    /// All signatures with |α| up to this degree.
    #[arg(long)]
    pub max_degree: Option<u32>,
    /// reduced, full or auto (reduced for n = 1, full otherwise).
    #[arg(long, default_value = "auto")]
    pub method: String,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Args)]
pub struct GammaArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub lambda: f64,
    /// A parabolic symbol as JSON (or @path), e.g. {"kind":"parabolic","profile":"exp_neg"}.
    #[arg(long)]
    pub symbol: String,
    /// Points separated by ';': a single value x means x·I, n values a diagonal; or lo:hi:count.
    #[arg(long)]
    pub grid: String,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Args)]
pub struct MomentArgs {
    /// elliptic, hyperbolic or parabolic.
    #[arg(long)]
    pub action: String,
    /// Matrix as JSON rows; entries are numbers or [re, im] pairs.
    #[arg(long)]
    pub point: String,
    /// bounded or siegel; defaults to the domain of the action.
    #[arg(long)]
    pub domain: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// geometry, symbols, spectral, oracle or all.
    pub suite: String,
    #[command(flatten)]
    pub run: RunArgs,
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidInput(_) | Error::Domain(_) => EXIT_INVALID,
        _ => EXIT_NUMERICAL,
    }
}

/// Parses arguments and runs the command; returns the process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    run(cli)
}

pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::CTable(a) => cmd_c_table(&a),
        Command::Gamma(a) => cmd_gamma(&a),
        Command::Moment(a) => cmd_moment(&a),
        Command::Verify(a) => cmd_verify(&a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn read_symbol(text: &str) -> Result<SymbolSpec> {
    let body = match text.strip_prefix('@') {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidInput(format!("cannot read symbol file {path}: {e}")))?,
        None => text.to_string(),
    };
    symbol_from_json(&body)
}

fn emit(out: Option<&PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(content.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Error::InvalidInput(format!("cannot write to standard output: {e}")))
        }
    }
}

fn csv_preamble(cfg: &RunConfig, params: &Value) -> String {
    format!(
        "# cartan3 {VERSION}\n# config {}\n# params {}\n",
        serde_json::to_string(cfg).expect("config serializes"),
        params
    )
}

fn json_document(cfg: &RunConfig, params: Value, body_key: &str, body: Value) -> String {
    let mut doc = json!({ "version": VERSION, "config": cfg, "params": params });
    doc[body_key] = body;
    serde_json::to_string_pretty(&doc).expect("document serializes") + "\n"
}

/// Parses "2,1;1,0" into signatures.
pub fn parse_alphas(text: &str, n: usize) -> Result<Vec<Signature>> {
    let sigs: Vec<Signature> =
        text.split(';').filter(|s| !s.trim().is_empty()).map(|s| s.parse::<Signature>()).collect::<Result<_>>()?;
    if sigs.is_empty() {
        return Err(Error::InvalidInput("no signatures given".into()));
    }
    if let Some(s) = sigs.iter().find(|s| s.n() != n) {
        return Err(Error::InvalidInput(format!("signature {s} does not have {n} entries")));
    }
    Ok(sigs)
}

pub fn cmd_c_table(a: &CTableArgs) -> Result<i32> {
    let cfg = RunConfig::from_args(&a.run)?;
    if a.n == 0 {
        return Err(Error::InvalidInput("--n must be positive".into()));
    }
    let symbol = read_symbol(&a.symbol)?;
    let method: CoeffMethod = a.method.parse()?;
    let alphas = match (&a.alphas, a.max_degree) {
        (Some(text), _) => parse_alphas(text, a.n)?,
        (None, Some(d)) => Signature::up_to_degree(a.n, d),
        (None, None) => return Err(Error::InvalidInput("give --alphas or --max-degree".into())),
    };
    let table =
        SpectralTable::compute(&symbol, a.lambda, &alphas, method, &CoeffConfig::new(cfg.quad_order, cfg.mc()))?;
    let params = json!({
        "command": "c-table",
        "n": a.n,
        "lambda": a.lambda,
        "symbol": a.symbol,
        "method": a.method,
    });
    let content = match cfg.output {
        OutputFormat::Csv => csv_preamble(&cfg, &params) + &table.to_csv(),
        OutputFormat::Json => {
            json_document(&cfg, params, "table", serde_json::to_value(&table).expect("table serializes"))
        }
    };
    emit(cfg.out_path.as_ref(), &content)?;
    Ok(EXIT_OK)
}

/// Parses a grid of diagonal matrices: "x;y;…" (x·I), "a,b;c,d" (diagonals), or "lo:hi:count".
pub fn parse_grid(text: &str, n: usize) -> Result<Vec<Vec<f64>>> {
    let bad = |what: &str| Error::InvalidInput(format!("malformed grid '{text}': {what}"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(&format!("'{}' is not a number", s.trim())));
    let points: Vec<Vec<f64>> = if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("ranges are lo:hi:count"));
        }
        let (lo, hi) = (num(parts[0])?, num(parts[1])?);
        let count: usize = parts[2].trim().parse().map_err(|_| bad("count must be a positive integer"))?;
        if count == 0 {
            return Err(bad("count must be a positive integer"));
        }
        (0..count)
            .map(|i| {
                let x = if count == 1 { lo } else { lo + (hi - lo) * i as f64 / (count - 1) as f64 };
                vec![x; n]
            })
            .collect()
    } else {
        text.split(';')
            .filter(|s| !s.trim().is_empty())
            .map(|p| {
                let vals: Vec<f64> = p.split(',').map(num).collect::<Result<_>>()?;
                match vals.len() {
                    1 => Ok(vec![vals[0]; n]),
                    k if k == n => Ok(vals),
                    k => Err(bad(&format!("point with {k} entries for n = {n}"))),
                }
            })
            .collect::<Result<_>>()?
    };
    if points.is_empty() {
        return Err(bad("no points"));
    }
    if points.iter().flatten().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(bad("entries must be positive and finite"));
    }
    Ok(points)
}

fn cone_profile(symbol: &SymbolSpec) -> Result<ConeProfile> {
    match symbol.kind() {
        SymbolKind::ParabolicMoment(p) => Ok(p.clone()),
        _ => Err(Error::InvalidInput("gamma needs a parabolic symbol".into())),
    }
}

pub fn cmd_gamma(a: &GammaArgs) -> Result<i32> {
    let cfg = RunConfig::from_args(&a.run)?;
    if a.n == 0 {
        return Err(Error::InvalidInput("--n must be positive".into()));
    }
    let profile = cone_profile(&read_symbol(&a.symbol)?)?;
    let grid = parse_grid(&a.grid, a.n)?;
    let quad = ConeQuadConfig { order: cfg.quad_order, ..ConeQuadConfig::default() };
    let mut rows = Vec::with_capacity(grid.len());
    for x in &grid {
        let xm = PosDefMatrix::diagonal(x)?;
        let g = gamma_parabolic(|y| profile.eval(y), a.lambda, &xm, &quad)?;
        if let Some(w) = &g.warning {
            eprintln!("warning: x = {x:?}: {w}");
        }
        rows.push((x.clone(), g));
    }
    let params = json!({ "command": "gamma", "n": a.n, "lambda": a.lambda, "symbol": a.symbol, "grid": a.grid });
    let content = match cfg.output {
        OutputFormat::Csv => {
            let mut s = csv_preamble(&cfg, &params) + "x,gamma_re,gamma_im,error_estimate\n";
            for (x, g) in &rows {
                let xs: Vec<String> = x.iter().map(|v| format!("{v:?}")).collect();
                s += &format!("{},{:?},{:?},{:?}\n", xs.join(";"), g.value.re, g.value.im, g.error_estimate);
            }
            s
        }
        OutputFormat::Json => {
            let body: Vec<Value> = rows
                .iter()
                .map(|(x, g)| {
                    json!({ "x": x, "gamma_re": g.value.re, "gamma_im": g.value.im,
                            "error_estimate": g.error_estimate, "warning": g.warning })
                })
                .collect();
            json_document(&cfg, params, "values", Value::Array(body))
        }
    };
    emit(cfg.out_path.as_ref(), &content)?;
    Ok(EXIT_OK)
}

/// Parses JSON rows whose entries are numbers or `[re, im]` pairs.
pub fn parse_matrix(text: &str) -> Result<ComplexSymMatrix> {
    let bad = |what: &str| Error::InvalidInput(format!("malformed matrix: {what}"));
    let v: Value = serde_json::from_str(text).map_err(|e| bad(&e.to_string()))?;
    let rows = v.as_array().ok_or_else(|| bad("expected an array of rows"))?;
    let n = rows.len();
    let mut dense = nalgebra::DMatrix::<C64>::zeros(n, n);
    for (j, row) in rows.iter().enumerate() {
        let row = row.as_array().filter(|r| r.len() == n).ok_or_else(|| bad("rows must form a square array"))?;
        for (k, e) in row.iter().enumerate() {
            dense[(j, k)] = match e {
                Value::Number(x) => C64::new(x.as_f64().ok_or_else(|| bad("entry out of range"))?, 0.0),
                Value::Array(p) if p.len() == 2 => {
                    let re = p[0].as_f64().ok_or_else(|| bad("pair entries must be numbers"))?;
                    let im = p[1].as_f64().ok_or_else(|| bad("pair entries must be numbers"))?;
                    C64::new(re, im)
                }
                _ => return Err(bad("entries are numbers or [re, im] pairs")),
            };
        }
    }
    if n == 0 {
        return Err(bad("empty matrix"));
    }
    ComplexSymMatrix::from_dense(&dense)
}

fn moment_json(m: &MomentValue) -> Value {
    match m {
        MomentValue::Scalar(v) => json!(v),
        MomentValue::Matrix(s) => serde_json::to_value(s).expect("matrix serializes"),
    }
}

pub fn cmd_moment(a: &MomentArgs) -> Result<i32> {
    let action: Action = a.action.parse()?;
    let tag = match &a.domain {
        Some(d) => d.parse::<DomainTag>()?,
        None => action.domain(),
    };
    if tag != action.domain() {
        return Err(Error::InvalidInput(format!(
            "the {} action lives on the {} domain",
            action.name(),
            action.domain().name()
        )));
    }
    let z = DomainPoint::new(tag, parse_matrix(&a.point)?)?;
    let m = moment(action, &z)?;
    emit(a.out.as_ref(), &(serde_json::to_string(&moment_json(&m)).expect("value serializes") + "\n"))?;
    Ok(EXIT_OK)
}

/// The verification suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Geometry,
    Symbols,
    Spectral,
    Oracle,
    All,
}

impl std::str::FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "geometry" => Ok(Suite::Geometry),
            "symbols" => Ok(Suite::Symbols),
            "spectral" => Ok(Suite::Spectral),
            "oracle" => Ok(Suite::Oracle),
            "all" => Ok(Suite::All),
            other => {
                Err(Error::InvalidInput(format!("unknown suite '{other}' (geometry, symbols, spectral, oracle, all)")))
            }
        }
    }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Membership-spectrum floor for geometry test points; the finite-difference error constant
/// grows without bound toward the boundary.
pub const GEOMETRY_MARGIN: f64 = 0.7;

/// A random tangent vector of unit norm in the real coordinates.
pub fn random_unit_tangent(n: usize, rng: &mut ChaCha8Rng) -> Result<ComplexSymMatrix> {
    use rand::Rng;
    let v = ComplexSymMatrix::from_fn(n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let norm = v.real_coords().iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::Numerical("degenerate random tangent vector".into()));
    }
    Ok(v.scale(c(1.0 / norm, 0.0)))
}

fn geometry_checks(cfg: &RunConfig) -> Result<Vec<CheckReport>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::new();
    for action in [Action::AbelianElliptic, Action::AbelianHyperbolic, Action::Parabolic] {
        let mut worst = 0.0_f64;
        for _ in 0..5 {
            let z = random_interior_point(action.domain(), 2, GEOMETRY_MARGIN, &mut rng)?;
            let v = random_unit_tangent(2, &mut rng)?;
            let gen = match action {
                Action::AbelianElliptic => GroupGenerator::AbelianElliptic(1.0),
                Action::AbelianHyperbolic => GroupGenerator::AbelianHyperbolic(1.0),
                Action::Parabolic => GroupGenerator::Parabolic(RealSymMatrix::from_packed(2, vec![0.7, -0.4, 1.1])?),
            };
            worst = worst.max(hamiltonian_residual(&gen, &z, &v, 1e-4)?);
        }
        out.push(CheckReport::exact(
            "hamiltonian_residual",
            json!({ "action": action.name(), "n": 2, "points": 5, "h": 1e-4, "margin": GEOMETRY_MARGIN }),
            worst,
            1e-6,
        ));
    }
    Ok(out)
}

fn symbol_checks(cfg: &RunConfig) -> Result<Vec<CheckReport>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5157);
    let cases = [
        ("elliptic exp_neg under U(n)", SymbolSpec::elliptic(ScalarProfile::ExpNeg), Group::Un, 1e-10),
        (
            "hyperbolic gaussian under GL(n,R)",
            SymbolSpec::hyperbolic(ScalarProfile::Gaussian { scale: 2.0 }),
            Group::GLnR,
            1e-10,
        ),
        (
            "parabolic trace exp_neg under Symm(n,R)",
            SymbolSpec::parabolic(ConeProfile::Trace(ScalarProfile::ExpNeg.into())),
            Group::SymmnR,
            0.0,
        ),
    ];
    let mut out = Vec::new();
    for (name, spec, group, tol) in cases {
        let r = invariance_residual(&spec, group, 2, 20, &mut rng)?;
        out.push(CheckReport::exact("invariance_residual", json!({ "symbol": name, "n": 2, "trials": 20 }), r, tol));
    }
    Ok(out)
}

fn spectral_checks(cfg: &RunConfig) -> Result<Vec<CheckReport>> {
    let mut out = Vec::new();
    let coeff = CoeffConfig::new(cfg.quad_order, cfg.mc());
    let radial = SymbolSpec::raw(RawBuiltin::Radial, DomainTag::BoundedDIII);
    let mut worst = 0.0_f64;
    for k in 0..=8u32 {
        let v = c_coeff(&radial, 2.0, &Signature::new(vec![k])?, &coeff)?;
        worst = worst.max((v.value - c((k as f64 + 1.0) / (k as f64 + 2.0), 0.0)).norm());
    }
    out.push(CheckReport::exact("c_coeff radial", json!({ "n": 1, "lambda": 2.0, "k_max": 8 }), worst, 1e-8));

    let mut worst = 0.0_f64;
    for k in 0..=5u32 {
        let v = c_elliptic(&ScalarProfile::Power { p: -1.0 }.into(), 2.0, &Signature::new(vec![k])?, &coeff)?;
        worst = worst.max((v.value - c(1.0 / (k as f64 + 2.0), 0.0)).norm());
    }
    out.push(CheckReport::exact("c_elliptic reciprocal", json!({ "n": 1, "lambda": 2.0, "k_max": 5 }), worst, 1e-8));

    let quad = ConeQuadConfig::default();
    for (n, lambda, tol) in [(1usize, 2.5, 1e-8), (2, 3.5, 1e-4)] {
        let x = PosDefMatrix::diagonal(&vec![0.8; n])?;
        let g = gamma_parabolic(|_| c(1.0, 0.0), lambda, &x, &quad)?;
        out.push(CheckReport::exact(
            "gamma unital",
            json!({ "n": n, "lambda": lambda }),
            (g.value - c(1.0, 0.0)).norm(),
            tol,
        ));
    }
    let mut worst = 0.0_f64;
    for x in [0.5, 1.0, 2.0] {
        let g = gamma_parabolic(|y| c((-y.trace()).exp(), 0.0), 2.0, &PosDefMatrix::diagonal(&[x])?, &quad)?;
        worst = worst.max((g.value - c(2.0 * x / (2.0 * x + 1.0), 0.0)).norm());
    }
    out.push(CheckReport::exact("gamma exp_neg", json!({ "n": 1, "lambda": 2.0 }), worst, 1e-6));

    let z = c(0.5, 0.8);
    let p = DomainPoint::new(DomainTag::SiegelS, ComplexSymMatrix::diagonal(&[z]))?;
    let r = fourier_laplace_adjoint(|x| c((-x.trace()).exp() * x.trace().sqrt(), 0.0), 2.0, &p, 1.0, &quad)?;
    let want = (c(1.0, 0.0) - c(0.0, 1.0) * z).powi(-2);
    out.push(CheckReport::exact(
        "fourier_laplace closed form",
        json!({ "n": 1, "lambda": 2.0, "z": [z.re, z.im] }),
        (r.value - want).norm(),
        1e-8,
    ));

    let alpha = Signature::new(vec![2])?;
    let red = c_coeff(&radial, 2.5, &alpha, &coeff)?;
    let full = c_coeff_full(&radial, 2.5, &alpha, &cfg.mc())?;
    let sigma = red.std_error.hypot(full.std_error);
    out.push(CheckReport::noisy(
        "c_coeff vs c_coeff_full",
        json!({ "n": 1, "lambda": 2.5, "alpha": [2], "mc_samples": cfg.mc_samples }),
        (red.value - full.value).norm(),
        3.0 * sigma,
        Some(cfg.mc_samples),
    ));
    Ok(out)
}

fn oracle_checks(cfg: &RunConfig) -> Result<Vec<CheckReport>> {
    let mut out = Vec::new();
    let quad = Integrator::Quadrature { order: cfg.quad_order.max(40) };
    let basis = gram_matrix(DomainTag::BoundedDIII, 1, 2.0, monomial_basis(1, 4), &quad)?;
    out.push(CheckReport::exact(
        "gram <z,z>",
        json!({ "n": 1, "lambda": 2.0 }),
        (basis.gram[(1, 1)] - c(0.5, 0.0)).norm(),
        1e-12,
    ));
    let t = toeplitz_matrix(&SymbolSpec::raw(RawBuiltin::Radial, DomainTag::BoundedDIII), &basis, &quad)?;
    let (mass, noise) = t.off_diagonal_mass();
    out.push(CheckReport::exact(
        "toeplitz radial off-diagonal",
        json!({ "n": 1, "lambda": 2.0, "degree": 4 }),
        mass,
        3.0 * noise,
    ));
    let diag = (0..basis.len())
        .map(|k| (t.entries[(k, k)] - c((k as f64 + 1.0) / (k as f64 + 2.0), 0.0)).norm())
        .fold(0.0, f64::max);
    out.push(CheckReport::exact(
        "toeplitz radial diagonal",
        json!({ "n": 1, "lambda": 2.0, "degree": 4 }),
        diag,
        1e-10,
    ));

    let z = DomainPoint::new(DomainTag::BoundedDIII, ComplexSymMatrix::diagonal(&[c(0.3, 0.2)]))?;
    let r = reproduce_check(
        DomainTag::BoundedDIII,
        2.5,
        &Monomial::new(vec![3])?,
        &z,
        &Integrator::Quadrature { order: 80 },
    )?;
    out.push(CheckReport::exact(
        "reproduce z^3",
        json!({ "n": 1, "lambda": 2.5, "z": [0.3, 0.2], "order": 80 }),
        r.residual,
        1e-6,
    ));

    let mc = Integrator::MonteCarlo(cfg.mc());
    let b2 = gram_matrix(DomainTag::BoundedDIII, 2, 3.5, monomial_basis(2, 1), &mc)?;
    let one = toeplitz_matrix(&SymbolSpec::elliptic(ScalarProfile::Constant { value: 1.0 }), &b2, &mc)?;
    let dev = (&one.entries - nalgebra::DMatrix::<C64>::identity(b2.len(), b2.len())).norm();
    out.push(CheckReport::exact("toeplitz unital", json!({ "n": 2, "lambda": 3.5, "degree": 1 }), dev, 1e-8));

    let e1 = SymbolSpec::elliptic(ScalarProfile::ExpNeg);
    let e2 = SymbolSpec::elliptic(ScalarProfile::Power { p: -1.0 });
    let rep = commutator_check(&e1, &e2, 2, 3.5, 1, &mc)?;
    out.push(
        CheckReport::noisy(
            "elliptic commutator",
            json!({ "n": 2, "lambda": 3.5, "degree": 1, "mc_samples": cfg.mc_samples }),
            rep.value,
            rep.bound(),
            rep.samples,
        )
        .with_note(format!("noise {:.3e}, truncation {:.3e}", rep.noise, rep.truncation)),
    );
    Ok(out)
}

/// Runs a suite and returns the individual check reports.
pub fn run_suite(suite: Suite, cfg: &RunConfig) -> Result<Vec<CheckReport>> {
    let mut out = Vec::new();
    if matches!(suite, Suite::Geometry | Suite::All) {
        out.extend(geometry_checks(cfg)?);
    }
    if matches!(suite, Suite::Symbols | Suite::All) {
        out.extend(symbol_checks(cfg)?);
    }
    if matches!(suite, Suite::Spectral | Suite::All) {
        out.extend(spectral_checks(cfg)?);
    }
    if matches!(suite, Suite::Oracle | Suite::All) {
        out.extend(oracle_checks(cfg)?);
    }
    Ok(out)
}

pub fn cmd_verify(a: &VerifyArgs) -> Result<i32> {
    let suite: Suite = a.suite.parse()?;
    let cfg = RunConfig::from_args(&a.run)?;
    let checks = run_suite(suite, &cfg)?;
    let count = |v: Verdict| checks.iter().filter(|c| c.verdict == v).count();
    let (pass, fail, inconclusive) = (count(Verdict::Pass), count(Verdict::Fail), count(Verdict::Inconclusive));
    let params = json!({ "command": "verify", "suite": a.suite });
    let content = match cfg.output {
        OutputFormat::Json => {
            let mut doc = json!({ "version": VERSION, "config": cfg, "params": params });
            doc["checks"] = serde_json::to_value(&checks).expect("reports serialize");
            doc["summary"] = json!({ "pass": pass, "fail": fail, "inconclusive": inconclusive });
            serde_json::to_string_pretty(&doc).expect("document serializes") + "\n"
        }
        OutputFormat::Csv => {
            let mut s = csv_preamble(&cfg, &params) + "check,params,value,bound,verdict\n";
            for r in &checks {
                let verdict = serde_json::to_value(r.verdict).expect("verdict serializes");
                s += &format!(
                    "{},\"{}\",{:?},{:?},{}\n",
                    r.check,
                    r.params.to_string().replace('"', "\"\""),
                    r.value,
                    r.bound,
                    verdict.as_str().unwrap_or_default()
                );
            }
            s
        }
    };
    emit(cfg.out_path.as_ref(), &content)?;
    Ok(if pass == checks.len() { EXIT_OK } else { EXIT_VERIFY_FAILED })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0.5;1;2", 1).unwrap(), vec![vec![0.5], vec![1.0], vec![2.0]]);
        assert_eq!(parse_grid("1:2:3", 2).unwrap(), vec![vec![1.0, 1.0], vec![1.5, 1.5], vec![2.0, 2.0]]);
        assert_eq!(parse_grid("1,2", 2).unwrap(), vec![vec![1.0, 2.0]]);
        for bad in ["", "a", "1,2,3", "-1", "1:2", "1:2:0", "0"] {
            assert!(parse_grid(bad, 2).is_err(), "{bad}");
        }
    }

    #[test]
    fn alphas() {
        let s = parse_alphas("2,1;1,1", 2).unwrap();
        assert_eq!(s[0].as_slice(), &[2, 1]);
        assert!(parse_alphas("1,2", 2).is_err());
        assert!(parse_alphas("1", 2).is_err());
    }

    #[test]
    fn matrices() {
        let m = parse_matrix("[[0, [0.1, 0.2]], [[0.1, 0.2], 0.5]]").unwrap();
        assert_eq!(m.get(0, 1), c(0.1, 0.2));
        assert!(parse_matrix("[[0, 1], [0, 0]]").is_err());
        assert!(parse_matrix("[[0, 1]]").is_err());
        assert!(parse_matrix("nope").is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run_from(["cartan3", "verify", "nonsense"]), EXIT_INVALID);
        assert_eq!(run_from(["cartan3", "bogus"]), EXIT_INVALID);
        let out = std::env::temp_dir().join("cartan3_cli_moment.json");
        let o = out.to_str().unwrap();
        assert_eq!(
            run_from(["cartan3", "moment", "--action", "elliptic", "--point", "[[1,0],[0,1]]", "--out", o]),
            EXIT_INVALID
        );
        assert_eq!(
            run_from(["cartan3", "moment", "--action", "parabolic", "--point", "[[[0,1],0],[0,[0,1]]]", "--out", o]),
            EXIT_OK
        );
        assert_eq!(std::fs::read_to_string(&out).unwrap(), "[[-2.0,0.0],[0.0,-2.0]]\n");
        assert_eq!(
            run_from(["cartan3", "moment", "--action", "elliptic", "--point", "[[0,0],[0,0]]", "--out", o]),
            EXIT_OK
        );
        assert_eq!(std::fs::read_to_string(&out).unwrap(), "-4.0\n");
    }
}
