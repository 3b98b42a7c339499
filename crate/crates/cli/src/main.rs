use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use pframe::bounds::{
    bound_proposition1, bound_theorem2, bound_theorem5, gerzon_bound, lemma2_bound, mstar,
    mstar_oracle, p_threshold, per_row_certificate, pframe_bounds, welch_bound, Field,
};
use pframe::configs::{
    coherence, construct, format_rows, format_vectors, gram, read_vector_file, Configuration,
    GramMatrix,
};
use pframe::continuous::{
    energy_lower_bound_gegenbauer, etf_dev_square, expand, gegenbauer_monic, is_positive_definite,
    simplex_shift_square, PolyRational,
};
use pframe::energies::{angle_sum, config_energy, fejes_toth_bound, Potential, PotentialKind};
use pframe::gale::{gale_dual, verify_gale};
use pframe::linalg::{Matrix, DEFAULT_RANK_TOL};
use pframe::optimizer::{
    applicable_bound, geometric_schedule, minimize_energy, sweep_csv, sweep_p, OptimizerOptions,
};
use pframe::Error;

const SCHEMA: u32 = 1;

#[derive(Parser)]
#[command(
    name = "pframe",
    version,
    about = "p-frame energies, lower bounds and minimizers of unit-vector configurations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Cap on worker threads for parallel restarts (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Also write tabular output to this CSV file.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,

    /// Where to write the run manifest (default: next to the first output file).
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Energy of a configuration with every applicable lower bound.
    Energy(EnergyArgs),
    /// All closed-form bounds for (N, d, p).
    Certify(CertifyArgs),
    /// Gale dual of a configuration or Gram matrix.
    Gale(GaleArgs),
    /// Solve M(c, p, N).
    Mstar(MstarArgs),
    /// Multi-start numerical minimization.
    Minimize(MinimizeArgs),
    /// Minimize over a grid of exponents and compare with a construction.
    Sweep(SweepArgs),
    /// Gegenbauer expansion and positive-definiteness of a polynomial.
    PdCheck(PdCheckArgs),
    /// Fejes Toth angle sum of a configuration.
    Anglesum(AnglesumArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Energy(_) => "energy",
            Command::Certify(_) => "certify",
            Command::Gale(_) => "gale",
            Command::Mstar(_) => "mstar",
            Command::Minimize(_) => "minimize",
            Command::Sweep(_) => "sweep",
            Command::PdCheck(_) => "pd-check",
            Command::Anglesum(_) => "anglesum",
        }
    }
}

#[derive(Args, Serialize)]
#[group(required = true, multiple = false)]
struct Input {
    /// Constructor: onb:DxN, simplex:D, etf:D,N, repeat:(SPEC)xN, file:PATH.
    #[arg(long)]
    construct: Option<String>,
    /// Vector file, one unit vector per line.
    #[arg(long)]
    file: Option<PathBuf>,
}

impl Input {
    fn load(&self) -> Result<Configuration, Error> {
        match (&self.construct, &self.file) {
            (Some(spec), _) => construct(spec),
            (None, Some(path)) => read_vector_file(path),
            (None, None) => Err(Error::InvalidArgument("no input given".into())),
        }
    }
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Family {
    Pframe,
    SimplexShift,
    EtfDev,
}

#[derive(Args, Serialize)]
struct PotentialArgs {
    #[arg(long, value_enum, default_value_t = Family::Pframe)]
    potential: Family,
    /// Exponent p > 0.
    #[arg(long)]
    p: f64,
    /// alpha^2 for etf-dev (default 1/(d+2)).
    #[arg(long)]
    alpha_sq: Option<f64>,
    /// Smoothing width.
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
}

impl PotentialArgs {
    fn kind(&self, d: usize) -> PotentialKind {
        family_kind(self.potential, d, self.alpha_sq)
    }

    fn build(&self, d: usize) -> Result<Potential, Error> {
        Potential::new(self.kind(d), self.p, self.epsilon)
    }
}

fn family_kind(family: Family, d: usize, alpha_sq: Option<f64>) -> PotentialKind {
    match family {
        Family::Pframe => PotentialKind::Pframe,
        Family::SimplexShift => PotentialKind::SimplexShift { d },
        Family::EtfDev => PotentialKind::EtfDev {
            alpha_sq: alpha_sq.unwrap_or(1.0 / (d as f64 + 2.0)),
        },
    }
}

#[derive(Args, Serialize)]
struct EnergyArgs {
    #[command(flatten)]
    input: Input,
    #[command(flatten)]
    potential: PotentialArgs,
}

#[derive(Args, Serialize)]
struct CertifyArgs {
    #[arg(long = "n")]
    n: usize,
    #[arg(long = "d")]
    d: usize,
    #[arg(long)]
    p: f64,
}

#[derive(Args, Serialize)]
struct GaleArgs {
    #[command(flatten)]
    input: GaleInput,
    /// Rank of the matrix (default: ambient dimension of the configuration).
    #[arg(long = "d")]
    d: Option<usize>,
    /// Relative eigenvalue threshold for the numerical rank.
    #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
    rank_tol: f64,
    /// Exponents for the per-row certificate.
    #[arg(long, value_delimiter = ',')]
    p: Vec<f64>,
    /// Write the dual vectors y_i here (vector file format).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the weights t_i here (one per line).
    #[arg(long)]
    weights: Option<PathBuf>,
}

#[derive(Args, Serialize)]
#[group(required = true, multiple = false)]
struct GaleInput {
    #[arg(long)]
    construct: Option<String>,
    #[arg(long)]
    file: Option<PathBuf>,
    /// Symmetric unit-diagonal matrix, one row per line.
    #[arg(long)]
    gram: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct MstarArgs {
    /// Cap c > 1/N; accepts fractions such as 1/3.
    #[arg(long, value_parser = parse_real)]
    c: f64,
    #[arg(long)]
    p: f64,
    #[arg(long = "n")]
    n: usize,
    /// Also run the numerical oracle (N <= 8).
    #[arg(long)]
    oracle: bool,
}

#[derive(Args, Serialize)]
struct OptArgs {
    #[arg(long, default_value_t = 64)]
    restarts: usize,
    #[arg(long, default_value_t = 5000)]
    max_iters: usize,
    #[arg(long, default_value_t = 0.1)]
    step0: f64,
    #[arg(long, default_value_t = 0.5)]
    armijo_beta: f64,
    #[arg(long, default_value_t = 1e-9)]
    grad_tol: f64,
    #[arg(long, default_value_t = 1e-2)]
    eps_start: f64,
    #[arg(long, default_value_t = 1e-8)]
    eps_end: f64,
    #[arg(long, default_value_t = 10.0)]
    eps_factor: f64,
}

impl OptArgs {
    fn options(&self, seed: u64, threads: usize) -> Result<OptimizerOptions, Error> {
        if !(self.eps_factor > 1.0) {
            return Err(Error::InvalidArgument("--eps-factor must exceed 1".into()));
        }
        let opts = OptimizerOptions {
            restarts: self.restarts,
            max_iters: self.max_iters,
            step0: self.step0,
            armijo_beta: self.armijo_beta,
            grad_tol: self.grad_tol,
            epsilon_schedule: geometric_schedule(self.eps_start, self.eps_end, self.eps_factor),
            seed,
            threads,
        };
        opts.validate()?;
        Ok(opts)
    }
}

#[derive(Args, Serialize)]
struct MinimizeArgs {
    #[arg(long = "d")]
    d: usize,
    #[arg(long = "n")]
    n: usize,
    #[command(flatten)]
    potential: PotentialArgs,
    #[command(flatten)]
    opt: OptArgs,
    /// Write the best configuration here (vector file format).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct SweepArgs {
    #[arg(long = "d")]
    d: usize,
    #[arg(long = "n")]
    n: usize,
    #[arg(long, value_enum, default_value_t = Family::Pframe)]
    potential: Family,
    #[arg(long)]
    alpha_sq: Option<f64>,
    /// Exponents as START:STEP:END or a comma list.
    #[arg(long)]
    p_grid: String,
    /// Construction to compare against (default onb:DxN).
    #[arg(long)]
    construct: Option<String>,
    #[command(flatten)]
    opt: OptArgs,
}

#[derive(Args, Serialize)]
struct PdCheckArgs {
    #[arg(long = "d")]
    d: usize,
    /// Coefficients from the constant term up, e.g. "-1/3,0,1".
    #[arg(long, conflicts_with = "kernel", required_unless_present = "kernel")]
    coeffs: Option<String>,
    /// simplex-shift-sq, etf-dev-sq or gegenbauer:K.
    #[arg(long)]
    kernel: Option<String>,
}

#[derive(Args, Serialize)]
struct AnglesumArgs {
    #[command(flatten)]
    input: Input,
}

fn parse_real(s: &str) -> Result<f64, String> {
    let v = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|e| format!("{e}"))?;
            let b: f64 = b.trim().parse().map_err(|e| format!("{e}"))?;
            a / b
        }
        None => s.trim().parse().map_err(|e| format!("{e}"))?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{s:?} is not a finite real"))
    }
}

/// START:STEP:END (inclusive, values rounded to 12 decimals) or a comma list.
fn parse_grid(s: &str) -> Result<Vec<f64>, Error> {
    let bad = |m: String| Error::Parse {
        line: 0,
        message: m,
    };
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 3 {
        let v: Vec<f64> = parts
            .iter()
            .map(|t| parse_real(t))
            .collect::<Result<_, _>>()
            .map_err(bad)?;
        let (start, step, end) = (v[0], v[1], v[2]);
        if !(step > 0.0) || end < start {
            return Err(bad(format!("bad grid {s:?}")));
        }
        let count = ((end - start) / step + 1e-9).floor() as usize;
        return Ok((0..=count)
            .map(|i| ((start + step * i as f64) * 1e12).round() / 1e12)
            .collect());
    }
    s.split(',').map(|t| parse_real(t).map_err(bad)).collect()
}

struct Run {
    outputs: Vec<PathBuf>,
}

impl Run {
    fn write(&mut self, path: &Path, contents: &str) -> Result<(), Error> {
        std::fs::write(path, contents)?;
        self.outputs.push(path.to_path_buf());
        Ok(())
    }
}

fn bound_rows(bounds: impl IntoIterator<Item = (String, f64)>, value: f64) -> Vec<Value> {
    bounds
        .into_iter()
        .map(|(name, b)| json!({ "name": name, "value": b, "margin": value - b }))
        .collect()
}

fn potential_bounds(d: usize, n: usize, f: &Potential) -> Vec<(String, f64)> {
    match f.kind {
        PotentialKind::Pframe => pframe_bounds(n, d, f.p)
            .into_iter()
            .map(|b| (b.name.to_string(), b.value))
            .collect(),
        _ => vec![("continuous".to_string(), applicable_bound(d, n, f))],
    }
}

fn cmd_energy(a: &EnergyArgs) -> Result<Value, Error> {
    let x = a.input.load()?;
    let f = a.potential.build(x.d())?;
    let r = config_energy(&x, &f);
    Ok(json!({
        "d": x.d(),
        "n": x.n(),
        "potential": f,
        "value": r.value,
        "pair_count": r.pair_count,
        "max_term": r.max_term,
        "coherence": coherence(&x),
        "bounds": bound_rows(potential_bounds(x.d(), x.n(), &f), r.value),
    }))
}

fn cmd_certify(a: &CertifyArgs) -> Result<Value, Error> {
    let (n, d, p) = (a.n, a.d, a.p);
    if n == 0 || d == 0 {
        return Err(Error::InvalidArgument("N and d must be at least 1".into()));
    }
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::BadExponent {
            p,
            range: "(0, inf)",
        });
    }
    let mut out = serde_json::Map::new();
    out.insert("n".into(), json!(n));
    out.insert("d".into(), json!(d));
    out.insert("p".into(), json!(p));
    if p < 2.0 {
        out.insert("bound_theorem2".into(), json!(bound_theorem2(n, d, p)?));
    } else {
        out.insert(
            "bound_proposition1".into(),
            json!(bound_proposition1(n, d, p)?),
        );
    }
    if p >= 1.0 && n > d {
        out.insert("lemma2_bound".into(), json!(lemma2_bound(n, d, p)?));
    }
    out.insert("welch_bound".into(), json!(welch_bound(n, d)));
    out.insert(
        "gerzon_bound".into(),
        json!({ "real": gerzon_bound(d, Field::Real), "complex": gerzon_bound(d, Field::Complex) }),
    );
    if n > d && n - d < d {
        out.insert(
            "p_threshold".into(),
            json!({ "m": n - d, "value": p_threshold(n - d)? }),
        );
    }
    if d == 2 && p <= 1.3 {
        out.insert("bound_theorem5".into(), json!(bound_theorem5(n, p)?));
    }
    Ok(Value::Object(out))
}

fn read_gram(path: &Path) -> Result<GramMatrix, Error> {
    let text = std::fs::read_to_string(path)?;
    let rows: Vec<Vec<f64>> = pframe::configs::parse_rows(&text)?
        .into_iter()
        .map(|(_, r)| r)
        .collect();
    GramMatrix::new(Matrix::from_rows(&rows)?)
}

fn cmd_gale(a: &GaleArgs, run: &mut Run) -> Result<Value, Error> {
    let (g_mat, default_d) = match (&a.input.construct, &a.input.file, &a.input.gram) {
        (Some(spec), _, _) => {
            let x = construct(spec)?;
            (gram(&x), Some(x.d()))
        }
        (_, Some(path), _) => {
            let x = read_vector_file(path)?;
            (gram(&x), Some(x.d()))
        }
        (_, _, Some(path)) => (read_gram(path)?, None),
        _ => return Err(Error::InvalidArgument("no input given".into())),
    };
    let d =
        a.d.or(default_d)
            .ok_or_else(|| Error::InvalidArgument("--d is required with --gram".into()))?;
    let g = gale_dual(&g_mat, d, a.rank_tol)?;
    let report = verify_gale(&g_mat, &g, 1e-8);
    let vectors = g.frame_vectors();
    if let Some(path) = &a.out {
        let header = format!("Gale dual: N={} vectors in dimension {}", g.n(), g.dim());
        run.write(
            path,
            &format_rows(&header, vectors.iter().map(Vec::as_slice)),
        )?;
    }
    if let Some(path) = &a.weights {
        let rows: Vec<[f64; 1]> = g.weights.iter().map(|t| [*t]).collect();
        run.write(
            path,
            &format_rows("weights t_i", rows.iter().map(|r| r.as_slice())),
        )?;
    }
    let mut certificates = Vec::new();
    for &p in &a.p {
        let r = per_row_certificate(&g_mat, &g, p)?;
        let min = r.iter().cloned().fold(f64::INFINITY, f64::min);
        certificates.push(json!({ "p": p, "residuals": r, "min_residual": min }));
    }
    Ok(json!({
        "n": g.n(),
        "rank": d,
        "dim": g.dim(),
        "frame_constant": g.frame_constant,
        "weights": g.weights,
        "vectors": vectors,
        "report": report,
        "certificates": certificates,
    }))
}

fn cmd_mstar(a: &MstarArgs) -> Result<Value, Error> {
    let s = mstar(a.c, a.p, a.n)?;
    let mut v = serde_json::to_value(&s).map_err(|e| Error::Io(e.to_string()))?;
    if a.oracle {
        let o = mstar_oracle(a.c, a.p, a.n)?;
        v["oracle"] = json!(o);
        v["oracle_diff"] = json!(s.value - o);
    }
    Ok(v)
}

fn cmd_minimize(a: &MinimizeArgs, cli: &Cli, run: &mut Run) -> Result<Value, Error> {
    let f = a.potential.build(a.d)?;
    let opts = a.opt.options(cli.seed, cli.threads)?;
    let r = minimize_energy(a.d, a.n, &f, &opts)?;
    if let Some(path) = &a.out {
        run.write(path, &format_vectors(&r.config))?;
    }
    if let Some(path) = &cli.csv {
        let mut csv = String::from("epsilon,iter,energy,grad_norm,step\n");
        for t in &r.trace {
            csv.push_str(&format!(
                "{:.16e},{},{:.16e},{:.16e},{:.16e}\n",
                t.epsilon, t.iter, t.energy, t.grad_norm, t.step
            ));
        }
        run.write(path, &csv)?;
    }
    Ok(json!({
        "d": a.d,
        "n": a.n,
        "potential": f,
        "energy": r.energy,
        "converged": r.converged,
        "best_restart": r.best_restart,
        "restarts": opts.restarts,
        "restarts_hitting_best": r.restarts_hitting_best,
        "restart_energies": r.restart_energies,
        "trace_length": r.trace.len(),
        "config": r.config,
        "bounds": bound_rows(potential_bounds(a.d, a.n, &f), r.energy),
    }))
}

fn cmd_sweep(a: &SweepArgs, cli: &Cli, run: &mut Run) -> Result<Value, Error> {
    let grid = parse_grid(&a.p_grid)?;
    let spec = a
        .construct
        .clone()
        .unwrap_or_else(|| format!("onb:{}x{}", a.d, a.n));
    let construction = construct(&spec)?;
    let opts = a.opt.options(cli.seed, cli.threads)?;
    let kind = family_kind(a.potential, a.d, a.alpha_sq);
    let s = sweep_p(a.d, a.n, kind, &grid, &construction, &opts)?;
    if let Some(path) = &cli.csv {
        run.write(path, &sweep_csv(&s.rows))?;
    }
    Ok(json!({
        "d": a.d,
        "n": a.n,
        "family": a.potential,
        "construction": spec,
        "rows": s.rows,
        "threshold": s.threshold,
    }))
}

fn cmd_pd_check(a: &PdCheckArgs) -> Result<Value, Error> {
    let d = a.d;
    let poly = match (&a.coeffs, a.kernel.as_deref()) {
        (Some(c), _) => PolyRational::parse(c)?,
        (None, Some("simplex-shift-sq")) => simplex_shift_square(d),
        (None, Some("etf-dev-sq")) => etf_dev_square(d),
        (None, Some(k)) if k.starts_with("gegenbauer:") => {
            let deg = k["gegenbauer:".len()..]
                .parse::<usize>()
                .map_err(|e| Error::InvalidArgument(format!("bad degree in {k:?}: {e}")))?;
            gegenbauer_monic(deg, d)?
        }
        (None, Some(k)) => return Err(Error::InvalidArgument(format!("unknown kernel {k:?}"))),
        (None, None) => return Err(Error::InvalidArgument("give --coeffs or --kernel".into())),
    };
    let coeffs = expand(&poly, d)?;
    let bound = match energy_lower_bound_gegenbauer(&poly, d) {
        Ok(b) => Some(b),
        Err(Error::NotCertifiable) => None,
        Err(e) => return Err(e),
    };
    Ok(json!({
        "d": d,
        "polynomial": poly.to_string(),
        "coefficients": coeffs.iter().map(ToString::to_string).collect::<Vec<_>>(),
        "positive_definite": is_positive_definite(&poly, d)?,
        "energy_lower_bound": bound.map(|b| b.to_string()),
    }))
}

fn cmd_anglesum(a: &AnglesumArgs) -> Result<Value, Error> {
    let x = a.input.load()?;
    let s = angle_sum(&x);
    let b = fejes_toth_bound(x.n());
    Ok(json!({
        "d": x.d(),
        "n": x.n(),
        "angle_sum": s,
        "fejes_toth_bound": b,
        "bound_applies": x.d() == 2,
        "margin": b - s,
    }))
}

#[derive(Serialize)]
struct RunManifest {
    command: &'static str,
    parameters: Value,
    seed: u64,
    threads: usize,
    artifact_version: &'static str,
    outputs: Vec<String>,
    timestamp_unix: u64,
}

fn exit_code(e: &Error) -> u8 {
    if e.is_numerical() {
        return 4;
    }
    match e {
        Error::NonUnitVector { .. }
        | Error::NotSymmetric { .. }
        | Error::NotSquare { .. }
        | Error::NotPositiveDefinite { .. }
        | Error::DimensionMismatch(_)
        | Error::NonSmoothPoint { .. }
        | Error::EmptyKernel
        | Error::Degenerate => 3,
        _ => 2,
    }
}

fn execute(cli: &Cli, run: &mut Run) -> Result<Value, Error> {
    match &cli.command {
        Command::Energy(a) => cmd_energy(a),
        Command::Certify(a) => cmd_certify(a),
        Command::Gale(a) => cmd_gale(a, run),
        Command::Mstar(a) => cmd_mstar(a),
        Command::Minimize(a) => cmd_minimize(a, cli, run),
        Command::Sweep(a) => cmd_sweep(a, cli, run),
        Command::PdCheck(a) => cmd_pd_check(a),
        Command::Anglesum(a) => cmd_anglesum(a),
    }
}

fn write_manifest(cli: &Cli, run: &Run) -> Result<(), Error> {
    let path = match (&cli.manifest, run.outputs.first()) {
        (Some(p), _) => p.clone(),
        (None, Some(first)) => {
            let mut name = first.as_os_str().to_owned();
            name.push(".manifest.json");
            PathBuf::from(name)
        }
        (None, None) => return Ok(()),
    };
    let manifest = RunManifest {
        command: cli.command.name(),
        parameters: serde_json::to_value(&cli.command).map_err(|e| Error::Io(e.to_string()))?,
        seed: cli.seed,
        threads: cli.threads,
        artifact_version: env!("CARGO_PKG_VERSION"),
        outputs: run
            .outputs
            .iter()
            .map(|p| p.display().to_string())
            .collect(),
        timestamp_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Io(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut run = Run {
        outputs: Vec::new(),
    };
    let result = execute(&cli, &mut run).and_then(|body| {
        write_manifest(&cli, &run)?;
        Ok(body)
    });
    match result {
        Ok(body) => {
            let mut out = serde_json::Map::new();
            out.insert("schema".into(), json!(SCHEMA));
            out.insert("command".into(), json!(cli.command.name()));
            if let Value::Object(fields) = body {
                out.extend(fields);
            }
            let text = serde_json::to_string_pretty(&Value::Object(out)).expect("serializable");
            // a closed stdout (e.g. piped into head) is not an error of the run
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
