//! `dsqft`: decomposition tools, table emitters, the field sampler and the
//! acceptance-suite runner.
//!
//! Exit codes: 0 on success, 1 for usage or input errors, 2 for
//! mathematical-domain errors and failed checks.

mod output;

use std::f64::consts::TAU;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dsqft::checks::{random_upper_bumps, run_suite, CheckConfig, Suite};
use dsqft::ds_geometry::dependence_interval;
use dsqft::euclid_field::{
    interaction_ensemble, reflection_positivity_gram, reweighted_expectation, SpherePoint,
    TestFunction, WickPolynomial, ZonalBump,
};
use dsqft::one_particle::{
    build_epsilon, dispersion, flat_dispersion, sharp_time_kernel, ModelParams,
};
use dsqft::so12_group::{
    boost1, boost2, cartan_decompose, hannabuss_decompose, horo, iwasawa_decompose, rotate0,
    CartanFactors, GroupElement, HannabussFactors, IwasawaFactors,
};
use dsqft::special_functions::{legendre_coeff, legendre_prime_coeff, LegendreSeries};
use dsqft::uir_circle::{act, CircleFunction, Parity, SeriesLabel};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use output::{Format, Sink, Table};

#[derive(Parser, Debug)]
#[command(
    name = "dsqft",
    version,
    about = "Free and weakly interacting scalar fields on two-dimensional de Sitter space"
)]
struct Cli {
    /// Mass.
    #[arg(long, global = true, default_value_t = 1.0)]
    mu: f64,
    /// de Sitter radius.
    #[arg(long, global = true, default_value_t = 1.0)]
    r: f64,
    /// Seed of every random choice.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Output format; tables default to csv, records to json.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write output to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Iwasawa, Cartan and Hannabuss factors of a group element.
    Decompose(DecomposeArgs),
    /// Dependence intervals over a (psi, tau) grid.
    Geometry(GeometryArgs),
    /// Legendre coefficients p(k), p1(k) or values of P_s(-cos psi).
    Specfun(SpecfunArgs),
    /// A group element applied to a random band-limited function.
    Rep(RepArgs),
    /// Mode energies next to their flat-space values.
    Dispersion(DispersionArgs),
    /// Sharp-time covariance kernel on the right half circle.
    Covariance(CovarianceArgs),
    /// Reweighted samples of the interacting measure on the sphere.
    Sample(SampleArgs),
    /// Reflection-positivity Gram check on random upper-hemisphere bumps.
    RpCheck(RpCheckArgs),
    /// Runs an acceptance suite.
    Check(CheckArgs),
}

#[derive(Args, Debug)]
struct DecomposeArgs {
    /// Nine comma-separated matrix entries, row-major.
    #[arg(long, conflicts_with = "file")]
    matrix: Option<String>,
    /// File holding `{"matrix": [...]}` records, one per line, or nine numbers.
    #[arg(long)]
    file: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GeometryArgs {
    /// Grid points per axis.
    #[arg(long, default_value_t = 20)]
    grid: usize,
    /// Largest |psi|, below pi/2.
    #[arg(long, default_value_t = 1.5)]
    psi_max: f64,
    /// Largest |tau|.
    #[arg(long, default_value_t = 3.0)]
    tau_max: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
enum SpecTable {
    Coeff,
    Prime,
    Legendre,
}

#[derive(Args, Debug)]
struct SpecfunArgs {
    #[arg(long, value_enum, default_value_t = SpecTable::Coeff)]
    table: SpecTable,
    /// Largest |k| of the coefficient tables and the series cutoff.
    #[arg(long, default_value_t = 64)]
    kmax: usize,
    /// Number of angles of the Legendre table.
    #[arg(long, default_value_t = 64)]
    grid: usize,
}

#[derive(Args, Debug)]
struct RepArgs {
    /// Group element `kind:param` with kind in rotate0, boost1, boost2, horo.
    #[arg(long, default_value = "boost1:0.5")]
    element: String,
    /// Grid size on the circle.
    #[arg(long, default_value_t = 256)]
    grid: usize,
    /// Band limit of the random function.
    #[arg(long, default_value_t = 4)]
    modes: usize,
}

#[derive(Args, Debug)]
struct DispersionArgs {
    #[arg(long, default_value_t = 64)]
    kmax: usize,
}

#[derive(Args, Debug)]
struct CovarianceArgs {
    /// Euclidean angle between the two circles.
    #[arg(long, default_value_t = 0.0)]
    theta: f64,
    /// Number of nodes on the half circle.
    #[arg(long, default_value_t = 64)]
    grid: usize,
}

#[derive(Args, Debug)]
struct SampleArgs {
    /// Harmonic cutoff of the field and the interaction.
    #[arg(long = "L", visible_alias = "modes", default_value_t = 8)]
    l: usize,
    #[arg(long, default_value_t = 10_000)]
    n_samples: usize,
    /// Samples per emitted batch; defaults to all samples.
    #[arg(long)]
    batch: Option<usize>,
    /// Coefficients of :phi^0:, :phi^2:, :phi^4:, ...
    #[arg(long, default_value = "0,0,0.1")]
    poly: String,
}

#[derive(Args, Debug)]
struct RpCheckArgs {
    /// Harmonic cutoff of the Gram entries.
    #[arg(long = "L", visible_alias = "modes", default_value_t = 200)]
    l: usize,
    /// Bumps per basis.
    #[arg(long, default_value_t = 20)]
    bumps: usize,
    /// Number of random bases.
    #[arg(long, default_value_t = 1)]
    bases: usize,
}

#[derive(Args, Debug)]
struct CheckArgs {
    /// One of group, geometry, specfun, rep, oneparticle, euclid, all.
    #[arg(default_value = "all")]
    suite: String,
    /// Emit the report as newline-delimited JSON.
    #[arg(long)]
    json: bool,
}

/// Validated run parameters shared by the subcommands.
#[derive(Clone, Debug)]
struct RunConfig {
    params: ModelParams,
    seed: u64,
    format: Option<Format>,
    out: Option<PathBuf>,
}

impl RunConfig {
    fn from_cli(cli: &Cli) -> Result<Self, Failure> {
        if !(cli.mu > 0.0 && cli.r > 0.0) || !cli.mu.is_finite() || !cli.r.is_finite() {
            return Err(Failure::Input(format!(
                "--mu and --r must be positive and finite, got {} and {}",
                cli.mu, cli.r
            )));
        }
        Ok(Self {
            params: ModelParams::new(cli.mu, cli.r)?,
            seed: cli.seed,
            format: cli.format,
            out: cli.out.clone(),
        })
    }

    fn format_or(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Domain(String),
    ChecksFailed(usize),
}

impl From<dsqft::Error> for Failure {
    fn from(e: dsqft::Error) -> Self {
        if e.is_input_error() {
            Failure::Input(e.to_string())
        } else {
            Failure::Domain(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(format!("i/o error: {e}"))
    }
}

fn require_min(name: &str, value: usize, min: usize) -> Result<(), Failure> {
    if value < min {
        return Err(Failure::Input(format!(
            "{name} must be at least {min}, got {value}"
        )));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::ChecksFailed(n)) => {
            eprintln!("{n} criteria failed");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = RunConfig::from_cli(cli)?;
    let mut sink = Sink::open(cfg.out.as_deref())?;
    let result = match &cli.command {
        Command::Decompose(a) => decompose(&cfg, a, &mut sink),
        Command::Geometry(a) => geometry(&cfg, a, &mut sink),
        Command::Specfun(a) => specfun(&cfg, a, &mut sink),
        Command::Rep(a) => rep(&cfg, a, &mut sink),
        Command::Dispersion(a) => dispersion_table(&cfg, a, &mut sink),
        Command::Covariance(a) => covariance_table(&cfg, a, &mut sink),
        Command::Sample(a) => sample(&cfg, a, &mut sink),
        Command::RpCheck(a) => rp_check(&cfg, a, &mut sink),
        Command::Check(a) => check(&cfg, a, &mut sink),
    };
    sink.finish()?;
    result
}

#[derive(Serialize)]
struct Factored<T> {
    #[serde(flatten)]
    factors: T,
    recompose_error: f64,
}

#[derive(Serialize)]
struct DecomposeReport {
    matrix: [f64; 9],
    iwasawa: Factored<IwasawaFactors>,
    cartan: Factored<CartanFactors>,
    hannabuss: Option<Factored<HannabussFactors>>,
}

fn parse_numbers(text: &str) -> Result<Vec<f64>, Failure> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Failure::Input(format!("cannot parse {t:?} as a number")))
        })
        .collect()
}

fn read_elements(args: &DecomposeArgs) -> Result<Vec<GroupElement>, Failure> {
    let to_element = |v: &[f64]| -> Result<GroupElement, Failure> {
        GroupElement::from_row_slice(v).map_err(|e| Failure::Input(e.to_string()))
    };
    match (&args.matrix, &args.file) {
        (Some(m), None) => Ok(vec![to_element(&parse_numbers(m)?)?]),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)?;
            if text.trim_start().starts_with('{') {
                text.lines()
                    .filter(|l| !l.trim().is_empty())
                    .map(|l| {
                        serde_json::from_str::<GroupElement>(l)
                            .map_err(|e| Failure::Input(format!("bad matrix record: {e}")))
                    })
                    .collect()
            } else {
                Ok(vec![to_element(&parse_numbers(&text)?)?])
            }
        }
        _ => Err(Failure::Input(
            "pass exactly one of --matrix or --file".into(),
        )),
    }
}

fn decompose(cfg: &RunConfig, args: &DecomposeArgs, sink: &mut Sink) -> Result<(), Failure> {
    let format = cfg.format_or(Format::Json);
    let mut exceptional = None;
    let mut table = Table::new(&["form", "name", "value"]);
    for g in read_elements(args)? {
        if !g.is_proper_orthochronous() {
            return Err(Failure::Input(
                "matrix is in O(1,2) but not in SO0(1,2)".into(),
            ));
        }
        let iw = iwasawa_decompose(&g)?;
        let ca = cartan_decompose(&g)?;
        let hb = match hannabuss_decompose(&g) {
            Ok(h) => Some(Factored {
                factors: h,
                recompose_error: h.recompose().distance(&g),
            }),
            Err(e @ dsqft::Error::ExceptionalSet(_)) => {
                exceptional = Some(e.to_string());
                None
            }
            Err(e) => return Err(e.into()),
        };
        let report = DecomposeReport {
            matrix: g.to_row_array(),
            iwasawa: Factored {
                factors: iw,
                recompose_error: iw.recompose().distance(&g),
            },
            cartan: Factored {
                factors: ca,
                recompose_error: ca.recompose().distance(&g),
            },
            hannabuss: hb,
        };
        match format {
            Format::Json => sink.record(&report)?,
            Format::Csv => {
                let r = &report;
                let mut add = |form: &str, name: &str, v: f64| {
                    table.push(vec![form.into(), name.into(), v.into()]);
                };
                add("iwasawa", "alpha", r.iwasawa.factors.alpha);
                add("iwasawa", "k", r.iwasawa.factors.k as f64);
                add("iwasawa", "t", r.iwasawa.factors.t);
                add("iwasawa", "q", r.iwasawa.factors.q);
                add("iwasawa", "recompose_error", r.iwasawa.recompose_error);
                add("cartan", "alpha", r.cartan.factors.alpha);
                add("cartan", "t", r.cartan.factors.t);
                add("cartan", "alpha_prime", r.cartan.factors.alpha_prime);
                add("cartan", "recompose_error", r.cartan.recompose_error);
                if let Some(h) = &r.hannabuss {
                    add("hannabuss", "s", h.factors.s);
                    add("hannabuss", "k", h.factors.k as f64);
                    add("hannabuss", "t", h.factors.t);
                    add("hannabuss", "q", h.factors.q);
                    add("hannabuss", "recompose_error", h.recompose_error);
                }
            }
        }
    }
    if format == Format::Csv {
        sink.table(&table, format)?;
    }
    match exceptional {
        Some(msg) => Err(Failure::Domain(msg)),
        None => Ok(()),
    }
}

fn geometry(cfg: &RunConfig, args: &GeometryArgs, sink: &mut Sink) -> Result<(), Failure> {
    require_min("--grid", args.grid, 2)?;
    if !(args.psi_max > 0.0 && args.psi_max < std::f64::consts::FRAC_PI_2) {
        return Err(Failure::Input("--psi-max must lie in (0, pi/2)".into()));
    }
    let n = args.grid;
    let mut table = Table::new(&["psi", "tau", "center", "half_width"]);
    for i in 0..n {
        let psi = -args.psi_max + 2.0 * args.psi_max * i as f64 / (n - 1) as f64;
        for j in 0..n {
            let tau = -args.tau_max + 2.0 * args.tau_max * j as f64 / (n - 1) as f64;
            let iv = dependence_interval(psi, tau, cfg.params.r)?;
            table.push(vec![
                psi.into(),
                tau.into(),
                iv.center.into(),
                iv.half_width.into(),
            ]);
        }
    }
    sink.table(&table, cfg.format_or(Format::Csv))?;
    Ok(())
}

fn specfun(cfg: &RunConfig, args: &SpecfunArgs, sink: &mut Sink) -> Result<(), Failure> {
    let degree = cfg.params.degree();
    let km = args.kmax as i64;
    let table = match args.table {
        SpecTable::Coeff | SpecTable::Prime => {
            let mut t = Table::new(&["k", "re", "im"]);
            for k in -km..=km {
                let v = if args.table == SpecTable::Coeff {
                    legendre_coeff(&degree, k)?
                } else {
                    legendre_prime_coeff(&degree, k)?
                };
                t.push(vec![k.into(), v.re.into(), v.im.into()]);
            }
            t
        }
        SpecTable::Legendre => {
            require_min("--grid", args.grid, 1)?;
            require_min("--kmax", args.kmax, 16)?;
            let series = LegendreSeries::new(degree, args.kmax)?;
            let mut t = Table::new(&["psi", "re", "im"]);
            for j in 0..args.grid {
                let psi = TAU * (j as f64 + 0.5) / args.grid as f64;
                let v = series.eval(psi)?;
                t.push(vec![psi.into(), v.re.into(), v.im.into()]);
            }
            t
        }
    };
    sink.table(&table, cfg.format_or(Format::Csv))?;
    Ok(())
}

fn parse_element(spec: &str) -> Result<GroupElement, Failure> {
    let (kind, value) = spec
        .split_once(':')
        .ok_or_else(|| Failure::Input(format!("element {spec:?} is not of the form kind:param")))?;
    let x: f64 = value
        .trim()
        .parse()
        .map_err(|_| Failure::Input(format!("cannot parse {value:?} as a number")))?;
    Ok(match kind.trim() {
        "rotate0" => rotate0(x)?,
        "boost1" => boost1(x)?,
        "boost2" => boost2(x)?,
        "horo" => horo(x)?,
        other => {
            return Err(Failure::Input(format!(
                "unknown element kind {other:?}; expected rotate0, boost1, boost2 or horo"
            )))
        }
    })
}

fn rep(cfg: &RunConfig, args: &RepArgs, sink: &mut Sink) -> Result<(), Failure> {
    require_min("--grid", args.grid, 2 * args.modes + 2)?;
    let g = parse_element(&args.element)?;
    let label = SeriesLabel::new(cfg.params.nu, Parity::Plus)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let km = args.modes as i64;
    let modes: Vec<(i64, C64)> = (-km..=km)
        .map(|k| {
            (
                k,
                C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            )
        })
        .collect();
    let h = CircleFunction::from_modes(args.grid, &modes)?;
    let gh = act(&label, &g, &h)?;
    let mut table = Table::new(&["alpha", "re_before", "im_before", "re_after", "im_after"]);
    for (j, (a, b)) in h.values().iter().zip(gh.values()).enumerate() {
        let alpha = CircleFunction::grid_angle(j, args.grid);
        table.push(vec![
            alpha.into(),
            a.re.into(),
            a.im.into(),
            b.re.into(),
            b.im.into(),
        ]);
    }
    sink.table(&table, cfg.format_or(Format::Csv))?;
    Ok(())
}

fn dispersion_table(
    cfg: &RunConfig,
    args: &DispersionArgs,
    sink: &mut Sink,
) -> Result<(), Failure> {
    let p = &cfg.params;
    let mut table = Table::new(&["k", "omega", "flat_omega", "ratio"]);
    for k in 0..=args.kmax as i64 {
        let w = dispersion(p, k)?;
        let f = flat_dispersion(p, k);
        table.push(vec![k.into(), w.into(), f.into(), (w / f).into()]);
    }
    sink.table(&table, cfg.format_or(Format::Csv))?;
    Ok(())
}

fn covariance_table(
    cfg: &RunConfig,
    args: &CovarianceArgs,
    sink: &mut Sink,
) -> Result<(), Failure> {
    require_min("--grid", args.grid, 16)?;
    let eps = build_epsilon(&cfg.params, args.grid)?;
    let k = sharp_time_kernel(&eps, args.theta)?;
    let mut table = Table::new(&["psi", "psi_prime", "kernel"]);
    for i in 0..eps.m {
        for j in 0..eps.m {
            table.push(vec![eps.psi[i].into(), eps.psi[j].into(), k[(i, j)].into()]);
        }
    }
    sink.table(&table, cfg.format_or(Format::Csv))?;
    Ok(())
}

fn parse_poly(text: &str) -> Result<WickPolynomial, Failure> {
    let even = parse_numbers(text)?;
    if even.is_empty() {
        return Err(Failure::Input(
            "--poly needs at least one coefficient".into(),
        ));
    }
    let mut coeffs = vec![0.0; 2 * even.len() - 1];
    for (j, a) in even.iter().enumerate() {
        coeffs[2 * j] = *a;
    }
    WickPolynomial::new(coeffs).map_err(|e| Failure::Input(e.to_string()))
}

#[derive(Serialize)]
struct Estimate {
    value: f64,
    stderr: f64,
}

#[derive(Serialize)]
struct Observables {
    phi_f: Estimate,
    phi_f_sq: Estimate,
    v_free_mean: f64,
}

#[derive(Serialize)]
struct BatchRecord {
    batch: usize,
    n: usize,
    #[serde(rename = "Z_hat")]
    z_hat: f64,
    z_stderr: f64,
    ess: f64,
    warning: Option<String>,
    observables: Observables,
}

fn sample(cfg: &RunConfig, args: &SampleArgs, sink: &mut Sink) -> Result<(), Failure> {
    require_min("--L", args.l, 1)?;
    let poly = parse_poly(&args.poly)?;
    let batch = args.batch.unwrap_or(args.n_samples);
    require_min("--batch", batch, 1000)?;
    let p = &cfg.params;
    let f = TestFunction::from_bump(&ZonalBump::new(SpherePoint::new(0.6, 0.0)?, 0.5)?, args.l);
    let samples = interaction_ensemble(p, &poly, args.l, args.n_samples, cfg.seed, |fld| {
        vec![fld.smeared(&f)]
    })?;
    for (b, chunk) in samples.chunks(batch).enumerate() {
        let v: Vec<f64> = chunk.iter().map(|s| s.0).collect();
        let x: Vec<f64> = chunk.iter().map(|s| s.1[0]).collect();
        let x2: Vec<f64> = x.iter().map(|a| a * a).collect();
        let r1 = reweighted_expectation(&v, &x)?;
        let r2 = reweighted_expectation(&v, &x2)?;
        let rec = BatchRecord {
            batch: b,
            n: chunk.len(),
            z_hat: r1.z_hat,
            z_stderr: r1.z_stderr,
            ess: r1.ess,
            warning: r1.warning.clone(),
            observables: Observables {
                phi_f: Estimate {
                    value: r1.value,
                    stderr: r1.stderr,
                },
                phi_f_sq: Estimate {
                    value: r2.value,
                    stderr: r2.stderr,
                },
                v_free_mean: v.iter().sum::<f64>() / v.len() as f64,
            },
        };
        sink.record(&rec)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct RpRecord {
    basis: usize,
    lambda_min: f64,
    gram_norm: f64,
}

fn rp_check(cfg: &RunConfig, args: &RpCheckArgs, sink: &mut Sink) -> Result<(), Failure> {
    require_min("--bumps", args.bumps, 1)?;
    require_min("--bases", args.bases, 1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for basis in 0..args.bases {
        let bumps = random_upper_bumps(&mut rng, args.bumps)?;
        let rep = reflection_positivity_gram(&cfg.params, &bumps, args.l)?;
        sink.record(&RpRecord {
            basis,
            lambda_min: rep.lambda_min,
            gram_norm: rep.gram_norm,
        })?;
    }
    Ok(())
}

fn check(cfg: &RunConfig, args: &CheckArgs, sink: &mut Sink) -> Result<(), Failure> {
    let suite: Suite = args.suite.parse()?;
    let check_cfg = CheckConfig {
        mu: cfg.params.mu,
        r: cfg.params.r,
        seed: cfg.seed,
    };
    let json = args.json || cfg.format == Some(Format::Json);
    let mut failed = 0;
    for rep in run_suite(suite, &check_cfg) {
        if !rep.pass {
            failed += 1;
        }
        if json {
            sink.record(&rep)?;
        } else {
            sink.line(&rep.to_string())?;
        }
    }
    if failed > 0 {
        Err(Failure::ChecksFailed(failed))
    } else {
        Ok(())
    }
}
