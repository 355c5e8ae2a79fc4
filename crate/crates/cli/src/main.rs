use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use num_complex::Complex64 as C64;
use serde_json::{json, Value};

use freespec::families::{self, WalkSpec};
use freespec::figure::{self, FigureCase, FigureConfig};
use freespec::fock::{spectral_radius_estimate, DEFAULT_BUDGET};
use freespec::quadratic::{self, Method, VERDICT_BAND};
use freespec::region::{self, GridSpec, SvgStyle, DEFAULT_NODES};
use freespec::resolvent::{membership_oracle_with_budget, DEFAULT_LEVELS, DEFAULT_MARGIN, DEFAULT_WINDOW};
use freespec::rmt::{self, RNG_NAME, VARIANCE_CONVENTION};
use freespec::{Error, MembershipVerdict, NCPolynomial, VariableKind, Verdict};

const EXIT_USAGE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_UNCERTAIN: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "freespec", version, about = "Spectra of polynomials in free circular and semicircular variables")]
#[command(args_override_self = true)]
struct Cli {
    /// key=value file with default flag values; command-line flags win
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Worker threads for grid scans
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Spectral regions of structured families
    Spectrum {
        #[command(subcommand)]
        family: Family,
    },
    /// Generic membership test from the decay of the resolvent coefficients
    Oracle(OracleArgs),
    /// Spectral radius estimates from ||p^n||_2
    Radius(RadiusArgs),
    /// Eigenvalues of the Ginibre model of a polynomial
    Rmt(RmtArgs),
    /// One of the four quadratic examples: region, boundary and eigenvalue cloud
    Figure1(FigureArgs),
}

#[derive(Subcommand, Debug)]
enum Family {
    /// Quadratic polynomial in c1, c2
    Quad(QuadArgs),
    /// Walk (1 + t c1)(1 + t c2)...(1 + t ck)
    Walk(WalkArgs),
    /// Homogeneous polynomial (closed disk of radius ||f||_2)
    Homog(HomogArgs),
}

#[derive(Args, Debug)]
struct GridArgs {
    /// re_min,re_max,im_min,im_max,nx,ny (node counts)
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,

    /// Nodes per axis when the window is chosen automatically
    #[arg(long, default_value_t = DEFAULT_NODES)]
    nodes: usize,

    /// SVG output; a CSV raster and a .meta.json file are written next to it
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct QuadArgs {
    #[arg(long)]
    poly: String,

    #[arg(long, default_value = "auto")]
    method: Method,

    /// Decide a single point RE,IM instead of scanning a grid
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<String>,

    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Args, Debug)]
struct WalkArgs {
    #[arg(long)]
    k: usize,

    #[arg(long, allow_hyphen_values = true)]
    t: f64,

    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<String>,

    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Args, Debug)]
struct HomogArgs {
    #[arg(long)]
    poly: String,

    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<String>,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[arg(long)]
    poly: String,

    #[arg(long, allow_hyphen_values = true)]
    lambda: String,

    #[arg(long, default_value_t = DEFAULT_LEVELS)]
    levels: usize,

    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    window: usize,

    #[arg(long, default_value_t = DEFAULT_MARGIN)]
    margin: f64,

    /// Largest number of coefficients held per level
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: usize,
}

#[derive(Args, Debug)]
struct RadiusArgs {
    #[arg(long)]
    poly: String,

    #[arg(long, default_value_t = 16)]
    nmax: usize,

    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: usize,
}

#[derive(Args, Debug)]
struct RmtArgs {
    #[arg(long)]
    poly: String,

    #[arg(long, default_value_t = rmt::DEFAULT_SIZE)]
    n: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// CSV output (re,im); stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FigureArgs {
    #[arg(long = "case")]
    case: FigureCase,

    #[arg(long, default_value_t = rmt::DEFAULT_SIZE)]
    n: usize,

    #[arg(long, default_value_t = 7)]
    seed: u64,

    #[arg(long, default_value = "auto")]
    method: Method,

    #[arg(long, default_value_t = figure::DEFAULT_DILATION)]
    dilation: f64,

    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,

    #[arg(long, default_value_t = DEFAULT_NODES)]
    nodes: usize,

    #[arg(long)]
    out: Option<PathBuf>,
}

/// Error carrying the exit status it maps to.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(err: anyhow::Error) -> Self {
        let code = match err.downcast_ref::<Error>() {
            Some(
                Error::Parse { .. } | Error::Structure(_) | Error::Alphabet(_) | Error::Grid(_) | Error::Dimension(_),
            ) => EXIT_USAGE,
            _ => EXIT_NUMERICAL,
        };
        Failure { code, err }
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        anyhow::Error::from(err).into()
    }
}

fn usage(err: anyhow::Error) -> Failure {
    Failure { code: EXIT_USAGE, err }
}

fn main() -> ExitCode {
    let argv = match expand_config(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    if let Some(n) = cli.jobs {
        if n == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(EXIT_USAGE);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_NUMERICAL);
        }
    }
    let echo: Vec<String> = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match run(cli.command, echo) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
    }
}

/// Splices `--key value` pairs from the `--config` file in after the
/// subcommand path, so that flags given on the command line come later and
/// override them.
fn expand_config(mut argv: Vec<OsString>) -> anyhow::Result<Vec<OsString>> {
    let mut path = None;
    let mut k = 1;
    while k < argv.len() {
        let a = argv[k].to_string_lossy().into_owned();
        if a == "--config" {
            if k + 1 >= argv.len() {
                bail!("--config needs a file path");
            }
            path = Some(PathBuf::from(argv.remove(k + 1)));
            argv.remove(k);
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(PathBuf::from(p));
            argv.remove(k);
        } else {
            k += 1;
        }
    }
    let Some(path) = path else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading config {}", path.display()))?;
    let injected = config_flags(&text).with_context(|| format!("in config {}", path.display()))?;

    // Find the end of the subcommand path, skipping values of global flags.
    let mut pos = 1;
    let mut depth = 0;
    while pos < argv.len() {
        let a = argv[pos].to_string_lossy();
        if a == "--jobs" {
            pos += 2;
            continue;
        }
        if a.starts_with('-') {
            break;
        }
        depth += 1;
        pos += 1;
        if depth == 2 || (depth == 1 && a != "spectrum") {
            break;
        }
    }
    let pos = pos.min(argv.len());
    argv.splice(pos..pos, injected);
    Ok(argv)
}

fn config_flags(text: &str) -> anyhow::Result<Vec<OsString>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {}: expected key=value", n + 1))?;
        let key = key.trim().trim_start_matches("--");
        let value = value.trim().trim_matches('"');
        if key.is_empty() || key == "config" {
            bail!("line {}: bad key '{key}'", n + 1);
        }
        match value {
            "false" => {}
            "true" => out.push(format!("--{key}").into()),
            v => out.push(format!("--{key}={v}").into()),
        }
    }
    Ok(out)
}

fn parse_complex(s: &str) -> anyhow::Result<C64> {
    let (re, im) = s
        .split_once(',')
        .ok_or_else(|| anyhow!("expected RE,IM, got '{s}'"))?;
    let re: f64 = re.trim().parse().with_context(|| format!("bad real part in '{s}'"))?;
    let im: f64 = im.trim().parse().with_context(|| format!("bad imaginary part in '{s}'"))?;
    if !re.is_finite() || !im.is_finite() {
        bail!("non-finite point '{s}'");
    }
    Ok(C64::new(re, im))
}

/// Parses a polynomial, taking the variable kind from its letters and the
/// number of variables from the largest index.
fn parse_poly(text: &str) -> anyhow::Result<NCPolynomial> {
    let bytes = text.as_bytes();
    let mut kinds = (false, false);
    let mut d = 0;
    for (k, &b) in bytes.iter().enumerate() {
        if (b == b'c' || b == b's') && bytes.get(k + 1).is_some_and(u8::is_ascii_digit) {
            if b == b'c' {
                kinds.0 = true;
            } else {
                kinds.1 = true;
            }
            d = d.max((bytes[k + 1] - b'0') as usize);
        }
    }
    let kind = match kinds {
        (true, true) => bail!("polynomial mixes circular (c) and semicircular (s) variables"),
        (false, true) => VariableKind::Semicircular,
        _ => VariableKind::Circular,
    };
    Ok(NCPolynomial::parse(text, d.max(1), kind)?)
}

fn grid_or(spec: &Option<String>, fallback: impl FnOnce() -> freespec::Result<GridSpec>) -> Result<GridSpec, Failure> {
    match spec {
        Some(s) => s.parse::<GridSpec>().map_err(|e| usage(e.into())),
        None => fallback().map_err(Failure::from),
    }
}

fn base_meta(command: &str, echo: &[String]) -> Value {
    json!({
        "tool": "freespec",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "args": echo,
    })
}

fn merge(mut a: Value, b: Value) -> Value {
    if let (Some(a), Value::Object(b)) = (a.as_object_mut(), b) {
        a.extend(b);
    }
    a
}

/// Writes to stdout; a closed pipe (`| head`) is not an error.
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn print_json(v: &Value) {
    emit(&(serde_json::to_string_pretty(v).expect("json") + "\n"));
}

fn verdict_exit(v: &MembershipVerdict) -> u8 {
    if v.verdict == Verdict::BoundaryUncertain {
        EXIT_UNCERTAIN
    } else {
        0
    }
}

fn write_artifacts(out: &Path, raster: &region::RegionRaster, svg: &str, meta: &Value) -> Result<(), Failure> {
    region::write_file(out, svg)?;
    region::write_file(&out.with_extension("csv"), &region::emit_csv(raster))?;
    region::write_file(&out.with_extension("meta.json"), &region::emit_json(raster, meta))?;
    Ok(())
}

fn raster_summary(raster: &region::RegionRaster) -> Value {
    json!({
        "grid": raster.grid,
        "spectrum_nodes": raster.count(Verdict::Spectrum),
        "resolvent_nodes": raster.count(Verdict::Resolvent),
        "uncertain_nodes": raster.count(Verdict::BoundaryUncertain),
        "boundary_polylines": raster.boundary.len(),
    })
}

fn run(command: Command, echo: Vec<String>) -> Result<u8, Failure> {
    match command {
        Command::Spectrum { family: Family::Quad(a) } => run_quad(a, &echo),
        Command::Spectrum { family: Family::Walk(a) } => run_walk(a, &echo),
        Command::Spectrum { family: Family::Homog(a) } => run_homog(a, &echo),
        Command::Oracle(a) => run_oracle(a, &echo),
        Command::Radius(a) => run_radius(a, &echo),
        Command::Rmt(a) => run_rmt(a, &echo),
        Command::Figure1(a) => run_figure(a, &echo),
    }
}

fn run_quad(a: QuadArgs, echo: &[String]) -> Result<u8, Failure> {
    let p = parse_poly(&a.poly).map_err(usage)?;
    let form = p.extract_quadratic()?;
    let equivalence = quadratic::equivalence_conditions(&form);
    let meta = merge(
        base_meta("spectrum quad", echo),
        json!({"polynomial": p.to_string(), "method": a.method, "equivalence": equivalence}),
    );
    if let Some(l) = &a.lambda {
        let lambda = parse_complex(l).map_err(usage)?;
        let v = quadratic::membership(&form, lambda, a.method);
        print_json(&merge(meta, json!({"lambda": [lambda.re, lambda.im], "result": v})));
        return Ok(verdict_exit(&v));
    }
    let grid = grid_or(&a.grid.grid, || {
        let bound = 2.0 * form.b.iter().map(|z| z.norm()).sum::<f64>()
            + 4.0 * form.a.iter().flatten().map(|z| z.norm()).sum::<f64>();
        region::fit_window(|z| quadratic::radius_field(&form, z), form.c0, bound.max(1e-6), 1.0, a.grid.nodes)
    })?;
    let raster = figure::quadratic_raster(&form, grid, a.method);
    let meta = merge(meta, raster_summary(&raster));
    if let Some(out) = &a.grid.out {
        let style = SvgStyle {
            title: Some(format!("f = {p}")),
            ..SvgStyle::default()
        };
        let svg = region::emit_svg(&raster, &raster.boundary, &[], &style);
        write_artifacts(out, &raster, &svg, &meta)?;
    }
    print_json(&meta);
    Ok(0)
}

fn run_walk(a: WalkArgs, echo: &[String]) -> Result<u8, Failure> {
    let spec = WalkSpec::new(a.k, a.t).map_err(|e| usage(e.into()))?;
    let meta = merge(base_meta("spectrum walk", echo), json!({"k": a.k, "t": a.t}));
    if let Some(l) = &a.lambda {
        let lambda = parse_complex(l).map_err(usage)?;
        let v = families::walk_membership(spec, lambda);
        let g = families::walk_g(spec, lambda);
        print_json(&merge(meta, json!({"lambda": [lambda.re, lambda.im], "g": g, "result": v})));
        return Ok(verdict_exit(&v));
    }
    let grid = grid_or(&a.grid.grid, || {
        let bound = (1.0 + 2.0 * a.t.abs()).powi(a.k as i32) + 1.0;
        region::fit_window(|z| families::walk_field(spec, z), C64::new(1.0, 0.0), bound, 1.0, a.grid.nodes)
    })?;
    let raster = region::scan(|z| families::walk_field(spec, z), grid, 1.0, 0.0);
    let meta = merge(meta, raster_summary(&raster));
    if let Some(out) = &a.grid.out {
        let style = SvgStyle {
            title: Some(format!("walk k = {}, t = {}", a.k, a.t)),
            ..SvgStyle::default()
        };
        let svg = region::emit_svg(&raster, &raster.boundary, &[], &style);
        write_artifacts(out, &raster, &svg, &meta)?;
    }
    print_json(&meta);
    Ok(0)
}

fn run_homog(a: HomogArgs, echo: &[String]) -> Result<u8, Failure> {
    let p = parse_poly(&a.poly).map_err(usage)?;
    let radius = families::homogeneous_radius(&p)?;
    let meta = merge(
        base_meta("spectrum homog", echo),
        json!({
            "polynomial": p.to_string(),
            "degree": p.homogeneous_degree(),
            "radius": radius,
            "region": "closed disk |lambda| <= radius",
        }),
    );
    if let Some(l) = &a.lambda {
        let lambda = parse_complex(l).map_err(usage)?;
        let v = families::homogeneous_membership(&p, lambda)?;
        print_json(&merge(meta, json!({"lambda": [lambda.re, lambda.im], "result": v})));
        return Ok(verdict_exit(&v));
    }
    print_json(&meta);
    Ok(0)
}

fn run_oracle(a: OracleArgs, echo: &[String]) -> Result<u8, Failure> {
    let p = parse_poly(&a.poly).map_err(usage)?;
    let lambda = parse_complex(&a.lambda).map_err(usage)?;
    let v = membership_oracle_with_budget(&p, lambda, a.levels, a.window, a.margin, a.budget)?;
    print_json(&merge(
        base_meta("oracle", echo),
        json!({
            "polynomial": p.to_string(),
            "lambda": [lambda.re, lambda.im],
            "levels": a.levels,
            "window": a.window,
            "margin": a.margin,
            "result": v,
        }),
    ));
    Ok(verdict_exit(&v))
}

fn run_radius(a: RadiusArgs, echo: &[String]) -> Result<u8, Failure> {
    let p = parse_poly(&a.poly).map_err(usage)?;
    let est = spectral_radius_estimate(&p, a.nmax, a.budget)?;
    print_json(&merge(
        base_meta("radius", echo),
        json!({"polynomial": p.to_string(), "estimate": est}),
    ));
    Ok(0)
}

fn run_rmt(a: RmtArgs, echo: &[String]) -> Result<u8, Failure> {
    let p = parse_poly(&a.poly).map_err(usage)?;
    let g = rmt::sample(p.num_vars(), a.n, a.seed)?;
    let eigs = rmt::eigen_cloud(&p, &g)?;
    let mut csv = String::from("re,im\n");
    for z in &eigs {
        csv.push_str(&format!("{},{}\n", z.re, z.im));
    }
    let meta = merge(
        base_meta("rmt", echo),
        json!({
            "polynomial": p.to_string(),
            "matrix_size": a.n,
            "seed": a.seed,
            "rng": RNG_NAME,
            "variance": VARIANCE_CONVENTION,
            "eigenvalues": eigs.len(),
        }),
    );
    match &a.out {
        Some(out) => {
            region::write_file(out, &csv)?;
            region::write_file(&out.with_extension("meta.json"), &serde_json::to_string_pretty(&meta).expect("json"))?;
            print_json(&meta);
        }
        None => emit(&csv),
    }
    Ok(0)
}

fn run_figure(a: FigureArgs, echo: &[String]) -> Result<u8, Failure> {
    let mut cfg = FigureConfig::new(a.case, a.n, a.seed);
    cfg.method = a.method;
    cfg.dilation = a.dilation;
    cfg.grid = grid_or(&a.grid, || Ok(a.case.window(a.nodes)))?;
    let out = figure::run_figure(cfg)?;
    let component = out.raster.spectrum_component(C64::new(0.0, 0.0));
    let meta = merge(
        merge(base_meta("figure1", echo), out.metadata()),
        json!({
            "band": VERDICT_BAND,
            "zero_component": component,
            "summary": raster_summary(&out.raster),
        }),
    );
    if let Some(path) = &a.out {
        write_artifacts(path, &out.raster, &out.svg, &meta)?;
        let mut csv = String::from("re,im\n");
        for z in &out.cloud {
            csv.push_str(&format!("{},{}\n", z.re, z.im));
        }
        region::write_file(&path.with_extension("eigs.csv"), &csv)?;
    }
    print_json(&meta);
    Ok(0)
}
