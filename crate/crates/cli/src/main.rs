mod config;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{CommandFactory, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use omega_core::catalog::{
    catalog_lambda_of_g, einstein_omega, heisenberg_extremal_metric, heisenberg_omega1,
    heisenberg_sup, product_omega, sharp_bound, sphere_spectrum, torus_spectrum, unitary_omega1,
    EinsteinFactor, HeisenbergMetric, SpectrumLevel, LEVEL_TOL,
};
use omega_core::mesh::generate::{ellipsoid, flat_torus, icosphere, BLOB_HEIGHT};
use omega_core::mesh::io::{load_mesh, MeshFormat};
use omega_core::mesh::operators::Diagnostic;
use omega_core::mesh::pipeline::{blob_experiment, omega_spectrum, BlobParams};
use omega_core::report::{rows_from_omega, rows_from_values, spectrum_csv, Report, SpectrumRow};
use omega_core::torus::{fourier_omega, positivity_probe, TorusField};
use omega_core::verify::{run_suite, SuiteConfig, SUITES};
use omega_core::OmegaError;

#[derive(Parser, Debug)]
#[command(name = "omega", version, about = "Spectral invariants Λ_k(S) and Ω_k(g) of closed manifolds")]
struct Cli {
    /// Flat `key = value` file of flags for the chosen subcommand.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true, value_name = "FILE")]
    output: Option<PathBuf>,
    /// Also write the spectrum table as CSV.
    #[arg(long, global = true, value_name = "FILE")]
    csv: Option<PathBuf>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Closed-form Ω values.
    Catalog {
        #[command(subcommand)]
        target: CatalogCmd,
    },
    /// Ω spectrum of a triangle mesh or the blob experiment.
    Mesh(MeshArgs),
    /// Randomized property suites.
    Verify(VerifyArgs),
    /// Positivity probe (and optionally Fourier Λ values) for a torus field.
    Probe(ProbeArgs),
}

#[derive(Subcommand, Debug)]
enum CatalogCmd {
    Sphere(SphereArgs),
    Torus(TorusArgs),
    Product(ProductArgs),
    Heisenberg(HeisenbergArgs),
    Unitary(UnitaryArgs),
}

/// Accepts plain numbers and multiples of π such as `2pi` or `pi`.
fn real(s: &str) -> Result<f64, String> {
    let t = s.trim();
    let v = if let Some(head) = t.strip_suffix("pi") {
        let k = match head.trim() {
            "" => 1.0,
            "-" => -1.0,
            h => h.parse::<f64>().map_err(|_| format!("bad number '{s}'"))?,
        };
        k * std::f64::consts::PI
    } else {
        t.parse::<f64>().map_err(|_| format!("bad number '{s}'"))?
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("'{s}' is not finite"))
    }
}

fn positive(s: &str) -> Result<f64, String> {
    let v = real(s)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("expected a positive number, got {s}"))
    }
}

fn count(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(format!("expected a positive integer, got '{s}'")),
    }
}

#[derive(clap::Args, Debug, Serialize)]
#[command(args_override_self = true)]
struct SphereArgs {
    #[arg(long, value_parser = count)]
    dim: usize,
    #[arg(long, default_value = "1", value_parser = positive)]
    radius: f64,
    /// Number of distinct values.
    #[arg(long, default_value = "3", value_parser = count)]
    top: usize,
}

#[derive(clap::Args, Debug, Serialize)]
#[command(args_override_self = true)]
struct TorusArgs {
    #[arg(long, value_delimiter = ',', default_value = "2pi,2pi", value_parser = positive)]
    periods: Vec<f64>,
    #[arg(long, default_value = "3", value_parser = count)]
    top: usize,
}

#[derive(clap::Args, Debug, Serialize)]
#[command(args_override_self = true)]
struct ProductArgs {
    /// `sphere:N:RADIUS` or `torus:L1,L2,…`.
    #[arg(long)]
    factor1: Option<String>,
    #[arg(long)]
    factor2: Option<String>,
    /// Spectrum file with `eigenvalue multiplicity` lines, starting with `0 1`.
    #[arg(long, value_name = "FILE")]
    spectrum1: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    spectrum2: Option<PathBuf>,
    /// Einstein constant of a factor read from a file.
    #[arg(long, value_parser = real)]
    a1: Option<f64>,
    #[arg(long, value_parser = real)]
    a2: Option<f64>,
    #[arg(long, default_value = "2", value_parser = count)]
    dim1: usize,
    #[arg(long, default_value = "2", value_parser = count)]
    dim2: usize,
    #[arg(long, default_value = "10", value_parser = count)]
    top: usize,
    /// Spectrum levels generated for sphere factors.
    #[arg(long, default_value = "40", value_parser = count)]
    levels: usize,
}

#[derive(clap::Args, Debug, Serialize)]
#[command(args_override_self = true)]
struct HeisenbergArgs {
    #[arg(long, default_value = "1")]
    n: i64,
    /// Supremum of Ω₁ over left-invariant metrics.
    #[arg(long)]
    sup: bool,
    /// Diagonal entries d₁ … d_n of the metric.
    #[arg(long, value_delimiter = ',', value_parser = positive)]
    d: Vec<f64>,
    #[arg(long, value_parser = positive)]
    g_last: Option<f64>,
    /// Member of the metric sequence approaching the supremum for n ≥ 2.
    #[arg(long)]
    extremal_step: Option<u32>,
}

#[derive(clap::Args, Debug, Serialize)]
#[command(args_override_self = true)]
struct UnitaryArgs {
    #[arg(long, default_value = "2")]
    n: u32,
    #[arg(long, value_parser = positive)]
    r: f64,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize, PartialEq)]
#[serde(rename_all = "lowercase")]
enum Generator {
    Icosphere,
    Ellipsoid,
    Blob,
    Torus,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Off,
    Obj,
}

#[derive(clap::Args, Debug, Serialize)]
#[command(args_override_self = true)]
struct MeshArgs {
    #[arg(long, value_enum, conflicts_with = "input")]
    gen: Option<Generator>,
    #[arg(long, value_name = "FILE")]
    input: Option<PathBuf>,
    /// Mesh file format; defaults to the file extension.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Subdivision level (default 4, or 5 for the blob).
    #[arg(long)]
    subdiv: Option<u32>,
    #[arg(long, default_value = "1", value_parser = positive)]
    radius: f64,
    #[arg(long, value_delimiter = ',', default_value = "2,1,1", value_parser = positive)]
    axes: Vec<f64>,
    /// Bump radii for the blob experiment, strictly decreasing.
    #[arg(long, value_delimiter = ',', default_value = "0.4,0.2,0.1", value_parser = real)]
    eps: Vec<f64>,
    #[arg(long, default_value_t = BLOB_HEIGHT, value_parser = positive)]
    height: f64,
    /// Samples per direction of the flat torus.
    #[arg(long, value_delimiter = ',', default_value = "24,16")]
    grid: Vec<usize>,
    /// Circle radii of the flat torus.
    #[arg(long, value_delimiter = ',', default_value = "1,0.7", value_parser = positive)]
    radii: Vec<f64>,
    /// Laplacian eigenfunctions in the basis.
    #[arg(long, default_value = "100", value_parser = count)]
    eigs: usize,
    #[arg(long, default_value = "5", value_parser = count)]
    top: usize,
}

#[derive(clap::Args, Debug, Serialize)]
#[command(args_override_self = true)]
struct VerifyArgs {
    /// Suite name or `all`.
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long, default_value = "0")]
    seed: u64,
    #[arg(long, default_value = "100", value_parser = count)]
    cases: usize,
}

#[derive(clap::Args, Debug, Serialize)]
#[command(args_override_self = true)]
struct ProbeArgs {
    /// identity, neg-identity, cap or indefinite.
    #[arg(long, conflicts_with = "field_csv")]
    field: Option<String>,
    /// Tabulated field, one grid point per row with columns s11, s12, ….
    #[arg(long, value_name = "FILE")]
    field_csv: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "2pi,2pi", value_parser = positive)]
    periods: Vec<f64>,
    /// Grid points per axis for named fields.
    #[arg(long, default_value = "32")]
    grid: usize,
    #[arg(long, default_value = "3", value_parser = count)]
    k: usize,
    /// Also compute Fourier Λ values with this many frequencies per axis.
    #[arg(long, value_parser = count)]
    max_freq: Option<usize>,
    #[arg(long, default_value = "10", value_parser = count)]
    top: usize,
}

enum Failure {
    Validation(String),
    Insufficient(String),
    Runtime(String),
    /// The command ran but a check it reports on failed.
    Checks,
}

impl From<OmegaError> for Failure {
    fn from(e: OmegaError) -> Self {
        let msg = e.to_string();
        match e {
            OmegaError::InsufficientSpectrum(_) => Failure::Insufficient(msg),
            OmegaError::InvalidInput(_)
            | OmegaError::NotSymmetric { .. }
            | OmegaError::NotPositiveDefinite
            | OmegaError::Precondition(_)
            | OmegaError::BandwidthExceeded { .. }
            | OmegaError::Mesh(_)
            | OmegaError::Parse { .. }
            | OmegaError::Io(_) => Failure::Validation(msg),
            OmegaError::ResidualTooLarge { .. }
            | OmegaError::NoConvergence { .. }
            | OmegaError::Inconclusive(_) => Failure::Runtime(msg),
        }
    }
}

struct Outcome {
    report: Report,
    table: Option<Vec<SpectrumRow>>,
    checks_passed: bool,
}

fn main() -> ExitCode {
    let mut argv: Vec<OsString> = std::env::args_os().collect();
    if let Some(path) = config::config_path(&argv) {
        argv = match with_config(&argv, &path) {
            Ok(a) => a,
            Err(msg) => return fail(Failure::Validation(msg)),
        };
    }
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Err(msg) = init_threads() {
        return fail(Failure::Validation(msg));
    }
    let start = Instant::now();
    let outcome = match run(&cli.command) {
        Ok(o) => o,
        Err(f) => return fail(f),
    };
    let report = outcome.report.with_timing("total_s", start.elapsed().as_secs_f64());
    if let Err(msg) = write_outputs(&cli, &report, outcome.table.as_deref()) {
        return fail(Failure::Runtime(msg));
    }
    if outcome.checks_passed {
        ExitCode::SUCCESS
    } else {
        fail(Failure::Checks)
    }
}

fn fail(f: Failure) -> ExitCode {
    let (code, msg) = match f {
        Failure::Validation(m) => (2, m),
        Failure::Insufficient(m) => (3, m),
        Failure::Runtime(m) => (1, m),
        Failure::Checks => return ExitCode::from(1),
    };
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn with_config(argv: &[OsString], path: &Path) -> Result<Vec<OsString>, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let entries = config::parse_config(&text).map_err(|e| format!("{}: {}", path.display(), e.0))?;
    let root = Cli::command();
    let subpath = config::subcommand_path(&root, argv);
    if subpath.is_empty() {
        // Let clap report the missing subcommand.
        return Ok(argv.to_vec());
    }
    config::merge_into_args(&root, argv, &subpath, &entries)
        .map_err(|e| format!("{}: {}", path.display(), e.0))
}

fn init_threads() -> Result<(), String> {
    let threads = match std::env::var("OMEGA_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| format!("OMEGA_THREADS must be a positive integer, got '{v}'"))?,
        Err(_) => 1,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| e.to_string())
}

fn write_outputs(cli: &Cli, report: &Report, table: Option<&[SpectrumRow]>) -> Result<(), String> {
    let json = report.to_json();
    match &cli.output {
        Some(path) => fs::write(path, json).map_err(|e| format!("{}: {e}", path.display()))?,
        None => print!("{json}"),
    }
    if let Some(path) = &cli.csv {
        let rows = table.ok_or("this command has no spectrum table for --csv")?;
        fs::write(path, spectrum_csv(rows)).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    Ok(())
}

fn run(cmd: &Cmd) -> Result<Outcome, Failure> {
    match cmd {
        Cmd::Catalog { target } => run_catalog(target),
        Cmd::Mesh(args) => run_mesh(args),
        Cmd::Verify(args) => run_verify(args),
        Cmd::Probe(args) => run_probe(args),
    }
}

fn done(command: &str, config: impl Serialize, result: Value, table: Option<Vec<SpectrumRow>>) -> Result<Outcome, Failure> {
    Ok(Outcome {
        report: Report::new(command, config, result)?,
        table,
        checks_passed: true,
    })
}

fn run_catalog(target: &CatalogCmd) -> Result<Outcome, Failure> {
    match target {
        CatalogCmd::Sphere(a) => {
            let f = sphere_spectrum(a.dim, a.radius, a.top)?;
            let omega = einstein_omega(&f, a.top)?;
            let lambda_g = catalog_lambda_of_g(&f, a.top)?;
            let omega1 = omega.first().map_or(0.0, |v| v.value);
            let result = json!({
                "manifold": f.label(),
                "dim": a.dim,
                "einstein_const": f.einstein_const(),
                "omega": omega,
                "lambda_of_g": lambda_g,
                "sharp_bound_margin": sharp_bound(a.dim) - omega1,
            });
            done("catalog sphere", a, result, Some(rows_from_omega(&omega)))
        }
        CatalogCmd::Torus(a) => {
            let f = torus_with_levels(&a.periods, a.top)?;
            let lambda_g = catalog_lambda_of_g(&f, a.top)?;
            let result = json!({
                "manifold": f.label(),
                "dim": a.periods.len(),
                "einstein_const": 0.0,
                "omega": [],
                "lambda_of_g": lambda_g,
                "sharp_bound_margin": sharp_bound(a.periods.len()),
            });
            done("catalog torus", a, result, Some(rows_from_omega(&lambda_g)))
        }
        CatalogCmd::Product(a) => {
            let f1 = product_factor(1, &a.factor1, &a.spectrum1, a.a1, a.dim1, a.levels)?;
            let f2 = product_factor(2, &a.factor2, &a.spectrum2, a.a2, a.dim2, a.levels)?;
            let omega = product_omega(&f1, &f2, a.top)?;
            let dim = f1.dim() + f2.dim();
            let omega1 = omega.first().map_or(0.0, |v| v.value);
            let result = json!({
                "factors": [f1.label(), f2.label()],
                "dim": dim,
                "omega": omega,
                "sharp_bound_margin": sharp_bound(dim) - omega1,
            });
            done("catalog product", a, result, Some(rows_from_omega(&omega)))
        }
        CatalogCmd::Heisenberg(a) => run_heisenberg(a),
        CatalogCmd::Unitary(a) => {
            let value = unitary_omega1(a.n, a.r)?;
            let dim = (a.n * a.n) as usize;
            let result = json!({
                "group": format!("U({})", a.n),
                "dim": dim,
                "omega1": value,
                "sharp_bound_margin": sharp_bound(dim) - value,
            });
            done("catalog unitary", a, result, None)
        }
    }
}

/// Grows the lattice radius until the torus lists `top` nonzero levels.
fn torus_with_levels(periods: &[f64], top: usize) -> Result<EinsteinFactor, OmegaError> {
    let shortest = 2.0 * std::f64::consts::PI / periods.iter().cloned().fold(0.0, f64::max);
    let mut max_norm = shortest * shortest * (top as f64 + 1.0);
    loop {
        let f = torus_spectrum(periods, max_norm)?;
        if f.levels().len() > top {
            return Ok(f);
        }
        max_norm *= 2.0;
    }
}

fn product_factor(
    which: u8,
    spec: &Option<String>,
    file: &Option<PathBuf>,
    a: Option<f64>,
    dim: usize,
    levels: usize,
) -> Result<EinsteinFactor, Failure> {
    let invalid = |m: String| Failure::Validation(m);
    match (spec, file) {
        (Some(_), Some(_)) => Err(invalid(format!("give --factor{which} or --spectrum{which}, not both"))),
        (None, None) => Err(invalid(format!("factor {which} needs --factor{which} or --spectrum{which}"))),
        (Some(s), None) => {
            let parts: Vec<&str> = s.split(':').collect();
            match parts.as_slice() {
                ["sphere", n, r] => {
                    let n = n.parse().map_err(|_| invalid(format!("bad sphere dimension in '{s}'")))?;
                    let r = positive(r).map_err(invalid)?;
                    Ok(sphere_spectrum(n, r, levels)?)
                }
                ["torus", periods] => {
                    let p: Vec<f64> = periods
                        .split(',')
                        .map(positive)
                        .collect::<Result<_, _>>()
                        .map_err(invalid)?;
                    Ok(torus_with_levels(&p, levels)?)
                }
                _ => Err(invalid(format!("factor '{s}' must be sphere:N:RADIUS or torus:L1,L2,…"))),
            }
        }
        (None, Some(path)) => {
            let a = a.ok_or_else(|| invalid(format!("--spectrum{which} needs --a{which}")))?;
            let text = fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
            let mut parsed = Vec::new();
            for (i, line) in text.lines().enumerate() {
                let line = line.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let mut it = line.split_whitespace();
                let bad = || invalid(format!("{}:{}: expected 'eigenvalue multiplicity'", path.display(), i + 1));
                let eigenvalue: f64 = it.next().and_then(|t| t.parse().ok()).ok_or_else(bad)?;
                let multiplicity: u64 = it.next().and_then(|t| t.parse().ok()).ok_or_else(bad)?;
                if it.next().is_some() {
                    return Err(bad());
                }
                parsed.push(SpectrumLevel { eigenvalue, multiplicity });
            }
            let label = path.file_stem().map_or("factor".into(), |s| s.to_string_lossy().into_owned());
            Ok(EinsteinFactor::new(label, dim, a, parsed)?)
        }
    }
}

fn run_heisenberg(a: &HeisenbergArgs) -> Result<Outcome, Failure> {
    if a.n < 1 {
        return Err(Failure::Validation("--n must be a positive integer".into()));
    }
    let dim = 2 * a.n as usize + 1;
    let result = if a.sup {
        let value = heisenberg_sup(a.n)?;
        json!({ "n": a.n, "dim": dim, "sup_omega1": value, "sharp_bound_margin": sharp_bound(dim) - value })
    } else {
        let metric = match (a.extremal_step, a.d.is_empty(), a.g_last) {
            (Some(step), true, None) => heisenberg_extremal_metric(a.n as usize, step)?,
            (None, false, Some(g)) => {
                if a.d.len() != a.n as usize {
                    return Err(Failure::Validation(format!("--d needs {} entries", a.n)));
                }
                HeisenbergMetric::new(a.d.clone(), g)?
            }
            _ => {
                return Err(Failure::Validation(
                    "give --sup, --extremal-step, or both --d and --g-last".into(),
                ))
            }
        };
        let omega = heisenberg_omega1(&metric);
        json!({
            "n": a.n,
            "dim": dim,
            "metric": metric,
            "omega1": omega,
            "sharp_bound_margin": sharp_bound(dim) - omega.value,
        })
    };
    done("catalog heisenberg", a, result, None)
}

fn run_mesh(a: &MeshArgs) -> Result<Outcome, Failure> {
    let invalid = |m: &str| Failure::Validation(m.to_string());
    if a.gen == Some(Generator::Blob) {
        let params = BlobParams {
            subdiv: a.subdiv.unwrap_or(5),
            height: a.height,
            basis_size: a.eigs,
        };
        let table = blob_experiment(&a.eps, &params)?;
        let rows = table
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| SpectrumRow {
                k: i + 1,
                value: r.omega1,
                multiplicity: "1".into(),
                witness: format!("eps={}", r.eps),
            })
            .collect();
        let result = serde_json::to_value(&table).map_err(|e| Failure::Runtime(e.to_string()))?;
        return done("mesh", a, result, Some(rows));
    }
    let subdiv = a.subdiv.unwrap_or(4);
    let mesh = match (a.gen, &a.input) {
        (Some(Generator::Icosphere), None) => icosphere(subdiv, a.radius)?,
        (Some(Generator::Ellipsoid), None) => {
            let axes: [f64; 3] = a.axes.as_slice().try_into().map_err(|_| invalid("--axes needs three values"))?;
            ellipsoid(subdiv, axes)?
        }
        (Some(Generator::Torus), None) => {
            let [n1, n2]: [usize; 2] = a.grid.as_slice().try_into().map_err(|_| invalid("--grid needs two values"))?;
            let [r1, r2]: [f64; 2] = a.radii.as_slice().try_into().map_err(|_| invalid("--radii needs two values"))?;
            flat_torus(n1, n2, r1, r2)?
        }
        (None, Some(path)) => {
            let format = a.format.map(|f| match f {
                Format::Off => MeshFormat::Off,
                Format::Obj => MeshFormat::Obj,
            });
            load_mesh(path, format)?
        }
        _ => return Err(invalid("give --gen or --input")),
    };
    let r = omega_spectrum(&mesh, a.eigs, a.top)?;
    let fallbacks = r
        .diagnostics
        .iter()
        .filter(|d| matches!(d, Diagnostic::BarycentricFallback { .. }))
        .count();
    let positive: Vec<f64> = r.spectrum.positive_values();
    let rows = rows_from_values(&positive[..positive.len().min(a.top)], LEVEL_TOL);
    let mut result = serde_json::to_value(&r).map_err(|e| Failure::Runtime(e.to_string()))?;
    result["fallback_area_count"] = json!(fallbacks);
    done("mesh", a, result, Some(rows))
}

fn run_verify(a: &VerifyArgs) -> Result<Outcome, Failure> {
    let names: Vec<&str> = if a.suite == "all" {
        SUITES.to_vec()
    } else if SUITES.contains(&a.suite.as_str()) {
        vec![a.suite.as_str()]
    } else {
        return Err(Failure::Validation(format!(
            "unknown suite '{}' (expected all or one of {})",
            a.suite,
            SUITES.join(", ")
        )));
    };
    let cfg = SuiteConfig { cases: a.cases, seed: a.seed };
    let reports = names
        .iter()
        .map(|s| run_suite(s, &cfg))
        .collect::<Result<Vec<_>, _>>()?;
    let passed = reports.iter().all(|r| r.passed);
    for r in &reports {
        eprintln!(
            "{:<14} {} ({} cases, {} failures)",
            r.suite,
            if r.passed { "pass" } else { "FAIL" },
            r.cases,
            r.failures.len()
        );
    }
    let result = json!({ "passed": passed, "suites": reports });
    Ok(Outcome {
        report: Report::new("verify", a, result)?,
        table: None,
        checks_passed: passed,
    })
}

fn run_probe(a: &ProbeArgs) -> Result<Outcome, Failure> {
    let field = match (&a.field, &a.field_csv) {
        (Some(name), None) => TorusField::named(name, a.periods.clone(), a.grid)?,
        (None, Some(path)) => {
            let file = fs::File::open(path).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
            let name = path.file_stem().map_or("table".into(), |s| s.to_string_lossy().into_owned());
            TorusField::from_csv(name, a.periods.clone(), file)?
        }
        _ => return Err(Failure::Validation("give --field or --field-csv".into())),
    };
    let outcome = positivity_probe(&field, a.k)?;
    let mut result = json!({
        "field": field.name(),
        "dim": field.dim(),
        "grid_size": field.grid_size(),
        "probe": outcome,
        "passed": true,
    });
    let mut table = None;
    if let Some(m) = a.max_freq {
        let f = fourier_omega(&field, m, a.top)?;
        let consistent = f.positive_count >= a.k;
        result["fourier"] = serde_json::to_value(&f).map_err(|e| Failure::Runtime(e.to_string()))?;
        result["consistent"] = json!(consistent);
        let positive = f.spectrum.positive_values();
        table = Some(rows_from_values(&positive[..positive.len().min(a.top)], LEVEL_TOL));
    }
    done("probe", a, result, table)
}
