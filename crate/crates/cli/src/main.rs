//! `austere`: generate isotropic surfaces, verify the ruled submanifolds over
//! them, and export meshes.
//!
//! Exit codes: 0 pass, 1 check failure, 2 configuration or I/O error,
//! 3 seed constraint violated, 4 all samples degenerate.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use austere_core::artifact::SurfaceFile;
use austere_core::export::{export_obj, ExportKind, SliceSpec};
use austere_core::run::{run, Check, RunConfig, RunReport, CSV_COLUMNS, CSV_FORMAT};
use austere_core::sampling::SamplingSpec;
use austere_core::Error;
use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;

/// Worker threads for sample sweeps; defaults to the number of CPUs.
const WORKERS_ENV: &str = "AUSTERE_WORKERS";

#[derive(Parser)]
#[command(name = "austere", version, about = "Austere ruled submanifolds over isotropic minimal surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a surface from a config and write a surface file.
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run checks on a surface file and write a JSON report.
    Verify {
        #[arg(long)]
        surface: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        report: PathBuf,
        /// Comma-separated subset of checks, overriding the config.
        #[arg(long, value_delimiter = ',')]
        checks: Option<Vec<String>>,
        /// Tolerance for finite-difference identities, overriding the config.
        #[arg(long)]
        tol_fd: Option<f64>,
        /// Sampling seed, overriding the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Per-sample residual table; overrides `outputs.csv`.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Write an OBJ mesh of a two-parameter slice.
    Export {
        #[arg(long)]
        surface: PathBuf,
        #[arg(long, value_parser = ["surface", "immersion", "lagrangian"])]
        what: String,
        /// Slice as inline JSON or a path to a JSON file.
        #[arg(long)]
        slice: String,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::NonIsotropicSeed { .. } => 3,
            Error::AllDegenerate(_) | Error::Degenerate { .. } | Error::GaugeDiscontinuity { .. } => 4,
            Error::InvalidInput(_) | Error::DimensionMismatch { .. } | Error::Io(_) | Error::Json(_) => 2,
            Error::NotPositiveDefinite | Error::StepTooLarge { .. } => 1,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| Failure::config(format!("cannot write {}: {e}", path.display())))
}

/// Parses JSON, reporting the path of the offending field.
fn parse<T: DeserializeOwned>(text: &str, what: &str) -> CliResult<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Failure::config(format!("{what}: at '{path}': {}", e.inner()))
    })
}

fn load_surface(path: &Path) -> CliResult<austere_core::isogen::Surface> {
    let file: SurfaceFile = parse(&read(path)?, &format!("surface file {}", path.display()))?;
    Ok(file.to_surface()?)
}

fn generate(config: &Path, out: &Path) -> CliResult<u8> {
    let cfg: RunConfig = parse(&read(config)?, "config")?;
    let spec = cfg.surface.ok_or_else(|| Failure::config("config: at 'surface': missing field"))?;
    let surface = spec.build()?;
    write(out, &SurfaceFile::from_surface(&surface).to_json())?;
    Ok(0)
}

struct VerifyArgs {
    surface: PathBuf,
    config: PathBuf,
    report: PathBuf,
    checks: Option<Vec<String>>,
    tol_fd: Option<f64>,
    seed: Option<u64>,
    csv: Option<PathBuf>,
}

fn write_csv(path: &Path, report: &RunReport) -> CliResult<()> {
    let io = |e: csv::Error| Failure::config(format!("cannot write {}: {e}", path.display()));
    let mut file = fs::File::create(path).map_err(|e| Failure::config(format!("cannot write {}: {e}", path.display())))?;
    writeln!(file, "# {CSV_FORMAT}").map_err(|e| Failure::config(format!("cannot write {}: {e}", path.display())))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(CSV_COLUMNS).map_err(io)?;
    for rec in report.csv_records() {
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(|e| Failure::config(format!("cannot write {}: {e}", path.display())))
}

fn verify(args: VerifyArgs) -> CliResult<u8> {
    let surface = load_surface(&args.surface)?;
    let mut cfg: RunConfig = parse(&read(&args.config)?, "config")?;
    if let Some(names) = args.checks {
        cfg.checks = names
            .iter()
            .map(|n| n.trim().parse::<Check>())
            .collect::<Result<_, _>>()
            .map_err(|e| Failure::config(format!("--checks: {e}")))?;
    }
    if let Some(tol) = args.tol_fd {
        cfg.tolerances.finite_difference = tol;
    }
    if let Some(seed) = args.seed {
        match cfg.sampling.as_mut() {
            Some(s) => s.seed = seed,
            None => cfg.sampling = Some(SamplingSpec::new(seed)),
        }
    }
    let csv_path = args.csv.or_else(|| cfg.outputs.csv.as_ref().map(PathBuf::from));
    let report = run(&surface, &cfg)?;
    let json = serde_json::to_string_pretty(&report).expect("reports always serialize") + "\n";
    write(&args.report, &json)?;
    if let Some(path) = csv_path {
        write_csv(&path, &report)?;
    }
    for c in &report.checks {
        let verdict = if c.pass { "PASS" } else { "FAIL" };
        println!(
            "{verdict} {:<16} worst {} (threshold {:.1e}) at sample {}, {} degenerate{}",
            c.check.name(),
            c.worst_residual.map_or("-".to_string(), |r| format!("{r:.3e}")),
            c.threshold,
            c.worst_sample.map_or("-".to_string(), |i| i.to_string()),
            c.degenerate_count,
            if c.detail.is_empty() { String::new() } else { format!("; {}", c.detail) }
        );
    }
    if report.checks.iter().any(|c| c.rows.is_empty()) {
        return Ok(4);
    }
    Ok(if report.pass { 0 } else { 1 })
}

fn export(surface: &Path, what: &str, slice: &str, out: &Path) -> CliResult<u8> {
    let s = load_surface(surface)?;
    let what: ExportKind = what.parse()?;
    let text = if slice.trim_start().starts_with('{') {
        slice.to_string()
    } else {
        read(Path::new(slice))?
    };
    let slice: SliceSpec = parse(&text, "slice")?;
    write(out, &export_obj(&s, what, &slice)?)?;
    Ok(0)
}

fn init_workers() -> CliResult<()> {
    let Ok(raw) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::config(format!("{WORKERS_ENV} must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::config(format!("cannot start {n} workers: {e}")))
}

fn dispatch(cli: Cli) -> CliResult<u8> {
    init_workers()?;
    match cli.command {
        Command::Generate { config, out } => generate(&config, &out),
        Command::Verify {
            surface,
            config,
            report,
            checks,
            tol_fd,
            seed,
            csv,
        } => verify(VerifyArgs {
            surface,
            config,
            report,
            checks,
            tol_fd,
            seed,
            csv,
        }),
        Command::Export {
            surface,
            what,
            slice,
            out,
        } => export(&surface, &what, &slice, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
