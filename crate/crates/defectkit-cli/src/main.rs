//! Command-line front end for the defect analysis library: formation
//! energies, charge transition levels, radiative lifetimes, hyperfine and
//! zero-field splitting tensors, finite-size corrections, and qubit
//! screening reports.
//!
//! Exit codes: 0 on success (including `--help`/`--version`), 1 on any
//! usage or input error, 2 when a lattice sum fails to reach the requested
//! tolerance. All outputs are deterministic: repeated runs over the same
//! inputs produce byte-identical files.

mod commands;
mod output;
mod svg;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use defectkit::correction::CorrectionError;
use defectkit::io::IoError;
use defectkit::model::ModelError;
use defectkit::optics::{LifetimeConvention, OpticsError};
use defectkit::screening::ScreeningError;
use defectkit::spin::SpinError;
use defectkit::thermo::ThermoError;

fn main() -> ExitCode {
    ExitCode::from(run(std::env::args_os()))
}

fn run<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            // --help and --version print to stdout and succeed; everything
            // else is a usage error.
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return code;
        }
    };
    init_thread_pool(cli.threads);
    let outcome = match &cli.command {
        Command::Formation(args) => commands::formation(args),
        Command::Ctl(args) => commands::ctl(args),
        Command::Lifetime(args) => commands::lifetime(args),
        Command::Hyperfine(args) => commands::hyperfine(args),
        Command::Zfs(args) => commands::zfs(args),
        Command::Correction(args) => commands::correction(args),
        Command::Screen(args) => commands::screen(args),
        Command::Diagram(args) => commands::diagram(args),
    };
    match outcome {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}

/// Cap the worker pool: `--threads` wins, then `DEFECTKIT_THREADS`, then
/// one thread per logical CPU.
fn init_thread_pool(flag: Option<usize>) {
    let from_env = std::env::var("DEFECTKIT_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0);
    if let Some(n) = flag.or(from_env) {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
}

/// Command failure carrying its process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Unreadable or malformed input, or invalid argument values.
    Input(String),
    /// A lattice sum did not reach the requested tolerance.
    Convergence(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Convergence(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(msg) | CliError::Convergence(msg) => f.write_str(msg),
        }
    }
}

macro_rules! input_error_from {
    ($($ty:ty),* $(,)?) => {$(
        impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::Input(e.to_string())
            }
        }
    )*};
}

input_error_from!(
    std::io::Error,
    IoError,
    ThermoError,
    ModelError,
    OpticsError,
    SpinError,
    ScreeningError,
);

impl From<CorrectionError> for CliError {
    fn from(e: CorrectionError) -> Self {
        match e {
            CorrectionError::Convergence { .. } => CliError::Convergence(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "defectkit",
    version,
    about = "Defect-qubit analysis: energetics, optics, spin tensors, and screening"
)]
struct Cli {
    /// Worker-thread cap (overrides the DEFECTKIT_THREADS environment variable)
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Formation energies at the valence-band maximum for every manifest entry
    Formation(FormationArgs),
    /// Charge transition levels between consecutive charge states, CSV and optional SVG
    Ctl(CtlArgs),
    /// Transition dipole and radiative lifetime from plane-wave wavefunctions
    Lifetime(LifetimeArgs),
    /// Hyperfine tensor for one nucleus from a spin-density grid
    Hyperfine(HyperfineArgs),
    /// Zero-field splitting parameters from occupied spin orbitals
    Zfs(ZfsArgs),
    /// Image-charge and potential-alignment correction for a charged cell
    Correction(CorrectionArgs),
    /// Rule-based qubit-candidate screening report (JSON)
    Screen(ScreenArgs),
    /// Normalized transition-level diagram (SVG)
    Diagram(DiagramArgs),
}

/// "n-rich" ↦ 0, "b-rich" ↦ 1, otherwise a number in [0, 1].
fn parse_condition(s: &str) -> Result<f64, String> {
    match s {
        "n-rich" => Ok(0.0),
        "b-rich" => Ok(1.0),
        _ => {
            let lambda: f64 = s.parse().map_err(|_| {
                format!("expected n-rich, b-rich, or a number in [0, 1], got {s:?}")
            })?;
            if (0.0..=1.0).contains(&lambda) {
                Ok(lambda)
            } else {
                Err(format!("mixing parameter {lambda} outside [0, 1]"))
            }
        }
    }
}

fn parse_triple(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated numbers, got {s:?}"));
    }
    let mut out = [0.0; 3];
    for (slot, part) in out.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse()
            .map_err(|_| format!("invalid number {part:?}"))?;
    }
    Ok(out)
}

#[derive(Args)]
pub struct FormationArgs {
    /// Project manifest (JSON)
    #[arg(long, value_name = "FILE")]
    pub manifest: PathBuf,
    /// Growth condition: n-rich, b-rich, or a mixing parameter in [0, 1]
    #[arg(long, default_value = "n-rich", value_parser = parse_condition)]
    pub condition: f64,
    /// Lattice-sum tolerance (eV) for corrections computed from the manifest
    #[arg(long, default_value_t = 1e-6, value_name = "EV")]
    pub tol: f64,
    /// Write the CSV here instead of stdout
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Print full floating-point precision instead of 3 decimals
    #[arg(long)]
    pub full_precision: bool,
}

#[derive(Args)]
pub struct CtlArgs {
    /// Project manifest (JSON)
    #[arg(long, value_name = "FILE")]
    pub manifest: PathBuf,
    /// Growth condition for the SVG envelope (levels themselves do not depend on it)
    #[arg(long, default_value = "n-rich", value_parser = parse_condition)]
    pub condition: f64,
    /// Lattice-sum tolerance (eV) for corrections computed from the manifest
    #[arg(long, default_value_t = 1e-6, value_name = "EV")]
    pub tol: f64,
    /// Also render the stable-charge formation-energy envelope to this SVG file
    #[arg(long, value_name = "FILE")]
    pub svg: Option<PathBuf>,
    /// Write the CSV here instead of stdout
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Print full floating-point precision instead of 3 decimals
    #[arg(long)]
    pub full_precision: bool,
}

#[derive(Args)]
pub struct LifetimeArgs {
    /// Plane-wave coefficient file
    #[arg(long, value_name = "FILE")]
    pub wavefunctions: PathBuf,
    /// Spin channel index
    #[arg(long, default_value_t = 0)]
    pub spin: usize,
    /// Occupied (initial) band index
    #[arg(long)]
    pub band_initial: usize,
    /// Empty (final) band index
    #[arg(long)]
    pub band_final: usize,
    /// Emission energy (eV); defaults to the eigenvalue gap at the first k-point
    #[arg(long, value_name = "EV")]
    pub e_zpl: Option<f64>,
    /// Host refractive index at the emission energy
    #[arg(long, default_value_t = 2.1)]
    pub refractive_index: f64,
    /// Rate normalization
    #[arg(long, value_enum, default_value_t = ConventionArg::AsPrinted)]
    pub convention: ConventionArg,
    /// Write the CSV here instead of stdout
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Print full floating-point precision instead of 3 decimals
    #[arg(long)]
    pub full_precision: bool,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum ConventionArg {
    /// Cubic-frequency oscillator form
    AsPrinted,
    /// Einstein-A normalization (twice the as-printed rate)
    StandardA,
}

impl From<ConventionArg> for LifetimeConvention {
    fn from(c: ConventionArg) -> Self {
        match c {
            ConventionArg::AsPrinted => LifetimeConvention::AsPrinted,
            ConventionArg::StandardA => LifetimeConvention::StandardA,
        }
    }
}

#[derive(Args)]
pub struct HyperfineArgs {
    /// Net spin-density grid (↑ − ↓, Å⁻³)
    #[arg(long, value_name = "FILE")]
    pub spin_density: PathBuf,
    /// Isotope symbol: 14N, 15N, 10B, 11B, 13C, or 1H
    #[arg(long)]
    pub isotope: String,
    /// Nucleus position as fractional coordinates a,b,c
    #[arg(long, value_parser = parse_triple, value_name = "A,B,C", allow_hyphen_values = true)]
    pub position: [f64; 3],
    /// Spin multiplicity 2S+1 of the electronic state
    #[arg(long)]
    pub multiplicity: u32,
    /// Write the CSV here instead of stdout
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Print full floating-point precision instead of 3 decimals
    #[arg(long)]
    pub full_precision: bool,
}

#[derive(Args)]
pub struct ZfsArgs {
    /// Occupied orbital density grid as up:FILE or down:FILE; repeat per orbital
    #[arg(long = "orbital", required = true, value_name = "SPIN:FILE")]
    pub orbitals: Vec<String>,
    /// Spin multiplicity 2S+1 of the electronic state
    #[arg(long)]
    pub multiplicity: u32,
    /// Write the CSV here instead of stdout
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Print full floating-point precision instead of 3 decimals
    #[arg(long)]
    pub full_precision: bool,
}

#[derive(Args)]
pub struct CorrectionArgs {
    /// Defect supercell structure file
    #[arg(long, value_name = "FILE")]
    pub structure: PathBuf,
    /// Defect charge state
    #[arg(long, allow_hyphen_values = true)]
    pub charge: i32,
    /// Dielectric response: one value (isotropic) or nine row-major tensor values
    #[arg(long, value_name = "E11[,...]")]
    pub epsilon: String,
    /// Far-field potential offset between defect and bulk cells (V)
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub delta_v: f64,
    /// Lattice-sum convergence tolerance (eV)
    #[arg(long, default_value_t = 1e-6, value_name = "EV")]
    pub tol: f64,
    /// Write the CSV here instead of stdout
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Print full floating-point precision instead of 3 decimals
    #[arg(long)]
    pub full_precision: bool,
}

#[derive(Args)]
pub struct ScreenArgs {
    /// Project manifest (JSON)
    #[arg(long, value_name = "FILE")]
    pub manifest: PathBuf,
    /// Lattice-sum tolerance (eV) for corrections computed from the manifest
    #[arg(long, default_value_t = 1e-6, value_name = "EV")]
    pub tol: f64,
    /// Write the JSON report here instead of stdout
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
}

#[derive(Args)]
pub struct DiagramArgs {
    /// Project manifest (JSON)
    #[arg(long, value_name = "FILE")]
    pub manifest: PathBuf,
    /// Lattice-sum tolerance (eV) for corrections computed from the manifest
    #[arg(long, default_value_t = 1e-6, value_name = "EV")]
    pub tol: f64,
    /// Write the SVG here instead of stdout
    #[arg(long, value_name = "FILE")]
    pub svg: Option<PathBuf>,
}
