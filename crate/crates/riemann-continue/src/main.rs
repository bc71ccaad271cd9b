//! riemann-continue: command-line driver for continuation, extrapolation,
//! Padé, singularity elimination and the Painlevé I benchmark.

mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Fatal errors exit 1; partial failures exit 2 after writing their report.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn fatal(message: impl Into<String>) -> Self {
        Failure { code: 1, message: message.into() }
    }
}

#[derive(Parser, Debug)]
#[command(name = "riemann-continue", version, about = "Analytic continuation of truncated power series")]
pub struct Cli {
    /// Working precision in decimal digits
    #[arg(long, global = true, env = "RC_PRECISION", default_value_t = 50)]
    pub precision: u32,
    /// Main output file (stdout when absent)
    #[arg(long, short, global = true)]
    pub out: Option<PathBuf>,
    /// Secondary CSV output, for commands that produce plot data
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct MapArgs {
    /// Map name, e.g. nome, two-cut, omega-z, conjugate-puncture
    #[arg(long)]
    pub map: String,
    /// Map parameter as key=value (theta=pi/3, a=1/2, k=6, base=one-cut, ...)
    #[arg(long = "param", value_parser = parse_kv)]
    pub params: Vec<(String, String)>,
}

fn parse_kv(s: &str) -> Result<(String, String), String> {
    s.split_once('=').map(|(k, v)| (k.trim().to_string(), v.trim().to_string())).ok_or_else(|| format!("expected key=value, got {s:?}"))
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Map catalog and map series
    Maps {
        #[command(subcommand)]
        action: MapsAction,
    },
    /// Evaluate the optimal reconstruction at points
    Continue {
        #[arg(long)]
        coeffs: PathBuf,
        #[command(flatten)]
        map: MapArgs,
        /// Evaluation point, e.g. 0.9 or 3+0.1i (repeatable)
        #[arg(long = "at", required = true, allow_hyphen_values = true)]
        at: Vec<String>,
        /// Points are disk coordinates z rather than ω
        #[arg(long)]
        disk: bool,
    },
    /// Predict further Maclaurin coefficients
    Extrapolate {
        #[arg(long)]
        coeffs: PathBuf,
        #[command(flatten)]
        map: MapArgs,
        /// Number of coefficients to produce
        #[arg(long)]
        order: usize,
    },
    /// |reconstruction| on a circle, as CSV theta,abs_value
    ScanCircle {
        #[arg(long)]
        coeffs: PathBuf,
        #[command(flatten)]
        map: MapArgs,
        #[arg(long)]
        radius: String,
        #[arg(long, default_value_t = 1024)]
        samples: usize,
    },
    /// Padé approximant [m/n], optionally with its pole report
    Pade {
        #[arg(long)]
        coeffs: PathBuf,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        poles: bool,
    },
    /// Compare Padé pole clouds with and without a probe singularity
    ProbePade {
        #[arg(long)]
        coeffs: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        omega0: String,
        #[arg(long, allow_hyphen_values = true)]
        alpha: String,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Remove a known singularity by L_β and a Chebyshev composition
    Eliminate {
        #[arg(long)]
        coeffs: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        omega0: String,
        #[arg(long, allow_hyphen_values = true)]
        alpha: String,
        /// "auto" or a value
        #[arg(long, default_value = "auto", allow_hyphen_values = true)]
        beta: String,
        /// phi0, phi1 or phi2
        #[arg(long, default_value = "phi0")]
        map: String,
        /// The singular part carries ln(1−ω/ω₀)
        #[arg(long)]
        log: bool,
    },
    /// Score singularity hypotheses on a grid
    Probe {
        #[arg(long)]
        coeffs: PathBuf,
        /// Comma-separated candidate locations
        #[arg(long, allow_hyphen_values = true, value_delimiter = ',')]
        omega0_grid: Vec<String>,
        /// Comma-separated candidate exponents
        #[arg(long, allow_hyphen_values = true, value_delimiter = ',')]
        alpha_grid: Vec<String>,
        /// Also try each exponent with a logarithm
        #[arg(long)]
        with_log: bool,
    },
    /// Painlevé I tritronquée: resummation and pole constants
    PainleveP1 {
        #[arg(long, default_value_t = 200)]
        terms: usize,
        #[arg(long, default_value = "omega-z")]
        map: String,
        #[arg(long = "param", value_parser = parse_kv)]
        params: Vec<(String, String)>,
        #[arg(long, default_value_t = 10)]
        poles: usize,
        /// Real point where resummation hands over to the ODE
        #[arg(long, default_value_t = 10.0)]
        x0: f64,
        /// Write the Borel coefficients to this file as well
        #[arg(long)]
        borel: Option<PathBuf>,
    },
    /// Radius and boundary profile from the coefficient tail
    RootTest {
        #[arg(long)]
        coeffs: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
pub enum MapsAction {
    /// All maps with their acceleration moduli
    List,
    /// Series of φ (or ψ) for one map
    Series {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long)]
        order: usize,
        /// Emit ψ instead of φ
        #[arg(long)]
        psi: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let argv: Vec<String> = std::env::args().skip(1).collect();
    match commands::run(&cli, argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("riemann-continue: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
