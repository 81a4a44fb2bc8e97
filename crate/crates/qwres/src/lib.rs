//! Command-line interface over the qwres-core library: model
//! construction, simulation, resonance computation, resonance
//! expansion, long-time observables, verification suites, and
//! plot-data emission.
//!
//! Exit codes: 0 on success, 1 on domain errors (bad input, bad
//! parameters, inadmissible walks), 2 when a verification-style check
//! fails.

pub mod commands;
pub mod io;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use qwres_core::walk::IntervalZ;
use std::ffi::OsString;
use std::path::PathBuf;

const AFTER_HELP: &str = "CSV formats:
  simulate --emit-plotdata: header `x,n,amp`, one row per site and step,
      amp = ((|L|^2 + |R|^2))^(1/2) of the evolved state at that site/step.
  observe --emit-plotdata: header `n,survival,c_plus,c_minus,flat_norm`,
      survival = squared-norm fraction inside J, c_plus/c_minus = sharp-cut
      mover masses, flat_norm = squared norm of the flat remainder.

JSON conventions: complex numbers are [re, im] pairs; walk specs are
{\"coins\":[{\"x\":0,\"matrix\":[[[re,im],[re,im]],[[re,im],[re,im]]]},
{\"x\":5,\"rotation\":0.7071}]}; state specs are
{\"amplitudes\":[{\"x\":1,\"L\":[re,im],\"R\":[re,im]}]}.

QWRES_THREADS caps the thread pool used by sweep subcommands; all other
paths are single-threaded.";

/// Parsed command line.
#[derive(Debug, Parser)]
#[command(name = "qwres", version, about = "Resonances of finitely perturbed quantum walks on the line", after_long_help = AFTER_HELP)]
pub struct Cli {
    /// The subcommand to run.
    #[command(subcommand)]
    pub cmd: Cmd,
}

/// Resonance computation method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// Roots of the resonance polynomial (default).
    Sigma,
    /// Eigenvalues of the cut-off evolution on the perturbation hull.
    Cutoff,
    /// Both, cross-checked against each other (exit 2 on disagreement).
    Both,
}

/// Verification suite selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    /// The full acceptance suite.
    Paper,
    /// A fast smoke subset.
    Quick,
}

/// A `--r SITE=VALUE` occurrence for the triple barrier.
#[derive(Debug, Clone)]
pub struct SiteValue {
    /// The site.
    pub site: i64,
    /// The rotation parameter at that site.
    pub value: f64,
}

fn parse_site_value(s: &str) -> Result<SiteValue, String> {
    let (site, value) = s
        .split_once('=')
        .ok_or_else(|| format!("expected SITE=VALUE, got {s:?}"))?;
    Ok(SiteValue {
        site: site
            .trim()
            .parse()
            .map_err(|e| format!("bad site {site:?}: {e}"))?,
        value: value
            .trim()
            .parse()
            .map_err(|e| format!("bad value {value:?}: {e}"))?,
    })
}

/// Comma-separated float list (single argument).
#[derive(Debug, Clone)]
pub struct FloatList(pub Vec<f64>);

fn parse_float_list_arg(s: &str) -> Result<FloatList, String> {
    io::parse_float_list(s).map(FloatList)
}

/// All subcommands.
#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Evolve a state for n steps; print the final state as JSON.
    Simulate {
        /// Walk spec JSON file.
        walk: PathBuf,
        /// State spec JSON file.
        state: PathBuf,
        /// Number of steps.
        #[arg(short = 'n', long = "steps")]
        n: usize,
        /// Write a heatmap CSV (`x,n,amp`) of the whole trajectory.
        #[arg(long, value_name = "FILE")]
        emit_plotdata: Option<PathBuf>,
        /// Write the final state here instead of stdout.
        #[arg(short, long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Compute the resonance set with multiplicities and summary.
    Resonances {
        /// Walk spec JSON file.
        walk: PathBuf,
        /// Computation method.
        #[arg(long, value_enum, default_value_t = Method::Sigma)]
        method: Method,
        /// Residual tolerance for accepting a root.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Compute incoming resonances instead of outgoing ones.
        #[arg(long)]
        incoming: bool,
        /// Write the JSON here instead of stdout.
        #[arg(short, long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Build the resonant state (or Jordan chain) at a given resonance.
    States {
        /// Walk spec JSON file.
        walk: PathBuf,
        /// The resonance as RE,IM.
        #[arg(long, value_parser = io::parse_complex, allow_hyphen_values = true)]
        lambda: Complex64,
        /// Chain length m (1 = the resonant state alone).
        #[arg(long, default_value_t = 1)]
        chain: usize,
        /// Window A,B to realize the states on (default: solver choice).
        #[arg(long, value_parser = io::parse_interval, allow_hyphen_values = true)]
        window: Option<IntervalZ>,
        /// Write the JSON here instead of stdout.
        #[arg(short, long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Expand the cutoff of a state over Jordan chains and the zero space.
    Expand {
        /// Walk spec JSON file.
        walk: PathBuf,
        /// State spec JSON file.
        state: PathBuf,
        /// The interval J as A,B; must cover the perturbation hull.
        #[arg(long = "J", value_parser = io::parse_interval, allow_hyphen_values = true)]
        j: IntervalZ,
        /// Also evaluate the expansion's time-evolution formula at step n.
        #[arg(long, value_name = "N")]
        predict: Option<i64>,
        /// Check the prediction against direct evolution (exit 2 on failure).
        #[arg(long)]
        verify: bool,
        /// Residual tolerance of the resonance solver.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Write the JSON here instead of stdout.
        #[arg(short, long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Long-time observables: survival series, decay fit, mean survival
    /// time, weak-limit weights, position distribution.
    Observe {
        /// Walk spec JSON file.
        walk: PathBuf,
        /// State spec JSON file.
        state: PathBuf,
        /// Number of steps to evolve.
        #[arg(long)]
        n_max: usize,
        /// The interval J as A,B.
        #[arg(long = "J", value_parser = io::parse_interval, allow_hyphen_values = true)]
        j: IntervalZ,
        /// Include decay diagnostics in the summary.
        #[arg(long)]
        survival: bool,
        /// Include the mean survival time and its a-priori bounds.
        #[arg(long)]
        tau: bool,
        /// Include the weak-limit weights at n_max.
        #[arg(long)]
        weak_limit: bool,
        /// Include the position distribution at step N.
        #[arg(long, value_name = "N")]
        mu: Option<i64>,
        /// Write the time-series CSV (`n,survival,c_plus,c_minus,flat_norm`).
        #[arg(long, value_name = "FILE")]
        emit_plotdata: Option<PathBuf>,
        /// Write the JSON summary here instead of stdout.
        #[arg(short, long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Construct a named model with its closed-form ground truth.
    Gallery {
        /// The model to build.
        #[command(subcommand)]
        model: GalleryCmd,
    },
    /// Sweep the rank-one perturbation family over a (θ, ε) grid and
    /// track the splitting of one resonance.
    Perturb {
        /// Walk spec JSON file.
        walk: PathBuf,
        /// Number of equispaced θ values in [0, 2π).
        #[arg(long, default_value_t = 16)]
        theta_grid: usize,
        /// Comma-separated ε values.
        #[arg(long, value_parser = parse_float_list_arg, default_value = "1e-3,1e-4,1e-5")]
        eps: FloatList,
        /// Resonance to track: `lambda0` (largest modulus) or RE,IM.
        #[arg(long, default_value = "lambda0", allow_hyphen_values = true)]
        track: String,
        /// Residual tolerance of the resonance solver.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Write the JSON here instead of stdout.
        #[arg(short, long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Run a verification suite; one line per check, exit 2 on failure.
    Verify {
        /// Which suite to run.
        #[arg(long, value_enum, default_value_t = Suite::Paper)]
        suite: Suite,
    },
    /// Print the resonance polynomial coefficients and Δ.
    Sigma {
        /// Walk spec JSON file.
        walk: PathBuf,
        /// Write the JSON here instead of stdout.
        #[arg(short, long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
}

/// Gallery models.
#[derive(Debug, Subcommand)]
pub enum GalleryCmd {
    /// Two rotation barriers at 0 and k.
    DoubleBarrier {
        /// Barrier separation k ≥ 1.
        #[arg(long)]
        k: i64,
        /// Rotation parameter r ∈ (0,1).
        #[arg(long)]
        r: f64,
        /// Write the walk spec here (ground truth still prints to stdout).
        #[arg(short, long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Three rotation barriers at −1, 0, 1.
    TripleBarrier {
        /// Repeatable SITE=VALUE rotation parameters (sites −1, 0, 1).
        #[arg(long = "r", value_parser = parse_site_value, allow_hyphen_values = true, value_name = "SITE=VALUE")]
        r_sites: Vec<SiteValue>,
        /// Rotation parameter at site −1.
        #[arg(long = "r-1", value_name = "VALUE")]
        r_m1: Option<f64>,
        /// Rotation parameter at site 0.
        #[arg(long = "r0", value_name = "VALUE")]
        r_0: Option<f64>,
        /// Rotation parameter at site 1.
        #[arg(long = "r1", value_name = "VALUE")]
        r_1: Option<f64>,
        /// Write the walk spec here (ground truth still prints to stdout).
        #[arg(short, long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
}

/// Parses argv and runs the selected subcommand, returning the process
/// exit code (0 success, 1 domain error, 2 verification failure).
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let ok = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = e.print();
            return if ok { 0 } else { 1 };
        }
    };
    match commands::dispatch(cli) {
        Ok(()) => 0,
        Err(f) => {
            let label = match f.code() {
                2 => "verification failure",
                _ => "error",
            };
            eprintln!("{label}: {}", f.message());
            f.code()
        }
    }
}
