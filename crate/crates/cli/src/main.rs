//! Command-line front end for the blaschke-div library. Every successful run
//! records a manifest next to its primary output so that `rerun` can
//! reproduce the outputs byte for byte.
//!
//! Exit codes: 2 validation failure, 3 numeric failure, 4 exhausted budget.

mod commands;
mod error;
mod parse;
mod spec;

use std::path::PathBuf;

use blaschke_div_core::io::RunManifest;
use clap::{Args, Parser, Subcommand};

use crate::commands::Outcome;
use crate::error::CliError;

#[derive(Parser)]
#[command(
    name = "blaschke-div",
    version,
    about = "Divisor correspondences, rays, Fatou charts and dimension estimates on the unit disk",
    propagate_version = true
)]
struct Cli {
    /// Seed recorded in the run manifest (runs are deterministic; the seed
    /// pins the record).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Manifest path (defaults to the primary output with a .manifest.json
    /// extension).
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Apply the interior divisor correspondence (or its inverse) and audit
    /// the round trip.
    Psi(PsiArgs),
    /// Run a degeneration schedule for a divisor with escaping points and
    /// tabulate sup deviations.
    Degenerate(DegenerateArgs),
    /// Estimate the Hausdorff dimension of a conformal repelling system or a
    /// quadratic Julia set.
    Dim(DimArgs),
    /// Trace an external ray of a polynomial or an internal ray of a scheme
    /// divisor to CSV.
    Ray(RayArgs),
    /// Sample Fatou charts and horn maps, or check the perturbed return
    /// multiplier.
    Fatou(FatouArgs),
    /// Render an escape-time or basin raster as binary PGM.
    Raster(RasterArgs),
    /// Validate a mapping scheme and report cycles, depths, periods and
    /// marking counts.
    SchemeInfo(SchemeInfoArgs),
    /// Stretch the boundary factors of a scheme divisor along internal rays.
    Stretch(StretchArgs),
    /// Track a prerepelling point from a base scheme divisor to a perturbed
    /// one.
    Track(TrackArgs),
    /// Move a hyperbolic set holomorphically to a nearby polynomial.
    Motion(MotionArgs),
    /// Re-execute a recorded run manifest, reproducing its outputs byte for
    /// byte.
    Rerun(RerunArgs),
}

impl Command {
    fn dispatch(&self) -> Result<Outcome, CliError> {
        match self {
            Command::Psi(args) => commands::run_psi(args),
            Command::Degenerate(args) => commands::run_degenerate(args),
            Command::Dim(args) => commands::run_dim(args),
            Command::Ray(args) => commands::run_ray(args),
            Command::Fatou(args) => commands::run_fatou(args),
            Command::Raster(args) => commands::run_raster(args),
            Command::SchemeInfo(args) => commands::run_scheme_info(args),
            Command::Stretch(args) => commands::run_stretch(args),
            Command::Track(args) => commands::run_track(args),
            Command::Motion(args) => commands::run_motion(args),
            Command::Rerun(_) => unreachable!("rerun is handled before dispatch"),
        }
    }
}

#[derive(Args)]
pub struct PsiArgs {
    /// Divisor JSON file ({"entries": [{"re", "im", "mult"}, ...]}).
    #[arg(long)]
    pub divisor: PathBuf,
    /// Apply the inverse correspondence instead of the forward one.
    #[arg(long)]
    pub inverse: bool,
    /// Maximum admissible round-trip residual.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Output divisor JSON path; the audit sidecar lands next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct DegenerateArgs {
    /// Target divisor JSON file (alternative to --scheme/--divisor/--vertex).
    #[arg(long)]
    pub target: Option<PathBuf>,
    /// Mapping-scheme JSON file, used with --divisor and --vertex.
    #[arg(long)]
    pub scheme: Option<PathBuf>,
    /// Scheme-divisor JSON file whose factor at --vertex is degenerated.
    #[arg(long)]
    pub divisor: Option<PathBuf>,
    /// Vertex id selecting the factor divisor.
    #[arg(long)]
    pub vertex: Option<String>,
    /// Number of schedule rows, log-spaced from n = 10 to n = 10^4.
    #[arg(long, default_value_t = 4)]
    pub steps: usize,
    /// Sup-deviation threshold the final row must reach.
    #[arg(long, default_value_t = 1e-3)]
    pub final_tol: f64,
    /// Exclusion radius around escaping points when sampling the compact set.
    #[arg(long, default_value_t = 0.5)]
    pub compact_margin: f64,
    /// Output CSV path with columns (n, sup_deviation).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct DimArgs {
    /// Repelling-system spec JSON (region, branches, optional depth/bracket).
    #[arg(long)]
    pub system: Option<PathBuf>,
    /// Quadratic Julia set given as z^2+c with a concrete c.
    #[arg(long)]
    pub julia: Option<String>,
    /// Cylinder depth for the pressure computation (default 12 for systems,
    /// 10 for Julia sets).
    #[arg(long)]
    pub depth: Option<u32>,
    /// Dimension bracket lo,hi for the pressure root (default 0.05,1.95).
    #[arg(long)]
    pub bracket: Option<String>,
    /// Output report JSON path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct RayArgs {
    /// Polynomial z^d+c for an external ray.
    #[arg(long)]
    pub poly: Option<String>,
    /// External angle in turns, as a fraction num/den.
    #[arg(long)]
    pub angle: Option<String>,
    /// Potential cutoff; values at or below 1e-8 switch on landing detection.
    #[arg(long, default_value_t = 1e-9)]
    pub g_min: f64,
    /// Scheme-divisor JSON file for an internal ray.
    #[arg(long)]
    pub divisor: Option<PathBuf>,
    /// Vertex id at which the internal ray is traced.
    #[arg(long)]
    pub vertex: Option<String>,
    /// Boundary point marking the internal ray (complex literal).
    #[arg(long)]
    pub boundary_point: Option<String>,
    /// Lower potential bound for the internal ray (interior potentials are
    /// negative).
    #[arg(long, default_value_t = -4.0, allow_negative_numbers = true)]
    pub t_lo: f64,
    /// Upper potential bound for the internal ray.
    #[arg(long, default_value_t = -0.01, allow_negative_numbers = true)]
    pub t_hi: f64,
    /// Preperiodicity search horizon for the boundary point.
    #[arg(long, default_value_t = 64)]
    pub horizon: u32,
    /// Output CSV path with columns (potential, re, im).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct FatouArgs {
    /// Built-in local map; currently "moebius" (z / (1 - z)).
    #[arg(long)]
    pub map: Option<String>,
    /// Series coefficients of the local map, ascending from the constant
    /// term, as a semicolon-separated list of complex literals (e.g.
    /// "0;1;1" for z + z^2).
    #[arg(long)]
    pub coeffs: Option<String>,
    /// Rotation number numerator p of the parabolic multiplier e^{2 pi i p/q}.
    #[arg(long, default_value_t = 0)]
    pub p: u32,
    /// Rotation number denominator q.
    #[arg(long, default_value_t = 1)]
    pub q: u32,
    /// Perturbation parameter alpha (complex literal); omit for the
    /// unperturbed parabolic.
    #[arg(long)]
    pub alpha: Option<String>,
    /// Attracting petal index in 0..q.
    #[arg(long, default_value_t = 0)]
    pub petal: u32,
    /// Number of chart or horn samples.
    #[arg(long, default_value_t = 64)]
    pub samples: usize,
    /// Also sample the horn map on the overlap band.
    #[arg(long)]
    pub horn: bool,
    /// Height band lo,hi for the horn map (default 8,12).
    #[arg(long)]
    pub band: Option<String>,
    /// Check the return multiplier against e^{-2 pi i / alpha} (requires
    /// --alpha).
    #[arg(long)]
    pub return_check: bool,
    /// Output report JSON path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct RasterArgs {
    /// Polynomial z^d+c to iterate.
    #[arg(long)]
    pub poly: String,
    /// View window re_lo,re_hi,im_lo,im_hi.
    #[arg(long, default_value = "-2,2,-2,2")]
    pub window: String,
    /// Raster width in pixels.
    #[arg(long, default_value_t = 512)]
    pub width: usize,
    /// Raster height in pixels.
    #[arg(long, default_value_t = 512)]
    pub height: usize,
    /// Iteration budget per pixel.
    #[arg(long, default_value_t = 256)]
    pub budget: u32,
    /// Attracting point (complex literal); switches to basin rendering.
    #[arg(long)]
    pub attractor: Option<String>,
    /// Capture radius around the attractor for basin rendering.
    #[arg(long, default_value_t = 1e-3)]
    pub capture_radius: f64,
    /// Output binary PGM (P5) path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct SchemeInfoArgs {
    /// Mapping-scheme JSON file ({"vertices": [{"id", "sigma", "delta"}]}).
    #[arg(long)]
    pub scheme: PathBuf,
    /// Output report JSON path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct StretchArgs {
    /// Scheme-divisor JSON file to stretch.
    #[arg(long)]
    pub divisor: PathBuf,
    /// Stretch amplitude; the output stays within 2*delta of the input.
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    /// Output scheme-divisor JSON path; stretch records land in the audit
    /// sidecar.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct TrackArgs {
    /// Base scheme-divisor JSON file.
    #[arg(long)]
    pub base: PathBuf,
    /// Perturbed scheme-divisor JSON file.
    #[arg(long)]
    pub perturbed: PathBuf,
    /// Vertex id owning the tracked point.
    #[arg(long)]
    pub vertex: String,
    /// Prerepelling point in the base divisor (complex literal).
    #[arg(long)]
    pub point: String,
    /// Iterations before the point reaches the repelling cycle.
    #[arg(long, default_value_t = 0)]
    pub l: u32,
    /// Period of the repelling cycle.
    #[arg(long, default_value_t = 1)]
    pub n: u32,
    /// Output JSON path for the tracked point.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct MotionArgs {
    /// Base polynomial z^d+c.
    #[arg(long)]
    pub base: String,
    /// Target polynomial of the same degree.
    #[arg(long)]
    pub target: String,
    /// Hyperbolic set points as a semicolon-separated list of complex
    /// literals.
    #[arg(long)]
    pub points: String,
    /// Expansion certificate order: |(f^m)'| > 1 is required on the set.
    #[arg(long, default_value_t = 1)]
    pub m: u32,
    /// Continuation step bound between neighbouring parameters.
    #[arg(long, default_value_t = 0.2)]
    pub radius: f64,
    /// Output JSON path for the moved points.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct RerunArgs {
    /// Manifest JSON recorded by a previous run.
    pub manifest: PathBuf,
}

fn main() {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = Cli::parse();
    if let Err(e) = run(cli, argv) {
        eprintln!("error: {}", e.message());
        std::process::exit(e.exit_code());
    }
}

fn run(cli: Cli, argv: Vec<String>) -> Result<(), CliError> {
    if let Command::Rerun(args) = &cli.command {
        return rerun(args);
    }
    let outcome = cli.command.dispatch()?;
    let manifest_path = cli.manifest.clone().unwrap_or_else(|| {
        PathBuf::from(&outcome.outputs[0]).with_extension("manifest.json")
    });
    let manifest = RunManifest {
        subcommand: outcome.subcommand.to_string(),
        argv,
        inputs: outcome.inputs,
        parameters: outcome.parameters,
        outputs: outcome.outputs,
        seed: cli.seed,
    };
    manifest.write(&manifest_path)?;
    Ok(())
}

fn rerun(args: &RerunArgs) -> Result<(), CliError> {
    let manifest = RunManifest::load(&args.manifest)
        .map_err(|e| CliError::Validation(format!("{}: {e}", args.manifest.display())))?;
    if manifest.subcommand == "rerun" {
        return Err(CliError::Validation("manifest records a rerun; nothing to replay".into()));
    }
    let argv = manifest.argv.clone();
    let replayed = Cli::try_parse_from(
        std::iter::once("blaschke-div".to_string()).chain(argv.iter().cloned()),
    )
    .map_err(|e| CliError::Validation(format!("manifest argv does not parse: {e}")))?;
    if matches!(replayed.command, Command::Rerun(_)) {
        return Err(CliError::Validation("nested rerun manifests are not supported".into()));
    }
    run(replayed, argv)
}
