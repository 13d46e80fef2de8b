use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mitdsm_core::Section;

mod commands;

/// Synthetic MIT measurements and direct sampling reconstruction.
#[derive(Debug, Parser)]
#[command(name = "mitdsm", version, about)]
struct Cli {
    /// Worker threads for the parallel stages (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate coil measurements for a scene.
    Forward(ForwardArgs),
    /// Reconstruct the index field from measurement files.
    Reconstruct(ReconstructArgs),
    /// Run the numerical oracle battery.
    Validate(ValidateArgs),
    /// Point spread function of a single dipole on a cross-section.
    Psf(PsfArgs),
}

#[derive(Debug, Args)]
pub struct ForwardArgs {
    #[arg(long)]
    pub scene: PathBuf,
    /// Output directory for coil files and manifest.txt.
    #[arg(long)]
    pub out: PathBuf,
    /// Relative noise level ε.
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of receivers; overrides the scene's `receivers`.
    #[arg(long)]
    pub grid_size: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    #[arg(long)]
    pub scene: PathBuf,
    /// Directory holding coil_00.dat, coil_01.dat, …
    #[arg(long)]
    pub meas: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub gamma: u32,
    #[arg(long, default_value_t = 4)]
    pub power: u32,
    #[arg(long, default_value_t = 0.05)]
    pub pitch: f64,
    /// Cross-section raster to extract, e.g. `z=0`; repeatable.
    #[arg(long, value_parser = parse_section)]
    pub section: Vec<Section>,
    /// Sample only the (single) requested section instead of the whole ball.
    /// Normalization then uses the section maximum.
    #[arg(long, requires = "section")]
    pub section_only: bool,
    /// Also write index.vtk (legacy structured points).
    #[arg(long)]
    pub vtk: bool,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Report file (TSV); printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PsfArgs {
    /// Source point, `x,y,z`.
    #[arg(long, value_parser = parse_vec3)]
    pub y: [f64; 3],
    /// Real polarization, `ax,ay,az`; also used as β.
    #[arg(long, value_parser = parse_vec3, default_value = "1,0,0")]
    pub alpha: [f64; 3],
    #[arg(long, default_value_t = 4)]
    pub gamma: u32,
    #[arg(long, value_parser = parse_section, default_value = "z=0")]
    pub section: Section,
    #[arg(long, default_value_t = 0.02)]
    pub pitch: f64,
    /// Radius of the sampled disc.
    #[arg(long, default_value_t = 1.0)]
    pub domain_radius: f64,
    /// Measurement sphere radius R.
    #[arg(long, default_value_t = 1.5)]
    pub sphere_radius: f64,
    /// Band limit of the Gauss product grid on the sphere.
    #[arg(long, default_value_t = 40)]
    pub band: usize,
    /// CSV raster path; a `.meta` sidecar is written next to it.
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_section(s: &str) -> Result<Section, String> {
    s.parse().map_err(|e: mitdsm_core::Error| e.to_string())
}

fn parse_vec3(s: &str) -> Result<[f64; 3], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("bad number `{t}`")))
        .collect::<Result<_, _>>()?;
    match v.as_slice() {
        [a, b, c] if v.iter().all(|x| x.is_finite()) => Ok([*a, *b, *c]),
        _ => Err(format!("expected three finite numbers `x,y,z`, got `{s}`")),
    }
}

/// Exit status for a failed command: input problems map to 3, anything else
/// to 1.
fn failure_code(err: &anyhow::Error) -> u8 {
    use mitdsm_core::Error as E;
    if err.downcast_ref::<commands::InputError>().is_some() {
        return 3;
    }
    match err.downcast_ref::<E>() {
        Some(
            E::InvalidInput(_)
            | E::SceneParse { .. }
            | E::MissingKey(_)
            | E::MeasurementParse { .. }
            | E::GridMismatch(_)
            | E::DegenerateMeasurement(_)
            | E::InsufficientLMax { .. }
            | E::Io { .. },
        ) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp_millis()
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(3) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(3);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match &cli.command {
        Command::Forward(a) => commands::forward(a),
        Command::Reconstruct(a) => commands::reconstruct(a),
        Command::Validate(a) => commands::validate(a),
        Command::Psf(a) => commands::psf(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(failure_code(&e))
        }
    }
}
