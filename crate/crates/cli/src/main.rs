//! Command-line pipeline for polyline-array near-field imaging.
//!
//! Subcommands: `design` (geometry + sampling/resolution report),
//! `simulate` (point-scatterer echoes into a PLSC data cube),
//! `reconstruct` (data cube into a PLSC image volume), `metrics`
//! (PSF figures and image similarity), `export` (PGM projection and CSV
//! cuts), and `bench` (wall-time comparison of the three algorithms).
//!
//! Exit codes: 0 success, 2 config, 3 io, 4 dimension mismatch, 5 numeric.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod error;

#[derive(Parser)]
#[command(name = "polyscan", version, about = "Polyline-array near-field imaging pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an array geometry and report sampling bounds and resolutions.
    Design {
        /// JSON design config (polyline + acquisition).
        #[arg(long)]
        config: PathBuf,
        /// Output geometry document (JSON).
        #[arg(long)]
        out_geometry: PathBuf,
        /// Also write the report JSON here (it always prints to stdout).
        #[arg(long)]
        out_report: Option<PathBuf>,
    },
    /// Synthesize a scattered-field data cube from a point-scatterer scene.
    Simulate {
        #[arg(long)]
        geometry: PathBuf,
        /// Scene JSON (array of {x, y, z, amp_re, amp_im}).
        #[arg(long)]
        scene: Option<PathBuf>,
        /// Use the built-in five-point cross scene.
        #[arg(long)]
        default_scene: bool,
        /// Output data cube (PLSC).
        #[arg(long)]
        out: PathBuf,
        /// Add complex white Gaussian noise at this SNR (dB).
        #[arg(long)]
        snr_db: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Apply 1/R^2 (monostatic) or 1/(R_T R_R) (multistatic) amplitude decay.
        #[arg(long)]
        spreading_loss: bool,
    },
    /// Reconstruct an image volume from a data cube.
    Reconstruct {
        #[arg(long)]
        geometry: PathBuf,
        /// Input data cube (PLSC).
        #[arg(long)]
        data: PathBuf,
        /// omegak-nufft-bp, omegak-bp, or direct-bp.
        #[arg(long)]
        algorithm: String,
        /// JSON grid config ({x, y, z} each {min, max, count}).
        #[arg(long)]
        grid: PathBuf,
        /// Output image volume (PLSC).
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 2)]
        pad_factor: usize,
        /// Scan window: rect or hann.
        #[arg(long, default_value = "rect")]
        window: String,
        /// k-integral rule: left_riemann or trapezoid.
        #[arg(long, default_value = "left_riemann")]
        quadrature: String,
    },
    /// Analyze an image: PSF widths, sidelobes, optional comparison.
    Metrics {
        #[arg(long)]
        image: PathBuf,
        /// Ground-truth peak position "x,y,z" (m).
        #[arg(long)]
        expected_peak: Option<String>,
        /// Second image for similarity metrics.
        #[arg(long)]
        compare: Option<PathBuf>,
        /// Mask floor for similarity (dB).
        #[arg(long, default_value_t = -20.0)]
        db_floor: f64,
        /// Also write the report JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export a max-intensity projection as PGM plus optional CSV cuts.
    Export {
        #[arg(long)]
        image: PathBuf,
        /// Projection axis: x, y, or z.
        #[arg(long, default_value = "y")]
        axis: String,
        #[arg(long)]
        out: PathBuf,
        /// Displayed dynamic range (dB).
        #[arg(long, default_value_t = 20.0)]
        db_range: f64,
        /// Write through-peak cuts to <prefix>.x.csv / .y.csv / .z.csv.
        #[arg(long)]
        cuts_prefix: Option<PathBuf>,
    },
    /// Time the reconstruction algorithms on one setup and emit CSV.
    Bench {
        #[arg(long)]
        config: PathBuf,
        /// Also write the CSV here (it always prints to stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), error::CliError> {
    match cli.command {
        Command::Design {
            config,
            out_geometry,
            out_report,
        } => commands::design(&config, &out_geometry, out_report.as_deref()),
        Command::Simulate {
            geometry,
            scene,
            default_scene,
            out,
            snr_db,
            seed,
            spreading_loss,
        } => commands::simulate(
            &geometry,
            scene.as_deref(),
            default_scene,
            &out,
            snr_db,
            seed,
            spreading_loss,
        ),
        Command::Reconstruct {
            geometry,
            data,
            algorithm,
            grid,
            out,
            pad_factor,
            window,
            quadrature,
        } => commands::reconstruct(
            &geometry,
            &data,
            &algorithm,
            &grid,
            &out,
            pad_factor,
            &window,
            &quadrature,
        ),
        Command::Metrics {
            image,
            expected_peak,
            compare,
            db_floor,
            out,
        } => commands::metrics_cmd(
            &image,
            expected_peak.as_deref(),
            compare.as_deref(),
            db_floor,
            out.as_deref(),
        ),
        Command::Export {
            image,
            axis,
            out,
            db_range,
            cuts_prefix,
        } => commands::export(&image, &axis, &out, db_range, cuts_prefix.as_deref()),
        Command::Bench { config, out } => commands::bench(&config, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
