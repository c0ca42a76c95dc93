//! Subcommand implementations.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::de::DeserializeOwned;

use polyscan_core::forward::{self, Scene, SimulateOptions};
use polyscan_core::geometry::{self, GeometryDoc, Modality};
use polyscan_core::metrics;
use polyscan_core::plsc;
use polyscan_core::recon::{self, Algorithm, ImageGrid, ImageVolume, Quadrature, ReconOptions};
use polyscan_core::spectral::ScanWindow;

use crate::config::{BenchConfig, DesignConfig};
use crate::error::CliError;

fn read_json_config<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn write_text_atomic(path: &Path, text: &str) -> Result<(), CliError> {
    plsc::atomic_write(path, text.as_bytes())?;
    Ok(())
}

fn load_geometry(path: &Path) -> Result<GeometryDoc, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    GeometryDoc::from_json(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn default_theta_z(cfg: &DesignConfig) -> f64 {
    cfg.theta_z
        .unwrap_or_else(|| cfg.acquisition.default_theta_z(cfg.polyline.circumradius_r0))
}

pub fn design(
    config: &Path,
    out_geometry: &Path,
    out_report: Option<&Path>,
) -> Result<(), CliError> {
    let cfg: DesignConfig = read_json_config(config)?;
    cfg.acquisition.validate()?;
    let geom = geometry::build_polyline(&cfg.polyline)?;
    let d = cfg.target_dimension_d.unwrap_or(0.5);
    let theta_z = default_theta_z(&cfg);
    let sampling = geometry::check_sampling(&geom, &cfg.acquisition, d, theta_z)?;
    let resolutions = geometry::predict_resolutions(&geom, &cfg.acquisition, theta_z)?;

    let doc = GeometryDoc::new(&geom, &cfg.acquisition);
    write_text_atomic(out_geometry, &doc.to_json())?;

    let report = serde_json::json!({
        "geometry": {
            "elements": geom.elements.len(),
            "channels": geom.channels.len(),
            "theta_h_rad": geom.subtended_angle_theta_h,
            "fingerprint": format!("{:016x}", doc.fingerprint()),
        },
        "sampling": sampling,
        "resolutions": resolutions,
    });
    let pretty = serde_json::to_string_pretty(&report).expect("report serializes");
    println!("{pretty}");
    if let Some(p) = out_report {
        write_text_atomic(p, &pretty)?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn simulate(
    geometry: &Path,
    scene_path: Option<&Path>,
    default_scene: bool,
    out: &Path,
    snr_db: Option<f64>,
    seed: u64,
    spreading_loss: bool,
) -> Result<(), CliError> {
    let doc = load_geometry(geometry)?;
    let geom = doc.geometry();
    let scene = match (scene_path, default_scene) {
        (Some(p), false) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            Scene::from_json(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        (None, true) => Scene::default_cross(),
        _ => {
            return Err(CliError::Config(
                "provide exactly one of --scene <file> or --default-scene".into(),
            ))
        }
    };

    let opts = SimulateOptions {
        spreading_loss,
        ..Default::default()
    };
    let cube = match geom.modality() {
        Modality::Monostatic => forward::simulate_monostatic(&scene, &geom, &doc.acquisition, &opts)?,
        Modality::Multistatic => {
            forward::simulate_multistatic(&scene, &geom, &doc.acquisition, &opts)?
        }
    };
    let cube = match snr_db {
        Some(snr) => forward::add_noise(&cube, snr, seed),
        None => cube,
    };

    let mut provenance = BTreeMap::new();
    provenance.insert("tool".into(), "polyscan simulate".into());
    provenance.insert(
        "geometry_fnv1a".into(),
        format!("{:016x}", doc.fingerprint()),
    );
    if let Some(snr) = snr_db {
        provenance.insert("snr_db".into(), format!("{snr:?}"));
        provenance.insert("seed".into(), seed.to_string());
    }
    plsc::write_datacube(out, &cube, provenance)?;
    eprintln!(
        "wrote {} ({} channels x {} scans x {} freqs)",
        out.display(),
        cube.num_channels(),
        cube.num_scans(),
        cube.num_freqs()
    );
    Ok(())
}

fn parse_window(s: &str) -> Result<ScanWindow, CliError> {
    match s {
        "rect" => Ok(ScanWindow::Rect),
        "hann" => Ok(ScanWindow::Hann),
        other => Err(CliError::Config(format!(
            "unknown window '{other}' (expected rect or hann)"
        ))),
    }
}

fn parse_quadrature(s: &str) -> Result<Quadrature, CliError> {
    match s {
        "left_riemann" => Ok(Quadrature::LeftRiemann),
        "trapezoid" => Ok(Quadrature::Trapezoid),
        other => Err(CliError::Config(format!(
            "unknown quadrature '{other}' (expected left_riemann or trapezoid)"
        ))),
    }
}

#[allow(clippy::too_many_arguments)]
pub fn reconstruct(
    geometry: &Path,
    data: &Path,
    algorithm: &str,
    grid_path: &Path,
    out: &Path,
    pad_factor: usize,
    window: &str,
    quadrature: &str,
) -> Result<(), CliError> {
    let doc = load_geometry(geometry)?;
    let geom = doc.geometry();
    let algo: Algorithm = algorithm.parse().map_err(CliError::Config)?;
    let grid: ImageGrid = read_json_config(grid_path)?;
    let (cube, header) = plsc::read_datacube(data)?;

    let fingerprint = format!("{:016x}", doc.fingerprint());
    if let Some(fp) = header.provenance.get("geometry_fnv1a") {
        if fp != &fingerprint {
            return Err(CliError::Dimension(format!(
                "data cube was simulated for geometry {fp}, not {fingerprint}"
            )));
        }
    }

    let opts = ReconOptions {
        pad_factor,
        window: parse_window(window)?,
        quadrature: parse_quadrature(quadrature)?,
        ..Default::default()
    };

    let theta_z = doc
        .acquisition
        .default_theta_z(doc.polyline.circumradius_r0);
    if let Ok(res) = geometry::predict_resolutions(&geom, &doc.acquisition, theta_z) {
        for w in grid.spacing_warnings(&res) {
            eprintln!("warning: {w}");
        }
    }

    let t = Instant::now();
    let mut img = recon::reconstruct(&cube, &geom, &doc.acquisition, &grid, algo, &opts)?;
    let elapsed = t.elapsed().as_secs_f64();
    img.provenance.insert("geometry_fnv1a".into(), fingerprint);
    plsc::write_image(out, &img)?;
    eprintln!(
        "reconstructed {}x{}x{} voxels with {} in {elapsed:.3} s -> {}",
        grid.x.count,
        grid.y.count,
        grid.z.count,
        algo,
        out.display()
    );
    Ok(())
}

fn parse_expected_peak(s: &str) -> Result<[f64; 3], CliError> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(CliError::Config(format!(
            "expected-peak must be 'x,y,z', got '{s}'"
        )));
    }
    let mut out = [0.0; 3];
    for (i, p) in parts.iter().enumerate() {
        out[i] = p
            .trim()
            .parse::<f64>()
            .map_err(|e| CliError::Config(format!("expected-peak component '{p}': {e}")))?;
    }
    Ok(out)
}

pub fn metrics_cmd(
    image: &Path,
    expected_peak: Option<&str>,
    compare: Option<&Path>,
    db_floor: f64,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let img = plsc::read_image(image)?;
    let expected = expected_peak.map(parse_expected_peak).transpose()?;
    let psf = metrics::psf_analyze(&img, expected)?;
    let similarity = match compare {
        Some(p) => {
            let other = plsc::read_image(p)?;
            Some(metrics::image_similarity(&img, &other, db_floor)?)
        }
        None => None,
    };
    let report = serde_json::json!({ "psf": psf, "similarity": similarity });
    let pretty = serde_json::to_string_pretty(&report).expect("report serializes");
    println!("{pretty}");
    if let Some(p) = out {
        write_text_atomic(p, &pretty)?;
    }
    Ok(())
}

/// Max-intensity projection along one axis, written as a binary PGM with a
/// dB grayscale (0 dB = white, -db_range = black), plus optional CSV cuts
/// through the image peak.
pub fn export(
    image: &Path,
    axis: &str,
    out: &Path,
    db_range: f64,
    cuts_prefix: Option<&Path>,
) -> Result<(), CliError> {
    if !(db_range > 0.0) {
        return Err(CliError::Config("db-range must be positive".into()));
    }
    let img = plsc::read_image(image)?;
    let db = metrics::to_db_normalized(&img, -db_range)?;
    let shape = db.shape().to_vec();

    // Projection planes: rows x cols per axis choice.
    let (rows, cols, project): (usize, usize, Box<dyn Fn(usize, usize) -> f64>) = match axis {
        "x" => (
            shape[1],
            shape[2],
            Box::new(|r, c| (0..shape[0]).map(|i| db[[i, r, c]]).fold(f64::MIN, f64::max)),
        ),
        "y" => (
            shape[0],
            shape[2],
            Box::new(|r, c| (0..shape[1]).map(|j| db[[r, j, c]]).fold(f64::MIN, f64::max)),
        ),
        "z" => (
            shape[0],
            shape[1],
            Box::new(|r, c| (0..shape[2]).map(|k| db[[r, c, k]]).fold(f64::MIN, f64::max)),
        ),
        other => {
            return Err(CliError::Config(format!(
                "unknown projection axis '{other}' (expected x, y, or z)"
            )))
        }
    };

    let mut pgm = format!("P5\n{cols} {rows}\n255\n").into_bytes();
    for r in 0..rows {
        for c in 0..cols {
            let v = project(r, c);
            let t = (1.0 + v / db_range).clamp(0.0, 1.0);
            pgm.push((t * 255.0).round() as u8);
        }
    }
    plsc::atomic_write(out, &pgm)?;
    eprintln!("wrote {} ({cols}x{rows}, {db_range} dB range)", out.display());

    if let Some(prefix) = cuts_prefix {
        write_peak_cuts(&img, prefix)?;
    }
    Ok(())
}

/// Through-peak 1-D cuts along each axis as CSV (position, magnitude, dB).
fn write_peak_cuts(img: &ImageVolume, prefix: &Path) -> Result<(), CliError> {
    let mag = img.data.map(|v| v.norm());
    let mut peak = (0, 0, 0);
    let mut best = -1.0;
    for ((i, j, k), &m) in mag.indexed_iter() {
        if m > best {
            best = m;
            peak = (i, j, k);
        }
    }
    if best <= 0.0 {
        return Err(CliError::Numeric("image is identically zero".into()));
    }
    let axes = [
        ("x", img.grid.x.values(), 0usize),
        ("y", img.grid.y.values(), 1),
        ("z", img.grid.z.values(), 2),
    ];
    for (name, positions, axis) in axes {
        let mut csv = String::from("position_m,magnitude,db\n");
        for (i, &p) in positions.iter().enumerate() {
            let m = match axis {
                0 => mag[[i, peak.1, peak.2]],
                1 => mag[[peak.0, i, peak.2]],
                _ => mag[[peak.0, peak.1, i]],
            };
            let db = 20.0 * (m / best).max(1e-300).log10();
            csv.push_str(&format!("{p:?},{m:?},{db:?}\n"));
        }
        let path = prefix.with_extension(format!("{name}.csv"));
        write_text_atomic(&path, &csv)?;
    }
    Ok(())
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

pub fn bench(config: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let cfg: BenchConfig = read_json_config(config)?;
    if cfg.repeats == 0 {
        return Err(CliError::Config("repeats must be >= 1".into()));
    }
    let geom = geometry::build_polyline(&cfg.design.polyline)?;
    let acq = cfg.design.acquisition.clone();
    let scene = match &cfg.scene {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            Scene::from_json(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => Scene::default_cross(),
    };
    let cube = match geom.modality() {
        Modality::Monostatic => {
            forward::simulate_monostatic(&scene, &geom, &acq, &SimulateOptions::default())?
        }
        Modality::Multistatic => {
            forward::simulate_multistatic(&scene, &geom, &acq, &SimulateOptions::default())?
        }
    };
    let cube = match cfg.snr_db {
        Some(snr) => forward::add_noise(&cube, snr, cfg.seed),
        None => cube,
    };

    let algos: Vec<Algorithm> = match &cfg.algorithms {
        Some(list) => list
            .iter()
            .map(|s| s.parse().map_err(CliError::Config))
            .collect::<Result<_, _>>()?,
        None => Algorithm::ALL.to_vec(),
    };

    let opts = ReconOptions::default();
    let mut results: Vec<(Algorithm, f64)> = Vec::new();
    for &algo in &algos {
        let mut times = Vec::with_capacity(cfg.repeats);
        for _ in 0..cfg.repeats {
            let t = Instant::now();
            let img = recon::reconstruct(&cube, &geom, &acq, &cfg.grid, algo, &opts)?;
            std::hint::black_box(&img);
            times.push(t.elapsed().as_secs_f64());
        }
        let m = median(times);
        eprintln!("{algo}: median {m:.3} s over {} repeat(s)", cfg.repeats);
        results.push((algo, m));
    }

    let baseline = results
        .iter()
        .find(|(a, _)| *a == Algorithm::DirectBp)
        .map(|(_, t)| *t);
    let mut csv = String::from(
        "algorithm,modality,channels,scan_positions,freqs,nx,ny,nz,seconds,ratio_vs_direct_bp\n",
    );
    for (algo, t) in &results {
        let ratio = baseline
            .map(|b| format!("{:.4}", t / b))
            .unwrap_or_default();
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{:.6},{}\n",
            algo,
            geom.modality().as_str(),
            geom.channels.len(),
            acq.num_scan_positions,
            acq.num_freqs,
            cfg.grid.x.count,
            cfg.grid.y.count,
            cfg.grid.z.count,
            t,
            ratio
        ));
    }
    print!("{csv}");
    if let Some(p) = out {
        write_text_atomic(p, &csv)?;
    }
    Ok(())
}
