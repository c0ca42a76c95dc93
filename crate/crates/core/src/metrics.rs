//! Point-spread-function analysis and image comparison.
//!
//! Resolution is estimated as the -3 dB (half-power) width of through-peak
//! axis cuts; sidelobe statistics are taken outside +-2 measured widths of
//! the mainlobe and above a -40 dB dynamic-range floor.

use ndarray::Array3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::recon::ImageVolume;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("image is identically zero")]
    ZeroImage,
    #[error("image grids do not match")]
    GridMismatch,
}

/// Amplitude ratio corresponding to -3 dB (half power).
const HALF_POWER: f64 = 0.7079457843841379; // 10^(-3/20)
/// Dynamic-range floor for sidelobe statistics (dB).
const SIDELOBE_FLOOR_DB: f64 = -40.0;

/// Measured mainlobe and sidelobe figures of a reconstructed point target.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PsfReport {
    /// Parabola-refined peak position (m).
    pub peak_position: [f64; 3],
    /// Peak magnitude (voxel value, linear).
    pub peak_value: f64,
    /// -3 dB widths of the through-peak cuts along x, y, z (m). `None` when
    /// the cut never drops below half power inside the grid.
    pub width_3db: [Option<f64>; 3],
    /// Peak sidelobe level per axis cut (dB relative to the cut peak).
    pub pslr_db: [Option<f64>; 3],
    /// Mean sidelobe level per axis cut (dB), over samples above the floor.
    pub mean_sidelobe_db: [Option<f64>; 3],
    /// Dynamic-range floor used for the sidelobe statistics (dB).
    pub db_floor_used: f64,
    /// Peak voxel landed on the grid boundary; widths are unreliable.
    pub boundary_peak: bool,
    /// Measured minus expected peak position, when an expectation was given.
    pub peak_offset: Option<[f64; 3]>,
}

/// Similarity of two magnitude-normalized images on a joint dB mask.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Similarity {
    /// Normalized cross-correlation (cosine form, no mean removal) of the
    /// peak-normalized magnitudes over the union mask.
    pub ncc: f64,
    /// Largest absolute difference of the floor-clipped dB images on the
    /// mask (dB).
    pub max_abs_diff_db: f64,
    pub db_floor: f64,
    pub mask_fraction: f64,
}

/// Fit a parabola through three equally spaced samples and return the
/// sub-sample offset of its apex in (-0.5, 0.5] plus the apex value.
fn parabolic_refine(ym: f64, y0: f64, yp: f64) -> (f64, f64) {
    let denom = ym - 2.0 * y0 + yp;
    if denom.abs() < 1e-300 {
        return (0.0, y0);
    }
    let delta = 0.5 * (ym - yp) / denom;
    let delta = delta.clamp(-0.5, 0.5);
    let value = y0 - 0.25 * (ym - yp) * delta;
    (delta, value.max(y0))
}

struct CutStats {
    refined_pos: f64,
    width: Option<f64>,
    pslr_db: Option<f64>,
    mean_sidelobe_db: Option<f64>,
}

/// Analyze one through-peak cut: refine the peak, measure the -3 dB width by
/// linear interpolation, and collect sidelobe levels outside +-2 widths.
fn analyze_cut(mag: &[f64], peak_idx: usize, positions: &[f64]) -> CutStats {
    let n = mag.len();
    let step = if n > 1 { positions[1] - positions[0] } else { 0.0 };

    let (delta, peak_val) = if n >= 3 && peak_idx > 0 && peak_idx < n - 1 {
        parabolic_refine(mag[peak_idx - 1], mag[peak_idx], mag[peak_idx + 1])
    } else {
        (0.0, mag[peak_idx])
    };
    let refined_pos = positions[peak_idx] + delta * step;

    let thr = peak_val * HALF_POWER;
    // Walk outward to the first crossing on each side.
    let crossing = |dir: i64| -> Option<f64> {
        let mut i = peak_idx as i64;
        loop {
            let next = i + dir;
            if next < 0 || next >= n as i64 {
                return None;
            }
            let (a, b) = (mag[i as usize], mag[next as usize]);
            if a >= thr && b < thr {
                let t = (a - thr) / (a - b);
                return Some(positions[i as usize] + t * dir as f64 * step);
            }
            i = next;
        }
    };
    let width = match (crossing(-1), crossing(1)) {
        (Some(left), Some(right)) => Some(right - left),
        _ => None,
    };

    let (pslr, mean) = if let Some(w) = width {
        let exclude = 2.0 * w;
        let mut peak_sl = f64::NEG_INFINITY;
        let mut sum = 0.0;
        let mut count = 0usize;
        for (i, &m) in mag.iter().enumerate() {
            if (positions[i] - refined_pos).abs() <= exclude {
                continue;
            }
            let db = 20.0 * (m / peak_val).max(1e-300).log10();
            if db >= SIDELOBE_FLOOR_DB {
                peak_sl = peak_sl.max(db);
                sum += db;
                count += 1;
            }
        }
        if count > 0 {
            (Some(peak_sl), Some(sum / count as f64))
        } else {
            (None, None)
        }
    } else {
        (None, None)
    };

    CutStats {
        refined_pos,
        width,
        pslr_db: pslr,
        mean_sidelobe_db: mean,
    }
}

/// Measure the point-spread function of an image: refined peak position,
/// -3 dB widths, and per-axis sidelobe statistics.
pub fn psf_analyze(
    image: &ImageVolume,
    expected_peak: Option<[f64; 3]>,
) -> Result<PsfReport, MetricsError> {
    let mag = image.data.map(|v| v.norm());
    let mut peak = (0usize, 0usize, 0usize);
    let mut peak_val = -1.0;
    for ((i, j, k), &m) in mag.indexed_iter() {
        if m > peak_val {
            peak_val = m;
            peak = (i, j, k);
        }
    }
    if peak_val <= 0.0 {
        return Err(MetricsError::ZeroImage);
    }

    let shape = mag.shape().to_vec();
    let on_edge = |idx: usize, count: usize| count > 1 && (idx == 0 || idx == count - 1);
    let boundary_peak =
        on_edge(peak.0, shape[0]) || on_edge(peak.1, shape[1]) || on_edge(peak.2, shape[2]);

    let xs = image.grid.x.values();
    let ys = image.grid.y.values();
    let zs = image.grid.z.values();

    let cut_x: Vec<f64> = (0..shape[0]).map(|i| mag[[i, peak.1, peak.2]]).collect();
    let cut_y: Vec<f64> = (0..shape[1]).map(|j| mag[[peak.0, j, peak.2]]).collect();
    let cut_z: Vec<f64> = (0..shape[2]).map(|k| mag[[peak.0, peak.1, k]]).collect();

    let sx = analyze_cut(&cut_x, peak.0, &xs);
    let sy = analyze_cut(&cut_y, peak.1, &ys);
    let sz = analyze_cut(&cut_z, peak.2, &zs);

    let peak_position = [sx.refined_pos, sy.refined_pos, sz.refined_pos];
    Ok(PsfReport {
        peak_position,
        peak_value: peak_val,
        width_3db: [sx.width, sy.width, sz.width],
        pslr_db: [sx.pslr_db, sy.pslr_db, sz.pslr_db],
        mean_sidelobe_db: [sx.mean_sidelobe_db, sy.mean_sidelobe_db, sz.mean_sidelobe_db],
        db_floor_used: SIDELOBE_FLOOR_DB,
        boundary_peak,
        peak_offset: expected_peak.map(|e| {
            [
                peak_position[0] - e[0],
                peak_position[1] - e[1],
                peak_position[2] - e[2],
            ]
        }),
    })
}

/// Compare two images on identical grids: normalized cross-correlation of
/// the peak-normalized magnitudes and the worst dB discrepancy, both
/// restricted to the union of the above-floor masks.
pub fn image_similarity(
    a: &ImageVolume,
    b: &ImageVolume,
    db_floor: f64,
) -> Result<Similarity, MetricsError> {
    if !a.grid.approx_eq(&b.grid) || a.data.shape() != b.data.shape() {
        return Err(MetricsError::GridMismatch);
    }
    let pa = a.peak_magnitude();
    let pb = b.peak_magnitude();
    if pa == 0.0 || pb == 0.0 {
        return Err(MetricsError::ZeroImage);
    }

    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    let mut max_diff = 0.0f64;
    let mut masked = 0usize;
    for (va, vb) in a.data.iter().zip(b.data.iter()) {
        let ma = va.norm() / pa;
        let mb = vb.norm() / pb;
        let da = 20.0 * ma.max(1e-300).log10();
        let db = 20.0 * mb.max(1e-300).log10();
        if da >= db_floor || db >= db_floor {
            masked += 1;
            dot += ma * mb;
            na += ma * ma;
            nb += mb * mb;
            max_diff = max_diff.max((da.max(db_floor) - db.max(db_floor)).abs());
        }
    }
    Ok(Similarity {
        ncc: dot / (na.sqrt() * nb.sqrt()),
        max_abs_diff_db: max_diff,
        db_floor,
        mask_fraction: masked as f64 / a.data.len() as f64,
    })
}

/// Peak-normalized dB volume, `20 log10(|v| / peak)`, clipped at `floor_db`.
pub fn to_db_normalized(image: &ImageVolume, floor_db: f64) -> Result<Array3<f64>, MetricsError> {
    let peak = image.peak_magnitude();
    if peak == 0.0 {
        return Err(MetricsError::ZeroImage);
    }
    Ok(image
        .data
        .map(|v| (20.0 * (v.norm() / peak).max(1e-300).log10()).max(floor_db)))
}
