//! Scan-axis Fourier transform and dispersion relations.
//!
//! Convention (also recorded in container metadata): the forward transform
//! along the vertical scan is `S(kz) = dz * sum_m s(z_m) exp(-j kz z_m)` and
//! the inverse is `s(z) = (dkz / 2 pi) * sum_j S(kz_j) exp(+j kz_j z)`, so a
//! round trip is exact on the sampled grid. The kz axis is stored
//! monotone-ascending after centering.

use ndarray::parallel::prelude::*;
use ndarray::{Array2, Array3, Axis};
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::forward::DataCube;
use crate::geometry::Modality;
use crate::C64;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("pad_factor must be >= 1")]
    BadPadFactor,
    #[error("scan axis is degenerate: {0} scan position(s) cannot be transformed")]
    DegenerateScanAxis(usize),
}

/// Optional window applied along the scan axis before the forward transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanWindow {
    #[default]
    Rect,
    Hann,
}

impl ScanWindow {
    fn weight(self, m: usize, n: usize) -> f64 {
        match self {
            ScanWindow::Rect => 1.0,
            ScanWindow::Hann => {
                if n < 2 {
                    1.0
                } else {
                    let x = m as f64 / (n - 1) as f64;
                    0.5 * (1.0 - (2.0 * std::f64::consts::PI * x).cos())
                }
            }
        }
    }
}

/// A data cube after the scan-axis Fourier transform, indexed
/// `[channel][kz][freq]` with the kz grid ascending.
#[derive(Debug, Clone)]
pub struct SpectralCube {
    pub samples: Array3<C64>,
    /// Ascending kz grid (rad/m), spacing `2 pi / (n_pad * dz)`.
    pub kz: Vec<f64>,
    pub freqs: Vec<f64>,
    pub modality: Modality,
    pub pad_factor: usize,
    /// Original scan geometry, needed to invert the transform.
    pub scan_start: f64,
    pub scan_step: f64,
    pub num_scans: usize,
}

impl SpectralCube {
    pub fn num_channels(&self) -> usize {
        self.samples.shape()[0]
    }

    pub fn num_kz(&self) -> usize {
        self.samples.shape()[1]
    }

    pub fn kz_step(&self) -> f64 {
        self.kz[1] - self.kz[0]
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        self.freqs
            .iter()
            .map(|f| 2.0 * std::f64::consts::PI * f / crate::SPEED_OF_LIGHT)
            .collect()
    }
}

/// Forward transform along the scan axis, zero-padded to
/// `pad_factor * next_power_of_two(num_scans)` bins.
pub fn fft_along_scan(
    cube: &DataCube,
    pad_factor: usize,
    window: ScanWindow,
) -> Result<SpectralCube, SpectralError> {
    if pad_factor == 0 {
        return Err(SpectralError::BadPadFactor);
    }
    let n_scan = cube.num_scans();
    if n_scan < 2 {
        return Err(SpectralError::DegenerateScanAxis(n_scan));
    }
    let dz = cube.scan_step();
    let z0 = cube.z_positions[0];
    let n_pad = pad_factor * n_scan.next_power_of_two();
    let dkz = 2.0 * std::f64::consts::PI / (n_pad as f64 * dz);
    let kz: Vec<f64> = (0..n_pad)
        .map(|j| (j as f64 - (n_pad / 2) as f64) * dkz)
        .collect();

    let fft = FftPlanner::<f64>::new().plan_fft_forward(n_pad);
    let n_freq = cube.num_freqs();
    let mut out = Array3::<C64>::zeros((cube.num_channels(), n_pad, n_freq));

    out.axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(c, mut slab)| {
            let mut buf = vec![C64::new(0.0, 0.0); n_pad];
            let mut scratch = vec![C64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
            for f in 0..n_freq {
                for (m, v) in buf.iter_mut().enumerate().take(n_pad) {
                    *v = if m < n_scan {
                        cube.samples[[c, m, f]] * window.weight(m, n_scan)
                    } else {
                        C64::new(0.0, 0.0)
                    };
                }
                fft.process_with_scratch(&mut buf, &mut scratch);
                for (j, &kzj) in kz.iter().enumerate() {
                    // Ascending output j holds FFT bin (j + n/2) mod n; the
                    // dz scale and the z0 reference phase make the DFT match
                    // the continuous transform of the centered scan.
                    let bin = (j + n_pad / 2) % n_pad;
                    let ph = -kzj * z0;
                    slab[[j, f]] = buf[bin] * dz * C64::new(ph.cos(), ph.sin());
                }
            }
        });

    Ok(SpectralCube {
        samples: out,
        kz,
        freqs: cube.freqs.clone(),
        modality: cube.modality,
        pad_factor,
        scan_start: z0,
        scan_step: dz,
        num_scans: n_scan,
    })
}

/// Inverse of [`fft_along_scan`]: reproduces the original cube (pad region
/// stripped) exactly up to rounding.
pub fn ifft_along_scan(spec: &SpectralCube) -> DataCube {
    let n_pad = spec.num_kz();
    let n_freq = spec.freqs.len();
    let n_scan = spec.num_scans;
    let dz = spec.scan_step;
    let z0 = spec.scan_start;
    let scale = 1.0 / (n_pad as f64 * dz); // dkz / (2 pi)

    let ifft = FftPlanner::<f64>::new().plan_fft_inverse(n_pad);
    let mut out = Array3::<C64>::zeros((spec.num_channels(), n_scan, n_freq));

    out.axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(c, mut slab)| {
            let mut buf = vec![C64::new(0.0, 0.0); n_pad];
            let mut scratch = vec![C64::new(0.0, 0.0); ifft.get_inplace_scratch_len()];
            for f in 0..n_freq {
                for (j, &kzj) in spec.kz.iter().enumerate() {
                    let bin = (j + n_pad / 2) % n_pad;
                    let ph = kzj * z0;
                    buf[bin] = spec.samples[[c, j, f]] * C64::new(ph.cos(), ph.sin());
                }
                ifft.process_with_scratch(&mut buf, &mut scratch);
                for m in 0..n_scan {
                    slab[[m, f]] = buf[m] * scale;
                }
            }
        });

    DataCube {
        samples: out,
        z_positions: (0..n_scan).map(|m| z0 + m as f64 * dz).collect(),
        freqs: spec.freqs.clone(),
        modality: spec.modality,
    }
}

/// The radial spatial frequency `k_rho(k, kz)` and derived quantities on a
/// (kz, k) grid. Entries whose radicand is negative are evanescent and
/// masked (they carry no propagating information and are zeroed downstream).
#[derive(Debug, Clone)]
pub struct DispersionGrid {
    /// `sqrt(4 k^2 - kz^2)` (monostatic) or `sqrt(k^2 - kz^2 / 4)`
    /// (multistatic); zero where masked. Indexed `[kz][k]`.
    pub k_rho: Array2<f64>,
    /// `k_rho` evaluated at `k0 = min(k)` per kz row, clamped at zero where
    /// even the minimum wavenumber is evanescent.
    pub k_rho0: Vec<f64>,
    /// `k_rho - k_rho0`, the node coordinate of the filtered profiles.
    pub k_rho_prime: Array2<f64>,
    pub evanescent: Array2<bool>,
    pub kz: Vec<f64>,
    pub k: Vec<f64>,
    pub modality: Modality,
}

impl DispersionGrid {
    pub fn evanescent_fraction(&self) -> f64 {
        let total = self.evanescent.len();
        let masked = self.evanescent.iter().filter(|&&m| m).count();
        masked as f64 / total as f64
    }
}

/// Evaluate the dispersion relation on the given grids.
pub fn dispersion(modality: Modality, kz: &[f64], k: &[f64]) -> DispersionGrid {
    assert!(!kz.is_empty() && !k.is_empty(), "dispersion grids must be nonempty");
    let k0 = k.iter().copied().fold(f64::INFINITY, f64::min);
    let radicand = |k: f64, kz: f64| match modality {
        Modality::Monostatic => 4.0 * k * k - kz * kz,
        Modality::Multistatic => k * k - kz * kz / 4.0,
    };

    let mut k_rho = Array2::<f64>::zeros((kz.len(), k.len()));
    let mut k_rho_prime = Array2::<f64>::zeros((kz.len(), k.len()));
    let mut evanescent = Array2::<bool>::from_elem((kz.len(), k.len()), false);
    let mut k_rho0 = Vec::with_capacity(kz.len());

    for (j, &kzj) in kz.iter().enumerate() {
        let kr0 = radicand(k0, kzj).max(0.0).sqrt();
        k_rho0.push(kr0);
        for (n, &kn) in k.iter().enumerate() {
            let r = radicand(kn, kzj);
            if r < 0.0 {
                evanescent[[j, n]] = true;
            } else {
                let kr = r.sqrt();
                k_rho[[j, n]] = kr;
                k_rho_prime[[j, n]] = kr - kr0;
            }
        }
    }

    DispersionGrid {
        k_rho,
        k_rho0,
        k_rho_prime,
        evanescent,
        kz: kz.to_vec(),
        k: k.to_vec(),
        modality,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::AcquisitionSpec;
    use ndarray::Array3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cube_from_fn(
        n_ch: usize,
        n_scan: usize,
        n_freq: usize,
        dz: f64,
        mut f: impl FnMut(usize, f64, usize) -> C64,
    ) -> DataCube {
        let acq = AcquisitionSpec {
            freq_start: 30e9,
            freq_stop: 35e9,
            num_freqs: n_freq,
            scan_step_dz: dz,
            num_scan_positions: n_scan,
        };
        let zs = acq.z_positions();
        let mut samples = Array3::<C64>::zeros((n_ch, n_scan, n_freq));
        for c in 0..n_ch {
            for (m, &z) in zs.iter().enumerate() {
                for n in 0..n_freq {
                    samples[[c, m, n]] = f(c, z, n);
                }
            }
        }
        DataCube {
            samples,
            z_positions: zs,
            freqs: acq.freqs(),
            modality: Modality::Monostatic,
        }
    }

    #[test]
    fn dc_input_concentrates_in_zero_bin() {
        // Power-of-two scan count and pad 1: no padding, so a constant is a
        // pure DC tone.
        let cube = cube_from_fn(1, 128, 2, 0.005, |_, _, _| C64::new(1.0, 0.0));
        let spec = fft_along_scan(&cube, 1, ScanWindow::Rect).unwrap();
        let j0 = 64;
        assert!((spec.kz[j0]).abs() < 1e-12);
        let dc = spec.samples[[0, j0, 0]];
        assert!((dc - C64::new(128.0 * 0.005, 0.0)).norm() < 1e-9);
        for j in 0..128 {
            if j != j0 {
                assert!(
                    spec.samples[[0, j, 0]].norm() < 1e-9,
                    "leakage at bin {j}: {}",
                    spec.samples[[0, j, 0]].norm()
                );
            }
        }
    }

    #[test]
    fn on_grid_tone_is_a_single_bin() {
        // s(z) = exp(-j kz0 z) lands in the kz = -kz0 bin under the
        // exp(-j kz z) forward convention.
        let n = 64;
        let dz = 0.004;
        let dkz = 2.0 * std::f64::consts::PI / (n as f64 * dz);
        let kz0 = 5.0 * dkz;
        let cube = cube_from_fn(1, n, 2, dz, |_, z, _| {
            let ph = -kz0 * z;
            C64::new(ph.cos(), ph.sin())
        });
        let spec = fft_along_scan(&cube, 1, ScanWindow::Rect).unwrap();
        let hit = n / 2 - 5;
        assert!((spec.kz[hit] + kz0).abs() < 1e-9);
        assert!((spec.samples[[0, hit, 0]].norm() - n as f64 * dz).abs() < 1e-9);
        for j in 0..n {
            if j != hit {
                assert!(spec.samples[[0, j, 0]].norm() < 1e-9, "bin {j}");
            }
        }
    }

    #[test]
    fn parseval_with_padding() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cube = cube_from_fn(3, 101, 4, 0.005, |_, _, _| {
            C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let spec = fft_along_scan(&cube, 2, ScanWindow::Rect).unwrap();
        let dkz = spec.kz_step();
        let lhs: f64 =
            spec.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() * dkz / (2.0 * std::f64::consts::PI);
        let rhs: f64 = cube.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() * cube.scan_step();
        assert!(
            (lhs - rhs).abs() / rhs < 1e-9,
            "Parseval mismatch: {lhs} vs {rhs}"
        );
    }

    #[test]
    fn round_trip_reproduces_cube() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let cube = cube_from_fn(2, 101, 3, 0.005, |_, _, _| {
            C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        for pad in [1, 2, 3] {
            let spec = fft_along_scan(&cube, pad, ScanWindow::Rect).unwrap();
            let back = ifft_along_scan(&spec);
            let num: f64 = back
                .samples
                .iter()
                .zip(cube.samples.iter())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            let den: f64 = cube.samples.iter().map(|s| s.norm_sqr()).sum::<f64>().sqrt();
            assert!(num / den < 1e-9, "pad {pad}: relative error {}", num / den);
        }
    }

    #[test]
    fn degenerate_axis_rejected() {
        let cube = cube_from_fn(1, 1, 2, 0.005, |_, _, _| C64::new(1.0, 0.0));
        assert!(matches!(
            fft_along_scan(&cube, 1, ScanWindow::Rect),
            Err(SpectralError::DegenerateScanAxis(1))
        ));
        let cube = cube_from_fn(1, 4, 2, 0.005, |_, _, _| C64::new(1.0, 0.0));
        assert!(matches!(
            fft_along_scan(&cube, 0, ScanWindow::Rect),
            Err(SpectralError::BadPadFactor)
        ));
    }

    #[test]
    fn hann_window_tapers_edges() {
        let cube = cube_from_fn(1, 64, 2, 0.005, |_, _, _| C64::new(1.0, 0.0));
        let rect = fft_along_scan(&cube, 1, ScanWindow::Rect).unwrap();
        let hann = fft_along_scan(&cube, 1, ScanWindow::Hann).unwrap();
        // Hann halves the coherent gain of a DC input.
        let r = hann.samples[[0, 32, 0]].norm() / rect.samples[[0, 32, 0]].norm();
        assert!((r - 0.5).abs() < 0.02, "hann DC gain ratio {r}");
    }

    #[test]
    fn dispersion_axis_values() {
        let k = [600.0, 628.3185, 700.0];
        let kz = [0.0, 400.0];
        let mono = dispersion(Modality::Monostatic, &kz, &k);
        let multi = dispersion(Modality::Multistatic, &kz, &k);
        for (n, &kn) in k.iter().enumerate() {
            assert!((mono.k_rho[[0, n]] - 2.0 * kn).abs() < 1e-9);
            assert!((multi.k_rho[[0, n]] - kn).abs() < 1e-9);
        }
        // Independent arithmetic: sqrt(4 * 628.3185^2 - 400^2) = 1191.2752.
        assert!((mono.k_rho[[1, 1]] - 1191.2752).abs() < 1e-3);
    }

    #[test]
    fn dispersion_boundary_and_mask() {
        let k = [100.0];
        let mono = dispersion(Modality::Monostatic, &[200.0], &k);
        assert!(!mono.evanescent[[0, 0]]);
        assert_eq!(mono.k_rho[[0, 0]], 0.0);
        let mono = dispersion(Modality::Monostatic, &[200.0 + 1e-9], &k);
        assert!(mono.evanescent[[0, 0]]);
        let multi = dispersion(Modality::Multistatic, &[200.0 + 1e-9], &k);
        assert!(multi.evanescent[[0, 0]]);
    }

    #[test]
    fn k_rho_prime_zero_at_k0_and_increasing() {
        let k: Vec<f64> = (0..51).map(|i| 628.0 + 2.0 * i as f64).collect();
        let kz: Vec<f64> = (-10..=10).map(|i| i as f64 * 30.0).collect();
        for modality in [Modality::Monostatic, Modality::Multistatic] {
            let d = dispersion(modality, &kz, &k);
            for j in 0..kz.len() {
                if !d.evanescent[[j, 0]] {
                    assert_eq!(d.k_rho_prime[[j, 0]], 0.0);
                }
                let mut prev = -1.0;
                for n in 0..k.len() {
                    if !d.evanescent[[j, n]] {
                        assert!(d.k_rho_prime[[j, n]] >= prev);
                        assert!(d.k_rho_prime[[j, n]] >= 0.0);
                        prev = d.k_rho_prime[[j, n]];
                    }
                }
            }
            // All |kz| <= 2 k0 here, so nothing is evanescent.
            assert_eq!(d.evanescent_fraction(), 0.0);
        }
    }
}
