//! Scattered-wave synthesis for point-scatterer scenes.
//!
//! The propagation kernel is unit magnitude: a monostatic channel measures
//! `sum_i a_i exp(-j 2 k R_i)` and a multistatic channel
//! `sum_i a_i exp(-j k (R_Ti + R_Ri))`, with distances taken from the channel
//! elements at the current scan height to the scatterer. No 1/R spreading is
//! applied by default so analytic oracles stay exact; enable
//! [`SimulateOptions::spreading_loss`] for 1/R^2 (monostatic) or
//! 1/(R_T R_R) (multistatic) weighting.

use ndarray::parallel::prelude::*;
use ndarray::{Array3, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{ArrayGeometry, AcquisitionSpec, Modality};
use crate::C64;

#[derive(Debug, Error)]
pub enum ForwardError {
    #[error("geometry modality {geometry} does not match the requested {requested} simulation")]
    ModalityMismatch {
        geometry: &'static str,
        requested: &'static str,
    },
    #[error("scene is invalid: {0}")]
    InvalidScene(String),
    #[error("data cube of {requested} samples exceeds the configured limit of {limit}")]
    CubeTooLarge { requested: usize, limit: usize },
    #[error(transparent)]
    Geometry(#[from] crate::geometry::GeometryError),
}

/// An ideal point scatterer with a complex reflectivity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scatterer {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub amplitude: C64,
}

// On disk a scatterer is {x, y, z, amp_re, amp_im}.
#[derive(Serialize, Deserialize)]
struct ScattererFile {
    x: f64,
    y: f64,
    z: f64,
    amp_re: f64,
    amp_im: f64,
}

impl Serialize for Scatterer {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ScattererFile {
            x: self.x,
            y: self.y,
            z: self.z,
            amp_re: self.amplitude.re,
            amp_im: self.amplitude.im,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Scatterer {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let f = ScattererFile::deserialize(d)?;
        Ok(Scatterer {
            x: f.x,
            y: f.y,
            z: f.z,
            amplitude: C64::new(f.amp_re, f.amp_im),
        })
    }
}

/// Simulation ground truth: a list of ideal point scatterers. Serializes as
/// a bare JSON array of `{x, y, z, amp_re, amp_im}` records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Scene {
    pub scatterers: Vec<Scatterer>,
}

impl Scene {
    pub fn new(scatterers: Vec<Scatterer>) -> Self {
        Scene { scatterers }
    }

    /// One unit scatterer at a position.
    pub fn point(x: f64, y: f64, z: f64) -> Self {
        Scene::new(vec![Scatterer {
            x,
            y,
            z,
            amplitude: C64::new(1.0, 0.0),
        }])
    }

    /// The default five-point cross used by the command-line tools: a unit
    /// scatterer at the scene center plus four at +-10 cm offsets along x
    /// and z, all in the y = 0 plane.
    pub fn default_cross() -> Self {
        let mut s = Vec::new();
        for (x, z) in [(0.0, 0.0), (0.1, 0.0), (-0.1, 0.0), (0.0, 0.1), (0.0, -0.1)] {
            s.push(Scatterer {
                x,
                y: 0.0,
                z,
                amplitude: C64::new(1.0, 0.0),
            });
        }
        Scene::new(s)
    }

    pub fn validate(&self) -> Result<(), ForwardError> {
        if self.scatterers.is_empty() {
            return Err(ForwardError::InvalidScene(
                "scene must contain at least one scatterer".into(),
            ));
        }
        for (i, s) in self.scatterers.iter().enumerate() {
            if ![s.x, s.y, s.z, s.amplitude.re, s.amplitude.im]
                .iter()
                .all(|v| v.is_finite())
            {
                return Err(ForwardError::InvalidScene(format!(
                    "scatterer {i} has non-finite fields"
                )));
            }
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serializes")
    }
}

/// Complex scattered-field samples indexed `[channel][scan][freq]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataCube {
    pub samples: Array3<C64>,
    pub z_positions: Vec<f64>,
    pub freqs: Vec<f64>,
    pub modality: Modality,
}

impl DataCube {
    pub fn num_channels(&self) -> usize {
        self.samples.shape()[0]
    }

    pub fn num_scans(&self) -> usize {
        self.samples.shape()[1]
    }

    pub fn num_freqs(&self) -> usize {
        self.samples.shape()[2]
    }

    /// Wavenumber grid `2 pi f / c` of the frequency axis.
    pub fn wavenumbers(&self) -> Vec<f64> {
        self.freqs
            .iter()
            .map(|f| 2.0 * std::f64::consts::PI * f / crate::SPEED_OF_LIGHT)
            .collect()
    }

    pub fn scan_step(&self) -> f64 {
        if self.z_positions.len() > 1 {
            self.z_positions[1] - self.z_positions[0]
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimulateOptions {
    /// Apply amplitude spreading (1/R^2 monostatic, 1/(R_T R_R) multistatic).
    /// Off by default so the unit-magnitude kernel oracles hold exactly.
    pub spreading_loss: bool,
    /// Guard against runaway cube allocations (total complex samples).
    pub max_samples: usize,
}

impl Default for SimulateOptions {
    fn default() -> Self {
        SimulateOptions {
            spreading_loss: false,
            max_samples: 1 << 28,
        }
    }
}

// Distances below this are clamped when spreading loss is enabled.
const MIN_SPREADING_RANGE: f64 = 1e-6;

fn check_size(geom: &ArrayGeometry, acq: &AcquisitionSpec, opts: &SimulateOptions) -> Result<(), ForwardError> {
    let n = geom
        .channels
        .len()
        .saturating_mul(acq.num_scan_positions)
        .saturating_mul(acq.num_freqs);
    if n > opts.max_samples {
        return Err(ForwardError::CubeTooLarge {
            requested: n,
            limit: opts.max_samples,
        });
    }
    Ok(())
}

/// Simulate a monostatic acquisition: `s[c][m][n] = sum_i a_i exp(-j 2 k_n R)`
/// with `R` the distance from channel c's transceiver at scan height `z_m`
/// to scatterer i.
pub fn simulate_monostatic(
    scene: &Scene,
    geom: &ArrayGeometry,
    acq: &AcquisitionSpec,
    opts: &SimulateOptions,
) -> Result<DataCube, ForwardError> {
    if geom.modality() != Modality::Monostatic {
        return Err(ForwardError::ModalityMismatch {
            geometry: geom.modality().as_str(),
            requested: "monostatic",
        });
    }
    scene.validate()?;
    acq.validate()?;
    check_size(geom, acq, opts)?;

    let zs = acq.z_positions();
    let ks = acq.wavenumbers();
    let mut samples = Array3::<C64>::zeros((geom.channels.len(), zs.len(), ks.len()));

    samples
        .axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(c, mut slab)| {
            let el = &geom.elements[geom.channels[c].tx];
            for (m, &zp) in zs.iter().enumerate() {
                for sc in &scene.scatterers {
                    let dx = sc.x - el.x;
                    let dy = sc.y - el.y;
                    let dz = sc.z - zp;
                    let r = (dx * dx + dy * dy + dz * dz).sqrt();
                    let amp = if opts.spreading_loss {
                        let rc = r.max(MIN_SPREADING_RANGE);
                        sc.amplitude / (rc * rc)
                    } else {
                        sc.amplitude
                    };
                    for (n, &k) in ks.iter().enumerate() {
                        let ph = -2.0 * k * r;
                        slab[[m, n]] += amp * C64::new(ph.cos(), ph.sin());
                    }
                }
            }
        });

    Ok(DataCube {
        samples,
        z_positions: zs,
        freqs: acq.freqs(),
        modality: Modality::Monostatic,
    })
}

/// Simulate a multistatic acquisition:
/// `s[c][m][n] = sum_i a_i exp(-j k_n (R_T + R_R))`.
pub fn simulate_multistatic(
    scene: &Scene,
    geom: &ArrayGeometry,
    acq: &AcquisitionSpec,
    opts: &SimulateOptions,
) -> Result<DataCube, ForwardError> {
    if geom.modality() != Modality::Multistatic {
        return Err(ForwardError::ModalityMismatch {
            geometry: geom.modality().as_str(),
            requested: "multistatic",
        });
    }
    scene.validate()?;
    acq.validate()?;
    check_size(geom, acq, opts)?;

    let zs = acq.z_positions();
    let ks = acq.wavenumbers();
    let mut samples = Array3::<C64>::zeros((geom.channels.len(), zs.len(), ks.len()));

    samples
        .axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(c, mut slab)| {
            let ch = geom.channels[c];
            let tx = &geom.elements[ch.tx];
            let rx = &geom.elements[ch.rx];
            for (m, &zp) in zs.iter().enumerate() {
                for sc in &scene.scatterers {
                    let dz = sc.z - zp;
                    let dxt = sc.x - tx.x;
                    let dyt = sc.y - tx.y;
                    let rt = (dxt * dxt + dyt * dyt + dz * dz).sqrt();
                    let dxr = sc.x - rx.x;
                    let dyr = sc.y - rx.y;
                    let rr = (dxr * dxr + dyr * dyr + dz * dz).sqrt();
                    let amp = if opts.spreading_loss {
                        sc.amplitude
                            / (rt.max(MIN_SPREADING_RANGE) * rr.max(MIN_SPREADING_RANGE))
                    } else {
                        sc.amplitude
                    };
                    for (n, &k) in ks.iter().enumerate() {
                        let ph = -k * (rt + rr);
                        slab[[m, n]] += amp * C64::new(ph.cos(), ph.sin());
                    }
                }
            }
        });

    Ok(DataCube {
        samples,
        z_positions: zs,
        freqs: acq.freqs(),
        modality: Modality::Multistatic,
    })
}

/// Add complex white Gaussian noise at `snr_db` relative to the cube's mean
/// sample power. Deterministic for a fixed seed; `snr_db = +inf` returns the
/// cube unchanged.
pub fn add_noise(cube: &DataCube, snr_db: f64, seed: u64) -> DataCube {
    if snr_db.is_infinite() && snr_db.is_sign_positive() {
        return cube.clone();
    }
    let n = cube.samples.len();
    let power: f64 = cube.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / n as f64;
    if power == 0.0 {
        return cube.clone();
    }
    let noise_power = power * 10f64.powf(-snr_db / 10.0);
    let sigma = (noise_power / 2.0).sqrt();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = cube.clone();
    for s in out.samples.iter_mut() {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        *s += C64::new(sigma * re, sigma * im);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_polyline, Element, ElementRole, Channel, PairingPolicy, PolylineSpec, TxPlacement};

    fn small_acq(n_scan: usize) -> AcquisitionSpec {
        AcquisitionSpec {
            freq_start: 30e9,
            freq_stop: 35e9,
            num_freqs: 5,
            scan_step_dz: 0.005,
            num_scan_positions: n_scan,
        }
    }

    fn single_element_mono() -> ArrayGeometry {
        // One section, one element: lands exactly at (0, -R0).
        build_polyline(&PolylineSpec {
            circumradius_r0: 1.0,
            num_sections: 1,
            modality: Modality::Monostatic,
            elements_per_section: 1,
            element_spacing: 0.0048,
            tx_placement: TxPlacement::SectionJointsAndEnds,
            pairing_policy: PairingPolicy::WithinSection,
        })
        .unwrap()
    }

    #[test]
    fn coincident_scatterer_returns_amplitude() {
        let geom = single_element_mono();
        let acq = small_acq(3);
        let zs = acq.z_positions();
        let amp = C64::new(0.7, -0.3);
        let scene = Scene::new(vec![Scatterer {
            x: 0.0,
            y: -1.0,
            z: zs[1],
            amplitude: amp,
        }]);
        let cube = simulate_monostatic(&scene, &geom, &acq, &SimulateOptions::default()).unwrap();
        for n in 0..acq.num_freqs {
            assert_eq!(cube.samples[[0, 1, n]], amp, "R = 0 must give exp(0) = 1");
        }
    }

    #[test]
    fn unit_scatterer_phase_oracle() {
        // Element at (0, -1), scatterer at origin: R = 1 m exactly.
        let geom = single_element_mono();
        let acq = small_acq(1);
        let scene = Scene::point(0.0, 0.0, 0.0);
        let cube = simulate_monostatic(&scene, &geom, &acq, &SimulateOptions::default()).unwrap();
        for (n, &k) in acq.wavenumbers().iter().enumerate() {
            let want = C64::new((-2.0 * k).cos(), (-2.0 * k).sin());
            let got = cube.samples[[0, 0, n]];
            assert!((got - want).norm() < 1e-12, "freq {n}: {got} vs {want}");
        }
    }

    #[test]
    fn superposition_of_scenes() {
        let spec = PolylineSpec {
            circumradius_r0: 1.0,
            num_sections: 2,
            modality: Modality::Monostatic,
            elements_per_section: 5,
            element_spacing: 0.01,
            tx_placement: TxPlacement::SectionJointsAndEnds,
            pairing_policy: PairingPolicy::WithinSection,
        };
        let geom = build_polyline(&spec).unwrap();
        let acq = small_acq(4);
        let a = Scene::new(vec![Scatterer {
            x: 0.03,
            y: 0.1,
            z: 0.01,
            amplitude: C64::new(1.0, 0.5),
        }]);
        let b = Scene::new(vec![Scatterer {
            x: -0.05,
            y: -0.04,
            z: -0.02,
            amplitude: C64::new(-0.3, 0.8),
        }]);
        let both = Scene::new([a.scatterers.clone(), b.scatterers.clone()].concat());
        let opts = SimulateOptions::default();
        let ca = simulate_monostatic(&a, &geom, &acq, &opts).unwrap();
        let cb = simulate_monostatic(&b, &geom, &acq, &opts).unwrap();
        let cab = simulate_monostatic(&both, &geom, &acq, &opts).unwrap();
        for (s, (sa, sb)) in cab.samples.iter().zip(ca.samples.iter().zip(cb.samples.iter())) {
            assert!((s - (sa + sb)).norm() < 1e-12);
        }
    }

    #[test]
    fn magnitude_never_exceeds_amplitude_sum() {
        let geom = single_element_mono();
        let acq = small_acq(5);
        let scene = Scene::new(vec![
            Scatterer { x: 0.1, y: 0.0, z: 0.0, amplitude: C64::new(1.0, 0.0) },
            Scatterer { x: -0.1, y: 0.1, z: 0.05, amplitude: C64::new(0.0, 2.0) },
        ]);
        let cube = simulate_monostatic(&scene, &geom, &acq, &SimulateOptions::default()).unwrap();
        let bound: f64 = scene.scatterers.iter().map(|s| s.amplitude.norm()).sum();
        for s in cube.samples.iter() {
            assert!(s.norm() <= bound + 1e-12);
        }
    }

    fn two_element_multi(tx_pos: (f64, f64), rx_pos: (f64, f64)) -> ArrayGeometry {
        let spec = PolylineSpec {
            circumradius_r0: 1.0,
            num_sections: 1,
            modality: Modality::Multistatic,
            elements_per_section: 1,
            element_spacing: 0.01,
            tx_placement: TxPlacement::SectionJointsAndEnds,
            pairing_policy: PairingPolicy::WithinSection,
        };
        ArrayGeometry {
            spec,
            elements: vec![
                Element { x: tx_pos.0, y: tx_pos.1, role: ElementRole::Transmit },
                Element { x: rx_pos.0, y: rx_pos.1, role: ElementRole::Receive },
            ],
            channels: vec![Channel { tx: 0, rx: 1 }],
            subtended_angle_theta_h: 0.1,
        }
    }

    #[test]
    fn coincident_tx_rx_reduces_to_monostatic() {
        let multi = two_element_multi((0.0, -1.0), (0.0, -1.0));
        let acq = small_acq(3);
        let scene = Scene::point(0.02, 0.05, -0.01);
        let opts = SimulateOptions::default();
        let mc = simulate_multistatic(&scene, &multi, &acq, &opts).unwrap();
        let mono = single_element_mono();
        let sc = simulate_monostatic(&scene, &mono, &acq, &opts).unwrap();
        for (a, b) in mc.samples.iter().zip(sc.samples.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn multistatic_phase_oracle() {
        // R_T = 0.8, R_R = 1.2: place tx/rx on the y axis below two probe
        // distances from the origin scatterer.
        let geom = two_element_multi((0.0, -0.8), (0.0, -1.2));
        let acq = small_acq(1);
        let scene = Scene::point(0.0, 0.0, 0.0);
        let cube = simulate_multistatic(&scene, &geom, &acq, &SimulateOptions::default()).unwrap();
        for (n, &k) in acq.wavenumbers().iter().enumerate() {
            let ph = -k * 2.0;
            let want = C64::new(ph.cos(), ph.sin());
            assert!((cube.samples[[0, 0, n]] - want).norm() < 1e-12);
        }
    }

    #[test]
    fn tx_rx_swap_reciprocity() {
        let a = two_element_multi((0.05, -1.0), (-0.07, -0.99));
        let b = two_element_multi((-0.07, -0.99), (0.05, -1.0));
        let acq = small_acq(3);
        let scene = Scene::point(0.01, 0.2, 0.004);
        let opts = SimulateOptions::default();
        let ca = simulate_multistatic(&scene, &a, &acq, &opts).unwrap();
        let cb = simulate_multistatic(&scene, &b, &acq, &opts).unwrap();
        assert_eq!(ca.samples, cb.samples);
    }

    #[test]
    fn vertical_translation_covariance() {
        // Shifting the scene by an integer number of scan steps shifts the
        // scan axis by the same count.
        let geom = single_element_mono();
        let acq = small_acq(9);
        let dz = acq.scan_step_dz;
        let base = Scene::point(0.04, 0.02, 0.0);
        let shifted = Scene::point(0.04, 0.02, 2.0 * dz);
        let opts = SimulateOptions::default();
        let c0 = simulate_monostatic(&base, &geom, &acq, &opts).unwrap();
        let c1 = simulate_monostatic(&shifted, &geom, &acq, &opts).unwrap();
        for m in 2..9 {
            for n in 0..acq.num_freqs {
                let a = c1.samples[[0, m, n]];
                let b = c0.samples[[0, m - 2, n]];
                assert!((a - b).norm() < 1e-9, "scan {m} freq {n}");
            }
        }
    }

    #[test]
    fn modality_mismatch_rejected() {
        let geom = single_element_mono();
        let acq = small_acq(2);
        let scene = Scene::point(0.0, 0.0, 0.0);
        assert!(matches!(
            simulate_multistatic(&scene, &geom, &acq, &SimulateOptions::default()),
            Err(ForwardError::ModalityMismatch { .. })
        ));
    }

    #[test]
    fn cube_size_guard() {
        let geom = single_element_mono();
        let acq = small_acq(100);
        let scene = Scene::point(0.0, 0.0, 0.0);
        let opts = SimulateOptions {
            max_samples: 10,
            ..Default::default()
        };
        assert!(matches!(
            simulate_monostatic(&scene, &geom, &acq, &opts),
            Err(ForwardError::CubeTooLarge { .. })
        ));
    }

    #[test]
    fn noise_infinite_snr_is_identity() {
        let geom = single_element_mono();
        let acq = small_acq(4);
        let cube = simulate_monostatic(&Scene::point(0.0, 0.1, 0.0), &geom, &acq, &Default::default()).unwrap();
        let noisy = add_noise(&cube, f64::INFINITY, 42);
        assert_eq!(noisy.samples, cube.samples);
    }

    #[test]
    fn noise_deterministic_and_calibrated() {
        // >= 1e5 samples so the empirical SNR estimate is tight.
        let spec = PolylineSpec {
            circumradius_r0: 1.0,
            num_sections: 2,
            modality: Modality::Monostatic,
            elements_per_section: 25,
            element_spacing: 0.005,
            tx_placement: TxPlacement::SectionJointsAndEnds,
            pairing_policy: PairingPolicy::WithinSection,
        };
        let geom = build_polyline(&spec).unwrap();
        let acq = AcquisitionSpec {
            num_scan_positions: 50,
            num_freqs: 51,
            ..small_acq(1)
        };
        let cube = simulate_monostatic(&Scene::point(0.0, 0.0, 0.0), &geom, &acq, &Default::default()).unwrap();
        assert!(cube.samples.len() >= 100_000);

        let a = add_noise(&cube, 20.0, 7);
        let b = add_noise(&cube, 20.0, 7);
        assert_eq!(a.samples, b.samples, "same seed must be bit-identical");
        let c = add_noise(&cube, 20.0, 8);
        assert_ne!(a.samples, c.samples);

        let sig: f64 = cube.samples.iter().map(|s| s.norm_sqr()).sum();
        let noise: f64 = a
            .samples
            .iter()
            .zip(cube.samples.iter())
            .map(|(y, x)| (y - x).norm_sqr())
            .sum();
        let snr_db = 10.0 * (sig / noise).log10();
        assert!((snr_db - 20.0).abs() < 0.5, "empirical SNR {snr_db}");
    }

    #[test]
    fn scene_json_round_trip() {
        let scene = Scene::default_cross();
        let json = scene.to_json();
        assert!(json.contains("amp_re"));
        let back = Scene::from_json(&json).unwrap();
        assert_eq!(back, scene);
    }
}
