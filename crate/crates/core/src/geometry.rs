//! Polyline array geometry, acquisition grids, sampling bounds, and
//! resolution predictions.
//!
//! Coordinate convention used by every module: the circumscribed circle of
//! the polyline is centered at the origin, the array lies in the z = 0 plane
//! before scanning, is symmetric about the y axis, and is concave toward the
//! target half-space y > 0 (the array occupies y < 0). The mechanical scan
//! moves the whole array along z.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::SPEED_OF_LIGHT;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("invalid polyline spec: {0}")]
    Validation(String),
    #[error("chord length {chord} m exceeds circle diameter {diameter} m; polyline is infeasible")]
    ChordExceedsDiameter { chord: f64, diameter: f64 },
    #[error("invalid acquisition: {0}")]
    Acquisition(String),
    #[error("bandwidth is zero; down-range resolution is undefined")]
    ZeroBandwidth,
    #[error("angle {name} = {value} rad must lie in (0, pi)")]
    AngleOutOfRange { name: &'static str, value: f64 },
}

/// Whether each channel uses one shared transmit/receive phase center or a
/// distinct transmit-receive element pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    Monostatic,
    Multistatic,
}

impl Modality {
    pub fn as_str(self) -> &'static str {
        match self {
            Modality::Monostatic => "monostatic",
            Modality::Multistatic => "multistatic",
        }
    }
}

/// Placement rule for the sparse transmit elements of a multistatic array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TxPlacement {
    /// One transmit element at every chord joint and at both outer ends,
    /// i.e. `num_sections + 1` elements total.
    #[default]
    SectionJointsAndEnds,
}

/// Which transmit-receive combinations form channels (multistatic only).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PairingPolicy {
    /// Every transmit element pairs with every receive element.
    AllPairs,
    /// Each section's two end transmitters pair with that section's
    /// receivers only. Equivalent imaging-wise because the array direction
    /// is processed in the time domain.
    #[default]
    WithinSection,
}

/// Input description of a polyline array. Each section is a chord of the
/// circle of radius `circumradius_r0`, all chords subtending equal central
/// angles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolylineSpec {
    /// Radius of the circumscribed circle (m).
    pub circumradius_r0: f64,
    pub num_sections: usize,
    pub modality: Modality,
    /// Monostatic: transceiver pairs per section. Multistatic: receive
    /// elements per section.
    pub elements_per_section: usize,
    /// Element spacing along each chord (m).
    pub element_spacing: f64,
    #[serde(default)]
    pub tx_placement: TxPlacement,
    #[serde(default)]
    pub pairing_policy: PairingPolicy,
}

impl PolylineSpec {
    /// Chord length of one section: `(elements_per_section - 1) * spacing`.
    pub fn chord_length(&self) -> f64 {
        (self.elements_per_section.saturating_sub(1)) as f64 * self.element_spacing
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if self.num_sections == 0 {
            return Err(GeometryError::Validation("num_sections must be >= 1".into()));
        }
        if self.elements_per_section == 0 {
            return Err(GeometryError::Validation(
                "elements_per_section must be >= 1".into(),
            ));
        }
        if !(self.circumradius_r0 > 0.0) {
            return Err(GeometryError::Validation(
                "circumradius_r0 must be positive".into(),
            ));
        }
        if !(self.element_spacing > 0.0) {
            return Err(GeometryError::Validation(
                "element_spacing must be positive".into(),
            ));
        }
        let chord = self.chord_length();
        if chord > 2.0 * self.circumradius_r0 {
            return Err(GeometryError::ChordExceedsDiameter {
                chord,
                diameter: 2.0 * self.circumradius_r0,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementRole {
    Transceiver,
    Transmit,
    Receive,
}

/// A physical antenna element in the z = 0 array plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Element {
    pub x: f64,
    pub y: f64,
    pub role: ElementRole,
}

/// One measurement channel. Monostatic channels have `tx == rx` (the shared
/// transceiver element index); multistatic channels reference a transmit and
/// a receive element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Channel {
    pub tx: usize,
    pub rx: usize,
}

/// A constructed polyline array: element positions, channel enumeration, and
/// the angle subtended by the circumscribed arc.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub spec: PolylineSpec,
    pub elements: Vec<Element>,
    pub channels: Vec<Channel>,
    /// `num_sections * 2 * asin(chord / (2 R0))`, radians.
    pub subtended_angle_theta_h: f64,
}

impl ArrayGeometry {
    pub fn modality(&self) -> Modality {
        self.spec.modality
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    /// Joint positions (chord endpoints), `num_sections + 1` points from the
    /// -x end to the +x end.
    pub fn joints(&self) -> Vec<(f64, f64)> {
        joint_positions(&self.spec)
    }
}

fn joint_positions(spec: &PolylineSpec) -> Vec<(f64, f64)> {
    let r0 = spec.circumradius_r0;
    let half_angle = (spec.chord_length() / (2.0 * r0)).asin();
    let n = spec.num_sections;
    (0..=n)
        .map(|j| {
            // Angle measured from the -y axis; symmetric about x = 0.
            let theta = (j as f64 - n as f64 / 2.0) * 2.0 * half_angle;
            (r0 * theta.sin(), -r0 * theta.cos())
        })
        .collect()
}

/// Evenly spaced points along the chord from `a` to `b`, endpoints included.
fn chord_points(a: (f64, f64), b: (f64, f64), count: usize) -> Vec<(f64, f64)> {
    (0..count)
        .map(|i| {
            let t = if count > 1 {
                i as f64 / (count - 1) as f64
            } else {
                0.5
            };
            (a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1))
        })
        .collect()
}

/// Build the element layout and channel list for a polyline spec.
///
/// Monostatic arrays place `elements_per_section` transceivers per chord
/// (endpoints included) and get one channel per element. Multistatic arrays
/// place receivers the same way, put one transmitter at every joint and end,
/// and enumerate channels per the spec's pairing policy.
pub fn build_polyline(spec: &PolylineSpec) -> Result<ArrayGeometry, GeometryError> {
    spec.validate()?;
    let joints = joint_positions(spec);
    let half_angle = (spec.chord_length() / (2.0 * spec.circumradius_r0)).asin();
    let theta_h = spec.num_sections as f64 * 2.0 * half_angle;

    let mut elements = Vec::new();
    let mut channels = Vec::new();

    match spec.modality {
        Modality::Monostatic => {
            for s in 0..spec.num_sections {
                for p in chord_points(joints[s], joints[s + 1], spec.elements_per_section) {
                    elements.push(Element {
                        x: p.0,
                        y: p.1,
                        role: ElementRole::Transceiver,
                    });
                    let idx = elements.len() - 1;
                    channels.push(Channel { tx: idx, rx: idx });
                }
            }
        }
        Modality::Multistatic => {
            // Transmitters first (indices 0..=num_sections), then receivers.
            for &(x, y) in &joints {
                elements.push(Element {
                    x,
                    y,
                    role: ElementRole::Transmit,
                });
            }
            let mut section_rx: Vec<Vec<usize>> = Vec::with_capacity(spec.num_sections);
            for s in 0..spec.num_sections {
                let mut idxs = Vec::with_capacity(spec.elements_per_section);
                for p in chord_points(joints[s], joints[s + 1], spec.elements_per_section) {
                    elements.push(Element {
                        x: p.0,
                        y: p.1,
                        role: ElementRole::Receive,
                    });
                    idxs.push(elements.len() - 1);
                }
                section_rx.push(idxs);
            }
            match spec.pairing_policy {
                PairingPolicy::AllPairs => {
                    let rx_all: Vec<usize> = section_rx.iter().flatten().copied().collect();
                    for tx in 0..=spec.num_sections {
                        for &rx in &rx_all {
                            channels.push(Channel { tx, rx });
                        }
                    }
                }
                PairingPolicy::WithinSection => {
                    for (s, rxs) in section_rx.iter().enumerate() {
                        for tx in [s, s + 1] {
                            for &rx in rxs {
                                channels.push(Channel { tx, rx });
                            }
                        }
                    }
                }
            }
        }
    }

    Ok(ArrayGeometry {
        spec: spec.clone(),
        elements,
        channels,
        subtended_angle_theta_h: theta_h,
    })
}

/// Stepped-frequency acquisition over a vertical scan. The scan extent is
/// centered on z = 0; position m is `(m - (N-1)/2) * scan_step_dz`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionSpec {
    pub freq_start: f64,
    pub freq_stop: f64,
    pub num_freqs: usize,
    pub scan_step_dz: f64,
    pub num_scan_positions: usize,
}

impl AcquisitionSpec {
    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.freq_stop > self.freq_start) {
            return Err(GeometryError::Acquisition(
                "freq_stop must exceed freq_start".into(),
            ));
        }
        if self.num_freqs < 2 {
            return Err(GeometryError::Acquisition("num_freqs must be >= 2".into()));
        }
        if !(self.freq_start > 0.0) {
            return Err(GeometryError::Acquisition("freq_start must be positive".into()));
        }
        if self.num_scan_positions == 0 {
            return Err(GeometryError::Acquisition(
                "num_scan_positions must be >= 1".into(),
            ));
        }
        if !(self.scan_step_dz > 0.0) {
            return Err(GeometryError::Acquisition("scan_step_dz must be positive".into()));
        }
        Ok(())
    }

    pub fn bandwidth(&self) -> f64 {
        self.freq_stop - self.freq_start
    }

    pub fn freq_step(&self) -> f64 {
        self.bandwidth() / (self.num_freqs - 1) as f64
    }

    /// Frequency grid, `f_i = freq_start + i * freq_step`.
    pub fn freqs(&self) -> Vec<f64> {
        let df = self.freq_step();
        (0..self.num_freqs)
            .map(|i| self.freq_start + i as f64 * df)
            .collect()
    }

    /// Wavenumber grid `k = 2 pi f / c`, strictly increasing and uniform.
    pub fn wavenumbers(&self) -> Vec<f64> {
        self.freqs()
            .iter()
            .map(|f| 2.0 * std::f64::consts::PI * f / SPEED_OF_LIGHT)
            .collect()
    }

    pub fn lambda_min(&self) -> f64 {
        SPEED_OF_LIGHT / self.freq_stop
    }

    pub fn center_freq(&self) -> f64 {
        0.5 * (self.freq_start + self.freq_stop)
    }

    pub fn lambda_center(&self) -> f64 {
        SPEED_OF_LIGHT / self.center_freq()
    }

    pub fn center_wavenumber(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.center_freq() / SPEED_OF_LIGHT
    }

    /// Scan start position (most negative z'), `-(N-1)/2 * dz`.
    pub fn scan_start(&self) -> f64 {
        -0.5 * (self.num_scan_positions - 1) as f64 * self.scan_step_dz
    }

    /// Vertical scan positions, `z_m = scan_start + m * dz`.
    pub fn z_positions(&self) -> Vec<f64> {
        let z0 = self.scan_start();
        (0..self.num_scan_positions)
            .map(|m| z0 + m as f64 * self.scan_step_dz)
            .collect()
    }

    pub fn scan_length(&self) -> f64 {
        (self.num_scan_positions - 1) as f64 * self.scan_step_dz
    }

    /// Default vertical view angle: the angle the scan extent subtends from a
    /// scene center at standoff `r0`.
    pub fn default_theta_z(&self, r0: f64) -> f64 {
        2.0 * (self.scan_length() / (2.0 * r0)).atan()
    }
}

/// Spacing bounds against the anti-aliasing phase criterion, plus the actual
/// spacings of a concrete design.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SamplingReport {
    /// Receive-element bound for multistatic arrays (m):
    /// `lambda_min * sqrt((L_R + D)^2 / 4 + R0^2) / (L_R + D)`.
    pub rx_spacing_bound: f64,
    /// Monostatic bound (m), exactly half the receive bound (two-way
    /// propagation).
    pub mono_spacing_bound: f64,
    /// Vertical scan-step bound (m): `lambda_min / (4 sin(theta_z / 2))`.
    pub vertical_step_bound: f64,
    pub actual_element_spacing: f64,
    pub actual_vertical_step: f64,
    pub spacing_ok: bool,
    pub vertical_ok: bool,
    pub target_dimension_d: f64,
    pub standoff_r0: f64,
    pub section_length_lr: f64,
    pub theta_z: f64,
    pub lambda_min: f64,
}

/// Evaluate the element-spacing and scan-step bounds for a geometry.
///
/// `target_dimension_d` is the maximal horizontal target extent the design
/// should image alias-free; `theta_z` is the vertical view angle (the smaller
/// of the beamwidth and the angle subtended by the scan).
pub fn check_sampling(
    geom: &ArrayGeometry,
    acq: &AcquisitionSpec,
    target_dimension_d: f64,
    theta_z: f64,
) -> Result<SamplingReport, GeometryError> {
    acq.validate()?;
    if target_dimension_d < 0.0 {
        return Err(GeometryError::Validation(
            "target_dimension_d must be >= 0".into(),
        ));
    }
    if !(theta_z > 0.0 && theta_z < std::f64::consts::PI) {
        return Err(GeometryError::AngleOutOfRange {
            name: "theta_z",
            value: theta_z,
        });
    }

    let lambda_min = acq.lambda_min();
    let r0 = geom.spec.circumradius_r0;
    let lr = geom.spec.chord_length();
    let span = lr + target_dimension_d;
    // Point-aperture / point-target limit: the phase difference between
    // adjacent elements vanishes, so any spacing passes.
    let rx_bound = if span == 0.0 {
        f64::INFINITY
    } else {
        lambda_min * (span * span / 4.0 + r0 * r0).sqrt() / span
    };
    let mono_bound = rx_bound / 2.0;
    let vertical_bound = lambda_min / (4.0 * (theta_z / 2.0).sin());

    let actual = geom.spec.element_spacing;
    let spacing_ok = match geom.spec.modality {
        Modality::Monostatic => actual <= mono_bound,
        Modality::Multistatic => actual <= rx_bound,
    };

    Ok(SamplingReport {
        rx_spacing_bound: rx_bound,
        mono_spacing_bound: mono_bound,
        vertical_step_bound: vertical_bound,
        actual_element_spacing: actual,
        actual_vertical_step: acq.scan_step_dz,
        spacing_ok,
        vertical_ok: acq.scan_step_dz <= vertical_bound,
        target_dimension_d,
        standoff_r0: r0,
        section_length_lr: lr,
        theta_z,
        lambda_min,
    })
}

/// Predicted image resolutions. The same formulas apply to both modalities.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResolutionReport {
    /// Horizontal cross-range resolution (m): `lambda_c / (4 sin(theta_h/2))`.
    pub delta_x: f64,
    /// Down-range resolution (m): `c / (2 B)`.
    pub delta_y: f64,
    /// Vertical cross-range resolution (m): `lambda_c / (4 sin(theta_z/2))`.
    pub delta_z: f64,
    pub theta_h: f64,
    pub theta_z: f64,
    pub lambda_c: f64,
    pub k_c: f64,
    /// Maximum horizontal spatial frequency `2 k_c sin(theta_h / 2)` (rad/m).
    pub k_x_max: f64,
}

pub fn predict_resolutions(
    geom: &ArrayGeometry,
    acq: &AcquisitionSpec,
    theta_z: f64,
) -> Result<ResolutionReport, GeometryError> {
    let bandwidth = acq.freq_stop - acq.freq_start;
    if bandwidth <= 0.0 {
        return Err(GeometryError::ZeroBandwidth);
    }
    let theta_h = geom.subtended_angle_theta_h;
    if !(theta_h > 0.0 && theta_h < std::f64::consts::PI) {
        return Err(GeometryError::AngleOutOfRange {
            name: "theta_h",
            value: theta_h,
        });
    }
    if !(theta_z > 0.0 && theta_z < std::f64::consts::PI) {
        return Err(GeometryError::AngleOutOfRange {
            name: "theta_z",
            value: theta_z,
        });
    }
    let lambda_c = acq.lambda_center();
    let k_c = acq.center_wavenumber();
    Ok(ResolutionReport {
        delta_x: lambda_c / (4.0 * (theta_h / 2.0).sin()),
        delta_y: SPEED_OF_LIGHT / (2.0 * bandwidth),
        delta_z: lambda_c / (4.0 * (theta_z / 2.0).sin()),
        theta_h,
        theta_z,
        lambda_c,
        k_c,
        k_x_max: 2.0 * k_c * (theta_h / 2.0).sin(),
    })
}

/// Geometry document exchanged on disk: the input spec plus everything
/// derived from it, alongside the acquisition it was designed for.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeometryDoc {
    pub polyline: PolylineSpec,
    pub acquisition: AcquisitionSpec,
    pub subtended_angle_theta_h: f64,
    pub elements: Vec<Element>,
    pub channels: Vec<Channel>,
}

impl GeometryDoc {
    pub fn new(geom: &ArrayGeometry, acq: &AcquisitionSpec) -> Self {
        GeometryDoc {
            polyline: geom.spec.clone(),
            acquisition: acq.clone(),
            subtended_angle_theta_h: geom.subtended_angle_theta_h,
            elements: geom.elements.clone(),
            channels: geom.channels.clone(),
        }
    }

    pub fn geometry(&self) -> ArrayGeometry {
        ArrayGeometry {
            spec: self.polyline.clone(),
            elements: self.elements.clone(),
            channels: self.channels.clone(),
            subtended_angle_theta_h: self.subtended_angle_theta_h,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("geometry doc serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    /// Stable fingerprint of the document, recorded in container provenance.
    pub fn fingerprint(&self) -> u64 {
        crate::fnv1a64(self.to_json().as_bytes())
    }
}
