//! Near-field millimeter-wave 3-D imaging with polyline-shaped antenna arrays.
//!
//! A polyline array places antennas on consecutive equal-length chords of a
//! circle, approximating an arc while staying easy to fabricate. Combined with
//! a mechanical scan perpendicular to the array plane it forms a 2-D aperture
//! made of rectangular facets. This crate provides the full simulation and
//! reconstruction chain for that aperture:
//!
//! * [`geometry`] — array construction, channel enumeration, sampling bounds,
//!   and resolution predictions,
//! * [`forward`] — point-scatterer echo synthesis for monostatic and
//!   multistatic arrays,
//! * [`spectral`] — the scan-axis Fourier transform and the dispersion
//!   relations that map (k, k_z) to the radial spatial frequency,
//! * [`nufft`] — a 1-D nonuniform-frequency → uniform-grid transform with a
//!   brute-force oracle, the performance core of the fast reconstruction,
//! * [`recon`] — the hybrid time-domain / spatial-frequency-domain imagers
//!   (NUFFT-accelerated and exact-summation variants) and the direct
//!   back-projection baseline,
//! * [`metrics`] — point-spread-function widths, sidelobe statistics, and
//!   cross-algorithm image similarity,
//! * [`plsc`] — a small binary container (JSON header + raw payload) used by
//!   the command-line pipeline.

pub mod geometry;
pub mod forward;
pub mod spectral;
pub mod nufft;
pub mod recon;
pub mod metrics;
pub mod plsc;

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Complex sample type used throughout the pipelines.
pub type C64 = num_complex::Complex<f64>;

/// FNV-1a hash of a byte slice, used to fingerprint geometry documents in
/// container provenance. Stable across platforms.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv1a_known_value() {
        // FNV-1a of empty input is the offset basis.
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
    }
}
