//! End-to-end simulate -> reconstruct -> analyze checks on small grids.

use polyscan_core::forward::{simulate_monostatic, simulate_multistatic, Scene, SimulateOptions};
use polyscan_core::geometry::{
    build_polyline, AcquisitionSpec, ArrayGeometry, Modality, PairingPolicy, PolylineSpec,
    TxPlacement,
};
use polyscan_core::metrics::psf_analyze;
use polyscan_core::recon::{reconstruct, Algorithm, AxisSpec, ImageGrid, ReconOptions};
use polyscan_core::C64;

fn spec(modality: Modality, sections: usize, per: usize, spacing: f64) -> PolylineSpec {
    PolylineSpec {
        circumradius_r0: 1.0,
        num_sections: sections,
        modality,
        elements_per_section: per,
        element_spacing: spacing,
        tx_placement: TxPlacement::SectionJointsAndEnds,
        pairing_policy: PairingPolicy::WithinSection,
    }
}

fn table1_mono() -> ArrayGeometry {
    build_polyline(&spec(Modality::Monostatic, 3, 40, 0.0048)).unwrap()
}

fn table1_multi() -> ArrayGeometry {
    build_polyline(&spec(Modality::Multistatic, 3, 20, 0.0102)).unwrap()
}

/// Table-I frequencies with a shortened vertical scan (keeps the step
/// compliant while making the tests fast).
fn short_acq() -> AcquisitionSpec {
    AcquisitionSpec {
        freq_start: 30e9,
        freq_stop: 35e9,
        num_freqs: 51,
        scan_step_dz: 0.005,
        num_scan_positions: 51,
    }
}

fn simulate(scene: &Scene, geom: &ArrayGeometry, acq: &AcquisitionSpec) -> polyscan_core::forward::DataCube {
    match geom.modality() {
        Modality::Monostatic => {
            simulate_monostatic(scene, geom, acq, &SimulateOptions::default()).unwrap()
        }
        Modality::Multistatic => {
            simulate_multistatic(scene, geom, acq, &SimulateOptions::default()).unwrap()
        }
    }
}

fn peak_grid(center: [f64; 3]) -> ImageGrid {
    ImageGrid {
        x: AxisSpec::new(center[0] - 0.06, center[0] + 0.06, 25),
        y: AxisSpec::new(center[1] - 0.08, center[1] + 0.08, 25),
        z: AxisSpec::new(center[2] - 0.06, center[2] + 0.06, 25),
    }
}

fn assert_peak_within_half_voxel(
    img: &polyscan_core::recon::ImageVolume,
    truth: [f64; 3],
    label: &str,
) {
    let report = psf_analyze(img, Some(truth)).unwrap();
    assert!(!report.boundary_peak, "{label}: peak on grid boundary");
    let off = report.peak_offset.unwrap();
    let half = [
        img.grid.x.step() / 2.0,
        img.grid.y.step() / 2.0,
        img.grid.z.step() / 2.0,
    ];
    for axis in 0..3 {
        assert!(
            off[axis].abs() <= half[axis] + 1e-12,
            "{label}: axis {axis} offset {:.4e} m exceeds half voxel {:.4e} m",
            off[axis],
            half[axis]
        );
    }
}

#[test]
fn monostatic_point_target_focuses_in_all_algorithms() {
    let geom = table1_mono();
    let acq = short_acq();
    let truth = [0.02, 0.03, 0.01];
    let scene = Scene::point(truth[0], truth[1], truth[2]);
    let cube = simulate(&scene, &geom, &acq);
    let grid = peak_grid(truth);
    let opts = ReconOptions::default();
    for algo in Algorithm::ALL {
        let img = reconstruct(&cube, &geom, &acq, &grid, algo, &opts).unwrap();
        assert_peak_within_half_voxel(&img, truth, algo.as_str());
    }
}

#[test]
fn multistatic_point_target_focuses_in_all_algorithms() {
    let geom = table1_multi();
    let acq = short_acq();
    let truth = [-0.015, 0.02, -0.02];
    let scene = Scene::point(truth[0], truth[1], truth[2]);
    let cube = simulate(&scene, &geom, &acq);
    let grid = peak_grid(truth);
    let opts = ReconOptions::default();
    // Peak positions of the spectral-domain approximation and the exact
    // time-domain baseline must coincide (approximation soundness).
    let mut peaks = Vec::new();
    for algo in Algorithm::ALL {
        let img = reconstruct(&cube, &geom, &acq, &grid, algo, &opts).unwrap();
        assert_peak_within_half_voxel(&img, truth, algo.as_str());
        let report = psf_analyze(&img, None).unwrap();
        peaks.push(report.peak_position);
    }
    let half = [
        peak_grid(truth).x.step() / 2.0,
        peak_grid(truth).y.step() / 2.0,
        peak_grid(truth).z.step() / 2.0,
    ];
    for axis in 0..3 {
        assert!(
            (peaks[0][axis] - peaks[2][axis]).abs() <= half[axis],
            "axis {axis}: nufft peak {} vs direct-bp peak {}",
            peaks[0][axis],
            peaks[2][axis]
        );
    }
}

#[test]
fn reconstruction_is_linear_in_the_data() {
    // Small setup so all three algorithms stay cheap.
    let geom = build_polyline(&spec(Modality::Monostatic, 1, 10, 0.0048)).unwrap();
    let acq = AcquisitionSpec {
        freq_start: 30e9,
        freq_stop: 35e9,
        num_freqs: 6,
        scan_step_dz: 0.005,
        num_scan_positions: 17,
    };
    let cube_a = simulate(&Scene::point(0.01, 0.0, 0.0), &geom, &acq);
    let cube_b = simulate(&Scene::point(-0.02, 0.015, 0.01), &geom, &acq);
    let mut cube_sum = cube_a.clone();
    cube_sum.samples = &cube_a.samples + &cube_b.samples;

    let grid = ImageGrid {
        x: AxisSpec::new(-0.03, 0.03, 9),
        y: AxisSpec::new(-0.02, 0.03, 9),
        z: AxisSpec::new(-0.02, 0.02, 9),
    };
    let opts = ReconOptions::default();
    for algo in Algorithm::ALL {
        let ia = reconstruct(&cube_a, &geom, &acq, &grid, algo, &opts).unwrap();
        let ib = reconstruct(&cube_b, &geom, &acq, &grid, algo, &opts).unwrap();
        let iab = reconstruct(&cube_sum, &geom, &acq, &grid, algo, &opts).unwrap();
        let scale: f64 = iab.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let err: f64 = iab
            .data
            .iter()
            .zip(ia.data.iter().zip(ib.data.iter()))
            .map(|(s, (a, b))| (s - (a + b)).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(
            err / scale < 1e-9,
            "{algo}: relative linearity error {}",
            err / scale
        );
    }
}

#[test]
fn omega_k_engines_agree_end_to_end() {
    let geom = table1_mono();
    let acq = short_acq();
    let scene = Scene::new(vec![
        polyscan_core::forward::Scatterer {
            x: 0.0,
            y: 0.0,
            z: 0.0,
            amplitude: C64::new(1.0, 0.0),
        },
        polyscan_core::forward::Scatterer {
            x: -0.03,
            y: 0.02,
            z: 0.02,
            amplitude: C64::new(0.5, 0.5),
        },
    ]);
    let cube = simulate(&scene, &geom, &acq);
    let grid = ImageGrid {
        x: AxisSpec::new(-0.05, 0.05, 21),
        y: AxisSpec::new(-0.05, 0.05, 21),
        z: AxisSpec::new(-0.04, 0.04, 17),
    };
    let opts = ReconOptions::default();
    let fast = reconstruct(&cube, &geom, &acq, &grid, Algorithm::OmegakNufftBp, &opts).unwrap();
    let exact = reconstruct(&cube, &geom, &acq, &grid, Algorithm::OmegakBp, &opts).unwrap();
    let peak = exact.peak_magnitude();
    let maxdiff = fast
        .data
        .iter()
        .zip(exact.data.iter())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    assert!(
        maxdiff <= 1e-5 * peak,
        "engine difference {maxdiff} vs peak {peak}"
    );
}

#[test]
fn cross_range_width_shrinks_with_more_sections() {
    // Wider subtended angle -> finer horizontal resolution, measured as the
    // -3 dB width of the x cut (ordering only).
    let acq = short_acq();
    let mut widths = Vec::new();
    for sections in [1, 2, 3] {
        let geom = build_polyline(&spec(Modality::Monostatic, sections, 40, 0.0048)).unwrap();
        let cube = simulate(&Scene::point(0.0, 0.0, 0.0), &geom, &acq);
        let grid = ImageGrid {
            x: AxisSpec::new(-0.045, 0.045, 61),
            y: AxisSpec::new(-0.06, 0.06, 17),
            z: AxisSpec::new(-0.03, 0.03, 9),
        };
        let img = reconstruct(
            &cube,
            &geom,
            &acq,
            &grid,
            Algorithm::OmegakNufftBp,
            &ReconOptions::default(),
        )
        .unwrap();
        let report = psf_analyze(&img, None).unwrap();
        widths.push(report.width_3db[0].expect("x width measurable"));
    }
    assert!(
        widths[0] >= widths[1] * 0.98 && widths[1] >= widths[2] * 0.98,
        "widths not nonincreasing: {widths:?}"
    );
}
