use isac_doppler::locator::{
    detect, estimate_snr_db, extract_slow_time, peak_search, peak_search_averaged,
    peak_search_doppler, Detection, DetectionMode,
};
use isac_doppler::scene::{
    synthesize_cube, synthesize_cube_trial, AmbiguityCube, RadarParams, Target,
};
use isac_doppler::{Error, C64};
use proptest::prelude::*;

fn grid(packets: usize, snr_db: Option<f64>, k_db: Option<f64>) -> RadarParams {
    RadarParams {
        packets,
        range_bins: 24,
        angle_bins: 12,
        snr_db,
        rician_k_db: k_db,
        ..RadarParams::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn peak_search_ignores_global_scaling(seed in 0u64..1000, re in -3.0..3.0f64, im in -3.0..3.0f64,
                                          r in 0usize..24, a in 0usize..12) {
        prop_assume!(re.hypot(im) > 1e-3);
        let p = RadarParams { rng_seed: seed, ..grid(8, Some(10.0), Some(2.0)) };
        let cube = synthesize_cube(&[Target::on_grid(&p, r, a, 15.0)], &p).unwrap();
        let c = C64::new(re, im);
        let s = cube.scaled(c);
        for n_ref in [0, 3, 7] {
            let d0 = peak_search(&cube, n_ref).unwrap();
            let d1 = peak_search(&s, n_ref).unwrap();
            prop_assert_eq!((d0.range_bin, d0.angle_bin), (d1.range_bin, d1.angle_bin));
        }
    }
}

#[test]
fn noiseless_grid_target_found_exactly() {
    let p = grid(16, None, Some(2.0));
    for (r, a) in [(0, 0), (5, 7), (23, 11)] {
        let cube = synthesize_cube(&[Target::on_grid(&p, r, a, -20.0)], &p).unwrap();
        for mode in [
            DetectionMode::Packet { n_ref: 5 },
            DetectionMode::CoherentAvg,
            DetectionMode::DopplerPeak,
        ] {
            let d = detect(&cube, mode).unwrap();
            assert_eq!((d.range_bin, d.angle_bin), (r, a), "{mode:?}");
        }
    }
}

#[test]
fn ties_go_to_lowest_cell() {
    let p = grid(4, None, None);
    let t = [
        Target::on_grid(&p, 9, 2, 0.0),
        Target::on_grid(&p, 3, 8, 0.0),
    ];
    let cube = synthesize_cube(&t, &p).unwrap();
    let d = peak_search(&cube, 0).unwrap();
    assert_eq!((d.range_bin, d.angle_bin), (3, 8));
}

fn correct_cell_rate(p: &RadarParams, mode: DetectionMode, trials: u64) -> f64 {
    let cell = (p.range_bins / 2 - 11, p.angle_bins / 2 - 3);
    let t = [Target::on_grid(p, cell.0, cell.1, 31.0)];
    let hits = (0..trials)
        .filter(|&k| {
            let cube = synthesize_cube_trial(&t, p, k).unwrap();
            let d = detect(&cube, mode).unwrap();
            (d.range_bin, d.angle_bin) == cell
        })
        .count();
    hits as f64 / trials as f64
}

#[test]
fn single_target_at_20db_lands_in_the_right_cell() {
    let p = RadarParams {
        packets: 4,
        snr_db: Some(20.0),
        rician_k_db: None,
        rng_seed: 2024,
        ..RadarParams::default()
    };
    let rate = correct_cell_rate(&p, DetectionMode::Packet { n_ref: 0 }, 500);
    assert!(rate >= 0.99, "{rate}");
}

#[test]
fn fading_needs_coherent_detection() {
    // one packet under a 2 dB Rician fade misses whenever |h|² dips under the
    // largest noise cell; integrating over the CPI recovers the margin
    let p = RadarParams {
        packets: 16,
        range_bins: 128,
        angle_bins: 32,
        snr_db: Some(20.0),
        rician_k_db: Some(2.0),
        rng_seed: 2024,
        ..RadarParams::default()
    };
    let single = correct_cell_rate(&p, DetectionMode::Packet { n_ref: 0 }, 500);
    let coherent = correct_cell_rate(&p, DetectionMode::DopplerPeak, 500);
    eprintln!("single packet {single}, doppler peak {coherent}");
    assert!(coherent >= 0.99, "{coherent}");
    assert!(single < coherent);
}

#[test]
fn extracted_slice_is_the_analytic_tone() {
    let p = grid(200, None, None);
    let amp = C64::new(0.7, 0.4);
    let t = Target::on_grid(&p, 11, 6, 6.0).with_amplitude(amp);
    let cube = synthesize_cube(&[t], &p).unwrap();
    let y = extract_slow_time(&cube, &peak_search(&cube, 0).unwrap()).unwrap();
    assert_eq!(y.len(), 200);
    let step = 4.0 * std::f64::consts::PI * 6.0 * p.pri_s / p.wavelength_m;
    for (n, s) in y.samples.iter().enumerate() {
        let want = amp * C64::from_polar(1.0, -step * n as f64);
        assert!((s - want).norm() < 1e-12, "n={n}");
    }
    let d = (y.samples[1] / y.samples[0]).arg();
    assert!((d + 0.03016).abs() < 1e-4, "{d}");
}

#[test]
fn noise_only_slice_has_configured_variance() {
    let p = grid(4096, Some(3.0), None);
    let cube = synthesize_cube(&[Target::on_grid(&p, 2, 2, 1.0)], &p).unwrap();
    let det = Detection {
        range_bin: 20,
        angle_bin: 9,
        peak_magnitude: 0.0,
    };
    let y = extract_slow_time(&cube, &det).unwrap();
    let var = y.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() / y.len() as f64;
    let want = 10f64.powf(-0.3);
    assert!((var / want - 1.0).abs() < 0.08, "{var} vs {want}");
}

#[test]
fn detection_modes_agree_at_high_snr() {
    let p = grid(64, Some(30.0), Some(2.0));
    let cube = synthesize_cube(&[Target::on_grid(&p, 13, 4, -50.0)], &p).unwrap();
    for d in [
        peak_search(&cube, 0).unwrap(),
        peak_search_averaged(&cube).unwrap(),
        peak_search_doppler(&cube).unwrap(),
    ] {
        assert_eq!((d.range_bin, d.angle_bin), (13, 4));
    }
}

#[test]
fn snr_helper_reads_back_the_scene() {
    let p = RadarParams {
        packets: 64,
        range_bins: 48,
        angle_bins: 16,
        snr_db: Some(15.0),
        rician_k_db: None,
        ..RadarParams::default()
    };
    let cube = synthesize_cube(&[Target::on_grid(&p, 30, 8, 5.0)], &p).unwrap();
    let det = peak_search(&cube, 0).unwrap();
    let snr = estimate_snr_db(&cube, &det, 1);
    assert!((snr - 15.0).abs() < 1.0, "{snr}");
}

#[test]
fn bad_inputs() {
    let p = grid(8, None, None);
    let zero = AmbiguityCube::zeros(p.clone());
    assert!(matches!(peak_search(&zero, 0), Err(Error::ZeroSlice)));
    let cube = synthesize_cube(&[Target::on_grid(&p, 1, 1, 0.0)], &p).unwrap();
    assert!(peak_search(&cube, 8).is_err());
    let outside = Detection {
        range_bin: 1,
        angle_bin: 12,
        peak_magnitude: 1.0,
    };
    assert!(extract_slow_time(&cube, &outside).is_err());
}
