use isac_doppler::scene::{
    draw_rician, noise_variance, snr_scale, stream_rng, synthesize_cube, synthesize_cube_trial,
    RadarParams, Target,
};
use isac_doppler::{Error, C64};
use proptest::prelude::*;

fn small(snr_db: Option<f64>, k_db: Option<f64>) -> RadarParams {
    RadarParams {
        packets: 32,
        range_bins: 10,
        angle_bins: 6,
        snr_db,
        rician_k_db: k_db,
        rng_seed: 17,
        ..RadarParams::default()
    }
}

fn target(p: &RadarParams, r: f64, a: f64, v: f64, amp: (f64, f64)) -> Target {
    Target {
        range_m: r * p.range_resolution_m,
        azimuth_rad: p.bin_azimuth(0) + a * (p.bin_azimuth(1) - p.bin_azimuth(0)),
        velocity_mps: v,
        amplitude: C64::new(amp.0, amp.1),
    }
}

fn arb_target() -> impl Strategy<Value = (f64, f64, f64, (f64, f64))> {
    (
        0.0..9.0f64,
        0.0..5.0f64,
        -150.0..150.0f64,
        (-2.0..2.0f64, -2.0..2.0f64),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn superposition_holds_without_noise(a in prop::collection::vec(arb_target(), 1..3),
                                         b in prop::collection::vec(arb_target(), 1..3)) {
        let p = small(None, None);
        let mk = |v: &[(f64, f64, f64, (f64, f64))]| -> Vec<Target> {
            v.iter().map(|&(r, ang, vel, amp)| target(&p, r, ang, vel, amp)).collect()
        };
        let (ta, tb) = (mk(&a), mk(&b));
        let both: Vec<Target> = ta.iter().chain(&tb).cloned().collect();
        let ya = synthesize_cube(&ta, &p).unwrap();
        let yb = synthesize_cube(&tb, &p).unwrap();
        let yab = synthesize_cube(&both, &p).unwrap();
        for ((x, y), z) in ya.data().iter().zip(yb.data()).zip(yab.data()) {
            prop_assert!((x + y - z).norm() <= 1e-12 * (1.0 + z.norm()));
        }
    }
}

#[test]
fn same_seed_gives_bit_identical_cubes() {
    let p = small(Some(5.0), Some(2.0));
    let t = [
        target(&p, 3.3, 2.1, 12.0, (1.0, 0.0)),
        target(&p, 6.0, 4.0, -40.0, (0.5, 0.2)),
    ];
    for trial in [0, 1, 99] {
        let a = synthesize_cube_trial(&t, &p, trial).unwrap();
        let b = synthesize_cube_trial(&t, &p, trial).unwrap();
        assert!(a
            .data()
            .iter()
            .zip(b.data())
            .all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits()));
    }
    let other = synthesize_cube_trial(&t, &p, 2).unwrap();
    assert_ne!(
        other.data(),
        synthesize_cube_trial(&t, &p, 1).unwrap().data()
    );
    let reseeded = RadarParams {
        rng_seed: 18,
        ..p.clone()
    };
    assert_ne!(
        synthesize_cube(&t, &reseeded).unwrap().data(),
        synthesize_cube(&t, &p).unwrap().data()
    );
}

/// Least-squares slope of the unwrapped phase.
fn phase_slope(samples: &[C64]) -> (f64, f64) {
    let mut phase = Vec::with_capacity(samples.len());
    let mut prev = samples[0].arg();
    phase.push(prev);
    for s in &samples[1..] {
        let mut ph = s.arg();
        while ph - prev > std::f64::consts::PI {
            ph -= 2.0 * std::f64::consts::PI;
        }
        while ph - prev < -std::f64::consts::PI {
            ph += 2.0 * std::f64::consts::PI;
        }
        phase.push(ph);
        prev = ph;
    }
    let n = phase.len() as f64;
    let mx = (n - 1.0) / 2.0;
    let my = phase.iter().sum::<f64>() / n;
    let sxy: f64 = phase
        .iter()
        .enumerate()
        .map(|(i, y)| (i as f64 - mx) * (y - my))
        .sum();
    let sxx: f64 = (0..phase.len()).map(|i| (i as f64 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let resid = phase
        .iter()
        .enumerate()
        .map(|(i, y)| (y - my - slope * (i as f64 - mx)).abs())
        .fold(0.0, f64::max);
    (slope, resid)
}

#[test]
fn target_cell_is_a_pure_tone() {
    let p = RadarParams {
        packets: 200,
        ..small(None, Some(2.0))
    };
    for v in [-300.0, -6.0, 0.0, 6.0, 47.5, 310.0] {
        let t = Target::on_grid(&p, 4, 3, v).with_amplitude(C64::new(0.3, -1.1));
        let cube = synthesize_cube(&[t], &p).unwrap();
        let y = cube.slow_time(4, 3);
        let m0 = y[0].norm();
        assert!(y.iter().all(|s| (s.norm() - m0).abs() <= 1e-12 * m0));
        let (slope, resid) = phase_slope(y);
        let expect = -4.0 * std::f64::consts::PI * v * p.pri_s / p.wavelength_m;
        assert!((slope - expect).abs() < 1e-9, "v={v}: {slope} vs {expect}");
        assert!(resid < 1e-9);
    }
}

#[test]
fn phase_step_example() {
    let p = RadarParams {
        wavelength_m: 0.005,
        pri_s: 2e-6,
        ..RadarParams::default()
    };
    let direct = 4.0 * std::f64::consts::PI * 6.0 * 2e-6 / 0.005;
    assert!((p.phase_step(6.0) - direct).abs() < 1e-15);
    assert!((p.phase_step(6.0) - 0.03016).abs() < 5e-6);
}

#[test]
fn snr_scale_example() {
    assert!((snr_scale(4.0, 3.0) - 4.0 / 10f64.powf(0.3)).abs() < 1e-15);
    assert!((snr_scale(4.0, 3.0) - 2.005).abs() < 5e-4);
    assert_eq!(snr_scale(1.0, 0.0), 1.0);
}

#[test]
fn noise_variance_uses_strongest_target() {
    let p = small(Some(10.0), None);
    let t = [
        Target::on_grid(&p, 1, 1, 0.0).with_amplitude(C64::new(2.0, 0.0)),
        Target::on_grid(&p, 2, 2, 0.0),
    ];
    assert!((noise_variance(&t, &p).unwrap().unwrap() - 0.4).abs() < 1e-12);
    assert_eq!(noise_variance(&t, &small(None, None)).unwrap(), None);
}

#[test]
fn rician_power_is_unity() {
    let mut rng = stream_rng(5, 0, 0);
    for k in [Some(2.0), Some(-10.0), Some(10.0)] {
        let draws = 1_000_000;
        let mut power = 0.0;
        for _ in 0..draws {
            power += draw_rician(k, &mut rng).norm_sqr();
        }
        let mean = power / draws as f64;
        assert!((mean - 1.0).abs() < 0.01, "K={k:?}: {mean}");
    }
}

#[test]
fn rician_limits() {
    let mut rng = stream_rng(9, 0, 0);
    assert_eq!(draw_rician(None, &mut rng), C64::new(1.0, 0.0));
    assert_eq!(
        draw_rician(Some(f64::INFINITY), &mut rng),
        C64::new(1.0, 0.0)
    );
    let draws = 200_000;
    let (mut sum, mut power) = (C64::new(0.0, 0.0), 0.0);
    for _ in 0..draws {
        let h = draw_rician(Some(f64::NEG_INFINITY), &mut rng);
        sum += h;
        power += h.norm_sqr();
    }
    // Rayleigh: zero mean, unit power
    assert!((sum / draws as f64).norm() < 0.01);
    assert!((power / draws as f64 - 1.0).abs() < 0.01);
}

#[test]
fn noise_only_cell_matches_configured_variance() {
    let p = RadarParams {
        packets: 512,
        range_bins: 16,
        angle_bins: 8,
        snr_db: Some(6.0),
        rician_k_db: None,
        ..RadarParams::default()
    };
    let t = Target::on_grid(&p, 0, 0, 10.0);
    let cube = synthesize_cube(&[t], &p).unwrap();
    let expected = snr_scale(1.0, 6.0);
    // cells far from the target only hold noise (sinc nulls on the grid)
    let mut power = 0.0;
    let mut count = 0;
    for r in 4..16 {
        for a in 4..8 {
            power += cube
                .slow_time(r, a)
                .iter()
                .map(|z| z.norm_sqr())
                .sum::<f64>();
            count += p.packets;
        }
    }
    let var = power / count as f64;
    assert!((var / expected - 1.0).abs() < 0.05, "{var} vs {expected}");
}

#[test]
fn ambiguous_velocity_names_the_target() {
    let p = small(None, None);
    let vmax = p.max_unambiguous_velocity();
    assert!((vmax - p.wavelength_m / (4.0 * p.pri_s)).abs() < 1e-9);
    let t = [
        Target::on_grid(&p, 1, 1, 10.0),
        Target::on_grid(&p, 2, 2, -vmax * 1.01),
    ];
    match synthesize_cube(&t, &p) {
        Err(Error::AmbiguousVelocity { index, .. }) => assert_eq!(index, 1),
        other => panic!("{other:?}"),
    }
    let msg = synthesize_cube(&t, &p).unwrap_err().to_string();
    assert!(msg.contains('1'), "{msg}");
}

#[test]
fn empty_scene_is_an_error() {
    assert!(matches!(
        synthesize_cube(&[], &small(None, None)),
        Err(Error::EmptyScene)
    ));
}
