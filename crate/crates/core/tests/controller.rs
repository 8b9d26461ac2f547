use isac_doppler::controller::{
    calibrate, plan, reconfigure, threshold_report, CalibrationGrid, Mode, PacketOption,
    PlanRequest, Policy, Rationale, SwitchPoint,
};
use isac_doppler::doppler::{Algorithm, EstimatorConfig};
use isac_doppler::locator::DetectionMode;
use isac_doppler::scene::RadarParams;
use proptest::prelude::*;

fn policy_with_threshold(sep: f64, snr: Option<f64>) -> Policy {
    let small = PacketOption::new(50, 2e-6);
    let large = PacketOption::new(200, 2e-6);
    Policy {
        packet_options: vec![small, large],
        thresholds: vec![SwitchPoint {
            separation_mps: sep,
            small,
            large,
            snr_db: snr,
        }],
        ..Policy::default()
    }
}

#[test]
fn coarse_precision_picks_smallest_fft() {
    let p = Policy::default();
    let size = |q: Option<f64>| match plan(&PlanRequest::coarse(q), &p).unwrap().config {
        EstimatorConfig {
            algorithm: Algorithm::Fft,
            fft_size,
            ..
        } => fft_size,
        other => panic!("{other:?}"),
    };
    assert_eq!(size(Some(4.2)), 1024);
    assert_eq!(size(None), 4096);
    assert_eq!(size(Some(0.3)), 16384);
    // nothing meets 1 mm/s: fall back to the finest grid
    assert_eq!(size(Some(0.001)), 16384);
    let d = plan(&PlanRequest::coarse(Some(4.2)), &p).unwrap();
    assert_eq!(
        (d.packets, d.pri_s, d.rationale),
        (200, 0.58e-6, Rationale::PrecisionRequest)
    );
    assert_eq!(
        plan(&PlanRequest::coarse(None), &p).unwrap().rationale,
        Rationale::CoarseDefault
    );
}

#[test]
fn fine_mode_switches_above_threshold() {
    let p = policy_with_threshold(6.0, Some(12.0));
    let high = plan(&PlanRequest::fine(20.0, Some(6.0)), &p).unwrap();
    assert_eq!((high.packets, high.pri_s), (50, 2e-6));
    assert_eq!(high.config.algorithm, Algorithm::EspritLo);
    assert_eq!(high.rationale, Rationale::FineHighSnr);
    let low = plan(&PlanRequest::fine(5.0, Some(6.0)), &p).unwrap();
    assert_eq!((low.packets, low.rationale), (200, Rationale::FineLowSnr));
    let worst = plan(&PlanRequest::fine(f64::NEG_INFINITY, None), &p).unwrap();
    assert_eq!(worst.packets, 200);
    let ratio = high.predicted_latency_ops as f64 / low.predicted_latency_ops as f64;
    assert!(ratio <= 0.55, "{ratio}");
}

#[test]
fn uncalibrated_pair_never_switches() {
    let p = policy_with_threshold(6.0, None);
    assert_eq!(
        plan(&PlanRequest::fine(60.0, Some(6.0)), &p)
            .unwrap()
            .packets,
        200
    );
    assert!(plan(&PlanRequest::fine(f64::NAN, None), &p).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn plan_is_pure(snr in -20.0..60.0f64, hint in prop::option::of(0.5..20.0f64), coarse in any::<bool>(),
                    prec in prop::option::of(0.1..10.0f64)) {
        let p = policy_with_threshold(4.0, Some(15.0));
        let req = if coarse {
            PlanRequest { snr_db: snr, ..PlanRequest::coarse(prec) }
        } else {
            PlanRequest::fine(snr, hint)
        };
        let a = plan(&req, &p).unwrap();
        let b = plan(&req, &p.clone()).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(p.packet_options.iter().any(|o| o.packets == a.packets && o.pri_s == a.pri_s)
            || (a.mode == Mode::Coarse && a.packets == p.coarse_option.packets));
        if a.mode == Mode::Coarse {
            prop_assert!(p.fft_sizes.contains(&a.config.fft_size));
        }
    }
}

#[test]
fn reconfiguration_cost() {
    let p = Policy::default();
    let cost = |a: EstimatorConfig, b: EstimatorConfig| reconfigure(&a, &b, &p);
    assert_eq!(
        cost(EstimatorConfig::fft(1024, 2), EstimatorConfig::fft(4096, 2)),
        0
    );
    assert_eq!(
        cost(EstimatorConfig::fft(1024, 2), EstimatorConfig::esprit_lo(2)),
        p.reconfig_cost_ops
    );
    assert_eq!(
        cost(
            EstimatorConfig::esprit_lo(2),
            EstimatorConfig::esprit_lo(2).with_smoothing_len(25)
        ),
        0
    );
}

#[test]
fn single_option_calibration_is_noop() {
    let template = Policy {
        packet_options: vec![PacketOption::new(200, 2e-6)],
        ..Policy::default()
    };
    let grid = CalibrationGrid {
        separations_mps: vec![2.0],
        snr_grid_db: vec![10.0],
        trials: 10,
        params: RadarParams::default(),
        base_velocity_mps: 10.0,
        velocity_jitter_mps: 0.0,
        detection: DetectionMode::DopplerPeak,
        threads: None,
    };
    let (policy, report) = calibrate(&template, &grid).unwrap();
    assert_eq!(policy, template);
    assert!(report.buckets.is_empty());
}

#[test]
fn calibration_is_monotone_and_self_consistent() {
    // a shorter CPI never gets within 10% of a longer one at equal PRI (its
    // high-SNR error is about (48/16)^1.5 times larger), so a loose tolerance
    // is used to give the self-consistency check switch points to verify
    let template = Policy {
        packet_options: vec![PacketOption::new(16, 2e-6), PacketOption::new(48, 2e-6)],
        rho: 8.0,
        ..Policy::default()
    };
    let grid = CalibrationGrid {
        separations_mps: vec![30.0, 60.0, 120.0],
        snr_grid_db: (0..9).map(|i| 5.0 * i as f64).collect(),
        trials: 200,
        params: RadarParams {
            range_bins: 8,
            angle_bins: 4,
            rng_seed: 11,
            rician_k_db: None,
            ..RadarParams::default()
        },
        base_velocity_mps: -200.0,
        velocity_jitter_mps: 5.0,
        detection: DetectionMode::DopplerPeak,
        threads: None,
    };
    let (policy, report) = calibrate(&template, &grid).unwrap();
    let text = threshold_report(&report);
    eprintln!("{text}");
    assert_eq!(policy.thresholds.len(), 3);
    let as_level = |s: Option<f64>| s.unwrap_or(f64::INFINITY);
    for w in policy.thresholds.windows(2) {
        assert!(w[1].separation_mps > w[0].separation_mps);
        assert!(
            as_level(w[1].snr_db) <= as_level(w[0].snr_db),
            "{:?}",
            policy.thresholds
        );
    }
    for b in &report.buckets {
        for sp in &b.switch_points {
            let Some(s) = sp.snr_db else { continue };
            let small = b.sweep.row("esprit_lo_N16_T2us", s).unwrap().rmse_mps;
            let large = b.sweep.row("esprit_lo_N48_T2us", s).unwrap().rmse_mps;
            assert!(
                (small - large).abs() <= report.rho * large,
                "{small} vs {large}"
            );
        }
    }
    assert!(
        policy.thresholds.iter().any(|t| t.snr_db.is_some()),
        "{text}"
    );
}

#[test]
fn policy_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("policy.json");
    let p = policy_with_threshold(8.0, Some(17.5));
    p.save(&path).unwrap();
    assert_eq!(Policy::load(&path).unwrap(), p);
    let text = std::fs::read_to_string(&path)
        .unwrap()
        .replace("\"schema_version\": 1", "\"schema_version\": 9");
    std::fs::write(&path, text).unwrap();
    assert!(Policy::load(&path).unwrap_err().to_string().contains('9'));
}
