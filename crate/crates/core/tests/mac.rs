use isac_core::mac::*;
use isac_core::ofdm::PacketMeta;

fn three_devices() -> MacConfig {
    MacConfig {
        devices: vec![
            DeviceConfig {
                position: [0.0, 0.0],
                traffic: TrafficModel::streaming(),
                peer: 1,
            },
            DeviceConfig {
                position: [10.0, 0.0],
                traffic: TrafficModel::gaming(),
                peer: 2,
            },
            DeviceConfig {
                position: [4.0, 9.0],
                traffic: TrafficModel::Regular { rate_hz: 40.0 },
                peer: 0,
            },
        ],
        ..MacConfig::default()
    }
}

#[test]
fn streaming_pair_never_overlaps() {
    let cfg = MacConfig {
        duration_s: 20.0,
        ..MacConfig::default()
    };
    let r = run_scenario(&cfg, 11).unwrap();
    assert_eq!(r.overlapping_transmissions, 0);
    assert!(r.stats.delivered > 1000);
    assert!(r.log.entries.windows(2).all(|w| w[0].time <= w[1].time));
}

#[test]
fn sensing_does_not_change_comms() {
    let on = MacConfig {
        duration_s: 20.0,
        ..three_devices()
    };
    let off = MacConfig {
        sensing_enabled: false,
        ..on.clone()
    };
    let a = run_scenario(&on, 5).unwrap();
    let b = run_scenario(&off, 5).unwrap();
    assert_eq!(a.stats, b.stats);
    assert!(!a.captures.is_empty());
    assert!(b.captures.is_empty());
    assert!(b
        .log
        .entries
        .iter()
        .all(|e| e.after == MacState::Communication));
}

#[test]
fn forced_separator_costs_snr() {
    let base = MacConfig {
        duration_s: 5.0,
        ..three_devices()
    };
    let forced = MacConfig {
        force_separator: true,
        ..base.clone()
    };
    let a = run_scenario(&base, 9).unwrap();
    let b = run_scenario(&forced, 9).unwrap();
    let drop = a.stats.mean_effective_snr_db() - b.stats.mean_effective_snr_db();
    assert!(drop >= 10.0, "SNR drop {drop} dB");
}

#[test]
fn identical_seeds_identical_logs() {
    let cfg = MacConfig {
        duration_s: 3.0,
        ..three_devices()
    };
    assert_eq!(
        run_scenario(&cfg, 21).unwrap(),
        run_scenario(&cfg, 21).unwrap()
    );
    assert_ne!(
        run_scenario(&cfg, 22).unwrap().log,
        run_scenario(&cfg, 21).unwrap().log
    );
}

#[test]
fn million_events_keep_the_invariants() {
    let cfg = MacConfig {
        duration_s: 3600.0,
        max_events: Some(1_000_000),
        ..three_devices()
    };
    let r = run_scenario(&cfg, 1).unwrap();
    assert_eq!(r.log.entries.len(), 1_000_000);
    assert_eq!(r.log.separator_mismatches(), 0);
    assert_eq!(r.log.violations(), 0);
    assert_eq!(r.overlapping_transmissions, 0);
    assert!(r.calibrations > 0);
    let frame = PacketMeta::for_payload(0.0, cfg.mcs, cfg.payload_bytes, &cfg.radio)
        .unwrap()
        .duration;
    assert!(
        r.max_m_dwell_s <= frame.max(cfg.m_timer_s) + 1e-12,
        "{}",
        r.max_m_dwell_s
    );
    // Bistatic captures only start from C and the device is then in B.
    for e in &r.log.entries {
        if e.action == Some(MacAction::BistaticCapture) {
            assert_eq!(e.before, MacState::Communication);
            assert_eq!(e.after, MacState::Bistatic);
        }
        if e.after != MacState::Bistatic && e.after != MacState::Communication {
            assert!(e.separator_active);
        }
    }
}

#[test]
fn event_log_text_format() {
    let cfg = MacConfig {
        duration_s: 0.2,
        ..MacConfig::default()
    };
    let r = run_scenario(&cfg, 3).unwrap();
    let mut out = Vec::new();
    r.log.write_text(&mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let first = text.lines().next().unwrap();
    assert_eq!(first.split(' ').count(), 6);
    let mut csv = Vec::new();
    write_comms_csv(&mut csv, &[("s".to_string(), r.stats)]).unwrap();
    assert!(String::from_utf8(csv)
        .unwrap()
        .starts_with("scenario,delay_ms_p50,delay_ms_p95,loss_rate\n"));
}

#[test]
fn inconsistent_config_rejected() {
    let mut cfg = three_devices();
    cfg.devices[2].peer = 7;
    assert!(matches!(
        run_scenario(&cfg, 0),
        Err(isac_core::Error::InvalidArgument(_))
    ));
    let cfg = MacConfig {
        duration_s: 0.0,
        ..MacConfig::default()
    };
    assert!(run_scenario(&cfg, 0).is_err());
}
