use isac_core::estimation::{localize_single, Pose, SensingEstimate};
use isac_core::fusion::*;
use isac_core::signal::rng_from_seed;
use isac_core::SPEED_OF_LIGHT;
use proptest::prelude::*;
use rand_distr::{Distribution, Normal};

fn observe(dev: usize, pose: Pose, target: [f64; 2], dr: f64, da: f64) -> SensingMessage {
    let dx = target[0] - pose.x;
    let dy = target[1] - pose.y;
    let range = (dx * dx + dy * dy).sqrt() + dr;
    let aoa = dy.atan2(dx).to_degrees() - pose.heading_deg + da;
    let est = SensingEstimate {
        tof: Some(2.0 * range / SPEED_OF_LIGHT),
        aoa_deg: Some(aoa),
        velocity: None,
        confidence: 1.0,
    };
    SensingMessage::estimate(dev, 0.0, pose, est)
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

#[test]
fn single_device_matches_direct_localization() {
    let pose = Pose::new(0.0, 0.0, 90.0);
    let m = observe(0, pose, [3.2, 6.1], 0.0, 0.0);
    let direct = localize_single(m.as_estimate().unwrap(), &pose).unwrap();
    let grid = GridSpec::new(-5.0, 5.0, 0.0, 10.0, 0.25).unwrap();
    let r = fuse_ml(&[m], &grid, &NoiseModel::default()).unwrap();
    assert!(
        (r.position[0] - direct[0]).abs() <= 0.125 && (r.position[1] - direct[1]).abs() <= 0.125
    );
}

#[test]
fn two_devices_noiseless() {
    let target = [5.0, 3.0];
    let msgs = [
        observe(0, Pose::new(0.0, 0.0, 0.0), target, 0.0, 0.0),
        observe(1, Pose::new(10.0, 0.0, 180.0), target, 0.0, 0.0),
    ];
    let grid = GridSpec::new(0.0, 10.0, -1.0, 8.0, 0.25).unwrap();
    let r = fuse_ml(&msgs, &grid, &NoiseModel::default()).unwrap();
    assert!(
        (r.position[0] - 5.0).abs() <= 0.125 && (r.position[1] - 3.0).abs() <= 0.125,
        "{:?}",
        r.position
    );
}

#[test]
fn fusion_beats_one_device() {
    let noise = NoiseModel {
        sigma_range_m: 0.5,
        sigma_aoa_deg: 5.0,
    };
    let nr = Normal::new(0.0, noise.sigma_range_m).unwrap();
    let na = Normal::new(0.0, noise.sigma_aoa_deg).unwrap();
    let mut rng = rng_from_seed(17);
    let poses = [Pose::new(0.0, 0.0, 45.0), Pose::new(10.0, 0.0, 135.0)];
    let grid = GridSpec::new(-1.0, 11.0, -1.0, 11.0, 0.25).unwrap();
    let (mut single, mut fused, mut best) = (Vec::new(), Vec::new(), Vec::new());
    for i in 0..200 {
        let target = [1.0 + (i % 17) as f64 * 0.5, 2.0 + (i % 13) as f64 * 0.6];
        let msgs: Vec<_> = poses
            .iter()
            .enumerate()
            .map(|(d, p)| observe(d, *p, target, nr.sample(&mut rng), na.sample(&mut rng)))
            .collect();
        let errs: Vec<f64> = msgs
            .iter()
            .map(|m| {
                dist(
                    localize_single(m.as_estimate().unwrap(), &m.pose).unwrap(),
                    target,
                )
            })
            .collect();
        single.push(errs[0]);
        best.push(errs[0].powi(2));
        fused.push(dist(
            fuse_ml(&msgs, &grid, &noise).unwrap().position,
            target,
        ));
    }
    let rmse = |v: &[f64]| (v.iter().map(|e| e * e).sum::<f64>() / v.len() as f64).sqrt();
    let single_rmse = (best.iter().sum::<f64>() / best.len() as f64).sqrt();
    assert!(
        median(fused.clone()) <= median(single),
        "fused median not better"
    );
    assert!(rmse(&fused) <= single_rmse);
}

#[test]
fn csi_summaries_are_ignored() {
    let m = SensingMessage {
        device_id: 0,
        timestamp: 0.0,
        pose: Pose::new(0.0, 0.0, 0.0),
        payload: Payload::CsiSummary(vec![]),
    };
    let grid = GridSpec::new(0.0, 2.0, 0.0, 2.0, 0.25).unwrap();
    assert!(fuse_ml(&[m], &grid, &NoiseModel::default()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn argmax_is_global(tx in 0.5f64..5.5, ty in 0.5f64..3.5, dr in -0.3f64..0.3, da in -4.0f64..4.0) {
        let grid = GridSpec::new(0.0, 6.0, 0.0, 4.0, 0.25).unwrap();
        let msgs = [
            observe(0, Pose::new(0.0, 0.0, 30.0), [tx, ty], dr, da),
            observe(1, Pose::new(6.0, 0.0, 150.0), [tx, ty], -dr, da),
        ];
        let r = fuse_ml(&msgs, &grid, &NoiseModel::default()).unwrap();
        for iy in 0..grid.ny() {
            for ix in 0..grid.nx() {
                prop_assert!(log_likelihood(&msgs, grid.center(ix, iy), &NoiseModel::default()) <= r.log_likelihood);
            }
        }
    }

    #[test]
    fn duplicates_keep_the_argmax(tx in 0.5f64..5.5, ty in 0.5f64..3.5, copies in 2usize..5) {
        let grid = GridSpec::new(0.0, 6.0, 0.0, 4.0, 0.25).unwrap();
        let m = observe(0, Pose::new(0.0, 0.0, 30.0), [tx, ty], 0.2, 2.0);
        let one = fuse_ml(std::slice::from_ref(&m), &grid, &NoiseModel::default()).unwrap();
        let many = fuse_ml(&vec![m; copies], &grid, &NoiseModel::default()).unwrap();
        prop_assert_eq!(one.cell, many.cell);
    }
}
