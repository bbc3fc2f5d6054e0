use std::f64::consts::PI;

use isac_core::channel::{AntennaArray, Point3};
use isac_core::estimation::*;
use isac_core::ofdm::{CsiMatrix, RadioConfig};
use isac_core::signal::{rng_from_seed, ComplexGaussian};
use isac_core::{Complex64, SPEED_OF_LIGHT};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

struct Path {
    delay: f64,
    doppler: f64,
    amplitude: Complex64,
    aoa_deg: f64,
}

fn path(delay: f64, doppler: f64) -> Path {
    Path {
        delay,
        doppler,
        amplitude: Complex64::new(1.0, 0.0),
        aoa_deg: 0.0,
    }
}

/// Frequency-domain CSI of point paths, with complex noise at `snr_db` below the total path power.
fn synth(paths: &[Path], times: &[f64], n_rx: usize, snr_db: f64, seed: u64) -> Vec<CsiMatrix> {
    let cfg = RadioConfig::default();
    let sc = cfg.used_subcarriers().to_vec();
    let df = cfg.subcarrier_spacing();
    let p_sig: f64 = paths.iter().map(|p| p.amplitude.norm_sqr()).sum();
    let noise = ComplexGaussian::from_power(p_sig * 10f64.powf(-snr_db / 10.0)).unwrap();
    let mut rng = rng_from_seed(seed);
    times
        .iter()
        .enumerate()
        .map(|(l, &t)| {
            let rows = (0..n_rx)
                .map(|m| {
                    sc.iter()
                        .map(|&k| {
                            let clean: Complex64 = paths
                                .iter()
                                .map(|p| {
                                    let phase = -2.0 * PI * k as f64 * df * p.delay
                                        + 2.0 * PI * p.doppler * t
                                        + PI * m as f64 * p.aoa_deg.to_radians().sin();
                                    p.amplitude * Complex64::from_polar(1.0, phase)
                                })
                                .sum();
                            clean + noise.sample(&mut rng)
                        })
                        .collect()
                })
                .collect();
            CsiMatrix::from_rows(rows, sc.clone(), t, l as u64).unwrap()
        })
        .collect()
}

fn irregular_times(n: usize, seed: u64) -> Vec<f64> {
    // Bursts of 1-4 packets 1 ms apart, separated by Pareto gaps (shape 1.5, 10 ms minimum).
    let mut rng = rng_from_seed(seed);
    let mut out = Vec::with_capacity(n);
    let mut t = 0.0;
    while out.len() < n {
        for b in 0..rng.random_range(1..=4) {
            if out.len() < n {
                out.push(t + b as f64 * 1e-3);
            }
        }
        let u: f64 = rng.random::<f64>().max(1e-12);
        t += 4e-3 + 0.01 * u.powf(-1.0 / 1.5);
    }
    out
}

fn random_gaussian(r: usize, c: usize, rng: &mut impl Rng) -> DMatrix<Complex64> {
    DMatrix::from_fn(r, c, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im) / (2.0 * r as f64).sqrt()
    })
}

/// Plain proximal-gradient solver run until the iterates stop moving.
fn ista(a: &DMatrix<Complex64>, y: &DVector<Complex64>, lambda: f64) -> DVector<Complex64> {
    let l = (a.adjoint() * a).norm() * 1.01;
    let step = 1.0 / l;
    let mut x = DVector::<Complex64>::zeros(a.ncols());
    for _ in 0..500_000 {
        let grad = a.adjoint() * (a * &x - y);
        let v = &x - grad * Complex64::new(step, 0.0);
        let next = v.map(|c| {
            let n = c.norm();
            if n <= lambda * step {
                Complex64::new(0.0, 0.0)
            } else {
                c * (1.0 - lambda * step / n)
            }
        });
        let moved = (&next - &x).norm();
        x = next;
        if moved < 1e-15 {
            break;
        }
    }
    x
}

#[test]
fn admm_matches_proximal_gradient_oracle() {
    let mut rng = rng_from_seed(2024);
    let mut required = 0;
    for trial in 0..50 {
        let a = random_gaussian(16, 64, &mut rng);
        let mut truth = DVector::<Complex64>::zeros(64);
        let i = rng.random_range(0..64);
        let mut j = rng.random_range(0..64);
        while j == i {
            j = rng.random_range(0..64);
        }
        truth[i] =
            Complex64::from_polar(1.0 + rng.random::<f64>(), rng.random_range(0.0..2.0 * PI));
        truth[j] =
            Complex64::from_polar(1.0 + rng.random::<f64>(), rng.random_range(0.0..2.0 * PI));
        let y = &a * &truth;
        let op = DenseOperator::new(a.clone());
        let ys = y.as_slice().to_vec();
        let mut recovered = false;
        for frac in [0.02, 0.05, 0.1, 0.2, 0.3, 0.5] {
            let lambda = default_lambda(&op, &ys, frac);
            let opts = AdmmOptions {
                tol: 1e-12,
                max_iter: 20_000,
                ..AdmmOptions::new(lambda)
            };
            let res = admm_lasso(&op, &ys, &opts).unwrap();
            assert!(res.converged, "trial {trial} frac {frac}");
            let oracle = ista(&a, &y, lambda);
            let f_admm = lasso_objective(&op, &ys, &res.x, lambda);
            let f_ista = lasso_objective(&op, &ys, oracle.as_slice(), lambda);
            assert!(
                f_admm <= f_ista + 1e-6,
                "trial {trial}: {f_admm} vs {f_ista}"
            );
            let max = res.x.iter().map(|v| v.norm()).fold(0.0, f64::max);
            let support: Vec<usize> = (0..64).filter(|&k| res.x[k].norm() > 1e-6 * max).collect();
            let mut want = vec![i, j];
            want.sort();
            recovered |= support == want;
        }
        if irrepresentable(&a, &[i, j], &truth) < 1.0 {
            required += 1;
            assert!(recovered, "trial {trial}: support never recovered");
        }
    }
    assert!(
        required >= 40,
        "only {required} instances satisfy the recovery condition"
    );
}

/// `max_j |a_j^H A_S (A_S^H A_S)^-1 sgn(x_S)|` over columns off the support; below 1 the
/// noiseless lasso recovers the support exactly for small enough lambda.
fn irrepresentable(a: &DMatrix<Complex64>, support: &[usize], x: &DVector<Complex64>) -> f64 {
    let a_s = DMatrix::from_fn(a.nrows(), support.len(), |r, c| a[(r, support[c])]);
    let sgn = DVector::from_fn(support.len(), |k, _| x[support[k]] / x[support[k]].norm());
    let w = &a_s * (a_s.adjoint() * &a_s).try_inverse().unwrap() * sgn;
    (0..a.ncols())
        .filter(|c| !support.contains(c))
        .map(|c| (a.column(c).adjoint() * &w)[(0, 0)].norm())
        .fold(0.0, f64::max)
}

#[test]
fn admm_objective_settles_monotonically() {
    let mut rng = rng_from_seed(77);
    for _ in 0..10 {
        let a = random_gaussian(16, 64, &mut rng);
        let truth = DVector::from_fn(64, |k, _| {
            if k % 29 == 3 {
                Complex64::new(1.0, 0.5)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let y = (&a * truth).as_slice().to_vec();
        let op = DenseOperator::new(a);
        let opts = AdmmOptions {
            tol: 1e-10,
            ..AdmmOptions::new(default_lambda(&op, &y, 0.1))
        };
        let res = admm_lasso(&op, &y, &opts).unwrap();
        let h = &res.objective;
        let final_obj = *h.last().unwrap();
        for w in h[5..].windows(2) {
            assert!(
                w[1] <= w[0] + 1e-6 * final_obj.max(1.0),
                "{:?}",
                &h[..h.len().min(40)]
            );
        }
    }
}

fn matched_filter_delay(csi: &[CsiMatrix], grid: &[f64]) -> f64 {
    let cfg = RadioConfig::default();
    let df = cfg.subcarrier_spacing();
    let score = |tau: f64| -> f64 {
        csi.iter()
            .map(|c| {
                c.subcarriers()
                    .iter()
                    .zip(c.row(0, 0))
                    .map(|(&k, &v)| v * Complex64::from_polar(1.0, 2.0 * PI * k as f64 * df * tau))
                    .sum::<Complex64>()
                    .norm_sqr()
            })
            .sum()
    };
    *grid
        .iter()
        .max_by(|a, b| score(**a).total_cmp(&score(**b)))
        .unwrap()
}

fn small_grid() -> FeatureGrid {
    FeatureGrid::new(500e-9, 5e-9, 20.0, 1.0).unwrap()
}

#[test]
fn sparse_single_path_regular_packets() {
    let cfg = RadioConfig::default();
    let sched = TxSchedule::regular(50.0, 20, 0.0).unwrap();
    let csi = synth(&[path(100e-9, 0.0)], sched.times(), 1, 20.0, 1);
    let grid = small_grid();
    let fv =
        estimate_features_sparse(&csi, &sched, &cfg, &grid, &SparseOptions::default()).unwrap();
    let atom = fv.dominant().unwrap();
    let oracle = matched_filter_delay(&csi, &grid.delays);
    assert!((atom.delay - 100e-9).abs() <= 5e-9 + 1e-15, "{atom:?}");
    assert!((atom.delay - oracle).abs() <= 5e-9 + 1e-15);
    assert!(atom.doppler.abs() <= 1.0);
}

#[test]
fn sparse_irregular_packets_keep_the_atom() {
    let cfg = RadioConfig::default();
    let times = irregular_times(40, 5);
    let sched = TxSchedule::new(times.clone()).unwrap();
    let csi = synth(&[path(100e-9, 12.0)], &times, 1, 20.0, 2);
    let fv = estimate_features_sparse(&csi, &sched, &cfg, &small_grid(), &SparseOptions::default())
        .unwrap();
    let atom = fv.dominant().unwrap();
    assert!((atom.delay - 100e-9).abs() <= 5e-9 + 1e-15, "{atom:?}");
    assert!((atom.doppler - 12.0).abs() <= 1.0, "{atom:?}");

    // The uniform FFT baseline treats the same packets as evenly spaced and smears the line.
    let naive = velocity_fft_naive(&csi, &sched, &cfg).unwrap();
    let truth = 12.0 * cfg.wavelength() / 2.0;
    let sparse = atom.doppler * cfg.wavelength() / 2.0;
    assert!((naive - truth).abs() > (sparse - truth).abs());
}

#[test]
fn sparse_two_paths() {
    let cfg = RadioConfig::default();
    let sched = TxSchedule::regular(50.0, 20, 0.0).unwrap();
    let csi = synth(
        &[path(100e-9, 0.0), path(300e-9, 5.0)],
        sched.times(),
        1,
        20.0,
        3,
    );
    let fv = estimate_features_sparse(&csi, &sched, &cfg, &small_grid(), &SparseOptions::default())
        .unwrap();
    let atoms = fv.atoms(0.3);
    for want in [100e-9, 300e-9] {
        assert!(
            atoms.iter().any(|a| (a.delay - want).abs() <= 5e-9 + 1e-15),
            "{want}: {atoms:?}"
        );
    }
}

#[test]
fn refinement_moves_atom_off_the_grid() {
    let cfg = RadioConfig::default();
    let times = irregular_times(40, 6);
    let sched = TxSchedule::new(times.clone()).unwrap();
    let (delay, doppler) = (102.3e-9, 11.6);
    let csi = synth(
        &[path(delay, doppler), path(300e-9, 0.0)],
        &times,
        1,
        30.0,
        4,
    );
    let opts = SparseOptions::default();
    let fv = estimate_features_sparse(&csi, &sched, &cfg, &small_grid(), &opts).unwrap();
    let coarse = fv.strongest_moving(2.0).unwrap();
    let fine = refine_atom(&csi, &sched, &cfg, &fv, &coarse, &opts).unwrap();
    assert!(
        (fine.delay - delay).abs() < (coarse.delay - delay).abs(),
        "{coarse:?} -> {fine:?}"
    );
    assert!((fine.delay - delay).abs() <= 1e-9, "{fine:?}");
    assert!((fine.doppler - doppler).abs() <= 0.2, "{fine:?}");
    assert!((fine.amplitude.norm() - 1.0).abs() < 0.1, "{fine:?}");
}

#[test]
fn sparse_rejects_empty_series() {
    let cfg = RadioConfig::default();
    let sched = TxSchedule::new(vec![]).unwrap();
    assert!(
        estimate_features_sparse(&[], &sched, &cfg, &small_grid(), &SparseOptions::default())
            .is_err()
    );
}

fn range_delay(r: f64) -> f64 {
    2.0 * r / SPEED_OF_LIGHT
}

#[test]
fn ifft_ranging() {
    let cfg = RadioConfig::default();
    let csi = synth(&[path(range_delay(15.0), 0.0)], &[0.0], 1, 300.0, 4);
    let r = range_ifft(&csi, &cfg).unwrap();
    assert!((r - 15.0).abs() <= 3.75, "{r}");
    let flat = synth(&[path(0.0, 0.0)], &[0.0], 1, 300.0, 4);
    assert_eq!(range_ifft(&flat, &cfg).unwrap(), 0.0);

    let two = synth(
        &[path(range_delay(15.0), 0.0), path(range_delay(45.0), 0.0)],
        &[0.0],
        1,
        300.0,
        4,
    );
    let profile = ifft_delay_profile(&two, &cfg).unwrap();
    let bin = |r: f64| (range_delay(r) * cfg.sample_rate()).round() as usize;
    let mut peaks: Vec<usize> = (1..31)
        .filter(|&i| profile[i] > profile[i - 1] && profile[i] > profile[i + 1])
        .collect();
    peaks.sort_by(|a, b| profile[*b].total_cmp(&profile[*a]));
    let mut top: Vec<usize> = peaks[..2].to_vec();
    top.sort();
    assert_eq!(top, vec![bin(15.0), bin(45.0)]);
}

#[test]
fn music_ranging() {
    let cfg = RadioConfig::default();
    let grid: Vec<f64> = (0..=500).map(|i| i as f64 * 1e-9).collect();
    let times: Vec<f64> = (0..10).map(|i| i as f64 * 0.02).collect();
    let csi = synth(&[path(range_delay(15.0), 3.0)], &times, 1, 20.0, 5);
    let m = range_music(&csi, 1, &cfg, &grid).unwrap();
    assert!((m.ranges[0] - 15.0).abs() <= 1.5, "{m:?}");
    assert!(range_music(&csi, 0, &cfg, &grid).is_err());

    let d1 = 100e-9;
    let d2 = 300e-9;
    let two = synth(&[path(d1, 3.0), path(d2, -4.0)], &times, 1, 20.0, 6);
    let m = range_music(&two, 2, &cfg, &grid).unwrap();
    for want in [d1, d2] {
        assert!(
            m.delays.iter().any(|d| (d - want).abs() <= 1e-9 + 1e-15),
            "{want}: {:?}",
            m.delays
        );
    }
}

#[test]
fn mdl_counts_separated_eigenvalues() {
    assert_eq!(mdl_order(&[10.0, 8.0, 1.0, 1.01, 0.99, 1.0], 200), 2);
    assert_eq!(mdl_order(&[1.0, 1.0, 1.0, 1.0], 200), 0);
    let times: Vec<f64> = (0..10).map(|i| i as f64 * 0.02).collect();
    let two = synth(&[path(100e-9, 3.0), path(300e-9, -4.0)], &times, 1, 25.0, 6);
    assert_eq!(estimate_path_count(&two).unwrap(), 2);
}

fn ula() -> AntennaArray {
    AntennaArray::half_wavelength(Point3::zeros(), 0.0, &RadioConfig::default())
}

fn source(delay: f64, aoa_deg: f64) -> Path {
    Path {
        aoa_deg,
        ..path(delay, 0.0)
    }
}

#[test]
fn music_angle_of_arrival() {
    let cfg = RadioConfig::default();
    let array = ula();
    assert_eq!(array.n_elements, 3);
    let grid = angle_grid(0.25);
    let lambda = cfg.wavelength();
    let one = synth(&[source(50e-9, 0.0)], &[0.0], 3, 40.0, 7);
    let a = aoa_music(&one, &array, lambda, 1, &grid).unwrap();
    assert!(a[0].abs() <= 1.0, "{a:?}");

    let thirty = synth(&[source(50e-9, 30.0)], &[0.0], 3, 20.0, 8);
    let a = aoa_music(&thirty, &array, lambda, 1, &grid).unwrap();
    assert!((a[0] - 30.0).abs() <= 2.0, "{a:?}");

    let two = synth(
        &[source(50e-9, 40.0), source(250e-9, -40.0)],
        &[0.0],
        3,
        20.0,
        9,
    );
    let mut a = aoa_music(&two, &array, lambda, 2, &grid).unwrap();
    a.sort_by(f64::total_cmp);
    assert!(
        (a[0] + 40.0).abs() <= 3.0 && (a[1] - 40.0).abs() <= 3.0,
        "{a:?}"
    );

    assert!(aoa_music(&two, &array, lambda, 3, &grid).is_err());
}

fn velocity_path(v: f64, delay: f64) -> Path {
    let lambda = RadioConfig::default().wavelength();
    path(delay, 2.0 * v / lambda)
}

#[test]
fn fft_velocity_baseline() {
    let cfg = RadioConfig::default();
    let sched = TxSchedule::regular(40.0, 40, 0.0).unwrap();
    let fd = 2.0 / cfg.wavelength();
    assert!((fd - 16.0).abs() < 0.1);
    let csi = synth(&[velocity_path(1.0, 30e-9)], sched.times(), 1, 20.0, 10);
    let v = velocity_fft(&csi, &sched, &cfg).unwrap();
    assert!((v - 1.0).abs() <= 0.05, "{v}");

    let still = synth(&[velocity_path(0.0, 30e-9)], sched.times(), 1, 20.0, 11);
    assert!(velocity_fft(&still, &sched, &cfg).unwrap().abs() <= 0.05);

    let irregular = TxSchedule::new(irregular_times(40, 3)).unwrap();
    assert!(velocity_fft(&csi, &irregular, &cfg).is_err());

    // 3.5 m/s is a 56 Hz Doppler: fine above 112 packets/s, aliased below.
    let fast = TxSchedule::regular(150.0, 60, 0.0).unwrap();
    let csi = synth(&[velocity_path(3.5, 30e-9)], fast.times(), 1, 20.0, 12);
    assert!((velocity_fft(&csi, &fast, &cfg).unwrap() - 3.5).abs() <= 0.05);
    let slow = TxSchedule::regular(100.0, 60, 0.0).unwrap();
    let csi = synth(&[velocity_path(3.5, 30e-9)], slow.times(), 1, 20.0, 12);
    assert!((velocity_fft(&csi, &slow, &cfg).unwrap() - 3.5).abs() > 1.0);
}

fn velocity_grid() -> FeatureGrid {
    FeatureGrid::new(150e-9, 25e-9, 60.0, 0.25).unwrap()
}

#[test]
fn sparse_velocity_on_irregular_schedule() {
    let cfg = RadioConfig::default();
    let mut naive_err = Vec::new();
    for seed in 0..5 {
        let sched = TxSchedule::new(irregular_times(60, 100 + seed)).unwrap();
        let csi = synth(
            &[velocity_path(1.0, 30e-9)],
            sched.times(),
            1,
            15.0,
            200 + seed,
        );
        let v = velocity_sparse(
            &csi,
            &sched,
            &cfg,
            &velocity_grid(),
            &SparseOptions::default(),
        )
        .unwrap();
        assert!((v - 1.0).abs() <= 0.1, "seed {seed}: {v}");
        let naive = velocity_fft_naive(&csi, &sched, &cfg).unwrap();
        naive_err.push((naive - 1.0).abs());
    }
    naive_err.sort_by(f64::total_cmp);
    assert!(naive_err[2] > 0.3, "{naive_err:?}");

    let sched = TxSchedule::new(irregular_times(60, 9)).unwrap();
    let still = synth(&[velocity_path(0.0, 30e-9)], sched.times(), 1, 15.0, 9);
    let v = velocity_sparse(
        &still,
        &sched,
        &cfg,
        &velocity_grid(),
        &SparseOptions::default(),
    )
    .unwrap();
    assert!(v.abs() <= 0.05, "{v}");

    let short = TxSchedule::regular(40.0, 7, 0.0).unwrap();
    let csi = synth(&[velocity_path(1.0, 30e-9)], short.times(), 1, 15.0, 1);
    assert!(velocity_sparse(
        &csi,
        &short,
        &cfg,
        &velocity_grid(),
        &SparseOptions::default()
    )
    .is_err());
}

#[test]
fn velocity_ignores_global_phase() {
    let cfg = RadioConfig::default();
    let sched = TxSchedule::new(irregular_times(40, 21)).unwrap();
    let csi = synth(&[velocity_path(1.7, 60e-9)], sched.times(), 1, 15.0, 22);
    let rotated: Vec<CsiMatrix> = csi.iter().map(|c| c.rotated(1.234)).collect();
    let opts = SparseOptions::default();
    let a = velocity_sparse(&csi, &sched, &cfg, &velocity_grid(), &opts).unwrap();
    let b = velocity_sparse(&rotated, &sched, &cfg, &velocity_grid(), &opts).unwrap();
    assert!((a - b).abs() < 1e-9);
    let a = velocity_fft_naive(&csi, &sched, &cfg).unwrap();
    let b = velocity_fft_naive(&rotated, &sched, &cfg).unwrap();
    assert!((a - b).abs() < 1e-9);
}

#[test]
fn localization_error_follows_first_order_propagation() {
    let mut rng = rng_from_seed(31);
    let (r, theta) = (5.0, 20.0);
    let (sr, sa) = (0.3, 2.0);
    let pose = Pose::new(1.0, -2.0, 45.0);
    let truth = localize_single(
        &SensingEstimate {
            tof: Some(2.0 * r / SPEED_OF_LIGHT),
            aoa_deg: Some(theta),
            ..Default::default()
        },
        &pose,
    )
    .unwrap();
    let n = 20_000;
    let mut sq = 0.0;
    for _ in 0..n {
        let dr: f64 = StandardNormal.sample(&mut rng);
        let da: f64 = StandardNormal.sample(&mut rng);
        let est = SensingEstimate {
            tof: Some(2.0 * (r + sr * dr) / SPEED_OF_LIGHT),
            aoa_deg: Some(theta + sa * da),
            ..Default::default()
        };
        let p = localize_single(&est, &pose).unwrap();
        sq += (p[0] - truth[0]).powi(2) + (p[1] - truth[1]).powi(2);
    }
    let rms = (sq / n as f64).sqrt();
    let predicted = (sr * sr + (r * sa.to_radians()).powi(2)).sqrt();
    assert!(
        (rms - predicted).abs() / predicted <= 0.2,
        "{rms} vs {predicted}"
    );
}
