use ma_core::channel::sample_cscg;
use ma_core::linalg::{singular_values, CMatrix};
use ma_core::mimo::*;
use ma_core::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random_matrix(rows: usize, cols: usize, seed: u64) -> CMatrix64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    CMatrix::from_fn(rows, cols, |_, _| sample_cscg(&mut rng, 1.0))
}

fn nalgebra_singular_values(h: &CMatrix64) -> Vec<f64> {
    let m = nalgebra::DMatrix::from_fn(h.rows(), h.cols(), |i, j| h[(i, j)]);
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

/// Water-filling by bisection on the water level.
fn bisection_waterfilling(gains: &[f64], total: f64) -> f64 {
    let used = |mu: f64| gains.iter().map(|g| (mu - 1.0 / g).max(0.0)).sum::<f64>();
    let (mut lo, mut hi) = (0.0, total + gains.iter().map(|g| 1.0 / g).fold(0.0, f64::max));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if used(mid) > total {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mu = 0.5 * (lo + hi);
    gains.iter().map(|g| (1.0 + g * (mu - 1.0 / g).max(0.0)).log2()).sum()
}

fn sigma_squared(h: &CMatrix64) -> Vec<f64> {
    nalgebra_singular_values(h).iter().map(|s| s * s).filter(|g| *g > 1e-12).collect()
}

#[test]
fn singular_values_match_dense_oracle() {
    for (k, (r, c)) in [(4, 4), (4, 6), (6, 4), (3, 3), (8, 4)].into_iter().enumerate() {
        let h = random_matrix(r, c, 40 + k as u64);
        let ours = singular_values(&h);
        let oracle = nalgebra_singular_values(&h);
        assert_eq!(ours.len(), oracle.len());
        for (a, b) in ours.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }
}

#[test]
fn channel_matrix_singular_values_match_dense_oracle() {
    let mut rng = trial_rng(5, 0);
    let spec = MimoChannelSpec64::sample(9, &mut rng).unwrap();
    let tx = half_wavelength_ula(4);
    let rx = fpa_placement(&Region64::square(3.0).unwrap(), 4).unwrap();
    let h = build_channel_matrix(&spec, &tx, &rx).unwrap();
    for (a, b) in singular_values(&h).iter().zip(&nalgebra_singular_values(&h)) {
        assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn scalar_channel_matches_channel_gain_pair() {
    let mut rng = trial_rng(6, 0);
    let spec = MimoChannelSpec64::sample(5, &mut rng).unwrap();
    let t = Position::new(0.3, -0.2, 0.0);
    let r = Position::planar(1.1, 0.4);
    let h = build_channel_matrix(&spec, &[t], &RxPlacement64::new(vec![r]).unwrap()).unwrap();
    assert!((h[(0, 0)] - channel_gain_pair(spec.spec(), &t, &r)).norm() < 1e-12);
}

#[test]
fn spacing_violations_are_rejected() {
    assert!(RxPlacement64::new(vec![Position::origin(), Position::planar(0.3, 0.2)]).is_err());
    let mut rng = trial_rng(6, 1);
    let spec = MimoChannelSpec64::sample(3, &mut rng).unwrap();
    let tx = vec![Position::origin(), Position::planar(0.2, 0.0)];
    let rx = fpa_placement(&Region64::square(3.0).unwrap(), 2).unwrap();
    assert!(build_channel_matrix(&spec, &tx, &rx).is_err());
    assert!(matches!(
        fpa_placement(&Region64::square(1.0).unwrap(), 4),
        Err(Error::RegionTooSmall { .. })
    ));
}

#[test]
fn logdet_capacity_matches_singular_value_formula() {
    for seed in 0..50 {
        let (r, c) = [(4, 4), (4, 2), (2, 4)][seed as usize % 3];
        let h = random_matrix(r, c, 100 + seed);
        for rho in [0.1, 1.0, 10.0, 100.0] {
            let a = capacity_identity_cov(&h, rho, c).unwrap();
            let s: f64 = nalgebra_singular_values(&h)
                .iter()
                .map(|s| (1.0 + rho / c as f64 * s * s).log2())
                .sum();
            assert!((a - s).abs() < 1e-9, "{a} vs {s}");
            assert!((capacity_from_singular_values(&h, rho, c).unwrap() - s).abs() < 1e-9);
        }
    }
}

#[test]
fn capacity_trivial_cases() {
    let eye = CMatrix64::identity(4);
    assert!((capacity_identity_cov(&eye, 4.0, 4).unwrap() - 4.0).abs() < 1e-12);
    assert_eq!(capacity_identity_cov(&eye, 0.0, 4).unwrap(), 0.0);
    assert!(matches!(capacity_identity_cov(&eye, -1.0, 4), Err(Error::NegativeSnr(_))));
}

#[test]
fn waterfilling_matches_bisection_and_dominates_identity() {
    for seed in 0..50 {
        let h = random_matrix(4, 4, 300 + seed);
        for rho in [0.01, 0.3, 1.0, 10.0, 1000.0] {
            let wf = capacity_waterfilling(&h, rho).unwrap();
            let oracle = bisection_waterfilling(&sigma_squared(&h), rho);
            assert!((wf.capacity - oracle).abs() < 1e-9, "{} vs {oracle}", wf.capacity);
            assert!(wf.capacity >= capacity_identity_cov(&h, rho, 4).unwrap() - 1e-12);
            assert!((wf.powers.iter().sum::<f64>() - rho).abs() < 1e-9);
            for (g, p) in wf.gains.iter().zip(&wf.powers) {
                if *p > 0.0 {
                    assert!((p + 1.0 / g - wf.water_level).abs() < 1e-9);
                } else if *g > 0.0 {
                    assert!(1.0 / g >= wf.water_level - 1e-12);
                }
            }
        }
    }
}

#[test]
fn waterfilling_degenerate_spectra() {
    let h = CMatrix64::from_fn(3, 3, |i, j| if i == j { Complex64::new(0.0, 2.0) } else { Complex64::new(0.0, 0.0) });
    let wf = capacity_waterfilling(&h, 6.0).unwrap();
    assert!(wf.powers.iter().all(|p| (p - 2.0).abs() < 1e-12));
    let rank_one = CMatrix64::from_fn(3, 2, |i, j| Complex64::new((i + 1) as f64, j as f64));
    let s1 = nalgebra_singular_values(&rank_one)[0];
    let wf = capacity_waterfilling(&rank_one, 5.0).unwrap();
    assert!((wf.capacity - (1.0 + 5.0 * s1 * s1).log2()).abs() < 1e-9);
    assert!(matches!(capacity_waterfilling(&CMatrix64::zeros(2, 2), 1.0), Err(Error::RankZero)));
}

/// Unitary built from a unit-modulus diagonal and a normalised DFT.
fn unitary(n: usize, phases: &[f64]) -> CMatrix64 {
    let dft = CMatrix64::from_fn(n, n, |i, j| {
        let a = 2.0 * std::f64::consts::PI * (i * j) as f64 / n as f64;
        Complex64::new(a.cos(), a.sin()) / (n as f64).sqrt()
    });
    let diag = CMatrix64::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::new(phases[i].cos(), phases[i].sin())
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    diag.matmul(&dft).unwrap()
}

proptest! {
    #[test]
    fn capacity_is_unitarily_invariant(
        seed in 0u64..10_000,
        p in proptest::collection::vec(0.0f64..std::f64::consts::TAU, 4),
        q in proptest::collection::vec(0.0f64..std::f64::consts::TAU, 4),
        rho in 0.01f64..100.0,
    ) {
        let h = random_matrix(4, 4, seed);
        let rotated = unitary(4, &p).matmul(&h).unwrap().matmul(&unitary(4, &q)).unwrap();
        let a = capacity_identity_cov(&h, rho, 4).unwrap();
        let b = capacity_identity_cov(&rotated, rho, 4).unwrap();
        prop_assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn sequential_search_never_loses_to_the_fixed_array() {
    let region = Region64::square(3.0).unwrap();
    let tx = half_wavelength_ula(4);
    let mut gain = 0.0;
    for seed in 0..20 {
        let mut rng = trial_rng(seed, 0);
        let spec = MimoChannelSpec64::sample(15, &mut rng).unwrap();
        let out = sequential_position_search(&spec, &region, 4, &tx, 10.0, &SequentialSearchConfig::default()).unwrap();
        let fpa = fpa_placement(&region, 4).unwrap();
        let c_fpa = capacity_identity_cov(&build_channel_matrix(&spec, &tx, &fpa).unwrap(), 10.0, 4).unwrap();
        assert!((out.initial_capacity - c_fpa).abs() < 1e-12);
        assert!(out.capacity >= c_fpa);
        for w in out.trace.windows(2) {
            assert!(w[1] >= w[0]);
        }
        assert!(out.placement.min_distance().unwrap() >= 0.5 - 1e-9);
        assert!(out.placement.positions().iter().all(|p| region.contains(p)));
        let h = build_channel_matrix(&spec, &tx, &out.placement).unwrap();
        assert!((capacity_identity_cov(&h, 10.0, 4).unwrap() - out.capacity).abs() < 1e-9);
        gain += out.capacity - c_fpa;
    }
    assert!(gain > 0.0);
}
