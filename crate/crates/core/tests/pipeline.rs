//! End-to-end checks across modules through the public API.

use dynrmt::ensemble::{self, EnsembleConfig};
use dynrmt::{sce, spectral, stats, Complex64, FourierSpec};
use proptest::prelude::*;

fn mixed() -> FourierSpec {
    FourierSpec::from_triples(&[(1, 1.0, 0.0), (-2, 0.3, 0.4), (3, 0.2, -0.1)]).unwrap()
}

#[test]
fn same_config_gives_identical_matrices_and_spectra() {
    let cfg = EnsembleConfig::new(24, mixed(), 77).with_window(10);
    let (x1, y1) = ensemble::build_pair(&cfg).unwrap();
    let (x2, y2) = ensemble::build_pair(&cfg).unwrap();
    assert_eq!(x1.fingerprint(), x2.fingerprint());
    assert_eq!(y1.fingerprint(), y2.fingerprint());
    let s1 = spectral::decompose(&x1, false).unwrap();
    let s2 = spectral::decompose(&x2, false).unwrap();
    assert_eq!(s1.eigenvalues, s2.eigenvalues);
    let other = ensemble::build_x(&cfg.clone().with_seed(78)).unwrap();
    assert_ne!(other.fingerprint(), x1.fingerprint());
}

#[test]
fn hermitization_spectrum_is_symmetric_and_matches_dense_solver() {
    let x = ensemble::build_x(&EnsembleConfig::new(20, mixed(), 5)).unwrap();
    let fast = spectral::decompose(&x, true).unwrap();
    let dense = spectral::decompose_dense(x.to_dense().as_ref(), false).unwrap();
    let d = fast.dim();
    for i in 0..d {
        assert!((fast.eigenvalues[i] - dense.eigenvalues[i]).abs() < 1e-10);
        assert!((fast.eigenvalues[i] + fast.eigenvalues[d - 1 - i]).abs() < 1e-10);
    }
}

#[test]
fn resolvent_trace_matches_eigenvalue_stieltjes_transform() {
    let x = ensemble::build_x(&EnsembleConfig::new(32, FourierSpec::exponential(), 11)).unwrap();
    let s = spectral::decompose(&x, false).unwrap();
    let z = Complex64::new(0.4, 0.2);
    let g = spectral::resolvent(&x, z).unwrap();
    let trace: Complex64 = (0..x.dim()).map(|i| g[(i, i)]).sum::<Complex64>() / x.dim() as f64;
    assert!((trace - spectral::stieltjes(&s, z).unwrap()).norm() < 1e-10);
}

#[test]
fn limit_density_integrates_to_one() {
    let meas = sce::SpectralMeasure::from_symbol(&mixed(), sce::SYMBOL_GRID).unwrap();
    let edge = 2.0 * meas.support().1.sqrt() + 0.2;
    let es: Vec<f64> = (0..1601).map(|i| -edge + 2.0 * edge * i as f64 / 1600.0).collect();
    let rho = sce::density(&meas, &es, 1e-4).unwrap();
    let table = stats::DensityTable::new(es, rho).unwrap();
    assert!((table.total_mass() - 1.0).abs() < 5e-3, "{}", table.total_mass());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn resampled_entries_stay_within_lipschitz_bound(seed in any::<u64>(), w in 4usize..30, n in 4usize..16) {
        let spec = mixed();
        let cfg = EnsembleConfig::new(n, spec.clone(), seed).with_window(w);
        let (x, y) = ensemble::build_pair(&cfg).unwrap();
        let bound = spec.derivative_bound() * 2f64.powi(-(w as i32)) / (n as f64).sqrt();
        for i in 0..n {
            for j in 0..n {
                let d = (x.block()[(i, j)] - y.block()[(i, j)]).norm();
                prop_assert!(d <= bound * (1.0 + 1e-9) + 1e-15);
            }
        }
    }

    #[test]
    fn unfolded_spacings_of_the_semicircle_reference_average_one(seed in 0u64..1000) {
        let table = dynrmt::stats::DensityTable::from_fn(-2.0, 2.0, 2001, sce::semicircle_density).unwrap();
        let spectra = stats::gue_oracle(64, 30, seed).unwrap();
        let sample = stats::unfold(&spectra, stats::bulk_window(&table).unwrap(), &table).unwrap();
        prop_assert!((sample.mean_spacing() - 1.0).abs() < 0.1);
    }
}
