use proptest::prelude::*;

use qpqc_core::encodings::{EncodingKind, EncodingSpec};
use qpqc_core::expressibility::{
    estimate_frame_potential, haar_frame_potential, haar_self_test, jackknife_std_error, InputDistribution,
};
use qpqc_core::Error;

#[test]
fn haar_reference_values() {
    assert_eq!(haar_frame_potential(16, 1).unwrap(), 1.0 / 16.0);
    assert!((haar_frame_potential(16, 2).unwrap() - 1.0 / 136.0).abs() < 1e-18);
    assert_eq!(haar_frame_potential(256, 1).unwrap(), 1.0 / 256.0);
    assert!(matches!(haar_frame_potential(16, 3), Err(Error::Config(_))));
    assert!(haar_frame_potential(1, 1).is_err());
}

/// Monte Carlo over Haar pairs against `t!(d−1)!/(d+t−1)!`.
#[test]
fn haar_monte_carlo_agrees() {
    for (n, t) in [(4, 1), (4, 2), (6, 2)] {
        let e = haar_self_test(n, t, 4000, 11).unwrap();
        let exact = haar_frame_potential(1 << n, t).unwrap();
        assert!((e.mean - exact).abs() < 3.0 * e.std_error, "n={n} t={t}: {} vs {exact} ± {}", e.mean, e.std_error);
        assert!((e.ratio - 1.0).abs() < 3.0 * e.std_error / exact);
    }
}

#[test]
fn jackknife_of_iid_mean() {
    // for the mean the jackknife equals s/√n
    let v = [1.0, 2.0, 4.0, 7.0];
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let s2 = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!((jackknife_std_error(&v) - (s2 / n).sqrt()).abs() < 1e-12);
}

#[test]
fn error_shrinks_with_more_pairs() {
    let spec = EncodingSpec::new(EncodingKind::QaoaX);
    let a = estimate_frame_potential(&spec, 4, 1, 2000, 3, InputDistribution::default()).unwrap();
    let b = estimate_frame_potential(&spec, 4, 1, 4000, 3, InputDistribution::default()).unwrap();
    let ratio = b.std_error / a.std_error;
    assert!((ratio - std::f64::consts::FRAC_1_SQRT_2).abs() < 0.2 * std::f64::consts::FRAC_1_SQRT_2, "{ratio}");
}

#[test]
fn second_moment_is_bounded_by_first() {
    for kind in [EncodingKind::QaoaX, EncodingKind::QaoaY, EncodingKind::QaoaZ, EncodingKind::Iqp] {
        let spec = EncodingSpec::new(kind);
        for inputs in [InputDistribution::default(), InputDistribution::wide()] {
            let f1 = estimate_frame_potential(&spec, 3, 1, 500, 9, inputs).unwrap();
            let f2 = estimate_frame_potential(&spec, 3, 2, 500, 9, inputs).unwrap();
            assert!(f2.mean <= f1.mean);
        }
    }
}

#[test]
fn z_field_is_least_expressive_at_four_qubits() {
    let est = |k| {
        estimate_frame_potential(&EncodingSpec::new(k), 4, 1, 5000, 0, InputDistribution::default()).unwrap()
    };
    let (x, y, z) = (est(EncodingKind::QaoaX), est(EncodingKind::QaoaY), est(EncodingKind::QaoaZ));
    for other in [&x, &y] {
        let gap = z.ratio - other.ratio;
        let se = (z.std_error.powi(2) + other.std_error.powi(2)).sqrt() / z.haar_ref;
        assert!(gap > 2.0 * se, "gap {gap} se {se}");
    }
}

#[test]
fn argument_errors() {
    let spec = EncodingSpec::new(EncodingKind::QaoaZ);
    assert!(estimate_frame_potential(&spec, 4, 1, 10, 0, InputDistribution::default()).is_err());
    let amp = EncodingSpec::new(EncodingKind::Amplitude);
    assert!(matches!(
        estimate_frame_potential(&amp, 4, 1, 200, 0, InputDistribution::default()),
        Err(Error::Config(_))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn overlaps_stay_in_unit_interval(seed in any::<u64>(), n in 1usize..=5, k in 0usize..3) {
        let kind = [EncodingKind::QaoaX, EncodingKind::Ring, EncodingKind::Waterfall][k];
        let e = estimate_frame_potential(&EncodingSpec::new(kind), n, 1, 100, seed, InputDistribution::wide()).unwrap();
        prop_assert!((0.0..=1.0).contains(&e.mean));
        prop_assert!(e.std_error >= 0.0);
        prop_assert_eq!(e.samples, 100);
    }
}
