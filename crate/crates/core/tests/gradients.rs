mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qpqc_core::ansatz::{AnsatzKind, AnsatzSpec};
use qpqc_core::encodings::{build_ordering, EncodingKind, EncodingSpec, OrderingKind};
use qpqc_core::grad::{
    adam_step, circuit_forward, cross_entropy, grad_adjoint, grad_parameter_shift, histogram_nll, AdamConfig,
    AdamState, CircuitSpec,
};
use qpqc_core::measure::MeasurementSpec;
use qpqc_core::qsim::Axis;
use qpqc_core::Error;

use common::{ansaetze_for, central_diff, random_circuit, rel_close};

fn weighted(spec: &CircuitSpec, params: &[f64], features: &[f64], w: &[f64]) -> f64 {
    circuit_forward(spec, params, features).unwrap().iter().zip(w).map(|(o, w)| o * w).sum()
}

fn cotangent(spec: &CircuitSpec, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..spec.output_len()).map(|_| rng.random_range(-1.0..1.0)).collect()
}

#[test]
fn rx_gradient_is_minus_sine() {
    let spec = CircuitSpec::new(
        1,
        EncodingSpec::new(EncodingKind::AngleX),
        AnsatzSpec::new(AnsatzKind::SimplifiedTwoDesign, 1),
        MeasurementSpec::pauli(Axis::Z, vec![0], 1),
    );
    // a lone R_Y(0) ansatz leaves the encoding angle as the only rotation
    for theta in [0.3, std::f64::consts::FRAC_PI_2, 2.5] {
        let g = grad_parameter_shift(&spec, &[0.0], &[theta], &[1.0]).unwrap();
        assert!((g.d_inputs[0] + theta.sin()).abs() < 1e-12);
        let a = grad_adjoint(&spec, &[0.0], &[theta], &[1.0]).unwrap();
        assert!((a.d_inputs[0] + theta.sin()).abs() < 1e-12);
    }
    let g = grad_parameter_shift(&spec, &[0.0], &[std::f64::consts::FRAC_PI_2], &[1.0]).unwrap();
    assert!((g.d_inputs[0] + 1.0).abs() < 1e-12);
}

#[test]
fn zero_parameter_circuit_has_empty_param_gradient() {
    // NoEntanglement with a seed whose mask places no gate on one qubit
    let seed = (0..1000u64)
        .find(|&s| {
            let spec = AnsatzSpec::no_entanglement(1, s);
            qpqc_core::ansatz::parameter_count(&spec, 1).unwrap() == 0
        })
        .unwrap();
    let spec = CircuitSpec::new(
        1,
        EncodingSpec::new(EncodingKind::AngleY),
        AnsatzSpec::no_entanglement(1, seed),
        MeasurementSpec::pauli(Axis::Z, vec![0], 1),
    );
    let g = grad_adjoint(&spec, &[], &[0.4], &[1.0]).unwrap();
    assert!(g.d_params.is_empty());
    assert!(grad_parameter_shift(&spec, &[], &[0.4], &[1.0]).unwrap().d_params.is_empty());
}

#[test]
fn angle_z_inputs_have_zero_gradient() {
    let spec = CircuitSpec::new(
        4,
        EncodingSpec::new(EncodingKind::AngleZ),
        AnsatzSpec::new(AnsatzKind::FullEntanglement, 2),
        MeasurementSpec::pauli(Axis::Z, vec![0, 1, 2, 3], 4),
    );
    let params = spec.init_params(3).unwrap();
    let g = grad_adjoint(&spec, &params, &[0.3, 1.0, 2.0, 0.1], &[1.0, -0.5, 0.2, 0.7]).unwrap();
    assert_eq!(g.d_inputs, vec![0.0; 4]);
    let g = grad_parameter_shift(&spec, &params, &[0.3, 1.0, 2.0, 0.1], &[1.0, -0.5, 0.2, 0.7]).unwrap();
    assert_eq!(g.d_inputs, vec![0.0; 4]);
}

#[test]
fn parameter_shift_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for n in [2, 4] {
        for enc in EncodingKind::ALL {
            for ans in ansaetze_for(n) {
                let (spec, params, features) = random_circuit(&mut rng, n, enc, ans);
                let w = cotangent(&spec, &mut rng);
                let g = grad_parameter_shift(&spec, &params, &features, &w).unwrap();
                for i in 0..params.len() {
                    let fd = central_diff(|p| weighted(&spec, p, &features, &w), &params, i, 1e-5);
                    assert!(rel_close(g.d_params[i], fd, 1e-6), "{enc}/{ans} n={n} param {i}: {} vs {fd}", g.d_params[i]);
                }
                for j in 0..features.len() {
                    let fd = central_diff(|f| weighted(&spec, &params, f, &w), &features, j, 1e-5);
                    assert!(rel_close(g.d_inputs[j], fd, 1e-6), "{enc}/{ans} n={n} input {j}: {} vs {fd}", g.d_inputs[j]);
                }
            }
        }
    }
}

#[test]
fn adjoint_matches_parameter_shift_on_fifty_circuits() {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    for i in 0..50 {
        let n = rng.random_range(1..=6);
        let enc = EncodingKind::ALL[rng.random_range(0..10)];
        let kinds = ansaetze_for(n);
        let ans = kinds[rng.random_range(0..kinds.len())];
        let (spec, params, features) = random_circuit(&mut rng, n, enc, ans);
        let w = cotangent(&spec, &mut rng);
        let a = grad_adjoint(&spec, &params, &features, &w).unwrap();
        let p = grad_parameter_shift(&spec, &params, &features, &w).unwrap();
        for (x, y) in a.d_params.iter().zip(&p.d_params).chain(a.d_inputs.iter().zip(&p.d_inputs)) {
            assert!((x - y).abs() < 1e-8, "circuit {i} {enc}/{ans} n={n}: {x} vs {y}");
        }
    }
}

#[test]
fn amplitude_input_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let ordering = build_ordering(OrderingKind::Squared, (4, 4, 1), None).unwrap();
    let spec = CircuitSpec::new(
        4,
        EncodingSpec::new(EncodingKind::Amplitude),
        AnsatzSpec::new(AnsatzKind::Ring, 2),
        MeasurementSpec::pauli(Axis::Z, vec![0, 1, 2, 3], 4),
    )
    .with_ordering(ordering);
    let params = spec.init_params(1).unwrap();
    let features: Vec<f64> = (0..16).map(|_| rng.random_range(0.1..1.0)).collect();
    let w = cotangent(&spec, &mut rng);
    let g = grad_adjoint(&spec, &params, &features, &w).unwrap();
    for j in 0..16 {
        let fd = central_diff(|f| weighted(&spec, &params, f, &w), &features, j, 1e-5);
        assert!(rel_close(g.d_inputs[j], fd, 1e-6), "input {j}: {} vs {fd}", g.d_inputs[j]);
    }
}

#[test]
fn cross_entropy_examples() {
    let (loss, _) = cross_entropy(&[0.0; 10], 3).unwrap();
    assert!((loss - 10f64.ln()).abs() < 1e-12);
    let (loss, _) = cross_entropy(&[10.0, 0.0, 0.0], 0).unwrap();
    // ln(1 + 2e^-10)
    assert!((loss - (1.0 + 2.0 * (-10f64).exp()).ln()).abs() < 1e-15);
    assert!((loss - 9.1e-5).abs() < 1e-6);
    assert!(matches!(cross_entropy(&[0.0, 1.0], 2), Err(Error::Shape(_))));
    assert!(cross_entropy(&[1.0], 0).is_err());
}

#[test]
fn loss_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let k = rng.random_range(2..=10);
        let label = rng.random_range(0..k);
        let scores: Vec<f64> = (0..k).map(|_| rng.random_range(-2.0..2.0)).collect();
        let (_, g) = cross_entropy(&scores, label).unwrap();
        for i in 0..k {
            let fd = central_diff(|s| cross_entropy(s, label).unwrap().0, &scores, i, 1e-5);
            assert!((g[i] - fd).abs() < 1e-7);
        }
        let probs: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
        let (_, g) = histogram_nll(&probs, label).unwrap();
        for i in 0..k {
            let fd = central_diff(|p| histogram_nll(p, label).unwrap().0, &probs, i, 1e-6);
            assert!(rel_close(g[i], fd, 1e-6));
        }
    }
}

#[test]
fn adam_first_step_and_zero_gradient() {
    let cfg = AdamConfig::default();
    let mut p = vec![1.0, -2.0, 0.5];
    let g = vec![0.3, -4.0, 0.0];
    let mut state = AdamState::new(3);
    adam_step(&mut p, &g, &mut state, &cfg).unwrap();
    assert!((p[0] - (1.0 - cfg.learning_rate)).abs() < 1e-6);
    assert!((p[1] - (-2.0 + cfg.learning_rate)).abs() < 1e-6);
    assert_eq!(p[2], 0.5);
    assert!(matches!(adam_step(&mut p, &[0.0; 2], &mut state, &cfg), Err(Error::Shape(_))));
}

/// Two orthogonal inputs, |00⟩ and |11⟩ after AngleX, trained to opposite
/// classes on a 2-qubit ring ansatz.
#[test]
fn adam_reduces_toy_loss() {
    let spec = CircuitSpec::new(
        2,
        EncodingSpec::new(EncodingKind::AngleX),
        AnsatzSpec::new(AnsatzKind::Ring, 1),
        MeasurementSpec::pauli(Axis::Z, vec![0, 1], 2),
    );
    let data = [(vec![0.0, 0.0], 0usize), (vec![std::f64::consts::PI; 2], 1usize)];
    let loss_and_grad = |params: &[f64]| {
        let mut total = 0.0;
        let mut grad = vec![0.0; params.len()];
        for (x, y) in &data {
            let out = circuit_forward(&spec, params, x).unwrap();
            let (l, d) = cross_entropy(&out, *y).unwrap();
            total += l;
            let g = grad_adjoint(&spec, params, x, &d).unwrap();
            grad.iter_mut().zip(&g.d_params).for_each(|(a, b)| *a += b);
        }
        (total, grad)
    };
    for seed in 0..5 {
        let mut params = spec.init_params(seed).unwrap();
        let mut state = AdamState::new(params.len());
        let cfg = AdamConfig { learning_rate: 0.05, ..AdamConfig::default() };
        let (start, _) = loss_and_grad(&params);
        for _ in 0..20 {
            let (_, g) = loss_and_grad(&params);
            adam_step(&mut params, &g, &mut state, &cfg).unwrap();
        }
        let (end, _) = loss_and_grad(&params);
        assert!(end < start, "seed {seed}: {start} -> {end}");
    }
}

#[test]
fn adam_is_deterministic() {
    let run = || {
        let mut p = vec![0.1, 0.2];
        let mut s = AdamState::new(2);
        for i in 0..10 {
            let g = [p[0] - 1.0 + i as f64 * 0.01, p[1].sin()];
            adam_step(&mut p, &g, &mut s, &AdamConfig::default()).unwrap();
        }
        p
    };
    assert_eq!(run(), run());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn single_qubit_bases_match_finite_differences(seed in any::<u64>(), n in 2usize..=6, k in 0usize..7, axis in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kinds = ansaetze_for(n);
        let ans = kinds[k % kinds.len()];
        let (mut spec, params, features) = random_circuit(&mut rng, n, EncodingKind::AngleY, ans);
        spec.measurement = MeasurementSpec::pauli(Axis::ALL[axis], (0..n).collect(), 2);
        let w = cotangent(&spec, &mut rng);
        let ps = grad_parameter_shift(&spec, &params, &features, &w).unwrap();
        let adj = grad_adjoint(&spec, &params, &features, &w).unwrap();
        for i in 0..params.len() {
            let fd = central_diff(|p| weighted(&spec, p, &features, &w), &params, i, 1e-5);
            prop_assert!(rel_close(ps.d_params[i], fd, 1e-6));
            prop_assert!((adj.d_params[i] - ps.d_params[i]).abs() < 1e-8);
        }
    }
}
