mod common;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qpqc_core::encodings::{
    amplitude_prepare, build_ordering, encode, mixing_groups, qaoa_param_count, verify_kernel_locality,
    verify_kernel_locality_with, EncodingKind, EncodingSpec, Ordering, OrderingKind,
};
use qpqc_core::qsim::{StateVector, C64};
use qpqc_core::Error;

use common::{kron_unitary, matvec, max_abs_diff};

fn spec_for(kind: EncodingKind, n: usize, layers: usize, rng: &mut ChaCha8Rng) -> EncodingSpec {
    let mut spec = EncodingSpec::new(kind).with_layers(layers);
    spec.qaoa_params = (0..qaoa_param_count(kind, n, layers))
        .map(|_| rng.random_range(-3.0..3.0))
        .collect();
    spec
}

fn non_amplitude() -> Vec<EncodingKind> {
    EncodingKind::ALL.into_iter().filter(|k| !k.is_amplitude()).collect()
}

#[test]
fn iqp_pair_gates_are_products() {
    let seq = encode(&EncodingSpec::new(EncodingKind::Iqp).with_layers(2), &[0.5, 2.0, -1.0], 3).unwrap();
    assert_eq!(seq.two_qubit_count(), 6);
}

#[test]
fn squared_group_of_origin_is_a_block() {
    let o = build_ordering(OrderingKind::Squared, (4, 4, 1), None).unwrap();
    let inv = o.inverse();
    let groups = mixing_groups(0, 4).unwrap();
    let amp = o.permutation()[0];
    let g = groups.iter().find(|g| g.contains(&amp)).unwrap();
    let mut pixels: Vec<(usize, usize)> = g.iter().map(|&a| (inv[a] / 4, inv[a] % 4)).collect();
    pixels.sort();
    assert_eq!(pixels, vec![(0, 0), (0, 1), (1, 0), (1, 1)]);
}

#[test]
fn vhlines_mixes_rows_then_columns() {
    let o = build_ordering(OrderingKind::VHLines, (8, 8, 1), None).unwrap();
    let inv = o.inverse();
    // positions 0 and 1 share a bit, so the vertical runs sit at position 2
    for (p, horizontal) in [(0, true), (2, false)] {
        for g in mixing_groups(p, 6).unwrap() {
            let px: Vec<(usize, usize)> = g.iter().map(|&a| (inv[a] / 8, inv[a] % 8)).collect();
            if horizontal {
                assert!(px.iter().all(|&(y, _)| y == px[0].0));
                assert!(px.windows(2).all(|w| w[1].1 == w[0].1 + 1));
            } else {
                assert!(px.iter().all(|&(_, x)| x == px[0].1));
                assert!(px.windows(2).all(|w| w[1].0 == w[0].0 + 1));
            }
        }
    }
}

#[test]
fn random_ordering_is_seeded() {
    let a = build_ordering(OrderingKind::Random, (4, 4, 1), Some(9)).unwrap();
    let b = build_ordering(OrderingKind::Random, (4, 4, 1), Some(9)).unwrap();
    let c = build_ordering(OrderingKind::Random, (4, 4, 1), Some(10)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn channels_are_contiguous_planes() {
    let o = build_ordering(OrderingKind::Squared, (4, 4, 3), None).unwrap();
    for ch in 0..3 {
        for i in 0..16 {
            assert_eq!(o.permutation()[ch * 16 + i], ch * 16 + o.permutation()[i]);
        }
    }
}

#[test]
fn oversized_image_is_a_capacity_error() {
    let r = build_ordering(OrderingKind::Flatten, (8192, 8192, 2), None);
    assert!(matches!(r, Err(Error::Capacity(_))));
}

#[test]
fn mixing_group_examples() {
    assert_eq!(mixing_groups(0, 3).unwrap(), vec![[0, 1, 2, 3], [4, 5, 6, 7]]);
    assert_eq!(mixing_groups(1, 3).unwrap(), vec![[0, 2, 4, 6], [1, 3, 5, 7]]);
    // bit-manipulation oracle: indices that agree with 0 outside bits 2 and 3
    let oracle: Vec<usize> = (0..16).filter(|i| i & !0b1100 == 0).collect();
    assert_eq!(mixing_groups(2, 4).unwrap()[0].to_vec(), oracle);
    assert!(matches!(mixing_groups(2, 3), Err(Error::Shape(_))));
}

#[test]
fn locality_examples() {
    let r = verify_kernel_locality(0, 3, 10).unwrap();
    assert!(r.passed && r.max_off_group < 1e-12);
    assert!(verify_kernel_locality(1, 5, 10).unwrap().passed);
}

#[test]
fn shuffled_group_table_fails() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut flat: Vec<usize> = (0..8).collect();
    flat.shuffle(&mut rng);
    // make sure the shuffle actually breaks the partition
    flat.swap(0, 1);
    let table = mixing_groups(0, 3).unwrap();
    let mut shuffled: Vec<[usize; 4]> = flat.chunks(4).map(|c| [c[0], c[1], c[2], c[3]]).collect();
    if shuffled.iter().all(|g| table.iter().any(|t| t.iter().all(|x| g.contains(x)))) {
        shuffled = vec![[0, 1, 2, 4], [3, 5, 6, 7]];
    }
    let r = verify_kernel_locality_with(&shuffled, 0, 3, 10, &mut rng).unwrap();
    assert!(!r.passed);
    assert!(r.max_off_group > 1e-3);
}

#[test]
fn gate_count_formulas() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for n in 2..=10 {
        for l in 1..=4 {
            let f: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..3.0)).collect();
            let pairs = n * (n - 1) / 2;
            let count = |k| encode(&spec_for(k, n, l, &mut rng.clone()), &f, n).unwrap().two_qubit_count();
            assert_eq!(count(EncodingKind::Ring), n * l, "ring n={n} l={l}");
            assert_eq!(count(EncodingKind::Waterfall), l * pairs);
            assert_eq!(count(EncodingKind::Iqp), l * pairs);
            for k in [EncodingKind::QaoaX, EncodingKind::QaoaY, EncodingKind::QaoaZ] {
                // a 2-qubit ring has the two edges (0,1) and (1,0)
                assert_eq!(count(k), l * n, "{k} n={n} l={l}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn encodings_preserve_norm(seed in any::<u64>(), n in 1usize..=7, layers in 1usize..=3, k in 0usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kind = non_amplitude()[k];
        let f: Vec<f64> = (0..n).map(|_| rng.random_range(-4.0..4.0)).collect();
        let seq = encode(&spec_for(kind, n, layers, &mut rng), &f, n).unwrap();
        let mut s = StateVector::zero(n).unwrap();
        s.apply_sequence(&seq).unwrap();
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn encodings_match_oracle(seed in any::<u64>(), n in 1usize..=4, k in 0usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kind = non_amplitude()[k];
        let f: Vec<f64> = (0..n).map(|_| rng.random_range(-4.0..4.0)).collect();
        let seq = encode(&spec_for(kind, n, 2, &mut rng), &f, n).unwrap();
        let mut s = StateVector::zero(n).unwrap();
        s.apply_sequence(&seq).unwrap();
        let mut e0 = vec![C64::new(0.0, 0.0); 1 << n];
        e0[0] = C64::new(1.0, 0.0);
        prop_assert!(max_abs_diff(s.amplitudes(), &matvec(&kron_unitary(&seq), &e0)) < 1e-10);
    }

    #[test]
    fn angle_z_is_invisible(seed in any::<u64>(), n in 1usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let spec = EncodingSpec::new(EncodingKind::AngleZ);
        let mut a = StateVector::zero(n).unwrap();
        a.apply_sequence(&encode(&spec, &f, n).unwrap()).unwrap();
        let b = StateVector::zero(n).unwrap();
        for q in 0..n {
            for axis in ["X", "Y", "Z"] {
                let letters: String = (0..n).map(|i| if i == q { axis } else { "I" }).collect();
                let p = letters.parse().unwrap();
                let d = a.expectation_pauli(&p).unwrap() - b.expectation_pauli(&p).unwrap();
                prop_assert!(d.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn orderings_are_bijections(h in 1usize..=12, w in 1usize..=12, c in 1usize..=3, k in 0usize..4, seed in any::<u64>()) {
        let kind = OrderingKind::ALL[k];
        let o = build_ordering(kind, (h, w, c), Some(seed).filter(|_| kind == OrderingKind::Random)).unwrap();
        prop_assert_eq!(o.len(), h * w * c);
        prop_assert!(Ordering::new(o.permutation().to_vec()).is_ok());
    }

    #[test]
    fn amplitude_round_trip(seed in any::<u64>(), k in 0usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kind = OrderingKind::ALL[k];
        let shape = (8, 8, 3);
        let o = build_ordering(kind, shape, Some(seed).filter(|_| kind == OrderingKind::Random)).unwrap();
        let f: Vec<f64> = (0..192).map(|_| rng.random_range(0.0..1.0)).collect();
        let s = amplitude_prepare(&f, &o, 8).unwrap();
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        let norm = f.iter().map(|x| x * x).sum::<f64>().sqrt();
        for (i, &p) in o.permutation().iter().enumerate() {
            prop_assert!((s.amplitudes()[p].re * norm - f[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn mixing_groups_partition(n in 2usize..=10, p_raw in 0usize..9) {
        let p = p_raw % (n - 1);
        let groups = mixing_groups(p, n).unwrap();
        prop_assert_eq!(groups.len(), 1 << (n - 2));
        let mut seen = vec![false; 1 << n];
        let mask = 3usize << p;
        for g in &groups {
            for &i in g {
                prop_assert!(!seen[i]);
                seen[i] = true;
                prop_assert_eq!(i & !mask, g[0] & !mask);
            }
        }
        prop_assert!(seen.into_iter().all(|s| s));
    }
}
