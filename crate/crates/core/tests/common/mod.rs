#![allow(dead_code)]

use qpqc_core::qsim::{GateOp, GateSequence, Targets, C64};

/// Full unitary of a sequence built from Kronecker products of the gate
/// matrices with identities, bringing two-qubit targets next to each other
/// with explicit SWAP matrices. Independent of the library's kernels.
pub fn kron_unitary(seq: &GateSequence) -> Vec<Vec<C64>> {
    let n = seq.n_qubits();
    let mut u = identity(1 << n);
    for g in seq.gates() {
        u = matmul(&gate_unitary(g, n), &u);
    }
    u
}

pub fn identity(d: usize) -> Vec<Vec<C64>> {
    (0..d)
        .map(|r| (0..d).map(|c| C64::new((r == c) as u8 as f64, 0.0)).collect())
        .collect()
}

pub fn matmul(a: &[Vec<C64>], b: &[Vec<C64>]) -> Vec<Vec<C64>> {
    let d = a.len();
    (0..d)
        .map(|r| (0..d).map(|c| (0..d).map(|k| a[r][k] * b[k][c]).sum()).collect())
        .collect()
}

pub fn kron(a: &[Vec<C64>], b: &[Vec<C64>]) -> Vec<Vec<C64>> {
    let (m, k) = (a.len(), b.len());
    (0..m * k)
        .map(|r| (0..m * k).map(|c| a[r / k][c / k] * b[r % k][c % k]).collect())
        .collect()
}

fn block(m: &[C64], d: usize) -> Vec<Vec<C64>> {
    (0..d).map(|r| m[r * d..(r + 1) * d].to_vec()).collect()
}

/// `I_{2^left} ⊗ m ⊗ I_{2^right}`.
fn padded(m: &[Vec<C64>], left: usize, right: usize) -> Vec<Vec<C64>> {
    kron(&kron(&identity(1 << left), m), &identity(1 << right))
}

fn swap_adjacent(q: usize, n: usize) -> Vec<Vec<C64>> {
    let o = C64::new(1.0, 0.0);
    let z = C64::new(0.0, 0.0);
    let s = vec![
        vec![o, z, z, z],
        vec![z, z, o, z],
        vec![z, o, z, z],
        vec![z, z, z, o],
    ];
    padded(&s, q, n - q - 2)
}

/// Permutation unitary moving qubit `from` to position `to` by adjacent
/// swaps.
fn move_qubit(from: usize, to: usize, n: usize) -> Vec<Vec<C64>> {
    let mut p = identity(1 << n);
    let mut at = from;
    while at != to {
        let q = if at < to { at } else { at - 1 };
        p = matmul(&swap_adjacent(q, n), &p);
        at = if at < to { at + 1 } else { at - 1 };
    }
    p
}

fn dagger(m: &[Vec<C64>]) -> Vec<Vec<C64>> {
    let d = m.len();
    (0..d).map(|r| (0..d).map(|c| m[c][r].conj()).collect()).collect()
}

pub fn gate_unitary(g: &GateOp, n: usize) -> Vec<Vec<C64>> {
    match g.targets {
        Targets::One(q) => padded(&block(g.matrix.entries(), 2), q, n - q - 1),
        Targets::Two(a, b) => {
            // bring a to slot 0 and b to slot 1, apply, then undo
            let pa = move_qubit(a, 0, n);
            let b_after = if b < a { b + 1 } else { b };
            let pb = move_qubit(b_after, 1, n);
            let p = matmul(&pb, &pa);
            let core = padded(&block(g.matrix.entries(), 4), 0, n - 2);
            matmul(&dagger(&p), &matmul(&core, &p))
        }
    }
}

pub fn matvec(m: &[Vec<C64>], v: &[C64]) -> Vec<C64> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

pub fn max_abs_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// `|a − b| ≤ tol · max(1, |a|, |b|)`.
pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * 1f64.max(a.abs()).max(b.abs())
}

/// Central finite difference of a scalar function along coordinate `i`.
pub fn central_diff(f: impl Fn(&[f64]) -> f64, x: &[f64], i: usize, h: f64) -> f64 {
    let mut p = x.to_vec();
    let mut m = x.to_vec();
    p[i] += h;
    m[i] -= h;
    (f(&p) - f(&m)) / (2.0 * h)
}

use qpqc_core::ansatz::{AnsatzKind, AnsatzSpec};
use qpqc_core::encodings::{EncodingKind, EncodingSpec};
use qpqc_core::grad::CircuitSpec;
use qpqc_core::measure::{MeasurementKind, MeasurementSpec};
use qpqc_core::qsim::Axis;
use rand::Rng;

/// A random circuit of the given kinds on `n` qubits with a random readout,
/// plus matching parameters and features.
pub fn random_circuit<R: Rng>(
    rng: &mut R,
    n: usize,
    enc: EncodingKind,
    ans: AnsatzKind,
) -> (CircuitSpec, Vec<f64>, Vec<f64>) {
    let layers = if ans == AnsatzKind::Qcnn { 1 } else { rng.random_range(1..=2) };
    let ansatz = match ans {
        AnsatzKind::NoEntanglement => AnsatzSpec::no_entanglement(layers, rng.random()),
        _ => AnsatzSpec::new(ans, layers),
    };
    let k = n.min(2);
    let qubits: Vec<usize> = (0..n).collect();
    let meas = match MeasurementKind::ALL[rng.random_range(0..5)] {
        MeasurementKind::PauliX => MeasurementSpec::pauli(Axis::X, qubits, k),
        MeasurementKind::PauliY => MeasurementSpec::pauli(Axis::Y, qubits, k),
        MeasurementKind::PauliZ => MeasurementSpec::pauli(Axis::Z, qubits, k),
        MeasurementKind::Histogram => MeasurementSpec::histogram(qubits, k),
        MeasurementKind::Paulis => MeasurementSpec::paulis_drawn(3, n, rng.random()).unwrap(),
    };
    let spec = CircuitSpec::new(n, EncodingSpec::new(enc).with_layers(rng.random_range(1..=2)), ansatz, meas);
    let params = spec.init_params(rng.random()).unwrap();
    let features: Vec<f64> = (0..spec.feature_count())
        .map(|_| rng.random_range(0.05..std::f64::consts::PI))
        .collect();
    (spec, params, features)
}

/// Ansatz kinds that can be built on `n` qubits.
pub fn ansaetze_for(n: usize) -> Vec<AnsatzKind> {
    AnsatzKind::ALL
        .into_iter()
        .filter(|k| n >= 4 || !matches!(k, AnsatzKind::Qcnn | AnsatzKind::TwoKernel))
        .collect()
}
