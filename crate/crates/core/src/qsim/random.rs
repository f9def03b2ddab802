use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::qsim::gate::{GateOp, C64};
use crate::qsim::state::StateVector;

fn gaussian_complex<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-random `dim × dim` unitary (row-major) via Gram-Schmidt on a
/// complex Ginibre matrix.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<C64> {
    let mut cols: Vec<Vec<C64>> = (0..dim)
        .map(|_| (0..dim).map(|_| gaussian_complex(rng)).collect())
        .collect();
    for k in 0..dim {
        for j in 0..k {
            let proj: C64 = cols[j].iter().zip(&cols[k]).map(|(a, b)| a.conj() * b).sum();
            let prev = cols[j].clone();
            for (x, p) in cols[k].iter_mut().zip(prev) {
                *x -= proj * p;
            }
        }
        let norm = cols[k].iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        cols[k].iter_mut().for_each(|x| *x /= norm);
    }
    let mut m = vec![C64::new(0.0, 0.0); dim * dim];
    for (c, col) in cols.iter().enumerate() {
        for (r, v) in col.iter().enumerate() {
            m[r * dim + c] = *v;
        }
    }
    m
}

pub fn haar_gate2<R: Rng + ?Sized>(a: usize, b: usize, rng: &mut R) -> Result<GateOp> {
    let m: [C64; 16] = haar_unitary(4, rng).try_into().expect("4x4");
    GateOp::unitary2(a, b, m)
}

pub fn haar_gate1<R: Rng + ?Sized>(q: usize, rng: &mut R) -> Result<GateOp> {
    let m: [C64; 4] = haar_unitary(2, rng).try_into().expect("2x2");
    GateOp::unitary1(q, m)
}

/// Haar-random pure state.
pub fn haar_state<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> Result<StateVector> {
    let mut amps: Vec<C64> = (0..1usize << n_qubits).map(|_| gaussian_complex(rng)).collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    amps.iter_mut().for_each(|a| *a /= norm);
    StateVector::from_amplitudes(amps)
}
