use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::encodings::ordering::{mixing_groups, position_qubits};
use crate::error::{Error, Result};
use crate::qsim::random::haar_gate2;
use crate::qsim::{dense, StateVector, C64};

const MAX_LOCALITY_QUBITS: usize = 8;
const TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct LocalityReport {
    pub position: usize,
    pub n_qubits: usize,
    pub trials: usize,
    pub passed: bool,
    /// Largest `|∂out_i/∂in_j|` with `j` outside the group of `i`.
    pub max_off_group: f64,
    /// Largest deviation between the simulated Jacobian and the embedded
    /// full-unitary oracle.
    pub max_oracle_deviation: f64,
}

/// Checks that a random two-qubit unitary at position `p` only couples
/// amplitudes within the groups of [`mixing_groups`].
pub fn verify_kernel_locality(p: usize, n: usize, trials: usize) -> Result<LocalityReport> {
    let groups = mixing_groups(p, n)?;
    let seed = 0x5eed_0000 ^ ((n as u64) << 8) ^ p as u64;
    verify_kernel_locality_with(&groups, p, n, trials, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Same check against an arbitrary group table, so that the verifier can be
/// exercised on a wrong table.
pub fn verify_kernel_locality_with<R: Rng + ?Sized>(
    groups: &[[usize; 4]],
    p: usize,
    n: usize,
    trials: usize,
    rng: &mut R,
) -> Result<LocalityReport> {
    if n > MAX_LOCALITY_QUBITS {
        return Err(Error::Capacity(format!(
            "locality check supports up to {MAX_LOCALITY_QUBITS} qubits"
        )));
    }
    if n < 2 || p + 2 > n {
        return Err(Error::shape(format!("gate position {p} invalid for {n} qubits")));
    }
    let dim = 1usize << n;
    let mut group_of = vec![usize::MAX; dim];
    for (g, members) in groups.iter().enumerate() {
        for &m in members {
            if m >= dim || group_of[m] != usize::MAX {
                return Err(Error::shape("group table is not a partition"));
            }
            group_of[m] = g;
        }
    }
    if group_of.contains(&usize::MAX) {
        return Err(Error::shape("group table does not cover every amplitude"));
    }

    let (a, b) = position_qubits(p, n);
    let mut max_off_group = 0.0f64;
    let mut max_oracle_deviation = 0.0f64;
    for _ in 0..trials {
        let gate = haar_gate2(a, b, rng)?;
        let oracle = dense::embed(&gate, n)?;
        for j in 0..dim {
            let mut amps = vec![C64::new(0.0, 0.0); dim];
            amps[j] = C64::new(1.0, 0.0);
            let mut column = StateVector::from_amplitudes(amps)?;
            column.apply_gate(&gate)?;
            for (i, v) in column.amplitudes().iter().enumerate() {
                max_oracle_deviation = max_oracle_deviation.max((v - oracle.get(i, j)).norm());
                if group_of[i] != group_of[j] {
                    max_off_group = max_off_group.max(v.norm());
                }
            }
        }
    }
    Ok(LocalityReport {
        position: p,
        n_qubits: n,
        trials,
        passed: max_off_group < TOLERANCE && max_oracle_deviation < TOLERANCE,
        max_off_group,
        max_oracle_deviation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;

    #[test]
    fn passes_on_small_registers() {
        let r = verify_kernel_locality(0, 3, 10).unwrap();
        assert!(r.passed && r.max_off_group < 1e-12, "{r:?}");
        let r = verify_kernel_locality(1, 5, 10).unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn shuffled_table_fails() {
        let mut indices: Vec<usize> = (0..16).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        indices.shuffle(&mut rng);
        let groups: Vec<[usize; 4]> = indices
            .chunks(4)
            .map(|c| [c[0], c[1], c[2], c[3]])
            .collect();
        let r = verify_kernel_locality_with(&groups, 1, 4, 3, &mut rng).unwrap();
        assert!(!r.passed);
        assert!(r.max_off_group > 1e-3);
    }

    #[test]
    fn wrong_position_fails() {
        let groups = mixing_groups(0, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let r = verify_kernel_locality_with(&groups, 1, 4, 2, &mut rng).unwrap();
        assert!(!r.passed);
    }
}
