//! Explicit `2^n × 2^n` matrices. Exponential in memory; used as an
//! independent reference for the in-place kernels on small registers.

use crate::error::{Error, Result};
use crate::qsim::gate::{GateOp, GateSequence, Targets, C64};
use crate::qsim::pauli::{Pauli, PauliString};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

pub const MAX_DENSE_QUBITS: usize = 10;

/// Square complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    pub dim: usize,
    pub data: Vec<C64>,
}

impl DenseMatrix {
    pub fn identity(dim: usize) -> Self {
        let mut data = vec![ZERO; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = ONE;
        }
        DenseMatrix { dim, data }
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data[r * self.dim + c]
    }

    pub fn matmul(&self, rhs: &DenseMatrix) -> DenseMatrix {
        let d = self.dim;
        let mut data = vec![ZERO; d * d];
        for r in 0..d {
            for k in 0..d {
                let a = self.data[r * d + k];
                if a == ZERO {
                    continue;
                }
                for c in 0..d {
                    data[r * d + c] += a * rhs.data[k * d + c];
                }
            }
        }
        DenseMatrix { dim: d, data }
    }

    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        let d = self.dim;
        (0..d)
            .map(|r| (0..d).map(|c| self.data[r * d + c] * v[c]).sum())
            .collect()
    }

    pub fn kron(&self, rhs: &DenseMatrix) -> DenseMatrix {
        let (a, b) = (self.dim, rhs.dim);
        let d = a * b;
        let mut data = vec![ZERO; d * d];
        for r1 in 0..a {
            for c1 in 0..a {
                let x = self.data[r1 * a + c1];
                for r2 in 0..b {
                    for c2 in 0..b {
                        data[(r1 * b + r2) * d + c1 * b + c2] = x * rhs.data[r2 * b + c2];
                    }
                }
            }
        }
        DenseMatrix { dim: d, data }
    }

    pub fn from_rows(dim: usize, data: Vec<C64>) -> Self {
        assert_eq!(data.len(), dim * dim);
        DenseMatrix { dim, data }
    }
}

fn check(n: usize) -> Result<()> {
    if n == 0 || n > MAX_DENSE_QUBITS {
        return Err(Error::Capacity(format!(
            "dense oracle supports 1..={MAX_DENSE_QUBITS} qubits, got {n}"
        )));
    }
    Ok(())
}

/// Full matrix of one gate on `n` qubits, element by element:
/// `U[i][j] = g[local(i)][local(j)]` when `i` and `j` agree off the targets.
pub fn embed(gate: &GateOp, n: usize) -> Result<DenseMatrix> {
    check(n)?;
    gate.check_targets(n)?;
    let dim = 1usize << n;
    let qubits: Vec<usize> = match gate.targets {
        Targets::One(q) => vec![q],
        Targets::Two(a, b) => vec![a, b],
    };
    let bits: Vec<usize> = qubits.iter().map(|&q| n - 1 - q).collect();
    let target_mask: usize = bits.iter().map(|&b| 1usize << b).sum();
    let k = qubits.len();
    let local = |i: usize| -> usize {
        bits.iter()
            .fold(0usize, |acc, &b| (acc << 1) | ((i >> b) & 1))
    };
    let m = gate.matrix.entries();
    let ld = 1usize << k;
    let mut data = vec![ZERO; dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            if (i & !target_mask) != (j & !target_mask) {
                continue;
            }
            data[i * dim + j] = m[local(i) * ld + local(j)];
        }
    }
    Ok(DenseMatrix { dim, data })
}

/// Product unitary of a whole sequence (last gate leftmost).
pub fn full_unitary(seq: &GateSequence) -> Result<DenseMatrix> {
    let n = seq.n_qubits();
    check(n)?;
    let mut u = DenseMatrix::identity(1 << n);
    for g in seq {
        u = embed(g, n)?.matmul(&u);
    }
    Ok(u)
}

pub fn pauli_matrix(p: Pauli) -> DenseMatrix {
    let i = C64::new(0.0, 1.0);
    let data = match p {
        Pauli::I => vec![ONE, ZERO, ZERO, ONE],
        Pauli::X => vec![ZERO, ONE, ONE, ZERO],
        Pauli::Y => vec![ZERO, -i, i, ZERO],
        Pauli::Z => vec![ONE, ZERO, ZERO, -ONE],
    };
    DenseMatrix { dim: 2, data }
}

/// Kronecker product of the string's letters, qubit 0 leftmost.
pub fn pauli_string_matrix(p: &PauliString) -> DenseMatrix {
    p.letters()
        .iter()
        .fold(DenseMatrix::identity(1), |acc, &l| acc.kron(&pauli_matrix(l)))
}

/// `⟨ψ|M|ψ⟩` real part.
pub fn expectation(m: &DenseMatrix, psi: &[C64]) -> f64 {
    let mv = m.matvec(psi);
    psi.iter().zip(&mv).map(|(a, b)| a.conj() * b).sum::<C64>().re
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::gate::Axis;

    #[test]
    fn embed_matches_kronecker_for_adjacent_pair() {
        let g = GateOp::rzz(1, 2, 0.4);
        let local = DenseMatrix::from_rows(4, g.matrix.entries().to_vec());
        let expected = DenseMatrix::identity(2).kron(&local);
        assert_eq!(embed(&g, 3).unwrap(), expected);

        let g = GateOp::crot(Axis::Y, 0, 1, 0.9);
        let local = DenseMatrix::from_rows(4, g.matrix.entries().to_vec());
        let expected = local.kron(&DenseMatrix::identity(2));
        assert_eq!(embed(&g, 3).unwrap(), expected);
    }

    #[test]
    fn oracle_rejects_large_registers() {
        assert!(embed(&GateOp::h(0), 11).is_err());
    }
}
