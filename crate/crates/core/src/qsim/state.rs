use crate::error::{Error, Result};
use crate::qsim::gate::{Axis, GateMatrix, GateOp, Generator, Structure, Targets, C64};
use crate::qsim::pauli::{PauliMasks, PauliString};

pub const MAX_QUBITS: usize = 26;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Dense state vector. Qubit 0 is the most significant bit of the amplitude
/// index, so qubit `q` owns bit `n - 1 - q`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<C64>,
}

impl StateVector {
    /// `|0…0⟩` on `n_qubits` qubits.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        let mut amps = vec![ZERO; 1 << n_qubits];
        amps[0] = C64::new(1.0, 0.0);
        Ok(StateVector { n_qubits, amps })
    }

    /// Wraps raw amplitudes. The length must be a power of two; the norm is
    /// not checked so that unnormalized vectors can be propagated linearly.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        if amps.is_empty() || !amps.len().is_power_of_two() {
            return Err(Error::shape(format!(
                "amplitude count {} is not a power of two",
                amps.len()
            )));
        }
        let n_qubits = amps.len().trailing_zeros() as usize;
        check_qubits(n_qubits)?;
        Ok(StateVector { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn apply_gate(&mut self, gate: &GateOp) -> Result<()> {
        gate.check_targets(self.n_qubits)?;
        apply_unchecked(&mut self.amps, self.n_qubits, gate);
        Ok(())
    }

    pub fn apply_sequence<'a>(&mut self, gates: impl IntoIterator<Item = &'a GateOp>) -> Result<()> {
        for g in gates {
            self.apply_gate(g)?;
        }
        Ok(())
    }

    /// `|amp_i|²` for every basis state.
    pub fn basis_probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `⟨ψ|P|ψ⟩` for a Pauli string with one letter per qubit.
    pub fn expectation_pauli(&self, pauli: &PauliString) -> Result<f64> {
        if pauli.len() != self.n_qubits {
            return Err(Error::shape(format!(
                "Pauli string of length {} on {} qubits",
                pauli.len(),
                self.n_qubits
            )));
        }
        Ok(pauli_expectation(&self.amps, pauli.masks()))
    }

    /// `⟨Z_q⟩` for a single qubit.
    pub fn expectation_z(&self, q: usize) -> Result<f64> {
        if q >= self.n_qubits {
            return Err(Error::shape(format!(
                "qubit {q} out of range for {} qubits",
                self.n_qubits
            )));
        }
        let bit = 1usize << (self.n_qubits - 1 - q);
        Ok(self
            .amps
            .iter()
            .enumerate()
            .map(|(i, a)| if i & bit == 0 { a.norm_sqr() } else { -a.norm_sqr() })
            .sum())
    }

    pub fn inner(&self, other: &StateVector) -> C64 {
        inner(&self.amps, &other.amps)
    }
}

fn check_qubits(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::Capacity(format!(
            "{n} qubits requested; supported range is 1..={MAX_QUBITS}"
        )));
    }
    Ok(())
}

pub(crate) fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn pauli_expectation(amps: &[C64], m: PauliMasks) -> f64 {
    let mut acc = ZERO;
    for (i, a) in amps.iter().enumerate() {
        if *a == ZERO {
            continue;
        }
        let sign = if (i & m.sign).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        acc += amps[i ^ m.flip].conj() * a * sign;
    }
    (acc * m.phase).re
}

/// `out += weight · P|ψ⟩`.
pub(crate) fn accumulate_pauli(out: &mut [C64], amps: &[C64], m: PauliMasks, weight: f64) {
    let w = m.phase * weight;
    for (i, a) in amps.iter().enumerate() {
        let sign = if (i & m.sign).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        out[i ^ m.flip] += a * w * sign;
    }
}

#[inline]
fn bit_of(n: usize, q: usize) -> usize {
    1usize << (n - 1 - q)
}

/// Applies a gate whose targets are already validated.
pub(crate) fn apply_unchecked(amps: &mut [C64], n: usize, gate: &GateOp) {
    match (gate.targets, &gate.matrix) {
        (Targets::One(q), GateMatrix::One(m)) => apply_one(amps, bit_of(n, q), m, gate.structure),
        (Targets::Two(a, b), GateMatrix::Two(m)) => {
            apply_two(amps, bit_of(n, a), bit_of(n, b), m, gate.structure)
        }
        _ => unreachable!("gate arity and matrix size disagree"),
    }
}

fn apply_one(amps: &mut [C64], stride: usize, m: &[C64; 4], structure: Structure) {
    for chunk in amps.chunks_exact_mut(2 * stride) {
        let (lo, hi) = chunk.split_at_mut(stride);
        if structure == Structure::Diagonal {
            lo.iter_mut().for_each(|a| *a *= m[0]);
            hi.iter_mut().for_each(|a| *a *= m[3]);
        } else {
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = m[0] * x + m[1] * y;
                *b = m[2] * x + m[3] * y;
            }
        }
    }
}

#[inline]
fn insert_zero_bit(i: usize, bit: usize) -> usize {
    let low = i & (bit - 1);
    ((i & !(bit - 1)) << 1) | low
}

fn apply_two(amps: &mut [C64], ba: usize, bb: usize, m: &[C64; 16], structure: Structure) {
    let (lo_bit, hi_bit) = if ba < bb { (ba, bb) } else { (bb, ba) };
    let quarter = amps.len() / 4;
    for k in 0..quarter {
        let base = insert_zero_bit(insert_zero_bit(k, lo_bit), hi_bit);
        let idx = [base, base | bb, base | ba, base | ba | bb];
        match structure {
            Structure::Diagonal => {
                for (l, &i) in idx.iter().enumerate() {
                    amps[i] *= m[5 * l];
                }
            }
            Structure::Controlled => {
                let (x, y) = (amps[idx[2]], amps[idx[3]]);
                amps[idx[2]] = m[10] * x + m[11] * y;
                amps[idx[3]] = m[14] * x + m[15] * y;
            }
            Structure::General => {
                let v = [amps[idx[0]], amps[idx[1]], amps[idx[2]], amps[idx[3]]];
                for r in 0..4 {
                    amps[idx[r]] =
                        m[4 * r] * v[0] + m[4 * r + 1] * v[1] + m[4 * r + 2] * v[2] + m[4 * r + 3] * v[3];
                }
            }
        }
    }
}

/// `⟨λ|G|ψ⟩` for the generator of `gate`.
pub(crate) fn generator_inner(lambda: &[C64], psi: &[C64], n: usize, gate: &GateOp) -> C64 {
    let generator = gate
        .generator
        .expect("generator_inner called on a gate without generator");
    let mut acc = ZERO;
    match (generator, gate.targets) {
        (Generator::Rot(axis), Targets::One(q)) => {
            let bit = bit_of(n, q);
            for (i, l) in lambda.iter().enumerate() {
                acc += l.conj() * apply_pauli_element(axis, psi, i, bit);
            }
        }
        (Generator::ZZ, Targets::Two(a, b)) => {
            let mask = bit_of(n, a) | bit_of(n, b);
            for (i, (l, p)) in lambda.iter().zip(psi).enumerate() {
                let v = l.conj() * p;
                if (i & mask).count_ones() % 2 == 0 {
                    acc += v;
                } else {
                    acc -= v;
                }
            }
        }
        (Generator::Controlled(axis), Targets::Two(c, t)) => {
            let cbit = bit_of(n, c);
            let tbit = bit_of(n, t);
            for (i, l) in lambda.iter().enumerate() {
                if i & cbit != 0 {
                    acc += l.conj() * apply_pauli_element(axis, psi, i, tbit);
                }
            }
        }
        _ => unreachable!("generator and targets disagree"),
    }
    acc
}

/// `(P ψ)_i` for a single-qubit Pauli on the qubit owning `bit`.
#[inline]
fn apply_pauli_element(axis: Axis, psi: &[C64], i: usize, bit: usize) -> C64 {
    match axis {
        Axis::X => psi[i ^ bit],
        // Y|0⟩ = i|1⟩, Y|1⟩ = -i|0⟩
        Axis::Y => {
            let src = psi[i ^ bit];
            if i & bit == 0 {
                C64::new(src.im, -src.re)
            } else {
                C64::new(-src.im, src.re)
            }
        }
        Axis::Z => {
            if i & bit == 0 {
                psi[i]
            } else {
                -psi[i]
            }
        }
    }
}

/// True when `ψ` is an eigenvector of a diagonal generator, i.e. every
/// nonzero amplitude sits on the same generator eigenvalue.
pub(crate) fn is_diagonal_eigenstate(psi: &[C64], n: usize, gate: &GateOp) -> bool {
    let eigen: Box<dyn Fn(usize) -> i8> = match (gate.generator, gate.targets) {
        (Some(Generator::Rot(Axis::Z)), Targets::One(q)) => {
            let bit = bit_of(n, q);
            Box::new(move |i| if i & bit == 0 { 1 } else { -1 })
        }
        (Some(Generator::ZZ), Targets::Two(a, b)) => {
            let mask = bit_of(n, a) | bit_of(n, b);
            Box::new(move |i| if (i & mask).count_ones() % 2 == 0 { 1 } else { -1 })
        }
        (Some(Generator::Controlled(Axis::Z)), Targets::Two(c, t)) => {
            let (cb, tb) = (bit_of(n, c), bit_of(n, t));
            Box::new(move |i| match (i & cb != 0, i & tb != 0) {
                (false, _) => 0,
                (true, false) => 1,
                (true, true) => -1,
            })
        }
        _ => return false,
    };
    let mut seen: Option<i8> = None;
    for (i, a) in psi.iter().enumerate() {
        if *a == ZERO {
            continue;
        }
        let e = eigen(i);
        match seen {
            None => seen = Some(e),
            Some(s) if s != e => return false,
            _ => {}
        }
    }
    true
}
