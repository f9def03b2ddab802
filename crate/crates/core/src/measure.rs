//! Readout protocols and class-score extraction.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::qsim::{Axis, GateOp, Pauli, PauliString, StateVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MeasurementKind {
    PauliX,
    PauliY,
    PauliZ,
    Histogram,
    Paulis,
}

impl MeasurementKind {
    pub const ALL: [MeasurementKind; 5] = [
        MeasurementKind::PauliX,
        MeasurementKind::PauliY,
        MeasurementKind::PauliZ,
        MeasurementKind::Histogram,
        MeasurementKind::Paulis,
    ];

    pub fn axis(self) -> Option<Axis> {
        match self {
            MeasurementKind::PauliX => Some(Axis::X),
            MeasurementKind::PauliY => Some(Axis::Y),
            MeasurementKind::PauliZ => Some(Axis::Z),
            _ => None,
        }
    }
}

impl fmt::Display for MeasurementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MeasurementKind::PauliX => "pauli_x",
            MeasurementKind::PauliY => "pauli_y",
            MeasurementKind::PauliZ => "pauli_z",
            MeasurementKind::Histogram => "histogram",
            MeasurementKind::Paulis => "paulis",
        })
    }
}

impl FromStr for MeasurementKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        MeasurementKind::ALL
            .into_iter()
            .find(|k| k.to_string() == key)
            .ok_or_else(|| Error::config(format!("unknown measurement {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementSpec {
    pub kind: MeasurementKind,
    /// Qubits read out; the first listed is the most significant outcome bit
    /// for histograms.
    pub measured_qubits: Vec<usize>,
    pub class_count: usize,
    /// Class observables, Paulis only.
    pub pauli_strings: Vec<PauliString>,
    pub pauli_seed: Option<u64>,
}

impl MeasurementSpec {
    /// Single-qubit expectations on every listed qubit.
    pub fn pauli(axis: Axis, measured_qubits: Vec<usize>, class_count: usize) -> Self {
        let kind = match axis {
            Axis::X => MeasurementKind::PauliX,
            Axis::Y => MeasurementKind::PauliY,
            Axis::Z => MeasurementKind::PauliZ,
        };
        MeasurementSpec {
            kind,
            measured_qubits,
            class_count,
            pauli_strings: Vec::new(),
            pauli_seed: None,
        }
    }

    pub fn histogram(measured_qubits: Vec<usize>, class_count: usize) -> Self {
        MeasurementSpec {
            kind: MeasurementKind::Histogram,
            measured_qubits,
            class_count,
            pauli_strings: Vec::new(),
            pauli_seed: None,
        }
    }

    pub fn paulis(strings: Vec<PauliString>) -> Self {
        MeasurementSpec {
            kind: MeasurementKind::Paulis,
            measured_qubits: Vec::new(),
            class_count: strings.len(),
            pauli_strings: strings,
            pauli_seed: None,
        }
    }

    /// Class observables drawn once from `seed` and frozen.
    pub fn paulis_drawn(class_count: usize, n_qubits: usize, seed: u64) -> Result<Self> {
        let mut spec = Self::paulis(draw_pauli_strings(class_count, n_qubits, seed)?);
        spec.pauli_seed = Some(seed);
        Ok(spec)
    }

    /// Same protocol and class count, reading a different set of qubits.
    pub fn with_qubits(&self, measured_qubits: Vec<usize>) -> Self {
        MeasurementSpec {
            measured_qubits,
            ..self.clone()
        }
    }

    /// Length of the vector returned by [`measure`].
    pub fn output_len(&self) -> usize {
        match self.kind {
            MeasurementKind::Histogram => 1 << self.measured_qubits.len(),
            MeasurementKind::Paulis => self.pauli_strings.len(),
            _ => self.measured_qubits.len(),
        }
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        if let Some(&q) = self.measured_qubits.iter().find(|&&q| q >= n_qubits) {
            return Err(Error::shape(format!(
                "measured qubit {q} out of range for {n_qubits} qubits"
            )));
        }
        let distinct: HashSet<_> = self.measured_qubits.iter().collect();
        if distinct.len() != self.measured_qubits.len() {
            return Err(Error::shape("measured qubits must be distinct"));
        }
        match self.kind {
            MeasurementKind::Paulis => {
                if self.pauli_strings.len() != self.class_count {
                    return Err(Error::shape(format!(
                        "{} class observables for {} classes",
                        self.pauli_strings.len(),
                        self.class_count
                    )));
                }
                let mut seen = HashSet::new();
                for p in &self.pauli_strings {
                    if p.len() != n_qubits {
                        return Err(Error::shape(format!(
                            "pauli string {p} has length {} but the register has {n_qubits} qubits",
                            p.len()
                        )));
                    }
                    if p.is_identity() {
                        return Err(Error::shape("identity is not a class observable"));
                    }
                    if !seen.insert(p.to_string()) {
                        return Err(Error::shape(format!("duplicate class observable {p}")));
                    }
                }
            }
            MeasurementKind::Histogram => {
                if self.measured_qubits.len() >= usize::BITS as usize - 1 {
                    return Err(Error::Capacity("histogram over too many qubits".into()));
                }
            }
            _ => {}
        }
        if self.output_len() < self.class_count {
            return Err(Error::shape(format!(
                "{} readout values cannot score {} classes",
                self.output_len(),
                self.class_count
            )));
        }
        Ok(())
    }
}

/// Basis-change gates mapping an X or Y readout of `q` to a Z readout.
pub fn basis_change(axis: Axis, q: usize) -> Vec<GateOp> {
    match axis {
        Axis::X => vec![GateOp::h(q)],
        Axis::Y => vec![GateOp::s_dag(q), GateOp::h(q)],
        Axis::Z => Vec::new(),
    }
}

/// Marginal distribution over `qubits`, first listed qubit as the most
/// significant outcome bit.
pub fn marginal_probabilities(state: &StateVector, qubits: &[usize]) -> Vec<f64> {
    let n = state.n_qubits();
    let mut out = vec![0.0; 1 << qubits.len()];
    for (i, a) in state.amplitudes().iter().enumerate() {
        let outcome = qubits
            .iter()
            .fold(0usize, |acc, &q| (acc << 1) | ((i >> (n - 1 - q)) & 1));
        out[outcome] += a.norm_sqr();
    }
    out
}

pub fn measure(state: &StateVector, spec: &MeasurementSpec) -> Result<Vec<f64>> {
    let n = state.n_qubits();
    spec.validate(n)?;
    match spec.kind {
        MeasurementKind::PauliX | MeasurementKind::PauliY | MeasurementKind::PauliZ => {
            let axis = spec.kind.axis().expect("single-qubit kind");
            let mut rotated = state.clone();
            for &q in &spec.measured_qubits {
                for g in basis_change(axis, q) {
                    rotated.apply_gate(&g)?;
                }
            }
            spec.measured_qubits
                .iter()
                .map(|&q| rotated.expectation_z(q))
                .collect()
        }
        MeasurementKind::Histogram => Ok(marginal_probabilities(state, &spec.measured_qubits)),
        MeasurementKind::Paulis => spec
            .pauli_strings
            .iter()
            .map(|p| state.expectation_pauli(p))
            .collect(),
    }
}

/// The first `K` readout values.
pub fn class_scores(meas_output: &[f64], spec: &MeasurementSpec) -> Result<Vec<f64>> {
    let k = spec.class_count;
    if k > meas_output.len() {
        return Err(Error::shape(format!(
            "{k} classes but only {} readout values",
            meas_output.len()
        )));
    }
    Ok(meas_output[..k].to_vec())
}

/// Argmax with ties resolved to the lowest index.
pub fn predict(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// `K` distinct non-identity Pauli strings, uniform over the `4^n − 1`
/// candidates and deterministic in `seed`.
pub fn draw_pauli_strings(k: usize, n_qubits: usize, seed: u64) -> Result<Vec<PauliString>> {
    let available = if 2 * n_qubits >= 64 {
        u64::MAX
    } else {
        (1u64 << (2 * n_qubits)) - 1
    };
    if k as u64 > available {
        return Err(Error::Capacity(format!(
            "only {available} non-identity Pauli strings on {n_qubits} qubits, {k} requested"
        )));
    }
    if n_qubits > 31 {
        return Err(Error::Capacity(format!("{n_qubits} qubits")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(k);
    while out.len() < k {
        let code = rng.random_range(1..=available);
        if !seen.insert(code) {
            continue;
        }
        let letters = (0..n_qubits)
            .map(|q| Pauli::from_index((code >> (2 * (n_qubits - 1 - q))) & 3))
            .collect();
        out.push(PauliString::new(letters));
    }
    Ok(out)
}
