//! Circuit evaluation and differentiation.

mod diff;
mod optim;

pub use diff::{grad_adjoint, grad_parameter_shift, CircuitGradient};
pub use optim::{adam_step, cross_entropy, histogram_nll, AdamConfig, AdamState};

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ansatz::{append_ansatz, parameter_count, AnsatzSpec};
use crate::encodings::{amplitude_prepare, encode_into, EncodingSpec, Ordering};
use crate::error::{Error, Result};
use crate::measure::{basis_change, MeasurementKind, MeasurementSpec};
use crate::qsim::pauli::PauliMasks;
use crate::qsim::state::{accumulate_pauli, apply_unchecked, pauli_expectation};
use crate::qsim::{GateSequence, StateVector, C64};

/// Encoding, trainable blocks and readout of one PQC.
#[derive(Clone, Debug, PartialEq)]
pub struct CircuitSpec {
    pub n_qubits: usize,
    pub encoding: EncodingSpec,
    pub ansatz: AnsatzSpec,
    /// Number of consecutive ansatz blocks sharing one parameter set.
    pub ansatz_repeats: usize,
    pub measurement: MeasurementSpec,
    /// Pixel-to-amplitude map for amplitude encoding; identity if absent.
    pub amplitude_ordering: Option<Ordering>,
}

impl CircuitSpec {
    pub fn new(
        n_qubits: usize,
        encoding: EncodingSpec,
        ansatz: AnsatzSpec,
        measurement: MeasurementSpec,
    ) -> Self {
        CircuitSpec {
            n_qubits,
            encoding,
            ansatz,
            ansatz_repeats: 1,
            measurement,
            amplitude_ordering: None,
        }
    }

    pub fn with_ordering(mut self, ordering: Ordering) -> Self {
        self.amplitude_ordering = Some(ordering);
        self
    }

    pub fn with_repeats(mut self, repeats: usize) -> Self {
        self.ansatz_repeats = repeats;
        self
    }

    /// Trainable encoding angles; they precede the ansatz parameters.
    pub fn encoding_param_count(&self) -> usize {
        self.encoding.trainable_count(self.n_qubits)
    }

    pub fn param_count(&self) -> Result<usize> {
        Ok(self.encoding_param_count() + parameter_count(&self.ansatz, self.n_qubits)?)
    }

    /// Number of input features the circuit consumes.
    pub fn feature_count(&self) -> usize {
        match &self.amplitude_ordering {
            Some(o) if self.encoding.kind.is_amplitude() => o.len(),
            _ => self.encoding.kind.features_per_circuit(self.n_qubits),
        }
    }

    pub fn output_len(&self) -> usize {
        self.measurement.output_len()
    }

    /// Uniform `[−π, π]` initial parameters.
    pub fn init_params(&self, seed: u64) -> Result<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok((0..self.param_count()?)
            .map(|_| rng.random_range(-PI..PI))
            .collect())
    }

    pub fn validate(&self) -> Result<()> {
        self.encoding.validate()?;
        self.ansatz.validate()?;
        self.measurement.validate(self.n_qubits)?;
        if self.ansatz_repeats == 0 {
            return Err(Error::config("ansatz_repeats must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub(crate) enum Readout {
    /// Z expectations (after any basis change).
    Z(Vec<usize>),
    Histogram(Vec<usize>),
    Paulis(Vec<PauliMasks>),
}

/// Amplitude-encoding bookkeeping needed for input gradients.
#[derive(Clone, Debug)]
pub(crate) struct AmplitudeInput {
    pub permutation: Vec<usize>,
    pub norm: f64,
    pub unit: Vec<f64>,
}

/// Initial state, gate list and readout of a circuit for one input.
#[derive(Clone, Debug)]
pub struct CompiledCircuit {
    pub initial: StateVector,
    pub gates: GateSequence,
    pub(crate) readout: Readout,
    pub(crate) amplitude: Option<AmplitudeInput>,
    pub(crate) features: Vec<f64>,
}

impl CompiledCircuit {
    pub fn n_qubits(&self) -> usize {
        self.gates.n_qubits()
    }

    /// Final state before readout.
    pub fn final_state(&self) -> StateVector {
        let mut s = self.initial.clone();
        let n = s.n_qubits();
        for g in &self.gates {
            apply_unchecked(s.amplitudes_mut(), n, g);
        }
        s
    }

    pub fn readout(&self, state: &StateVector) -> Vec<f64> {
        readout_values(&self.readout, state.amplitudes(), state.n_qubits())
    }
}

pub(crate) fn readout_values(readout: &Readout, amps: &[C64], n: usize) -> Vec<f64> {
    match readout {
        Readout::Z(qs) => qs
            .iter()
            .map(|&q| {
                let bit = 1usize << (n - 1 - q);
                amps.iter()
                    .enumerate()
                    .map(|(i, a)| if i & bit == 0 { a.norm_sqr() } else { -a.norm_sqr() })
                    .sum()
            })
            .collect(),
        Readout::Histogram(qs) => {
            let mut out = vec![0.0; 1 << qs.len()];
            for (i, a) in amps.iter().enumerate() {
                out[outcome_index(i, qs, n)] += a.norm_sqr();
            }
            out
        }
        Readout::Paulis(masks) => masks.iter().map(|&m| pauli_expectation(amps, m)).collect(),
    }
}

fn outcome_index(i: usize, qs: &[usize], n: usize) -> usize {
    qs.iter()
        .fold(0usize, |acc, &q| (acc << 1) | ((i >> (n - 1 - q)) & 1))
}

/// `Σ_k w_k O_k |ψ⟩`.
pub(crate) fn weighted_observable(readout: &Readout, amps: &[C64], n: usize, w: &[f64]) -> Vec<C64> {
    match readout {
        Readout::Z(qs) => amps
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let s: f64 = qs
                    .iter()
                    .zip(w)
                    .map(|(&q, &wk)| if i & (1 << (n - 1 - q)) == 0 { wk } else { -wk })
                    .sum();
                a * s
            })
            .collect(),
        Readout::Histogram(qs) => amps
            .iter()
            .enumerate()
            .map(|(i, a)| a * w[outcome_index(i, qs, n)])
            .collect(),
        Readout::Paulis(masks) => {
            let mut out = vec![C64::new(0.0, 0.0); amps.len()];
            for (&m, &wk) in masks.iter().zip(w) {
                accumulate_pauli(&mut out, amps, m, wk);
            }
            out
        }
    }
}

/// Builds the gate list for one input. `params` holds the encoding angles
/// followed by the ansatz parameters.
pub fn compile(spec: &CircuitSpec, params: &[f64], features: &[f64]) -> Result<CompiledCircuit> {
    spec.validate()?;
    let n = spec.n_qubits;
    let expected = spec.param_count()?;
    if params.len() != expected {
        return Err(Error::shape(format!(
            "circuit takes {expected} parameters, got {}",
            params.len()
        )));
    }
    let n_enc = spec.encoding_param_count();
    let mut gates = GateSequence::new(n);
    let (initial, amplitude) = if spec.encoding.kind.is_amplitude() {
        let ordering = match &spec.amplitude_ordering {
            Some(o) => o.clone(),
            None => Ordering::identity(features.len()),
        };
        let state = amplitude_prepare(features, &ordering, n)?;
        let norm = features.iter().map(|x| x * x).sum::<f64>().sqrt();
        let amp = AmplitudeInput {
            permutation: ordering.permutation().to_vec(),
            norm,
            unit: features.iter().map(|x| x / norm).collect(),
        };
        (state, Some(amp))
    } else {
        encode_into(&mut gates, &spec.encoding, features, &params[..n_enc], 0)?;
        (StateVector::zero(n)?, None)
    };
    for _ in 0..spec.ansatz_repeats {
        append_ansatz(&mut gates, &spec.ansatz, &params[n_enc..], n_enc)?;
    }
    let m = &spec.measurement;
    let readout = match m.kind {
        MeasurementKind::PauliX | MeasurementKind::PauliY | MeasurementKind::PauliZ => {
            let axis = m.kind.axis().expect("single-qubit kind");
            for &q in &m.measured_qubits {
                for g in basis_change(axis, q) {
                    gates.push(g)?;
                }
            }
            Readout::Z(m.measured_qubits.clone())
        }
        MeasurementKind::Histogram => Readout::Histogram(m.measured_qubits.clone()),
        MeasurementKind::Paulis => Readout::Paulis(m.pauli_strings.iter().map(|p| p.masks()).collect()),
    };
    Ok(CompiledCircuit {
        initial,
        gates,
        readout,
        amplitude,
        features: features.to_vec(),
    })
}

/// Encode, run the trainable blocks, measure.
pub fn circuit_forward(spec: &CircuitSpec, params: &[f64], features: &[f64]) -> Result<Vec<f64>> {
    let c = compile(spec, params, features)?;
    Ok(c.readout(&c.final_state()))
}
