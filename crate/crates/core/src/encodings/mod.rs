//! Classical-to-quantum feature maps.

mod locality;
mod ordering;

use std::fmt;
use std::str::FromStr;

pub use locality::{verify_kernel_locality, verify_kernel_locality_with, LocalityReport};
pub use ordering::{build_ordering, mixing_groups, position_qubits, Ordering, OrderingKind};

use crate::error::{Error, Result};
use crate::qsim::{AngleSource, Axis, GateOp, GateSequence, StateVector, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EncodingKind {
    AngleX,
    AngleY,
    AngleZ,
    Amplitude,
    Iqp,
    QaoaX,
    QaoaY,
    QaoaZ,
    Ring,
    Waterfall,
}

impl EncodingKind {
    pub const ALL: [EncodingKind; 10] = [
        EncodingKind::AngleX,
        EncodingKind::AngleY,
        EncodingKind::AngleZ,
        EncodingKind::Amplitude,
        EncodingKind::Iqp,
        EncodingKind::QaoaX,
        EncodingKind::QaoaY,
        EncodingKind::QaoaZ,
        EncodingKind::Ring,
        EncodingKind::Waterfall,
    ];

    pub fn is_amplitude(self) -> bool {
        self == EncodingKind::Amplitude
    }

    /// Local-field axis of the QAOA variants.
    pub fn qaoa_axis(self) -> Option<Axis> {
        match self {
            EncodingKind::QaoaX => Some(Axis::X),
            EncodingKind::QaoaY => Some(Axis::Y),
            EncodingKind::QaoaZ => Some(Axis::Z),
            _ => None,
        }
    }

    /// Number of features consumed by an `n`-qubit circuit.
    pub fn features_per_circuit(self, n_qubits: usize) -> usize {
        if self.is_amplitude() {
            1 << n_qubits
        } else {
            n_qubits
        }
    }
}

impl fmt::Display for EncodingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EncodingKind::AngleX => "angle_x",
            EncodingKind::AngleY => "angle_y",
            EncodingKind::AngleZ => "angle_z",
            EncodingKind::Amplitude => "amplitude",
            EncodingKind::Iqp => "iqp",
            EncodingKind::QaoaX => "qaoa_x",
            EncodingKind::QaoaY => "qaoa_y",
            EncodingKind::QaoaZ => "qaoa_z",
            EncodingKind::Ring => "ring",
            EncodingKind::Waterfall => "waterfall",
        })
    }
}

impl FromStr for EncodingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        EncodingKind::ALL
            .into_iter()
            .find(|k| k.to_string() == key)
            .ok_or_else(|| Error::config(format!("unknown encoding {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EncodingSpec {
    pub kind: EncodingKind,
    /// Repetitions for IQP, QAOA, ring and waterfall.
    pub layers: usize,
    /// Amplitude only.
    pub ordering: OrderingKind,
    /// Required iff `ordering == Random`.
    pub ordering_seed: Option<u64>,
    /// Trainable QAOA angles (see [`qaoa_param_count`]).
    pub qaoa_params: Vec<f64>,
}

impl EncodingSpec {
    pub fn new(kind: EncodingKind) -> Self {
        EncodingSpec {
            kind,
            layers: 1,
            ordering: OrderingKind::Flatten,
            ordering_seed: None,
            qaoa_params: Vec::new(),
        }
    }

    pub fn with_layers(mut self, layers: usize) -> Self {
        self.layers = layers;
        self
    }

    pub fn with_ordering(mut self, ordering: OrderingKind, seed: Option<u64>) -> Self {
        self.ordering = ordering;
        self.ordering_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 {
            return Err(Error::config("encoding layers must be at least 1"));
        }
        if (self.ordering == OrderingKind::Random) != self.ordering_seed.is_some() {
            return Err(Error::config(
                "ordering_seed must be given exactly when ordering = random",
            ));
        }
        Ok(())
    }

    pub fn trainable_count(&self, n_qubits: usize) -> usize {
        qaoa_param_count(self.kind, n_qubits, self.layers)
    }
}

/// Nearest-neighbour ring pairs `(i, i+1 mod N)`; empty for a single qubit.
fn ring_pairs(n: usize) -> Vec<(usize, usize)> {
    if n < 2 {
        return Vec::new();
    }
    (0..n).map(|i| (i, (i + 1) % n)).collect()
}

/// Trainable angles of a QAOA encoding: per layer one `R_ZZ` per ring edge
/// plus one local-field rotation per qubit.
pub fn qaoa_param_count(kind: EncodingKind, n_qubits: usize, layers: usize) -> usize {
    if kind.qaoa_axis().is_some() {
        layers * (ring_pairs(n_qubits).len() + n_qubits)
    } else {
        0
    }
}

/// Builds the encoding circuit with QAOA angles taken from `spec.qaoa_params`
/// and bound to parameter slots starting at 0.
pub fn encode(spec: &EncodingSpec, features: &[f64], n_qubits: usize) -> Result<GateSequence> {
    let mut seq = GateSequence::new(n_qubits);
    encode_into(&mut seq, spec, features, &spec.qaoa_params, 0)?;
    Ok(seq)
}

/// Appends the encoding gates for `features` to `seq`. QAOA angles are read
/// from `qaoa` and bound to slots `param_offset..`.
pub fn encode_into(
    seq: &mut GateSequence,
    spec: &EncodingSpec,
    features: &[f64],
    qaoa: &[f64],
    param_offset: usize,
) -> Result<()> {
    spec.validate()?;
    let n = seq.n_qubits();
    if spec.kind.is_amplitude() {
        return Err(Error::config(
            "amplitude encoding prepares a state; use amplitude_prepare",
        ));
    }
    if features.len() != n {
        return Err(Error::shape(format!(
            "{} encoding on {n} qubits needs {n} features, got {}",
            spec.kind,
            features.len()
        )));
    }
    let feature_rot = |axis: Axis, q: usize| {
        GateOp::rot(axis, q, features[q]).bind(AngleSource::Feature(q), features[q])
    };
    match spec.kind {
        EncodingKind::AngleX | EncodingKind::AngleY | EncodingKind::AngleZ => {
            let axis = match spec.kind {
                EncodingKind::AngleX => Axis::X,
                EncodingKind::AngleY => Axis::Y,
                _ => Axis::Z,
            };
            for q in 0..n {
                seq.push(feature_rot(axis, q))?;
            }
        }
        EncodingKind::Iqp => {
            for _ in 0..spec.layers {
                for q in 0..n {
                    seq.push(GateOp::h(q))?;
                }
                for q in 0..n {
                    seq.push(feature_rot(Axis::Z, q))?;
                }
                for j in 0..n {
                    for k in j + 1..n {
                        let angle = features[j] * features[k];
                        seq.push(
                            GateOp::rzz(j, k, angle).bind(AngleSource::FeatureProduct(j, k), angle),
                        )?;
                    }
                }
            }
        }
        EncodingKind::QaoaX | EncodingKind::QaoaY | EncodingKind::QaoaZ => {
            let axis = spec.kind.qaoa_axis().expect("qaoa kind");
            let needed = qaoa_param_count(spec.kind, n, spec.layers);
            if qaoa.len() != needed {
                return Err(Error::shape(format!(
                    "QAOA encoding needs {needed} trainable angles, got {}",
                    qaoa.len()
                )));
            }
            let pairs = ring_pairs(n);
            let mut slot = 0;
            let mut next = |seq: &mut GateSequence, gate: GateOp| -> Result<()> {
                let theta = qaoa[slot];
                let g = gate.with_angle(theta)?;
                seq.push(g.bind(AngleSource::Param(param_offset + slot), theta))?;
                slot += 1;
                Ok(())
            };
            for _ in 0..spec.layers {
                for q in 0..n {
                    seq.push(feature_rot(Axis::X, q))?;
                }
                for &(a, b) in &pairs {
                    next(seq, GateOp::rzz(a, b, 0.0))?;
                }
                for q in 0..n {
                    next(seq, GateOp::rot(axis, q, 0.0))?;
                }
            }
            // closing feature layer so the last local field does not act last
            for q in 0..n {
                seq.push(feature_rot(Axis::X, q))?;
            }
        }
        EncodingKind::Ring => {
            for _ in 0..spec.layers {
                for q in 0..n {
                    seq.push(feature_rot(Axis::Y, q))?;
                }
                for (a, b) in ring_pairs(n) {
                    seq.push(GateOp::cnot(a, b))?;
                }
            }
        }
        EncodingKind::Waterfall => {
            for _ in 0..spec.layers {
                for q in 0..n {
                    seq.push(feature_rot(Axis::Y, q))?;
                }
                for i in 0..n {
                    for j in i + 1..n {
                        seq.push(GateOp::cnot(i, j))?;
                    }
                }
            }
        }
        EncodingKind::Amplitude => unreachable!(),
    }
    Ok(())
}

/// Loads `features` into amplitudes: `amps[perm[i]] = features[i] / ‖features‖`,
/// remaining amplitudes zero.
pub fn amplitude_prepare(
    features: &[f64],
    ordering: &Ordering,
    n_qubits: usize,
) -> Result<StateVector> {
    let dim = 1usize
        .checked_shl(n_qubits as u32)
        .ok_or_else(|| Error::Capacity(format!("{n_qubits} qubits")))?;
    if features.len() > dim {
        return Err(Error::shape(format!(
            "{} features do not fit in {n_qubits} qubits",
            features.len()
        )));
    }
    if ordering.len() != features.len() {
        return Err(Error::shape(format!(
            "ordering of length {} for {} features",
            ordering.len(),
            features.len()
        )));
    }
    let norm = features.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::DegenerateInput(
            "amplitude encoding of an all-zero or non-finite feature vector".into(),
        ));
    }
    let mut state = StateVector::zero(n_qubits)?;
    let amps = state.amplitudes_mut();
    amps[0] = C64::new(0.0, 0.0);
    for (&p, &x) in ordering.permutation().iter().zip(features) {
        amps[p] = C64::new(x / norm, 0.0);
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn run(seq: &GateSequence) -> StateVector {
        let mut s = StateVector::zero(seq.n_qubits()).unwrap();
        s.apply_sequence(seq).unwrap();
        s
    }

    #[test]
    fn angle_x_pi_flips() {
        let seq = encode(&EncodingSpec::new(EncodingKind::AngleX), &[PI], 1).unwrap();
        let p = run(&seq).basis_probabilities();
        assert!(p[0].abs() < 1e-15 && (p[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn angle_z_only_adds_phase() {
        let spec = EncodingSpec::new(EncodingKind::AngleZ);
        let a = run(&encode(&spec, &[0.3, 2.0, -1.0], 3).unwrap());
        let b = run(&encode(&spec, &[0.0, 0.0, 0.0], 3).unwrap());
        for (x, y) in a.basis_probabilities().iter().zip(b.basis_probabilities()) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn entangler_counts() {
        let f = [0.1, 0.2, 0.3, 0.4];
        let ring = encode(&EncodingSpec::new(EncodingKind::Ring).with_layers(2), &f, 4).unwrap();
        assert_eq!(ring.two_qubit_count(), 8);
        let wf = encode(&EncodingSpec::new(EncodingKind::Waterfall), &f, 4).unwrap();
        assert_eq!(wf.two_qubit_count(), 6);
    }

    #[test]
    fn feature_length_mismatch() {
        let r = encode(&EncodingSpec::new(EncodingKind::AngleY), &[0.1], 2);
        assert!(matches!(r, Err(Error::Shape(_))));
    }

    #[test]
    fn qaoa_needs_its_angles() {
        let mut spec = EncodingSpec::new(EncodingKind::QaoaZ);
        assert!(encode(&spec, &[0.1, 0.2, 0.3], 3).is_err());
        spec.qaoa_params = vec![0.5; qaoa_param_count(EncodingKind::QaoaZ, 3, 1)];
        let seq = encode(&spec, &[0.1, 0.2, 0.3], 3).unwrap();
        assert_eq!(seq.param_slot_count(), 6);
        assert_eq!(seq.two_qubit_count(), 3);
    }

    #[test]
    fn random_ordering_needs_seed() {
        let spec = EncodingSpec::new(EncodingKind::Amplitude).with_ordering(OrderingKind::Random, None);
        assert!(spec.validate().is_err());
        let spec = EncodingSpec::new(EncodingKind::Amplitude).with_ordering(OrderingKind::Flatten, Some(1));
        assert!(spec.validate().is_err());
    }

    #[test]
    fn amplitude_examples() {
        let s = amplitude_prepare(&[1.0, 0.0, 0.0, 0.0], &Ordering::identity(4), 2).unwrap();
        assert_eq!(s.basis_probabilities(), vec![1.0, 0.0, 0.0, 0.0]);
        let s = amplitude_prepare(&[3.0, 4.0], &Ordering::identity(2), 1).unwrap();
        assert!((s.amplitudes()[0].re - 0.6).abs() < 1e-15);
        assert!((s.amplitudes()[1].re - 0.8).abs() < 1e-15);
        assert!(matches!(
            amplitude_prepare(&[0.0, 0.0], &Ordering::identity(2), 1),
            Err(Error::DegenerateInput(_))
        ));
        assert!(matches!(
            amplitude_prepare(&[1.0; 5], &Ordering::identity(5), 2),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn amplitude_image_is_zero_padded() {
        let features: Vec<f64> = (0..768).map(|i| ((i * 37) % 101) as f64 / 100.0 + 0.01).collect();
        let o = build_ordering(OrderingKind::Flatten, (16, 16, 3), None).unwrap();
        let s = amplitude_prepare(&features, &o, 10).unwrap();
        assert_eq!(s.amplitudes().len(), 1024);
        assert!(s.amplitudes()[768..].iter().all(|a| a.norm() == 0.0));
        assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
    }
}
