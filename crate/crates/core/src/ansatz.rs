//! Trainable circuit families and their parameter accounting.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::qsim::{AngleSource, Axis, GateOp, GateSequence};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AnsatzKind {
    NoEntanglement,
    FullEntanglement,
    Ring,
    NQ,
    Qcnn,
    SimplifiedTwoDesign,
    /// Two general two-qubit filters, pooling, then a SimplifiedTwoDesign.
    TwoKernel,
}

impl AnsatzKind {
    pub const ALL: [AnsatzKind; 7] = [
        AnsatzKind::NoEntanglement,
        AnsatzKind::FullEntanglement,
        AnsatzKind::Ring,
        AnsatzKind::NQ,
        AnsatzKind::Qcnn,
        AnsatzKind::SimplifiedTwoDesign,
        AnsatzKind::TwoKernel,
    ];
}

impl fmt::Display for AnsatzKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AnsatzKind::NoEntanglement => "no_entanglement",
            AnsatzKind::FullEntanglement => "full_entanglement",
            AnsatzKind::Ring => "ring",
            AnsatzKind::NQ => "nq",
            AnsatzKind::Qcnn => "qcnn",
            AnsatzKind::SimplifiedTwoDesign => "simplified_two_design",
            AnsatzKind::TwoKernel => "two_kernel",
        })
    }
}

impl FromStr for AnsatzKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        AnsatzKind::ALL
            .into_iter()
            .find(|k| k.to_string() == key)
            .ok_or_else(|| Error::config(format!("unknown ansatz {s:?}")))
    }
}

/// Depth of the SimplifiedTwoDesign block closing a QCNN or two-kernel model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FcDepth {
    Shallow,
    Deep,
}

impl FcDepth {
    pub fn blocks(self) -> usize {
        match self {
            FcDepth::Shallow => 1,
            FcDepth::Deep => 3,
        }
    }
}

impl fmt::Display for FcDepth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FcDepth::Shallow => "shallow",
            FcDepth::Deep => "deep",
        })
    }
}

impl FromStr for FcDepth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "shallow" => Ok(FcDepth::Shallow),
            "deep" => Ok(FcDepth::Deep),
            other => Err(Error::config(format!("unknown fc depth {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnsatzSpec {
    pub kind: AnsatzKind,
    /// Layer count; for QCNN the number of convolution-pooling layers.
    pub layers: usize,
    /// Gate-placement seed, required iff `kind == NoEntanglement`.
    pub seed: Option<u64>,
    pub fc_depth: FcDepth,
}

impl AnsatzSpec {
    pub fn new(kind: AnsatzKind, layers: usize) -> Self {
        AnsatzSpec {
            kind,
            layers,
            seed: None,
            fc_depth: FcDepth::Shallow,
        }
    }

    pub fn no_entanglement(layers: usize, seed: u64) -> Self {
        AnsatzSpec {
            seed: Some(seed),
            ..Self::new(AnsatzKind::NoEntanglement, layers)
        }
    }

    pub fn with_fc_depth(mut self, depth: FcDepth) -> Self {
        self.fc_depth = depth;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 && self.kind != AnsatzKind::TwoKernel {
            return Err(Error::config("ansatz layers must be at least 1"));
        }
        if (self.kind == AnsatzKind::NoEntanglement) != self.seed.is_some() {
            return Err(Error::config(
                "ansatz seed must be given exactly for the no-entanglement ansatz",
            ));
        }
        Ok(())
    }
}

/// Trainable values with named index ranges.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore {
    pub values: Vec<f64>,
    layout: Vec<(String, Range<usize>)>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_values(values: Vec<f64>) -> Self {
        let layout = vec![("all".to_string(), 0..values.len())];
        ParamStore { values, layout }
    }

    pub fn push_block(&mut self, name: impl Into<String>, values: &[f64]) -> Range<usize> {
        let start = self.values.len();
        self.values.extend_from_slice(values);
        let range = start..self.values.len();
        self.layout.push((name.into(), range.clone()));
        range
    }

    pub fn block(&self, name: &str) -> Option<&[f64]> {
        self.layout
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, r)| &self.values[r.clone()])
    }

    pub fn layout(&self) -> &[(String, Range<usize>)] {
        &self.layout
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Appends parameterized gates, drawing angles from a slice in order.
pub(crate) struct Emitter<'a> {
    seq: &'a mut GateSequence,
    values: &'a [f64],
    base: usize,
    cursor: usize,
}

impl<'a> Emitter<'a> {
    pub(crate) fn new(seq: &'a mut GateSequence, values: &'a [f64], base: usize) -> Self {
        Emitter {
            seq,
            values,
            base,
            cursor: 0,
        }
    }

    fn take(&mut self) -> Result<(usize, f64)> {
        let v = *self.values.get(self.cursor).ok_or_else(|| {
            Error::shape(format!(
                "ansatz needs more than the {} parameters supplied",
                self.values.len()
            ))
        })?;
        let slot = self.base + self.cursor;
        self.cursor += 1;
        Ok((slot, v))
    }

    fn fixed(&mut self, gate: GateOp) -> Result<()> {
        self.seq.push(gate)
    }

    fn rot(&mut self, axis: Axis, q: usize) -> Result<()> {
        let (slot, theta) = self.take()?;
        self.seq
            .push(GateOp::rot(axis, q, theta).bind(AngleSource::Param(slot), theta))
    }

    fn crot(&mut self, axis: Axis, control: usize, target: usize) -> Result<()> {
        let (slot, theta) = self.take()?;
        self.seq.push(
            GateOp::crot(axis, control, target, theta).bind(AngleSource::Param(slot), theta),
        )
    }

    /// `Rot(α, β, γ) = R_Z(α) R_Y(β) R_Z(γ)`; parameters stored as `[α, β, γ]`.
    fn general_rot(&mut self, q: usize) -> Result<()> {
        let (sa, a) = self.take()?;
        let (sb, b) = self.take()?;
        let (sc, c) = self.take()?;
        self.seq
            .push(GateOp::rot(Axis::Z, q, c).bind(AngleSource::Param(sc), c))?;
        self.seq
            .push(GateOp::rot(Axis::Y, q, b).bind(AngleSource::Param(sb), b))?;
        self.seq
            .push(GateOp::rot(Axis::Z, q, a).bind(AngleSource::Param(sa), a))
    }

    pub(crate) fn finish(self) -> Result<usize> {
        if self.cursor != self.values.len() {
            return Err(Error::shape(format!(
                "ansatz consumed {} parameters but {} were supplied",
                self.cursor,
                self.values.len()
            )));
        }
        Ok(self.cursor)
    }
}

fn no_entanglement_mask(seed: u64, n: usize, layers: usize) -> Vec<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n * layers).map(|_| rng.random_bool(0.5)).collect()
}

fn two_design(e: &mut Emitter<'_>, wires: &[usize], blocks: usize) -> Result<()> {
    for &w in wires {
        e.rot(Axis::Y, w)?;
    }
    for _ in 0..blocks {
        for start in [0, 1] {
            for pair in wires[start..].chunks_exact(2) {
                e.fixed(GateOp::cz(pair[0], pair[1]))?;
                e.rot(Axis::Y, pair[0])?;
                e.rot(Axis::Y, pair[1])?;
            }
        }
    }
    Ok(())
}

fn two_design_count(width: usize, blocks: usize) -> usize {
    width + 2 * blocks * width.saturating_sub(1)
}

/// Rot⊗Rot, CNOT, Rot⊗Rot.
fn conv_block(e: &mut Emitter<'_>, a: usize, b: usize) -> Result<()> {
    e.general_rot(a)?;
    e.general_rot(b)?;
    e.fixed(GateOp::cnot(a, b))?;
    e.general_rot(a)?;
    e.general_rot(b)
}

const CONV_PARAMS: usize = 12;

/// Controlled `R_Z R_Y R_Z` from `control` onto `target`.
fn pool(e: &mut Emitter<'_>, control: usize, target: usize) -> Result<()> {
    e.crot(Axis::Z, control, target)?;
    e.crot(Axis::Y, control, target)?;
    e.crot(Axis::Z, control, target)
}

const POOL_PARAMS: usize = 3;

/// Three-CNOT general two-qubit unitary.
fn general_two_qubit(e: &mut Emitter<'_>, a: usize, b: usize) -> Result<()> {
    e.general_rot(a)?;
    e.general_rot(b)?;
    e.fixed(GateOp::cnot(b, a))?;
    e.rot(Axis::Z, a)?;
    e.rot(Axis::Y, b)?;
    e.fixed(GateOp::cnot(a, b))?;
    e.rot(Axis::Y, b)?;
    e.fixed(GateOp::cnot(b, a))?;
    e.general_rot(a)?;
    e.general_rot(b)
}

const GENERAL_TWO_QUBIT_PARAMS: usize = 15;

fn conv_pairs(active: &[usize]) -> impl Iterator<Item = (usize, usize)> + '_ {
    let even = active.chunks_exact(2).map(|p| (p[0], p[1]));
    let odd = active[1..].chunks_exact(2).map(|p| (p[0], p[1]));
    even.chain(odd)
}

/// Active qubits after pooling: even positions survive, plus an unpaired
/// last qubit.
fn pooled(active: &[usize]) -> Vec<usize> {
    active.iter().copied().step_by(2).collect()
}

/// Active-qubit counts before the first layer and after each pooling.
pub fn qcnn_trace(n_qubits: usize, layers: usize) -> Result<Vec<usize>> {
    if n_qubits < 4 {
        return Err(Error::shape(format!("QCNN needs at least 4 qubits, got {n_qubits}")));
    }
    let mut trace = vec![n_qubits];
    let mut width = n_qubits;
    for _ in 0..layers {
        width = width.div_ceil(2);
        if width < 2 {
            return Err(Error::shape(format!(
                "{layers} convolution-pooling layers leave fewer than 2 active qubits out of {n_qubits}"
            )));
        }
        trace.push(width);
    }
    Ok(trace)
}

/// Built QCNN circuit and the number of active qubits per stage.
#[derive(Clone, Debug)]
pub struct QcnnCircuit {
    pub gates: GateSequence,
    pub active_trace: Vec<usize>,
}

pub fn build_qcnn(
    n_qubits: usize,
    n_conv_pool_layers: usize,
    fc_depth: FcDepth,
    params: &ParamStore,
) -> Result<QcnnCircuit> {
    let mut gates = GateSequence::new(n_qubits);
    let active_trace = append_qcnn(&mut gates, n_conv_pool_layers, fc_depth, &params.values, 0)?;
    Ok(QcnnCircuit {
        gates,
        active_trace,
    })
}

fn append_qcnn(
    seq: &mut GateSequence,
    layers: usize,
    fc_depth: FcDepth,
    values: &[f64],
    base: usize,
) -> Result<Vec<usize>> {
    let n = seq.n_qubits();
    let trace = qcnn_trace(n, layers)?;
    let mut e = Emitter::new(seq, values, base);
    let mut active: Vec<usize> = (0..n).collect();
    for _ in 0..layers {
        for (a, b) in conv_pairs(&active).collect::<Vec<_>>() {
            conv_block(&mut e, a, b)?;
        }
        for pair in active.chunks_exact(2) {
            pool(&mut e, pair[1], pair[0])?;
        }
        active = pooled(&active);
    }
    let all: Vec<usize> = (0..n).collect();
    two_design(&mut e, &all, fc_depth.blocks())?;
    e.finish()?;
    Ok(trace)
}

fn qcnn_param_count(n: usize, layers: usize, fc_depth: FcDepth) -> Result<usize> {
    let trace = qcnn_trace(n, layers)?;
    let per_layer: usize = trace[..layers]
        .iter()
        .map(|&w| (w - 1) * CONV_PARAMS + (w / 2) * POOL_PARAMS)
        .sum();
    Ok(per_layer + two_design_count(n, fc_depth.blocks()))
}

/// Qubits left for the final block of the two-kernel model.
fn two_kernel_remaining(n: usize) -> Vec<usize> {
    (0..n).filter(|&q| q != 1 && q != 3).collect()
}

fn append_two_kernel(
    seq: &mut GateSequence,
    fc_depth: FcDepth,
    values: &[f64],
    base: usize,
) -> Result<()> {
    let n = seq.n_qubits();
    if n < 4 {
        return Err(Error::shape(format!("two-kernel ansatz needs 4 qubits, got {n}")));
    }
    let mut e = Emitter::new(seq, values, base);
    general_two_qubit(&mut e, 0, 1)?;
    general_two_qubit(&mut e, 2, 3)?;
    pool(&mut e, 1, 0)?;
    pool(&mut e, 3, 2)?;
    two_design(&mut e, &two_kernel_remaining(n), fc_depth.blocks())?;
    e.finish()?;
    Ok(())
}

/// Qubits carrying the ansatz output, in readout order.
pub fn readout_qubits(spec: &AnsatzSpec, n_qubits: usize) -> Vec<usize> {
    match spec.kind {
        AnsatzKind::TwoKernel => two_kernel_remaining(n_qubits),
        _ => (0..n_qubits).collect(),
    }
}

pub fn build_ansatz(spec: &AnsatzSpec, n_qubits: usize, params: &ParamStore) -> Result<GateSequence> {
    let mut seq = GateSequence::new(n_qubits);
    append_ansatz(&mut seq, spec, &params.values, 0)?;
    Ok(seq)
}

/// Appends the ansatz with its parameters bound to slots `base..`.
pub fn append_ansatz(
    seq: &mut GateSequence,
    spec: &AnsatzSpec,
    values: &[f64],
    base: usize,
) -> Result<()> {
    spec.validate()?;
    let n = seq.n_qubits();
    let expected = parameter_count(spec, n)?;
    if values.len() != expected {
        return Err(Error::shape(format!(
            "{} ansatz on {n} qubits takes {expected} parameters, got {}",
            spec.kind,
            values.len()
        )));
    }
    match spec.kind {
        AnsatzKind::Qcnn => {
            append_qcnn(seq, spec.layers, spec.fc_depth, values, base)?;
            return Ok(());
        }
        AnsatzKind::TwoKernel => return append_two_kernel(seq, spec.fc_depth, values, base),
        _ => {}
    }
    let mut e = Emitter::new(seq, values, base);
    let l = spec.layers;
    match spec.kind {
        AnsatzKind::NoEntanglement => {
            let mask = no_entanglement_mask(spec.seed.expect("validated"), n, l);
            for (i, &placed) in mask.iter().enumerate() {
                if placed {
                    e.rot(Axis::Z, i % n)?;
                }
            }
        }
        AnsatzKind::FullEntanglement => {
            for layer in 0..l {
                for q in 0..n {
                    e.general_rot(q)?;
                }
                if n > 1 {
                    let range = layer % (n - 1) + 1;
                    for q in 0..n {
                        e.fixed(GateOp::cnot(q, (q + range) % n))?;
                    }
                }
            }
        }
        AnsatzKind::Ring => {
            for _ in 0..l {
                for q in 0..n {
                    e.rot(Axis::Y, q)?;
                    e.rot(Axis::Z, q)?;
                }
                // CZ is symmetric, so a 2-qubit ring has a single edge
                let edges = if n == 2 { 1 } else if n > 2 { n } else { 0 };
                for q in 0..edges {
                    e.fixed(GateOp::cz(q, (q + 1) % n))?;
                }
            }
        }
        AnsatzKind::NQ => {
            for _ in 0..l {
                for q in 0..n {
                    e.rot(Axis::Y, q)?;
                    e.rot(Axis::Z, q)?;
                }
                for q in 0..n.saturating_sub(1) {
                    e.fixed(GateOp::cnot(q, q + 1))?;
                }
            }
        }
        AnsatzKind::SimplifiedTwoDesign => {
            let wires: Vec<usize> = (0..n).collect();
            two_design(&mut e, &wires, l)?;
        }
        AnsatzKind::Qcnn | AnsatzKind::TwoKernel => unreachable!(),
    }
    e.finish()?;
    Ok(())
}

/// Exact number of trainable parameters of an ansatz, computed from the
/// construction rules rather than by building it.
pub fn parameter_count(spec: &AnsatzSpec, n_qubits: usize) -> Result<usize> {
    spec.validate()?;
    let (n, l) = (n_qubits, spec.layers);
    Ok(match spec.kind {
        AnsatzKind::NoEntanglement => no_entanglement_mask(spec.seed.expect("validated"), n, l)
            .into_iter()
            .filter(|&b| b)
            .count(),
        AnsatzKind::FullEntanglement => 3 * l * n,
        AnsatzKind::Ring | AnsatzKind::NQ => 2 * l * n,
        AnsatzKind::SimplifiedTwoDesign => two_design_count(n, l),
        AnsatzKind::Qcnn => qcnn_param_count(n, l, spec.fc_depth)?,
        AnsatzKind::TwoKernel => {
            if n < 4 {
                return Err(Error::shape(format!("two-kernel ansatz needs 4 qubits, got {n}")));
            }
            2 * GENERAL_TWO_QUBIT_PARAMS
                + 2 * POOL_PARAMS
                + two_design_count(n - 2, spec.fc_depth.blocks())
        }
    })
}
