//! Hybrid, pure-quantum and classical image classifiers.

mod checkpoint;
mod quantum;

pub use checkpoint::{config_hash, load_checkpoint, save_checkpoint};
pub use quantum::{QuantumLinear, Quanvolution, AMPLITUDE_OFFSET};

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::ansatz::{readout_qubits, AnsatzKind, AnsatzSpec};
use crate::encodings::{build_ordering, EncodingKind, EncodingSpec};
use crate::error::{Error, Result};
use crate::grad::{cross_entropy, grad_adjoint, histogram_nll, circuit_forward, CircuitSpec};
use crate::measure::{class_scores, draw_pauli_strings, MeasurementKind, MeasurementSpec};
use crate::nn::{Cache, LayerSpec, Sequential, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Arch {
    HqnnParallel,
    HqnnQuanv,
    Qcnn,
    SeqnnTwoKernel,
    SeqnnFc,
    ClassicalParallel,
    ClassicalQuanv,
}

impl Arch {
    pub const ALL: [Arch; 7] = [
        Arch::HqnnParallel,
        Arch::HqnnQuanv,
        Arch::Qcnn,
        Arch::SeqnnTwoKernel,
        Arch::SeqnnFc,
        Arch::ClassicalParallel,
        Arch::ClassicalQuanv,
    ];

    pub fn is_pure_quantum(self) -> bool {
        matches!(self, Arch::Qcnn | Arch::SeqnnTwoKernel | Arch::SeqnnFc)
    }

    pub fn is_classical(self) -> bool {
        matches!(self, Arch::ClassicalParallel | Arch::ClassicalQuanv)
    }
}

impl fmt::Display for Arch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Arch::HqnnParallel => "hqnn_parallel",
            Arch::HqnnQuanv => "hqnn_quanv",
            Arch::Qcnn => "qcnn",
            Arch::SeqnnTwoKernel => "seqnn_two_kernel",
            Arch::SeqnnFc => "seqnn_fc",
            Arch::ClassicalParallel => "classical_parallel",
            Arch::ClassicalQuanv => "classical_quanv",
        })
    }
}

impl FromStr for Arch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        Arch::ALL
            .into_iter()
            .find(|a| a.to_string() == key)
            .ok_or_else(|| Error::config(format!("unknown architecture {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub arch: Arch,
    pub encoding: EncodingSpec,
    pub ansatz: AnsatzSpec,
    /// Readout protocol. Empty `measured_qubits` selects a default set.
    pub measurement: MeasurementSpec,
    /// `(H, W, C)`.
    pub image_shape: (usize, usize, usize),
    pub qubits_per_circuit: usize,
    pub qks: usize,
    pub class_count: usize,
    pub seed: u64,
    /// Feature-extractor `(channels, stride)` per 3×3 convolution; derived
    /// from the image size when absent.
    pub extractor: Option<Vec<(usize, usize)>>,
    /// Hidden widths of the dense head; derived from the architecture when
    /// absent.
    pub head_hidden: Option<Vec<usize>>,
}

impl ModelConfig {
    pub fn new(arch: Arch, image_shape: (usize, usize, usize), class_count: usize) -> Self {
        ModelConfig {
            arch,
            encoding: EncodingSpec::new(EncodingKind::Amplitude),
            ansatz: AnsatzSpec::no_entanglement(1, 0),
            measurement: MeasurementSpec::pauli(crate::qsim::Axis::Z, Vec::new(), class_count),
            image_shape,
            qubits_per_circuit: 8,
            qks: 2,
            class_count,
            seed: 0,
            extractor: None,
            head_hidden: None,
        }
    }

    /// `(C, H, W)` tensor shape of an input image.
    pub fn input_shape(&self) -> Vec<usize> {
        let (h, w, c) = self.image_shape;
        vec![c, h, w]
    }

    fn extractor_stages(&self) -> Result<Vec<(usize, usize)>> {
        if let Some(e) = &self.extractor {
            return Ok(e.clone());
        }
        match (self.image_shape.0, self.image_shape.1) {
            (16, 16) => Ok(vec![(12, 1), (12, 2)]),
            (32, 32) => Ok(vec![(12, 2), (24, 2), (48, 2), (48, 1)]),
            (h, w) => Err(Error::config(format!(
                "no default feature extractor for {h}×{w} images"
            ))),
        }
    }

    /// Qubits of the single register used by the pure-quantum models.
    pub fn register_qubits(&self) -> usize {
        let (h, w, c) = self.image_shape;
        let len = (h * w * c).max(2);
        len.next_power_of_two().trailing_zeros() as usize
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Stage {
    Net(Sequential),
    Linear(QuantumLinear),
    Quanv(Quanvolution),
    /// Whole-image circuit producing class scores directly.
    Circuit(CircuitSpec),
}

impl Stage {
    fn param_count(&self) -> Result<usize> {
        match self {
            Stage::Net(s) => Ok(s.weight_count()),
            Stage::Linear(q) => q.param_count(),
            Stage::Quanv(q) => q.circuit.param_count(),
            Stage::Circuit(c) => c.param_count(),
        }
    }
}

/// How class scores are turned into a loss.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LossKind {
    CrossEntropy,
    HistogramNll,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    stages: Vec<Stage>,
    offsets: Vec<usize>,
    pub params: Vec<f64>,
}

enum StageCache {
    Net(Vec<Cache>),
    Input(Tensor),
}

fn conv_stack(in_channels: usize, stages: &[(usize, usize)]) -> Vec<LayerSpec> {
    let mut layers = Vec::new();
    let mut c = in_channels;
    for &(out, stride) in stages {
        layers.push(LayerSpec::conv(c, out, 3, stride, 1));
        layers.push(LayerSpec::ReLU);
        c = out;
    }
    layers.push(LayerSpec::Flatten);
    layers
}

fn dense_stack(inputs: usize, hidden: &[usize], outputs: usize, act: LayerSpec) -> Vec<LayerSpec> {
    let mut layers = Vec::new();
    let mut prev = inputs;
    for &h in hidden {
        layers.push(LayerSpec::dense(prev, h));
        layers.push(act.clone());
        prev = h;
    }
    layers.push(LayerSpec::dense(prev, outputs));
    layers
}

/// Default readout for a register: single-qubit bases read the first `K`
/// readout qubits, histograms the first `⌈log₂K⌉`.
fn resolve_measurement(config: &ModelConfig, n: usize, available: &[usize]) -> Result<MeasurementSpec> {
    let k = config.class_count;
    let mut m = config.measurement.clone();
    m.class_count = k;
    match m.kind {
        MeasurementKind::Paulis => {
            if m.pauli_strings.is_empty() {
                let seed = m.pauli_seed.unwrap_or(config.seed);
                m.pauli_strings = draw_pauli_strings(k, n, seed)?;
                m.pauli_seed = Some(seed);
            }
        }
        MeasurementKind::Histogram => {
            if m.measured_qubits.is_empty() {
                let bits = k.next_power_of_two().trailing_zeros().max(1) as usize;
                if bits > available.len() {
                    return Err(Error::config(format!(
                        "histogram over {} qubits cannot encode {k} classes",
                        available.len()
                    )));
                }
                m.measured_qubits = available[..bits].to_vec();
            }
        }
        _ => {
            if m.measured_qubits.is_empty() {
                if k > available.len() {
                    return Err(Error::config(format!(
                        "{k} classes need {k} readout qubits, only {} available",
                        available.len()
                    )));
                }
                m.measured_qubits = available[..k].to_vec();
            }
        }
    }
    m.validate(n).map_err(|e| Error::config(e.to_string()))?;
    Ok(m)
}

fn per_qubit_measurement(config: &ModelConfig, q: usize) -> Result<MeasurementSpec> {
    let axis = config.measurement.kind.axis().ok_or_else(|| {
        Error::config(format!(
            "{} measures every qubit once; {} readout is not supported",
            config.arch, config.measurement.kind
        ))
    })?;
    Ok(MeasurementSpec::pauli(axis, (0..q).collect(), q))
}

pub fn build_model(config: &ModelConfig) -> Result<Model> {
    let k = config.class_count;
    if k < 2 {
        return Err(Error::config("at least 2 classes are required"));
    }
    let (h, w, c) = config.image_shape;
    if h * w * c == 0 {
        return Err(Error::config("image shape has a zero dimension"));
    }
    config.encoding.validate()?;
    config.ansatz.validate()?;
    let input = config.input_shape();
    let mut stages = Vec::new();
    match config.arch {
        Arch::HqnnParallel | Arch::ClassicalParallel => {
            let extractor = Sequential::new(conv_stack(c, &config.extractor_stages()?));
            let features = extractor.output_shape(&input)?[0];
            stages.push(Stage::Net(extractor));
            if config.arch == Arch::HqnnParallel {
                let q = config.qubits_per_circuit;
                let circuit = CircuitSpec::new(
                    q,
                    config.encoding.clone(),
                    config.ansatz.clone(),
                    per_qubit_measurement(config, q)?,
                );
                let layer = QuantumLinear::new(circuit, features)
                    .map_err(|e| Error::config(e.to_string()))?;
                let width = layer.output_len();
                stages.push(Stage::Linear(layer));
                let hidden = config.head_hidden.clone().unwrap_or(vec![128]);
                stages.push(Stage::Net(Sequential::new(dense_stack(width, &hidden, k, LayerSpec::ReLU))));
            } else {
                let hidden = config.head_hidden.clone().unwrap_or(vec![256, 64]);
                stages.push(Stage::Net(Sequential::new(dense_stack(
                    features,
                    &hidden,
                    k,
                    LayerSpec::leaky_relu(),
                ))));
            }
        }
        Arch::HqnnQuanv | Arch::ClassicalQuanv => {
            if !(2..=3).contains(&config.qks) {
                return Err(Error::config(format!("qks must be 2 or 3, got {}", config.qks)));
            }
            let q = config.qks * config.qks;
            let front_shape;
            if config.arch == Arch::HqnnQuanv {
                if config.qubits_per_circuit != q {
                    return Err(Error::config(format!(
                        "quanvolution with qks={} uses {q} qubits, not {}",
                        config.qks, config.qubits_per_circuit
                    )));
                }
                let circuit = CircuitSpec::new(
                    q,
                    config.encoding.clone(),
                    config.ansatz.clone(),
                    per_qubit_measurement(config, q)?,
                )
                .with_repeats(2);
                let quanv = Quanvolution {
                    circuit,
                    qks: config.qks,
                };
                front_shape = quanv.output_shape(&input)?;
                stages.push(Stage::Quanv(quanv));
            } else {
                let conv = Sequential::new(vec![LayerSpec::conv(c, c * q, 3, 2, 1)]);
                front_shape = conv.output_shape(&input)?;
                stages.push(Stage::Net(conv));
            }
            let hidden = config.head_hidden.clone().unwrap_or(vec![64]);
            let mut tail = vec![
                LayerSpec::ReLU,
                LayerSpec::conv(front_shape[0], 16, 3, 1, 1),
                LayerSpec::ReLU,
                LayerSpec::conv(16, 32, 3, 2, 1),
                LayerSpec::ReLU,
                LayerSpec::GlobalAvgPool,
            ];
            tail.extend(dense_stack(32, &hidden, k, LayerSpec::ReLU));
            stages.push(Stage::Net(Sequential::new(tail)));
        }
        Arch::Qcnn | Arch::SeqnnTwoKernel | Arch::SeqnnFc => {
            if !config.encoding.kind.is_amplitude() {
                return Err(Error::config(format!(
                    "{} requires amplitude encoding",
                    config.arch
                )));
            }
            let expected = match config.arch {
                Arch::Qcnn => AnsatzKind::Qcnn,
                Arch::SeqnnTwoKernel => AnsatzKind::TwoKernel,
                _ => AnsatzKind::SimplifiedTwoDesign,
            };
            if config.ansatz.kind != expected {
                return Err(Error::config(format!(
                    "{} requires the {expected} ansatz, got {}",
                    config.arch, config.ansatz.kind
                )));
            }
            let n = config.register_qubits().max(4);
            let ordering = build_ordering(
                config.encoding.ordering,
                config.image_shape,
                config.encoding.ordering_seed,
            )?;
            let available = readout_qubits(&config.ansatz, n);
            let measurement = resolve_measurement(config, n, &available)?;
            let circuit = CircuitSpec::new(n, config.encoding.clone(), config.ansatz.clone(), measurement)
                .with_ordering(ordering);
            circuit.param_count().map_err(|e| Error::config(e.to_string()))?;
            stages.push(Stage::Circuit(circuit));
        }
    }
    let mut offsets = vec![0];
    for s in &stages {
        offsets.push(offsets.last().unwrap() + s.param_count()?);
    }
    let mut model = Model {
        config: config.clone(),
        stages,
        offsets,
        params: Vec::new(),
    };
    model.params = model.init_params(config.seed)?;
    Ok(model)
}

impl Model {
    pub fn param_count(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    /// Trainable parameters inside quantum circuits.
    pub fn quantum_param_count(&self) -> usize {
        self.stages
            .iter()
            .enumerate()
            .filter(|(_, s)| !matches!(s, Stage::Net(_)))
            .map(|(i, _)| self.offsets[i + 1] - self.offsets[i])
            .sum()
    }

    pub fn loss_kind(&self) -> LossKind {
        if self.config.arch.is_pure_quantum() && self.config.measurement.kind == MeasurementKind::Histogram {
            LossKind::HistogramNll
        } else {
            LossKind::CrossEntropy
        }
    }

    /// The quantum linear layer of a parallel hybrid, if any.
    pub fn quantum_linear(&self) -> Option<&QuantumLinear> {
        self.stages.iter().find_map(|s| match s {
            Stage::Linear(q) => Some(q),
            _ => None,
        })
    }

    pub fn quanvolution(&self) -> Option<&Quanvolution> {
        self.stages.iter().find_map(|s| match s {
            Stage::Quanv(q) => Some(q),
            _ => None,
        })
    }

    /// Whole-image circuit of a pure-quantum model.
    pub fn circuit(&self) -> Option<&CircuitSpec> {
        self.stages.iter().find_map(|s| match s {
            Stage::Circuit(c) => Some(c),
            _ => None,
        })
    }

    fn init_params(&self, seed: u64) -> Result<Vec<f64>> {
        let mut params = Vec::with_capacity(self.param_count());
        for (i, s) in self.stages.iter().enumerate() {
            let stage_seed = seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(i as u64);
            match s {
                Stage::Net(net) => params.extend(net.init(stage_seed)?),
                Stage::Linear(q) => {
                    let mut rng = ChaCha8Rng::seed_from_u64(stage_seed);
                    let n = q.param_count()?;
                    params.extend((0..n).map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)));
                }
                Stage::Quanv(q) => params.extend(q.circuit.init_params(stage_seed)?),
                Stage::Circuit(c) => params.extend(c.init_params(stage_seed)?),
            }
        }
        Ok(params)
    }

    fn stage_params<'a>(&self, params: &'a [f64], i: usize) -> &'a [f64] {
        &params[self.offsets[i]..self.offsets[i + 1]]
    }

    fn check_input(&self, image: &Tensor) -> Result<()> {
        if image.shape != self.config.input_shape() {
            return Err(Error::shape(format!(
                "model expects images of shape {:?}, got {:?}",
                self.config.input_shape(),
                image.shape
            )));
        }
        Ok(())
    }

    fn forward_cached(&self, params: &[f64], image: &Tensor) -> Result<(Vec<f64>, Vec<StageCache>)> {
        self.check_input(image)?;
        if params.len() != self.param_count() {
            return Err(Error::shape(format!(
                "model takes {} parameters, got {}",
                self.param_count(),
                params.len()
            )));
        }
        let mut x = image.clone();
        let mut caches = Vec::with_capacity(self.stages.len());
        for (i, s) in self.stages.iter().enumerate() {
            let p = self.stage_params(params, i);
            x = match s {
                Stage::Net(net) => {
                    let (y, c) = net.forward(p, x)?;
                    caches.push(StageCache::Net(c));
                    y
                }
                Stage::Linear(q) => {
                    let y = Tensor::vector(q.forward(p, &x.data)?);
                    caches.push(StageCache::Input(x));
                    y
                }
                Stage::Quanv(q) => {
                    let y = q.forward(p, &x)?;
                    caches.push(StageCache::Input(x));
                    y
                }
                Stage::Circuit(c) => {
                    let out = circuit_forward(c, p, &x.data)?;
                    let scores = class_scores(&out, &c.measurement)?;
                    caches.push(StageCache::Input(x));
                    Tensor::vector(scores)
                }
            };
        }
        Ok((x.data, caches))
    }

    /// Class scores (logits, or readout values for pure-quantum models).
    pub fn forward(&self, image: &Tensor) -> Result<Vec<f64>> {
        self.forward_with(&self.params, image)
    }

    pub fn forward_with(&self, params: &[f64], image: &Tensor) -> Result<Vec<f64>> {
        Ok(self.forward_cached(params, image)?.0)
    }

    pub fn loss(&self, scores: &[f64], label: usize) -> Result<(f64, Vec<f64>)> {
        match self.loss_kind() {
            LossKind::CrossEntropy => cross_entropy(scores, label),
            LossKind::HistogramNll => histogram_nll(scores, label),
        }
    }

    /// Parameter gradient for a score cotangent.
    pub fn backward(&self, params: &[f64], image: &Tensor, d_scores: &[f64]) -> Result<Vec<f64>> {
        let (_, caches) = self.forward_cached(params, image)?;
        self.backward_cached(params, &caches, d_scores)
    }

    fn backward_cached(&self, params: &[f64], caches: &[StageCache], d_scores: &[f64]) -> Result<Vec<f64>> {
        let mut grads = vec![0.0; self.param_count()];
        let mut d = Tensor::vector(d_scores.to_vec());
        for (i, s) in self.stages.iter().enumerate().rev() {
            let p = self.stage_params(params, i);
            let range = self.offsets[i]..self.offsets[i + 1];
            d = match (s, &caches[i]) {
                (Stage::Net(net), StageCache::Net(c)) => net.backward(p, c, d, &mut grads[range])?,
                (Stage::Linear(q), StageCache::Input(x)) => {
                    let (d_in, d_p) = q.backward(p, &x.data, &d.data)?;
                    grads[range].copy_from_slice(&d_p);
                    Tensor::new(x.shape.clone(), d_in)?
                }
                (Stage::Quanv(q), StageCache::Input(x)) => {
                    let d_out = Tensor::new(q.output_shape(&x.shape)?, d.data)?;
                    grads[range].copy_from_slice(&q.backward(p, x, &d_out)?);
                    Tensor::zeros(x.shape.clone())
                }
                (Stage::Circuit(c), StageCache::Input(x)) => {
                    let mut cot = vec![0.0; c.output_len()];
                    cot[..d.data.len()].copy_from_slice(&d.data);
                    let g = grad_adjoint(c, p, &x.data, &cot)?;
                    grads[range].copy_from_slice(&g.d_params);
                    Tensor::new(x.shape.clone(), g.d_inputs)?
                }
                _ => return Err(Error::State("stage cache mismatch".into())),
            };
        }
        Ok(grads)
    }

    /// Loss, scores and parameter gradient of one labelled image.
    pub fn sample_gradient(&self, params: &[f64], image: &Tensor, label: usize) -> Result<SampleGradient> {
        let (scores, caches) = self.forward_cached(params, image)?;
        let (loss, d_scores) = self.loss(&scores, label)?;
        let grads = self.backward_cached(params, &caches, &d_scores)?;
        Ok(SampleGradient { loss, scores, grads })
    }

    /// Mean loss and gradient over a batch. Samples run in parallel; the
    /// reduction is in sample order.
    pub fn batch_gradient(&self, params: &[f64], images: &[&Tensor], labels: &[usize]) -> Result<BatchGradient> {
        if images.len() != labels.len() || images.is_empty() {
            return Err(Error::shape("batch images and labels must be non-empty and aligned"));
        }
        let samples: Vec<SampleGradient> = images
            .par_iter()
            .zip(labels.par_iter())
            .map(|(img, &l)| self.sample_gradient(params, img, l))
            .collect::<Result<_>>()?;
        let scale = 1.0 / samples.len() as f64;
        let mut grads = vec![0.0; params.len()];
        let mut loss = 0.0;
        let mut scores = Vec::with_capacity(samples.len());
        for s in samples {
            loss += s.loss;
            for (g, v) in grads.iter_mut().zip(&s.grads) {
                *g += v;
            }
            scores.push(s.scores);
        }
        grads.iter_mut().for_each(|g| *g *= scale);
        Ok(BatchGradient {
            loss: loss * scale,
            grads,
            scores,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleGradient {
    pub loss: f64,
    pub scores: Vec<f64>,
    pub grads: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatchGradient {
    pub loss: f64,
    pub grads: Vec<f64>,
    pub scores: Vec<Vec<f64>>,
}

/// Standalone quantum linear layer on a feature vector.
pub fn quantum_linear_layer(input: &[f64], config: &ModelConfig, params: &[f64]) -> Result<Vec<f64>> {
    let q = config.qubits_per_circuit;
    let circuit = CircuitSpec::new(
        q,
        config.encoding.clone(),
        config.ansatz.clone(),
        per_qubit_measurement(config, q)?,
    );
    QuantumLinear::new(circuit, input.len())?.forward(params, input)
}

/// Standalone quanvolution of a `(C, H, W)` image.
pub fn quanvolution_layer(image: &Tensor, config: &ModelConfig, params: &[f64]) -> Result<Tensor> {
    let q = config.qks * config.qks;
    let circuit = CircuitSpec::new(
        q,
        config.encoding.clone(),
        config.ansatz.clone(),
        per_qubit_measurement(config, q)?,
    )
    .with_repeats(2);
    Quanvolution {
        circuit,
        qks: config.qks,
    }
    .forward(params, image)
}
