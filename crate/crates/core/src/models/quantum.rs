//! Quantum layers embedded in classical networks.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grad::{circuit_forward, grad_adjoint, CircuitSpec};
use crate::nn::Tensor;

/// Added to amplitude-encoded chunks and patches so that an all-zero input
/// still defines a state.
pub const AMPLITUDE_OFFSET: f64 = 1e-8;

/// A bank of independent circuits, each reading one contiguous chunk of the
/// input vector. Outputs are concatenated in circuit order.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumLinear {
    pub circuit: CircuitSpec,
    pub circuits: usize,
}

impl QuantumLinear {
    pub fn new(circuit: CircuitSpec, input_len: usize) -> Result<Self> {
        let chunk = circuit.feature_count();
        if chunk == 0 || input_len % chunk != 0 {
            return Err(Error::shape(format!(
                "input of length {input_len} does not split into chunks of {chunk}"
            )));
        }
        Ok(QuantumLinear {
            circuits: input_len / chunk,
            circuit,
        })
    }

    pub fn chunk(&self) -> usize {
        self.circuit.feature_count()
    }

    pub fn input_len(&self) -> usize {
        self.chunk() * self.circuits
    }

    pub fn output_len(&self) -> usize {
        self.circuit.output_len() * self.circuits
    }

    pub fn param_count(&self) -> Result<usize> {
        Ok(self.circuit.param_count()? * self.circuits)
    }

    fn prepare(&self, chunk: &[f64]) -> Vec<f64> {
        if self.circuit.encoding.kind.is_amplitude() {
            chunk.iter().map(|x| x + AMPLITUDE_OFFSET).collect()
        } else {
            chunk.to_vec()
        }
    }

    fn check(&self, params: &[f64], input: &[f64]) -> Result<usize> {
        let per = self.circuit.param_count()?;
        if params.len() != per * self.circuits || input.len() != self.input_len() {
            return Err(Error::shape(format!(
                "quantum linear layer takes {} inputs and {} parameters, got {} and {}",
                self.input_len(),
                per * self.circuits,
                input.len(),
                params.len()
            )));
        }
        Ok(per)
    }

    pub fn forward(&self, params: &[f64], input: &[f64]) -> Result<Vec<f64>> {
        let per = self.check(params, input)?;
        let outs: Vec<Vec<f64>> = (0..self.circuits)
            .into_par_iter()
            .map(|j| {
                let x = self.prepare(&input[j * self.chunk()..(j + 1) * self.chunk()]);
                circuit_forward(&self.circuit, &params[j * per..(j + 1) * per], &x)
            })
            .collect::<Result<_>>()?;
        Ok(outs.concat())
    }

    /// Returns `(d_input, d_params)` for an output cotangent.
    pub fn backward(&self, params: &[f64], input: &[f64], d_output: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let per = self.check(params, input)?;
        let width = self.circuit.output_len();
        if d_output.len() != width * self.circuits {
            return Err(Error::shape("output gradient length mismatch"));
        }
        let grads: Vec<_> = (0..self.circuits)
            .into_par_iter()
            .map(|j| {
                let x = self.prepare(&input[j * self.chunk()..(j + 1) * self.chunk()]);
                grad_adjoint(
                    &self.circuit,
                    &params[j * per..(j + 1) * per],
                    &x,
                    &d_output[j * width..(j + 1) * width],
                )
            })
            .collect::<Result<_>>()?;
        let mut d_in = Vec::with_capacity(input.len());
        let mut d_params = Vec::with_capacity(params.len());
        for g in grads {
            d_in.extend(g.d_inputs);
            d_params.extend(g.d_params);
        }
        Ok((d_in, d_params))
    }
}

/// Shared-parameter circuit slid over every `qks × qks` patch of every
/// channel with stride 1.
#[derive(Clone, Debug, PartialEq)]
pub struct Quanvolution {
    /// Circuit on `qks²` qubits with two ansatz blocks sharing parameters.
    pub circuit: CircuitSpec,
    pub qks: usize,
}

impl Quanvolution {
    pub fn qubits(&self) -> usize {
        self.qks * self.qks
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        match *input {
            [c, h, w] if h >= self.qks && w >= self.qks => Ok(vec![
                c * self.qubits(),
                h - self.qks + 1,
                w - self.qks + 1,
            ]),
            _ => Err(Error::shape(format!(
                "quanvolution with kernel {} cannot read {input:?}",
                self.qks
            ))),
        }
    }

    /// Patch features in row-major order, rescaled for the encoding.
    fn patch(&self, image: &Tensor, c: usize, y: usize, x: usize) -> Vec<f64> {
        let (h, w) = (image.shape[1], image.shape[2]);
        let k = self.qks;
        let mut v = Vec::with_capacity(k * k);
        for dy in 0..k {
            let row = (c * h + y + dy) * w + x;
            v.extend_from_slice(&image.data[row..row + k]);
        }
        if self.circuit.encoding.kind.is_amplitude() {
            v.iter_mut().for_each(|a| *a += AMPLITUDE_OFFSET);
        } else {
            let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let span = hi - lo;
            v.iter_mut()
                .for_each(|a| *a = if span > 0.0 { PI * (*a - lo) / span } else { 0.0 });
        }
        v
    }

    fn positions(&self, shape: &[usize]) -> Result<(Vec<(usize, usize, usize)>, Vec<usize>)> {
        let out = self.output_shape(shape)?;
        let (oh, ow) = (out[1], out[2]);
        let positions = (0..shape[0])
            .flat_map(|c| (0..oh).flat_map(move |y| (0..ow).map(move |x| (c, y, x))))
            .collect();
        Ok((positions, out))
    }

    pub fn forward(&self, params: &[f64], image: &Tensor) -> Result<Tensor> {
        let (positions, out_shape) = self.positions(&image.shape)?;
        let q = self.qubits();
        let (oh, ow) = (out_shape[1], out_shape[2]);
        let values: Vec<Vec<f64>> = positions
            .par_iter()
            .map(|&(c, y, x)| circuit_forward(&self.circuit, params, &self.patch(image, c, y, x)))
            .collect::<Result<_>>()?;
        let mut out = Tensor::zeros(out_shape);
        for (&(c, y, x), v) in positions.iter().zip(values) {
            for (k, val) in v.into_iter().enumerate() {
                out.data[((c * q + k) * oh + y) * ow + x] = val;
            }
        }
        Ok(out)
    }

    /// Parameter gradient; the layer reads raw images so no input gradient
    /// is produced.
    pub fn backward(&self, params: &[f64], image: &Tensor, d_output: &Tensor) -> Result<Vec<f64>> {
        let (positions, out_shape) = self.positions(&image.shape)?;
        if d_output.shape != out_shape {
            return Err(Error::State("quanvolution output gradient shape mismatch".into()));
        }
        let q = self.qubits();
        let (oh, ow) = (out_shape[1], out_shape[2]);
        let grads: Vec<Vec<f64>> = positions
            .par_iter()
            .map(|&(c, y, x)| {
                let cot: Vec<f64> = (0..q)
                    .map(|k| d_output.data[((c * q + k) * oh + y) * ow + x])
                    .collect();
                if cot.iter().all(|&g| g == 0.0) {
                    return Ok(vec![0.0; params.len()]);
                }
                grad_adjoint(&self.circuit, params, &self.patch(image, c, y, x), &cot).map(|g| g.d_params)
            })
            .collect::<Result<_>>()?;
        let mut total = vec![0.0; params.len()];
        for g in grads {
            for (t, v) in total.iter_mut().zip(g) {
                *t += v;
            }
        }
        Ok(total)
    }
}
