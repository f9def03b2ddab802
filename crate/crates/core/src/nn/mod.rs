//! Small dense and convolutional layers with exact backpropagation.

mod layers;

pub use layers::{he_init, layer_backward, layer_forward, output_shape, weight_count, Cache, LayerSpec};

use crate::error::{Error, Result};

/// Row-major real array. Images are `(C, H, W)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let len: usize = shape.iter().product();
        if len != data.len() {
            return Err(Error::shape(format!(
                "shape {shape:?} holds {len} values, got {}",
                data.len()
            )));
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Tensor {
            shape,
            data: vec![0.0; len],
        }
    }

    pub fn vector(data: Vec<f64>) -> Self {
        Tensor {
            shape: vec![data.len()],
            data,
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn reshape(mut self, shape: Vec<usize>) -> Result<Self> {
        let len: usize = shape.iter().product();
        if len != self.data.len() {
            return Err(Error::shape(format!(
                "cannot reshape {:?} to {shape:?}",
                self.shape
            )));
        }
        self.shape = shape;
        Ok(self)
    }
}

/// A chain of layers with one flat weight vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Sequential {
    pub layers: Vec<LayerSpec>,
    offsets: Vec<usize>,
}

impl Sequential {
    pub fn new(layers: Vec<LayerSpec>) -> Self {
        let mut offsets = Vec::with_capacity(layers.len() + 1);
        let mut total = 0;
        offsets.push(0);
        for l in &layers {
            total += weight_count(l);
            offsets.push(total);
        }
        Sequential { layers, offsets }
    }

    pub fn weight_count(&self) -> usize {
        *self.offsets.last().expect("non-empty offsets")
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        self.layers
            .iter()
            .try_fold(input.to_vec(), |shape, l| output_shape(l, &shape))
    }

    pub fn init(&self, seed: u64) -> Result<Vec<f64>> {
        let mut w = Vec::with_capacity(self.weight_count());
        for (i, l) in self.layers.iter().enumerate() {
            w.extend(he_init(l, seed.wrapping_add(i as u64))?);
        }
        Ok(w)
    }

    fn slice<'a>(&self, weights: &'a [f64], i: usize) -> &'a [f64] {
        &weights[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn forward(&self, weights: &[f64], input: Tensor) -> Result<(Tensor, Vec<Cache>)> {
        if weights.len() != self.weight_count() {
            return Err(Error::shape(format!(
                "network takes {} weights, got {}",
                self.weight_count(),
                weights.len()
            )));
        }
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut x = input;
        for (i, l) in self.layers.iter().enumerate() {
            let (y, c) = layer_forward(l, self.slice(weights, i), x)?;
            caches.push(c);
            x = y;
        }
        Ok((x, caches))
    }

    /// Returns the input gradient and accumulates weight gradients into
    /// `d_weights`.
    pub fn backward(
        &self,
        weights: &[f64],
        caches: &[Cache],
        d_output: Tensor,
        d_weights: &mut [f64],
    ) -> Result<Tensor> {
        if caches.len() != self.layers.len() {
            return Err(Error::State("cache count does not match the network".into()));
        }
        let mut d = d_output;
        for (i, l) in self.layers.iter().enumerate().rev() {
            let (dx, dw) = layer_backward(l, self.slice(weights, i), &caches[i], d)?;
            for (acc, g) in d_weights[self.offsets[i]..self.offsets[i + 1]].iter_mut().zip(dw) {
                *acc += g;
            }
            d = dx;
        }
        Ok(d)
    }
}
