use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::nn::Tensor;

#[derive(Clone, Debug, PartialEq)]
pub enum LayerSpec {
    /// Cross-correlation with square kernels. Weights are laid out as
    /// `[out][in][ky][kx]` followed by `out` biases.
    Conv2D {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
    },
    /// `units × inputs` row-major weights followed by `units` biases.
    Dense { inputs: usize, units: usize },
    ReLU,
    LeakyReLU { slope: f64 },
    MaxPool2D { size: usize, stride: usize },
    GlobalAvgPool,
    Flatten,
    Softmax,
}

impl LayerSpec {
    pub fn conv(in_channels: usize, out_channels: usize, kernel: usize, stride: usize, padding: usize) -> Self {
        LayerSpec::Conv2D {
            in_channels,
            out_channels,
            kernel,
            stride,
            padding,
        }
    }

    pub fn dense(inputs: usize, units: usize) -> Self {
        LayerSpec::Dense { inputs, units }
    }

    pub fn leaky_relu() -> Self {
        LayerSpec::LeakyReLU { slope: 0.01 }
    }
}

/// Values saved by the forward pass for the backward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct Cache {
    layer: LayerSpec,
    input: Tensor,
    /// Argmax positions for max pooling.
    argmax: Vec<usize>,
    /// Softmax output.
    output: Vec<f64>,
}

pub fn weight_count(spec: &LayerSpec) -> usize {
    match *spec {
        LayerSpec::Conv2D {
            in_channels,
            out_channels,
            kernel,
            ..
        } => out_channels * in_channels * kernel * kernel + out_channels,
        LayerSpec::Dense { inputs, units } => units * inputs + units,
        _ => 0,
    }
}

fn chw(shape: &[usize]) -> Result<(usize, usize, usize)> {
    match *shape {
        [c, h, w] => Ok((c, h, w)),
        _ => Err(Error::shape(format!("expected a (C, H, W) tensor, got {shape:?}"))),
    }
}

fn conv_dim(input: usize, kernel: usize, stride: usize, padding: usize) -> Result<usize> {
    let padded = input + 2 * padding;
    if stride == 0 || kernel == 0 || padded < kernel {
        return Err(Error::shape(format!(
            "kernel {kernel} with stride {stride} does not fit extent {input} (padding {padding})"
        )));
    }
    Ok((padded - kernel) / stride + 1)
}

pub fn output_shape(spec: &LayerSpec, input: &[usize]) -> Result<Vec<usize>> {
    match *spec {
        LayerSpec::Conv2D {
            in_channels,
            out_channels,
            kernel,
            stride,
            padding,
        } => {
            let (c, h, w) = chw(input)?;
            if c != in_channels {
                return Err(Error::shape(format!(
                    "convolution expects {in_channels} channels, got {c}"
                )));
            }
            Ok(vec![
                out_channels,
                conv_dim(h, kernel, stride, padding)?,
                conv_dim(w, kernel, stride, padding)?,
            ])
        }
        LayerSpec::Dense { inputs, units } => {
            let len: usize = input.iter().product();
            if input.len() != 1 || len != inputs {
                return Err(Error::shape(format!(
                    "dense layer expects a vector of {inputs}, got {input:?}"
                )));
            }
            Ok(vec![units])
        }
        LayerSpec::MaxPool2D { size, stride } => {
            let (c, h, w) = chw(input)?;
            Ok(vec![c, conv_dim(h, size, stride, 0)?, conv_dim(w, size, stride, 0)?])
        }
        LayerSpec::GlobalAvgPool => {
            let (c, h, w) = chw(input)?;
            if h * w == 0 {
                return Err(Error::shape("global pooling of an empty plane"));
            }
            Ok(vec![c])
        }
        LayerSpec::Flatten => Ok(vec![input.iter().product()]),
        LayerSpec::ReLU | LayerSpec::LeakyReLU { .. } | LayerSpec::Softmax => Ok(input.to_vec()),
    }
}

fn check_weights(spec: &LayerSpec, weights: &[f64]) -> Result<()> {
    if weights.len() != weight_count(spec) {
        return Err(Error::shape(format!(
            "{spec:?} takes {} weights, got {}",
            weight_count(spec),
            weights.len()
        )));
    }
    Ok(())
}

pub fn layer_forward(spec: &LayerSpec, weights: &[f64], input: Tensor) -> Result<(Tensor, Cache)> {
    check_weights(spec, weights)?;
    let out_shape = output_shape(spec, &input.shape)?;
    let mut out = Tensor::zeros(out_shape.clone());
    let mut argmax = Vec::new();
    let mut saved = Vec::new();
    match *spec {
        LayerSpec::Conv2D {
            in_channels: ci,
            out_channels: co,
            kernel: k,
            stride: s,
            padding: p,
        } => {
            let (_, h, w) = chw(&input.shape)?;
            let (oh, ow) = (out_shape[1], out_shape[2]);
            let bias = &weights[co * ci * k * k..];
            for o in 0..co {
                for y in 0..oh {
                    for x in 0..ow {
                        let mut acc = bias[o];
                        for c in 0..ci {
                            for ky in 0..k {
                                let iy = (y * s + ky) as isize - p as isize;
                                if iy < 0 || iy >= h as isize {
                                    continue;
                                }
                                for kx in 0..k {
                                    let ix = (x * s + kx) as isize - p as isize;
                                    if ix < 0 || ix >= w as isize {
                                        continue;
                                    }
                                    acc += weights[((o * ci + c) * k + ky) * k + kx]
                                        * input.data[(c * h + iy as usize) * w + ix as usize];
                                }
                            }
                        }
                        out.data[(o * oh + y) * ow + x] = acc;
                    }
                }
            }
        }
        LayerSpec::Dense { inputs, units } => {
            for u in 0..units {
                let row = &weights[u * inputs..(u + 1) * inputs];
                out.data[u] = weights[units * inputs + u]
                    + row.iter().zip(&input.data).map(|(a, b)| a * b).sum::<f64>();
            }
        }
        LayerSpec::ReLU => {
            for (o, &x) in out.data.iter_mut().zip(&input.data) {
                *o = x.max(0.0);
            }
        }
        LayerSpec::LeakyReLU { slope } => {
            for (o, &x) in out.data.iter_mut().zip(&input.data) {
                *o = if x > 0.0 { x } else { slope * x };
            }
        }
        LayerSpec::MaxPool2D { size, stride } => {
            let (c, h, w) = chw(&input.shape)?;
            let (oh, ow) = (out_shape[1], out_shape[2]);
            argmax = vec![0; c * oh * ow];
            for ch in 0..c {
                for y in 0..oh {
                    for x in 0..ow {
                        let mut best = (ch * h + y * stride) * w + x * stride;
                        for dy in 0..size {
                            for dx in 0..size {
                                let i = (ch * h + y * stride + dy) * w + x * stride + dx;
                                if input.data[i] > input.data[best] {
                                    best = i;
                                }
                            }
                        }
                        let o = (ch * oh + y) * ow + x;
                        argmax[o] = best;
                        out.data[o] = input.data[best];
                    }
                }
            }
        }
        LayerSpec::GlobalAvgPool => {
            let (c, h, w) = chw(&input.shape)?;
            for ch in 0..c {
                let plane = &input.data[ch * h * w..(ch + 1) * h * w];
                out.data[ch] = plane.iter().sum::<f64>() / (h * w) as f64;
            }
        }
        LayerSpec::Flatten => out.data.copy_from_slice(&input.data),
        LayerSpec::Softmax => {
            let max = input.data.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = input.data.iter().map(|x| (x - max).exp()).sum();
            for (o, &x) in out.data.iter_mut().zip(&input.data) {
                *o = (x - max).exp() / z;
            }
            saved = out.data.clone();
        }
    }
    let cache = Cache {
        layer: spec.clone(),
        input,
        argmax,
        output: saved,
    };
    Ok((out, cache))
}

pub fn layer_backward(
    spec: &LayerSpec,
    weights: &[f64],
    cache: &Cache,
    d_output: Tensor,
) -> Result<(Tensor, Vec<f64>)> {
    if &cache.layer != spec {
        return Err(Error::State(format!(
            "cache from {:?} used for {spec:?}",
            cache.layer
        )));
    }
    check_weights(spec, weights)?;
    let out_shape = output_shape(spec, &cache.input.shape)?;
    if d_output.shape != out_shape {
        return Err(Error::State(format!(
            "output gradient of shape {:?} for output {out_shape:?}",
            d_output.shape
        )));
    }
    let input = &cache.input;
    let mut dx = Tensor::zeros(input.shape.clone());
    let mut dw = vec![0.0; weights.len()];
    let dy = &d_output.data;
    match *spec {
        LayerSpec::Conv2D {
            in_channels: ci,
            out_channels: co,
            kernel: k,
            stride: s,
            padding: p,
        } => {
            let (_, h, w) = chw(&input.shape)?;
            let (oh, ow) = (out_shape[1], out_shape[2]);
            let nb = co * ci * k * k;
            for o in 0..co {
                for y in 0..oh {
                    for x in 0..ow {
                        let g = dy[(o * oh + y) * ow + x];
                        if g == 0.0 {
                            continue;
                        }
                        dw[nb + o] += g;
                        for c in 0..ci {
                            for ky in 0..k {
                                let iy = (y * s + ky) as isize - p as isize;
                                if iy < 0 || iy >= h as isize {
                                    continue;
                                }
                                for kx in 0..k {
                                    let ix = (x * s + kx) as isize - p as isize;
                                    if ix < 0 || ix >= w as isize {
                                        continue;
                                    }
                                    let wi = ((o * ci + c) * k + ky) * k + kx;
                                    let ii = (c * h + iy as usize) * w + ix as usize;
                                    dw[wi] += g * input.data[ii];
                                    dx.data[ii] += g * weights[wi];
                                }
                            }
                        }
                    }
                }
            }
        }
        LayerSpec::Dense { inputs, units } => {
            for u in 0..units {
                let g = dy[u];
                dw[units * inputs + u] = g;
                for i in 0..inputs {
                    dw[u * inputs + i] = g * input.data[i];
                    dx.data[i] += g * weights[u * inputs + i];
                }
            }
        }
        LayerSpec::ReLU => {
            for ((d, &x), &g) in dx.data.iter_mut().zip(&input.data).zip(dy) {
                *d = if x > 0.0 { g } else { 0.0 };
            }
        }
        LayerSpec::LeakyReLU { slope } => {
            for ((d, &x), &g) in dx.data.iter_mut().zip(&input.data).zip(dy) {
                *d = if x > 0.0 { g } else { slope * g };
            }
        }
        LayerSpec::MaxPool2D { .. } => {
            for (&src, &g) in cache.argmax.iter().zip(dy) {
                dx.data[src] += g;
            }
        }
        LayerSpec::GlobalAvgPool => {
            let (c, h, w) = chw(&input.shape)?;
            let scale = 1.0 / (h * w) as f64;
            for ch in 0..c {
                for d in &mut dx.data[ch * h * w..(ch + 1) * h * w] {
                    *d = dy[ch] * scale;
                }
            }
        }
        LayerSpec::Flatten => dx.data.copy_from_slice(dy),
        LayerSpec::Softmax => {
            let s = &cache.output;
            let dot: f64 = s.iter().zip(dy).map(|(a, b)| a * b).sum();
            for ((d, &si), &g) in dx.data.iter_mut().zip(s).zip(dy) {
                *d = si * (g - dot);
            }
        }
    }
    Ok((dx, dw))
}

/// He-normal weights (`σ² = 2 / fan_in`) with zero biases.
pub fn he_init(spec: &LayerSpec, seed: u64) -> Result<Vec<f64>> {
    let (fan_in, n_weights, n_bias) = match *spec {
        LayerSpec::Conv2D {
            in_channels,
            out_channels,
            kernel,
            ..
        } => (
            in_channels * kernel * kernel,
            out_channels * in_channels * kernel * kernel,
            out_channels,
        ),
        LayerSpec::Dense { inputs, units } => (inputs, units * inputs, units),
        _ => return Ok(Vec::new()),
    };
    if fan_in == 0 {
        return Err(Error::config(format!("{spec:?} has zero fan-in")));
    }
    let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive std");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w: Vec<f64> = (0..n_weights).map(|_| normal.sample(&mut rng)).collect();
    w.resize(n_weights + n_bias, 0.0);
    Ok(w)
}
