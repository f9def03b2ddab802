use crate::error::{Error, Result};

/// Softmax cross-entropy. Returns the loss and its gradient in the scores.
pub fn cross_entropy(scores: &[f64], label: usize) -> Result<(f64, Vec<f64>)> {
    check_label(scores.len(), label)?;
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    let loss = z.ln() - (scores[label] - max);
    let mut grad: Vec<f64> = exps.iter().map(|e| e / z).collect();
    grad[label] -= 1.0;
    Ok((loss, grad))
}

const PROB_FLOOR: f64 = 1e-10;

/// Negative log-likelihood of the label under the class probabilities
/// renormalized to sum to one. A small floor keeps empty classes finite.
pub fn histogram_nll(probs: &[f64], label: usize) -> Result<(f64, Vec<f64>)> {
    check_label(probs.len(), label)?;
    let total: f64 = probs.iter().map(|p| p + PROB_FLOOR).sum();
    let loss = total.ln() - (probs[label] + PROB_FLOOR).ln();
    let mut grad = vec![1.0 / total; probs.len()];
    grad[label] -= 1.0 / (probs[label] + PROB_FLOOR);
    Ok((loss, grad))
}

fn check_label(k: usize, label: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::shape("a classification loss needs at least 2 classes"));
    }
    if label >= k {
        return Err(Error::shape(format!("label {label} out of range for {k} classes")));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let beta_ok = |b: f64| (0.0..1.0).contains(&b);
        if !(self.learning_rate > 0.0) || !beta_ok(self.beta1) || !beta_ok(self.beta2) {
            return Err(Error::config(format!("invalid optimizer settings {self:?}")));
        }
        Ok(())
    }
}

/// First and second moment buffers.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        AdamState {
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
        }
    }
}

/// Bias-corrected Adam update, in place.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState, cfg: &AdamConfig) -> Result<()> {
    if grads.len() != params.len() || state.m.len() != params.len() || state.v.len() != params.len() {
        return Err(Error::shape(format!(
            "adam: {} params, {} grads, {} moments",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        params[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
    Ok(())
}
