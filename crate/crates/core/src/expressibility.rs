//! Frame-potential moments of encoding ensembles against the Haar value.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::encodings::{encode_into, EncodingSpec};
use crate::error::{Error, Result};
use crate::qsim::random::haar_state;
use crate::qsim::state::inner;
use crate::qsim::{GateSequence, StateVector, C64};

const MAX_QUBITS: usize = 12;
const MIN_PAIRS: usize = 100;

#[derive(Clone, Debug, PartialEq)]
pub struct FramePotentialEstimate {
    pub t: u32,
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
    pub haar_ref: f64,
    pub ratio: f64,
}

/// Uniform ranges the random inputs are drawn from. Each state of a pair
/// gets fresh features and fresh trainable angles.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InputDistribution {
    pub features: (f64, f64),
    pub angles: (f64, f64),
}

impl Default for InputDistribution {
    fn default() -> Self {
        InputDistribution {
            features: (0.0, 1.0),
            angles: (0.0, 1.0),
        }
    }
}

impl InputDistribution {
    /// Features on `[0, π]`, angles on `[−π, π]`.
    pub fn wide() -> Self {
        use std::f64::consts::PI;
        InputDistribution {
            features: (0.0, PI),
            angles: (-PI, PI),
        }
    }
}

/// `t!(d−1)!/(d+t−1)!`.
pub fn haar_frame_potential(d: usize, t: u32) -> Result<f64> {
    if d < 2 {
        return Err(Error::shape(format!("dimension {d} is below 2")));
    }
    if !(1..=2).contains(&t) {
        return Err(Error::config(format!("moment t = {t} is not supported")));
    }
    let d = d as f64;
    Ok(match t {
        1 => 1.0 / d,
        _ => 2.0 / (d * (d + 1.0)),
    })
}

/// Jackknife standard error of the sample mean.
pub fn jackknife_std_error(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let total: f64 = values.iter().sum();
    let loo: Vec<f64> = values.iter().map(|v| (total - v) / (n - 1.0)).collect();
    let centre = loo.iter().sum::<f64>() / n;
    ((n - 1.0) / n * loo.iter().map(|x| (x - centre).powi(2)).sum::<f64>()).sqrt()
}

/// Estimates the `t`-th moment from states produced by `sampler`, which is
/// called twice per pair with a pair-specific generator.
pub fn estimate_with_sampler<F>(dim: usize, t: u32, n_pairs: usize, seed: u64, sampler: F) -> Result<FramePotentialEstimate>
where
    F: Fn(&mut ChaCha8Rng) -> Result<StateVector> + Sync,
{
    if n_pairs < 2 {
        return Err(Error::shape("at least 2 pairs are needed"));
    }
    let haar_ref = haar_frame_potential(dim, t)?;
    let overlaps: Vec<f64> = (0..n_pairs)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let a = sampler(&mut rng)?;
            let b = sampler(&mut rng)?;
            if a.amplitudes().len() != dim || b.amplitudes().len() != dim {
                return Err(Error::shape("sampled state has the wrong dimension"));
            }
            let f: C64 = inner(a.amplitudes(), b.amplitudes());
            Ok(f.norm_sqr().min(1.0).powi(t as i32))
        })
        .collect::<Result<_>>()?;
    let mean = overlaps.iter().sum::<f64>() / n_pairs as f64;
    Ok(FramePotentialEstimate {
        t,
        mean,
        std_error: jackknife_std_error(&overlaps),
        samples: n_pairs,
        haar_ref,
        ratio: mean / haar_ref,
    })
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64), len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(lo..hi)).collect()
}

/// Frame potential of an encoding ensemble over random inputs.
pub fn estimate_frame_potential(
    spec: &EncodingSpec,
    n_qubits: usize,
    t: u32,
    n_pairs: usize,
    input_sampler_seed: u64,
    inputs: InputDistribution,
) -> Result<FramePotentialEstimate> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(Error::Capacity(format!(
            "expressibility supports 1..={MAX_QUBITS} qubits, got {n_qubits}"
        )));
    }
    if n_pairs < MIN_PAIRS {
        return Err(Error::shape(format!("at least {MIN_PAIRS} pairs are needed")));
    }
    if spec.kind.is_amplitude() {
        return Err(Error::config("expressibility is estimated for gate encodings only"));
    }
    spec.validate()?;
    let n_angles = spec.trainable_count(n_qubits);
    let sampler = |rng: &mut ChaCha8Rng| {
        let x = uniform(rng, inputs.features, n_qubits);
        let theta = uniform(rng, inputs.angles, n_angles);
        let mut seq = GateSequence::new(n_qubits);
        encode_into(&mut seq, spec, &x, &theta, 0)?;
        let mut s = StateVector::zero(n_qubits)?;
        s.apply_sequence(&seq)?;
        Ok(s)
    };
    estimate_with_sampler(1 << n_qubits, t, n_pairs, input_sampler_seed, sampler)
}

/// Haar-random states in place of an encoding; the ratio should be 1.
pub fn haar_self_test(n_qubits: usize, t: u32, n_pairs: usize, seed: u64) -> Result<FramePotentialEstimate> {
    estimate_with_sampler(1 << n_qubits, t, n_pairs, seed, |rng| haar_state(n_qubits, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encodings::EncodingKind;

    #[test]
    fn haar_values() {
        assert_eq!(haar_frame_potential(16, 1).unwrap(), 1.0 / 16.0);
        assert!((haar_frame_potential(16, 2).unwrap() - 1.0 / 136.0).abs() < 1e-18);
        assert_eq!(haar_frame_potential(256, 1).unwrap(), 1.0 / 256.0);
        assert!(haar_frame_potential(16, 3).is_err());
    }

    #[test]
    fn jackknife_of_mean_is_standard_error() {
        let v = [1.0, 2.0, 4.0, 7.0];
        let mean = 3.5;
        let s2 = v.iter().map(|x: &f64| (x - mean).powi(2)).sum::<f64>() / 3.0;
        assert!((jackknife_std_error(&v) - (s2 / 4.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn seeded_and_bounded() {
        let spec = EncodingSpec::new(EncodingKind::QaoaZ);
        let d = InputDistribution::default();
        let a = estimate_frame_potential(&spec, 3, 1, 200, 5, d).unwrap();
        let b = estimate_frame_potential(&spec, 3, 1, 200, 5, d).unwrap();
        assert_eq!(a, b);
        let a2 = estimate_frame_potential(&spec, 3, 2, 200, 5, d).unwrap();
        assert!(a2.mean <= a.mean);
        assert!(a.mean <= 1.0 && a.std_error >= 0.0);
    }
}
