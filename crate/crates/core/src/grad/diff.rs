use std::f64::consts::{FRAC_PI_2, SQRT_2};

use crate::error::{Error, Result};
use crate::grad::{compile, readout_values, weighted_observable, CircuitSpec, CompiledCircuit};
use crate::qsim::state::{apply_unchecked, generator_inner, is_diagonal_eigenstate};
use crate::qsim::{AngleSource, GateOp, Generator, StateVector, C64};

/// Vector-Jacobian product of a circuit's readout.
#[derive(Clone, Debug, PartialEq)]
pub struct CircuitGradient {
    pub d_params: Vec<f64>,
    pub d_inputs: Vec<f64>,
}

fn check_cotangent(c: &CompiledCircuit, cotangent: &[f64]) -> Result<()> {
    let len = readout_values(&c.readout, c.initial.amplitudes(), c.n_qubits()).len();
    if cotangent.len() != len {
        return Err(Error::shape(format!(
            "cotangent of length {} for {len} readout values",
            cotangent.len()
        )));
    }
    for g in &c.gates {
        if g.param.is_some() && g.generator.is_none() {
            return Err(Error::UnsupportedGate(
                "parameterized gate without a rotation generator".into(),
            ));
        }
    }
    Ok(())
}

/// For each gate, whether its output state is an eigenvector of its (diagonal)
/// generator. Such gates have exactly zero derivative.
fn stationary_flags(c: &CompiledCircuit) -> Vec<bool> {
    let n = c.n_qubits();
    let mut psi = c.initial.clone().into_amplitudes();
    c.gates
        .gates()
        .iter()
        .map(|g| {
            apply_unchecked(&mut psi, n, g);
            g.param.is_some()
                && g.generator.is_some_and(Generator::is_diagonal)
                && is_diagonal_eigenstate(&psi, n, g)
        })
        .collect()
}

/// Routes the derivative with respect to one gate angle to its source.
fn scatter(source: AngleSource, g: f64, features: &[f64], out: &mut CircuitGradient) {
    match source {
        AngleSource::Param(s) => out.d_params[s] += g,
        AngleSource::Feature(j) => out.d_inputs[j] += g,
        AngleSource::FeatureProduct(j, k) => {
            out.d_inputs[j] += g * features[k];
            out.d_inputs[k] += g * features[j];
        }
    }
}

/// Chains `∂f/∂ψ₀` (real, per amplitude) through `ψ₀ = P x / ‖x‖`.
fn amplitude_input_grad(c: &CompiledCircuit, d_amp: &[f64]) -> Vec<f64> {
    let amp = c.amplitude.as_ref().expect("amplitude circuit");
    let g: Vec<f64> = amp.permutation.iter().map(|&p| d_amp[p]).collect();
    let ug: f64 = amp.unit.iter().zip(&g).map(|(u, x)| u * x).sum();
    g.iter()
        .zip(&amp.unit)
        .map(|(gi, ui)| (gi - ui * ug) / amp.norm)
        .collect()
}

fn empty_gradient(spec: &CircuitSpec, features: &[f64]) -> Result<CircuitGradient> {
    Ok(CircuitGradient {
        d_params: vec![0.0; spec.param_count()?],
        d_inputs: vec![0.0; features.len()],
    })
}

/// Exact gradient of `Σ_k cotangent_k · out_k` by reverse-mode state
/// propagation: one forward pass and one backward pass.
pub fn grad_adjoint(
    spec: &CircuitSpec,
    params: &[f64],
    features: &[f64],
    cotangent: &[f64],
) -> Result<CircuitGradient> {
    let c = compile(spec, params, features)?;
    check_cotangent(&c, cotangent)?;
    let mut out = empty_gradient(spec, features)?;
    let n = c.n_qubits();
    let stationary = stationary_flags(&c);
    let mut psi = c.final_state().into_amplitudes();
    let mut lambda = weighted_observable(&c.readout, &psi, n, cotangent);
    for (g, &still) in c.gates.gates().iter().zip(&stationary).rev() {
        if let Some(p) = g.param {
            let d = if still {
                0.0
            } else {
                generator_inner(&lambda, &psi, n, g).im
            };
            scatter(p.source, d, &c.features, &mut out);
        }
        let inv = g.dagger();
        apply_unchecked(&mut psi, n, &inv);
        apply_unchecked(&mut lambda, n, &inv);
    }
    if c.amplitude.is_some() {
        let d_amp: Vec<f64> = lambda.iter().map(|l| 2.0 * l.re).collect();
        out.d_inputs = amplitude_input_grad(&c, &d_amp);
    }
    Ok(out)
}

/// `Σ_k w_k out_k` for a compiled circuit with one gate replaced.
fn weighted_output(c: &CompiledCircuit, initial: &StateVector, replace: Option<(usize, &GateOp)>, w: &[f64]) -> f64 {
    let n = c.n_qubits();
    let mut amps = initial.amplitudes().to_vec();
    for (i, g) in c.gates.gates().iter().enumerate() {
        match replace {
            Some((j, r)) if j == i => apply_unchecked(&mut amps, n, r),
            _ => apply_unchecked(&mut amps, n, g),
        }
    }
    readout_values(&c.readout, &amps, n)
        .iter()
        .zip(w)
        .map(|(o, wk)| o * wk)
        .sum()
}

/// Shift terms `(coefficient, shift)` of the rule for a generator.
fn shift_rule(generator: Generator) -> Vec<(f64, f64)> {
    match generator {
        Generator::Rot(_) | Generator::ZZ => vec![(0.5, FRAC_PI_2), (-0.5, -FRAC_PI_2)],
        // |1⟩⟨1|⊗P has eigenvalues {0, ±1}, so two frequencies
        Generator::Controlled(_) => {
            let cp = (SQRT_2 + 1.0) / (4.0 * SQRT_2);
            let cm = (SQRT_2 - 1.0) / (4.0 * SQRT_2);
            let three = 3.0 * FRAC_PI_2;
            vec![(cp, FRAC_PI_2), (-cp, -FRAC_PI_2), (-cm, three), (cm, -three)]
        }
    }
}

/// Gradient by shifted re-evaluation of the circuit. Input gradients for
/// amplitude encoding use the exact symmetric difference of the (quadratic)
/// pre-normalization map.
pub fn grad_parameter_shift(
    spec: &CircuitSpec,
    params: &[f64],
    features: &[f64],
    cotangent: &[f64],
) -> Result<CircuitGradient> {
    let c = compile(spec, params, features)?;
    check_cotangent(&c, cotangent)?;
    let mut out = empty_gradient(spec, features)?;
    let stationary = stationary_flags(&c);
    for (i, g) in c.gates.gates().iter().enumerate() {
        let Some(p) = g.param else { continue };
        if stationary[i] {
            scatter(p.source, 0.0, &c.features, &mut out);
            continue;
        }
        let generator = g.generator.expect("checked");
        let mut d = 0.0;
        for (coef, shift) in shift_rule(generator) {
            let shifted = g.with_angle(p.angle + shift)?;
            d += coef * weighted_output(&c, &c.initial, Some((i, &shifted)), cotangent);
        }
        scatter(p.source, d, &c.features, &mut out);
    }
    if c.amplitude.is_some() {
        let dim = c.initial.amplitudes().len();
        let d_amp: Vec<f64> = (0..dim)
            .map(|j| {
                let mut plus = c.initial.clone();
                let mut minus = c.initial.clone();
                plus.amplitudes_mut()[j] += C64::new(1.0, 0.0);
                minus.amplitudes_mut()[j] -= C64::new(1.0, 0.0);
                (weighted_output(&c, &plus, None, cotangent)
                    - weighted_output(&c, &minus, None, cotangent))
                    / 2.0
            })
            .collect();
        out.d_inputs = amplitude_input_grad(&c, &d_amp);
    }
    Ok(out)
}
