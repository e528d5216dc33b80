use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 3e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }
}

/// Bias-corrected Adam: `θ ← θ - lr · m̂ / (√v̂ + eps)`.
///
/// Non-finite gradients abort before anything is modified; the error names
/// the first offending index.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState, config: &AdamConfig) -> Result<()> {
    if params.len() != grads.len() || state.m.len() != params.len() {
        return Err(Error::ShapeMismatch(format!(
            "adam: {} parameters, {} gradients, {} moments",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    if let Some(index) = grads.iter().position(|g| !g.is_finite()) {
        return Err(Error::NonFiniteGradient {
            index,
            name: String::new(),
        });
    }
    state.t += 1;
    let t = state.t as i32;
    let (b1, b2) = (config.beta1, config.beta2);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        params[i] -= config.learning_rate * m_hat / (v_hat.sqrt() + config.eps);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_keeps_params() {
        let mut p = vec![1.0, -2.0];
        let mut s = AdamState::new(2);
        adam_step(&mut p, &[0.0, 0.0], &mut s, &AdamConfig::default()).unwrap();
        assert_eq!(p, vec![1.0, -2.0]);
        assert_eq!(s.t, 1);
    }

    #[test]
    fn first_step_closed_form() {
        let c = AdamConfig::default();
        for g in [3.0, -0.02, 1e-9] {
            let mut p = vec![0.0];
            let mut s = AdamState::new(1);
            adam_step(&mut p, &[g], &mut s, &c).unwrap();
            // m̂ = g, v̂ = g², so the step is -lr·g/(|g| + eps).
            let expect = -c.learning_rate * g / (g.abs() + c.eps);
            assert!((p[0] - expect).abs() < 1e-18, "{g}");
        }
    }

    #[test]
    fn repeated_gradient_keeps_step_size() {
        let c = AdamConfig::default();
        let mut p = vec![0.0];
        let mut s = AdamState::new(1);
        adam_step(&mut p, &[0.5], &mut s, &c).unwrap();
        let first = p[0];
        adam_step(&mut p, &[0.5], &mut s, &c).unwrap();
        let second = p[0] - first;
        assert!((second / first - 1.0).abs() < 0.01);
    }

    #[test]
    fn non_finite_aborts() {
        let mut p = vec![0.0, 0.0];
        let mut s = AdamState::new(2);
        let e = adam_step(&mut p, &[1.0, f64::NAN], &mut s, &AdamConfig::default()).unwrap_err();
        assert!(matches!(e, Error::NonFiniteGradient { index: 1, .. }));
        assert_eq!(s.t, 0);
    }
}
