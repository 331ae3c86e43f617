//! Adam with a per-epoch learning-rate decay.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// How the base learning rate shrinks with the epoch number `e`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecaySchedule {
    /// `rate / (1 + decay * e)`
    Inverse,
    /// `rate * (1 - decay)^e`
    Multiplicative,
}

impl FromStr for DecaySchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inverse" => Ok(DecaySchedule::Inverse),
            "multiplicative" => Ok(DecaySchedule::Multiplicative),
            other => Err(Error::usage(format!("unknown decay schedule '{other}'"))),
        }
    }
}

impl fmt::Display for DecaySchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DecaySchedule::Inverse => "inverse",
            DecaySchedule::Multiplicative => "multiplicative",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub decay: f64,
    pub schedule: DecaySchedule,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            decay: 0.05,
            schedule: DecaySchedule::Inverse,
        }
    }
}

impl AdamConfig {
    /// Learning rate in effect during `epoch` (0-based).
    pub fn rate_at(&self, epoch: usize) -> f64 {
        match self.schedule {
            DecaySchedule::Inverse => self.learning_rate / (1.0 + self.decay * epoch as f64),
            DecaySchedule::Multiplicative => {
                self.learning_rate * (1.0 - self.decay).powi(epoch as i32)
            }
        }
    }
}

/// Moment estimates and step counter aligned with a parameter vector.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState {
    pub config: AdamConfig,
    pub epoch: usize,
    step: u64,
    first: Vec<f64>,
    second: Vec<f64>,
}

impl OptimizerState {
    pub fn new(config: AdamConfig, len: usize) -> Self {
        OptimizerState {
            config,
            epoch: 0,
            step: 0,
            first: vec![0.0; len],
            second: vec![0.0; len],
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.first
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.second
    }

    /// Current learning rate.
    pub fn rate(&self) -> f64 {
        self.config.rate_at(self.epoch)
    }
}

/// One bias-corrected Adam update of `params` with `gradient`.
pub fn adam_step(state: &mut OptimizerState, params: &mut [f64], gradient: &[f64]) -> Result<()> {
    if params.len() != state.first.len() || gradient.len() != params.len() {
        return Err(Error::usage(format!(
            "optimizer for {} parameters got {} parameters and {} gradients",
            state.first.len(),
            params.len(),
            gradient.len()
        )));
    }
    if let Some(i) = gradient.iter().position(|g| !g.is_finite()) {
        return Err(Error::Training(format!(
            "non-finite gradient {} at parameter {i} (step {})",
            gradient[i], state.step
        )));
    }
    state.step += 1;
    let AdamConfig {
        beta1,
        beta2,
        epsilon,
        ..
    } = state.config;
    let t = state.step as i32;
    let correction1 = 1.0 - beta1.powi(t);
    let correction2 = 1.0 - beta2.powi(t);
    let rate = state.rate();
    for (((p, &g), m), v) in params
        .iter_mut()
        .zip(gradient)
        .zip(state.first.iter_mut())
        .zip(state.second.iter_mut())
    {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        let m_hat = *m / correction1;
        let v_hat = *v / correction2;
        *p -= rate * m_hat / (v_hat.sqrt() + epsilon);
    }
    Ok(())
}
