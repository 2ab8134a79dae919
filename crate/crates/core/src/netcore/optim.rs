use crate::error::{Error, Result};

/// Moment estimates for bias-corrected Adam.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self::with_betas(len, 0.9, 0.999, 1e-8)
    }

    pub fn with_betas(len: usize, beta1: f64, beta2: f64, eps: f64) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
            beta1,
            beta2,
            eps,
        }
    }
}

/// One Adam update of `params` in place.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState, lr: f64) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::dim(
            "adam_step lengths",
            params.len(),
            format!("grads {} / moments {}", grads.len(), state.m.len()),
        ));
    }
    if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
        return Err(Error::NonFinite(format!(
            "gradient entry {i} = {} at step {}",
            grads[i],
            state.step + 1
        )));
    }
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2) = (state.beta1, state.beta2);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    for (((p, &g), m), v) in params
        .iter_mut()
        .zip(grads)
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= lr * m_hat / (v_hat.sqrt() + state.eps);
    }
    Ok(())
}

/// Continuous exponential decay: `base_lr * decay_rate^(epoch / decay_steps)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrSchedule {
    pub base_lr: f64,
    pub decay_steps: u64,
    pub decay_rate: f64,
}

impl LrSchedule {
    pub fn new(base_lr: f64, decay_steps: u64, decay_rate: f64) -> Result<Self> {
        if !(base_lr > 0.0) || !(decay_rate > 0.0 && decay_rate <= 1.0) || decay_steps < 1 {
            return Err(Error::contract(format!(
                "invalid schedule: base_lr={base_lr}, decay_steps={decay_steps}, decay_rate={decay_rate}"
            )));
        }
        Ok(Self {
            base_lr,
            decay_steps,
            decay_rate,
        })
    }
}

impl Default for LrSchedule {
    fn default() -> Self {
        Self {
            base_lr: 1e-3,
            decay_steps: 2000,
            decay_rate: 0.91,
        }
    }
}

pub fn lr_at(epoch: u64, s: &LrSchedule) -> f64 {
    s.base_lr * s.decay_rate.powf(epoch as f64 / s.decay_steps as f64)
}
