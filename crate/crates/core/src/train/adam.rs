//! Adam with bias correction and coupled weight decay.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Checkpoint, CheckpointEntry, ParamStore};
use crate::tensor::Element;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moments per parameter, in [`ParamStore`] order.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<T: Element = f32> {
    pub config: AdamConfig,
    step: u64,
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
}

impl<T: Element> AdamState<T> {
    pub fn new(params: &ParamStore<T>, config: AdamConfig) -> Self {
        let zeros = || params.iter().map(|(_, t)| vec![T::ZERO; t.numel()]).collect();
        AdamState {
            config,
            step: 0,
            m: zeros(),
            v: zeros(),
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn first_moment(&self, i: usize) -> &[T] {
        &self.m[i]
    }

    pub fn second_moment(&self, i: usize) -> &[T] {
        &self.v[i]
    }

    /// Stores moments as `adam.m.<name>` / `adam.v.<name>` plus `adam.step`.
    pub fn write_to(&self, params: &ParamStore<T>, ckpt: &mut Checkpoint) {
        for (i, (name, t)) in params.iter().enumerate() {
            let dims = t.shape().dims().to_vec();
            let conv = |xs: &[T]| xs.iter().map(|v| v.to_f64() as f32).collect();
            ckpt.insert(
                format!("adam.m.{name}"),
                CheckpointEntry {
                    dims: dims.clone(),
                    values: conv(&self.m[i]),
                },
            );
            ckpt.insert(
                format!("adam.v.{name}"),
                CheckpointEntry {
                    dims,
                    values: conv(&self.v[i]),
                },
            );
        }
        ckpt.insert_scalar("adam.step", self.step as f32);
    }

    pub fn read_from(params: &ParamStore<T>, ckpt: &Checkpoint, config: AdamConfig) -> Result<Self> {
        let mut state = Self::new(params, config);
        for (i, (name, t)) in params.iter().enumerate() {
            for (prefix, dst) in [("adam.m.", &mut state.m[i]), ("adam.v.", &mut state.v[i])] {
                let key = format!("{prefix}{name}");
                let e = ckpt
                    .get(&key)
                    .ok_or_else(|| Error::format(format!("checkpoint lacks optimizer entry {key}")))?;
                if e.values.len() != t.numel() {
                    return Err(Error::format(format!("optimizer entry {key} has the wrong size")));
                }
                for (d, &v) in dst.iter_mut().zip(&e.values) {
                    *d = T::from_f64(v as f64);
                }
            }
        }
        state.step = ckpt.scalar("adam.step").unwrap_or(0.0) as u64;
        Ok(state)
    }
}

/// One Adam update of every parameter. The weight-decay term `wd·θ` is
/// added to the gradient before the moment updates.
///
/// Fails without touching any parameter if a gradient is non-finite.
pub fn adam_step<T: Element>(
    params: &mut ParamStore<T>,
    grads: &[Vec<T>],
    state: &mut AdamState<T>,
    lr: f64,
    weight_decay: f64,
) -> Result<()> {
    if grads.len() != params.len() || state.m.len() != params.len() {
        return Err(Error::config(format!(
            "{} gradients and {} moment sets for {} parameters",
            grads.len(),
            state.m.len(),
            params.len()
        )));
    }
    for ((name, t), g) in params.iter().zip(grads) {
        if g.len() != t.numel() {
            return Err(Error::config(format!("gradient of {name} has the wrong size")));
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric(format!("non-finite gradient for parameter {name}")));
        }
    }
    state.step += 1;
    let AdamConfig { beta1, beta2, eps } = state.config;
    let t = state.step as i32;
    let c1 = 1.0 - beta1.powi(t);
    let c2 = 1.0 - beta2.powi(t);
    for (i, (_, p)) in params.iter_mut().enumerate() {
        let (m, v) = (&mut state.m[i], &mut state.v[i]);
        for (j, theta) in p.data_mut().iter_mut().enumerate() {
            let th = theta.to_f64();
            let g = grads[i][j].to_f64() + weight_decay * th;
            let mj = beta1 * m[j].to_f64() + (1.0 - beta1) * g;
            let vj = beta2 * v[j].to_f64() + (1.0 - beta2) * g * g;
            m[j] = T::from_f64(mj);
            v[j] = T::from_f64(vj);
            let update = lr * (mj / c1) / ((vj / c2).sqrt() + eps);
            *theta = T::from_f64(th - update);
        }
    }
    Ok(())
}
