use indexmap::IndexMap;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Uniform};

use crate::autograd::{Graph, Var};
use crate::error::{Error, Result};
use crate::tensor::{Element, Shape, Tensor};

/// Named learnable tensors in a fixed, config-determined order.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamStore<T: Element = f32> {
    entries: IndexMap<String, Tensor<T>>,
}

impl<T: Element> Default for ParamStore<T> {
    fn default() -> Self {
        ParamStore {
            entries: IndexMap::new(),
        }
    }
}

impl<T: Element> ParamStore<T> {
    pub fn insert(&mut self, name: String, value: Tensor<T>) -> Result<usize> {
        if self.entries.contains_key(&name) {
            return Err(Error::config(format!("duplicate parameter name {name}")));
        }
        let (idx, _) = self.entries.insert_full(name, value);
        Ok(idx)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&Tensor<T>> {
        self.entries.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor<T>)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Tensor<T>)> {
        self.entries.iter_mut().map(|(k, v)| (k.as_str(), v))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Total number of scalar parameters.
    pub fn count(&self) -> usize {
        self.entries.values().map(Tensor::numel).sum()
    }

    /// Appends every parameter to `graph` as a leaf, in store order.
    pub fn bind(&self, graph: &mut Graph<T>, requires_grad: bool) -> Vec<Var> {
        self.entries
            .values()
            .map(|t| graph.leaf(t.clone(), requires_grad))
            .collect()
    }

    /// Gradients of bound parameters after `graph.backward`; parameters the
    /// root did not reach get zeros.
    pub fn gradients(&self, graph: &mut Graph<T>, vars: &[Var]) -> Vec<Vec<T>> {
        self.entries
            .values()
            .zip(vars)
            .map(|(t, &v)| graph.take_grad(v).unwrap_or_else(|| vec![T::ZERO; t.numel()]))
            .collect()
    }

    pub fn cast<U: Element>(&self) -> ParamStore<U> {
        ParamStore {
            entries: self
                .entries
                .iter()
                .map(|(k, v)| (k.clone(), v.cast()))
                .collect(),
        }
    }

    /// Xavier-uniform weights (`|w| ≤ sqrt(6 / (fan_in + fan_out))`) and zero
    /// biases, drawn in store order from one seeded stream.
    pub fn init_xavier(&mut self, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (name, t) in self.entries.iter_mut() {
            if name.ends_with(".bias") {
                t.data_mut().fill(T::ZERO);
                continue;
            }
            let bound = xavier_bound(t.shape()) as f32;
            let dist = Uniform::new_inclusive(-bound, bound);
            for v in t.data_mut() {
                *v = T::from_f64(dist.sample(&mut rng) as f64);
            }
        }
    }

    pub fn zero(&mut self) {
        for t in self.entries.values_mut() {
            t.data_mut().fill(T::ZERO);
        }
    }
}

/// `sqrt(6 / (fan_in + fan_out))` for a weight of shape (C_out, C_in, k_h, k_w).
pub fn xavier_bound(weight: Shape) -> f64 {
    let receptive = weight.h * weight.w;
    let fan_in = weight.c * receptive;
    let fan_out = weight.n * receptive;
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}
