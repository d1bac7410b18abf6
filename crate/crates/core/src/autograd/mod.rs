//! Minimal reverse-mode differentiation over rank-4 tensors.
//!
//! A [`Graph`] is a tape: every operation appends a node holding its value
//! and enough saved state to run its vector-Jacobian product. Node order is
//! a topological order, so [`Graph::backward`] is a single reverse sweep.

pub mod conv;
pub mod finite_diff;
pub mod pool;
pub mod upsample;

use crate::error::{Error, Result};
use crate::tensor::{Element, Shape, Tensor};

pub use conv::{ConvGeometry, ConvParams};
pub use finite_diff::finite_diff_gradient;
pub use pool::PoolGeometry;
pub use upsample::bilinear_kernel;

use upsample::Upsampler;

/// Handle to a node on a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn id(self) -> usize {
        self.0
    }
}

/// Per-pixel supervision for [`Graph::weighted_logistic`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogisticTarget {
    pub positive: bool,
    /// Weight of this pixel's cross-entropy term; zero drops the pixel.
    pub weight: f64,
}

enum Op {
    Leaf,
    Conv2d {
        input: Var,
        weight: Var,
        bias: Option<Var>,
        geometry: ConvGeometry,
    },
    MaxPool {
        input: Var,
        argmax: Vec<usize>,
    },
    Relu(Var),
    Sigmoid(Var),
    Upsample {
        input: Var,
        upsampler: Upsampler,
    },
    Crop {
        input: Var,
    },
    Concat(Vec<Var>),
    Mul(Var, Var),
    Sum(Var),
    Linear(Vec<(Var, f64)>),
    WeightedLogistic {
        input: Var,
        targets: Vec<LogisticTarget>,
    },
}

struct Node<T: Element> {
    value: Tensor<T>,
    op: Op,
    requires_grad: bool,
}

/// Tape of recorded tensor operations.
pub struct Graph<T: Element = f32> {
    nodes: Vec<Node<T>>,
}

impl<T: Element> Default for Graph<T> {
    fn default() -> Self {
        Graph::new()
    }
}

impl<T: Element> Graph<T> {
    pub fn new() -> Self {
        Graph { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor<T>, op: Op, inputs: &[Var]) -> Var {
        let requires_grad = inputs.iter().any(|v| self.nodes[v.0].requires_grad);
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    /// Input or parameter tensor. Gradients are kept only for leaves created
    /// with `requires_grad`.
    pub fn leaf(&mut self, value: Tensor<T>, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn constant(&mut self, value: Tensor<T>) -> Var {
        self.leaf(value, false)
    }

    pub fn param(&mut self, value: Tensor<T>) -> Var {
        self.leaf(value, true)
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> Shape {
        self.nodes[v.0].value.shape()
    }

    /// Gradient of the last [`backward`](Self::backward) root with respect to
    /// leaf `v`, if it was reached.
    pub fn grad(&self, v: Var) -> Option<&[T]> {
        self.nodes[v.0].value.grad()
    }

    pub fn take_grad(&mut self, v: Var) -> Option<Vec<T>> {
        self.nodes[v.0].value.take_grad()
    }

    /// Cross-correlation with optional per-output-channel bias of shape
    /// `(1, C_out, 1, 1)`.
    pub fn conv2d(
        &mut self,
        input: Var,
        weight: Var,
        bias: Option<Var>,
        geometry: ConvGeometry,
    ) -> Result<Var> {
        let out = conv::forward(
            self.value(input),
            self.value(weight),
            bias.map(|b| self.value(b)),
            geometry,
        )?;
        let mut inputs = vec![input, weight];
        inputs.extend(bias);
        Ok(self.push(
            out,
            Op::Conv2d {
                input,
                weight,
                bias,
                geometry,
            },
            &inputs,
        ))
    }

    pub fn max_pool(&mut self, input: Var, geometry: PoolGeometry) -> Result<Var> {
        let (out, argmax) = pool::forward(self.value(input), geometry)?;
        Ok(self.push(out, Op::MaxPool { input, argmax }, &[input]))
    }

    pub fn relu(&mut self, input: Var) -> Var {
        let out = self.value(input).map(|v| if v > T::ZERO { v } else { T::ZERO });
        self.push(out, Op::Relu(input), &[input])
    }

    pub fn sigmoid(&mut self, input: Var) -> Var {
        let out = self.value(input).map(sigmoid);
        self.push(out, Op::Sigmoid(input), &[input])
    }

    /// Fixed bilinear upsampling by an integer factor; output is exactly
    /// `factor·H × factor·W`.
    pub fn bilinear_upsample(&mut self, input: Var, factor: usize) -> Result<Var> {
        let upsampler = Upsampler::new(self.shape(input), factor)?;
        let out = upsampler.forward(self.value(input));
        Ok(self.push(out, Op::Upsample { input, upsampler }, &[input]))
    }

    /// Keeps the top-left `h × w` window.
    pub fn crop(&mut self, input: Var, h: usize, w: usize) -> Result<Var> {
        let s = self.shape(input);
        if h > s.h || w > s.w || h == 0 || w == 0 {
            return Err(Error::config(format!("cannot crop {s} to {h}x{w}")));
        }
        if (h, w) == (s.h, s.w) {
            return Ok(input);
        }
        let src = self.value(input);
        let mut out = Tensor::zeros(Shape::new(s.n, s.c, h, w));
        for n in 0..s.n {
            for c in 0..s.c {
                let plane = src.plane(n, c);
                let dst = out.plane_mut(n, c);
                for y in 0..h {
                    dst[y * w..(y + 1) * w].copy_from_slice(&plane[y * s.w..y * s.w + w]);
                }
            }
        }
        Ok(self.push(out, Op::Crop { input }, &[input]))
    }

    pub fn concat_channels(&mut self, inputs: &[Var]) -> Result<Var> {
        let first = *inputs
            .first()
            .ok_or_else(|| Error::config("concat of an empty list"))?;
        let s0 = self.shape(first);
        let mut channels = 0;
        for &v in inputs {
            let s = self.shape(v);
            if (s.n, s.h, s.w) != (s0.n, s0.h, s0.w) {
                return Err(Error::config(format!(
                    "concat_channels: shapes {s0} and {s} differ outside the channel axis"
                )));
            }
            channels += s.c;
        }
        let mut out = Tensor::zeros(Shape::new(s0.n, channels, s0.h, s0.w));
        let plane = s0.plane();
        for n in 0..s0.n {
            let mut c0 = 0;
            for &v in inputs {
                let t = &self.nodes[v.0].value;
                let c = t.shape().c;
                let src = &t.data()[n * c * plane..(n + 1) * c * plane];
                let start = (n * channels + c0) * plane;
                out.data_mut()[start..start + c * plane].copy_from_slice(src);
                c0 += c;
            }
        }
        Ok(self.push(out, Op::Concat(inputs.to_vec()), inputs))
    }

    /// Elementwise product of equally shaped tensors.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa != sb {
            return Err(Error::config(format!("mul of shapes {sa} and {sb}")));
        }
        let data = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(&x, &y)| x * y)
            .collect();
        let out = Tensor::from_vec(sa, data)?;
        Ok(self.push(out, Op::Mul(a, b), &[a, b]))
    }

    /// Sum of all elements, accumulated in 64-bit.
    pub fn sum(&mut self, input: Var) -> Var {
        let s: f64 = self.value(input).data().iter().map(|v| v.to_f64()).sum();
        self.push(Tensor::scalar(T::from_f64(s)), Op::Sum(input), &[input])
    }

    /// `Σ coef·x` over scalar nodes.
    pub fn linear_combination(&mut self, terms: &[(Var, f64)]) -> Result<Var> {
        let mut s = 0.0;
        for &(v, c) in terms {
            s += c * self.value(v).item()?.to_f64();
        }
        let inputs: Vec<Var> = terms.iter().map(|t| t.0).collect();
        Ok(self.push(Tensor::scalar(T::from_f64(s)), Op::Linear(terms.to_vec()), &inputs))
    }

    /// `Σ_j w_j · CE(σ(x_j), y_j)` in the stable log-sigmoid form. Pixels with
    /// zero weight are skipped entirely.
    pub fn weighted_logistic(&mut self, input: Var, targets: Vec<LogisticTarget>) -> Result<Var> {
        let x = self.value(input);
        if targets.len() != x.numel() {
            return Err(Error::config(format!(
                "{} logistic targets for logits of shape {}",
                targets.len(),
                x.shape()
            )));
        }
        let mut s = 0.0;
        for (&a, t) in x.data().iter().zip(&targets) {
            if t.weight == 0.0 {
                continue;
            }
            let a = a.to_f64();
            let z = if t.positive { -a } else { a };
            s += t.weight * softplus(z);
        }
        Ok(self.push(
            Tensor::scalar(T::from_f64(s)),
            Op::WeightedLogistic { input, targets },
            &[input],
        ))
    }

    /// Reverse sweep from a scalar root. Afterwards every gradient-requiring
    /// leaf reached from `root` carries its gradient.
    pub fn backward(&mut self, root: Var) -> Result<()> {
        let rs = self.shape(root);
        if rs.numel() != 1 {
            return Err(Error::config(format!(
                "backward requires a scalar root, got shape {rs}"
            )));
        }
        for node in &mut self.nodes {
            node.value.take_grad();
        }
        let mut grads: Vec<Option<Vec<T>>> = (0..=root.0).map(|_| None).collect();
        grads[root.0] = Some(vec![T::ONE]);
        for id in (0..=root.0).rev() {
            let Some(g) = grads[id].take() else {
                continue;
            };
            if !self.nodes[id].requires_grad {
                continue;
            }
            if let Op::Leaf = self.nodes[id].op {
                self.nodes[id].value.set_grad(g)?;
                continue;
            }
            for (v, contrib) in self.vjp(id, &g) {
                match &mut grads[v.0] {
                    Some(acc) => {
                        for (a, c) in acc.iter_mut().zip(contrib) {
                            *a += c;
                        }
                    }
                    slot @ None => *slot = Some(contrib),
                }
            }
        }
        Ok(())
    }

    fn wants(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn vjp(&self, id: usize, g: &[T]) -> Vec<(Var, Vec<T>)> {
        let node = &self.nodes[id];
        let mut out = Vec::new();
        match &node.op {
            Op::Leaf => {}
            Op::Conv2d {
                input,
                weight,
                bias,
                geometry,
            } => {
                let want = (
                    self.wants(*input),
                    self.wants(*weight),
                    bias.is_some_and(|b| self.wants(b)),
                );
                let grads = conv::backward(self.value(*input), self.value(*weight), *geometry, g, want);
                if let Some(gx) = grads.input {
                    out.push((*input, gx));
                }
                if let Some(gw) = grads.weight {
                    out.push((*weight, gw));
                }
                if let (Some(b), Some(gb)) = (bias, grads.bias) {
                    out.push((*b, gb));
                }
            }
            Op::MaxPool { input, argmax } => {
                out.push((*input, pool::backward(self.value(*input).numel(), argmax, g)));
            }
            Op::Relu(input) => {
                let x = self.value(*input).data();
                let gx = x
                    .iter()
                    .zip(g)
                    .map(|(&x, &g)| if x > T::ZERO { g } else { T::ZERO })
                    .collect();
                out.push((*input, gx));
            }
            Op::Sigmoid(input) => {
                let y = node.value.data();
                let gx = y.iter().zip(g).map(|(&y, &g)| g * y * (T::ONE - y)).collect();
                out.push((*input, gx));
            }
            Op::Upsample { input, upsampler } => {
                out.push((*input, upsampler.backward(self.shape(*input), g)));
            }
            Op::Crop { input } => {
                let s = self.shape(*input);
                let os = node.value.shape();
                let mut gx = vec![T::ZERO; s.numel()];
                for nc in 0..s.n * s.c {
                    for y in 0..os.h {
                        let src = &g[nc * os.plane() + y * os.w..nc * os.plane() + (y + 1) * os.w];
                        let start = nc * s.plane() + y * s.w;
                        gx[start..start + os.w].copy_from_slice(src);
                    }
                }
                out.push((*input, gx));
            }
            Op::Concat(inputs) => {
                let os = node.value.shape();
                let plane = os.plane();
                let mut c0 = 0;
                for &v in inputs {
                    let c = self.shape(v).c;
                    if self.wants(v) {
                        let mut gx = Vec::with_capacity(os.n * c * plane);
                        for n in 0..os.n {
                            let start = (n * os.c + c0) * plane;
                            gx.extend_from_slice(&g[start..start + c * plane]);
                        }
                        out.push((v, gx));
                    }
                    c0 += c;
                }
            }
            Op::Mul(a, b) => {
                if self.wants(*a) {
                    let gb = self.value(*b).data();
                    out.push((*a, g.iter().zip(gb).map(|(&g, &y)| g * y).collect()));
                }
                if self.wants(*b) {
                    let ga = self.value(*a).data();
                    out.push((*b, g.iter().zip(ga).map(|(&g, &x)| g * x).collect()));
                }
            }
            Op::Sum(input) => {
                out.push((*input, vec![g[0]; self.value(*input).numel()]));
            }
            Op::Linear(terms) => {
                for &(v, c) in terms {
                    if self.wants(v) {
                        out.push((v, vec![g[0] * T::from_f64(c)]));
                    }
                }
            }
            Op::WeightedLogistic { input, targets } => {
                let x = self.value(*input).data();
                let g0 = g[0].to_f64();
                let gx = x
                    .iter()
                    .zip(targets)
                    .map(|(&a, t)| {
                        if t.weight == 0.0 {
                            return T::ZERO;
                        }
                        let p = sigmoid(a.to_f64());
                        let d = if t.positive { p - 1.0 } else { p };
                        T::from_f64(g0 * t.weight * d)
                    })
                    .collect();
                out.push((*input, gx));
            }
        }
        out.retain(|(v, _)| self.wants(*v));
        out
    }
}

/// Logistic function, evaluated without overflow for large `|x|`.
#[inline]
pub fn sigmoid<T: Element>(x: T) -> T {
    let v = x.to_f64();
    let s = if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    };
    T::from_f64(s)
}

/// `ln(1 + e^z)`.
#[inline]
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// One-shot convolution outside a recorded graph.
pub fn conv2d<T: Element>(input: &Tensor<T>, params: &ConvParams<T>) -> Result<Tensor<T>> {
    let bias = params.bias_tensor();
    conv::forward(input, &params.weight, Some(&bias), params.geometry)
}

#[cfg(test)]
mod tests;
