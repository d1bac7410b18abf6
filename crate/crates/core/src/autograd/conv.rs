//! Direct 2-D cross-correlation kernels with arbitrary (including 1×n and n×1)
//! kernel shapes.

use crate::error::{Error, Result};
use crate::tensor::{Element, Shape, Tensor};

/// Stride and zero padding of a convolution, as (vertical, horizontal) pairs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvGeometry {
    pub stride: (usize, usize),
    pub padding: (usize, usize),
}

impl ConvGeometry {
    /// Unit stride with padding that preserves resolution for odd kernels.
    pub fn same(kh: usize, kw: usize) -> Self {
        ConvGeometry {
            stride: (1, 1),
            padding: (kh / 2, kw / 2),
        }
    }
}

/// Weights, bias and geometry of one convolution layer.
#[derive(Clone, Debug)]
pub struct ConvParams<T: Element = f32> {
    /// Shape (C_out, C_in, k_h, k_w).
    pub weight: Tensor<T>,
    /// Length C_out.
    pub bias: Vec<T>,
    pub geometry: ConvGeometry,
}

impl<T: Element> ConvParams<T> {
    pub fn new(weight: Tensor<T>, bias: Vec<T>, geometry: ConvGeometry) -> Result<Self> {
        if bias.len() != weight.shape().n {
            return Err(Error::config(format!(
                "bias of length {} for weight of shape {}",
                bias.len(),
                weight.shape()
            )));
        }
        Ok(ConvParams {
            weight,
            bias,
            geometry,
        })
    }

    pub fn output_shape(&self, input: Shape) -> Result<Shape> {
        conv_output_shape(input, self.weight.shape(), self.geometry)
    }

    pub fn bias_tensor(&self) -> Tensor<T> {
        Tensor::from_vec(Shape::new(1, self.bias.len(), 1, 1), self.bias.clone())
            .expect("bias length matches shape")
    }
}

/// `floor((in + 2·pad − k)/stride) + 1`, or `None` when the padded input is
/// smaller than the kernel.
pub fn out_extent(input: usize, kernel: usize, stride: usize, pad: usize) -> Option<usize> {
    let padded = input + 2 * pad;
    if stride == 0 || kernel == 0 || padded < kernel {
        None
    } else {
        Some((padded - kernel) / stride + 1)
    }
}

pub fn conv_output_shape(input: Shape, weight: Shape, g: ConvGeometry) -> Result<Shape> {
    if input.c != weight.c {
        return Err(Error::config(format!(
            "conv2d input of shape {input} does not match weight of shape {weight}"
        )));
    }
    let oh = out_extent(input.h, weight.h, g.stride.0, g.padding.0);
    let ow = out_extent(input.w, weight.w, g.stride.1, g.padding.1);
    match (oh, ow) {
        (Some(oh), Some(ow)) => Ok(Shape::new(input.n, weight.n, oh, ow)),
        _ => Err(Error::config(format!(
            "conv2d input of shape {input} is smaller than kernel of shape {weight} with padding {:?}",
            g.padding
        ))),
    }
}

/// Output positions `o` in `[lo, hi)` for which `o·stride + k − pad` lands
/// inside `[0, in_len)`.
#[inline]
fn valid_range(out_len: usize, in_len: usize, stride: usize, k: usize, pad: usize) -> (usize, usize) {
    let lo = if pad > k {
        (pad - k).div_ceil(stride)
    } else {
        0
    };
    let hi = if in_len + pad < k + 1 {
        0
    } else {
        (in_len + pad - k - 1) / stride + 1
    };
    let hi = hi.min(out_len);
    (lo.min(hi), hi)
}

pub(crate) fn forward<T: Element>(
    x: &Tensor<T>,
    w: &Tensor<T>,
    b: Option<&Tensor<T>>,
    g: ConvGeometry,
) -> Result<Tensor<T>> {
    let xs = x.shape();
    let ws = w.shape();
    let os = conv_output_shape(xs, ws, g)?;
    if let Some(b) = b {
        if b.numel() != ws.n {
            return Err(Error::config(format!(
                "conv2d bias of shape {} does not match weight of shape {ws}",
                b.shape()
            )));
        }
    }
    let (sy, sx) = g.stride;
    let (py, px) = g.padding;
    let mut out = Tensor::zeros(os);
    for n in 0..xs.n {
        for co in 0..ws.n {
            let bias = b.map_or(T::ZERO, |b| b.data()[co]);
            let out_plane = out.plane_mut(n, co);
            out_plane.fill(bias);
            for ci in 0..xs.c {
                let in_plane = x.plane(n, ci);
                for ky in 0..ws.h {
                    let (ylo, yhi) = valid_range(os.h, xs.h, sy, ky, py);
                    for kx in 0..ws.w {
                        let wv = w.at(co, ci, ky, kx);
                        let (xlo, xhi) = valid_range(os.w, xs.w, sx, kx, px);
                        if xlo >= xhi {
                            continue;
                        }
                        for oy in ylo..yhi {
                            let iy = oy * sy + ky - py;
                            let orow = &mut out_plane[oy * os.w + xlo..oy * os.w + xhi];
                            let irow = &in_plane[iy * xs.w..(iy + 1) * xs.w];
                            if sx == 1 {
                                let ix0 = xlo + kx - px;
                                let len = orow.len();
                                for (o, &i) in orow.iter_mut().zip(&irow[ix0..ix0 + len]) {
                                    *o += wv * i;
                                }
                            } else {
                                for (j, o) in orow.iter_mut().enumerate() {
                                    *o += wv * irow[(xlo + j) * sx + kx - px];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

pub(crate) struct ConvGrads<T> {
    pub input: Option<Vec<T>>,
    pub weight: Option<Vec<T>>,
    pub bias: Option<Vec<T>>,
}

/// Vector-Jacobian product of [`forward`] for the requested operands.
pub(crate) fn backward<T: Element>(
    x: &Tensor<T>,
    w: &Tensor<T>,
    g: ConvGeometry,
    grad_out: &[T],
    want: (bool, bool, bool),
) -> ConvGrads<T> {
    let xs = x.shape();
    let ws = w.shape();
    let os = conv_output_shape(xs, ws, g).expect("shape validated in forward");
    let (sy, sx) = g.stride;
    let (py, px) = g.padding;
    let mut gx = want.0.then(|| vec![T::ZERO; xs.numel()]);
    let mut gw = want.1.then(|| vec![T::ZERO; ws.numel()]);
    let mut gb = want.2.then(|| vec![T::ZERO; ws.n]);
    let op = os.plane();
    let ip = xs.plane();
    for n in 0..xs.n {
        for co in 0..ws.n {
            let go_plane = &grad_out[(n * os.c + co) * op..(n * os.c + co + 1) * op];
            if let Some(gb) = gb.as_mut() {
                let mut s = T::ZERO;
                for &v in go_plane {
                    s += v;
                }
                gb[co] += s;
            }
            for ci in 0..xs.c {
                let in_off = (n * xs.c + ci) * ip;
                let in_plane = x.plane(n, ci);
                for ky in 0..ws.h {
                    let (ylo, yhi) = valid_range(os.h, xs.h, sy, ky, py);
                    for kx in 0..ws.w {
                        let (xlo, xhi) = valid_range(os.w, xs.w, sx, kx, px);
                        if xlo >= xhi {
                            continue;
                        }
                        let widx = w.index(co, ci, ky, kx);
                        let wv = w.data()[widx];
                        let mut acc = T::ZERO;
                        for oy in ylo..yhi {
                            let iy = oy * sy + ky - py;
                            let gorow = &go_plane[oy * os.w + xlo..oy * os.w + xhi];
                            if sx == 1 {
                                let ix0 = xlo + kx - px;
                                let len = gorow.len();
                                if let Some(gx) = gx.as_mut() {
                                    let start = in_off + iy * xs.w + ix0;
                                    for (d, &v) in gx[start..start + len].iter_mut().zip(gorow) {
                                        *d += wv * v;
                                    }
                                }
                                if gw.is_some() {
                                    let irow = &in_plane[iy * xs.w + ix0..iy * xs.w + ix0 + len];
                                    for (&a, &b) in gorow.iter().zip(irow) {
                                        acc += a * b;
                                    }
                                }
                            } else {
                                for (j, &v) in gorow.iter().enumerate() {
                                    let ix = (xlo + j) * sx + kx - px;
                                    if let Some(gx) = gx.as_mut() {
                                        gx[in_off + iy * xs.w + ix] += wv * v;
                                    }
                                    acc += v * in_plane[iy * xs.w + ix];
                                }
                            }
                        }
                        if let Some(gw) = gw.as_mut() {
                            gw[widx] += acc;
                        }
                    }
                }
            }
        }
    }
    ConvGrads {
        input: gx,
        weight: gw,
        bias: gb,
    }
}
