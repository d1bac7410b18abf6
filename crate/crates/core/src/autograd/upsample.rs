//! Fixed bilinear upsampling, realized as a transposed convolution with the
//! classic bilinear kernel and a symmetric crop to exactly `factor × size`.
//!
//! Near the borders only part of the kernel overlaps the input; outputs there
//! are divided by the sum of the contributing taps, so constant maps stay
//! constant everywhere.

use crate::error::{Error, Result};
use crate::tensor::{Element, Shape, Tensor};

/// 1-D bilinear kernel of length `2·factor − factor mod 2`, centered at
/// `(len − 1)/2`: `w[i] = 1 − |i − center| / factor`.
pub fn bilinear_kernel(factor: usize) -> Vec<f64> {
    let len = 2 * factor - factor % 2;
    let center = (len as f64 - 1.0) / 2.0;
    (0..len)
        .map(|i| 1.0 - (i as f64 - center).abs() / factor as f64)
        .collect()
}

/// Sparse rows of the normalized 1-D upsampling operator: for each output
/// index, the contributing `(input index, weight)` pairs.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Interp1d {
    rows: Vec<Vec<(usize, f64)>>,
    in_len: usize,
}

impl Interp1d {
    pub(crate) fn new(in_len: usize, factor: usize) -> Self {
        let kernel = bilinear_kernel(factor);
        let crop = (kernel.len() - factor) / 2;
        let out_len = in_len * factor;
        let rows = (0..out_len)
            .map(|o| {
                let pos = o + crop;
                let mut taps: Vec<(usize, f64)> = (0..in_len)
                    .filter_map(|i| {
                        let k = pos.checked_sub(i * factor)?;
                        let w = *kernel.get(k)?;
                        (w > 0.0).then_some((i, w))
                    })
                    .collect();
                let total: f64 = taps.iter().map(|t| t.1).sum();
                for t in &mut taps {
                    t.1 /= total;
                }
                taps
            })
            .collect();
        Interp1d { rows, in_len }
    }

    fn out_len(&self) -> usize {
        self.rows.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Upsampler {
    factor: usize,
    ys: Interp1d,
    xs: Interp1d,
}

impl Upsampler {
    pub(crate) fn new(input: Shape, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::config("bilinear upsampling factor must be at least 1"));
        }
        Ok(Upsampler {
            factor,
            ys: Interp1d::new(input.h, factor),
            xs: Interp1d::new(input.w, factor),
        })
    }

    pub(crate) fn output_shape(&self, input: Shape) -> Shape {
        Shape::new(input.n, input.c, input.h * self.factor, input.w * self.factor)
    }

    pub(crate) fn forward<T: Element>(&self, x: &Tensor<T>) -> Tensor<T> {
        let s = x.shape();
        debug_assert_eq!((s.h, s.w), (self.ys.in_len, self.xs.in_len));
        let os = self.output_shape(s);
        let mut out = Tensor::zeros(os);
        let mut rows = vec![T::ZERO; s.h * os.w];
        for n in 0..s.n {
            for c in 0..s.c {
                let plane = x.plane(n, c);
                for iy in 0..s.h {
                    let src = &plane[iy * s.w..(iy + 1) * s.w];
                    let dst = &mut rows[iy * os.w..(iy + 1) * os.w];
                    for (d, taps) in dst.iter_mut().zip(&self.xs.rows) {
                        let mut acc = T::ZERO;
                        for &(i, w) in taps {
                            acc += T::from_f64(w) * src[i];
                        }
                        *d = acc;
                    }
                }
                let dst = out.plane_mut(n, c);
                for (oy, taps) in self.ys.rows.iter().enumerate() {
                    let orow = &mut dst[oy * os.w..(oy + 1) * os.w];
                    for &(iy, w) in taps {
                        let w = T::from_f64(w);
                        for (o, &v) in orow.iter_mut().zip(&rows[iy * os.w..(iy + 1) * os.w]) {
                            *o += w * v;
                        }
                    }
                }
            }
        }
        out
    }

    pub(crate) fn backward<T: Element>(&self, input: Shape, grad_out: &[T]) -> Vec<T> {
        let os = self.output_shape(input);
        let mut gx = vec![T::ZERO; input.numel()];
        let mut rows = vec![T::ZERO; input.h * os.w];
        for nc in 0..input.n * input.c {
            let go = &grad_out[nc * os.plane()..(nc + 1) * os.plane()];
            rows.fill(T::ZERO);
            for (oy, taps) in self.ys.rows.iter().enumerate() {
                let grow = &go[oy * os.w..(oy + 1) * os.w];
                for &(iy, w) in taps {
                    let w = T::from_f64(w);
                    for (r, &g) in rows[iy * os.w..(iy + 1) * os.w].iter_mut().zip(grow) {
                        *r += w * g;
                    }
                }
            }
            let dst = &mut gx[nc * input.plane()..(nc + 1) * input.plane()];
            for iy in 0..input.h {
                let src = &rows[iy * os.w..(iy + 1) * os.w];
                let drow = &mut dst[iy * input.w..(iy + 1) * input.w];
                for (ox, taps) in self.xs.rows.iter().enumerate() {
                    for &(ix, w) in taps {
                        drow[ix] += T::from_f64(w) * src[ox];
                    }
                }
            }
        }
        debug_assert_eq!(self.ys.out_len(), os.h);
        gx
    }
}
