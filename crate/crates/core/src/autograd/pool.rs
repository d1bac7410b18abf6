//! Max pooling with `-inf` padding.

use super::conv::out_extent;
use crate::error::{Error, Result};
use crate::tensor::{Element, Shape, Tensor};

/// Window size, stride and padding of a square max-pooling layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PoolGeometry {
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
}

impl Default for PoolGeometry {
    /// 3×3 window, stride 2, padding 1: output extent is `ceil(in / 2)`.
    fn default() -> Self {
        PoolGeometry {
            kernel: 3,
            stride: 2,
            padding: 1,
        }
    }
}

impl PoolGeometry {
    pub fn output_extent(&self, input: usize) -> Option<usize> {
        if self.padding >= self.kernel {
            return None;
        }
        out_extent(input, self.kernel, self.stride, self.padding)
    }
}

/// Returns the pooled tensor and, per output element, the flat input index
/// of the selected maximum (first in row-major order on ties).
pub(crate) fn forward<T: Element>(x: &Tensor<T>, g: PoolGeometry) -> Result<(Tensor<T>, Vec<usize>)> {
    let s = x.shape();
    let (Some(oh), Some(ow)) = (g.output_extent(s.h), g.output_extent(s.w)) else {
        return Err(Error::config(format!(
            "max-pool {:?} cannot be applied to input of shape {s}",
            g
        )));
    };
    let os = Shape::new(s.n, s.c, oh, ow);
    let mut out = Tensor::zeros(os);
    let mut argmax = Vec::with_capacity(os.numel());
    let data = x.data();
    for n in 0..s.n {
        for c in 0..s.c {
            let base = (n * s.c + c) * s.plane();
            for oy in 0..oh {
                let y0 = (oy * g.stride) as isize - g.padding as isize;
                for ox in 0..ow {
                    let x0 = (ox * g.stride) as isize - g.padding as isize;
                    let mut best = T::NEG_INFINITY;
                    let mut best_idx = usize::MAX;
                    for dy in 0..g.kernel as isize {
                        let iy = y0 + dy;
                        if iy < 0 || iy >= s.h as isize {
                            continue;
                        }
                        for dx in 0..g.kernel as isize {
                            let ix = x0 + dx;
                            if ix < 0 || ix >= s.w as isize {
                                continue;
                            }
                            let idx = base + iy as usize * s.w + ix as usize;
                            if best_idx == usize::MAX || data[idx] > best {
                                best = data[idx];
                                best_idx = idx;
                            }
                        }
                    }
                    let o = out.index(n, c, oy, ox);
                    out.data_mut()[o] = best;
                    argmax.push(best_idx);
                }
            }
        }
    }
    Ok((out, argmax))
}

pub(crate) fn backward<T: Element>(input_len: usize, argmax: &[usize], grad_out: &[T]) -> Vec<T> {
    let mut gx = vec![T::ZERO; input_len];
    for (&i, &g) in argmax.iter().zip(grad_out) {
        gx[i] += g;
    }
    gx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumerated_windows_on_ramp() {
        let x = Tensor::<f32>::from_vec(Shape::new(1, 1, 4, 4), (1..=16).map(|v| v as f32).collect())
            .unwrap();
        let (y, _) = forward(&x, PoolGeometry::default()).unwrap();
        assert_eq!(y.shape(), Shape::new(1, 1, 2, 2));
        assert_eq!(y.data(), &[6., 8., 14., 16.]);
    }

    #[test]
    fn odd_extent_rounds_up() {
        let x = Tensor::<f32>::zeros(Shape::new(1, 1, 5, 7));
        let (y, _) = forward(&x, PoolGeometry::default()).unwrap();
        assert_eq!((y.shape().h, y.shape().w), (3, 4));
    }

    #[test]
    fn ties_pick_first_in_scan_order() {
        let x = Tensor::<f32>::full(Shape::new(1, 1, 2, 2), 1.0);
        let (_, arg) = forward(&x, PoolGeometry::default()).unwrap();
        assert_eq!(arg, vec![0]);
    }
}
