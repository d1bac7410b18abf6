//! Edge probability maps: single-scale, multi-scale and modality-averaged.

use crate::autograd::{sigmoid, Graph};
use crate::error::{Error, Result};
use crate::model::{MsmsfNet, SIDE_OUTPUTS};
use crate::tensor::{Shape, Tensor};

/// Per-pixel edge probabilities in `[0, 1]`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeProbabilityMap {
    height: usize,
    width: usize,
    values: Vec<f32>,
}

impl EdgeProbabilityMap {
    pub fn new(height: usize, width: usize, values: Vec<f32>) -> Result<Self> {
        if values.len() != height * width {
            return Err(Error::data(format!(
                "{} values for a {height}x{width} probability map",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::data(format!("probability {v} outside [0, 1]")));
        }
        Ok(EdgeProbabilityMap { height, width, values })
    }

    pub fn constant(height: usize, width: usize, value: f32) -> Result<Self> {
        Self::new(height, width, vec![value; height * width])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f32> {
        self.values
    }

    pub fn get(&self, y: usize, x: usize) -> f32 {
        self.values[y * self.width + x]
    }

    /// `round(p · maxval)` per pixel, for 8- or 16-bit grayscale output.
    pub fn quantize(&self, maxval: u16) -> Vec<u16> {
        self.values
            .iter()
            .map(|&p| (p as f64 * maxval as f64).round() as u16)
            .collect()
    }

    fn from_logits(shape: Shape, logits: &[f32]) -> Self {
        EdgeProbabilityMap {
            height: shape.h,
            width: shape.w,
            values: logits.iter().map(|&a| sigmoid(a)).collect(),
        }
    }

    fn resized(&self, height: usize, width: usize) -> Self {
        if (height, width) == (self.height, self.width) {
            return self.clone();
        }
        let t = Tensor::from_vec(Shape::new(1, 1, self.height, self.width), self.values.clone())
            .expect("map extents match its values");
        let values = resize_bilinear(&t, height, width)
            .into_data()
            .into_iter()
            .map(|v| v.clamp(0.0, 1.0))
            .collect();
        EdgeProbabilityMap { height, width, values }
    }
}

/// The fused map and the three side maps of one forward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub fused: EdgeProbabilityMap,
    pub sides: [EdgeProbabilityMap; SIDE_OUTPUTS],
}

/// Sigmoid of every output of `net` for a single image of shape (1, C, H, W).
pub fn predict_all(net: &MsmsfNet, image: &Tensor) -> Result<Prediction> {
    let s = image.shape();
    if s.n != 1 {
        return Err(Error::config(format!("expected a single image, got shape {s}")));
    }
    let mut g = Graph::new();
    let vars = net.bind(&mut g, false);
    let x = g.constant(image.clone());
    let out = net.forward(&mut g, &vars, x)?;
    let map = |v| {
        let t = g.value(v);
        EdgeProbabilityMap::from_logits(t.shape(), t.data())
    };
    Ok(Prediction {
        fused: map(out.fused),
        sides: out.sides.map(map),
    })
}

/// The fused edge map, which is the network's final answer.
pub fn predict(net: &MsmsfNet, image: &Tensor) -> Result<EdgeProbabilityMap> {
    Ok(predict_all(net, image)?.fused)
}

/// `round(extent · scale)` with halves rounded up, never below `min`.
pub fn scaled_extent(extent: usize, scale: f64, min: usize) -> usize {
    ((extent as f64 * scale + 0.5).floor() as usize).max(min).max(1)
}

/// Predicts at every scale, resizes each map back to the image size and
/// averages them in the order given. A scale that leaves the image size
/// unchanged runs on the image itself, so `[1.0]` reproduces [`predict`].
pub fn multiscale_predict(net: &MsmsfNet, image: &Tensor, scales: &[f64]) -> Result<EdgeProbabilityMap> {
    if scales.is_empty() {
        return Err(Error::config("at least one scale is required"));
    }
    if let Some(s) = scales.iter().find(|s| !(**s > 0.0) || !s.is_finite()) {
        return Err(Error::config(format!("scale {s} must be positive")));
    }
    let shape = image.shape();
    let (h, w) = (shape.h, shape.w);
    let min = net.min_input_extent();
    let mut sum = vec![0f64; h * w];
    for &scale in scales {
        let (sh, sw) = (scaled_extent(h, scale, min), scaled_extent(w, scale, min));
        let map = if (sh, sw) == (h, w) {
            predict(net, image)?
        } else {
            predict(net, &resize_bilinear(image, sh, sw))?.resized(h, w)
        };
        for (acc, &p) in sum.iter_mut().zip(map.values()) {
            *acc += p as f64;
        }
    }
    let n = scales.len() as f64;
    let values = sum.into_iter().map(|v| ((v / n) as f32).clamp(0.0, 1.0)).collect();
    EdgeProbabilityMap::new(h, w, values)
}

/// Pixelwise mean of two maps of the same size.
pub fn modality_average(a: &EdgeProbabilityMap, b: &EdgeProbabilityMap) -> Result<EdgeProbabilityMap> {
    if (a.height, a.width) != (b.height, b.width) {
        return Err(Error::data(format!(
            "cannot average a {}x{} map with a {}x{} map",
            a.height, a.width, b.height, b.width
        )));
    }
    let values = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(&x, &y)| ((x as f64 + y as f64) / 2.0) as f32)
        .collect();
    EdgeProbabilityMap::new(a.height, a.width, values)
}

/// Bilinear resampling of every plane with half-pixel centers and clamped
/// borders.
pub fn resize_bilinear(t: &Tensor, height: usize, width: usize) -> Tensor {
    let s = t.shape();
    let ys = taps(s.h, height);
    let xs = taps(s.w, width);
    let mut out = Tensor::zeros(Shape::new(s.n, s.c, height, width));
    for n in 0..s.n {
        for c in 0..s.c {
            let src = t.plane(n, c);
            let dst = out.plane_mut(n, c);
            for (oy, &(y0, y1, fy)) in ys.iter().enumerate() {
                for (ox, &(x0, x1, fx)) in xs.iter().enumerate() {
                    let top = src[y0 * s.w + x0] as f64 * (1.0 - fx) + src[y0 * s.w + x1] as f64 * fx;
                    let bot = src[y1 * s.w + x0] as f64 * (1.0 - fx) + src[y1 * s.w + x1] as f64 * fx;
                    dst[oy * width + ox] = (top * (1.0 - fy) + bot * fy) as f32;
                }
            }
        }
    }
    out
}

/// Source index pair and blend factor for each output position.
fn taps(input: usize, output: usize) -> Vec<(usize, usize, f64)> {
    let ratio = input as f64 / output as f64;
    (0..output)
        .map(|o| {
            let src = ((o as f64 + 0.5) * ratio - 0.5).clamp(0.0, (input - 1) as f64);
            let i0 = src.floor() as usize;
            let i1 = (i0 + 1).min(input - 1);
            (i0, i1, src - i0 as f64)
        })
        .collect()
}
