//! Non-maximum suppression along the local edge normal.

use crate::infer::EdgeProbabilityMap;

/// Radius of the triangle filter smoothing the map before orientation
/// estimation.
pub const SMOOTHING_RADIUS: usize = 4;

/// Neighbor distance, in pixels, on either side along the normal.
pub const NEIGHBOR_DISTANCE: f64 = 1.0;

/// Suppresses every pixel that is not a maximum along its edge normal.
///
/// The normal is the dominant-curvature eigenvector of the Hessian of a
/// triangle-smoothed copy of the map. Neighbors at ±1 pixel along it are bilinearly sampled from the
/// unsmoothed map. A pixel survives iff it is ≥ both neighbors and strictly
/// greater than at least one, so flat plateaus vanish. Survivors keep their
/// value; zero pixels stay zero.
pub fn nms(map: &EdgeProbabilityMap) -> EdgeProbabilityMap {
    let (h, w) = (map.height(), map.width());
    let e = map.values();
    let orientation = normal_orientation(e, h, w);
    let mut out = vec![0f32; h * w];
    for y in 0..h {
        for x in 0..w {
            let v = e[y * w + x];
            if v == 0.0 {
                continue;
            }
            let o = orientation[y * w + x];
            let (dx, dy) = (o.cos() * NEIGHBOR_DISTANCE, o.sin() * NEIGHBOR_DISTANCE);
            let n1 = interpolate(e, h, w, x as f64 + dx, y as f64 + dy);
            let n2 = interpolate(e, h, w, x as f64 - dx, y as f64 - dy);
            let v64 = v as f64;
            if v64 >= n1 && v64 >= n2 && (v64 > n1 || v64 > n2) {
                out[y * w + x] = v;
            }
        }
    }
    EdgeProbabilityMap::new(h, w, out).expect("suppression keeps values in range")
}

/// Edge-normal angle in `[0, π)` per pixel (0 points along +x).
pub fn normal_orientation(e: &[f32], h: usize, w: usize) -> Vec<f64> {
    let smooth = triangle_smooth(&e.iter().map(|&v| v as f64).collect::<Vec<_>>(), h, w, SMOOTHING_RADIUS);
    let (ox, oy) = gradient(&smooth, h, w);
    let (oxx, _) = gradient(&ox, h, w);
    let (oxy, oyy) = gradient(&oy, h, w);
    (0..h * w)
        .map(|i| {
            let (a, b, c) = (oxx[i], oxy[i], oyy[i]);
            // eigenvector of the larger algebraic eigenvalue, rotated a
            // quarter turn when the other eigenvalue dominates in magnitude
            let theta = 0.5 * (2.0 * b).atan2(a - c);
            let mean = 0.5 * (a + c);
            let radius = (0.25 * (a - c) * (a - c) + b * b).sqrt();
            let theta = if (mean - radius).abs() > (mean + radius).abs() {
                theta + std::f64::consts::FRAC_PI_2
            } else {
                theta
            };
            theta.rem_euclid(std::f64::consts::PI)
        })
        .collect()
}

/// Separable triangle filter `[1, 2, …, r+1, …, 2, 1] / (r+1)²` with
/// mirrored borders.
pub fn triangle_smooth(src: &[f64], h: usize, w: usize, r: usize) -> Vec<f64> {
    let kernel: Vec<f64> = (0..=2 * r)
        .map(|i| (r + 1 - i.abs_diff(r)) as f64 / ((r + 1) * (r + 1)) as f64)
        .collect();
    let mirror = |i: isize, n: usize| -> usize {
        let n = n as isize;
        let mut i = i;
        // reflect including the edge sample: -1 → 0, n → n-1
        loop {
            if i < 0 {
                i = -i - 1;
            } else if i >= n {
                i = 2 * n - i - 1;
            } else {
                return i as usize;
            }
        }
    };
    let mut tmp = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            tmp[y * w + x] = kernel
                .iter()
                .enumerate()
                .map(|(k, &c)| c * src[y * w + mirror(x as isize + k as isize - r as isize, w)])
                .sum();
        }
    }
    let mut out = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            out[y * w + x] = kernel
                .iter()
                .enumerate()
                .map(|(k, &c)| c * tmp[mirror(y as isize + k as isize - r as isize, h) * w + x])
                .sum();
        }
    }
    out
}

/// Central differences inside, one-sided differences on the border;
/// returns `(d/dx, d/dy)`.
fn gradient(f: &[f64], h: usize, w: usize) -> (Vec<f64>, Vec<f64>) {
    let diff = |a: f64, b: f64, span: usize| (a - b) / span as f64;
    let mut gx = vec![0.0; h * w];
    let mut gy = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if w > 1 {
                let (l, r) = (x.saturating_sub(1), (x + 1).min(w - 1));
                gx[i] = diff(f[y * w + r], f[y * w + l], r - l);
            }
            if h > 1 {
                let (t, b) = (y.saturating_sub(1), (y + 1).min(h - 1));
                gy[i] = diff(f[b * w + x], f[t * w + x], b - t);
            }
        }
    }
    (gx, gy)
}

/// Bilinear sample with coordinates clamped to the image.
fn interpolate(e: &[f32], h: usize, w: usize, x: f64, y: f64) -> f64 {
    let x = x.clamp(0.0, (w - 1) as f64);
    let y = y.clamp(0.0, (h - 1) as f64);
    let (x0, y0) = (x.floor() as usize, y.floor() as usize);
    let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
    let (fx, fy) = (x - x0 as f64, y - y0 as f64);
    let at = |yy: usize, xx: usize| e[yy * w + xx] as f64;
    let top = at(y0, x0) * (1.0 - fx) + at(y0, x1) * fx;
    let bot = at(y1, x0) * (1.0 - fx) + at(y1, x1) * fx;
    top * (1.0 - fy) + bot * fy
}
