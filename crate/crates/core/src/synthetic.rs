//! Procedural images with exact edge ground truth.
//!
//! Each image has a dark, flat background with bright filled rectangles
//! and one-pixel straight strokes. Edges are the rectangles' inner
//! boundaries plus the strokes, thinned so that the benchmark's thinning
//! leaves them unchanged.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::eval::thin;
use crate::tensor::{Shape, Tensor};
use crate::train::{Sample, TriStateGroundTruth};

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticImage {
    /// RGB in `[0, 1]`, shape (1, 3, size, size).
    pub image: Tensor,
    pub edges: Vec<bool>,
}

impl SyntheticImage {
    pub fn size(&self) -> usize {
        self.image.shape().h
    }

    pub fn to_sample(&self) -> Result<Sample> {
        let n = self.size();
        Sample::new(self.image.clone(), TriStateGroundTruth::from_binary(n, n, &self.edges)?)
    }
}

/// `count` images of `size × size`; the same seed gives the same set.
pub fn generate(count: usize, size: usize, seed: u64) -> Vec<SyntheticImage> {
    (0..count)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(1_000_003).wrapping_add(i as u64));
            draw(size, &mut rng)
        })
        .collect()
}

fn draw(n: usize, rng: &mut ChaCha8Rng) -> SyntheticImage {
    let background: [f32; 3] = std::array::from_fn(|_| rng.gen_range(0.05..0.3));
    // 0 = background, k = shape k
    let mut owner = vec![0u32; n * n];
    let mut color = vec![background];
    let mut edges = vec![false; n * n];
    // keeps shapes one pixel apart so boundaries never touch
    let free = |owner: &[u32], y0: usize, x0: usize, y1: usize, x1: usize| {
        (y0.saturating_sub(2)..(y1 + 2).min(n)).all(|y| (x0.saturating_sub(2)..(x1 + 2).min(n)).all(|x| owner[y * n + x] == 0))
    };
    let min_side = (n / 8).max(3);
    let max_side = (n / 3).max(min_side + 1);

    let rects = rng.gen_range(2..=3);
    let mut placed = 0;
    for _ in 0..200 {
        if placed == rects {
            break;
        }
        let (h, w) = (rng.gen_range(min_side..max_side), rng.gen_range(min_side..max_side));
        let (y0, x0) = (rng.gen_range(1..n - h - 1), rng.gen_range(1..n - w - 1));
        if !free(&owner, y0, x0, y0 + h, x0 + w) {
            continue;
        }
        color.push(std::array::from_fn(|_| rng.gen_range(0.6..1.0)));
        let id = color.len() as u32 - 1;
        for y in y0..y0 + h {
            for x in x0..x0 + w {
                owner[y * n + x] = id;
                edges[y * n + x] = y == y0 || y == y0 + h - 1 || x == x0 || x == x0 + w - 1;
            }
        }
        placed += 1;
    }

    let strokes = rng.gen_range(1..=2);
    placed = 0;
    for _ in 0..200 {
        if placed == strokes {
            break;
        }
        let len = rng.gen_range(min_side..max_side);
        let dir = rng.gen_range(0..3);
        let (dy, dx) = [(0, 1), (1, 0), (1, 1)][dir];
        let (y0, x0) = (rng.gen_range(1..n - len * dy - 1), rng.gen_range(1..n - len * dx - 1));
        let (y1, x1) = (y0 + len * dy, x0 + len * dx);
        if !free(&owner, y0, x0, y1 + 1, x1 + 1) {
            continue;
        }
        color.push(std::array::from_fn(|_| rng.gen_range(0.6..1.0)));
        let id = color.len() as u32 - 1;
        for k in 0..len {
            let (y, x) = (y0 + k * dy, x0 + k * dx);
            owner[y * n + x] = id;
            edges[y * n + x] = true;
        }
        placed += 1;
    }

    thin(&mut edges, n, n);
    let mut image = Tensor::zeros(Shape::new(1, 3, n, n));
    for c in 0..3 {
        let plane = image.plane_mut(0, c);
        for (p, &o) in plane.iter_mut().zip(&owner) {
            *p = color[o as usize][c];
        }
    }
    SyntheticImage { image, edges }
}
