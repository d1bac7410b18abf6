//! Geometric augmentation applied identically to an image and its labels.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::gt::TriStateGroundTruth;
use crate::error::{Error, Result};
use crate::tensor::{Shape, Tensor};

/// A training pair: a single image of shape (1, C, H, W) and its labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub image: Tensor,
    pub gt: TriStateGroundTruth,
}

impl Sample {
    pub fn new(image: Tensor, gt: TriStateGroundTruth) -> Result<Self> {
        let s = image.shape();
        if s.n != 1 || (s.h, s.w) != (gt.height(), gt.width()) {
            return Err(Error::data(format!(
                "image of shape {s} paired with {}x{} ground truth",
                gt.height(),
                gt.width()
            )));
        }
        Ok(Sample { image, gt })
    }

    pub fn height(&self) -> usize {
        self.gt.height()
    }

    pub fn width(&self) -> usize {
        self.gt.width()
    }

    /// Mirror left to right.
    pub fn hflip(&self) -> Sample {
        let (h, w) = (self.height(), self.width());
        self.remap(h, w, |y, x| (y, w - 1 - x))
    }

    /// Rotate 90° counter-clockwise `turns` times.
    pub fn rotate(&self, turns: u8) -> Sample {
        let mut out = self.clone();
        for _ in 0..turns % 4 {
            let (h, w) = (out.height(), out.width());
            out = out.remap(w, h, |y, x| (x, w - 1 - y));
        }
        out
    }

    pub fn crop(&self, y0: usize, x0: usize, h: usize, w: usize) -> Result<Sample> {
        if h == 0 || w == 0 || y0 + h > self.height() || x0 + w > self.width() {
            return Err(Error::data(format!(
                "crop {h}x{w} at ({y0}, {x0}) exceeds a {}x{} image",
                self.height(),
                self.width()
            )));
        }
        Ok(self.remap(h, w, |y, x| (y + y0, x + x0)))
    }

    /// Builds an `oh × ow` sample whose pixel (y, x) is read from `src(y, x)`.
    fn remap(&self, oh: usize, ow: usize, src: impl Fn(usize, usize) -> (usize, usize)) -> Sample {
        let s = self.image.shape();
        let w = s.w;
        let mut image = Tensor::zeros(Shape::new(1, s.c, oh, ow));
        let mut labels = Vec::with_capacity(oh * ow);
        for y in 0..oh {
            for x in 0..ow {
                let (sy, sx) = src(y, x);
                labels.push(self.gt.get(sy, sx));
            }
        }
        for c in 0..s.c {
            let from = self.image.plane(0, c);
            let to = image.plane_mut(0, c);
            for y in 0..oh {
                for x in 0..ow {
                    let (sy, sx) = src(y, x);
                    to[y * ow + x] = from[sy * w + sx];
                }
            }
        }
        let gt = TriStateGroundTruth::new(oh, ow, labels).expect("label count matches extents");
        Sample { image, gt }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentPolicy {
    pub hflip: bool,
    /// Add the 90°, 180° and 270° rotations.
    pub rotations: bool,
    /// Random `[h, w]` crop of every variant.
    pub crop: Option<[usize; 2]>,
}

impl AugmentPolicy {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn dihedral() -> Self {
        AugmentPolicy {
            hflip: true,
            rotations: true,
            crop: None,
        }
    }

    /// Named policies accepted by dataset manifests.
    pub fn by_id(id: &str) -> Result<Self> {
        match id {
            "none" => Ok(Self::identity()),
            "flip" => Ok(AugmentPolicy {
                hflip: true,
                ..Self::default()
            }),
            "flip-rotate" => Ok(Self::dihedral()),
            other => Err(Error::config(format!("unknown augmentation policy {other:?}"))),
        }
    }
}

/// Every flip × rotation variant of `sample` allowed by `policy`, in a fixed
/// order, each optionally cropped at a position drawn from `seed`.
pub fn augment(sample: &Sample, policy: &AugmentPolicy, seed: u64) -> Result<Vec<Sample>> {
    let flips: &[bool] = if policy.hflip { &[false, true] } else { &[false] };
    let turns: &[u8] = if policy.rotations { &[0, 1, 2, 3] } else { &[0] };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(flips.len() * turns.len());
    for &flip in flips {
        let base = if flip { sample.hflip() } else { sample.clone() };
        for &t in turns {
            let v = base.rotate(t);
            out.push(match policy.crop {
                Some([h, w]) => random_crop(&v, h, w, &mut rng)?,
                None => v,
            });
        }
    }
    Ok(out)
}

/// Crop of exactly `h × w` at a uniformly drawn position.
pub fn random_crop(sample: &Sample, h: usize, w: usize, rng: &mut impl Rng) -> Result<Sample> {
    if h > sample.height() || w > sample.width() {
        return Err(Error::data(format!(
            "crop {h}x{w} is larger than the {}x{} image",
            sample.height(),
            sample.width()
        )));
    }
    let y0 = rng.gen_range(0..=sample.height() - h);
    let x0 = rng.gen_range(0..=sample.width() - w);
    sample.crop(y0, x0, h, w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::train::gt::Label;

    fn label_histogram(gt: &TriStateGroundTruth) -> [usize; 3] {
        [gt.positives(), gt.negatives(), gt.count(Label::Ignore)]
    }

    fn sample(h: usize, w: usize) -> Sample {
        let image = Tensor::from_vec(
            Shape::new(1, 2, h, w),
            (0..2 * h * w).map(|v| v as f32).collect(),
        )
        .unwrap();
        let labels = (0..h * w)
            .map(|i| match i % 3 {
                0 => Label::Positive,
                1 => Label::Negative,
                _ => Label::Ignore,
            })
            .collect();
        Sample::new(image, TriStateGroundTruth::new(h, w, labels).unwrap()).unwrap()
    }

    #[test]
    fn identity_policy_returns_the_input() {
        let s = sample(3, 4);
        assert_eq!(augment(&s, &AugmentPolicy::identity(), 1).unwrap(), vec![s]);
    }

    #[test]
    fn flip_is_an_involution_and_four_turns_are_identity() {
        let s = sample(3, 5);
        assert_eq!(s.hflip().hflip(), s);
        assert_eq!(s.rotate(1).rotate(3), s);
        assert_eq!(s.rotate(2).rotate(2), s);
        let r = s.rotate(1);
        assert_eq!((r.height(), r.width()), (5, 3));
    }

    #[test]
    fn dihedral_policy_gives_eight_distinct_variants() {
        let s = sample(4, 4);
        let all = augment(&s, &AugmentPolicy::dihedral(), 0).unwrap();
        assert_eq!(all.len(), 8);
        for i in 0..8 {
            for j in i + 1..8 {
                assert_ne!(all[i], all[j], "variants {i} and {j} coincide");
            }
            assert_eq!(label_histogram(&all[i].gt), label_histogram(&s.gt));
        }
    }

    #[test]
    fn image_and_labels_move_together() {
        let s = sample(3, 4);
        let r = s.hflip().rotate(1);
        // the channel-0 value encodes the source pixel index
        for y in 0..r.height() {
            for x in 0..r.width() {
                let src = r.image.at(0, 0, y, x) as usize;
                assert_eq!(r.gt.get(y, x), s.gt.labels()[src]);
            }
        }
    }

    #[test]
    fn crops_are_seeded_and_bounded() {
        let s = sample(6, 7);
        let policy = AugmentPolicy {
            crop: Some([4, 4]),
            ..AugmentPolicy::dihedral()
        };
        let a = augment(&s, &policy, 9).unwrap();
        assert_eq!(a, augment(&s, &policy, 9).unwrap());
        assert!(a.iter().all(|v| (v.height(), v.width()) == (4, 4)));
        let too_big = AugmentPolicy {
            crop: Some([8, 4]),
            ..AugmentPolicy::identity()
        };
        assert!(augment(&s, &too_big, 0).is_err());
    }
}
