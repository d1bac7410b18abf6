//! Declarative architecture description.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One convolution inside a block: kernel `[k_h, k_w]` and output width.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvStage {
    pub kernel: [usize; 2],
    pub out_channels: usize,
}

impl ConvStage {
    pub fn row(n: usize, out_channels: usize) -> Self {
        ConvStage {
            kernel: [1, n],
            out_channels,
        }
    }

    pub fn column(n: usize, out_channels: usize) -> Self {
        ConvStage {
            kernel: [n, 1],
            out_channels,
        }
    }

    /// Number of kernel weights (bias excluded) when fed `in_channels`.
    pub fn weight_count(&self, in_channels: usize) -> usize {
        self.kernel[0] * self.kernel[1] * in_channels * self.out_channels
    }

    fn is_asymmetric(&self) -> bool {
        let [h, w] = self.kernel;
        (h == 1) != (w == 1)
    }
}

/// A stack of asymmetric convolutions without activations.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchSpec {
    pub stages: Vec<ConvStage>,
}

impl BranchSpec {
    /// `(1×k, k×1)` pairs applied `pairs` times: receptive field `1 + 2·pairs·(k−1)/2`.
    pub fn stacked_pairs(k: usize, pairs: usize, out_channels: usize) -> Self {
        let stages = (0..pairs)
            .flat_map(|_| [ConvStage::row(k, out_channels), ConvStage::column(k, out_channels)])
            .collect();
        BranchSpec { stages }
    }

    /// Effective receptive field `(height, width)`.
    pub fn receptive_field(&self) -> (usize, usize) {
        stages_receptive_field(&self.stages)
    }

    pub fn out_channels(&self) -> usize {
        self.stages.last().map_or(0, |s| s.out_channels)
    }
}

pub(crate) fn stages_receptive_field(stages: &[ConvStage]) -> (usize, usize) {
    stages.iter().fold((1, 1), |(h, w), s| {
        (h + s.kernel[0] - 1, w + s.kernel[1] - 1)
    })
}

/// First fusion step: concatenates two branches and applies `stages`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairFusion {
    pub branches: [usize; 2],
    pub stages: Vec<ConvStage>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MsmsfBlockConfig {
    pub in_channels: usize,
    pub branches: Vec<BranchSpec>,
    pub step_one: Vec<PairFusion>,
    /// Applied to the concatenated step-one outputs; the last stage is the
    /// terminal 3×1 convolution.
    pub step_two: Vec<ConvStage>,
    /// The terminal convolution is followed by the block's single ReLU.
    #[serde(default = "default_true")]
    pub terminal_relu: bool,
}

fn default_true() -> bool {
    true
}

impl MsmsfBlockConfig {
    /// Four branches with receptive fields 3, 5, 7, 9 built from stacked
    /// 1×3/3×1 pairs; both fusion steps use 1×3 then 3×1.
    pub fn stacked(in_channels: usize, width: usize) -> Self {
        let branches = (1..=4)
            .map(|pairs| BranchSpec::stacked_pairs(3, pairs, width))
            .collect();
        Self::with_branches(in_channels, width, branches)
    }

    /// Four branches, each a single `1×n` then `n×1` pair with n = 3, 5, 7, 9.
    pub fn wide(in_channels: usize, width: usize) -> Self {
        let branches = [3, 5, 7, 9]
            .into_iter()
            .map(|n| BranchSpec::stacked_pairs(n, 1, width))
            .collect();
        Self::with_branches(in_channels, width, branches)
    }

    fn with_branches(in_channels: usize, width: usize, branches: Vec<BranchSpec>) -> Self {
        let fuse = |pair| PairFusion {
            branches: pair,
            stages: vec![ConvStage::row(3, width), ConvStage::column(3, width)],
        };
        MsmsfBlockConfig {
            in_channels,
            branches,
            step_one: vec![fuse([0, 1]), fuse([2, 3])],
            step_two: vec![ConvStage::row(3, width), ConvStage::column(3, width)],
            terminal_relu: true,
        }
    }

    pub fn out_channels(&self) -> usize {
        self.step_two.last().map_or(0, |s| s.out_channels)
    }

    pub fn conv_count(&self) -> usize {
        self.branches.iter().map(|b| b.stages.len()).sum::<usize>()
            + self.step_one.iter().map(|f| f.stages.len()).sum::<usize>()
            + self.step_two.len()
    }

    /// Receptive field of one block output pixel.
    pub fn receptive_field(&self) -> (usize, usize) {
        let widest = self
            .step_one
            .iter()
            .map(|f| {
                let (bh, bw) = f
                    .branches
                    .iter()
                    .map(|&b| self.branches[b].receptive_field())
                    .fold((1, 1), |a, b| (a.0.max(b.0), a.1.max(b.1)));
                let (fh, fw) = stages_receptive_field(&f.stages);
                (bh + fh - 1, bw + fw - 1)
            })
            .fold((1, 1), |a, b| (a.0.max(b.0), a.1.max(b.1)));
        let (th, tw) = stages_receptive_field(&self.step_two);
        (widest.0 + th - 1, widest.1 + tw - 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.in_channels == 0 {
            return Err(Error::config("block input has zero channels"));
        }
        if self.branches.len() != 4 {
            return Err(Error::config(format!(
                "a block has exactly four branches, got {}",
                self.branches.len()
            )));
        }
        let check_stages = |what: &str, stages: &[ConvStage]| -> Result<()> {
            if stages.is_empty() {
                return Err(Error::config(format!("{what} has no convolutions")));
            }
            for s in stages {
                if !s.is_asymmetric() {
                    return Err(Error::config(format!(
                        "{what}: kernel {}x{} is not spatially asymmetric",
                        s.kernel[0], s.kernel[1]
                    )));
                }
                if s.kernel[0] % 2 == 0 || s.kernel[1] % 2 == 0 {
                    return Err(Error::config(format!(
                        "{what}: kernel {}x{} has an even extent and cannot preserve resolution",
                        s.kernel[0], s.kernel[1]
                    )));
                }
                if s.out_channels == 0 {
                    return Err(Error::config(format!("{what} has a zero-channel convolution")));
                }
            }
            Ok(())
        };
        let mut prev_rf = (0, 0);
        for (i, b) in self.branches.iter().enumerate() {
            check_stages(&format!("branch {i}"), &b.stages)?;
            let rf = b.receptive_field();
            if rf.0 <= prev_rf.0 || rf.1 <= prev_rf.1 {
                return Err(Error::config(format!(
                    "branch receptive fields must increase strictly; branch {i} has {rf:?} after {prev_rf:?}"
                )));
            }
            prev_rf = rf;
        }
        if self.step_one.len() != 2 {
            return Err(Error::config("fusion step one must have exactly two pairs"));
        }
        let mut seen = [false; 4];
        for (i, f) in self.step_one.iter().enumerate() {
            let [a, b] = f.branches;
            if a >= 4 || b >= 4 || a.abs_diff(b) != 1 {
                return Err(Error::config(format!(
                    "fusion pair {i} must join two neighbouring branches, got {:?}",
                    f.branches
                )));
            }
            for k in [a, b] {
                if std::mem::replace(&mut seen[k], true) {
                    return Err(Error::config(format!("branch {k} is fused twice")));
                }
            }
            check_stages(&format!("fusion pair {i}"), &f.stages)?;
        }
        check_stages("fusion step two", &self.step_two)?;
        if !self.terminal_relu {
            return Err(Error::config("the terminal convolution must carry the block's ReLU"));
        }
        let last = self.step_two.last().expect("checked non-empty");
        if last.kernel != [3, 1] {
            return Err(Error::config(format!(
                "the terminal convolution must be 3x1, got {}x{}",
                last.kernel[0], last.kernel[1]
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageConfig {
    pub blocks: Vec<MsmsfBlockConfig>,
}

/// Three stages of stacked blocks with a 3×3/stride-2 max-pool between
/// consecutive stages. Each stage end carries a side output; the three side
/// maps are fused by a 3×3 convolution.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MsmsfNetConfig {
    pub name: String,
    pub in_channels: usize,
    pub stages: Vec<StageConfig>,
    #[serde(default = "default_3x3")]
    pub side_kernel: [usize; 2],
    #[serde(default = "default_3x3")]
    pub fuse_kernel: [usize; 2],
}

fn default_3x3() -> [usize; 2] {
    [3, 3]
}

pub const SIDE_OUTPUTS: usize = 3;

/// Named architecture presets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NetProfile {
    /// Widths 8/12/16, one stacked block per stage.
    Tiny,
    /// Widths 32/64/96 with 2/2/1 wide blocks: 74 weight layers.
    PaperDepth,
}

impl std::str::FromStr for NetProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tiny" => Ok(NetProfile::Tiny),
            "paper-depth" => Ok(NetProfile::PaperDepth),
            other => Err(Error::config(format!("unknown network profile {other:?}"))),
        }
    }
}

impl MsmsfNetConfig {
    pub fn profile(profile: NetProfile, in_channels: usize) -> Self {
        match profile {
            NetProfile::Tiny => Self::uniform("tiny", in_channels, &[(8, 1), (12, 1), (16, 1)], MsmsfBlockConfig::stacked),
            NetProfile::PaperDepth => Self::uniform(
                "paper-depth",
                in_channels,
                &[(32, 2), (64, 2), (96, 1)],
                MsmsfBlockConfig::wide,
            ),
        }
    }

    /// Stages of `(width, block count)` all using one block template.
    pub fn uniform(
        name: &str,
        in_channels: usize,
        stages: &[(usize, usize)],
        template: impl Fn(usize, usize) -> MsmsfBlockConfig,
    ) -> Self {
        let mut c = in_channels;
        let stages = stages
            .iter()
            .map(|&(width, count)| {
                let blocks = (0..count)
                    .map(|_| {
                        let b = template(c, width);
                        c = b.out_channels();
                        b
                    })
                    .collect();
                StageConfig { blocks }
            })
            .collect();
        MsmsfNetConfig {
            name: name.to_string(),
            in_channels,
            stages,
            side_kernel: [3, 3],
            fuse_kernel: [3, 3],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.in_channels == 0 {
            return Err(Error::config("network input has zero channels"));
        }
        if self.stages.len() != SIDE_OUTPUTS {
            return Err(Error::config(format!(
                "the network has exactly {SIDE_OUTPUTS} stages (one per side output), got {}",
                self.stages.len()
            )));
        }
        if self.side_kernel != [3, 3] || self.fuse_kernel != [3, 3] {
            return Err(Error::config("side and fusion layers use 3x3 kernels"));
        }
        let mut c = self.in_channels;
        for (s, stage) in self.stages.iter().enumerate() {
            if stage.blocks.is_empty() {
                return Err(Error::config(format!("stage {s} has no blocks")));
            }
            for (b, block) in stage.blocks.iter().enumerate() {
                block
                    .validate()
                    .map_err(|e| Error::config(format!("stage {s} block {b}: {e}")))?;
                if block.in_channels != c {
                    return Err(Error::config(format!(
                        "stage {s} block {b} expects {} input channels but receives {c}",
                        block.in_channels
                    )));
                }
                c = block.out_channels();
            }
        }
        Ok(())
    }

    /// Learnable convolutions: block convolutions, side layers and the fusion
    /// layer. Fixed bilinear upsampling is not counted.
    pub fn count_weight_layers(&self) -> usize {
        self.stages
            .iter()
            .flat_map(|s| &s.blocks)
            .map(MsmsfBlockConfig::conv_count)
            .sum::<usize>()
            + self.stages.len()
            + 1
    }

    /// Total downsampling factor between input and the deepest stage.
    pub fn downsampling(&self) -> usize {
        1 << (self.stages.len().saturating_sub(1))
    }

    /// Receptive field `(h, w)` of each side output and of the fused output,
    /// by interval arithmetic over the layer sequence.
    pub fn receptive_fields(&self) -> ([(usize, usize); SIDE_OUTPUTS], (usize, usize)) {
        let mut sides = [(0, 0); SIDE_OUTPUTS];
        let mut rf = (1usize, 1usize);
        let mut jump = 1usize;
        for (s, stage) in self.stages.iter().enumerate().take(SIDE_OUTPUTS) {
            if s > 0 {
                // 3×3 max-pool, stride 2
                rf = (rf.0 + 2 * jump, rf.1 + 2 * jump);
                jump *= 2;
            }
            for b in &stage.blocks {
                let (bh, bw) = b.receptive_field();
                rf = (rf.0 + (bh - 1) * jump, rf.1 + (bw - 1) * jump);
            }
            let side = (
                rf.0 + (self.side_kernel[0] - 1) * jump,
                rf.1 + (self.side_kernel[1] - 1) * jump,
            );
            // Bilinear interpolation mixes two neighbouring low-resolution samples.
            sides[s] = if jump > 1 {
                (side.0 + jump, side.1 + jump)
            } else {
                side
            };
        }
        let widest = sides
            .iter()
            .fold((1, 1), |a, b| (a.0.max(b.0), a.1.max(b.1)));
        (
            sides,
            (
                widest.0 + self.fuse_kernel[0] - 1,
                widest.1 + self.fuse_kernel[1] - 1,
            ),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toy_net_hand_count() {
        let one = |n| BranchSpec {
            stages: vec![ConvStage::row(n, 2)],
        };
        let block = MsmsfBlockConfig {
            in_channels: 1,
            branches: vec![one(3), one(5), one(7), one(9)],
            step_one: vec![
                PairFusion {
                    branches: [0, 1],
                    stages: vec![ConvStage::row(3, 2)],
                },
                PairFusion {
                    branches: [2, 3],
                    stages: vec![ConvStage::row(3, 2)],
                },
            ],
            step_two: vec![ConvStage::row(3, 2), ConvStage::column(3, 2)],
            terminal_relu: true,
        };
        // Horizontal-only branches: widths grow, heights stay at 1, which the
        // strict-increase rule rejects. Counting does not require validity.
        assert!(block.validate().is_err());

        let cfg = MsmsfNetConfig {
            name: "toy".into(),
            in_channels: 1,
            stages: vec![StageConfig {
                blocks: vec![block.clone()],
            }],
            side_kernel: [3, 3],
            fuse_kernel: [3, 3],
        };
        // 4 branch + 2 step-one + 1 step-two + 1 terminal + 1 side + 1 fusion
        assert_eq!(block.conv_count(), 8);
        assert_eq!(cfg.count_weight_layers(), 10);
    }

    #[test]
    fn profiles_validate() {
        for p in [NetProfile::Tiny, NetProfile::PaperDepth] {
            MsmsfNetConfig::profile(p, 3).validate().unwrap();
        }
        assert_eq!(MsmsfNetConfig::profile(NetProfile::PaperDepth, 3).count_weight_layers(), 74);
        assert_eq!(MsmsfNetConfig::profile(NetProfile::Tiny, 3).count_weight_layers(), 3 * 26 + 4);
    }

    #[test]
    fn block_counts_are_additive() {
        let base = MsmsfNetConfig::profile(NetProfile::Tiny, 3);
        let mut more = base.clone();
        let extra = MsmsfBlockConfig::stacked(12, 12);
        more.stages[1].blocks.push(extra.clone());
        more.stages[1].blocks.push(extra.clone());
        more.validate().unwrap();
        assert_eq!(
            more.count_weight_layers(),
            base.count_weight_layers() + 2 * extra.conv_count()
        );
    }

    #[test]
    fn invalid_blocks_are_rejected() {
        let good = MsmsfBlockConfig::stacked(4, 4);
        good.validate().unwrap();

        let mut b = good.clone();
        b.branches.pop();
        assert!(b.validate().is_err());

        let mut b = good.clone();
        b.branches[0].stages[0].kernel = [3, 3];
        assert!(b.validate().unwrap_err().to_string().contains("asymmetric"));

        let mut b = good.clone();
        b.branches.swap(0, 1);
        assert!(b.validate().is_err());

        let mut b = good.clone();
        b.step_one[0].branches = [0, 2];
        assert!(b.validate().is_err());

        let mut b = good.clone();
        b.step_two.last_mut().unwrap().kernel = [1, 3];
        assert!(b.validate().is_err());

        let mut b = good.clone();
        b.step_two[0].out_channels = 0;
        assert!(b.validate().is_err());

        let mut b = good;
        b.in_channels = 0;
        assert!(b.validate().is_err());
    }

    #[test]
    fn branch_receptive_fields() {
        let b = MsmsfBlockConfig::stacked(3, 8);
        let rfs: Vec<_> = b.branches.iter().map(BranchSpec::receptive_field).collect();
        assert_eq!(rfs, vec![(3, 3), (5, 5), (7, 7), (9, 9)]);
        let w = MsmsfBlockConfig::wide(3, 8);
        assert_eq!(w.branches[3].receptive_field(), (9, 9));
        // widest branch 9, fusion pair +2, step two +2
        assert_eq!(b.receptive_field(), (13, 13));
    }

    #[test]
    fn config_round_trips_through_toml() {
        let cfg = MsmsfNetConfig::profile(NetProfile::Tiny, 3);
        let text = toml::to_string(&cfg).unwrap();
        let back: MsmsfNetConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }
}
