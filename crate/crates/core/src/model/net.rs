//! The full network: stacked blocks, max-pooling between stages, one side
//! layer per stage and a 3×3 fusion layer over the side maps.

use super::block::BlockLayout;
use super::checkpoint::Checkpoint;
use super::config::{MsmsfNetConfig, SIDE_OUTPUTS};
use super::layer::ConvLayer;
use super::params::ParamStore;
use crate::autograd::{Graph, PoolGeometry, Var};
use crate::error::{Error, Result};
use crate::tensor::Element;

/// Logit maps produced by one forward pass, all at input resolution.
#[derive(Clone, Copy, Debug)]
pub struct NetOutputs {
    pub sides: [Var; SIDE_OUTPUTS],
    pub fused: Var,
}

impl NetOutputs {
    /// Side maps followed by the fused map.
    pub fn all(&self) -> [Var; SIDE_OUTPUTS + 1] {
        [self.sides[0], self.sides[1], self.sides[2], self.fused]
    }
}

#[derive(Clone, Debug)]
pub struct MsmsfNet<T: Element = f32> {
    config: MsmsfNetConfig,
    params: ParamStore<T>,
    stages: Vec<Vec<BlockLayout>>,
    sides: Vec<ConvLayer>,
    fuse: ConvLayer,
}

impl<T: Element> MsmsfNet<T> {
    /// Declares all parameters and initializes them (Xavier-uniform weights,
    /// zero biases) from `seed`.
    pub fn build(config: MsmsfNetConfig, seed: u64) -> Result<Self> {
        let mut net = Self::declare(config)?;
        net.params.init_xavier(seed);
        Ok(net)
    }

    /// Same architecture with every parameter zero.
    pub fn zeroed(config: MsmsfNetConfig) -> Result<Self> {
        Self::declare(config)
    }

    fn declare(config: MsmsfNetConfig) -> Result<Self> {
        config.validate()?;
        let mut params = ParamStore::default();
        let mut stages = Vec::with_capacity(config.stages.len());
        let mut sides = Vec::with_capacity(SIDE_OUTPUTS);
        for (s, stage) in config.stages.iter().enumerate() {
            let blocks = stage
                .blocks
                .iter()
                .enumerate()
                .map(|(b, cfg)| BlockLayout::declare(cfg, &format!("stage{s}.block{b}."), &mut params))
                .collect::<Result<Vec<_>>>()?;
            stages.push(blocks);
            let width = stage.blocks.last().expect("validated").out_channels();
            sides.push(ConvLayer::declare(&mut params, &format!("side{s}"), width, 1, config.side_kernel)?);
        }
        let fuse = ConvLayer::declare(&mut params, "fuse", SIDE_OUTPUTS, 1, config.fuse_kernel)?;
        Ok(MsmsfNet {
            config,
            params,
            stages,
            sides,
            fuse,
        })
    }

    pub fn config(&self) -> &MsmsfNetConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore<T> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore<T> {
        &mut self.params
    }

    pub fn count_parameters(&self) -> usize {
        self.params.count()
    }

    pub fn count_weight_layers(&self) -> usize {
        self.config.count_weight_layers()
    }

    /// Registers all parameters on `g` (see [`ParamStore::bind`]).
    pub fn bind(&self, g: &mut Graph<T>, requires_grad: bool) -> Vec<Var> {
        self.params.bind(g, requires_grad)
    }

    /// Smallest accepted input extent: each max-pool halves (rounding up),
    /// and the deepest stage must still be reached by at least one pixel per
    /// pooling step.
    pub fn min_input_extent(&self) -> usize {
        self.config.downsampling()
    }

    /// Output of block `block` in stage `stage` applied to `x` directly.
    pub fn block_forward(&self, g: &mut Graph<T>, vars: &[Var], stage: usize, block: usize, x: Var) -> Result<Var> {
        let layout = self
            .stages
            .get(stage)
            .and_then(|s| s.get(block))
            .ok_or_else(|| Error::config(format!("no block {block} in stage {stage}")))?;
        layout.forward(g, vars, x)
    }

    pub fn forward(&self, g: &mut Graph<T>, vars: &[Var], image: Var) -> Result<NetOutputs> {
        let s = g.shape(image);
        if s.c != self.config.in_channels {
            return Err(Error::config(format!(
                "network expects {} input channels, got image of shape {s}",
                self.config.in_channels
            )));
        }
        let min = self.min_input_extent();
        if s.h < min || s.w < min {
            return Err(Error::config(format!(
                "image of shape {s} is smaller than the network's {min}x{min} downsampling footprint"
            )));
        }
        let mut x = image;
        let mut sides = Vec::with_capacity(SIDE_OUTPUTS);
        for (stage, blocks) in self.stages.iter().enumerate() {
            if stage > 0 {
                x = g.max_pool(x, PoolGeometry::default())?;
            }
            for b in blocks {
                x = b.forward(g, vars, x)?;
            }
            let mut side = self.sides[stage].apply(g, vars, x)?;
            if stage > 0 {
                side = g.bilinear_upsample(side, 1 << stage)?;
                side = g.crop(side, s.h, s.w)?;
            }
            sides.push(side);
        }
        let joined = g.concat_channels(&sides)?;
        let fused = self.fuse.apply(g, vars, joined)?;
        Ok(NetOutputs {
            sides: [sides[0], sides[1], sides[2]],
            fused,
        })
    }

    pub fn cast<U: Element>(&self) -> MsmsfNet<U> {
        MsmsfNet {
            config: self.config.clone(),
            params: self.params.cast(),
            stages: self.stages.clone(),
            sides: self.sides.clone(),
            fuse: self.fuse.clone(),
        }
    }

    /// Parameters as a checkpoint (32-bit values).
    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut ckpt = Checkpoint::default();
        for (name, t) in self.params.iter() {
            ckpt.insert_tensor(name, t);
        }
        ckpt
    }

    /// Builds `config` and loads its parameters from `ckpt`. Entries under
    /// the `adam.` and `train.` namespaces are training state and ignored.
    pub fn from_checkpoint(config: MsmsfNetConfig, ckpt: &Checkpoint) -> Result<Self> {
        let mut net = Self::declare(config)?;
        for (name, t) in net.params.iter_mut() {
            let entry = ckpt.get(name).ok_or_else(|| {
                Error::config(format!("checkpoint has no parameter {name} (expected shape {})", t.shape()))
            })?;
            let expected = t.shape().dims().to_vec();
            if entry.dims != expected {
                return Err(Error::config(format!(
                    "parameter {name}: checkpoint shape {:?} does not match expected {:?}",
                    entry.dims, expected
                )));
            }
            for (d, &v) in t.data_mut().iter_mut().zip(&entry.values) {
                *d = T::from_f64(v as f64);
            }
        }
        for name in ckpt.names() {
            if !Checkpoint::is_training_state(name) && net.params.get(name).is_none() {
                return Err(Error::config(format!(
                    "checkpoint parameter {name} does not exist in network {:?}",
                    net.config.name
                )));
            }
        }
        Ok(net)
    }
}
