//! The four-branch, two-step-fusion block.

use super::config::{ConvStage, MsmsfBlockConfig};
use super::layer::ConvLayer;
use super::params::ParamStore;
use crate::autograd::{Graph, Var};
use crate::error::{Error, Result};
use crate::tensor::Element;

/// Parameter indices of one block inside a [`ParamStore`].
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct BlockLayout {
    in_channels: usize,
    branches: Vec<Vec<ConvLayer>>,
    step_one: Vec<([usize; 2], Vec<ConvLayer>)>,
    step_two: Vec<ConvLayer>,
}

fn declare_chain<T: Element>(
    store: &mut ParamStore<T>,
    prefix: &str,
    mut in_channels: usize,
    stages: &[ConvStage],
) -> Result<(Vec<ConvLayer>, usize)> {
    let mut layers = Vec::with_capacity(stages.len());
    for (i, s) in stages.iter().enumerate() {
        layers.push(ConvLayer::declare(
            store,
            &format!("{prefix}.conv{i}"),
            in_channels,
            s.out_channels,
            s.kernel,
        )?);
        in_channels = s.out_channels;
    }
    Ok((layers, in_channels))
}

fn run_chain<T: Element>(g: &mut Graph<T>, vars: &[Var], layers: &[ConvLayer], mut x: Var) -> Result<Var> {
    for l in layers {
        x = l.apply(g, vars, x)?;
    }
    Ok(x)
}

impl BlockLayout {
    pub(crate) fn declare<T: Element>(
        cfg: &MsmsfBlockConfig,
        prefix: &str,
        store: &mut ParamStore<T>,
    ) -> Result<Self> {
        cfg.validate()?;
        let mut branches = Vec::with_capacity(4);
        let mut widths = Vec::with_capacity(4);
        for (i, b) in cfg.branches.iter().enumerate() {
            let (layers, c) = declare_chain(store, &format!("{prefix}branch{i}"), cfg.in_channels, &b.stages)?;
            branches.push(layers);
            widths.push(c);
        }
        let mut step_one = Vec::with_capacity(2);
        let mut fused_width = 0;
        for (i, f) in cfg.step_one.iter().enumerate() {
            let c_in = widths[f.branches[0]] + widths[f.branches[1]];
            let (layers, c) = declare_chain(store, &format!("{prefix}fuse1_{i}"), c_in, &f.stages)?;
            step_one.push((f.branches, layers));
            fused_width += c;
        }
        let (step_two, _) = declare_chain(store, &format!("{prefix}fuse2"), fused_width, &cfg.step_two)?;
        Ok(BlockLayout {
            in_channels: cfg.in_channels,
            branches,
            step_one,
            step_two,
        })
    }

    /// Output of branch `b` alone (diagnostics).
    pub(crate) fn branch_forward<T: Element>(
        &self,
        g: &mut Graph<T>,
        vars: &[Var],
        b: usize,
        x: Var,
    ) -> Result<Var> {
        let layers = self
            .branches
            .get(b)
            .ok_or_else(|| Error::config(format!("no branch {b}")))?;
        run_chain(g, vars, layers, x)
    }

    pub(crate) fn forward<T: Element>(&self, g: &mut Graph<T>, vars: &[Var], x: Var) -> Result<Var> {
        let c = g.shape(x).c;
        if c != self.in_channels {
            return Err(Error::config(format!(
                "block expects {} input channels, got tensor of shape {}",
                self.in_channels,
                g.shape(x)
            )));
        }
        let mut outs = Vec::with_capacity(self.branches.len());
        for layers in &self.branches {
            outs.push(run_chain(g, vars, layers, x)?);
        }
        let mut fused = Vec::with_capacity(self.step_one.len());
        for ([a, b], layers) in &self.step_one {
            let joined = g.concat_channels(&[outs[*a], outs[*b]])?;
            fused.push(run_chain(g, vars, layers, joined)?);
        }
        let joined = g.concat_channels(&fused)?;
        let y = run_chain(g, vars, &self.step_two, joined)?;
        Ok(g.relu(y))
    }
}

/// A stand-alone parameterized block.
#[derive(Clone, Debug)]
pub struct MsmsfBlock<T: Element = f32> {
    config: MsmsfBlockConfig,
    params: ParamStore<T>,
    layout: BlockLayout,
}

impl<T: Element> MsmsfBlock<T> {
    /// Declares the block's parameters with Xavier-uniform weights and zero
    /// biases.
    pub fn build(config: MsmsfBlockConfig, seed: u64) -> Result<Self> {
        let mut params = ParamStore::default();
        let layout = BlockLayout::declare(&config, "", &mut params)?;
        params.init_xavier(seed);
        Ok(MsmsfBlock {
            config,
            params,
            layout,
        })
    }

    pub fn config(&self) -> &MsmsfBlockConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore<T> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore<T> {
        &mut self.params
    }

    pub fn bind(&self, g: &mut Graph<T>, requires_grad: bool) -> Vec<Var> {
        self.params.bind(g, requires_grad)
    }

    pub fn forward(&self, g: &mut Graph<T>, vars: &[Var], x: Var) -> Result<Var> {
        self.layout.forward(g, vars, x)
    }

    pub fn branch_forward(&self, g: &mut Graph<T>, vars: &[Var], branch: usize, x: Var) -> Result<Var> {
        self.layout.branch_forward(g, vars, branch, x)
    }
}
