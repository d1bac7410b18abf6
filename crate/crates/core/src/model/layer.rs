use crate::autograd::{ConvGeometry, Graph, Var};
use crate::error::Result;
use crate::model::params::ParamStore;
use crate::tensor::{Element, Shape, Tensor};

/// A convolution whose weight and bias live in a [`ParamStore`].
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct ConvLayer {
    weight: usize,
    bias: usize,
    geometry: ConvGeometry,
}

impl ConvLayer {
    pub(crate) fn declare<T: Element>(
        store: &mut ParamStore<T>,
        name: &str,
        in_channels: usize,
        out_channels: usize,
        kernel: [usize; 2],
    ) -> Result<Self> {
        let [kh, kw] = kernel;
        let weight = store.insert(
            format!("{name}.weight"),
            Tensor::zeros(Shape::new(out_channels, in_channels, kh, kw)),
        )?;
        let bias = store.insert(format!("{name}.bias"), Tensor::zeros(Shape::new(1, out_channels, 1, 1)))?;
        Ok(ConvLayer {
            weight,
            bias,
            geometry: ConvGeometry::same(kh, kw),
        })
    }

    pub(crate) fn apply<T: Element>(&self, g: &mut Graph<T>, vars: &[Var], x: Var) -> Result<Var> {
        g.conv2d(x, vars[self.weight], Some(vars[self.bias]), self.geometry)
    }
}
