use crate::tensor::Tensor;

/// Central-difference gradient `(f(x+ε) − f(x−ε)) / 2ε` of a scalar
/// function, one coordinate at a time, in 64-bit.
pub fn finite_diff_gradient(
    mut f: impl FnMut(&Tensor<f64>) -> f64,
    at: &Tensor<f64>,
    eps: f64,
) -> Tensor<f64> {
    let mut probe = at.clone();
    let mut grad = Tensor::zeros(at.shape());
    for i in 0..at.numel() {
        let x0 = at.data()[i];
        probe.data_mut()[i] = x0 + eps;
        let fp = f(&probe);
        probe.data_mut()[i] = x0 - eps;
        let fm = f(&probe);
        probe.data_mut()[i] = x0;
        grad.data_mut()[i] = (fp - fm) / (2.0 * eps);
    }
    grad
}
