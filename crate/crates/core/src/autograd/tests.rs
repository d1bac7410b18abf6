use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

fn random(shape: Shape, rng: &mut ChaCha8Rng) -> Tensor<f64> {
    let data = (0..shape.numel()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Tensor::from_vec(shape, data).unwrap()
}

/// Scalarizes `build(x)` with a fixed random projection and compares the
/// backward gradient at `x` against central differences.
fn max_rel_error(
    x: &Tensor<f64>,
    seed: u64,
    build: impl Fn(&mut Graph<f64>, Var) -> Var,
) -> f64 {
    let eval = |t: &Tensor<f64>, want_grad: bool| -> (f64, Option<Vec<f64>>) {
        let mut g = Graph::<f64>::new();
        let xv = g.leaf(t.clone(), want_grad);
        let y = build(&mut g, xv);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = random(g.shape(y), &mut rng);
        let rv = g.constant(r);
        let p = g.mul(y, rv).unwrap();
        let s = g.sum(p);
        let value = g.value(s).item().unwrap();
        if want_grad {
            g.backward(s).unwrap();
            (value, Some(g.grad(xv).unwrap().to_vec()))
        } else {
            (value, None)
        }
    };
    let analytic = eval(x, true).1.unwrap();
    let numeric = finite_diff_gradient(|t| eval(t, false).0, x, 1e-3);
    analytic
        .iter()
        .zip(numeric.data())
        .map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(1e-3))
        .fold(0.0, f64::max)
}

#[test]
fn conv_input_weight_and_bias_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x = random(Shape::new(2, 3, 5, 5), &mut rng);
    let w = random(Shape::new(4, 3, 3, 1), &mut rng);
    let b = random(Shape::new(1, 4, 1, 1), &mut rng);
    let geom = ConvGeometry::same(3, 1);

    let (w2, b2) = (w.clone(), b.clone());
    let e = max_rel_error(&x, 7, move |g, xv| {
        let wv = g.constant(w2.clone());
        let bv = g.constant(b2.clone());
        g.conv2d(xv, wv, Some(bv), geom).unwrap()
    });
    assert!(e < 1e-3, "input grad {e}");

    let (x2, b2) = (x.clone(), b.clone());
    let e = max_rel_error(&w, 8, move |g, wv| {
        let xv = g.constant(x2.clone());
        let bv = g.constant(b2.clone());
        g.conv2d(xv, wv, Some(bv), geom).unwrap()
    });
    assert!(e < 1e-3, "weight grad {e}");

    let e = max_rel_error(&b, 9, move |g, bv| {
        let xv = g.constant(x.clone());
        let wv = g.constant(w.clone());
        g.conv2d(xv, wv, Some(bv), geom).unwrap()
    });
    assert!(e < 1e-3, "bias grad {e}");
}

#[test]
fn strided_conv_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x = random(Shape::new(1, 2, 7, 6), &mut rng);
    let w = random(Shape::new(3, 2, 3, 3), &mut rng);
    let geom = ConvGeometry {
        stride: (2, 2),
        padding: (1, 0),
    };
    let e = max_rel_error(&x, 3, move |g, xv| {
        let wv = g.constant(w.clone());
        g.conv2d(xv, wv, None, geom).unwrap()
    });
    assert!(e < 1e-3, "{e}");
}

#[test]
fn pool_relu_sigmoid_upsample_concat_crop_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = random(Shape::new(1, 2, 6, 5), &mut rng);
    assert!(max_rel_error(&x, 1, |g, v| g.max_pool(v, PoolGeometry::default()).unwrap()) < 1e-3);
    assert!(max_rel_error(&x, 2, |g, v| g.relu(v)) < 1e-3);
    assert!(max_rel_error(&x, 3, |g, v| g.sigmoid(v)) < 1e-3);
    for factor in 1..5 {
        assert!(max_rel_error(&x, 4, |g, v| g.bilinear_upsample(v, factor).unwrap()) < 1e-3);
    }
    let other = random(Shape::new(1, 3, 6, 5), &mut rng);
    assert!(
        max_rel_error(&x, 5, move |g, v| {
            let o = g.constant(other.clone());
            g.concat_channels(&[o, v, v]).unwrap()
        }) < 1e-3
    );
    assert!(max_rel_error(&x, 6, |g, v| g.crop(v, 4, 3).unwrap()) < 1e-3);
}

#[test]
fn weighted_logistic_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let x = random(Shape::new(1, 1, 4, 4), &mut rng);
    let targets: Vec<LogisticTarget> = (0..16)
        .map(|i| LogisticTarget {
            positive: i % 3 == 0,
            weight: [0.0, 0.7, 1.3][i % 3],
        })
        .collect();
    let e = max_rel_error(&x, 1, move |g, v| g.weighted_logistic(v, targets.clone()).unwrap());
    assert!(e < 1e-3, "{e}");
}

#[test]
fn product_rule_and_shared_inputs() {
    let mut g = Graph::<f64>::new();
    let x = g.param(Tensor::scalar(3.0));
    let y = g.param(Tensor::scalar(-2.0));
    let p = g.mul(x, y).unwrap();
    g.backward(p).unwrap();
    assert_eq!(g.grad(x).unwrap(), &[-2.0]);
    assert_eq!(g.grad(y).unwrap(), &[3.0]);

    // Two branches reading the same input: gradients add.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let t = random(Shape::new(1, 1, 3, 3), &mut rng);
    let single = |branches: &[bool]| {
        let mut g = Graph::<f64>::new();
        let x = g.param(t.clone());
        let mut terms = Vec::new();
        if branches[0] {
            let s = g.sigmoid(x);
            terms.push((g.sum(s), 1.0));
        }
        if branches[1] {
            let r = g.relu(x);
            terms.push((g.sum(r), 2.0));
        }
        let root = g.linear_combination(&terms).unwrap();
        g.backward(root).unwrap();
        g.grad(x).unwrap().to_vec()
    };
    let both = single(&[true, true]);
    let a = single(&[true, false]);
    let b = single(&[false, true]);
    for i in 0..9 {
        assert!((both[i] - (a[i] + b[i])).abs() < 1e-12);
    }
}

#[test]
fn backward_rejects_non_scalar_root() {
    let mut g = Graph::<f32>::new();
    let x = g.param(Tensor::zeros(Shape::new(1, 1, 2, 2)));
    let y = g.relu(x);
    assert!(matches!(g.backward(y), Err(Error::Config(_))));
}

#[test]
fn relu_and_sigmoid_values() {
    let mut g = Graph::<f32>::new();
    let x = g.constant(Tensor::from_vec(Shape::new(1, 1, 1, 3), vec![-1.0, 0.0, 2.0]).unwrap());
    let r = g.relu(x);
    assert_eq!(g.value(r).data(), &[0.0, 0.0, 2.0]);
    assert_eq!(sigmoid(0.0f32), 0.5);
    for &v in &[0.1f64, 1.0, 5.0, 30.0, 800.0] {
        assert!((sigmoid(-v) - (1.0 - sigmoid(v))).abs() < 1e-15);
        assert!(sigmoid(-v).is_finite());
    }
}

#[test]
fn upsample_identity_constant_and_ramp() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let t = random(Shape::new(1, 2, 3, 4), &mut rng);
    let mut g = Graph::<f64>::new();
    let x = g.constant(t.clone());
    let y = g.bilinear_upsample(x, 1).unwrap();
    assert_eq!(g.value(y).data(), t.data());
    assert!(g.bilinear_upsample(x, 0).is_err());

    for factor in 1..6 {
        let c = g.constant(Tensor::full(Shape::new(1, 1, 3, 5), 0.37));
        let y = g.bilinear_upsample(c, factor).unwrap();
        assert_eq!(g.shape(y), Shape::new(1, 1, 3 * factor, 5 * factor));
        for &v in g.value(y).data() {
            assert!((v - 0.37).abs() < 1e-12, "factor {factor}: {v}");
        }
    }

    // Half-pixel-centre bilinear interpolation of a ramp is the ramp itself,
    // evaluated at (o + 0.5)/f − 0.5.
    let ramp = g.constant(Tensor::from_vec(Shape::new(1, 1, 1, 3), vec![0.0, 1.0, 2.0]).unwrap());
    let y = g.bilinear_upsample(ramp, 2).unwrap();
    let row = &g.value(y).data()[..6];
    for (o, &v) in row.iter().enumerate().take(5).skip(1) {
        let expected = (o as f64 + 0.5) / 2.0 - 0.5;
        assert!((v - expected).abs() < 1e-12, "{o}: {v}");
    }
}

#[test]
fn factorized_pair_has_square_receptive_field() {
    for n in [3usize, 5, 7] {
        let mut g = Graph::<f64>::new();
        let mut impulse = Tensor::zeros(Shape::new(1, 1, 11, 11));
        let idx = impulse.index(0, 0, 5, 5);
        impulse.data_mut()[idx] = 1.0;
        let x = g.constant(impulse);
        let w1 = g.constant(Tensor::full(Shape::new(1, 1, 1, n), 1.0));
        let w2 = g.constant(Tensor::full(Shape::new(1, 1, n, 1), 1.0));
        let a = g.conv2d(x, w1, None, ConvGeometry::same(1, n)).unwrap();
        let b = g.conv2d(a, w2, None, ConvGeometry::same(n, 1)).unwrap();
        let out = g.value(b);
        let r = n / 2;
        for y in 0..11usize {
            for xx in 0..11usize {
                let inside = y.abs_diff(5) <= r && xx.abs_diff(5) <= r;
                assert_eq!(out.at(0, 0, y, xx) != 0.0, inside, "n={n} ({y},{xx})");
            }
        }
    }
}

#[test]
fn forward_ops_are_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let x = random(Shape::new(1, 3, 9, 9), &mut rng).cast::<f32>();
    let w = random(Shape::new(2, 3, 1, 3), &mut rng).cast::<f32>();
    let run = || {
        let mut g = Graph::<f32>::new();
        let xv = g.constant(x.clone());
        let wv = g.constant(w.clone());
        let c = g.conv2d(xv, wv, None, ConvGeometry::same(1, 3)).unwrap();
        let p = g.max_pool(c, PoolGeometry::default()).unwrap();
        let u = g.bilinear_upsample(p, 2).unwrap();
        g.value(u).clone()
    };
    let a = run();
    let b = run();
    assert!(a.data().iter().zip(b.data()).all(|(p, q)| p.to_bits() == q.to_bits()));
}

#[test]
fn eager_conv_matches_graph() {
    let w = Tensor::<f32>::from_vec(Shape::new(1, 1, 1, 3), vec![1.0, 1.0, 1.0]).unwrap();
    let params = ConvParams::new(w, vec![0.5], ConvGeometry::same(1, 3)).unwrap();
    let x = Tensor::full(Shape::new(1, 1, 3, 3), 1.0);
    let y = conv2d(&x, &params).unwrap();
    assert_eq!(params.output_shape(x.shape()).unwrap(), y.shape());
    assert_eq!(&y.data()[..3], &[2.5, 3.5, 2.5]);
}
