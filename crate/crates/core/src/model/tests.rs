use super::layer::ConvLayer;
use super::*;
use crate::autograd::{sigmoid, Graph};
use crate::tensor::{Shape, Tensor};

fn tiny() -> MsmsfNetConfig {
    MsmsfNetConfig::profile(NetProfile::Tiny, 3)
}

fn impulse(c: usize, h: usize, w: usize) -> Tensor<f64> {
    let mut t = Tensor::zeros(Shape::new(1, c, h, w));
    for ch in 0..c {
        let i = t.index(0, ch, h / 2, w / 2);
        t.data_mut()[i] = 1.0;
    }
    t
}

/// Bounding box (height, width) of the nonzero entries of channel 0.
fn support(t: &Tensor<f64>) -> (usize, usize) {
    let s = t.shape();
    let (mut y0, mut y1, mut x0, mut x1) = (usize::MAX, 0, usize::MAX, 0);
    for y in 0..s.h {
        for x in 0..s.w {
            if t.at(0, 0, y, x) != 0.0 {
                y0 = y0.min(y);
                y1 = y1.max(y);
                x0 = x0.min(x);
                x1 = x1.max(x);
            }
        }
    }
    (y1 + 1 - y0, x1 + 1 - x0)
}

fn make_weights_positive(params: &mut ParamStore<f64>) {
    for (name, t) in params.iter_mut() {
        if name.ends_with(".bias") {
            continue;
        }
        for v in t.data_mut() {
            *v = v.abs() + 0.01;
        }
    }
}

#[test]
fn block_init_respects_xavier_and_zero_bias() {
    let block = MsmsfBlock::<f32>::build(MsmsfBlockConfig::stacked(3, 8), 11).unwrap();
    for (name, t) in block.params().iter() {
        if name.ends_with(".bias") {
            assert!(t.data().iter().all(|&v| v == 0.0), "{name}");
        } else {
            let bound = xavier_bound(t.shape()) as f32;
            assert!(t.data().iter().all(|v| v.abs() <= bound), "{name}");
        }
    }
    let again = MsmsfBlock::<f32>::build(MsmsfBlockConfig::stacked(3, 8), 11).unwrap();
    assert_eq!(block.params(), again.params());
    let other = MsmsfBlock::<f32>::build(MsmsfBlockConfig::stacked(3, 8), 12).unwrap();
    assert_ne!(block.params(), other.params());
}

#[test]
fn xavier_mean_is_centered() {
    let net = MsmsfNet::<f32>::build(MsmsfNetConfig::profile(NetProfile::PaperDepth, 3), 5).unwrap();
    let (mut sum, mut var, mut n) = (0.0f64, 0.0f64, 0usize);
    for (name, t) in net.params().iter() {
        if name.ends_with(".weight") {
            let b = xavier_bound(t.shape());
            for &v in t.data() {
                sum += v as f64;
                var += b * b / 3.0;
                n += 1;
            }
        }
    }
    assert!(n >= 10_000);
    let mean = sum / n as f64;
    let std_err = var.sqrt() / n as f64;
    assert!(mean.abs() <= 3.0 * std_err, "mean {mean} std err {std_err}");
}

#[test]
fn block_preserves_resolution_and_maps_zero_to_zero() {
    let block = MsmsfBlock::<f32>::build(MsmsfBlockConfig::stacked(3, 6), 1).unwrap();
    for (h, w) in [(1, 1), (5, 9), (16, 7)] {
        let mut g = Graph::new();
        let vars = block.bind(&mut g, false);
        let x = g.constant(Tensor::full(Shape::new(2, 3, h, w), 0.3));
        let y = block.forward(&mut g, &vars, x).unwrap();
        assert_eq!(g.shape(y), Shape::new(2, 6, h, w));

        let z = g.constant(Tensor::zeros(Shape::new(1, 3, h, w)));
        let y = block.forward(&mut g, &vars, z).unwrap();
        assert!(g.value(y).data().iter().all(|&v| v == 0.0));
    }
    let mut g = Graph::new();
    let vars = block.bind(&mut g, false);
    let x = g.constant(Tensor::zeros(Shape::new(1, 2, 4, 4)));
    assert!(block.forward(&mut g, &vars, x).is_err());
}

#[test]
fn branch_impulse_support_matches_receptive_field() {
    for cfg in [MsmsfBlockConfig::stacked(2, 3), MsmsfBlockConfig::wide(2, 3)] {
        let mut block = MsmsfBlock::<f64>::build(cfg.clone(), 3).unwrap();
        make_weights_positive(block.params_mut());
        for b in 0..4 {
            let mut g = Graph::new();
            let vars = block.bind(&mut g, false);
            let x = g.constant(impulse(2, 21, 21));
            let y = block.branch_forward(&mut g, &vars, b, x).unwrap();
            let y0 = g.value(y).clone();
            // bias adds a constant everywhere; subtract the zero-input response
            let z = g.constant(Tensor::zeros(Shape::new(1, 2, 21, 21)));
            let yz = block.branch_forward(&mut g, &vars, b, z).unwrap();
            let diff = Tensor::from_vec(
                y0.shape(),
                y0.data().iter().zip(g.value(yz).data()).map(|(a, b)| a - b).collect(),
            )
            .unwrap();
            assert_eq!(support(&diff), cfg.branches[b].receptive_field(), "branch {b}");
        }
        let mut g = Graph::new();
        let vars = block.bind(&mut g, false);
        let x = g.constant(impulse(2, 31, 31));
        let y = block.forward(&mut g, &vars, x).unwrap();
        assert_eq!(support(g.value(y)), cfg.receptive_field());
    }
}

#[test]
fn net_outputs_have_input_resolution() {
    let net = MsmsfNet::<f32>::build(tiny(), 2).unwrap();
    for (h, w) in [(4, 4), (17, 9), (32, 31)] {
        let mut g = Graph::new();
        let vars = net.bind(&mut g, false);
        let x = g.constant(Tensor::full(Shape::new(1, 3, h, w), 0.5));
        let out = net.forward(&mut g, &vars, x).unwrap();
        for v in out.all() {
            assert_eq!(g.shape(v), Shape::new(1, 1, h, w));
        }
    }
    let mut g = Graph::new();
    let vars = net.bind(&mut g, false);
    let small = g.constant(Tensor::zeros(Shape::new(1, 3, 3, 8)));
    assert!(net.forward(&mut g, &vars, small).is_err());
    let wrong = g.constant(Tensor::zeros(Shape::new(1, 1, 8, 8)));
    assert!(net.forward(&mut g, &vars, wrong).is_err());
}

#[test]
fn zero_network_predicts_one_half() {
    let net = MsmsfNet::<f32>::zeroed(tiny()).unwrap();
    let mut g = Graph::new();
    let vars = net.bind(&mut g, false);
    let x = g.constant(Tensor::full(Shape::new(1, 3, 12, 10), 0.7));
    let out = net.forward(&mut g, &vars, x).unwrap();
    for v in out.all() {
        assert!(g.value(v).data().iter().all(|&a| a == 0.0 && sigmoid(a) == 0.5));
    }
}

#[test]
fn first_side_output_is_full_resolution_path() {
    // Positive weights make the first side map's impulse support exactly its
    // receptive field; upsampling would widen it.
    let mut net = MsmsfNet::<f64>::build(tiny(), 4).unwrap();
    make_weights_positive(net.params_mut());
    let (sides, fused) = net.config().receptive_fields();
    let mut g = Graph::new();
    let vars = net.bind(&mut g, false);
    let x = g.constant(impulse(3, 41, 41));
    let out = net.forward(&mut g, &vars, x).unwrap();
    let z = g.constant(Tensor::zeros(Shape::new(1, 3, 41, 41)));
    let base = net.forward(&mut g, &vars, z).unwrap();
    let delta = |a, b| {
        let (a, b): (&Tensor<f64>, &Tensor<f64>) = (g.value(a), g.value(b));
        Tensor::from_vec(a.shape(), a.data().iter().zip(b.data()).map(|(p, q)| p - q).collect()).unwrap()
    };
    assert_eq!(support(&delta(out.sides[0], base.sides[0])), sides[0]);
    let deep = support(&delta(out.sides[2], base.sides[2]));
    assert!(deep.0 <= sides[2].0 && deep.1 <= sides[2].1, "{deep:?} vs {:?}", sides[2]);
    let f = support(&delta(out.fused, base.fused));
    assert!(f.0 <= fused.0 && f.1 <= fused.1);
}

#[test]
fn parameter_hand_count() {
    let block = MsmsfBlock::<f32>::build(MsmsfBlockConfig::stacked(2, 4), 0).unwrap();
    // branches: 4 first convs (2→4, 1×3) + 16 further convs 4→4; step one 2×(8→4, 4→4);
    // step two 8→4, 4→4. Each 3-tap conv: out·in·3 + out.
    let conv = |i: usize, o: usize| o * i * 3 + o;
    let expected = 4 * conv(2, 4) + 16 * conv(4, 4) + 2 * (conv(8, 4) + conv(4, 4)) + conv(8, 4) + conv(4, 4);
    assert_eq!(expected, 1400);
    assert_eq!(block.params().count(), expected);

    assert!(MsmsfBlock::<f32>::build(MsmsfBlockConfig::stacked(2, 0), 0).is_err());
    assert!(MsmsfNet::<f32>::build(MsmsfNetConfig::profile(NetProfile::Tiny, 0), 0).is_err());
}

#[test]
fn factorized_pair_uses_two_thirds_of_the_weights() {
    for c in [4, 16, 64] {
        let mut full = ParamStore::<f32>::default();
        ConvLayer::declare(&mut full, "full", c, c, [3, 3]).unwrap();
        let mut pair = ParamStore::<f32>::default();
        ConvLayer::declare(&mut pair, "row", c, c, [1, 3]).unwrap();
        ConvLayer::declare(&mut pair, "col", c, c, [3, 1]).unwrap();
        let weights = |s: &ParamStore<f32>| -> usize {
            s.iter().filter(|(n, _)| n.ends_with(".weight")).map(|(_, t)| t.numel()).sum()
        };
        assert_eq!(3 * weights(&pair), 2 * weights(&full));
        let square = ConvStage { kernel: [3, 3], out_channels: c };
        assert_eq!(weights(&full), square.weight_count(c));
        assert_eq!(weights(&pair), ConvStage::row(3, c).weight_count(c) + ConvStage::column(3, c).weight_count(c));
        assert_eq!(full.count(), 9 * c * c + c);
        assert_eq!(pair.count(), 6 * c * c + 2 * c);
    }
}

#[test]
fn checkpoint_round_trip_preserves_forward() {
    let net = MsmsfNet::<f32>::build(tiny(), 9).unwrap();
    let bytes = net.to_checkpoint().to_bytes();
    let loaded = MsmsfNet::<f32>::from_checkpoint(tiny(), &Checkpoint::from_bytes(&bytes).unwrap()).unwrap();
    for ((n1, a), (n2, b)) in net.params().iter().zip(loaded.params().iter()) {
        assert_eq!(n1, n2);
        assert!(a.data().iter().zip(b.data()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
    let run = |n: &MsmsfNet<f32>| {
        let mut g = Graph::new();
        let vars = n.bind(&mut g, false);
        let data = (0..3 * 16 * 16).map(|i| ((i * 37) % 101) as f32 / 101.0).collect();
        let x = g.constant(Tensor::from_vec(Shape::new(1, 3, 16, 16), data).unwrap());
        let out = n.forward(&mut g, &vars, x).unwrap();
        g.value(out.fused).clone()
    };
    assert_eq!(run(&net), run(&loaded));

    let other = MsmsfNetConfig::profile(NetProfile::PaperDepth, 3);
    let err = MsmsfNet::<f32>::from_checkpoint(other, &net.to_checkpoint()).unwrap_err().to_string();
    assert!(err.contains("stage0.block0.branch0.conv0.weight"), "{err}");
}

#[test]
fn parameter_names_are_deterministic() {
    let a: Vec<String> = MsmsfNet::<f32>::zeroed(tiny()).unwrap().params().names().map(String::from).collect();
    let b: Vec<String> = MsmsfNet::<f32>::zeroed(tiny()).unwrap().params().names().map(String::from).collect();
    assert_eq!(a, b);
    assert_eq!(a.first().map(String::as_str), Some("stage0.block0.branch0.conv0.weight"));
    assert_eq!(a.last().map(String::as_str), Some("fuse.bias"));
    assert_eq!(a.len(), 2 * tiny().count_weight_layers());
}
