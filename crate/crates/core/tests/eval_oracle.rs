use msmsf_core::eval::{evaluate_dataset, EvalConfig, EvalItem};
use msmsf_core::infer::EdgeProbabilityMap;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

mod support {
    pub mod brute_force;
}
use support::brute_force::{random_instance, reference, Instance};

fn items(instances: &[Instance]) -> Vec<EvalItem> {
    instances
        .iter()
        .map(|i| EvalItem {
            prediction: EdgeProbabilityMap::new(i.height, i.width, i.pred.clone()).unwrap(),
            annotations: vec![i.gt.clone()],
        })
        .collect()
}

#[test]
fn matches_exhaustive_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for tol in [0.03, 0.05, 0.07, 0.1] {
        for _ in 0..25 {
            let instances = [random_instance(&mut rng), random_instance(&mut rng)];
            let config = EvalConfig {
                tol_frac: tol,
                nms: false,
                ..EvalConfig::default()
            };
            let got = evaluate_dataset(&items(&instances), &config).unwrap();
            let want = reference(&instances, tol);
            assert!((got.ods - want.ods).abs() <= 1e-9, "ODS {} vs {}", got.ods, want.ods);
            assert!((got.ois - want.ois).abs() <= 1e-9, "OIS {} vs {}", got.ois, want.ois);
            assert!((got.ap - want.ap).abs() <= 1e-9, "AP {} vs {}", got.ap, want.ap);
        }
    }
}
