use std::path::{Path, PathBuf};
use std::process::Command;

use msmsf_cli::commands::{cmd_eval, cmd_inspect, cmd_predict, cmd_synth, cmd_train, EvalArgs, PredictArgs, TrainSummary};
use msmsf_cli::config::EvalSettings;
use msmsf_cli::manifest::Modality;

const RUN: &str = r#"
seed = 4
output_dir = "run"
train_manifest = "data/manifest.toml"
consensus = 1

[net]
profile = "tiny"

[train]
batch_size = 2
lr = 3e-3
max_steps = 6
crop = [32, 32]
"#;

fn setup(root: &Path) -> TrainSummary {
    cmd_synth(root, Path::new("data"), 4, 32, 1).unwrap();
    std::fs::write(root.join("run.toml"), RUN).unwrap();
    cmd_train(root, Path::new("run.toml")).unwrap()
}

fn predict_args(checkpoint: &Path, output: &str) -> PredictArgs {
    PredictArgs {
        checkpoints: vec![checkpoint.to_path_buf()],
        images: Vec::new(),
        modality: Modality::Rgb,
        manifest: Some("data/manifest.toml".into()),
        scales: None,
        modality_average: false,
        output: output.into(),
        bits: 16,
        sidecar: true,
        mean: None,
    }
}

fn eval_args(predictions: &str, output: &str, tol: Option<f64>) -> EvalArgs {
    EvalArgs {
        predictions: predictions.into(),
        manifest: "data/manifest.toml".into(),
        settings: EvalSettings {
            tol_frac: tol,
            ..EvalSettings::default()
        },
        dataset: None,
        output: output.into(),
    }
}

fn bytes(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap()
}

fn relative(root: &Path, p: &Path) -> PathBuf {
    p.strip_prefix(root).unwrap().to_path_buf()
}

#[test]
fn train_predict_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let summary = setup(root);
    assert_eq!(summary.steps, 6);
    assert_eq!(summary.checkpoints.len(), 3);
    let csv = std::fs::read_to_string(&summary.loss_csv).unwrap();
    assert_eq!(csv.lines().count(), 7);
    assert!(root.join("run/resolved_config.toml").is_file());

    let ckpt = relative(root, summary.checkpoints.last().unwrap());
    let written = cmd_predict(root, &predict_args(&ckpt, "pred")).unwrap();
    let names: Vec<String> = written.iter().map(|p| p.file_name().unwrap().to_string_lossy().into()).collect();
    assert_eq!(names, ["synth_000.png", "synth_001.png", "synth_002.png", "synth_003.png"]);
    for p in &written {
        assert!(p.with_extension("pmap").is_file());
    }

    // A unit-scale pyramid writes the same files as single-scale prediction.
    let mut unit = predict_args(&ckpt, "pred_unit");
    unit.scales = Some(vec![1.0]);
    for (a, b) in written.iter().zip(cmd_predict(root, &unit).unwrap()) {
        assert_eq!(bytes(a), bytes(&b));
        assert_eq!(bytes(&a.with_extension("pmap")), bytes(&b.with_extension("pmap")));
    }
    let mut multi = predict_args(&ckpt, "pred_multi");
    multi.scales = Some(vec![0.5, 1.0, 1.5]);
    assert_eq!(cmd_predict(root, &multi).unwrap().len(), 4);

    let first = cmd_eval(root, &eval_args("pred", "eval", None)).unwrap();
    assert_eq!(first.tol_frac, 0.0075);
    assert!(first.report.ois + 1e-12 >= first.report.ods);
    assert!(first.unmatched.is_empty());
    let report = bytes(&root.join("eval/report.toml"));
    cmd_eval(root, &eval_args("pred", "eval", None)).unwrap();
    assert_eq!(bytes(&root.join("eval/report.toml")), report);
    assert!(root.join("eval/pr.csv").is_file() && root.join("eval/pr.svg").is_file());
}

#[test]
fn ground_truth_scores_perfectly_and_tolerance_is_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    cmd_synth(root, Path::new("data"), 3, 32, 2).unwrap();
    let mut args = eval_args("data/gt", "eval", Some(0.011));
    args.settings.nms = false;
    let out = cmd_eval(root, &args).unwrap();
    assert_eq!(out.report.ods, 1.0);
    assert_eq!(out.report.ois, 1.0);
    assert_eq!(out.tol_frac, 0.011);
    assert!(out.text.contains("tol_frac = 0.011"), "{}", out.text);
    // suppression may drop a few junction pixels of a binary map
    let with_nms = cmd_eval(root, &eval_args("data/gt", "eval_nms", Some(0.011))).unwrap();
    assert!(with_nms.report.ods > 0.97, "{}", with_nms.report.ods);
}

#[test]
fn usage_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let summary = setup(root);
    let ckpt = relative(root, &summary.checkpoints[0]);

    let mut args = predict_args(&ckpt, "pred");
    args.modality_average = true;
    assert_eq!(cmd_predict(root, &args).unwrap_err().exit_code(), 2);

    let mut args = predict_args(&ckpt, "pred");
    args.manifest = Some("missing.toml".into());
    assert_eq!(cmd_predict(root, &args).unwrap_err().exit_code(), 2);

    let bin = env!("CARGO_BIN_EXE_msmsf");
    let status = Command::new(bin)
        .args(["--root", root.to_str().unwrap(), "eval", "--pred", "x", "--gt", "nope.toml", "--out", "e"])
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(2));
    let status = Command::new(bin)
        .args(["--root", root.to_str().unwrap(), "predict", "--modality-average", "--checkpoint"])
        .arg(&ckpt)
        .args(["--out", "p", "data/images/synth_000.png"])
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(2));
}

#[test]
fn inspect_agrees_between_checkpoint_and_config() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let summary = setup(root);
    let ckpt = relative(root, &summary.checkpoints[0]);
    let from_ckpt = cmd_inspect(root, ckpt.to_str().unwrap()).unwrap();
    let from_profile = cmd_inspect(root, "tiny").unwrap();
    let from_sidecar = cmd_inspect(root, "run/net.toml").unwrap();
    let params = |s: &str| s.lines().find(|l| l.starts_with("parameters:")).unwrap().to_string();
    assert_eq!(params(&from_ckpt), params(&from_profile));
    assert_eq!(params(&from_sidecar), params(&from_profile));
    let total: usize = params(&from_profile)["parameters: ".len()..].parse().unwrap();
    assert!(from_ckpt.contains(&format!("checkpoint parameters: {total}")));
    assert!(from_ckpt.contains("epoch: 1"));

    let output = Command::new(env!("CARGO_BIN_EXE_msmsf")).args(["inspect", "paper-depth"]).output().unwrap();
    assert!(output.status.success());
    assert!(String::from_utf8_lossy(&output.stdout).contains("weight layers: 74"));
}

#[test]
fn fixed_seed_training_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let (sa, sb) = (setup(a.path()), setup(b.path()));
    assert_eq!(bytes(&sa.loss_csv), bytes(&sb.loss_csv));
    for (x, y) in sa.checkpoints.iter().zip(&sb.checkpoints) {
        assert_eq!(bytes(x), bytes(y));
    }
}

#[test]
fn shipped_configs_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    let mut seen = 0;
    for entry in std::fs::read_dir(root.join("configs")).unwrap() {
        let path = relative(&root, &entry.unwrap().path());
        let run = msmsf_cli::config::RunConfig::load(&root, &path).unwrap();
        run.net.resolve(&root).unwrap();
        seen += 1;
    }
    assert_eq!(seen, 5);
}
