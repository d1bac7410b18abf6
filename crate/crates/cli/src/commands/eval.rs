use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use msmsf_core::eval::{emit_pr_plot, evaluate_dataset, EvalItem, EvalReport};
use msmsf_core::train::DatasetProfile;
use msmsf_core::Error;

use super::{create_dir, write_text};
use crate::config::EvalSettings;
use crate::error::Result;
use crate::imageio::{load_binary, load_prediction, SIDECAR_EXT};
use crate::manifest::{file_stem, DatasetManifest};

#[derive(Clone, Debug, PartialEq)]
pub struct EvalArgs {
    pub predictions: PathBuf,
    pub manifest: PathBuf,
    pub settings: EvalSettings,
    /// Overrides the manifest's dataset profile for tolerance selection.
    pub dataset: Option<DatasetProfile>,
    pub output: PathBuf,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalOutcome {
    pub report: EvalReport,
    pub text: String,
    pub tol_frac: f64,
    /// Stems present on only one side.
    pub unmatched: Vec<String>,
}

/// Evaluates the predictions in a directory against a ground-truth
/// manifest, pairing files by stem. Writes `report.toml`, `pr.csv` and
/// `pr.svg` into the output directory.
pub fn cmd_eval(root: &Path, args: &EvalArgs) -> Result<EvalOutcome> {
    let manifest = DatasetManifest::load(root, &args.manifest)?;
    let config = args.settings.to_eval_config(args.dataset.or(manifest.dataset));
    config.validate()?;

    let pred_dir = root.join(&args.predictions);
    let listing = std::fs::read_dir(&pred_dir).map_err(|e| Error::io(&pred_dir, e))?;
    // stem → file, preferring the lossless sidecar over PNG
    let mut preds: BTreeMap<String, PathBuf> = BTreeMap::new();
    for entry in listing {
        let path = entry.map_err(|e| Error::io(&pred_dir, e))?.path();
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        if ext != SIDECAR_EXT && ext != "png" {
            continue;
        }
        let stem = file_stem(&path);
        let keep = preds.get(&stem).is_some_and(|p| p.extension().is_some_and(|e| e == SIDECAR_EXT));
        if !keep {
            preds.insert(stem, path);
        }
    }

    let mut items = Vec::new();
    let mut unmatched = Vec::new();
    let mut seen = Vec::new();
    for e in &manifest.entries {
        let stem = e.stem();
        let Some(path) = preds.get(&stem) else {
            unmatched.push(stem);
            continue;
        };
        let prediction = load_prediction(path)?;
        let mut annotations = Vec::new();
        for a in &e.annotations {
            let (h, w, mask) = load_binary(&root.join(a))?;
            if (h, w) != (prediction.height(), prediction.width()) {
                return Err(Error::Data(format!(
                    "prediction {} is {}x{} but annotation {} is {h}x{w}",
                    path.display(),
                    prediction.height(),
                    prediction.width(),
                    a.display()
                ))
                .into());
            }
            annotations.push(mask);
        }
        items.push(EvalItem {
            prediction,
            annotations,
        });
        seen.push(stem);
    }
    unmatched.extend(preds.keys().filter(|s| !seen.contains(s)).cloned());
    unmatched.sort();
    for s in &unmatched {
        log::warn!("unmatched stem {s}");
    }
    if items.is_empty() {
        return Err(Error::Data(format!(
            "no prediction in {} matches an entry of {}",
            pred_dir.display(),
            args.manifest.display()
        ))
        .into());
    }

    let report = evaluate_dataset(&items, &config)?;
    let out = root.join(&args.output);
    create_dir(&out)?;
    emit_pr_plot(&[(manifest.name.clone(), report.curve.clone())], &out.join("pr"))?;
    let text = render(&manifest.name, &config, items.len(), &unmatched, &report);
    write_text(&out.join("report.toml"), &text)?;
    Ok(EvalOutcome {
        report,
        text,
        tol_frac: config.tol_frac,
        unmatched,
    })
}

fn render(
    name: &str,
    config: &msmsf_core::eval::EvalConfig,
    images: usize,
    unmatched: &[String],
    r: &EvalReport,
) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "dataset = {name:?}");
    let _ = writeln!(s, "tol_frac = {}", config.tol_frac);
    let _ = writeln!(s, "thresholds = {}", config.thresholds.len());
    let _ = writeln!(s, "nms = {}", config.nms);
    let _ = writeln!(
        s,
        "ap_rule = \"trapezoid over recall; best precision per recall; zero-recall point carries the first precision\""
    );
    let _ = writeln!(s, "images = {images}");
    let _ = writeln!(s, "unmatched = {unmatched:?}");
    let _ = writeln!(s, "ods = {:.6}", r.ods);
    let _ = writeln!(s, "ods_threshold = {}", r.ods_threshold);
    let _ = writeln!(s, "ois = {:.6}", r.ois);
    let _ = writeln!(s, "ap = {:.6}", r.ap);
    s
}
