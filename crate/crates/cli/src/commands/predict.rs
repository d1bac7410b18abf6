use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use msmsf_core::infer::{modality_average, multiscale_predict, predict, EdgeProbabilityMap};
use msmsf_core::model::{Checkpoint, MsmsfNet};
use msmsf_core::{Error, Tensor};

use super::create_dir;
use crate::config::NetSidecar;
use crate::error::{CliError, Result};
use crate::imageio::{load_image, save_probability_png, write_sidecar, SIDECAR_EXT};
use crate::manifest::{file_stem, DatasetManifest, Modality};

#[derive(Clone, Debug, PartialEq)]
pub struct PredictArgs {
    pub checkpoints: Vec<PathBuf>,
    /// Images tagged with `modality`; ignored when a manifest is given.
    pub images: Vec<PathBuf>,
    pub modality: Modality,
    pub manifest: Option<PathBuf>,
    /// Per-scale averaging; `None` predicts at the original size only.
    pub scales: Option<Vec<f64>>,
    pub modality_average: bool,
    pub output: PathBuf,
    pub bits: u8,
    pub sidecar: bool,
    pub mean: Option<[f32; 3]>,
}

struct LoadedNet {
    net: MsmsfNet,
    modality: Modality,
}

fn load_net(root: &Path, checkpoint: &Path) -> Result<LoadedNet> {
    let path = root.join(checkpoint);
    let sidecar = NetSidecar::for_checkpoint(&path)?;
    let ckpt = Checkpoint::load(&path)?;
    Ok(LoadedNet {
        net: MsmsfNet::from_checkpoint(sidecar.net, &ckpt)?,
        modality: sidecar.modality,
    })
}

fn run(net: &MsmsfNet, image: &Tensor, scales: Option<&[f64]>) -> Result<EdgeProbabilityMap> {
    Ok(match scales {
        Some(s) => multiscale_predict(net, image, s)?,
        None => predict(net, image)?,
    })
}

/// Predicts every input and writes `<stem>.png` (plus `<stem>.pmap` when
/// `sidecar` is set) into the output directory. Returns the PNG paths.
pub fn cmd_predict(root: &Path, args: &PredictArgs) -> Result<Vec<PathBuf>> {
    let expected = if args.modality_average { 2 } else { 1 };
    if args.checkpoints.len() != expected {
        return Err(CliError::usage(if args.modality_average {
            format!(
                "--modality-average needs an RGB and an HHA checkpoint, got {}",
                args.checkpoints.len()
            )
        } else {
            format!("expected one checkpoint, got {}", args.checkpoints.len())
        }));
    }
    let nets = args
        .checkpoints
        .iter()
        .map(|c| load_net(root, c))
        .collect::<Result<Vec<_>>>()?;

    let inputs: Vec<(PathBuf, Modality)> = match &args.manifest {
        Some(m) => DatasetManifest::load(root, m)?
            .entries
            .into_iter()
            .map(|e| (e.image, e.modality))
            .collect(),
        None => args.images.iter().map(|p| (p.clone(), args.modality)).collect(),
    };
    if inputs.is_empty() {
        return Err(CliError::usage("no input images"));
    }
    let out = root.join(&args.output);
    create_dir(&out)?;
    let scales = args.scales.as_deref();

    let mut results: Vec<(String, EdgeProbabilityMap)> = Vec::new();
    if args.modality_average {
        let rgb = nets.iter().find(|n| n.modality == Modality::Rgb);
        let hha = nets.iter().find(|n| n.modality == Modality::Hha);
        let (Some(rgb), Some(hha)) = (rgb, hha) else {
            return Err(CliError::usage("--modality-average needs one rgb and one hha checkpoint"));
        };
        let mut pairs: BTreeMap<String, [Option<PathBuf>; 2]> = BTreeMap::new();
        for (path, m) in inputs {
            let slot = &mut pairs.entry(file_stem(&path)).or_default()[(m == Modality::Hha) as usize];
            if slot.replace(path).is_some() {
                return Err(Error::Data("duplicate input stem for one modality".into()).into());
            }
        }
        for (stem, pair) in pairs {
            let [Some(a), Some(b)] = pair else {
                return Err(Error::Data(format!("input {stem} lacks its rgb/hha counterpart")).into());
            };
            let pa = run(&rgb.net, &load_image(&root.join(a), args.mean)?, scales)?;
            let pb = run(&hha.net, &load_image(&root.join(b), args.mean)?, scales)?;
            results.push((stem, modality_average(&pa, &pb)?));
        }
    } else {
        let n = &nets[0];
        for (path, m) in inputs {
            if m != n.modality {
                return Err(Error::Config(format!(
                    "input {} is tagged {m} but the checkpoint was trained on {}",
                    path.display(),
                    n.modality
                ))
                .into());
            }
            let stem = file_stem(&path);
            if results.iter().any(|(s, _)| *s == stem) {
                return Err(Error::Data(format!("two inputs share the name {stem}")).into());
            }
            results.push((stem, run(&n.net, &load_image(&root.join(&path), args.mean)?, scales)?));
        }
    }

    let mut written = Vec::with_capacity(results.len());
    for (stem, map) in results {
        let png = out.join(format!("{stem}.png"));
        save_probability_png(&png, &map, args.bits)?;
        if args.sidecar {
            write_sidecar(&out.join(format!("{stem}.{SIDECAR_EXT}")), &map)?;
        }
        written.push(png);
    }
    Ok(written)
}
