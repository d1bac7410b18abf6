use std::path::{Path, PathBuf};

use msmsf_core::model::MsmsfNet;
use msmsf_core::train::{augment, consensus_gt, train, Sample};
use msmsf_core::Error;

use super::{create_dir, write_text};
use crate::config::{NetSidecar, RunConfig, NET_SIDECAR};
use crate::error::{CliError, Result};
use crate::imageio::{load_binary, load_image};
use crate::manifest::DatasetManifest;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainSummary {
    pub output_dir: PathBuf,
    pub checkpoints: Vec<PathBuf>,
    pub loss_csv: PathBuf,
    pub steps: usize,
    pub first_loss: f64,
    pub last_loss: f64,
}

/// Trains from scratch as described by the run configuration at `config`
/// and writes per-epoch checkpoints, `loss.csv`, the resolved configuration
/// and the network sidecar into the output directory.
pub fn cmd_train(root: &Path, config: &Path) -> Result<TrainSummary> {
    let run = RunConfig::load(root, config)?;
    let manifest_path = run
        .train_manifest
        .as_deref()
        .ok_or_else(|| CliError::usage("run configuration lacks `train_manifest`"))?;
    let manifest = DatasetManifest::load(root, manifest_path)?;
    let modality = manifest.modality()?;
    let net_config = run.net.resolve(root)?;
    let samples = load_samples(root, &manifest, &run)?;

    let out = root.join(&run.output_dir);
    create_dir(&out)?;
    write_text(&out.join("resolved_config.toml"), &run.to_toml())?;
    let sidecar = NetSidecar {
        modality,
        seed: run.seed,
        net: net_config.clone(),
    };
    write_text(&out.join(NET_SIDECAR), &sidecar.to_toml())?;

    let mut net = MsmsfNet::build(net_config, run.seed)?;
    log::info!(
        "training {} ({} samples, {} parameters)",
        manifest.name,
        samples.len(),
        net.count_parameters()
    );
    let mut checkpoints = Vec::new();
    let log = train(&mut net, &samples, &run.train, |end| {
        let path = out.join(format!("epoch_{:03}.ckpt", end.epoch));
        end.checkpoint().save(&path)?;
        log::info!("epoch {} step {} mean loss {:.4}", end.epoch, end.step, end.mean_loss());
        checkpoints.push(path);
        Ok(())
    })?;
    let loss_csv = out.join("loss.csv");
    write_text(&loss_csv, &log.to_csv_string())?;
    Ok(TrainSummary {
        output_dir: out,
        checkpoints,
        loss_csv,
        steps: log.records.len(),
        first_loss: log.first_loss().unwrap_or(f64::NAN),
        last_loss: log.last_loss().unwrap_or(f64::NAN),
    })
}

/// Images with consensus labels, expanded by the manifest's augmentation
/// policy.
fn load_samples(root: &Path, manifest: &DatasetManifest, run: &RunConfig) -> Result<Vec<Sample>> {
    let policy = manifest.policy()?;
    let mut samples = Vec::new();
    for (i, e) in manifest.entries.iter().enumerate() {
        let image = load_image(&root.join(&e.image), run.mean)?;
        let s = image.shape();
        let mut annotations = Vec::with_capacity(e.annotations.len());
        for a in &e.annotations {
            let (h, w, mask) = load_binary(&root.join(a))?;
            if (h, w) != (s.h, s.w) {
                return Err(Error::Data(format!(
                    "annotation {} is {h}x{w} but image {} is {}x{}",
                    a.display(),
                    e.image.display(),
                    s.h,
                    s.w
                ))
                .into());
            }
            annotations.push(mask);
        }
        let k = run.consensus.min(annotations.len().max(1));
        let gt = consensus_gt(&annotations, s.h, s.w, k)?;
        let sample = Sample::new(image, gt)?;
        samples.extend(augment(&sample, &policy, run.seed.wrapping_add(i as u64))?);
    }
    Ok(samples)
}
