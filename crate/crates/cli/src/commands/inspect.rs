use std::fmt::Write as _;
use std::path::Path;

use msmsf_core::model::{Checkpoint, MsmsfNet, MsmsfNetConfig, NetProfile};
use msmsf_core::Error;

use crate::config::{read_toml, NetSidecar};
use crate::error::Result;

/// Nominal input extent used for the per-stage shape listing.
const NOMINAL_EXTENT: usize = 320;

/// Summarizes a network profile name, a network configuration file or a
/// checkpoint (with its `net.toml` sidecar).
pub fn cmd_inspect(root: &Path, target: &str) -> Result<String> {
    let mut checkpoint = None;
    let config = if let Ok(p) = target.parse::<NetProfile>() {
        MsmsfNetConfig::profile(p, 3)
    } else {
        let path = root.join(target);
        if !path.is_file() {
            return Err(Error::Config(format!("{target} is neither a profile nor a readable file")).into());
        }
        if path.extension().is_some_and(|e| e == "ckpt") {
            let ckpt = Checkpoint::load(&path)?;
            let sidecar = NetSidecar::for_checkpoint(&path)?;
            checkpoint = Some(ckpt);
            sidecar.net
        } else {
            match read_toml::<MsmsfNetConfig>(&path) {
                Ok(c) => c,
                Err(_) => read_toml::<NetSidecar>(&path)?.net,
            }
        }
    };
    config.validate()?;
    let net = MsmsfNet::<f32>::zeroed(config.clone())?;
    let params = net.count_parameters();
    let (side_rf, fused_rf) = config.receptive_fields();

    let mut s = String::new();
    let _ = writeln!(s, "network: {}", config.name);
    let _ = writeln!(s, "input channels: {}", config.in_channels);
    let _ = writeln!(s, "weight layers: {}", config.count_weight_layers());
    let _ = writeln!(s, "parameters: {params}");
    let mut extent = NOMINAL_EXTENT;
    for (i, stage) in config.stages.iter().enumerate() {
        if i > 0 {
            extent = extent.div_ceil(2);
        }
        let channels = stage.blocks.last().map_or(0, |b| b.out_channels());
        let convs: usize = stage.blocks.iter().map(|b| b.conv_count()).sum();
        let _ = writeln!(
            s,
            "stage {}: {} block(s), {convs} convs, output (1, {channels}, {extent}, {extent}) for a {NOMINAL_EXTENT}x{NOMINAL_EXTENT} input, side receptive field {}x{}",
            i + 1,
            stage.blocks.len(),
            side_rf[i].0,
            side_rf[i].1
        );
    }
    let _ = writeln!(s, "fused receptive field: {}x{}", fused_rf.0, fused_rf.1);
    if let Some(ckpt) = checkpoint {
        let stored = ckpt.parameter_count();
        if stored != params {
            return Err(Error::Format(format!(
                "checkpoint holds {stored} parameters but its configuration has {params}"
            ))
            .into());
        }
        MsmsfNet::<f32>::from_checkpoint(config, &ckpt)?;
        let _ = writeln!(s, "checkpoint parameters: {stored}");
        if let Some(e) = ckpt.scalar("train.epoch") {
            let _ = writeln!(s, "epoch: {e}");
        }
    }
    Ok(s)
}
