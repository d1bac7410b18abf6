use std::path::{Path, PathBuf};

use msmsf_core::synthetic::generate;

use super::{create_dir, write_text};
use crate::error::Result;
use crate::imageio::{save_binary, save_rgb};
use crate::manifest::{DatasetManifest, ManifestEntry, Modality, Split};

/// Writes `count` synthetic images with exact edge maps under `out`
/// (relative to `root`) and returns the manifest path relative to `root`.
pub fn cmd_synth(root: &Path, out: &Path, count: usize, size: usize, seed: u64) -> Result<PathBuf> {
    let dir = root.join(out);
    create_dir(&dir.join("images"))?;
    create_dir(&dir.join("gt"))?;
    let mut entries = Vec::with_capacity(count);
    for (i, img) in generate(count, size, seed).iter().enumerate() {
        let name = format!("synth_{i:03}.png");
        let image = out.join("images").join(&name);
        let gt = out.join("gt").join(&name);
        save_rgb(&root.join(&image), &img.image)?;
        save_binary(&root.join(&gt), size, size, &img.edges)?;
        entries.push(ManifestEntry {
            image,
            annotations: vec![gt],
            modality: Modality::Rgb,
        });
    }
    let manifest = DatasetManifest {
        name: "synthetic".into(),
        split: Split::Train,
        dataset: None,
        augmentation: "none".into(),
        entries,
    };
    let path = out.join("manifest.toml");
    write_text(&root.join(&path), &manifest.to_toml())?;
    Ok(path)
}
