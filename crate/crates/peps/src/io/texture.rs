//! Texture sets: a directory with `manifest.txt` and one image per layer.

use std::path::Path;

use peps_core::signals::TextureSet;

use super::image::{load_image, save_image};
use crate::error::{read, write, Error, Result};

/// Manifest file name inside a texture-set directory.
pub const MANIFEST: &str = "manifest.txt";

/// Layer names listed in the manifest, one per line; `#` starts a comment.
pub fn read_manifest(dir: &Path) -> Result<Vec<String>> {
    let path = dir.join(MANIFEST);
    let text = String::from_utf8(read(&path)?).map_err(|e| Error::format(&path, e.utf8_error().valid_up_to(), "not UTF-8"))?;
    let names: Vec<String> = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect();
    if names.is_empty() {
        return Err(Error::format(&path, 0, "manifest lists no layers"));
    }
    if let Some(bad) = names.iter().find(|n| n.contains(['/', '\\']) || n.starts_with('.')) {
        return Err(Error::format(&path, 0, format!("layer name `{bad}` is not a plain file stem")));
    }
    Ok(names)
}

/// Load every manifest layer from `<name>.png`, or `<name>.ppm` when no PNG exists.
///
/// Channels are stacked in name order whatever the manifest order.
pub fn load_texture_set(dir: &Path) -> Result<TextureSet> {
    let mut layers = Vec::new();
    for name in read_manifest(dir)? {
        let png = dir.join(format!("{name}.png"));
        let path = if png.exists() { png } else { dir.join(format!("{name}.ppm")) };
        layers.push((name, load_image(&path)?));
    }
    TextureSet::new(layers).map_err(|e| Error::in_file(dir, e))
}

/// Write each layer as `<name>.png` plus the manifest.
pub fn save_texture_set(dir: &Path, set: &TextureSet) -> Result<()> {
    for (name, img) in set.names().iter().zip(set.layers()) {
        save_image(&dir.join(format!("{name}.png")), img)?;
    }
    let mut manifest = set.names().join("\n");
    manifest.push('\n');
    write(&dir.join(MANIFEST), manifest.as_bytes())
}
