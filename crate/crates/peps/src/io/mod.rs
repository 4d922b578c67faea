//! File formats: images, SDF volumes, texture sets and checkpoints.

mod image;
mod texture;
mod volume;

use std::path::Path;

use peps_core::model::ModelCheckpoint;

use crate::error::{read, write, Error, Result};

pub use self::image::{decode_image, load_image, save_image};
pub use texture::{load_texture_set, read_manifest, save_texture_set, MANIFEST};
pub use volume::{decode_volume, encode_volume, load_volume, save_volume, VOLUME_MAGIC, VOLUME_VERSION};

pub fn save_checkpoint(path: &Path, ckpt: &ModelCheckpoint) -> Result<()> {
    write(path, &ckpt.to_bytes())
}

pub fn load_checkpoint(path: &Path) -> Result<ModelCheckpoint> {
    ModelCheckpoint::from_bytes(&read(path)?).map_err(|e| Error::in_file(path, e))
}
