//! Model checkpoint:
//!
//! ```text
//! "DLCAMODL" | version u16 | hidden, dense1, dense2, classes: u32
//! | meta_len u32 | metadata (TOML) | n_params u64 | n_params × f64 | crc32 u32
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{Architecture, LstmClassifier, CLASSES};
use super::train::{StateClassifier, TrainConfig};
use crate::datasets::{DatasetMetadata, Standardizer};
use crate::error::{Error, Result};

pub const MODEL_MAGIC: &[u8; 8] = b"DLCAMODL";
pub const MODEL_VERSION: u16 = 1;

/// Everything needed to apply and reproduce a trained model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointMetadata {
    pub standardizer: Standardizer,
    pub sequence_len: usize,
    pub train: TrainConfig,
    pub dataset: DatasetMetadata,
    pub code_version: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub model: LstmClassifier,
    pub metadata: CheckpointMetadata,
}

impl Checkpoint {
    pub fn classifier(&self) -> StateClassifier {
        StateClassifier {
            model: self.model.clone(),
            standardizer: self.metadata.standardizer,
            sequence_len: self.metadata.sequence_len,
        }
    }
}

pub fn save_checkpoint(ck: &Checkpoint, path: &Path) -> Result<()> {
    let arch = ck.model.architecture();
    let meta = toml::to_string(&ck.metadata)
        .map_err(|e| Error::Format(format!("cannot encode checkpoint metadata: {e}")))?;
    let mut buf = Vec::new();
    buf.extend_from_slice(MODEL_MAGIC);
    buf.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    for v in [arch.hidden, arch.dense1, arch.dense2, CLASSES] {
        buf.extend_from_slice(&(v as u32).to_le_bytes());
    }
    buf.extend_from_slice(&(meta.len() as u32).to_le_bytes());
    buf.extend_from_slice(meta.as_bytes());
    buf.extend_from_slice(&(ck.model.n_params() as u64).to_le_bytes());
    for p in ck.model.params() {
        buf.extend_from_slice(&p.to_le_bytes());
    }
    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, buf)?;
    Ok(())
}

fn take<'a>(bytes: &'a [u8], pos: &mut usize, n: usize, what: &str) -> Result<&'a [u8]> {
    match pos.checked_add(n).filter(|&e| e <= bytes.len()) {
        Some(end) => {
            let out = &bytes[*pos..end];
            *pos = end;
            Ok(out)
        }
        None => Err(Error::Format(format!(
            "checkpoint truncated while reading {what}"
        ))),
    }
}

fn u32_at(bytes: &[u8], pos: &mut usize, what: &str) -> Result<u32> {
    Ok(u32::from_le_bytes(
        take(bytes, pos, 4, what)?.try_into().expect("4 bytes"),
    ))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = fs::read(path)?;
    let mut pos = 0;
    if take(&bytes, &mut pos, 8, "magic")? != MODEL_MAGIC {
        return Err(Error::Format(format!(
            "{} is not a model checkpoint",
            path.display()
        )));
    }
    let version = u16::from_le_bytes(
        take(&bytes, &mut pos, 2, "version")?
            .try_into()
            .expect("2 bytes"),
    );
    if version != MODEL_VERSION {
        return Err(Error::Version {
            found: version,
            expected: MODEL_VERSION,
        });
    }
    let hidden = u32_at(&bytes, &mut pos, "architecture")? as usize;
    let dense1 = u32_at(&bytes, &mut pos, "architecture")? as usize;
    let dense2 = u32_at(&bytes, &mut pos, "architecture")? as usize;
    let classes = u32_at(&bytes, &mut pos, "architecture")? as usize;
    if classes != CLASSES {
        return Err(Error::Format(format!(
            "checkpoint has {classes} output classes, expected {CLASSES}"
        )));
    }
    let meta_len = u32_at(&bytes, &mut pos, "metadata length")? as usize;
    let meta = std::str::from_utf8(take(&bytes, &mut pos, meta_len, "metadata")?)
        .map_err(|e| Error::Format(format!("checkpoint metadata is not UTF-8: {e}")))?;
    let n = u64::from_le_bytes(
        take(&bytes, &mut pos, 8, "parameter count")?
            .try_into()
            .expect("8 bytes"),
    ) as usize;
    let blob = take(&bytes, &mut pos, n.saturating_mul(8), "parameters")?;
    let end = pos;
    let stored = u32_at(&bytes, &mut pos, "checksum")?;
    if pos != bytes.len() {
        return Err(Error::Format(
            "trailing bytes after checkpoint checksum".into(),
        ));
    }
    let computed = crc32fast::hash(&bytes[..end]);
    if stored != computed {
        return Err(Error::Checksum { stored, computed });
    }
    let metadata: CheckpointMetadata =
        toml::from_str(meta).map_err(|e| Error::Format(format!("bad checkpoint metadata: {e}")))?;
    let params = blob
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
        .collect();
    let model = LstmClassifier::from_params(
        Architecture {
            hidden,
            dense1,
            dense2,
        },
        params,
    )?;
    Ok(Checkpoint { model, metadata })
}
