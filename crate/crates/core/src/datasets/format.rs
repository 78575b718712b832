//! Binary container:
//!
//! ```text
//! "DLCADSET" | version u16 | meta_len u32 | metadata (TOML, UTF-8)
//! | n u64 | len u64 | n × (label u8, len × f64) | crc32 u32
//! ```
//!
//! Integers and floats are little-endian; the CRC covers every preceding byte.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{DatasetMetadata, PhotocurrentDataset, Sample, GENERATOR_VERSION};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"DLCADSET";
pub const FORMAT_VERSION: u16 = 1;

pub fn save(ds: &PhotocurrentDataset, path: &Path) -> Result<()> {
    ds.validate()?;
    let meta = toml::to_string(&ds.metadata)
        .map_err(|e| Error::Format(format!("cannot encode metadata: {e}")))?;
    let len = ds.sequence_len();
    let mut buf = Vec::with_capacity(32 + meta.len() + ds.len() * (1 + 8 * len));
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(meta.len() as u32).to_le_bytes());
    buf.extend_from_slice(meta.as_bytes());
    buf.extend_from_slice(&(ds.len() as u64).to_le_bytes());
    buf.extend_from_slice(&(len as u64).to_le_bytes());
    for s in &ds.samples {
        buf.push(s.label);
        for x in &s.current {
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, buf)?;
    Ok(())
}

/// Loads a dataset, logging any non-fatal warnings.
pub fn load(path: &Path) -> Result<PhotocurrentDataset> {
    let (ds, warnings) = load_with_warnings(path)?;
    for w in warnings {
        log::warn!("{}: {w}", path.display());
    }
    Ok(ds)
}

/// Loads a dataset and returns the warnings instead of logging them.
pub fn load_with_warnings(path: &Path) -> Result<(PhotocurrentDataset, Vec<String>)> {
    let bytes = fs::read(path)?;
    decode(&bytes)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let out = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(out)
            }
            None => Err(Error::Format(format!(
                "file truncated while reading {what} at byte {}",
                self.pos
            ))),
        }
    }

    fn array<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        Ok(self.take(N, what)?.try_into().expect("length checked"))
    }
}

fn decode(bytes: &[u8]) -> Result<(PhotocurrentDataset, Vec<String>)> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(8, "magic")? != MAGIC {
        return Err(Error::Format("not a dataset file (bad magic bytes)".into()));
    }
    let version = u16::from_le_bytes(c.array("version")?);
    if version != FORMAT_VERSION {
        return Err(Error::Version {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let meta_len = u32::from_le_bytes(c.array("metadata length")?) as usize;
    let meta = std::str::from_utf8(c.take(meta_len, "metadata")?)
        .map_err(|e| Error::Format(format!("metadata is not UTF-8: {e}")))?;
    let n = u64::from_le_bytes(c.array("sample count")?) as usize;
    let len = u64::from_le_bytes(c.array("sequence length")?) as usize;
    let body = n
        .checked_mul(
            len.checked_mul(8)
                .and_then(|b| b.checked_add(1))
                .unwrap_or(usize::MAX),
        )
        .ok_or_else(|| Error::Format("sample block size overflows".into()))?;
    let block = c.take(body, "samples")?;
    let payload_end = c.pos;
    let stored = u32::from_le_bytes(c.array("checksum")?);
    if c.pos != bytes.len() {
        return Err(Error::Format(format!(
            "{} trailing bytes after checksum",
            bytes.len() - c.pos
        )));
    }
    let computed = crc32fast::hash(&bytes[..payload_end]);
    if stored != computed {
        return Err(Error::Checksum { stored, computed });
    }
    let metadata: DatasetMetadata =
        toml::from_str(meta).map_err(|e| Error::Format(format!("bad metadata: {e}")))?;
    let samples = block
        .chunks_exact(1 + 8 * len)
        .map(|chunk| Sample {
            label: chunk[0],
            current: chunk[1..]
                .chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
                .collect(),
        })
        .collect();
    let ds = PhotocurrentDataset { metadata, samples };
    ds.validate()?;
    let mut warnings = Vec::new();
    if ds.metadata.generator_version != GENERATOR_VERSION {
        warnings.push(format!(
            "generated by {} but this is {GENERATOR_VERSION}; regenerate for bit-exact reproduction",
            ds.metadata.generator_version
        ));
    }
    Ok((ds, warnings))
}

/// One row per sample: `label, j_0, j_1, …`.
pub fn export_csv(ds: &PhotocurrentDataset, path: &Path) -> Result<()> {
    let mut file = fs::File::create(path)?;
    writeln!(
        file,
        "# theta={} master_seed={} generator={}",
        ds.metadata.theta, ds.metadata.master_seed, ds.metadata.generator_version
    )?;
    let mut w = csv::Writer::from_writer(file);
    let mut header = vec!["label".to_string()];
    header.extend((0..ds.sequence_len()).map(|k| format!("j{k}")));
    w.write_record(&header)?;
    for s in &ds.samples {
        let mut row = vec![s.label.to_string()];
        row.extend(s.current.iter().map(|x| x.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
