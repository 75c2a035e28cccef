//! Binary dataset file format.
//!
//! Layout: magic `OWTC`, format version `u16` LE, `u32` LE record count,
//! then per record: `i32` LE label (-1 = unlabeled), `u16` LE original
//! payload length (pre-padding, capped at 1456), and 1456 payload bytes
//! (pre-scaling values, zero padded).
//!
//! Class display names have no slot in the binary layout; when a dataset
//! carries names they are stored in a JSON sidecar `<file>.names.json` and
//! picked up again on read.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::packet::{LabeledDataset, PacketVector, VECTOR_LEN};

const MAGIC: &[u8; 4] = b"OWTC";
const VERSION: u16 = 1;
const RECORD_LEN: usize = 4 + 2 + VECTOR_LEN;

fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_owned()).unwrap_or_default();
    name.push(".names.json");
    path.with_file_name(name)
}

pub fn write_dataset(dataset: &LabeledDataset, path: &Path) -> Result<()> {
    let mut out = Vec::with_capacity(14 + dataset.len() * RECORD_LEN);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(dataset.len() as u32).to_le_bytes());
    for record in dataset.records() {
        let label: i32 = record.label.map_or(-1, |l| l as i32);
        out.extend_from_slice(&label.to_le_bytes());
        out.extend_from_slice(&record.vector.payload_len().to_le_bytes());
        out.extend_from_slice(&record.vector.to_bytes());
    }
    fs::write(path, out)?;

    let sidecar = sidecar_path(path);
    if dataset.class_names().is_empty() {
        if sidecar.exists() {
            fs::remove_file(&sidecar)?;
        }
    } else {
        let text = serde_json::to_string_pretty(dataset.class_names())
            .expect("class names serialize");
        fs::write(&sidecar, text)?;
    }
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<LabeledDataset> {
    let bytes = fs::read(path)?;
    let mut dataset = dataset_from_bytes(&bytes)?;
    let sidecar = sidecar_path(path);
    if sidecar.exists() {
        let text = fs::read_to_string(&sidecar)?;
        let names: BTreeMap<u32, String> = serde_json::from_str(&text).map_err(|e| {
            Error::Format {
                offset: 0,
                detail: format!("names sidecar {}: {e}", sidecar.display()),
            }
        })?;
        for (id, name) in names {
            dataset.set_class_name(id, name);
        }
    }
    Ok(dataset)
}

pub(crate) fn dataset_from_bytes(bytes: &[u8]) -> Result<LabeledDataset> {
    if bytes.len() < 10 {
        return Err(Error::Format {
            offset: bytes.len() as u64,
            detail: "file shorter than the 10-byte dataset header".into(),
        });
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::Format {
            offset: 0,
            detail: format!("bad magic {:02x?}, expected \"OWTC\"", &bytes[..4]),
        });
    }
    let version = u16::from_le_bytes(bytes[4..6].try_into().expect("2 bytes"));
    if version != VERSION {
        return Err(Error::Version {
            found: version,
            expected: VERSION,
        });
    }
    let count = u32::from_le_bytes(bytes[6..10].try_into().expect("4 bytes")) as usize;
    let expected_len = 10 + count * RECORD_LEN;
    if bytes.len() != expected_len {
        return Err(Error::Format {
            offset: bytes.len().min(expected_len) as u64,
            detail: format!(
                "expected {count} records ({expected_len} bytes), file has {} bytes",
                bytes.len()
            ),
        });
    }

    let mut dataset = LabeledDataset::new();
    let mut pos = 10;
    for index in 0..count {
        let label_raw = i32::from_le_bytes(bytes[pos..pos + 4].try_into().expect("4 bytes"));
        let payload_len =
            u16::from_le_bytes(bytes[pos + 4..pos + 6].try_into().expect("2 bytes")) as usize;
        if label_raw < -1 {
            return Err(Error::Format {
                offset: pos as u64,
                detail: format!("record {index}: invalid label {label_raw}"),
            });
        }
        if payload_len == 0 || payload_len > VECTOR_LEN {
            return Err(Error::Format {
                offset: (pos + 4) as u64,
                detail: format!("record {index}: payload length {payload_len} out of range"),
            });
        }
        let payload = &bytes[pos + 6..pos + 6 + payload_len];
        let vector = PacketVector::from_payload(payload).expect("non-empty payload");
        let label = (label_raw >= 0).then_some(label_raw as u32);
        dataset.push(vector, label);
        pos += RECORD_LEN;
    }
    Ok(dataset)
}
