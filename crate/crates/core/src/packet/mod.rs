//! Packet ingestion and preprocessing.
//!
//! Raw captured frames become fixed-length numeric vectors: the first 24
//! bytes are removed (blanket header strip), the next 1456 bytes are kept,
//! short payloads are right-padded with zeros, and every byte is scaled by
//! 1/255 into `[0, 1]`.

mod format;
mod pcap;
mod synth;

pub use format::{read_dataset, write_dataset};
pub use pcap::ingest_pcap;
pub use synth::{default_profiles, generate_packets, profiles_from_json, profiles_to_json,
    synth_generate, SynthAppProfile};

use std::collections::BTreeMap;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::seed;
use crate::tensor::Tensor;

/// Model input width: bytes kept per packet after the header strip.
pub const VECTOR_LEN: usize = 1456;
/// Leading bytes removed from every captured frame.
pub const HEADER_STRIP: usize = 24;

/// A captured frame plus optional ground truth and provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    pub raw: Vec<u8>,
    pub truth_label: Option<u32>,
    pub source: String,
    pub timestamp_us: Option<u64>,
}

impl Packet {
    pub fn new(raw: Vec<u8>) -> Self {
        Self {
            raw,
            truth_label: None,
            source: String::new(),
            timestamp_us: None,
        }
    }
}

/// Fixed-length numeric payload vector in `[0, 1]^1456`.
///
/// `payload_len` records the pre-padding byte count (capped at 1456) for the
/// dataset file format; values beyond it are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PacketVector {
    values: Vec<f64>,
    payload_len: u16,
}

impl PacketVector {
    /// Builds a vector from payload bytes (already header-stripped):
    /// truncate at 1456, right-pad with zeros, scale by 1/255.
    pub fn from_payload(payload: &[u8]) -> Result<Self> {
        if payload.is_empty() {
            return Err(Error::Validation("payload must be non-empty".into()));
        }
        let kept = payload.len().min(VECTOR_LEN);
        let mut values = vec![0.0; VECTOR_LEN];
        for (v, &b) in values.iter_mut().zip(&payload[..kept]) {
            *v = f64::from(b) / 255.0;
        }
        Ok(Self {
            values,
            payload_len: kept as u16,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn payload_len(&self) -> u16 {
        self.payload_len
    }

    /// Exact inverse of the 1/255 scaling.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.values
            .iter()
            .map(|&v| (v * 255.0).round() as u8)
            .collect()
    }

    pub fn to_tensor(&self) -> Tensor {
        Tensor::from_vec(self.values.clone()).expect("packet vector is finite")
    }
}

/// Strips the 24-byte header and vectorizes the remaining payload.
pub fn preprocess(packet: &Packet) -> Result<PacketVector> {
    if packet.raw.len() <= HEADER_STRIP {
        return Err(Error::EmptyPayload {
            len: packet.raw.len(),
            header: HEADER_STRIP,
        });
    }
    PacketVector::from_payload(&packet.raw[HEADER_STRIP..])
}

/// Image layouts for packet visualization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportMode {
    /// 39x39 grayscale; the vector is zero-padded from 1456 to 1521 slots.
    Gray39,
    /// 22x22 RGB; the first 1452 values are used.
    Rgb22,
}

/// A small byte image produced by [`reshape_for_export`].
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub pixels: Vec<u8>,
}

/// Arranges a packet vector as a gray or RGB byte image, mapping values back
/// to 0-255.
pub fn reshape_for_export(v: &PacketVector, mode: ExportMode) -> ImageGrid {
    let bytes = v.to_bytes();
    match mode {
        ExportMode::Gray39 => {
            let mut pixels = vec![0u8; 39 * 39];
            pixels[..VECTOR_LEN].copy_from_slice(&bytes);
            ImageGrid {
                width: 39,
                height: 39,
                channels: 1,
                pixels,
            }
        }
        ExportMode::Rgb22 => ImageGrid {
            width: 22,
            height: 22,
            channels: 3,
            pixels: bytes[..22 * 22 * 3].to_vec(),
        },
    }
}

/// Reconstructs the (padded) packet vector from an exported image.
pub fn unflatten_export(grid: &ImageGrid) -> PacketVector {
    let mut payload = grid.pixels.clone();
    payload.truncate(VECTOR_LEN);
    payload.resize(VECTOR_LEN, 0);
    PacketVector::from_payload(&payload).expect("image grid is non-empty")
}

/// One record of a [`LabeledDataset`]; `label = None` means unlabeled.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRecord {
    pub vector: PacketVector,
    pub label: Option<u32>,
}

/// A collection of (vector, label) pairs with display names per class id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabeledDataset {
    records: Vec<DatasetRecord>,
    class_names: BTreeMap<u32, String>,
}

impl LabeledDataset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, vector: PacketVector, label: Option<u32>) {
        self.records.push(DatasetRecord { vector, label });
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[DatasetRecord] {
        &self.records
    }

    pub fn vectors(&self) -> impl Iterator<Item = &PacketVector> {
        self.records.iter().map(|r| &r.vector)
    }

    pub fn class_names(&self) -> &BTreeMap<u32, String> {
        &self.class_names
    }

    pub fn set_class_name(&mut self, id: u32, name: impl Into<String>) {
        self.class_names.insert(id, name.into());
    }

    pub fn class_name(&self, id: u32) -> String {
        self.class_names
            .get(&id)
            .cloned()
            .unwrap_or_else(|| format!("class-{id}"))
    }

    /// `max label + 1`, or 0 when nothing is labeled.
    pub fn class_count(&self) -> usize {
        self.records
            .iter()
            .filter_map(|r| r.label)
            .max()
            .map_or(0, |m| m as usize + 1)
    }

    pub fn label_counts(&self) -> BTreeMap<u32, usize> {
        let mut counts = BTreeMap::new();
        for r in &self.records {
            if let Some(l) = r.label {
                *counts.entry(l).or_insert(0) += 1;
            }
        }
        counts
    }

    /// Checks that every record is labeled and labels cover `0..M` densely;
    /// returns `M`.
    pub fn require_dense_labels(&self) -> Result<usize> {
        if self.records.is_empty() {
            return Err(Error::Validation("dataset is empty".into()));
        }
        let counts = self.label_counts();
        let labeled: usize = counts.values().sum();
        if labeled != self.records.len() {
            return Err(Error::Validation(format!(
                "{} of {} records are unlabeled",
                self.records.len() - labeled,
                self.records.len()
            )));
        }
        let m = self.class_count();
        for id in 0..m as u32 {
            if !counts.contains_key(&id) {
                return Err(Error::Validation(format!(
                    "labels are not dense: class {id} has no records (M = {m})"
                )));
            }
        }
        Ok(m)
    }

    /// Borrowed views for training; every record must be labeled.
    pub fn training_views(&self) -> Result<(Vec<&[f64]>, Vec<usize>)> {
        let mut inputs = Vec::with_capacity(self.records.len());
        let mut labels = Vec::with_capacity(self.records.len());
        for r in &self.records {
            let Some(l) = r.label else {
                return Err(Error::Validation(
                    "cannot train on a dataset with unlabeled records".into(),
                ));
            };
            inputs.push(r.vector.values());
            labels.push(l as usize);
        }
        Ok((inputs, labels))
    }

    /// Seeded split into (train, validation); both sides non-empty when the
    /// dataset has at least two records.
    pub fn split_validation(&self, fraction: f64, seed_val: u64) -> (Self, Self) {
        let mut order: Vec<usize> = (0..self.records.len()).collect();
        order.shuffle(&mut seed::rng(seed_val, "dataset.split"));
        let mut val_n = ((self.records.len() as f64) * fraction).round() as usize;
        val_n = val_n.clamp(
            usize::from(self.records.len() >= 2),
            self.records.len().saturating_sub(1),
        );
        let mut train = Self {
            records: Vec::new(),
            class_names: self.class_names.clone(),
        };
        let mut val = train.clone();
        for (i, &idx) in order.iter().enumerate() {
            let target = if i < val_n { &mut val } else { &mut train };
            target.records.push(self.records[idx].clone());
        }
        (train, val)
    }

    /// Seeded per-class subsample; errors if any class is short.
    pub fn subsample_per_class(&self, per_class: usize, seed_val: u64) -> Result<Self> {
        let mut by_class: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for (i, r) in self.records.iter().enumerate() {
            if let Some(l) = r.label {
                by_class.entry(l).or_default().push(i);
            }
        }
        let mut rng = seed::rng(seed_val, "dataset.subsample");
        let mut out = Self {
            records: Vec::new(),
            class_names: self.class_names.clone(),
        };
        for (label, mut idxs) in by_class {
            if idxs.len() < per_class {
                return Err(Error::Validation(format!(
                    "class {label} has {} records, need {per_class}",
                    idxs.len()
                )));
            }
            idxs.shuffle(&mut rng);
            for &i in &idxs[..per_class] {
                out.records.push(self.records[i].clone());
            }
        }
        Ok(out)
    }
}
