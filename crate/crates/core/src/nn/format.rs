//! Binary model file format.
//!
//! Layout: magic `OWNN`, format version `u16` LE, `u32` LE header length,
//! a structured-text header describing the layer stack, then one weight
//! blob per parameterized layer in order (weights, then bias) as 32-bit
//! little-endian IEEE-754 in row-major order.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::nn::{Layer, NeuralModel};

const MAGIC: &[u8; 4] = b"OWNN";
const VERSION: u16 = 1;

/// Serializes a model. Weights are narrowed to `f32` here and nowhere else.
pub fn save_model(model: &NeuralModel, path: &Path) -> Result<()> {
    fs::write(path, model_to_bytes(model))?;
    Ok(())
}

/// Loads and validates a model file.
pub fn load_model(path: &Path) -> Result<NeuralModel> {
    let bytes = fs::read(path)?;
    model_from_bytes(&bytes)
}

pub fn model_to_bytes(model: &NeuralModel) -> Vec<u8> {
    let mut header = String::new();
    header.push_str(&format!("class_count {}\n", model.class_count()));
    header.push_str(&format!("feature_tap {}\n", model.feature_tap()));
    header.push_str(&format!("layers {}\n", model.layers().len()));
    for layer in model.layers() {
        match layer {
            Layer::Dense { in_dim, out_dim, .. } => {
                header.push_str(&format!("dense in {in_dim} out {out_dim}\n"));
            }
            Layer::Conv1d {
                in_len,
                in_ch,
                kernel_count,
                kernel_width,
                ..
            } => {
                header.push_str(&format!(
                    "conv1d in_len {in_len} in_ch {in_ch} kernels {kernel_count} width {kernel_width}\n"
                ));
            }
            Layer::Relu => header.push_str("relu\n"),
            Layer::Softmax => header.push_str("softmax\n"),
            Layer::Flatten => header.push_str("flatten\n"),
        }
    }

    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(header.as_bytes());
    for layer in model.layers() {
        let (weights, bias) = match layer {
            Layer::Dense { weights, bias, .. } | Layer::Conv1d { weights, bias, .. } => {
                (weights, bias)
            }
            _ => continue,
        };
        for &w in weights.iter().chain(bias.iter()) {
            out.extend_from_slice(&(w as f32).to_le_bytes());
        }
    }
    out
}

pub fn model_from_bytes(bytes: &[u8]) -> Result<NeuralModel> {
    let mut cur = Cursor::new(bytes);
    let magic = cur.take(4, "magic")?;
    if magic != MAGIC {
        return Err(Error::Format {
            offset: 0,
            detail: format!("bad magic {magic:02x?}, expected \"OWNN\""),
        });
    }
    let version = u16::from_le_bytes(cur.take(2, "version")?.try_into().expect("2 bytes"));
    if version != VERSION {
        return Err(Error::Version {
            found: version,
            expected: VERSION,
        });
    }
    let header_len =
        u32::from_le_bytes(cur.take(4, "header length")?.try_into().expect("4 bytes")) as usize;
    let header_offset = cur.pos;
    let header_bytes = cur.take(header_len, "header")?;
    let header = std::str::from_utf8(header_bytes).map_err(|e| Error::Format {
        offset: header_offset as u64 + e.valid_up_to() as u64,
        detail: "header is not valid UTF-8".into(),
    })?;

    let manifest = parse_header(header, header_offset)?;
    let mut layers = Vec::with_capacity(manifest.layers.len());
    for spec in &manifest.layers {
        let layer = match *spec {
            LayerSpec::Dense { in_dim, out_dim } => {
                let weights = cur.take_f32s(in_dim * out_dim, "dense weights")?;
                let bias = cur.take_f32s(out_dim, "dense bias")?;
                Layer::dense(in_dim, out_dim, weights, bias)?
            }
            LayerSpec::Conv1d {
                in_len,
                in_ch,
                kernels,
                width,
            } => {
                let weights = cur.take_f32s(width * in_ch * kernels, "conv1d weights")?;
                let bias = cur.take_f32s(kernels, "conv1d bias")?;
                Layer::conv1d(in_len, in_ch, kernels, width, weights, bias)?
            }
            LayerSpec::Relu => Layer::Relu,
            LayerSpec::Softmax => Layer::Softmax,
            LayerSpec::Flatten => Layer::Flatten,
        };
        layers.push(layer);
    }
    if cur.pos != bytes.len() {
        return Err(Error::Format {
            offset: cur.pos as u64,
            detail: format!("{} unexpected trailing bytes", bytes.len() - cur.pos),
        });
    }
    NeuralModel::new(layers, manifest.class_count, manifest.feature_tap)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Format {
                offset: self.bytes.len() as u64,
                detail: format!(
                    "truncated while reading {what}: wanted {n} bytes at offset {}",
                    self.pos
                ),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn take_f32s(&mut self, count: usize, what: &str) -> Result<Vec<f64>> {
        let raw = self.take(count * 4, what)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
            .collect())
    }
}

enum LayerSpec {
    Dense { in_dim: usize, out_dim: usize },
    Conv1d { in_len: usize, in_ch: usize, kernels: usize, width: usize },
    Relu,
    Softmax,
    Flatten,
}

struct Manifest {
    class_count: usize,
    feature_tap: usize,
    layers: Vec<LayerSpec>,
}

fn parse_header(header: &str, base_offset: usize) -> Result<Manifest> {
    let bad = |offset: u64, detail: String| Error::Format { offset, detail };

    let mut lines = Vec::new();
    let mut offset = base_offset as u64;
    for line in header.lines() {
        lines.push((offset, line));
        offset += line.len() as u64 + 1;
    }
    let end_offset = offset;
    let mut it = lines.into_iter();

    let mut expect_kv = |key: &str| -> Result<usize> {
        let (off, line) = it
            .next()
            .ok_or_else(|| bad(end_offset, format!("header ends before \"{key}\"")))?;
        match line.split_once(' ') {
            Some((k, v)) if k == key => v
                .trim()
                .parse()
                .map_err(|_| bad(off, format!("bad {key} value {v:?}"))),
            _ => Err(bad(off, format!("expected \"{key} <n>\", got {line:?}"))),
        }
    };

    let class_count = expect_kv("class_count")?;
    let feature_tap = expect_kv("feature_tap")?;
    let layer_count = expect_kv("layers")?;

    let mut layers = Vec::with_capacity(layer_count);
    for _ in 0..layer_count {
        let (off, line) = it
            .next()
            .ok_or_else(|| bad(end_offset, "header ends before layer list is complete".into()))?;
        let mut words = line.split_whitespace();
        let kind = words.next().unwrap_or("");
        let mut field = |name: &str| -> Result<usize> {
            match (words.next(), words.next()) {
                (Some(k), Some(v)) if k == name => v
                    .parse()
                    .map_err(|_| bad(off, format!("bad {name} value {v:?}"))),
                other => Err(bad(off, format!("expected \"{name} <n>\", got {other:?}"))),
            }
        };
        let spec = match kind {
            "dense" => LayerSpec::Dense {
                in_dim: field("in")?,
                out_dim: field("out")?,
            },
            "conv1d" => LayerSpec::Conv1d {
                in_len: field("in_len")?,
                in_ch: field("in_ch")?,
                kernels: field("kernels")?,
                width: field("width")?,
            },
            "relu" => LayerSpec::Relu,
            "softmax" => LayerSpec::Softmax,
            "flatten" => LayerSpec::Flatten,
            other => return Err(bad(off, format!("unknown layer kind {other:?}"))),
        };
        layers.push(spec);
    }
    Ok(Manifest {
        class_count,
        feature_tap,
        layers,
    })
}
