//! Classic pcap capture-file reader.
//!
//! Handles the four standard magics (microsecond and nanosecond timestamps,
//! native and byte-swapped) and yields one [`Packet`] per record with the
//! full link-layer frame bytes. pcapng is out of scope.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::packet::Packet;

const MAGIC_MICRO: u32 = 0xA1B2_C3D4;
const MAGIC_NANO: u32 = 0xA1B2_3C4D;
const GLOBAL_HEADER_LEN: usize = 24;
const RECORD_HEADER_LEN: usize = 16;

#[derive(Clone, Copy)]
struct Encoding {
    big_endian: bool,
    nanosecond: bool,
}

fn read_u32(bytes: &[u8], big_endian: bool) -> u32 {
    let arr: [u8; 4] = bytes.try_into().expect("4 bytes");
    if big_endian {
        u32::from_be_bytes(arr)
    } else {
        u32::from_le_bytes(arr)
    }
}

fn detect_encoding(magic_bytes: &[u8]) -> Option<Encoding> {
    let le = read_u32(magic_bytes, false);
    let be = read_u32(magic_bytes, true);
    match (le, be) {
        (MAGIC_MICRO, _) => Some(Encoding { big_endian: false, nanosecond: false }),
        (MAGIC_NANO, _) => Some(Encoding { big_endian: false, nanosecond: true }),
        (_, MAGIC_MICRO) => Some(Encoding { big_endian: true, nanosecond: false }),
        (_, MAGIC_NANO) => Some(Encoding { big_endian: true, nanosecond: true }),
        _ => None,
    }
}

/// Reads every record of a capture file, in file order.
pub fn ingest_pcap(path: &Path) -> Result<Vec<Packet>> {
    let bytes = fs::read(path)?;
    let source = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_pcap(&bytes, &source)
}

pub(crate) fn parse_pcap(bytes: &[u8], source: &str) -> Result<Vec<Packet>> {
    if bytes.len() < GLOBAL_HEADER_LEN {
        return Err(Error::Format {
            offset: bytes.len() as u64,
            detail: "file shorter than the 24-byte capture header".into(),
        });
    }
    let enc = detect_encoding(&bytes[..4]).ok_or_else(|| Error::Format {
        offset: 0,
        detail: format!(
            "unknown capture magic {:02x?} (expected a1b2c3d4 / a1b23c4d, either byte order)",
            &bytes[..4]
        ),
    })?;

    let mut packets = Vec::new();
    let mut pos = GLOBAL_HEADER_LEN;
    let mut index = 0usize;
    while pos < bytes.len() {
        if pos + RECORD_HEADER_LEN > bytes.len() {
            return Err(Error::Format {
                offset: pos as u64,
                detail: format!("record {index}: truncated record header"),
            });
        }
        let ts_sec = read_u32(&bytes[pos..pos + 4], enc.big_endian);
        let ts_frac = read_u32(&bytes[pos + 4..pos + 8], enc.big_endian);
        let incl_len = read_u32(&bytes[pos + 8..pos + 12], enc.big_endian) as usize;
        pos += RECORD_HEADER_LEN;
        if pos + incl_len > bytes.len() {
            return Err(Error::Format {
                offset: pos as u64,
                detail: format!(
                    "record {index}: partial read, wanted {incl_len} data bytes but {} remain",
                    bytes.len() - pos
                ),
            });
        }
        let micros = if enc.nanosecond {
            u64::from(ts_frac) / 1000
        } else {
            u64::from(ts_frac)
        };
        packets.push(Packet {
            raw: bytes[pos..pos + incl_len].to_vec(),
            truth_label: None,
            source: source.to_string(),
            timestamp_us: Some(u64::from(ts_sec) * 1_000_000 + micros),
        });
        pos += incl_len;
        index += 1;
    }
    Ok(packets)
}
