//! Side-information packing and rate measurement.
//!
//! Layout: per block in raster order `dx` then `dy` as signed bytes. For
//! VA-PTMC the 2-bit viewport codes follow, four per byte, first block in the
//! least significant bits, last byte zero-padded.

use std::io::{Read, Write};

use thiserror::Error;

use crate::geometry::{MotionVector, Viewport};
use crate::motion::{Method, MotionField};

#[derive(Debug, Error)]
pub enum SideInfoError {
    #[error("block {block}: motion component {value} does not fit a signed byte")]
    ComponentOverflow { block: usize, value: i32 },
    #[error("packed stream has {actual} bytes, expected {expected} for {blocks} blocks")]
    Length {
        expected: usize,
        actual: usize,
        blocks: usize,
    },
    #[error("block {block}: invalid viewport code {code}")]
    ViewportCode { block: usize, code: u8 },
    #[error("compressor '{backend}' failed: {source}")]
    Backend {
        backend: &'static str,
        #[source]
        source: std::io::Error,
    },
    #[error("compressor '{backend}' did not reproduce its input")]
    NotLossless { backend: &'static str },
    #[error("unknown compressor '{0}' (expected identity or bzip2)")]
    UnknownBackend(String),
}

/// One block's side information.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SideInfoEntry {
    pub mv: MotionVector,
    pub viewport: Viewport,
}

pub fn vector_bytes(blocks: usize) -> usize {
    2 * blocks
}

pub fn viewport_bytes(blocks: usize) -> usize {
    blocks.div_ceil(4)
}

pub fn packed_len(blocks: usize, method: Method) -> usize {
    match method {
        Method::VaPtmc => vector_bytes(blocks) + viewport_bytes(blocks),
        Method::Tmc | Method::Ptmc => vector_bytes(blocks),
    }
}

pub fn pack_entries(entries: &[SideInfoEntry], method: Method) -> Result<Vec<u8>, SideInfoError> {
    let mut out = Vec::with_capacity(packed_len(entries.len(), method));
    for (block, e) in entries.iter().enumerate() {
        for value in [e.mv.dx, e.mv.dy] {
            let b = i8::try_from(value)
                .map_err(|_| SideInfoError::ComponentOverflow { block, value })?;
            out.push(b as u8);
        }
    }
    if method == Method::VaPtmc {
        for chunk in entries.chunks(4) {
            let byte = chunk
                .iter()
                .enumerate()
                .fold(0u8, |acc, (i, e)| acc | (e.viewport.code() << (2 * i)));
            out.push(byte);
        }
    }
    Ok(out)
}

pub fn pack_side_info(field: &MotionField, method: Method) -> Result<Vec<u8>, SideInfoError> {
    let entries: Vec<_> = field
        .blocks
        .iter()
        .map(|b| SideInfoEntry {
            mv: b.mv,
            viewport: b.viewport,
        })
        .collect();
    pack_entries(&entries, method)
}

/// Inverse of [`pack_entries`]. Viewports decode as front/back for TMC and PTMC.
pub fn unpack_side_info(
    bytes: &[u8],
    blocks: usize,
    method: Method,
) -> Result<Vec<SideInfoEntry>, SideInfoError> {
    let expected = packed_len(blocks, method);
    if bytes.len() != expected {
        return Err(SideInfoError::Length {
            expected,
            actual: bytes.len(),
            blocks,
        });
    }
    let (vectors, codes) = bytes.split_at(vector_bytes(blocks));
    vectors
        .chunks_exact(2)
        .enumerate()
        .map(|(block, pair)| {
            let viewport = if method == Method::VaPtmc {
                let code = (codes[block / 4] >> (2 * (block % 4))) & 0b11;
                Viewport::from_code(code).ok_or(SideInfoError::ViewportCode { block, code })?
            } else {
                Viewport::FrontBack
            };
            Ok(SideInfoEntry {
                mv: MotionVector::new(pair[0] as i8 as i32, pair[1] as i8 as i32),
                viewport,
            })
        })
        .collect()
}

/// Lossless byte-stream compressor.
pub trait Compressor: Send + Sync {
    fn name(&self) -> &'static str;
    fn compress(&self, data: &[u8]) -> std::io::Result<Vec<u8>>;
    fn decompress(&self, data: &[u8]) -> std::io::Result<Vec<u8>>;
}

/// Stores the raw bytes; used to read off uncompressed rates.
#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl Compressor for Identity {
    fn name(&self) -> &'static str {
        "identity"
    }

    fn compress(&self, data: &[u8]) -> std::io::Result<Vec<u8>> {
        Ok(data.to_vec())
    }

    fn decompress(&self, data: &[u8]) -> std::io::Result<Vec<u8>> {
        Ok(data.to_vec())
    }
}

/// Standard bzip2 stream, block size 9.
#[derive(Debug, Clone, Copy, Default)]
pub struct Bzip2;

impl Compressor for Bzip2 {
    fn name(&self) -> &'static str {
        "bzip2"
    }

    fn compress(&self, data: &[u8]) -> std::io::Result<Vec<u8>> {
        let mut enc = bzip2::write::BzEncoder::new(Vec::new(), bzip2::Compression::best());
        enc.write_all(data)?;
        enc.finish()
    }

    fn decompress(&self, data: &[u8]) -> std::io::Result<Vec<u8>> {
        let mut out = Vec::new();
        bzip2::read::BzDecoder::new(data).read_to_end(&mut out)?;
        Ok(out)
    }
}

pub fn compressor_by_name(name: &str) -> Result<Box<dyn Compressor>, SideInfoError> {
    match name.to_ascii_lowercase().as_str() {
        "identity" | "raw" | "none" => Ok(Box::new(Identity)),
        "bzip2" | "bz2" => Ok(Box::new(Bzip2)),
        other => Err(SideInfoError::UnknownBackend(other.to_string())),
    }
}

/// Compressed side information for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SideInfoStream {
    pub raw: Vec<u8>,
    pub compressed: Vec<u8>,
    pub bits_per_pixel: f64,
}

/// Compresses, checks the round trip and returns the stream with its rate.
pub fn encode_stream(
    raw: &[u8],
    compressor: &dyn Compressor,
    pixel_count: usize,
) -> Result<SideInfoStream, SideInfoError> {
    let backend = compressor.name();
    let compressed = compressor
        .compress(raw)
        .map_err(|source| SideInfoError::Backend { backend, source })?;
    let restored = compressor
        .decompress(&compressed)
        .map_err(|source| SideInfoError::Backend { backend, source })?;
    if restored != raw {
        return Err(SideInfoError::NotLossless { backend });
    }
    let bits_per_pixel = compressed.len() as f64 * 8.0 / pixel_count as f64;
    Ok(SideInfoStream {
        raw: raw.to_vec(),
        compressed,
        bits_per_pixel,
    })
}

/// Compressed size in bits divided by the frame's pixel count.
pub fn rate_bits_per_pixel(
    raw: &[u8],
    compressor: &dyn Compressor,
    pixel_count: usize,
) -> Result<f64, SideInfoError> {
    encode_stream(raw, compressor, pixel_count).map(|s| s.bits_per_pixel)
}
