//! gzip helpers for the zipped proof representation.

use std::io::{Read, Write};

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;

/// Default compression level, the common HTTP choice. Absolute zipped sizes
/// depend on it, so measurements record the level in use.
pub const DEFAULT_GZIP_LEVEL: u32 = 6;

pub fn gzip(data: &[u8], level: u32) -> Vec<u8> {
    let mut enc = GzEncoder::new(Vec::with_capacity(data.len() / 2 + 32), Compression::new(level));
    enc.write_all(data).expect("in-memory write");
    enc.finish().expect("in-memory finish")
}

pub fn gunzip(data: &[u8]) -> std::io::Result<Vec<u8>> {
    let mut out = Vec::new();
    GzDecoder::new(data).read_to_end(&mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let data: Vec<u8> = (0..10_000u32).flat_map(|i| i.to_le_bytes()).collect();
        let z = gzip(&data, DEFAULT_GZIP_LEVEL);
        assert!(z.len() < data.len());
        assert_eq!(gunzip(&z).unwrap(), data);
    }
}
