//! IDX container format (the MNIST file format).
//!
//! Layout: two zero bytes, a data-type byte (only `0x08`, unsigned byte, is
//! supported), a dimension-count byte, one big-endian `u32` per dimension and
//! then the row-major payload.

use std::path::Path;

use crate::error::{Error, Result};

pub const UBYTE: u8 = 0x08;
pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxArray {
    pub dims: Vec<u32>,
    pub data: Vec<u8>,
}

impl IdxArray {
    pub fn magic(&self) -> u32 {
        (u32::from(UBYTE) << 8) | self.dims.len() as u32
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&bytes, path)
    }

    pub fn parse(bytes: &[u8], path: &Path) -> Result<Self> {
        let err = |offset: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            offset,
            message,
        };
        if bytes.len() < 4 {
            return Err(err(bytes.len(), "truncated magic number".into()));
        }
        if bytes[0] != 0 || bytes[1] != 0 {
            return Err(err(0, format!("bad magic prefix {:02x}{:02x}", bytes[0], bytes[1])));
        }
        if bytes[2] != UBYTE {
            return Err(err(2, format!("unsupported data type 0x{:02x}", bytes[2])));
        }
        let ndims = bytes[3] as usize;
        if ndims == 0 {
            return Err(err(3, "zero dimensions".into()));
        }
        let header = 4 + 4 * ndims;
        if bytes.len() < header {
            return Err(err(bytes.len(), format!("truncated header: expected {header} bytes")));
        }
        let dims: Vec<u32> = bytes[4..header]
            .chunks_exact(4)
            .map(|c| u32::from_be_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        let len = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d as usize))
            .ok_or_else(|| err(4, "dimension product overflows".into()))?;
        let payload = &bytes[header..];
        if payload.len() < len {
            return Err(err(
                bytes.len(),
                format!("truncated payload: expected {len} bytes, found {}", payload.len()),
            ));
        }
        if payload.len() > len {
            return Err(err(header + len, format!("{} trailing bytes", payload.len() - len)));
        }
        Ok(IdxArray {
            dims,
            data: payload.to_vec(),
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 + 4 * self.dims.len() + self.data.len());
        out.extend_from_slice(&self.magic().to_be_bytes());
        for d in &self.dims {
            out.extend_from_slice(&d.to_be_bytes());
        }
        out.extend_from_slice(&self.data);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p() -> &'static Path {
        Path::new("mem")
    }

    #[test]
    fn parses_label_file() {
        let bytes = [0, 0, 8, 1, 0, 0, 0, 3, 7, 2, 1];
        let a = IdxArray::parse(&bytes, p()).unwrap();
        assert_eq!(a.magic(), LABELS_MAGIC);
        assert_eq!(a.dims, vec![3]);
        assert_eq!(a.data, vec![7, 2, 1]);
    }

    #[test]
    fn bad_magic_reports_offset() {
        let bytes = [0, 1, 8, 1, 0, 0, 0, 0];
        match IdxArray::parse(&bytes, p()) {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 0),
            other => panic!("{other:?}"),
        }
        let bytes = [0, 0, 0x0d, 1, 0, 0, 0, 0];
        match IdxArray::parse(&bytes, p()) {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn truncated_payload_reports_offset() {
        let bytes = [0, 0, 8, 3, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0, 2, 1, 2, 3];
        match IdxArray::parse(&bytes, p()) {
            Err(Error::Parse { offset, message, .. }) => {
                assert_eq!(offset, 19);
                assert!(message.contains("truncated"));
            }
            other => panic!("{other:?}"),
        }
        assert!(IdxArray::parse(&[0, 0, 8, 2, 0, 0], p()).is_err());
    }

    proptest! {
        #[test]
        fn reserialization_is_byte_exact(dims in prop::collection::vec(1u32..5, 1..4), seed in any::<u8>()) {
            let len: usize = dims.iter().map(|&d| d as usize).product();
            let data: Vec<u8> = (0..len).map(|i| (i as u8).wrapping_mul(31).wrapping_add(seed)).collect();
            let bytes = IdxArray { dims, data }.to_bytes();
            let parsed = IdxArray::parse(&bytes, p()).unwrap();
            prop_assert_eq!(parsed.to_bytes(), bytes);
        }
    }
}
