//! Netpbm bitmaps (PBM). Pixel value 1 is black and maps to a set bit;
//! image row `i` becomes matrix row `i`.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::bitmat::{BinMatrix, PackedBits};
use crate::error::{BmfError, Result};

fn malformed(reason: impl Into<String>) -> BmfError {
    BmfError::Malformed {
        format: "PBM",
        reason: reason.into(),
    }
}

/// Header tokenizer shared by the PBM and PGM readers.
pub(crate) struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
    format: &'static str,
}

impl<'a> Header<'a> {
    pub(crate) fn new(bytes: &'a [u8], format: &'static str) -> Self {
        Self { bytes, pos: 0, format }
    }

    fn error(&self, reason: impl Into<String>) -> BmfError {
        BmfError::Malformed {
            format: self.format,
            reason: reason.into(),
        }
    }

    pub(crate) fn magic(&mut self) -> Result<[u8; 2]> {
        if self.bytes.len() < 2 {
            return Err(self.error("missing magic number"));
        }
        self.pos = 2;
        Ok([self.bytes[0], self.bytes[1]])
    }

    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    pub(crate) fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error(format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| self.error(format!("{what} out of range")))
    }

    /// Consumes the single whitespace byte that ends a binary header.
    pub(crate) fn binary_payload(mut self) -> Result<&'a [u8]> {
        match self.bytes.get(self.pos) {
            Some(b) if b.is_ascii_whitespace() => {
                self.pos += 1;
                Ok(&self.bytes[self.pos..])
            }
            _ => Err(self.error("missing whitespace after header")),
        }
    }

    pub(crate) fn ascii_payload(self) -> &'a [u8] {
        &self.bytes[self.pos..]
    }
}

/// Parses a P1 or P4 bitmap.
pub fn parse_pbm(bytes: &[u8]) -> Result<BinMatrix> {
    let mut header = Header::new(bytes, "PBM");
    let magic = header.magic()?;
    let binary = match &magic {
        b"P4" => true,
        b"P1" => false,
        _ => return Err(malformed("magic number is neither P1 nor P4")),
    };
    let width = header.number("width")?;
    let height = header.number("height")?;

    let rows = if binary {
        let payload = header.binary_payload()?;
        let stride = width.div_ceil(8);
        let needed = stride
            .checked_mul(height)
            .ok_or_else(|| malformed("image dimensions overflow"))?;
        if payload.len() < needed {
            return Err(malformed(format!(
                "truncated raster: {} of {needed} bytes",
                payload.len()
            )));
        }
        if stride == 0 {
            vec![PackedBits::zeros(0); height]
        } else {
            payload[..needed]
                .chunks_exact(stride)
                .map(|row| row_from_bytes(row, width))
                .collect()
        }
    } else {
        let mut digits = Vec::with_capacity(width * height);
        let mut in_comment = false;
        for &b in header.ascii_payload() {
            match b {
                b'#' => in_comment = true,
                b'\n' | b'\r' => in_comment = false,
                _ if in_comment || b.is_ascii_whitespace() => {}
                b'0' | b'1' => digits.push(b == b'1'),
                other => return Err(malformed(format!("unexpected byte {other:#04x} in P1 raster"))),
            }
            if digits.len() == width * height {
                break;
            }
        }
        if digits.len() < width * height {
            return Err(malformed(format!(
                "truncated raster: {} of {} pixels",
                digits.len(),
                width * height
            )));
        }
        if width == 0 {
            vec![PackedBits::zeros(0); height]
        } else {
            digits
                .chunks_exact(width)
                .map(|r| PackedBits::from_bools(r.iter().copied()))
                .collect()
        }
    };
    BinMatrix::from_rows(width, rows)
}

fn row_from_bytes(bytes: &[u8], width: usize) -> PackedBits {
    let words = bytes
        .chunks(8)
        .map(|chunk| {
            let mut buf = [0u8; 8];
            buf[..chunk.len()].copy_from_slice(chunk);
            u64::from_be_bytes(buf)
        })
        .take(width.div_ceil(64))
        .collect();
    PackedBits::from_words(width, words)
}

fn row_to_bytes(row: &PackedBits, out: &mut Vec<u8>) {
    let stride = row.len().div_ceil(8);
    let start = out.len();
    for w in row.words() {
        out.extend_from_slice(&w.to_be_bytes());
    }
    out.truncate(start + stride);
}

/// Encodes as binary P4.
pub fn encode_pbm(matrix: &BinMatrix) -> Vec<u8> {
    let mut out = format!("P4\n{} {}\n", matrix.ncols(), matrix.nrows()).into_bytes();
    for row in matrix.row_view() {
        row_to_bytes(row, &mut out);
    }
    out
}

/// Encodes as ASCII P1, at most 70 characters per line.
pub fn encode_pbm_ascii(matrix: &BinMatrix) -> Vec<u8> {
    let mut out = format!("P1\n{} {}\n", matrix.ncols(), matrix.nrows()).into_bytes();
    for row in matrix.row_view() {
        for (k, bit) in row.iter().enumerate() {
            if k > 0 && k % 70 == 0 {
                out.push(b'\n');
            }
            out.push(if bit { b'1' } else { b'0' });
        }
        out.push(b'\n');
    }
    out
}

pub fn load_pbm(path: impl AsRef<Path>) -> Result<BinMatrix> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| BmfError::io(path, e))?;
    parse_pbm(&bytes)
}

pub fn save_pbm(matrix: &BinMatrix, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &encode_pbm(matrix))
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| BmfError::io(path, e))?;
    f.write_all(bytes).map_err(|e| BmfError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_black_pixel() {
        let m = BinMatrix::from_row_strings(&["1"]).unwrap();
        assert_eq!(encode_pbm(&m), b"P4\n1 1\n\x80");
    }

    #[test]
    fn header_comments_and_whitespace() {
        let bytes = b"P1\n# a comment\n3 2 # trailing\n1 0 1\n0 1 0\n";
        let m = parse_pbm(bytes).unwrap();
        assert_eq!(m, BinMatrix::from_row_strings(&["101", "010"]).unwrap());
        let packed = b"P1 3 2 101010";
        assert_eq!(parse_pbm(packed).unwrap(), m);
    }

    #[test]
    fn ascii_and_binary_agree() {
        let m = BinMatrix::from_row_strings(&["1011001110", "0000000001", "1111111111"]).unwrap();
        assert_eq!(
            parse_pbm(&encode_pbm_ascii(&m)).unwrap(),
            parse_pbm(&encode_pbm(&m)).unwrap()
        );
    }

    #[test]
    fn errors() {
        assert!(parse_pbm(b"P5\n1 1\n\x00").is_err());
        assert!(parse_pbm(b"P4\n9 2\n\xff\xff\xff").is_err());
        assert!(parse_pbm(b"P4\n").is_err());
        assert!(parse_pbm(b"P1\n2 2\n1 0 1").is_err());
        assert!(parse_pbm(b"P1\n2 1\n1 2").is_err());
        assert!(parse_pbm(b"P").is_err());
    }

    #[test]
    fn degenerate_sizes() {
        for (h, w) in [(0, 5), (4, 0), (0, 0)] {
            let m = BinMatrix::zeros(h, w);
            let back = parse_pbm(&encode_pbm(&m)).unwrap();
            assert_eq!((back.nrows(), back.ncols()), (h, w));
        }
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.pbm");
        let m = BinMatrix::from_row_strings(&["110", "011"]).unwrap();
        save_pbm(&m, &path).unwrap();
        assert_eq!(load_pbm(&path).unwrap(), m);
        assert!(matches!(
            load_pbm(dir.path().join("missing.pbm")),
            Err(BmfError::Io { .. })
        ));
    }

    proptest! {
        #[test]
        fn round_trip(h in 0usize..40, w in 0usize..140, seed in any::<u64>()) {
            let rows = (0..h)
                .map(|i| PackedBits::from_bools((0..w).map(|j| (seed.rotate_left((i * 7 + j) as u32 % 64) ^ (i * w + j) as u64) & 1 == 1)))
                .collect();
            let m = BinMatrix::from_rows(w, rows).unwrap();
            prop_assert_eq!(parse_pbm(&encode_pbm(&m)).unwrap(), m.clone());
            prop_assert_eq!(parse_pbm(&encode_pbm_ascii(&m)).unwrap(), m);
        }
    }
}
