//! Grayscale images (PGM P2/P5) and their reduction to bitmaps.

use std::fs;
use std::path::Path;

use super::pbm::Header;
use crate::bitmat::{BinMatrix, PackedBits};
use crate::error::{BmfError, Result};

/// Row-major grayscale raster.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    pub height: usize,
    pub width: usize,
    pub maxval: u16,
    pub pixels: Vec<u16>,
}

impl GrayImage {
    pub fn new(height: usize, width: usize, maxval: u16, pixels: Vec<u16>) -> Result<Self> {
        if pixels.len() != height * width {
            return Err(BmfError::mismatch(
                "gray image pixel count",
                height * width,
                pixels.len(),
            ));
        }
        Ok(Self {
            height,
            width,
            maxval,
            pixels,
        })
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u16 {
        self.pixels[i * self.width + j]
    }

    /// The centered `h × w` window.
    pub fn center_crop(&self, h: usize, w: usize) -> Result<GrayImage> {
        if h > self.height || w > self.width {
            return Err(BmfError::InvalidParameter(format!(
                "crop {h}x{w} larger than image {}x{}",
                self.height, self.width
            )));
        }
        let top = (self.height - h) / 2;
        let left = (self.width - w) / 2;
        let pixels = (0..h)
            .flat_map(|i| (0..w).map(move |j| (i, j)))
            .map(|(i, j)| self.get(top + i, left + j))
            .collect();
        GrayImage::new(h, w, self.maxval, pixels)
    }

    /// Nearest-neighbour resampling to `h × w`.
    pub fn resize_nearest(&self, h: usize, w: usize) -> Result<GrayImage> {
        if self.height == 0 || self.width == 0 {
            return Err(BmfError::InvalidParameter("cannot resample an empty image".into()));
        }
        let pixels = (0..h)
            .flat_map(|i| (0..w).map(move |j| (i, j)))
            .map(|(i, j)| self.get(i * self.height / h, j * self.width / w))
            .collect();
        GrayImage::new(h, w, self.maxval, pixels)
    }
}

/// `bit = 1` iff `value ≥ threshold`.
pub fn binarize(image: &GrayImage, threshold: u16) -> BinMatrix {
    let rows = (0..image.height)
        .map(|i| PackedBits::from_bools((0..image.width).map(|j| image.get(i, j) >= threshold)))
        .collect();
    BinMatrix::from_rows(image.width, rows).expect("rows built at image width")
}

/// Parses a P2 or P5 graymap.
pub fn parse_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let mut header = Header::new(bytes, "PGM");
    let magic = header.magic()?;
    let binary = match &magic {
        b"P5" => true,
        b"P2" => false,
        _ => {
            return Err(BmfError::Malformed {
                format: "PGM",
                reason: "magic number is neither P2 nor P5".into(),
            })
        }
    };
    let width = header.number("width")?;
    let height = header.number("height")?;
    let maxval = header.number("maxval")?;
    if maxval == 0 || maxval > usize::from(u16::MAX) {
        return Err(BmfError::Malformed {
            format: "PGM",
            reason: format!("maxval {maxval} outside 1..=65535"),
        });
    }
    let count = width * height;
    let truncated = |got: usize| BmfError::Malformed {
        format: "PGM",
        reason: format!("truncated raster: {got} of {count} samples"),
    };
    let pixels: Vec<u16> = if binary {
        let payload = header.binary_payload()?;
        if maxval < 256 {
            if payload.len() < count {
                return Err(truncated(payload.len()));
            }
            payload[..count].iter().map(|&b| u16::from(b)).collect()
        } else {
            if payload.len() < 2 * count {
                return Err(truncated(payload.len() / 2));
            }
            payload[..2 * count]
                .chunks_exact(2)
                .map(|c| u16::from_be_bytes([c[0], c[1]]))
                .collect()
        }
    } else {
        let mut values = Vec::with_capacity(count);
        for _ in 0..count {
            let v = header.number("sample").map_err(|_| truncated(values.len()))?;
            values.push(v.min(usize::from(u16::MAX)) as u16);
        }
        values
    };
    if let Some(&bad) = pixels.iter().find(|&&v| usize::from(v) > maxval) {
        return Err(BmfError::Malformed {
            format: "PGM",
            reason: format!("sample {bad} exceeds maxval {maxval}"),
        });
    }
    GrayImage::new(height, width, maxval as u16, pixels)
}

pub fn load_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| BmfError::io(path, e))?;
    parse_pgm(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn image() -> GrayImage {
        GrayImage::new(3, 4, 255, vec![0, 10, 200, 255, 30, 128, 127, 4, 9, 8, 7, 6]).unwrap()
    }

    #[test]
    fn binarize_examples() {
        let img = image();
        assert_eq!(binarize(&img, 256).weight(), 0);
        assert_eq!(binarize(&img, 0).weight(), 12);
        assert_eq!(
            binarize(&img, 128),
            BinMatrix::from_row_strings(&["0011", "0100", "0000"]).unwrap()
        );
        let binary = GrayImage::new(2, 2, 1, vec![1, 0, 0, 1]).unwrap();
        assert_eq!(
            binarize(&binary, 1),
            BinMatrix::from_row_strings(&["10", "01"]).unwrap()
        );
    }

    #[test]
    fn parse_ascii_and_binary() {
        let ascii = b"P2\n# c\n4 3\n255\n0 10 200 255\n30 128 127 4\n9 8 7 6\n";
        assert_eq!(parse_pgm(ascii).unwrap(), image());
        let mut bin = b"P5\n4 3\n255\n".to_vec();
        bin.extend(image().pixels.iter().map(|&v| v as u8));
        assert_eq!(parse_pgm(&bin).unwrap(), image());
        let mut wide = b"P5 1 2 1000\n".to_vec();
        wide.extend([0x03, 0xe8, 0x00, 0x01]);
        assert_eq!(parse_pgm(&wide).unwrap().pixels, vec![1000, 1]);
    }

    #[test]
    fn parse_errors() {
        assert!(parse_pgm(b"P2\n2 1\n255\n1").is_err());
        assert!(parse_pgm(b"P2\n1 1\n10\n11").is_err());
        assert!(parse_pgm(b"P5\n2 2\n255\n\x00").is_err());
        assert!(parse_pgm(b"P2\n1 1\n0\n0").is_err());
        assert!(parse_pgm(b"P4\n1 1\n\x00").is_err());
    }

    #[test]
    fn crop_and_resize() {
        let img = GrayImage::new(4, 4, 15, (0..16).collect()).unwrap();
        let c = img.center_crop(2, 2).unwrap();
        assert_eq!(c.pixels, vec![5, 6, 9, 10]);
        assert!(img.center_crop(5, 1).is_err());
        let r = img.resize_nearest(2, 2).unwrap();
        assert_eq!(r.pixels, vec![0, 2, 8, 10]);
    }
}
