use std::path::Path;

use super::idx::{IdxArray, IMAGES_MAGIC, LABELS_MAGIC};
use crate::error::{Error, Result};
use crate::factor_model::{AssetCatalog, ShapeRef};

/// Pixels strictly above this value (out of 255) are foreground.
pub const MNIST_THRESHOLD: u8 = 127;
/// Side of the square canvas a normalized digit sits on.
pub const CANVAS_SIDE: usize = 64;
/// Long side of a normalized digit: `floor(64 / sqrt(2))`, so any rotation fits the canvas.
pub const NORMALIZED_SIDE: usize = 45;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Self {
        assert_eq!(data.len(), width * height);
        BinaryMask { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    /// `(x0, y0, x1, y1)` inclusive bounds of the foreground, `None` when empty.
    pub fn bounding_box(&self) -> Option<(usize, usize, usize, usize)> {
        let mut bb: Option<(usize, usize, usize, usize)> = None;
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    bb = Some(match bb {
                        None => (x, y, x, y),
                        Some((x0, y0, x1, y1)) => (x0.min(x), y0.min(y), x1.max(x), y1.max(y)),
                    });
                }
            }
        }
        bb
    }

    pub fn crop(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> BinaryMask {
        let (w, h) = (x1 - x0 + 1, y1 - y0 + 1);
        let mut data = Vec::with_capacity(w * h);
        for y in y0..=y1 {
            data.extend_from_slice(&self.data[y * self.width + x0..=y * self.width + x1]);
        }
        BinaryMask::new(w, h, data)
    }

    /// Nearest-neighbour resampling, sampling source pixel centres.
    pub fn resize_nearest(&self, width: usize, height: usize) -> BinaryMask {
        let src = |dst: usize, from: usize, to: usize| ((dst * 2 + 1) * from / (to * 2)).min(from - 1);
        let cols: Vec<usize> = (0..width).map(|x| src(x, self.width, width)).collect();
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            let sy = src(y, self.height, height);
            data.extend(cols.iter().map(|&sx| self.get(sx, sy)));
        }
        BinaryMask::new(width, height, data)
    }

    /// Resize so the longer side equals `side`, keeping the aspect ratio.
    pub fn fit_long_side(&self, side: usize) -> BinaryMask {
        let long = self.width.max(self.height) as f64;
        let dim = |d: usize| (((d as f64) * side as f64 / long).round() as usize).clamp(1, side);
        self.resize_nearest(dim(self.width), dim(self.height))
    }
}

/// Threshold a grey-scale digit and normalize it to a tight mask of long side
/// [`NORMALIZED_SIDE`].
pub fn normalize_digit(pixels: &[u8], width: usize, height: usize, index: usize) -> Result<BinaryMask> {
    let raw = BinaryMask::new(width, height, pixels.iter().map(|&p| p > MNIST_THRESHOLD).collect());
    let (x0, y0, x1, y1) = raw.bounding_box().ok_or(Error::EmptyMask { index })?;
    Ok(raw.crop(x0, y0, x1, y1).fit_long_side(NORMALIZED_SIDE))
}

/// Normalized digit masks grouped by label.
#[derive(Debug, Clone, Default)]
pub struct ShapeBank {
    by_digit: [Vec<BinaryMask>; 10],
}

impl ShapeBank {
    pub fn from_idx(images: &IdxArray, labels: &IdxArray) -> Result<Self> {
        if images.magic() != IMAGES_MAGIC {
            return Err(Error::Consistency(format!(
                "image file has magic 0x{:08x}, expected 0x{IMAGES_MAGIC:08x}",
                images.magic()
            )));
        }
        if labels.magic() != LABELS_MAGIC {
            return Err(Error::Consistency(format!(
                "label file has magic 0x{:08x}, expected 0x{LABELS_MAGIC:08x}",
                labels.magic()
            )));
        }
        let (n, rows, cols) = (
            images.dims[0] as usize,
            images.dims[1] as usize,
            images.dims[2] as usize,
        );
        if labels.dims[0] as usize != n {
            return Err(Error::Consistency(format!("{n} images but {} labels", labels.dims[0])));
        }
        let mut bank = ShapeBank::default();
        for (i, (pixels, &label)) in images.data.chunks_exact(rows * cols).zip(&labels.data).enumerate() {
            if label > 9 {
                return Err(Error::Consistency(format!("label {label} of image {i} is not a digit")));
            }
            bank.by_digit[label as usize].push(normalize_digit(pixels, cols, rows, i)?);
        }
        Ok(bank)
    }

    pub fn push(&mut self, digit: u8, mask: BinaryMask) {
        self.by_digit[digit as usize].push(mask);
    }

    pub fn digit(&self, digit: u8) -> &[BinaryMask] {
        &self.by_digit[digit as usize]
    }

    pub fn get(&self, shape: ShapeRef) -> Option<&BinaryMask> {
        self.by_digit.get(shape.digit as usize)?.get(shape.instance)
    }

    pub fn len(&self) -> usize {
        self.by_digit.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = (u8, &BinaryMask)> {
        self.by_digit
            .iter()
            .enumerate()
            .flat_map(|(d, masks)| masks.iter().map(move |m| (d as u8, m)))
    }
}

impl AssetCatalog for ShapeBank {
    fn shape_instances(&self, digit: u8) -> usize {
        self.by_digit.get(digit as usize).map_or(0, Vec::len)
    }

    fn texture_count(&self) -> usize {
        0
    }
}

pub fn load_mnist(images_path: &Path, labels_path: &Path) -> Result<ShapeBank> {
    let images = IdxArray::read(images_path)?;
    let labels = IdxArray::read(labels_path)?;
    ShapeBank::from_idx(&images, &labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx(dims: Vec<u32>, data: Vec<u8>) -> IdxArray {
        IdxArray { dims, data }
    }

    fn digit_image(x0: usize, y0: usize, w: usize, h: usize) -> Vec<u8> {
        let mut img = vec![0u8; 28 * 28];
        for y in y0..y0 + h {
            for x in x0..x0 + w {
                img[y * 28 + x] = 200;
            }
        }
        img
    }

    #[test]
    fn normalized_long_side_is_45() {
        assert_eq!(NORMALIZED_SIDE, (CANVAS_SIDE as f64 / 2f64.sqrt()).floor() as usize);
        let m = normalize_digit(&digit_image(5, 3, 9, 20), 28, 28, 0).unwrap();
        assert_eq!((m.width(), m.height()), (20, 45));
        // Upscaling a tight mask keeps it tight.
        assert_eq!(m.bounding_box(), Some((0, 0, 19, 44)));
    }

    #[test]
    fn threshold_is_strictly_above_127() {
        let mut img = vec![0u8; 28 * 28];
        img[0] = 127;
        assert!(matches!(
            normalize_digit(&img, 28, 28, 4),
            Err(Error::EmptyMask { index: 4 })
        ));
        img[0] = 128;
        let m = normalize_digit(&img, 28, 28, 4).unwrap();
        assert_eq!(m.count(), 45 * 45);
    }

    #[test]
    fn all_zero_image_is_an_error() {
        let err = normalize_digit(&[0u8; 784], 28, 28, 9).unwrap_err();
        assert_eq!(err.to_string(), "empty mask after threshold (image 9)");
    }

    #[test]
    fn groups_by_label() {
        let mut data = digit_image(2, 2, 10, 10);
        data.extend(digit_image(4, 4, 5, 12));
        data.extend(digit_image(1, 1, 20, 8));
        let bank = ShapeBank::from_idx(&idx(vec![3, 28, 28], data), &idx(vec![3], vec![7, 3, 7])).unwrap();
        assert_eq!(bank.len(), 3);
        assert_eq!(bank.digit(7).len(), 2);
        assert_eq!(bank.digit(3).len(), 1);
        for (_, m) in bank.iter() {
            assert_eq!(m.width().max(m.height()), NORMALIZED_SIDE);
        }
    }

    #[test]
    fn count_mismatch_is_a_consistency_error() {
        let images = idx(vec![1, 28, 28], digit_image(2, 2, 10, 10));
        let labels = idx(vec![2], vec![1, 2]);
        assert!(matches!(
            ShapeBank::from_idx(&images, &labels),
            Err(Error::Consistency(_))
        ));
    }

    #[test]
    fn swapped_files_are_rejected() {
        let images = idx(vec![1, 28, 28], digit_image(2, 2, 10, 10));
        let labels = idx(vec![1], vec![1]);
        assert!(ShapeBank::from_idx(&labels, &images).is_err());
    }

    #[test]
    fn resize_nearest_identity_and_doubling() {
        let m = BinaryMask::new(2, 2, vec![true, false, false, true]);
        assert_eq!(m.resize_nearest(2, 2), m);
        let d = m.resize_nearest(4, 4);
        assert!(d.get(0, 0) && d.get(1, 1) && d.get(3, 3) && d.get(2, 3));
        assert!(!d.get(2, 0) && !d.get(0, 3));
    }
}
