//! Image-generating function: a factor realization becomes a 128x128 RGB image
//! holding one textured, coloured digit on a constant grey background.
//!
//! Pipeline:
//! 1. take the normalized mask of `shape` (long side 45 on a 64 px canvas);
//! 2. the object box is the canvas scaled by `scale`: side `S = round(64 * scale)`,
//!    the mask is resampled by the same factor (nearest neighbour) and centred in it;
//! 3. an `S x S` texture crop is cut at the realization's crop origin and
//!    coloured by interpolating between two HSL colours of equal hue;
//! 4. the box is placed so its top-left corner sits at `round(position * (128 - S))`,
//!    which keeps every object inside the frame;
//! 5. mask pixels take the coloured texture, all others the background grey.

use std::io::Cursor;
use std::path::Path;

use crate::assets::{Assets, BinaryMask, GrayPatch, CANVAS_SIDE};
use crate::error::{Error, Result};
use crate::factor_model::{FactorClassTable, FactorRealization};

pub const IMAGE_SIDE: usize = 128;
pub const BACKGROUND: f32 = 0.5;
/// Saturation used for every object colour.
pub const SATURATION: f64 = 1.0;

/// HSL to RGB with `h` in degrees and `s`, `l` in `[0, 1]` (inputs are clamped).
pub fn hsl_to_rgb(h: f64, s: f64, l: f64) -> [f64; 3] {
    let h = crate::factor_model::wrap_degrees(h);
    let (s, l) = (s.clamp(0.0, 1.0), l.clamp(0.0, 1.0));
    let c = (1.0 - (2.0 * l - 1.0).abs()) * s;
    let hp = h / 60.0;
    let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = l - c / 2.0;
    [r + m, g + m, b + m]
}

/// Colour a grey patch: each pixel is `(1 - t) * dark + t * light` where the two
/// colours share `hue` and have the lower and higher of the two lightness values.
pub fn colorize(patch: &GrayPatch, hue: f64, lightness: (f64, f64)) -> Vec<[f32; 3]> {
    let (l1, l2) = if lightness.0 <= lightness.1 {
        lightness
    } else {
        (lightness.1, lightness.0)
    };
    let lo = hsl_to_rgb(hue, SATURATION, l1);
    let hi = hsl_to_rgb(hue, SATURATION, l2);
    patch
        .data
        .iter()
        .map(|&t| {
            let t = f64::from(t);
            [0, 1, 2].map(|c| ((1.0 - t) * lo[c] + t * hi[c]) as f32)
        })
        .collect()
}

/// Square RGB image, values in `[0, 1]`, row-major interleaved.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    side: usize,
    data: Vec<f32>,
}

impl Image {
    pub fn filled(side: usize, value: f32) -> Self {
        Image {
            side,
            data: vec![value; side * side * 3],
        }
    }

    pub fn from_raw(side: usize, data: Vec<f32>) -> Self {
        assert_eq!(data.len(), side * side * 3);
        Image { side, data }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f32; 3] {
        let i = (y * self.side + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [f32; 3]) {
        let i = (y * self.side + x) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn to_rgb8(&self) -> image::RgbImage {
        let bytes = self
            .data
            .iter()
            .map(|&v| (255.0 * v.clamp(0.0, 1.0)).round() as u8)
            .collect();
        image::RgbImage::from_raw(self.side as u32, self.side as u32, bytes).expect("buffer size")
    }

    pub fn from_rgb8(rgb: &image::RgbImage) -> Self {
        assert_eq!(rgb.width(), rgb.height(), "images are square");
        Image {
            side: rgb.width() as usize,
            data: rgb.as_raw().iter().map(|&b| f32::from(b) / 255.0).collect(),
        }
    }

    pub fn to_png(&self) -> Result<Vec<u8>> {
        let mut out = Cursor::new(Vec::new());
        self.to_rgb8().write_to(&mut out, image::ImageFormat::Png)?;
        Ok(out.into_inner())
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        let bytes = self.to_png()?;
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    pub fn load_png(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::decode_png(&bytes)
    }

    pub fn decode_png(bytes: &[u8]) -> Result<Self> {
        let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)?;
        Ok(Self::from_rgb8(&img.to_rgb8()))
    }
}

/// Where the object box landed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ObjectBox {
    pub x0: usize,
    pub y0: usize,
    pub side: usize,
}

#[derive(Debug, Clone)]
pub struct Rendered {
    pub image: Image,
    pub object: ObjectBox,
    /// Foreground pixels of the full image.
    pub footprint: BinaryMask,
}

/// Object box side for a scale realization.
pub fn object_side(scale: f64) -> usize {
    (CANVAS_SIDE as f64 * scale).round() as usize
}

/// Top-left corner of an object box of side `side` for a normalized position.
pub fn place(position: (f64, f64), side: usize) -> Result<(usize, usize)> {
    if side == 0 || side > IMAGE_SIDE {
        return Err(Error::Placement {
            side,
            image_side: IMAGE_SIDE,
        });
    }
    let free = (IMAGE_SIDE - side) as f64;
    let at = |p: f64| (p.clamp(0.0, 1.0) * free).round() as usize;
    Ok((at(position.0), at(position.1)))
}

/// Render a realization. The realization is first checked against `table`.
pub fn render(table: &FactorClassTable, realization: &FactorRealization, assets: &Assets) -> Result<Rendered> {
    table.class_of(realization)?;
    render_unchecked(realization, assets)
}

/// Render without checking class membership (custom factor values).
pub fn render_unchecked(realization: &FactorRealization, assets: &Assets) -> Result<Rendered> {
    let mask = assets
        .shapes
        .get(realization.shape)
        .ok_or_else(|| Error::Config(format!("shape {:?} is not loaded", realization.shape)))?;
    let texture = assets
        .textures
        .get(realization.texture.index)
        .ok_or_else(|| Error::Config(format!("texture {} is not loaded", realization.texture.index)))?;

    let side = object_side(realization.scale);
    let (x0, y0) = place(realization.position, side)?;
    let resize = |d: usize| ((d * side) as f64 / CANVAS_SIDE as f64).round().clamp(1.0, side as f64) as usize;
    let scaled = mask.resize_nearest(resize(mask.width()), resize(mask.height()));
    let (mx, my) = ((side - scaled.width()) / 2, (side - scaled.height()) / 2);

    let crop = texture.crop(side, realization.texture.origin)?;
    let colors = colorize(&crop, realization.hue, realization.lightness);

    let mut image = Image::filled(IMAGE_SIDE, BACKGROUND);
    let mut footprint = vec![false; IMAGE_SIDE * IMAGE_SIDE];
    for y in 0..scaled.height() {
        for x in 0..scaled.width() {
            if scaled.get(x, y) {
                let (bx, by) = (mx + x, my + y);
                let (ix, iy) = (x0 + bx, y0 + by);
                image.set_pixel(ix, iy, colors[by * side + bx]);
                footprint[iy * IMAGE_SIDE + ix] = true;
            }
        }
    }
    Ok(Rendered {
        image,
        object: ObjectBox { x0, y0, side },
        footprint: BinaryMask::new(IMAGE_SIDE, IMAGE_SIDE, footprint),
    })
}
