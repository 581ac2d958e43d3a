use std::path::Path;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Texture class labels of the default table, in class order. Files are `<label>.png`.
pub const DEFAULT_TEXTURES: [&str; 5] = ["tiles", "wood", "carpet", "bricks", "marble"];

/// Rec. 709 luma of an RGB triple in `[0, 1]`.
pub fn luminance(r: f64, g: f64, b: f64) -> f64 {
    0.2126 * r + 0.7152 * g + 0.0722 * b
}

/// 256-bin histogram equalization with OpenCV `equalizeHist` semantics: the
/// lowest occupied level maps to 0, the highest to 255, and an image with a
/// single level is returned unchanged.
pub fn equalize_histogram(pixels: &[u8]) -> Vec<u8> {
    let mut hist = [0usize; 256];
    for &p in pixels {
        hist[p as usize] += 1;
    }
    let Some(first) = hist.iter().position(|&h| h > 0) else {
        return Vec::new();
    };
    let total = pixels.len();
    if hist[first] == total {
        return pixels.to_vec();
    }
    let scale = 255.0 / (total - hist[first]) as f64;
    let mut lut = [0u8; 256];
    let mut cumulative = 0usize;
    for level in first + 1..256 {
        cumulative += hist[level];
        lut[level] = (cumulative as f64 * scale).round().clamp(0.0, 255.0) as u8;
    }
    pixels.iter().map(|&p| lut[p as usize]).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Texture {
    pub name: String,
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl Texture {
    /// Build from 8-bit grey levels: equalize, then scale to `[0, 1]`.
    pub fn from_gray(name: &str, width: usize, height: usize, gray: &[u8]) -> Self {
        assert_eq!(gray.len(), width * height);
        let data = equalize_histogram(gray)
            .into_iter()
            .map(|v| f32::from(v) / 255.0)
            .collect();
        Texture {
            name: name.to_string(),
            width,
            height,
            data,
        }
    }

    pub fn from_rgb8(name: &str, image: &image::RgbImage) -> Self {
        let gray: Vec<u8> = image
            .pixels()
            .map(|p| {
                let [r, g, b] = p.0.map(|c| f64::from(c) / 255.0);
                (luminance(r, g, b) * 255.0).round().clamp(0.0, 255.0) as u8
            })
            .collect();
        Self::from_gray(name, image.width() as usize, image.height() as usize, &gray)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    pub fn values(&self) -> &[f32] {
        &self.data
    }

    /// Square crop of side `size` whose origin is at fraction `origin` of the
    /// valid origin range (each component in `[0, 1)`).
    pub fn crop(&self, size: usize, origin: (f64, f64)) -> Result<GrayPatch> {
        if size == 0 || size > self.width || size > self.height {
            return Err(Error::Crop {
                size,
                width: self.width,
                height: self.height,
            });
        }
        let pick = |u: f64, free: usize| ((u.clamp(0.0, 1.0) * free as f64) as usize).min(free - 1);
        let x0 = pick(origin.0, self.width - size + 1);
        let y0 = pick(origin.1, self.height - size + 1);
        let mut data = Vec::with_capacity(size * size);
        for y in y0..y0 + size {
            data.extend_from_slice(&self.data[y * self.width + x0..y * self.width + x0 + size]);
        }
        Ok(GrayPatch {
            side: size,
            origin: (x0, y0),
            data,
        })
    }
}

/// Square grey-scale patch cut from a texture.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayPatch {
    pub side: usize,
    /// Pixel origin inside the parent texture.
    pub origin: (usize, usize),
    pub data: Vec<f32>,
}

impl GrayPatch {
    pub fn uniform(side: usize, value: f32) -> Self {
        GrayPatch {
            side,
            origin: (0, 0),
            data: vec![value; side * side],
        }
    }

    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.side + x]
    }
}

#[derive(Debug, Clone, Default)]
pub struct TextureBank {
    textures: Vec<Texture>,
}

impl TextureBank {
    pub fn new(textures: Vec<Texture>) -> Self {
        TextureBank { textures }
    }

    pub fn len(&self) -> usize {
        self.textures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.textures.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&Texture> {
        self.textures.get(index)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Texture> {
        self.textures.iter()
    }

    /// Uniformly random square crop.
    pub fn sample_crop(&self, index: usize, size: usize, rng: &mut Rng) -> Result<GrayPatch> {
        let texture = self
            .get(index)
            .ok_or_else(|| Error::Config(format!("texture index {index} is not loaded")))?;
        texture.crop(size, (rng.random(), rng.random()))
    }
}

/// Load `(label, file name)` pairs from `dir`, converting to equalized grey-scale.
pub fn load_textures(dir: &Path, files: &[(String, String)]) -> Result<TextureBank> {
    let mut textures = Vec::with_capacity(files.len());
    for (label, file) in files {
        let path = dir.join(file);
        let load_err = |message: String| Error::TextureLoad {
            name: label.clone(),
            path: path.clone(),
            message,
        };
        let image = image::open(&path).map_err(|e| load_err(e.to_string()))?.to_rgb8();
        if image.width() < 128 || image.height() < 128 {
            return Err(load_err(format!(
                "{}x{} is smaller than 128x128",
                image.width(),
                image.height()
            )));
        }
        textures.push(Texture::from_rgb8(label, &image));
    }
    Ok(TextureBank::new(textures))
}
