//! Raw visual material: MNIST digit masks for `shape` and grey-scale textures
//! for `texture`.

pub mod idx;
mod shapes;
mod textures;

pub use shapes::{load_mnist, BinaryMask, ShapeBank, CANVAS_SIDE, MNIST_THRESHOLD, NORMALIZED_SIDE};
pub use textures::{equalize_histogram, load_textures, luminance, GrayPatch, Texture, TextureBank, DEFAULT_TEXTURES};

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::factor_model::AssetCatalog;

/// Both banks together, as needed for sampling and rendering.
#[derive(Debug, Clone)]
pub struct Assets {
    pub shapes: ShapeBank,
    pub textures: TextureBank,
}

impl AssetCatalog for Assets {
    fn shape_instances(&self, digit: u8) -> usize {
        self.shapes.shape_instances(digit)
    }

    fn texture_count(&self) -> usize {
        self.textures.len()
    }
}

/// File locations of the raw assets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssetPaths {
    pub mnist_images: PathBuf,
    pub mnist_labels: PathBuf,
    pub texture_dir: PathBuf,
    /// `(class label, file name)` per texture class, in class order.
    pub textures: Vec<(String, String)>,
}

impl AssetPaths {
    /// Layout of an `assets/` directory: `mnist/images-idx3-ubyte`,
    /// `mnist/labels-idx1-ubyte` and `textures/<label>.png`.
    pub fn under(root: &Path) -> Self {
        AssetPaths {
            mnist_images: root.join("mnist/images-idx3-ubyte"),
            mnist_labels: root.join("mnist/labels-idx1-ubyte"),
            texture_dir: root.join("textures"),
            textures: DEFAULT_TEXTURES
                .iter()
                .map(|l| (l.to_string(), format!("{l}.png")))
                .collect(),
        }
    }

    pub fn load(&self) -> Result<Assets> {
        Ok(Assets {
            shapes: load_mnist(&self.mnist_images, &self.mnist_labels)?,
            textures: load_textures(&self.texture_dir, &self.textures)?,
        })
    }
}
