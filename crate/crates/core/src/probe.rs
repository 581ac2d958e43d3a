//! A small softmax classifier trained from scratch with mini-batch SGD.
//!
//! Inputs are rendered images downsampled bilinearly to `side x side`, flattened
//! as RGB, and centred by subtracting the background grey 0.5. The model is a
//! linear layer or one ReLU hidden layer followed by a linear layer, all
//! parameters living in one flat `f64` vector so that finite-difference
//! checking and checkpointing need no knowledge of the layer structure.

use std::fs;
use std::io::Read as _;
use std::path::Path;

use rand::seq::{index, SliceRandom};
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset_io::DatasetManifest;
use crate::error::{Error, Result};
use crate::renderer::{Image, BACKGROUND};
use crate::rng::{split, substream, tags, Rng};
use crate::study::Split;

pub const CLASSES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Architecture {
    Linear,
    Mlp { hidden: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    pub architecture: Architecture,
    /// Side of the downsampled input.
    pub side: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Stop after this many epochs without a lower validation loss.
    pub patience: usize,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            architecture: Architecture::Linear,
            side: 32,
            learning_rate: 0.03,
            batch_size: 64,
            epochs: 150,
            patience: 15,
            seed: 0,
        }
    }
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("probe: {m}")));
        if self.side == 0 || self.side > 128 {
            return bad("side must be in 1..=128");
        }
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return bad("learning rate must be finite and non-negative");
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return bad("batch size and epochs must be positive");
        }
        if let Architecture::Mlp { hidden: 0 } = self.architecture {
            return bad("hidden width must be positive");
        }
        Ok(())
    }
}

/// Separable bilinear (triangle-filter) resampling weights from `src` to `dst`
/// samples. When shrinking, the triangle is widened by the reduction factor so
/// every source pixel contributes; at equal sizes this is the identity.
fn triangle_weights(src: usize, dst: usize) -> Vec<Vec<(usize, f64)>> {
    let scale = src as f64 / dst as f64;
    let support = scale.max(1.0);
    (0..dst)
        .map(|d| {
            let centre = (d as f64 + 0.5) * scale;
            let lo = ((centre - support).floor().max(0.0)) as usize;
            let hi = ((centre + support).ceil() as usize).min(src);
            let mut taps: Vec<(usize, f64)> = (lo..hi)
                .map(|s| (s, (1.0 - ((s as f64 + 0.5 - centre) / support).abs()).max(0.0)))
                .filter(|&(_, w)| w > 0.0)
                .collect();
            let total: f64 = taps.iter().map(|t| t.1).sum();
            taps.iter_mut().for_each(|t| t.1 /= total);
            taps
        })
        .collect()
}

/// Bilinear resampling of an image to `side x side` (antialiased when shrinking).
pub fn downsample(image: &Image, side: usize) -> Vec<f32> {
    let src = image.side();
    let taps = triangle_weights(src, side);
    // Horizontal pass: src rows x side columns.
    let mut rows = vec![[0f64; 3]; src * side];
    for y in 0..src {
        for (x, t) in taps.iter().enumerate() {
            let mut acc = [0.0; 3];
            for &(sx, w) in t {
                let p = image.pixel(sx, y);
                for ch in 0..3 {
                    acc[ch] += w * f64::from(p[ch]);
                }
            }
            rows[y * side + x] = acc;
        }
    }
    let mut out = Vec::with_capacity(side * side * 3);
    for t in &taps {
        for x in 0..side {
            let mut acc = [0.0; 3];
            for &(sy, w) in t {
                let r = rows[sy * side + x];
                for ch in 0..3 {
                    acc[ch] += w * r[ch];
                }
            }
            out.extend(acc.map(|v| v as f32));
        }
    }
    out
}

/// Probe input of an image: downsampled and centred on the background value.
pub fn features(image: &Image, side: usize) -> Vec<f32> {
    downsample(image, side).into_iter().map(|v| v - BACKGROUND).collect()
}

/// Row-major feature matrix with labels.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub dim: usize,
    pub x: Vec<f32>,
    pub y: Vec<u8>,
    pub ids: Vec<String>,
}

impl Dataset {
    pub fn new(dim: usize) -> Self {
        Dataset {
            dim,
            ..Default::default()
        }
    }

    pub fn push(&mut self, id: String, x: &[f32], y: u8) {
        assert_eq!(x.len(), self.dim);
        self.x.extend_from_slice(x);
        self.y.push(y);
        self.ids.push(id);
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }

    pub fn subset(&self, rows: &[usize]) -> Dataset {
        let mut d = Dataset::new(self.dim);
        for &i in rows {
            d.push(self.ids[i].clone(), self.row(i), self.y[i]);
        }
        d
    }
}

/// Decode the PNGs of one split of a manifest into probe inputs, in manifest order.
pub fn load_split(manifest: &DatasetManifest, root: &Path, split: Split, side: usize) -> Result<Dataset> {
    let records: Vec<_> = manifest.split(split).collect();
    let rows: Vec<Vec<f32>> = records
        .par_iter()
        .map(|r| Image::load_png(&root.join(&r.file)).map(|img| features(&img, side)))
        .collect::<Result<_>>()?;
    let mut data = Dataset::new(side * side * 3);
    for (r, x) in records.iter().zip(rows) {
        data.push(r.id.clone(), &x, r.target);
    }
    Ok(data)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeModel {
    pub architecture: Architecture,
    pub side: usize,
    pub input_dim: usize,
    pub params: Vec<f64>,
    pub history: Vec<EpochStats>,
    /// Epoch whose parameters were kept (0 = initialization).
    pub best_epoch: usize,
}

/// `(in, out)` of each dense layer.
fn layer_dims(architecture: Architecture, input_dim: usize) -> Vec<(usize, usize)> {
    match architecture {
        Architecture::Linear => vec![(input_dim, CLASSES)],
        Architecture::Mlp { hidden } => vec![(input_dim, hidden), (hidden, CLASSES)],
    }
}

fn param_count(architecture: Architecture, input_dim: usize) -> usize {
    layer_dims(architecture, input_dim).iter().map(|(i, o)| i * o + o).sum()
}

impl ProbeModel {
    /// Fresh model. The linear model starts at zero; the MLP's first layer uses
    /// He-normal weights drawn from `seed` and zero biases, its output layer
    /// Glorot-normal weights.
    pub fn init(architecture: Architecture, side: usize, seed: u64) -> Self {
        let input_dim = side * side * 3;
        let mut params = vec![0.0; param_count(architecture, input_dim)];
        if let Architecture::Mlp { hidden } = architecture {
            let mut rng = substream(seed, tags::PROBE);
            let he = Normal::new(0.0, (2.0 / input_dim as f64).sqrt()).unwrap();
            let glorot = Normal::new(0.0, (2.0 / (hidden + CLASSES) as f64).sqrt()).unwrap();
            let first = input_dim * hidden;
            for p in &mut params[..first] {
                *p = he.sample(&mut rng);
            }
            let second = first + hidden;
            for p in &mut params[second..second + hidden * CLASSES] {
                *p = glorot.sample(&mut rng);
            }
        }
        ProbeModel {
            architecture,
            side,
            input_dim,
            params,
            history: Vec::new(),
            best_epoch: 0,
        }
    }

    pub fn scores(&self, x: &[f32]) -> [f64; CLASSES] {
        let mut hidden = Vec::new();
        forward(self.architecture, self.input_dim, &self.params, x, &mut hidden)
    }

    pub fn predict_row(&self, x: &[f32]) -> u8 {
        argmax(&self.scores(x))
    }

    pub fn predict(&self, data: &Dataset) -> Vec<u8> {
        (0..data.len()).map(|i| self.predict_row(data.row(i))).collect()
    }

    /// Mean cross-entropy over `rows` of `data`.
    pub fn loss(&self, data: &Dataset, rows: &[usize]) -> f64 {
        loss_and_grad(self.architecture, self.input_dim, &self.params, data, rows, None)
    }

    /// Gradient of [`ProbeModel::loss`].
    pub fn gradient(&self, data: &Dataset, rows: &[usize]) -> Vec<f64> {
        let mut g = vec![0.0; self.params.len()];
        loss_and_grad(
            self.architecture,
            self.input_dim,
            &self.params,
            data,
            rows,
            Some(&mut g),
        );
        g
    }

    pub fn accuracy(&self, data: &Dataset) -> f64 {
        let pairs = (0..data.len()).map(|i| (data.y[i], self.predict_row(data.row(i))));
        crate::metrics::mean_per_class_accuracy(pairs, &present_classes(&data.y)).unwrap_or(f64::NAN)
    }

    // Checkpoint: "FOVPROBE", then u32 LE version, architecture (0 linear,
    // 1 mlp), side, input dim, hidden width (0 for linear), classes, u64 LE
    // parameter count, then the parameters as f64 LE.
    pub fn to_bytes(&self) -> Vec<u8> {
        let (kind, hidden) = match self.architecture {
            Architecture::Linear => (0u32, 0u32),
            Architecture::Mlp { hidden } => (1, hidden as u32),
        };
        let mut out = Vec::with_capacity(40 + self.params.len() * 8);
        out.extend_from_slice(CHECKPOINT_MAGIC);
        for v in [
            CHECKPOINT_VERSION,
            kind,
            self.side as u32,
            self.input_dim as u32,
            hidden,
            CLASSES as u32,
        ] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&(self.params.len() as u64).to_le_bytes());
        for p in &self.params {
            out.extend_from_slice(&p.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: String| Error::Checkpoint(m);
        let mut r = bytes;
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(|_| bad("truncated header".into()))?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(bad("not a probe checkpoint".into()));
        }
        let mut u32s = [0u32; 6];
        for v in &mut u32s {
            let mut b = [0u8; 4];
            r.read_exact(&mut b).map_err(|_| bad("truncated header".into()))?;
            *v = u32::from_le_bytes(b);
        }
        let [version, kind, side, input_dim, hidden, classes] = u32s.map(|v| v as usize);
        if version != CHECKPOINT_VERSION as usize {
            return Err(bad(format!("unsupported version {version}")));
        }
        if classes != CLASSES || input_dim != side * side * 3 {
            return Err(bad(format!(
                "inconsistent shape: side {side}, input {input_dim}, classes {classes}"
            )));
        }
        let architecture = match (kind, hidden) {
            (0, 0) => Architecture::Linear,
            (1, h) if h > 0 => Architecture::Mlp { hidden: h },
            _ => return Err(bad(format!("unknown architecture {kind} with hidden {hidden}"))),
        };
        let mut b = [0u8; 8];
        r.read_exact(&mut b).map_err(|_| bad("truncated header".into()))?;
        let count = u64::from_le_bytes(b) as usize;
        if count != param_count(architecture, input_dim) || r.len() != count * 8 {
            return Err(bad(format!(
                "expected {count} parameters, payload has {} bytes",
                r.len()
            )));
        }
        let params = r
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(ProbeModel {
            architecture,
            side,
            input_dim,
            params,
            history: Vec::new(),
            best_epoch: 0,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path).map_err(|e| Error::io(path, e))?)
    }
}

const CHECKPOINT_MAGIC: &[u8; 8] = b"FOVPROBE";
const CHECKPOINT_VERSION: u32 = 1;

fn present_classes(y: &[u8]) -> Vec<u8> {
    (0..CLASSES as u8).filter(|c| y.contains(c)).collect()
}

/// Index of the largest score; ties go to the lowest index.
pub fn argmax(scores: &[f64]) -> u8 {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best as u8
}

fn dense(w: &[f64], b: &[f64], x: impl Fn(usize) -> f64, n_in: usize, out: &mut [f64]) {
    for (o, v) in out.iter_mut().enumerate() {
        let row = &w[o * n_in..(o + 1) * n_in];
        let mut acc = b[o];
        for (i, &wi) in row.iter().enumerate() {
            acc += wi * x(i);
        }
        *v = acc;
    }
}

/// Logits for one input; `hidden` receives the hidden pre-activations of an MLP.
fn forward(
    architecture: Architecture,
    input_dim: usize,
    params: &[f64],
    x: &[f32],
    hidden: &mut Vec<f64>,
) -> [f64; CLASSES] {
    let mut logits = [0.0; CLASSES];
    match architecture {
        Architecture::Linear => {
            let (w, b) = params.split_at(input_dim * CLASSES);
            dense(w, b, |i| f64::from(x[i]), input_dim, &mut logits);
        }
        Architecture::Mlp { hidden: h } => {
            let (w1, rest) = params.split_at(input_dim * h);
            let (b1, rest) = rest.split_at(h);
            let (w2, b2) = rest.split_at(h * CLASSES);
            hidden.resize(h, 0.0);
            dense(w1, b1, |i| f64::from(x[i]), input_dim, hidden);
            let act: Vec<f64> = hidden.iter().map(|&z| z.max(0.0)).collect();
            dense(w2, b2, |i| act[i], h, &mut logits);
        }
    }
    logits
}

fn softmax(logits: &[f64; CLASSES]) -> [f64; CLASSES] {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e = logits.map(|l| (l - m).exp());
    let s: f64 = e.iter().sum();
    e.map(|v| v / s)
}

fn cross_entropy(logits: &[f64; CLASSES], y: usize) -> f64 {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + logits.iter().map(|l| (l - m).exp()).sum::<f64>().ln();
    lse - logits[y]
}

/// Mean cross-entropy over `rows`; accumulates its gradient into `grad` when given.
fn loss_and_grad(
    architecture: Architecture,
    input_dim: usize,
    params: &[f64],
    data: &Dataset,
    rows: &[usize],
    mut grad: Option<&mut [f64]>,
) -> f64 {
    let n = rows.len() as f64;
    let mut total = 0.0;
    let mut hidden = Vec::new();
    for &r in rows {
        let x = data.row(r);
        let y = data.y[r] as usize;
        let logits = forward(architecture, input_dim, params, x, &mut hidden);
        total += cross_entropy(&logits, y);
        let Some(g) = grad.as_deref_mut() else { continue };
        let mut delta = softmax(&logits);
        delta[y] -= 1.0;
        let delta = delta.map(|d| d / n);
        match architecture {
            Architecture::Linear => {
                let (gw, gb) = g.split_at_mut(input_dim * CLASSES);
                for c in 0..CLASSES {
                    let row = &mut gw[c * input_dim..(c + 1) * input_dim];
                    for (gi, &xi) in row.iter_mut().zip(x) {
                        *gi += delta[c] * f64::from(xi);
                    }
                    gb[c] += delta[c];
                }
            }
            Architecture::Mlp { hidden: h } => {
                let w2 = &params[input_dim * h + h..input_dim * h + h + h * CLASSES];
                let (gw1, rest) = g.split_at_mut(input_dim * h);
                let (gb1, rest) = rest.split_at_mut(h);
                let (gw2, gb2) = rest.split_at_mut(h * CLASSES);
                for c in 0..CLASSES {
                    for k in 0..h {
                        gw2[c * h + k] += delta[c] * hidden[k].max(0.0);
                    }
                    gb2[c] += delta[c];
                }
                for k in 0..h {
                    if hidden[k] <= 0.0 {
                        continue;
                    }
                    let back: f64 = (0..CLASSES).map(|c| delta[c] * w2[c * h + k]).sum();
                    let row = &mut gw1[k * input_dim..(k + 1) * input_dim];
                    for (gi, &xi) in row.iter_mut().zip(x) {
                        *gi += back * f64::from(xi);
                    }
                    gb1[k] += back;
                }
            }
        }
    }
    total / n
}

fn all_rows(data: &Dataset) -> Vec<usize> {
    (0..data.len()).collect()
}

/// Train with mini-batch SGD, keeping the parameters with the lowest validation loss.
pub fn train(config: &ProbeConfig, train: &Dataset, val: &Dataset) -> Result<ProbeModel> {
    config.validate()?;
    let dim = config.side * config.side * 3;
    if train.dim != dim || val.dim != dim {
        return Err(Error::Config(format!(
            "probe expects {dim} inputs, data has {} / {}",
            train.dim, val.dim
        )));
    }
    if train.is_empty() || val.is_empty() {
        return Err(Error::Config("probe needs non-empty train and val splits".into()));
    }
    let mut model = ProbeModel::init(config.architecture, config.side, config.seed);
    let train_rows = all_rows(train);
    let val_rows = all_rows(val);

    let stats = |m: &ProbeModel, epoch: usize| EpochStats {
        epoch,
        train_loss: m.loss(train, &train_rows),
        val_loss: m.loss(val, &val_rows),
        val_accuracy: m.accuracy(val),
    };
    let first = stats(&model, 0);
    model.history.push(first);
    let mut best = (first.val_loss, model.params.clone(), 0);
    let mut last_stable = None;
    let shuffle_seed = split(config.seed, tags::PROBE);

    for epoch in 1..=config.epochs {
        let mut order = train_rows.clone();
        order.shuffle(&mut substream(shuffle_seed, epoch as u64));
        for batch in order.chunks(config.batch_size) {
            let g = model.gradient(train, batch);
            for (p, gi) in model.params.iter_mut().zip(g) {
                *p -= config.learning_rate * gi;
            }
        }
        let s = stats(&model, epoch);
        if !s.train_loss.is_finite() || !s.val_loss.is_finite() || model.params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Divergence { epoch, last_stable });
        }
        last_stable = Some(epoch);
        model.history.push(s);
        if s.val_loss < best.0 {
            best = (s.val_loss, model.params.clone(), epoch);
        } else if epoch - best.2 >= config.patience.max(1) {
            break;
        }
    }
    model.params = best.1;
    model.best_epoch = best.2;
    Ok(model)
}

/// Largest relative error between analytic and central-difference gradients
/// (`eps = 1e-4`) over up to 100 random parameter coordinates.
///
/// Relative error is `|a - n| / max(|a|, |n|)`, taken as 0 when both are
/// below 1e-12. For an MLP, hidden biases are first nudged so that no
/// pre-activation on the batch lies within 1e-3 of the ReLU kink.
pub fn grad_check(model: &ProbeModel, batch: &Dataset, rng: &mut Rng) -> f64 {
    const EPS: f64 = 1e-4;
    let mut m = model.clone();
    if let Architecture::Mlp { hidden: h } = m.architecture {
        let b1 = m.input_dim * h;
        for _ in 0..100 {
            let mut moved = false;
            let mut pre = Vec::new();
            for r in 0..batch.len() {
                forward(m.architecture, m.input_dim, &m.params, batch.row(r), &mut pre);
                for (k, z) in pre.iter().enumerate() {
                    if z.abs() < 1e-3 {
                        m.params[b1 + k] += 2e-3;
                        moved = true;
                    }
                }
            }
            if !moved {
                break;
            }
        }
    }
    let rows = all_rows(batch);
    let analytic = m.gradient(batch, &rows);
    let n = m.params.len();
    let coords = index::sample(rng, n, n.min(100));
    let mut worst: f64 = 0.0;
    for i in coords.iter() {
        let orig = m.params[i];
        m.params[i] = orig + EPS;
        let up = m.loss(batch, &rows);
        m.params[i] = orig - EPS;
        let down = m.loss(batch, &rows);
        m.params[i] = orig;
        let numeric = (up - down) / (2.0 * EPS);
        let a = analytic[i];
        let scale = a.abs().max(numeric.abs());
        if scale > 1e-12 {
            worst = worst.max((a - numeric).abs() / scale);
        }
    }
    worst
}
