//! Command implementations behind the `fovbench` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::assets::{AssetPaths, Assets};
use crate::dataset_io::{dataset_dir, export, read_predictions, write_predictions, DatasetManifest, MANIFEST_FILE};
use crate::error::{Error, Result};
use crate::factor_model::{FactorClassTable, FactorId};
use crate::metrics::{evaluate_run, MetricsReport, RunAccuracy};
use crate::probe::{load_split, train, ProbeConfig, ProbeModel};
use crate::study::{
    build_dataset, enumerate_pairings, select_dataset_samples, Pairing, Split, SplitCounts, StudyKind, DEFAULT_SAMPLES,
};

pub const ENV_MNIST_IMAGES: &str = "FOVBENCH_MNIST_IMAGES";
pub const ENV_MNIST_LABELS: &str = "FOVBENCH_MNIST_LABELS";
pub const ENV_TEXTURE_DIR: &str = "FOVBENCH_TEXTURE_DIR";

/// The bundled `assets/` directory of this repository.
pub fn default_asset_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../assets")
}

/// Asset paths: the bundled layout, overridden per file by environment variables.
pub fn asset_paths(root: Option<&Path>) -> AssetPaths {
    let mut paths = AssetPaths::under(root.unwrap_or(&default_asset_root()));
    if let Some(p) = std::env::var_os(ENV_MNIST_IMAGES) {
        paths.mnist_images = p.into();
    }
    if let Some(p) = std::env::var_os(ENV_MNIST_LABELS) {
        paths.mnist_labels = p.into();
    }
    if let Some(p) = std::env::var_os(ENV_TEXTURE_DIR) {
        paths.texture_dir = p.into();
    }
    paths
}

/// Which pairings a run covers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PairingSelection {
    /// `"all"`: the 30 ordered pairings (the 6 factors for ZSO).
    All(String),
    List(Vec<String>),
}

/// Everything a `generate` or `run-study` invocation depends on. Printed at
/// start so the run can be reproduced from the echo alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub study: StudyKind,
    /// `target:correlate` pairings; for ZSO, target factors.
    pub pairings: PairingSelection,
    pub seed: u64,
    /// Divide the default split sizes by this.
    pub scale: usize,
    pub samples: usize,
    pub out: PathBuf,
    /// Custom class table (TOML); the default table when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<PathBuf>,
    /// Asset directory; the bundled one when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub assets: Option<PathBuf>,
    pub probe: ProbeConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            study: StudyKind::Zgo,
            pairings: PairingSelection::List(vec!["shape:hue".into()]),
            seed: 0,
            scale: 1,
            samples: DEFAULT_SAMPLES,
            out: PathBuf::from("out"),
            table: None,
            assets: None,
            probe: ProbeConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    pub fn echo(&self) -> String {
        toml::to_string(self).unwrap_or_else(|e| format!("# unprintable config: {e}\n"))
    }

    pub fn counts(&self) -> Result<SplitCounts> {
        if self.scale == 0 {
            return Err(Error::Config("scale must be at least 1".into()));
        }
        Ok(SplitCounts::scaled(self.scale))
    }

    pub fn resolved_pairings(&self) -> Result<Vec<Pairing>> {
        let zso = self.study == StudyKind::Zso;
        match &self.pairings {
            PairingSelection::All(s) if s == "all" => Ok(if zso {
                FactorId::ALL.into_iter().map(Pairing::for_zso).collect()
            } else {
                enumerate_pairings()
            }),
            PairingSelection::All(s) => parse_pairings(std::slice::from_ref(s), zso),
            PairingSelection::List(v) => parse_pairings(v, zso),
        }
    }

    pub fn load_table(&self) -> Result<FactorClassTable> {
        match &self.table {
            Some(p) => FactorClassTable::load(p),
            None => Ok(FactorClassTable::default_table()),
        }
    }

    pub fn load_assets(&self) -> Result<Assets> {
        asset_paths(self.assets.as_deref()).load()
    }
}

fn parse_pairings(items: &[String], zso: bool) -> Result<Vec<Pairing>> {
    if items.is_empty() {
        return Err(Error::Config("no pairings given".into()));
    }
    items
        .iter()
        .map(|s| {
            if zso && !s.contains(':') {
                Ok(Pairing::for_zso(s.parse()?))
            } else {
                let p: Pairing = s.parse()?;
                Ok(if zso { Pairing::for_zso(p.target) } else { p })
            }
        })
        .collect()
}

/// Render every dataset of the run. Returns the manifest paths.
pub fn generate(config: &RunConfig, table: &FactorClassTable, assets: &Assets) -> Result<Vec<PathBuf>> {
    let counts = config.counts()?;
    let samples = select_dataset_samples(table, config.seed, config.samples)?;
    let mut manifests = Vec::new();
    for pairing in config.resolved_pairings()? {
        for sample in &samples {
            let dataset = build_dataset(config.study, pairing, sample, counts)?;
            let dir = dataset_dir(&config.out, config.study, pairing, sample.id);
            export(&dataset, table, assets, &dir)?;
            manifests.push(dir.join(MANIFEST_FILE));
        }
    }
    Ok(manifests)
}

/// Score prediction files against manifests (same order), optionally with
/// shortcut drops against a ZSO report.
pub fn evaluate(manifests: &[PathBuf], predictions: &[PathBuf], zso: Option<&MetricsReport>) -> Result<MetricsReport> {
    if manifests.len() != predictions.len() || manifests.is_empty() {
        return Err(Error::Config(format!(
            "need one prediction file per manifest, got {} manifests and {} prediction files",
            manifests.len(),
            predictions.len()
        )));
    }
    let mut study = None;
    let mut runs = Vec::new();
    for (m, p) in manifests.iter().zip(predictions) {
        let manifest = DatasetManifest::read(m)?;
        if *study.get_or_insert(manifest.header.study) != manifest.header.study {
            return Err(Error::Config("all manifests must belong to one study".into()));
        }
        let preds = read_predictions(p, &manifest)?;
        runs.push(evaluate_run(&manifest, &preds)?);
    }
    MetricsReport::build(study.unwrap(), runs, zso)
}

/// Directory holding a manifest.
pub fn manifest_root(manifest_path: &Path) -> PathBuf {
    manifest_path
        .parent()
        .map_or_else(|| PathBuf::from("."), Path::to_path_buf)
}

/// Train the probe on a manifest's train/val splits.
pub fn train_probe(manifest_path: &Path, config: &ProbeConfig) -> Result<(DatasetManifest, ProbeModel)> {
    let manifest = DatasetManifest::read(manifest_path)?;
    let root = manifest_root(manifest_path);
    let tr = load_split(&manifest, &root, Split::Train, config.side)?;
    let va = load_split(&manifest, &root, Split::Val, config.side)?;
    let model = train(config, &tr, &va)?;
    Ok((manifest, model))
}

/// Predict one split of a manifest and write the CSV.
pub fn predict(model: &ProbeModel, manifest_path: &Path, split: Split, out: &Path) -> Result<Vec<(String, u8)>> {
    let manifest = DatasetManifest::read(manifest_path)?;
    let data = load_split(&manifest, &manifest_root(manifest_path), split, model.side)?;
    let records: Vec<(String, u8)> = data.ids.iter().cloned().zip(model.predict(&data)).collect();
    write_predictions(out, &records)?;
    Ok(records)
}

/// Outcome of training and testing the probe on one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRun {
    pub study: StudyKind,
    pub pairing: Pairing,
    pub sample: usize,
    pub manifest: PathBuf,
    pub best_epoch: usize,
    pub epochs_run: usize,
    /// Mean per-class accuracy on val (training distribution).
    pub val_accuracy: f64,
    /// Mean per-class accuracy on test (held-out cells; training distribution for ZSO).
    pub test_accuracy: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub config: RunConfig,
    pub runs: Vec<ProbeRun>,
    pub metrics: MetricsReport,
}

/// Generate, train, predict and evaluate every dataset of a run. Writes
/// `predictions.csv` and `probe.bin` next to each manifest, and
/// `report.json` / `report.txt` under `<out>/<study>/`.
pub fn run_study(config: &RunConfig, zso: Option<&MetricsReport>, log: &mut dyn FnMut(&str)) -> Result<StudyReport> {
    let table = config.load_table()?;
    let assets = config.load_assets()?;
    let counts = config.counts()?;
    let samples = select_dataset_samples(&table, config.seed, config.samples)?;
    let mut runs = Vec::new();
    for pairing in config.resolved_pairings()? {
        for sample in &samples {
            let start = Instant::now();
            let dataset = build_dataset(config.study, pairing, sample, counts)?;
            let dir = dataset_dir(&config.out, config.study, pairing, sample.id);
            export(&dataset, &table, &assets, &dir)?;
            let manifest_path = dir.join(MANIFEST_FILE);
            let mut probe = config.probe.clone();
            probe.seed = crate::rng::split(config.probe.seed, sample.id as u64);
            let (manifest, model) = train_probe(&manifest_path, &probe)?;
            model.save(&dir.join("probe.bin"))?;
            let pred_path = dir.join("predictions.csv");
            predict(&model, &manifest_path, Split::Test, &pred_path)?;
            let test = evaluate_run(&manifest, &read_predictions(&pred_path, &manifest)?)?;
            let best = model.history[model.best_epoch];
            let run = ProbeRun {
                study: config.study,
                pairing,
                sample: sample.id,
                manifest: manifest_path,
                best_epoch: model.best_epoch,
                epochs_run: model.history.len() - 1,
                val_accuracy: best.val_accuracy,
                test_accuracy: test.accuracy,
                seconds: start.elapsed().as_secs_f64(),
            };
            log(&format!(
                "{} {} sample {}: val {:.3} test {:.3} (best epoch {}, {:.1}s)",
                run.study, run.pairing, run.sample, run.val_accuracy, run.test_accuracy, run.best_epoch, run.seconds
            ));
            runs.push(run);
        }
    }
    let accuracies: Vec<RunAccuracy> = runs
        .iter()
        .map(|r| RunAccuracy {
            pairing: r.pairing,
            sample: r.sample,
            accuracy: r.test_accuracy,
        })
        .collect();
    let metrics = MetricsReport::build(config.study, accuracies, zso)?;
    let report = StudyReport {
        config: config.clone(),
        runs,
        metrics,
    };
    let dir = config.out.join(config.study.to_string());
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let json = dir.join("report.json");
    fs::write(&json, serde_json::to_string_pretty(&report)?).map_err(|e| Error::io(&json, e))?;
    let txt = dir.join("report.txt");
    fs::write(&txt, report.metrics.to_text()).map_err(|e| Error::io(&txt, e))?;
    Ok(report)
}

/// Load either a bare metrics report or a run-study report and return its metrics.
pub fn load_metrics(path: &Path) -> Result<MetricsReport> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let metrics = value.get("metrics").cloned().unwrap_or(value);
    Ok(serde_json::from_value(metrics)?)
}
