//! On-disk datasets: a JSON-lines manifest next to one PNG per record, and
//! CSV prediction files coming back from external predictors.
//!
//! The exact byte layout is documented in `docs/formats.md`.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assets::Assets;
use crate::error::{Error, Result};
use crate::factor_model::{ClassCombination, FactorClassTable, FactorId};
use crate::renderer::render;
use crate::rng::{split, stream};
use crate::study::{CellPattern, Pairing, Split, SplitCounts, StudyDataset, StudyKind, CLASSES_PER_FACTOR};

pub const MANIFEST_FORMAT: &str = "fovbench-manifest/1";
pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const INCOMPLETE_MARKER: &str = ".incomplete";

/// First line of a manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestHeader {
    pub format: String,
    pub study: StudyKind,
    pub pairing: Pairing,
    pub sample: usize,
    pub sample_seed: u64,
    /// Seed of this dataset; record `k` renders from `split(seed, k)`.
    pub seed: u64,
    pub counts: SplitCounts,
    /// Selected class indices per factor, factor order position..texture.
    pub selected: [[usize; CLASSES_PER_FACTOR]; 6],
    pub bijection: [usize; 3],
    pub pattern: CellPattern,
    pub table: FactorClassTable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub id: String,
    pub split: Split,
    /// Path relative to the manifest's directory.
    pub file: String,
    pub combination: ClassCombination,
    /// Position (0..=2) of the target class in the sample's selection.
    pub target: u8,
    /// `(row, column)` of the 3x3 cell matrix.
    pub cell: (usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub header: ManifestHeader,
    pub records: Vec<ManifestRecord>,
}

impl DatasetManifest {
    /// Manifest of a dataset without rendering anything.
    pub fn from_dataset(dataset: &StudyDataset, table: &FactorClassTable) -> Self {
        let header = ManifestHeader {
            format: MANIFEST_FORMAT.to_string(),
            study: dataset.kind,
            pairing: dataset.pairing,
            sample: dataset.sample.id,
            sample_seed: dataset.sample.seed,
            seed: dataset.seed,
            counts: dataset.counts,
            selected: dataset.sample.selected,
            bijection: dataset.bijection,
            pattern: dataset.pattern.clone(),
            table: table.clone(),
        };
        let mut records = Vec::with_capacity(dataset.counts.total());
        for s in Split::ALL {
            for (n, r) in dataset.plan.split(s).iter().enumerate() {
                records.push(ManifestRecord {
                    id: format!("{s}-{n:06}"),
                    split: s,
                    file: format!("{s}/{n:06}.png"),
                    combination: r.combination,
                    target: r.target,
                    cell: r.cell,
                });
            }
        }
        DatasetManifest { header, records }
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &ManifestRecord> {
        self.records.iter().filter(move |r| r.split == split)
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = serde_json::to_string(&self.header)?;
        out.push('\n');
        for r in &self.records {
            out.push_str(&serde_json::to_string(r)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_jsonl(text: &str, path: &Path) -> Result<Self> {
        let mut offset = 0;
        let mut header = None;
        let mut records = Vec::new();
        for line in text.split_inclusive('\n') {
            let body = line.trim_end_matches(['\n', '\r']);
            if !body.is_empty() {
                let parse_err = |e: serde_json::Error| Error::Parse {
                    path: path.to_path_buf(),
                    offset,
                    message: e.to_string(),
                };
                if header.is_none() {
                    header = Some(serde_json::from_str::<ManifestHeader>(body).map_err(parse_err)?);
                } else {
                    records.push(serde_json::from_str::<ManifestRecord>(body).map_err(parse_err)?);
                }
            }
            offset += line.len();
        }
        let header = header.ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            offset: 0,
            message: "empty manifest".into(),
        })?;
        if header.format != MANIFEST_FORMAT {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                offset: 0,
                message: format!("unsupported format `{}`", header.format),
            });
        }
        let manifest = DatasetManifest { header, records };
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_jsonl(&text, path)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_jsonl()?).map_err(|e| Error::io(path, e))
    }

    /// Internal consistency: unique ids, labels agreeing with combinations, test cells in the mask.
    pub fn validate(&self) -> Result<()> {
        let h = &self.header;
        let mut problems = Vec::new();
        let mut seen = HashSet::new();
        for r in &self.records {
            if !seen.insert(r.id.as_str()) {
                problems.push(format!("duplicate id `{}`", r.id));
            }
            let (row, col) = r.cell;
            if row >= 3 || col >= 3 || usize::from(r.target) != row {
                problems.push(format!(
                    "`{}`: cell {:?} does not match target {}",
                    r.id, r.cell, r.target
                ));
                continue;
            }
            let target = h.selected[h.pairing.target.slot()][row];
            let correlate = h.selected[h.pairing.correlate.slot()][col];
            if r.combination.get(h.pairing.target) != target || r.combination.get(h.pairing.correlate) != correlate {
                problems.push(format!("`{}`: combination disagrees with cell {:?}", r.id, r.cell));
            }
            if r.split == Split::Test && !h.pattern.is_test(r.cell) {
                problems.push(format!("`{}`: test record in non-test cell {:?}", r.id, r.cell));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Consistency(problems.join("; ")))
        }
    }

    /// Target label per test id.
    pub fn test_targets(&self) -> BTreeMap<&str, u8> {
        self.split(Split::Test).map(|r| (r.id.as_str(), r.target)).collect()
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Render every record of `dataset` into `out_dir` and write the manifest.
///
/// A `.incomplete` marker exists in `out_dir` for as long as the export is in
/// progress, so an interrupted or failed export is recognisable.
pub fn export(
    dataset: &StudyDataset,
    table: &FactorClassTable,
    assets: &Assets,
    out_dir: &Path,
) -> Result<DatasetManifest> {
    let manifest = DatasetManifest::from_dataset(dataset, table);
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let marker = out_dir.join(INCOMPLETE_MARKER);
    write_file(&marker, b"")?;
    for s in Split::ALL {
        let dir = out_dir.join(s.name());
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    }

    manifest
        .records
        .par_iter()
        .enumerate()
        .try_for_each(|(k, r)| -> Result<()> {
            let mut rng = stream(split(dataset.seed, k as u64));
            let realization = table.sample_realization(&r.combination, assets, &mut rng)?;
            let png = render(table, &realization, assets)?.image.to_png()?;
            write_file(&out_dir.join(&r.file), &png)
        })?;

    manifest.write(&out_dir.join(MANIFEST_FILE))?;
    fs::remove_file(&marker).map_err(|e| Error::io(&marker, e))?;
    Ok(manifest)
}

/// Check that every file a manifest references exists under `root`.
pub fn check_files(manifest: &DatasetManifest, root: &Path) -> Result<()> {
    let missing: Vec<String> = manifest
        .records
        .iter()
        .filter(|r| !root.join(&r.file).is_file())
        .map(|r| r.file.clone())
        .collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(Error::Consistency(format!("missing files: {}", missing.join(", "))))
    }
}

/// Validated predictions, in file order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictionFile {
    pub records: Vec<(String, u8)>,
}

impl PredictionFile {
    pub fn as_map(&self) -> HashMap<&str, u8> {
        self.records.iter().map(|(id, p)| (id.as_str(), *p)).collect()
    }

    /// Check against a manifest: known ids, no duplicates, classes 0..=2, every test id covered.
    pub fn validate(&self, manifest: &DatasetManifest) -> Result<()> {
        let known: HashSet<&str> = manifest.records.iter().map(|r| r.id.as_str()).collect();
        let mut problems = Vec::new();
        let mut seen = HashSet::new();
        for (id, p) in &self.records {
            if !known.contains(id.as_str()) {
                problems.push(format!("unknown id `{id}`"));
            }
            if !seen.insert(id.as_str()) {
                problems.push(format!("duplicate id `{id}`"));
            }
            if usize::from(*p) >= CLASSES_PER_FACTOR {
                problems.push(format!("`{id}`: predicted class {p} is out of range 0..=2"));
            }
        }
        for r in manifest.split(Split::Test) {
            if !seen.contains(r.id.as_str()) {
                problems.push(format!("missing prediction for test id `{}`", r.id));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct PredictionRow {
    id: String,
    predicted: String,
}

/// Parse a `id,predicted` CSV without checking it against a manifest.
pub fn parse_predictions(path: &Path) -> Result<PredictionFile> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["id", "predicted"] {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            offset: 0,
            message: format!(
                "header must be `id,predicted`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut records = Vec::new();
    let mut bad = Vec::new();
    for row in reader.deserialize::<PredictionRow>() {
        let row = row.map_err(|e| csv_error(path, e))?;
        match row.predicted.trim().parse::<u8>() {
            Ok(p) => records.push((row.id, p)),
            Err(_) => bad.push(format!(
                "`{}`: predicted class `{}` is out of range 0..=2",
                row.id, row.predicted
            )),
        }
    }
    if !bad.is_empty() {
        return Err(Error::Validation(bad));
    }
    Ok(PredictionFile { records })
}

/// Read predictions and validate them against `manifest`.
pub fn read_predictions(path: &Path, manifest: &DatasetManifest) -> Result<PredictionFile> {
    let predictions = parse_predictions(path)?;
    predictions.validate(manifest)?;
    Ok(predictions)
}

pub fn write_predictions(path: &Path, records: &[(String, u8)]) -> Result<()> {
    if let Some((id, p)) = records.iter().find(|(_, p)| usize::from(*p) >= CLASSES_PER_FACTOR) {
        return Err(Error::Validation(vec![format!(
            "`{id}`: predicted class {p} is out of range 0..=2"
        )]));
    }
    let mut out = String::from("id,predicted\n");
    for (id, p) in records {
        out.push_str(&format!("{id},{p}\n"));
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let offset = e.position().map_or(0, |p| p.byte() as usize);
    Error::Parse {
        path: path.to_path_buf(),
        offset,
        message: e.to_string(),
    }
}

/// Directory of a dataset inside a study output tree.
pub fn dataset_dir(root: &Path, kind: StudyKind, pairing: Pairing, sample: usize) -> PathBuf {
    root.join(kind.to_string())
        .join(format!("{}-{}", pairing.target, pairing.correlate))
        .join(format!("sample-{sample}"))
}

/// Label of the target class of a record, for reports.
pub fn target_label(manifest: &DatasetManifest, target: u8) -> &str {
    let h = &manifest.header;
    let f: FactorId = h.pairing.target;
    h.table.label(f, h.selected[f.slot()][usize::from(target)])
}
