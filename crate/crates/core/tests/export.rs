use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use fovbench::assets::{AssetPaths, Assets, TextureBank};
use fovbench::dataset_io::{check_files, export, DatasetManifest, INCOMPLETE_MARKER, MANIFEST_FILE};
use fovbench::factor_model::{FactorClassTable, FactorId};
use fovbench::renderer::render;
use fovbench::rng::{split, stream};
use fovbench::study::{build_dataset, select_dataset_samples, Pairing, Split, SplitCounts, StudyKind};
use sha2::{Digest, Sha256};

fn assets() -> Assets {
    AssetPaths::under(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../assets"))
        .load()
        .unwrap()
}

fn tree_hashes(root: &Path) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in std::fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().display().to_string();
                out.insert(rel, hex::encode(Sha256::digest(std::fs::read(&p).unwrap())));
            }
        }
    }
    out
}

#[test]
fn export_is_complete_reproducible_and_consistent() {
    let (table, assets) = (FactorClassTable::default_table(), assets());
    let sample = &select_dataset_samples(&table, 4, 1).unwrap()[0];
    let pairing = Pairing::new(FactorId::Texture, FactorId::Position).unwrap();
    let d = build_dataset(StudyKind::Cgo(2), pairing, sample, SplitCounts::scaled(200)).unwrap();

    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let m = export(&d, &table, &assets, &a).unwrap();
    export(&d, &table, &assets, &b).unwrap();

    assert!(!a.join(INCOMPLETE_MARKER).exists());
    let c = d.counts;
    assert_eq!(m.records.len(), c.train + c.val + c.test);
    check_files(&m, &a).unwrap();
    let hashes = tree_hashes(&a);
    assert_eq!(hashes.len(), m.records.len() + 1);
    assert_eq!(hashes, tree_hashes(&b));

    let read = DatasetManifest::read(&a.join(MANIFEST_FILE)).unwrap();
    assert_eq!(read, m);
    for r in m.split(Split::Test) {
        assert!(d.pattern.test[r.cell.0][r.cell.1], "{} in cell {:?}", r.id, r.cell);
    }

    // Any record can be re-rendered from the header seed and its global index.
    for k in [0, c.train, m.records.len() - 1] {
        let r = &m.records[k];
        let mut rng = stream(split(m.header.seed, k as u64));
        let real = table.sample_realization(&r.combination, &assets, &mut rng).unwrap();
        let png = render(&table, &real, &assets).unwrap().image.to_png().unwrap();
        assert_eq!(png, std::fs::read(a.join(&r.file)).unwrap(), "{}", r.id);
    }
}

#[test]
fn failed_export_leaves_the_marker() {
    let table = FactorClassTable::default_table();
    let mut assets = assets();
    assets.textures = TextureBank::new(Vec::new());
    let sample = &select_dataset_samples(&table, 4, 1).unwrap()[0];
    let pairing = Pairing::new(FactorId::Shape, FactorId::Hue).unwrap();
    let d = build_dataset(StudyKind::Zgo, pairing, sample, SplitCounts::scaled(1000)).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    assert!(export(&d, &table, &assets, tmp.path()).is_err());
    assert!(tmp.path().join(INCOMPLETE_MARKER).exists());
    assert!(!tmp.path().join(MANIFEST_FILE).exists());
}
