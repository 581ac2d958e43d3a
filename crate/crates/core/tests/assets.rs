use std::path::PathBuf;

use fovbench::assets::idx::IdxArray;
use fovbench::assets::{AssetPaths, Assets, BinaryMask, NORMALIZED_SIDE};
use fovbench::rng::stream;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../assets")
}

fn assets() -> Assets {
    AssetPaths::under(&root()).load().unwrap()
}

fn be_u32(b: &[u8]) -> usize {
    u32::from_be_bytes([b[0], b[1], b[2], b[3]]) as usize
}

/// Label histogram read straight from the IDX bytes.
fn label_counts() -> [usize; 10] {
    let bytes = std::fs::read(root().join("mnist/labels-idx1-ubyte")).unwrap();
    assert_eq!(be_u32(&bytes[0..4]), 0x801);
    let n = be_u32(&bytes[4..8]);
    let mut counts = [0; 10];
    for &l in &bytes[8..8 + n] {
        counts[l as usize] += 1;
    }
    counts
}

fn long_side(m: &BinaryMask) -> usize {
    let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
    for y in 0..m.height() {
        for x in 0..m.width() {
            if m.get(x, y) {
                x0 = x0.min(x);
                y0 = y0.min(y);
                x1 = x1.max(x);
                y1 = y1.max(y);
            }
        }
    }
    assert!(x0 != usize::MAX, "empty mask");
    (x1 - x0 + 1).max(y1 - y0 + 1)
}

#[test]
fn idx_files_round_trip_byte_exact() {
    for f in ["mnist/images-idx3-ubyte", "mnist/labels-idx1-ubyte"] {
        let path = root().join(f);
        let raw = std::fs::read(&path).unwrap();
        assert_eq!(IdxArray::read(&path).unwrap().to_bytes(), raw, "{f}");
    }
}

#[test]
fn bundled_digits_cover_ten_classes_with_normalized_masks() {
    let a = assets();
    let counts = label_counts();
    let total: usize = counts.iter().sum();
    assert_eq!(a.shapes.len(), total);
    for d in 0..10u8 {
        let masks = a.shapes.digit(d);
        assert!(!masks.is_empty(), "digit {d} missing");
        assert_eq!(masks.len(), counts[d as usize], "digit {d}");
        for m in masks {
            assert_eq!(long_side(m), NORMALIZED_SIDE);
        }
    }
}

#[test]
fn textures_are_equalized_to_unit_range() {
    let a = assets();
    assert_eq!(a.textures.len(), 5);
    for t in a.textures.iter() {
        let v = t.values();
        let (lo, hi) = v.iter().fold((f32::MAX, f32::MIN), |(l, h), &x| (l.min(x), h.max(x)));
        assert_eq!((lo, hi), (0.0, 1.0), "{}", t.name);
        // After equalization the empirical CDF tracks the identity: at every
        // output level v, F(v) - v is bounded by the mass of the darkest input
        // level plus one quantization step.
        let mut sorted: Vec<f32> = v.to_vec();
        sorted.sort_by(f32::total_cmp);
        let n = sorted.len() as f64;
        let first = sorted.iter().take_while(|&&x| x == 0.0).count() as f64 / n;
        let mut i = 0;
        while i < sorted.len() {
            let level = sorted[i];
            while i < sorted.len() && sorted[i] == level {
                i += 1;
            }
            let gap = (i as f64 / n - f64::from(level)).abs();
            assert!(
                gap <= first + 1.0 / 255.0 + 1e-9,
                "{}: level {level} cdf gap {gap}",
                t.name
            );
        }
    }
}

#[test]
fn crops_are_shifted_copies_of_the_parent() {
    let a = assets();
    for (i, t) in a.textures.iter().enumerate() {
        for seed in 0..5 {
            let p = a.textures.sample_crop(i, 45, &mut stream(seed)).unwrap();
            assert_eq!(p, a.textures.sample_crop(i, 45, &mut stream(seed)).unwrap());
            let (ox, oy) = p.origin;
            for y in 0..45 {
                for x in 0..45 {
                    assert_eq!(p.get(x, y), t.get(ox + x, oy + y));
                }
            }
        }
        let full = t.width().min(t.height());
        let whole = t.crop(full, (0.7, 0.3)).unwrap();
        if t.width() == t.height() {
            assert_eq!(whole.origin, (0, 0));
            assert_eq!(whole.data, t.values());
        }
    }
}
