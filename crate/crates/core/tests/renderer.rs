use std::path::PathBuf;

use fovbench::assets::{AssetPaths, Assets};
use fovbench::factor_model::{ClassCombination, FactorClassTable, FactorId, FactorRealization, FactorValue};
use fovbench::renderer::{render, BACKGROUND, IMAGE_SIDE};
use fovbench::rng::stream;
use rand::Rng;

fn assets() -> Assets {
    AssetPaths::under(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../assets"))
        .load()
        .unwrap()
}

fn random_realization(table: &FactorClassTable, assets: &Assets, seed: u64) -> (ClassCombination, FactorRealization) {
    let mut rng = stream(seed);
    let mut c = ClassCombination([0; 6]);
    for f in FactorId::ALL {
        c.set(f, rng.random_range(0..table.class_count(f)));
    }
    (c, table.sample_realization(&c, assets, &mut rng).unwrap())
}

/// Hexcone hue in degrees, None for achromatic pixels.
fn rgb_hue(rgb: [f32; 3]) -> Option<f64> {
    let [r, g, b] = rgb.map(f64::from);
    let (max, min) = (r.max(g).max(b), r.min(g).min(b));
    let c = max - min;
    if c < 0.05 {
        return None;
    }
    let h = if max == r {
        ((g - b) / c).rem_euclid(6.0)
    } else if max == g {
        (b - r) / c + 2.0
    } else {
        (r - g) / c + 4.0
    };
    Some(h * 60.0)
}

fn circular_mean(angles: &[f64]) -> f64 {
    let (s, c) = angles.iter().fold((0.0, 0.0), |(s, c), a| {
        (s + a.to_radians().sin(), c + a.to_radians().cos())
    });
    s.atan2(c).to_degrees().rem_euclid(360.0)
}

fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

#[test]
fn hue_reads_back_from_pixels() {
    let (table, assets) = (FactorClassTable::default_table(), assets());
    let mut checked = 0;
    for seed in 0..200 {
        let (c, r) = random_realization(&table, &assets, seed);
        let out = render(&table, &r, &assets).unwrap();
        let mut hues = Vec::new();
        for y in 0..IMAGE_SIDE {
            for x in 0..IMAGE_SIDE {
                if out.footprint.get(x, y) {
                    hues.extend(rgb_hue(out.image.pixel(x, y)));
                }
            }
        }
        if hues.len() < 20 {
            // Near-white or near-black lightness pairs leave too few chromatic pixels.
            continue;
        }
        let h = circular_mean(&hues);
        assert!(angle_diff(h, r.hue) < 0.5, "seed {seed}: read {h}, drew {}", r.hue);
        let class = table.class_of_value(FactorId::Hue, FactorValue::Angle(h)).unwrap();
        assert_eq!(class, c.get(FactorId::Hue));
        checked += 1;
    }
    assert!(checked >= 150, "only {checked} renders were chromatic");
}

#[test]
fn largest_object_fits_centered() {
    let (table, assets) = (FactorClassTable::default_table(), assets());
    let (_, mut r) = random_realization(&table, &assets, 3);
    r.scale = 1.45;
    r.position = (0.5, 0.5);
    let out = fovbench::renderer::render_unchecked(&r, &assets).unwrap();
    assert_eq!(out.object.side, 93);
    assert!(out.object.x0 + out.object.side <= IMAGE_SIDE);
    assert!(out.object.y0 + out.object.side <= IMAGE_SIDE);
    let centre = out.object.x0 as f64 + 93.0 / 2.0;
    assert!((centre - 64.0).abs() <= 1.0);
}

#[test]
fn background_is_exact_and_renders_are_deterministic() {
    let (table, assets) = (FactorClassTable::default_table(), assets());
    for seed in 0..20 {
        let (_, r) = random_realization(&table, &assets, 1000 + seed);
        let a = render(&table, &r, &assets).unwrap();
        let b = render(&table, &r, &assets).unwrap();
        assert_eq!(a.image.to_png().unwrap(), b.image.to_png().unwrap());
        for y in 0..IMAGE_SIDE {
            for x in 0..IMAGE_SIDE {
                if !a.footprint.get(x, y) {
                    assert_eq!(a.image.pixel(x, y), [BACKGROUND; 3]);
                }
            }
        }
    }
}
