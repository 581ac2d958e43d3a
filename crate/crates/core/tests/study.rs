use std::collections::{BTreeMap, BTreeSet};

use fovbench::factor_model::{FactorClassTable, FactorId};
use fovbench::study::{
    build_dataset, cell_pattern, enumerate_pairings, materialize_split, select_dataset_samples, Cell, Pairing,
    PlannedRecord, SplitCounts, StudyKind,
};

fn table() -> FactorClassTable {
    FactorClassTable::default_table()
}

fn cell_counts(records: &[PlannedRecord]) -> BTreeMap<Cell, usize> {
    let mut m = BTreeMap::new();
    for r in records {
        *m.entry(r.cell).or_insert(0) += 1;
    }
    m
}

#[test]
fn hue_selection_frequency_is_uniform() {
    let t = table();
    let mut hits = [0usize; 6];
    let seeds = 1000;
    for seed in 0..seeds {
        let s = &select_dataset_samples(&t, seed, 1).unwrap()[0];
        for &c in &s.classes(FactorId::Hue) {
            hits[c] += 1;
        }
    }
    for h in hits {
        let f = h as f64 / seeds as f64;
        assert!((f - 0.5).abs() <= 0.05, "hue class frequency {f}");
    }
}

#[test]
fn pattern_invariants_over_100_seeds() {
    let t = table();
    let pairings = enumerate_pairings();
    for seed in 0..100u64 {
        let sample = &select_dataset_samples(&t, seed, 1).unwrap()[0];
        let pairing = pairings[seed as usize % pairings.len()];
        let pi = sample.bijection(pairing);
        let mut sorted = pi;
        sorted.sort();
        assert_eq!(sorted, [0, 1, 2]);

        let mut previous: Option<BTreeSet<Cell>> = None;
        for kind in StudyKind::all() {
            let p = cell_pattern(kind, pi, &mut sample.pattern_rng(pairing));
            for row in &p.weights {
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
            if !matches!(kind, StudyKind::Zso | StudyKind::Fgo(_)) {
                for (r, c) in p.test_cells() {
                    assert_eq!(p.weights[r][c], 0.0, "{kind}: test cell with train weight");
                }
            }
            let train: BTreeSet<Cell> = p.train_cells().into_iter().collect();
            match kind {
                StudyKind::Zgo => {
                    let all: BTreeSet<Cell> = train.iter().chain(&p.test_cells()).copied().collect();
                    assert_eq!(all.len(), 9);
                    previous = Some(train);
                }
                StudyKind::Cgo(c) => {
                    assert_eq!(train.len(), 3 + c as usize);
                    for r in 0..3 {
                        assert!(p.test[r].iter().any(|&t| t), "CGO-{c} row {r} has no held-out cell");
                    }
                    assert!(previous.as_ref().unwrap().is_subset(&train), "CGO-{c} is not nested");
                    previous = Some(train);
                }
                StudyKind::Chgo => assert_eq!(train.len(), 5),
                _ => {}
            }
        }
    }
}

#[test]
fn fgo_5_train_of_6000_follows_multinomial_expectation() {
    let t = table();
    let sample = &select_dataset_samples(&t, 21, 1).unwrap()[0];
    let pairing = Pairing::new(FactorId::Shape, FactorId::Hue).unwrap();
    let counts = SplitCounts {
        train: 6000,
        val: 3,
        test: 3,
    };
    let d = build_dataset(StudyKind::Fgo(5), pairing, sample, counts).unwrap();
    let by_cell = cell_counts(&d.plan.train);
    // Each row holds 2000 records: diagonal p = 0.95, off cells p = 0.025.
    for (&(r, c), &n) in &by_cell {
        let p: f64 = if d.bijection[r] == c { 0.95 } else { 0.025 };
        let mean = 2000.0 * p;
        let sd = (2000.0 * p * (1.0 - p)).sqrt();
        assert!((n as f64 - mean).abs() <= 3.0 * sd, "cell ({r},{c}): {n} vs {mean}");
    }
}

#[test]
fn zso_val_matches_train_distribution() {
    let t = table();
    let sample = &select_dataset_samples(&t, 5, 1).unwrap()[0];
    let d = build_dataset(
        StudyKind::Zso,
        Pairing::for_zso(FactorId::Hue),
        sample,
        SplitCounts::scaled(1),
    )
    .unwrap();
    let (tr, va) = (cell_counts(&d.plan.train), cell_counts(&d.plan.val));
    assert_eq!(tr.len(), 9);
    assert_eq!(va.len(), 9);
    for cell in tr.keys() {
        let p_train = tr[cell] as f64 / d.plan.train.len() as f64;
        let p_val = va[cell] as f64 / d.plan.val.len() as f64;
        // Variance of the difference of two independent proportions around 1/9.
        let p = 1.0 / 9.0;
        let sd = (p * (1.0 - p) * (1.0 / d.plan.train.len() as f64 + 1.0 / d.plan.val.len() as f64)).sqrt();
        assert!((p_train - p_val).abs() <= 3.0 * sd, "{cell:?}: {p_train} vs {p_val}");
    }
}

#[test]
fn uncorrelated_factors_are_uniform_over_selection() {
    let t = table();
    let sample = &select_dataset_samples(&t, 8, 1).unwrap()[0];
    let pairing = Pairing::new(FactorId::Scale, FactorId::Texture).unwrap();
    let d = build_dataset(StudyKind::Zgo, pairing, sample, SplitCounts::scaled(1)).unwrap();
    let n = d.plan.train.len() as f64;
    for f in [FactorId::Position, FactorId::Hue, FactorId::Lightness, FactorId::Shape] {
        for &class in &sample.classes(f) {
            let k = d.plan.train.iter().filter(|r| r.combination.get(f) == class).count() as f64;
            let sd = (n * (1.0 / 3.0) * (2.0 / 3.0)).sqrt();
            assert!((k - n / 3.0).abs() <= 4.0 * sd, "{f} class {class}: {k}");
        }
    }
}

#[test]
fn test_split_only_uses_test_cells_and_is_balanced() {
    let t = table();
    for seed in 0..10 {
        let sample = &select_dataset_samples(&t, seed, 1).unwrap()[0];
        for kind in StudyKind::all() {
            let pairing = Pairing::new(FactorId::Position, FactorId::Lightness).unwrap();
            let d = build_dataset(kind, pairing, sample, SplitCounts::scaled(10)).unwrap();
            assert!(d.plan.test.iter().all(|r| d.pattern.is_test(r.cell)));
            let mut counts = BTreeMap::new();
            for r in &d.plan.test {
                *counts.entry(r.target).or_insert(0usize) += 1;
            }
            assert_eq!(counts.len(), d.pattern.test_rows().len());
            let (lo, hi) = (counts.values().min().unwrap(), counts.values().max().unwrap());
            assert!(hi - lo <= 1);
        }
    }
}

#[test]
fn materialize_is_deterministic_per_seed() {
    let t = table();
    let sample = &select_dataset_samples(&t, 2, 1).unwrap()[0];
    let pairing = Pairing::new(FactorId::Hue, FactorId::Shape).unwrap();
    let p = cell_pattern(
        StudyKind::Chgo,
        sample.bijection(pairing),
        &mut sample.pattern_rng(pairing),
    );
    let counts = SplitCounts::scaled(50);
    let a = materialize_split(&p, sample, pairing, counts, 99).unwrap();
    assert_eq!(a, materialize_split(&p, sample, pairing, counts, 99).unwrap());
    assert_ne!(a, materialize_split(&p, sample, pairing, counts, 100).unwrap());
}
