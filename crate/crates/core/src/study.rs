//! Study definitions: which target/correlate class combinations are shown in
//! training and which are held out for testing.
//!
//! Every study works on a 3x3 cell matrix. Rows are the three selected classes
//! of the target factor, columns those of the correlate factor. The bijection
//! `pi` marks the "diagonal" cells `(r, pi(r))` that carry the shortcut.

use std::fmt;
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factor_model::{ClassCombination, FactorClassTable, FactorId};
use crate::rng::{split, stream, substream, tags, Rng};

pub const CLASSES_PER_FACTOR: usize = 3;
pub const DEFAULT_SAMPLES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum StudyKind {
    /// Zero shortcut opportunity: every cell seen, test from the training distribution.
    Zso,
    /// Zero generalization opportunity: only the diagonal is seen.
    Zgo,
    /// ZGO plus `c` random off-diagonal cells (1..=3).
    Cgo(u8),
    /// One target class exclusively on its diagonal cell, the other two uniform over the rest.
    Chgo,
    /// Diagonal plus off-diagonal violations in `f` percent of each row (5, 10 or 20).
    Fgo(u8),
}

impl StudyKind {
    pub fn new_cgo(c: u8) -> Result<Self> {
        if (1..=3).contains(&c) {
            Ok(StudyKind::Cgo(c))
        } else {
            Err(Error::StudyDefinition(format!("CGO needs 1..=3 added cells, got {c}")))
        }
    }

    pub fn new_fgo(f: u8) -> Result<Self> {
        if [5, 10, 20].contains(&f) {
            Ok(StudyKind::Fgo(f))
        } else {
            Err(Error::StudyDefinition(format!(
                "FGO frequency must be 5, 10 or 20, got {f}"
            )))
        }
    }

    /// All nine study variants.
    pub fn all() -> Vec<StudyKind> {
        let mut v = vec![StudyKind::Zso, StudyKind::Zgo];
        v.extend((1..=3).map(StudyKind::Cgo));
        v.push(StudyKind::Chgo);
        v.extend([5, 10, 20].map(StudyKind::Fgo));
        v
    }

    fn code(self) -> u64 {
        match self {
            StudyKind::Zso => 1,
            StudyKind::Zgo => 2,
            StudyKind::Cgo(c) => 10 + u64::from(c),
            StudyKind::Chgo => 20,
            StudyKind::Fgo(f) => 100 + u64::from(f),
        }
    }
}

impl fmt::Display for StudyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StudyKind::Zso => write!(f, "ZSO"),
            StudyKind::Zgo => write!(f, "ZGO"),
            StudyKind::Cgo(c) => write!(f, "CGO-{c}"),
            StudyKind::Chgo => write!(f, "CHGO"),
            StudyKind::Fgo(p) => write!(f, "FGO-{p}"),
        }
    }
}

impl FromStr for StudyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.trim().to_ascii_uppercase();
        let (name, arg) = match upper.split_once('-') {
            Some((n, a)) => (n, Some(a)),
            None => (upper.as_str(), None),
        };
        let number = |a: Option<&str>| {
            a.and_then(|a| a.parse::<u8>().ok())
                .ok_or_else(|| Error::StudyDefinition(format!("`{s}` needs a numeric parameter")))
        };
        match (name, arg) {
            ("ZSO", None) => Ok(StudyKind::Zso),
            ("ZGO", None) => Ok(StudyKind::Zgo),
            ("CHGO", None) => Ok(StudyKind::Chgo),
            ("CGO", a) => StudyKind::new_cgo(number(a)?),
            ("FGO", a) => StudyKind::new_fgo(number(a)?),
            _ => Err(Error::StudyDefinition(format!("unknown study `{s}`"))),
        }
    }
}

impl TryFrom<String> for StudyKind {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<StudyKind> for String {
    fn from(k: StudyKind) -> String {
        k.to_string()
    }
}

/// Ordered pair of distinct factors: predict `target`, correlated with `correlate`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pairing {
    pub target: FactorId,
    pub correlate: FactorId,
}

impl Pairing {
    pub fn new(target: FactorId, correlate: FactorId) -> Result<Self> {
        if target == correlate {
            return Err(Error::StudyDefinition(format!(
                "pairing needs two distinct factors, got {target} twice"
            )));
        }
        Ok(Pairing { target, correlate })
    }

    /// Pairing used for ZSO runs, where the correlate only labels the cell matrix.
    pub fn for_zso(target: FactorId) -> Self {
        let correlate = FactorId::ALL[(target.slot() + 1) % 6];
        Pairing { target, correlate }
    }

    fn code(self) -> u64 {
        (self.target.index() * 8 + self.correlate.index()) as u64
    }
}

impl fmt::Display for Pairing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.target, self.correlate)
    }
}

impl FromStr for Pairing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (t, c) = s
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("pairing `{s}` must look like target:correlate")))?;
        Pairing::new(t.parse()?, c.parse()?)
    }
}

/// All 30 ordered pairings.
pub fn enumerate_pairings() -> Vec<Pairing> {
    FactorId::ALL
        .into_iter()
        .flat_map(|t| {
            FactorId::ALL
                .into_iter()
                .filter(move |&c| c != t)
                .map(move |c| Pairing {
                    target: t,
                    correlate: c,
                })
        })
        .collect()
}

/// One random selection of three classes per factor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSample {
    /// 1-based sample number.
    pub id: usize,
    pub seed: u64,
    /// Selected class indices per factor, in [`FactorId::ALL`] order. Position
    /// `k` in a list is the row/column `k` of the cell matrix.
    pub selected: [[usize; CLASSES_PER_FACTOR]; 6],
}

impl DatasetSample {
    pub fn classes(&self, factor: FactorId) -> [usize; CLASSES_PER_FACTOR] {
        self.selected[factor.slot()]
    }

    /// Bijection from target rows to correlate columns, drawn independently per pairing.
    pub fn bijection(&self, pairing: Pairing) -> [usize; CLASSES_PER_FACTOR] {
        let mut rng = substream(self.seed, split(tags::BIJECTION, pairing.code()));
        let mut pi = [0, 1, 2];
        pi.shuffle(&mut rng);
        pi
    }

    /// Stream used to draw cell patterns. Independent of the study kind so the
    /// CGO variants of one sample and pairing are nested.
    pub fn pattern_rng(&self, pairing: Pairing) -> Rng {
        substream(self.seed, split(tags::PATTERN, pairing.code()))
    }

    /// Seed for the records of one study run on this sample.
    pub fn dataset_seed(&self, kind: StudyKind, pairing: Pairing) -> u64 {
        split(split(self.seed, pairing.code()), kind.code())
    }

    /// Which 729 combinations this sample can emit.
    pub fn reachable_combinations(&self) -> usize {
        self.selected
            .iter()
            .map(|s| s.iter().collect::<std::collections::BTreeSet<_>>().len())
            .product()
    }
}

pub fn select_dataset_samples(table: &FactorClassTable, master_seed: u64, count: usize) -> Result<Vec<DatasetSample>> {
    for f in FactorId::ALL {
        if table.class_count(f) < CLASSES_PER_FACTOR {
            return Err(Error::Config(format!(
                "{f} has {} classes, at least {CLASSES_PER_FACTOR} are needed",
                table.class_count(f)
            )));
        }
    }
    let base = split(master_seed, tags::SAMPLES);
    Ok((1..=count)
        .map(|id| {
            let seed = split(base, id as u64);
            let mut rng = stream(seed);
            let mut selected = [[0; CLASSES_PER_FACTOR]; 6];
            for f in FactorId::ALL {
                let picks = index::sample(&mut rng, table.class_count(f), CLASSES_PER_FACTOR);
                for (k, j) in picks.iter().enumerate() {
                    selected[f.slot()][k] = j;
                }
            }
            DatasetSample { id, seed, selected }
        })
        .collect())
}

pub type Cell = (usize, usize);

/// Train weights (rows sum to 1) and test mask over the 3x3 cell matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellPattern {
    pub weights: [[f64; 3]; 3],
    pub test: [[bool; 3]; 3],
}

impl CellPattern {
    pub fn train_cells(&self) -> Vec<Cell> {
        self.cells(|r, c| self.weights[r][c] > 0.0)
    }

    pub fn test_cells(&self) -> Vec<Cell> {
        self.cells(|r, c| self.test[r][c])
    }

    fn cells(&self, keep: impl Fn(usize, usize) -> bool) -> Vec<Cell> {
        (0..3)
            .flat_map(|r| (0..3).map(move |c| (r, c)))
            .filter(|&(r, c)| keep(r, c))
            .collect()
    }

    /// Target rows that have at least one test cell.
    pub fn test_rows(&self) -> Vec<usize> {
        (0..3).filter(|&r| self.test[r].iter().any(|&t| t)).collect()
    }

    pub fn is_test(&self, cell: Cell) -> bool {
        self.test[cell.0][cell.1]
    }
}

/// Build the cell pattern of `kind` for the bijection `pi`.
pub fn cell_pattern(kind: StudyKind, pi: [usize; 3], rng: &mut Rng) -> CellPattern {
    let mut active = [[false; 3]; 3];
    let mut test = [[false; 3]; 3];
    let off_diagonal = |r: usize| (0..3).filter(move |&c| c != pi[r]);
    match kind {
        StudyKind::Zso => {
            active = [[true; 3]; 3];
            test = [[true; 3]; 3];
        }
        StudyKind::Zgo | StudyKind::Cgo(_) => {
            for r in 0..3 {
                active[r][pi[r]] = true;
                for c in off_diagonal(r) {
                    test[r][c] = true;
                }
            }
            if let StudyKind::Cgo(c) = kind {
                assert!((1..=3).contains(&c), "CGO-{c} cannot keep a held-out cell per row");
                // One candidate per row, rows in random order: the first `c` are
                // uniform over valid c-subsets and nested across c.
                let mut rows = [0, 1, 2];
                rows.shuffle(rng);
                let picks: Vec<usize> = (0..3)
                    .map(|r| off_diagonal(r).nth(rng.random_range(0..2)).unwrap())
                    .collect();
                for &r in rows.iter().take(c as usize) {
                    active[r][picks[r]] = true;
                    test[r][picks[r]] = false;
                }
            }
        }
        StudyKind::Chgo => {
            let exclusive = rng.random_range(0..3);
            for r in 0..3 {
                if r == exclusive {
                    active[r][pi[r]] = true;
                    for c in off_diagonal(r) {
                        test[r][c] = true;
                    }
                } else {
                    for c in (0..3).filter(|&c| c != pi[exclusive]) {
                        active[r][c] = true;
                    }
                }
            }
        }
        StudyKind::Fgo(f) => {
            let violation = f64::from(f) / 100.0;
            let mut weights = [[0.0; 3]; 3];
            for r in 0..3 {
                for c in 0..3 {
                    if c == pi[r] {
                        weights[r][c] = 1.0 - violation;
                    } else {
                        weights[r][c] = violation / 2.0;
                        test[r][c] = true;
                    }
                }
            }
            return CellPattern { weights, test };
        }
    }
    let mut weights = [[0.0; 3]; 3];
    for r in 0..3 {
        let n = active[r].iter().filter(|&&a| a).count() as f64;
        for c in 0..3 {
            if active[r][c] {
                weights[r][c] = 1.0 / n;
            }
        }
    }
    CellPattern { weights, test }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl Default for SplitCounts {
    fn default() -> Self {
        SplitCounts {
            train: 43740,
            val: 8748,
            test: 10000,
        }
    }
}

impl SplitCounts {
    /// Default sizes divided by `k`, rounded to nearest.
    pub fn scaled(k: usize) -> Self {
        let d = SplitCounts::default();
        let div = |n: usize| (n + k / 2) / k.max(1);
        SplitCounts {
            train: div(d.train),
            val: div(d.val),
            test: div(d.test),
        }
    }

    pub fn total(&self) -> usize {
        self.train + self.val + self.test
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Split {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            _ => Err(Error::Config(format!("unknown split `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlannedRecord {
    pub combination: ClassCombination,
    /// Row of the cell matrix, i.e. position of the target class in the selection.
    pub target: u8,
    pub cell: Cell,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitPlan {
    pub train: Vec<PlannedRecord>,
    pub val: Vec<PlannedRecord>,
    pub test: Vec<PlannedRecord>,
}

impl SplitPlan {
    pub fn split(&self, split: Split) -> &[PlannedRecord] {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }
}

/// `n` labels drawn from `classes` with counts differing by at most one, shuffled.
fn balanced_labels(n: usize, classes: &[usize], rng: &mut Rng) -> Vec<usize> {
    let k = classes.len();
    let mut extra: Vec<usize> = classes.to_vec();
    extra.shuffle(rng);
    let mut labels = Vec::with_capacity(n);
    for &c in classes {
        labels.extend(std::iter::repeat_n(c, n / k));
    }
    labels.extend(extra.into_iter().take(n % k));
    labels.shuffle(rng);
    labels
}

fn weighted_index(weights: &[f64; 3], rng: &mut Rng) -> usize {
    let u = rng.random::<f64>() * weights.iter().sum::<f64>();
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if u < acc && w > 0.0 {
            return i;
        }
    }
    weights.iter().rposition(|&w| w > 0.0).expect("row has positive weight")
}

fn record(sample: &DatasetSample, pairing: Pairing, cell: Cell, rng: &mut Rng) -> PlannedRecord {
    let mut combination = ClassCombination([0; 6]);
    for f in FactorId::ALL {
        let k = if f == pairing.target {
            cell.0
        } else if f == pairing.correlate {
            cell.1
        } else {
            rng.random_range(0..CLASSES_PER_FACTOR)
        };
        combination.set(f, sample.classes(f)[k]);
    }
    PlannedRecord {
        combination,
        target: cell.0 as u8,
        cell,
    }
}

/// Expand a cell pattern into class combinations for the three splits.
///
/// Train and val draw balanced target rows and a correlate column from the
/// row's weights; test draws balanced rows among rows with test cells and a
/// column uniformly from that row's test cells. The four remaining factors are
/// uniform over their selected classes. Val uses its own stream.
pub fn materialize_split(
    pattern: &CellPattern,
    sample: &DatasetSample,
    pairing: Pairing,
    counts: SplitCounts,
    seed: u64,
) -> Result<SplitPlan> {
    let test_rows = pattern.test_rows();
    if test_rows.is_empty() {
        return Err(Error::StudyDefinition("cell pattern has an empty test mask".into()));
    }
    for (r, row) in pattern.weights.iter().enumerate() {
        if !(row.iter().sum::<f64>() > 0.0) {
            return Err(Error::StudyDefinition(format!("row {r} has no training weight")));
        }
    }

    let train_like = |n: usize, rng: &mut Rng| -> Vec<PlannedRecord> {
        balanced_labels(n, &[0, 1, 2], rng)
            .into_iter()
            .map(|r| {
                let c = weighted_index(&pattern.weights[r], rng);
                record(sample, pairing, (r, c), rng)
            })
            .collect()
    };
    let train = train_like(counts.train, &mut substream(seed, tags::TRAIN));
    let val = train_like(counts.val, &mut substream(seed, tags::VAL));

    let mut rng = substream(seed, tags::TEST);
    let test = balanced_labels(counts.test, &test_rows, &mut rng)
        .into_iter()
        .map(|r| {
            let cols: Vec<usize> = (0..3).filter(|&c| pattern.test[r][c]).collect();
            let c = cols[rng.random_range(0..cols.len())];
            record(sample, pairing, (r, c), &mut rng)
        })
        .collect();
    Ok(SplitPlan { train, val, test })
}

/// Everything needed to emit one dataset: study, pairing, sample, pattern and plan.
#[derive(Debug, Clone)]
pub struct StudyDataset {
    pub kind: StudyKind,
    pub pairing: Pairing,
    pub sample: DatasetSample,
    pub bijection: [usize; 3],
    pub pattern: CellPattern,
    pub seed: u64,
    pub counts: SplitCounts,
    pub plan: SplitPlan,
}

pub fn build_dataset(
    kind: StudyKind,
    pairing: Pairing,
    sample: &DatasetSample,
    counts: SplitCounts,
) -> Result<StudyDataset> {
    let bijection = sample.bijection(pairing);
    let pattern = cell_pattern(kind, bijection, &mut sample.pattern_rng(pairing));
    let seed = sample.dataset_seed(kind, pairing);
    let plan = materialize_split(&pattern, sample, pairing, counts, seed)?;
    Ok(StudyDataset {
        kind,
        pairing,
        sample: sample.clone(),
        bijection,
        pattern,
        seed,
        counts,
        plan,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn sample() -> DatasetSample {
        select_dataset_samples(&FactorClassTable::default_table(), 7, 1)
            .unwrap()
            .remove(0)
    }

    fn shape_hue() -> Pairing {
        Pairing::new(FactorId::Shape, FactorId::Hue).unwrap()
    }

    #[test]
    fn study_names_round_trip() {
        for k in StudyKind::all() {
            assert_eq!(k.to_string().parse::<StudyKind>().unwrap(), k);
        }
        assert!("CGO-4".parse::<StudyKind>().is_err());
        assert!("FGO-7".parse::<StudyKind>().is_err());
        assert!("FGO".parse::<StudyKind>().is_err());
    }

    #[test]
    fn thirty_ordered_pairings() {
        let p = enumerate_pairings();
        assert_eq!(p.len(), 30);
        assert!(p.iter().all(|x| x.target != x.correlate));
        assert!(p.contains(&shape_hue()));
        assert!(p.contains(&Pairing::new(FactorId::Hue, FactorId::Shape).unwrap()));
        assert!(Pairing::new(FactorId::Hue, FactorId::Hue).is_err());
        assert_eq!("shape:hue".parse::<Pairing>().unwrap(), shape_hue());
    }

    #[test]
    fn samples_have_729_combinations_and_are_deterministic() {
        let t = FactorClassTable::default_table();
        let a = select_dataset_samples(&t, 3, 5).unwrap();
        assert_eq!(a.len(), 5);
        for s in &a {
            assert_eq!(s.reachable_combinations(), 729);
        }
        assert_eq!(a, select_dataset_samples(&t, 3, 5).unwrap());
        assert_ne!(a, select_dataset_samples(&t, 4, 5).unwrap());
    }

    #[test]
    fn too_few_classes_is_a_config_error() {
        let text = FactorClassTable::default_table().to_toml();
        let mut t: toml::Value = toml::from_str(&text).unwrap();
        let hue = &mut t["factor"].as_array_mut().unwrap()[1];
        hue["class"].as_array_mut().unwrap().truncate(2);
        let table = FactorClassTable::from_toml(&toml::to_string(&t).unwrap()).unwrap();
        assert!(matches!(select_dataset_samples(&table, 1, 5), Err(Error::Config(_))));
    }

    #[test]
    fn zgo_pattern() {
        let p = cell_pattern(StudyKind::Zgo, [2, 0, 1], &mut stream(1));
        assert_eq!(p.train_cells(), vec![(0, 2), (1, 0), (2, 1)]);
        assert_eq!(p.test_cells().len(), 6);
    }

    #[test]
    fn chgo_has_five_train_cells() {
        for seed in 0..20 {
            let p = cell_pattern(StudyKind::Chgo, [1, 2, 0], &mut stream(seed));
            assert_eq!(p.train_cells().len(), 5);
            assert_eq!(p.test_rows().len(), 1);
            assert_eq!(p.test_cells().len(), 2);
        }
    }

    #[test]
    fn fgo_20_rows() {
        let p = cell_pattern(StudyKind::Fgo(20), [0, 1, 2], &mut stream(1));
        for r in 0..3 {
            let mut row = p.weights[r].to_vec();
            row.sort_by(|a, b| a.partial_cmp(b).unwrap());
            assert!((row[0] - 0.1).abs() < 1e-12 && (row[1] - 0.1).abs() < 1e-12 && (row[2] - 0.8).abs() < 1e-12);
        }
    }

    #[test]
    fn zgo_train_of_900_has_300_per_cell() {
        let s = sample();
        let d = build_dataset(
            StudyKind::Zgo,
            shape_hue(),
            &s,
            SplitCounts {
                train: 900,
                val: 9,
                test: 9,
            },
        )
        .unwrap();
        let mut cells: BTreeMap<Cell, usize> = BTreeMap::new();
        for r in &d.plan.train {
            *cells.entry(r.cell).or_default() += 1;
        }
        assert_eq!(cells.len(), 3);
        assert!(cells.values().all(|&n| n == 300));
    }

    #[test]
    fn records_use_selected_classes() {
        let s = sample();
        let pairing = shape_hue();
        let d = build_dataset(StudyKind::Fgo(10), pairing, &s, SplitCounts::scaled(100)).unwrap();
        for split in Split::ALL {
            for r in d.plan.split(split) {
                assert_eq!(r.combination.get(FactorId::Shape), s.classes(FactorId::Shape)[r.cell.0]);
                assert_eq!(r.combination.get(FactorId::Hue), s.classes(FactorId::Hue)[r.cell.1]);
                for f in FactorId::ALL {
                    assert!(s.classes(f).contains(&r.combination.get(f)));
                }
            }
        }
        assert!(d.plan.test.iter().all(|r| d.pattern.is_test(r.cell)));
    }

    #[test]
    fn empty_test_mask_is_rejected() {
        let mut p = cell_pattern(StudyKind::Zgo, [0, 1, 2], &mut stream(0));
        p.test = [[false; 3]; 3];
        assert!(matches!(
            materialize_split(&p, &sample(), shape_hue(), SplitCounts::scaled(100), 1),
            Err(Error::StudyDefinition(_))
        ));
    }

    #[test]
    fn scaled_counts() {
        assert_eq!(
            SplitCounts::scaled(10),
            SplitCounts {
                train: 4374,
                val: 875,
                test: 1000
            }
        );
        assert_eq!(SplitCounts::scaled(1), SplitCounts::default());
    }

    #[test]
    fn balanced_labels_within_one() {
        let mut rng = stream(4);
        for n in [0, 1, 2, 3, 7, 100, 101] {
            let labels = balanced_labels(n, &[0, 1, 2], &mut rng);
            let counts: Vec<usize> = (0..3).map(|c| labels.iter().filter(|&&l| l == c).count()).collect();
            assert_eq!(counts.iter().sum::<usize>(), n);
            assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
        }
    }
}
