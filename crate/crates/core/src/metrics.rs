//! Scores: per-dataset mean per-class accuracy, aggregation over dataset
//! samples, factor-aggregated average/minimum, and relative shortcut drop.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dataset_io::{DatasetManifest, PredictionFile};
use crate::error::{Error, Result};
use crate::factor_model::FactorId;
use crate::study::{Pairing, Split, StudyKind, CLASSES_PER_FACTOR};

/// Macro average over `classes` of per-class accuracy.
///
/// `pairs` are `(target, predicted)`. Every class in `classes` must occur as a
/// target at least once.
pub fn mean_per_class_accuracy(pairs: impl IntoIterator<Item = (u8, u8)>, classes: &[u8]) -> Result<f64> {
    let mut hits = [0usize; 256];
    let mut totals = [0usize; 256];
    for (t, p) in pairs {
        totals[t as usize] += 1;
        hits[t as usize] += usize::from(t == p);
    }
    let mut sum = 0.0;
    for &c in classes {
        if totals[c as usize] == 0 {
            return Err(Error::UndefinedClass(c));
        }
        sum += hits[c as usize] as f64 / totals[c as usize] as f64;
    }
    Ok(sum / classes.len() as f64)
}

/// Mean per-class accuracy on the test split of a manifest. The classes
/// averaged over are the target rows that have test cells.
pub fn test_accuracy(manifest: &DatasetManifest, predictions: &PredictionFile) -> Result<f64> {
    predictions.validate(manifest)?;
    let predicted = predictions.as_map();
    let classes: Vec<u8> = manifest
        .header
        .pattern
        .test_rows()
        .into_iter()
        .map(|r| r as u8)
        .collect();
    mean_per_class_accuracy(
        manifest
            .split(Split::Test)
            .map(|r| (r.target, predicted[r.id.as_str()])),
        &classes,
    )
}

/// Mean and standard error (`sd / sqrt(n)`, sample standard deviation) of a set of values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

pub fn aggregate(values: &[f64]) -> Aggregate {
    let n = values.len();
    if n == 0 {
        return Aggregate {
            mean: f64::NAN,
            se: f64::NAN,
            n,
        };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let se = if n < 2 {
        0.0
    } else {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        var.sqrt() / (n as f64).sqrt()
    };
    Aggregate { mean, se, n }
}

/// `E_s[mean_j acc[s][j]]`. Each inner slice holds one sample's accuracies over correlates.
pub fn faavg(per_sample: &[Vec<f64>]) -> Aggregate {
    let means: Vec<f64> = per_sample
        .iter()
        .map(|a| a.iter().sum::<f64>() / a.len() as f64)
        .collect();
    aggregate(&means)
}

/// `E_s[min_j acc[s][j]]`.
pub fn famin(per_sample: &[Vec<f64>]) -> Aggregate {
    let mins: Vec<f64> = per_sample
        .iter()
        .map(|a| a.iter().copied().fold(f64::INFINITY, f64::min))
        .collect();
    aggregate(&mins)
}

/// Relative shortcut drop `(a - mean(c)) / a`; `None` when `a <= 0` or `c` is empty.
pub fn shortcut_drop(a: f64, c: &[f64]) -> Option<f64> {
    if !(a > 0.0) || c.is_empty() {
        return None;
    }
    let mean = c.iter().sum::<f64>() / c.len() as f64;
    Some((a - mean) / a)
}

/// `(mean, max)` of the defined drops of one target factor.
pub fn scv(drops: &[Option<f64>]) -> Option<(f64, f64)> {
    let d: Vec<f64> = drops.iter().flatten().copied().collect();
    if d.is_empty() {
        return None;
    }
    let mean = d.iter().sum::<f64>() / d.len() as f64;
    Some((mean, d.iter().copied().fold(f64::NEG_INFINITY, f64::max)))
}

/// Accuracy of one dataset (one pairing on one dataset sample).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunAccuracy {
    pub pairing: Pairing,
    pub sample: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairingSummary {
    pub target: FactorId,
    pub correlate: FactorId,
    /// `P_{i,j}`.
    pub p: Aggregate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DropEntry {
    pub target: FactorId,
    pub correlate: FactorId,
    /// `d_{i,j}`; `None` when the ZSO accuracy is 0.
    pub drop: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorSummary {
    pub factor: FactorId,
    /// `P_i`, only for ZSO.
    pub p: Option<Aggregate>,
    pub faavg: Aggregate,
    pub famin: Aggregate,
    /// ZSO accuracy `a_i` the drops were computed against.
    pub zso_accuracy: Option<f64>,
    pub scv_mean: Option<f64>,
    pub scv_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub study: StudyKind,
    pub runs: Vec<RunAccuracy>,
    pub pairings: Vec<PairingSummary>,
    pub factors: Vec<FactorSummary>,
    pub drops: Vec<DropEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl MetricsReport {
    /// Build a report from per-dataset accuracies. With `zso`, shortcut drops
    /// against that report's `P_i` are included.
    pub fn build(study: StudyKind, mut runs: Vec<RunAccuracy>, zso: Option<&MetricsReport>) -> Result<Self> {
        runs.sort_by_key(|r| (r.pairing, r.sample));
        let mut seen = BTreeSet::new();
        for r in &runs {
            if !seen.insert((r.pairing, r.sample)) {
                return Err(Error::Consistency(format!(
                    "two results for pairing {} sample {}",
                    r.pairing, r.sample
                )));
            }
            if !(0.0..=1.0).contains(&r.accuracy) {
                return Err(Error::Consistency(format!("accuracy {} is outside [0, 1]", r.accuracy)));
            }
        }
        if let Some(z) = zso {
            if z.study != StudyKind::Zso {
                return Err(Error::Config(format!(
                    "shortcut drop needs a ZSO report, got {}",
                    z.study
                )));
            }
        }

        let mut by_pairing: BTreeMap<Pairing, Vec<f64>> = BTreeMap::new();
        // target -> sample -> accuracies over correlates
        let mut by_target: BTreeMap<FactorId, BTreeMap<usize, Vec<f64>>> = BTreeMap::new();
        for r in &runs {
            by_pairing.entry(r.pairing).or_default().push(r.accuracy);
            by_target
                .entry(r.pairing.target)
                .or_default()
                .entry(r.sample)
                .or_default()
                .push(r.accuracy);
        }

        let pairings: Vec<PairingSummary> = by_pairing
            .iter()
            .map(|(p, accs)| PairingSummary {
                target: p.target,
                correlate: p.correlate,
                p: aggregate(accs),
            })
            .collect();

        let mut drops = Vec::new();
        let mut notes = Vec::new();
        let mut factors = Vec::new();
        for (&factor, samples) in &by_target {
            let per_sample: Vec<Vec<f64>> = samples.values().cloned().collect();
            let p = if study == StudyKind::Zso {
                let accs: Vec<f64> = per_sample.iter().flatten().copied().collect();
                Some(aggregate(&accs))
            } else {
                None
            };
            let zso_accuracy = zso.and_then(|z| z.zso_accuracy(factor));
            let mut row = Vec::new();
            if let Some(a) = zso_accuracy {
                for (pairing, accs) in by_pairing.iter().filter(|(p, _)| p.target == factor) {
                    let d = shortcut_drop(a, accs);
                    if d.is_none() {
                        notes.push(format!(
                            "shortcut drop of {pairing} undefined: ZSO accuracy of {factor} is {a}"
                        ));
                    }
                    row.push(d);
                    drops.push(DropEntry {
                        target: factor,
                        correlate: pairing.correlate,
                        drop: d,
                    });
                }
            } else if zso.is_some() {
                notes.push(format!("ZSO report has no accuracy for {factor}"));
            }
            let scv = scv(&row);
            factors.push(FactorSummary {
                factor,
                p,
                faavg: faavg(&per_sample),
                famin: famin(&per_sample),
                zso_accuracy,
                scv_mean: scv.map(|s| s.0),
                scv_max: scv.map(|s| s.1),
            });
        }

        Ok(MetricsReport {
            study,
            runs,
            pairings,
            factors,
            drops,
            notes,
        })
    }

    /// `P_i` of a ZSO report.
    pub fn zso_accuracy(&self, factor: FactorId) -> Option<f64> {
        self.factors.iter().find(|f| f.factor == factor)?.p.map(|p| p.mean)
    }

    pub fn factor(&self, factor: FactorId) -> Option<&FactorSummary> {
        self.factors.iter().find(|f| f.factor == factor)
    }

    pub fn pairing(&self, pairing: Pairing) -> Option<&PairingSummary> {
        self.pairings
            .iter()
            .find(|p| p.target == pairing.target && p.correlate == pairing.correlate)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Plain-text tables: rows are target factors, columns correlates.
    pub fn to_text(&self) -> String {
        let cell = |v: Option<f64>| v.map_or_else(|| format!("{:>10}", "-"), |v| format!("{v:>10.3}"));
        let mut out = String::new();
        let _ = writeln!(out, "study {}", self.study);
        let header = |out: &mut String, extra: &[&str]| {
            let _ = write!(out, "{:<10}", "target");
            for f in FactorId::ALL {
                let _ = write!(out, "{:>10}", f.name());
            }
            for e in extra {
                let _ = write!(out, "{e:>10}");
            }
            out.push('\n');
        };

        if self.study == StudyKind::Zso {
            let _ = writeln!(out, "\nP_i (mean +- se over samples)");
            for f in &self.factors {
                if let Some(p) = f.p {
                    let _ = writeln!(
                        out,
                        "{:<10}{:>9.3} +- {:.3}  (n={})",
                        f.factor.name(),
                        p.mean,
                        p.se,
                        p.n
                    );
                }
            }
        } else {
            let _ = writeln!(out, "\nP_ij (rows: target, columns: correlate)");
            header(&mut out, &["FAAvg", "FAMin"]);
            for target in FactorId::ALL {
                let summary = self.factor(target);
                if summary.is_none() {
                    continue;
                }
                let _ = write!(out, "{:<10}", target.name());
                for correlate in FactorId::ALL {
                    let p = (target != correlate)
                        .then(|| self.pairing(Pairing { target, correlate }).map(|p| p.p.mean))
                        .flatten();
                    out.push_str(&cell(p));
                }
                let s = summary.unwrap();
                out.push_str(&cell(Some(s.faavg.mean)));
                out.push_str(&cell(Some(s.famin.mean)));
                out.push('\n');
            }
        }

        if !self.drops.is_empty() {
            let _ = writeln!(out, "\nshortcut drop d_ij");
            header(&mut out, &["SCVmean", "SCVmax"]);
            for s in &self.factors {
                if s.zso_accuracy.is_none() {
                    continue;
                }
                let _ = write!(out, "{:<10}", s.factor.name());
                for correlate in FactorId::ALL {
                    let d = self
                        .drops
                        .iter()
                        .find(|d| d.target == s.factor && d.correlate == correlate)
                        .and_then(|d| d.drop);
                    out.push_str(&cell(d));
                }
                out.push_str(&cell(s.scv_mean));
                out.push_str(&cell(s.scv_max));
                out.push('\n');
            }
        }
        for n in &self.notes {
            let _ = writeln!(out, "note: {n}");
        }
        out
    }
}

/// Score one manifest and its predictions.
pub fn evaluate_run(manifest: &DatasetManifest, predictions: &PredictionFile) -> Result<RunAccuracy> {
    Ok(RunAccuracy {
        pairing: manifest.header.pairing,
        sample: manifest.header.sample,
        accuracy: test_accuracy(manifest, predictions)?,
    })
}

pub const ALL_CLASSES: [u8; CLASSES_PER_FACTOR] = [0, 1, 2];

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Counts correct predictions class by class with nested loops.
    fn macro_oracle(pairs: &[(u8, u8)]) -> f64 {
        let mut sum = 0.0;
        let mut k = 0;
        for c in 0..3u8 {
            let n = pairs.iter().filter(|p| p.0 == c).count();
            if n == 0 {
                continue;
            }
            let ok = pairs.iter().filter(|p| p.0 == c && p.1 == c).count();
            sum += ok as f64 / n as f64;
            k += 1;
        }
        sum / k as f64
    }

    #[test]
    fn macro_not_micro() {
        // Class 0: 4/4, class 1: 1/2, class 2: 0/3 -> micro 5/9, macro 0.5.
        let pairs = [(0, 0), (0, 0), (0, 0), (0, 0), (1, 1), (1, 2), (2, 0), (2, 1), (2, 0)];
        assert_eq!(mean_per_class_accuracy(pairs, &ALL_CLASSES).unwrap(), 0.5);
        assert_eq!(macro_oracle(&pairs), 0.5);
    }

    #[test]
    fn all_correct_and_missing_class() {
        let pairs = [(0, 0), (1, 1), (2, 2)];
        assert_eq!(mean_per_class_accuracy(pairs, &ALL_CLASSES).unwrap(), 1.0);
        assert!(matches!(
            mean_per_class_accuracy([(0, 0), (1, 1)], &ALL_CLASSES),
            Err(Error::UndefinedClass(2))
        ));
    }

    #[test]
    fn aggregate_examples() {
        let a = aggregate(&[0.2; 5]);
        assert!((a.mean - 0.2).abs() < 1e-15);
        assert_eq!(a.se, 0.0);
        assert_eq!(aggregate(&[0.0, 1.0, 0.0, 1.0, 1.0]).mean, 0.6);
        // sd of (0,1,0,1,1) is sqrt(0.3); se = sqrt(0.3 / 5).
        assert!((aggregate(&[0.0, 1.0, 0.0, 1.0, 1.0]).se - (0.3f64 / 5.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn faavg_famin_examples() {
        let accs = vec![vec![1.0, 0.8, 0.6, 0.4, 0.2]];
        assert!((faavg(&accs).mean - 0.6).abs() < 1e-15);
        assert_eq!(famin(&accs).mean, 0.2);
        let flat = vec![vec![0.7; 5], vec![0.7; 5]];
        assert_eq!(faavg(&flat).mean, famin(&flat).mean);
    }

    #[test]
    fn shortcut_drop_examples() {
        assert_eq!(shortcut_drop(1.0, &[0.0]), Some(1.0));
        assert_eq!(shortcut_drop(0.62, &[0.62]), Some(0.0));
        assert_eq!(shortcut_drop(0.8, &[0.5, 0.3]), Some(0.5));
        assert_eq!(shortcut_drop(0.0, &[0.5]), None);
        assert_eq!(scv(&[Some(0.5), None, Some(0.1)]), Some((0.3, 0.5)));
    }

    fn pairing(t: FactorId, c: FactorId) -> Pairing {
        Pairing::new(t, c).unwrap()
    }

    #[test]
    fn zso_report_has_equal_p_faavg_famin() {
        let runs = [0.9, 0.7, 0.8, 0.95, 0.85]
            .iter()
            .enumerate()
            .map(|(s, &a)| RunAccuracy {
                pairing: Pairing::for_zso(FactorId::Hue),
                sample: s + 1,
                accuracy: a,
            })
            .collect();
        let r = MetricsReport::build(StudyKind::Zso, runs, None).unwrap();
        let f = r.factor(FactorId::Hue).unwrap();
        assert_eq!(f.p.unwrap().mean, f.faavg.mean);
        assert_eq!(f.faavg.mean, f.famin.mean);
    }

    #[test]
    fn report_text_and_json_round_trip() {
        let runs = vec![
            RunAccuracy {
                pairing: pairing(FactorId::Shape, FactorId::Hue),
                sample: 1,
                accuracy: 0.25,
            },
            RunAccuracy {
                pairing: pairing(FactorId::Shape, FactorId::Scale),
                sample: 1,
                accuracy: 0.75,
            },
        ];
        let zso = MetricsReport::build(
            StudyKind::Zso,
            vec![RunAccuracy {
                pairing: Pairing::for_zso(FactorId::Shape),
                sample: 1,
                accuracy: 1.0,
            }],
            None,
        )
        .unwrap();
        let r = MetricsReport::build(StudyKind::Zgo, runs, Some(&zso)).unwrap();
        let f = r.factor(FactorId::Shape).unwrap();
        assert_eq!((f.scv_mean, f.scv_max), (Some(0.5), Some(0.75)));
        let text = r.to_text();
        assert!(text.contains("shortcut drop"));
        assert!(text.contains("SCVmax"));
        assert_eq!(MetricsReport::from_json(&r.to_json().unwrap()).unwrap(), r);
    }

    #[test]
    fn duplicate_runs_are_rejected() {
        let run = RunAccuracy {
            pairing: pairing(FactorId::Shape, FactorId::Hue),
            sample: 1,
            accuracy: 0.5,
        };
        assert!(MetricsReport::build(StudyKind::Zgo, vec![run, run], None).is_err());
    }

    proptest! {
        #[test]
        fn macro_matches_oracle_and_ignores_order(
            mut pairs in prop::collection::vec((0u8..3, 0u8..3), 3..50),
            seed in any::<u64>(),
        ) {
            pairs.extend([(0, 1), (1, 1), (2, 0)]);
            let a = mean_per_class_accuracy(pairs.iter().copied(), &ALL_CLASSES).unwrap();
            prop_assert_eq!(a, macro_oracle(&pairs));
            let mut shuffled = pairs.clone();
            use rand::seq::SliceRandom;
            shuffled.shuffle(&mut crate::rng::stream(seed));
            prop_assert_eq!(mean_per_class_accuracy(shuffled, &ALL_CLASSES).unwrap(), a);
        }

        #[test]
        fn famin_never_exceeds_faavg(accs in prop::collection::vec(prop::collection::vec(0.0f64..=1.0, 1..6), 1..6)) {
            prop_assert!(famin(&accs).mean <= faavg(&accs).mean + 1e-12);
        }
    }
}
