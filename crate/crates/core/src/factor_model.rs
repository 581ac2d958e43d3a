//! The six factors of variation, their class regions and realization sampling.
//!
//! A [`FactorClassTable`] assigns every factor a list of named classes, each
//! backed by a [`Region`] of the factor's space. Sampling a
//! [`ClassCombination`] draws one [`FactorRealization`] uniformly from the
//! product of the selected regions; [`FactorClassTable::class_of`] inverts it.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Lower and upper bound of the scale factor space.
pub const SCALE_SPACE: (f64, f64) = (0.69, 1.45);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FactorId {
    Position,
    Hue,
    Lightness,
    Scale,
    Shape,
    Texture,
}

impl FactorId {
    pub const ALL: [FactorId; 6] = [
        FactorId::Position,
        FactorId::Hue,
        FactorId::Lightness,
        FactorId::Scale,
        FactorId::Shape,
        FactorId::Texture,
    ];

    /// Stable 1-based index used in manifests.
    pub fn index(self) -> usize {
        self.slot() + 1
    }

    /// 0-based position in [`FactorId::ALL`].
    pub fn slot(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<FactorId> {
        index.checked_sub(1).and_then(|i| Self::ALL.get(i).copied())
    }

    pub fn name(self) -> &'static str {
        match self {
            FactorId::Position => "position",
            FactorId::Hue => "hue",
            FactorId::Lightness => "lightness",
            FactorId::Scale => "scale",
            FactorId::Shape => "shape",
            FactorId::Texture => "texture",
        }
    }
}

impl fmt::Display for FactorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FactorId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|f| f.name() == lower)
            .or_else(|| lower.parse::<usize>().ok().and_then(FactorId::from_index))
            .ok_or_else(|| Error::Config(format!("unknown factor `{s}`")))
    }
}

/// A class region inside a factor space. All bounds are closed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    Interval {
        lo: f64,
        hi: f64,
    },
    /// Arc on the hue circle in degrees; wraps through 0 when `lo > hi`.
    ModularInterval {
        lo: f64,
        hi: f64,
    },
    /// Axis-aligned box in normalized image coordinates (y grows downwards).
    Rect {
        lo_x: f64,
        hi_x: f64,
        lo_y: f64,
        hi_y: f64,
    },
    PairIntervals {
        lo1: f64,
        hi1: f64,
        lo2: f64,
        hi2: f64,
    },
    /// Digit labels for `shape`, texture indices for `texture`.
    IndexSet {
        ids: BTreeSet<u32>,
    },
}

/// One component of a realization, in the form a [`Region`] can test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FactorValue {
    Scalar(f64),
    Angle(f64),
    Point(f64, f64),
    Pair(f64, f64),
    Asset(u32),
}

impl FactorValue {
    fn kind(&self) -> &'static str {
        match self {
            FactorValue::Scalar(_) => "scalar",
            FactorValue::Angle(_) => "angle",
            FactorValue::Point(..) => "point",
            FactorValue::Pair(..) => "pair",
            FactorValue::Asset(_) => "asset",
        }
    }
}

impl fmt::Display for FactorValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FactorValue::Scalar(v) => write!(f, "{v}"),
            FactorValue::Angle(v) => write!(f, "{v}°"),
            FactorValue::Point(x, y) => write!(f, "({x}, {y})"),
            FactorValue::Pair(a, b) => write!(f, "({a}, {b})"),
            FactorValue::Asset(i) => write!(f, "#{i}"),
        }
    }
}

/// Reduce an angle to `[0, 360)`.
pub fn wrap_degrees(angle: f64) -> f64 {
    let r = angle.rem_euclid(360.0);
    if r >= 360.0 {
        0.0
    } else {
        r
    }
}

fn in_closed(v: f64, lo: f64, hi: f64) -> bool {
    lo <= v && v <= hi
}

fn closed_overlap(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0.max(b.0) <= a.1.min(b.1)
}

impl Region {
    fn kind(&self) -> &'static str {
        match self {
            Region::Interval { .. } => "interval",
            Region::ModularInterval { .. } => "modular_interval",
            Region::Rect { .. } => "rect",
            Region::PairIntervals { .. } => "pair_intervals",
            Region::IndexSet { .. } => "index_set",
        }
    }

    /// Membership test. Errors when the value type does not match the region.
    pub fn contains(&self, value: FactorValue) -> Result<bool> {
        Ok(match (self, value) {
            (Region::Interval { lo, hi }, FactorValue::Scalar(v)) => in_closed(v, *lo, *hi),
            (Region::ModularInterval { lo, hi }, FactorValue::Angle(a)) => {
                let (lo, hi, a) = (wrap_degrees(*lo), wrap_degrees(*hi), wrap_degrees(a));
                if lo <= hi {
                    in_closed(a, lo, hi)
                } else {
                    a >= lo || a <= hi
                }
            }
            (Region::Rect { lo_x, hi_x, lo_y, hi_y }, FactorValue::Point(x, y)) => {
                in_closed(x, *lo_x, *hi_x) && in_closed(y, *lo_y, *hi_y)
            }
            (Region::PairIntervals { lo1, hi1, lo2, hi2 }, FactorValue::Pair(a, b)) => {
                in_closed(a, *lo1, *hi1) && in_closed(b, *lo2, *hi2)
            }
            (Region::IndexSet { ids }, FactorValue::Asset(i)) => ids.contains(&i),
            (region, value) => {
                return Err(Error::TypeMismatch {
                    region: region.kind(),
                    value: value.kind(),
                })
            }
        })
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        match self {
            Region::Interval { lo, hi } if !(lo <= hi) => bad(format!("interval [{lo}, {hi}] is empty")),
            Region::ModularInterval { lo, hi } if !(lo.is_finite() && hi.is_finite()) => {
                bad(format!("modular interval [{lo}, {hi}] is not finite"))
            }
            Region::Rect { lo_x, hi_x, lo_y, hi_y } => {
                let edges = [*lo_x, *hi_x, *lo_y, *hi_y];
                if edges.iter().any(|e| !(0.0..=1.0).contains(e)) || lo_x > hi_x || lo_y > hi_y {
                    bad(format!("rect [{lo_x}, {hi_x}]x[{lo_y}, {hi_y}] is invalid"))
                } else {
                    Ok(())
                }
            }
            Region::PairIntervals { lo1, hi1, lo2, hi2 } if !(lo1 <= hi1 && lo2 <= hi2) => {
                bad(format!("pair region [{lo1}, {hi1}]x[{lo2}, {hi2}] is empty"))
            }
            Region::IndexSet { ids } if ids.is_empty() => bad("index set is empty".into()),
            _ => Ok(()),
        }
    }

    /// Arcs of a modular interval as non-wrapping closed ranges within [0, 360].
    fn arcs(lo: f64, hi: f64) -> Vec<(f64, f64)> {
        let (lo, hi) = (wrap_degrees(lo), wrap_degrees(hi));
        if lo <= hi {
            vec![(lo, hi)]
        } else {
            vec![(lo, 360.0), (0.0, hi)]
        }
    }

    /// Whether two regions of the same kind share at least one point.
    pub fn overlaps(&self, other: &Region) -> Result<bool> {
        Ok(match (self, other) {
            (Region::Interval { lo, hi }, Region::Interval { lo: l2, hi: h2 }) => {
                closed_overlap((*lo, *hi), (*l2, *h2))
            }
            (Region::ModularInterval { lo, hi }, Region::ModularInterval { lo: l2, hi: h2 }) => {
                let a = Self::arcs(*lo, *hi);
                let b = Self::arcs(*l2, *h2);
                // 360 and 0 are the same angle.
                let touches_seam = |arcs: &[(f64, f64)], end: f64| arcs.iter().any(|r| in_closed(end, r.0, r.1));
                a.iter().any(|x| b.iter().any(|y| closed_overlap(*x, *y)))
                    || (touches_seam(&a, 360.0) && touches_seam(&b, 0.0))
                    || (touches_seam(&a, 0.0) && touches_seam(&b, 360.0))
            }
            (
                Region::Rect { lo_x, hi_x, lo_y, hi_y },
                Region::Rect {
                    lo_x: a,
                    hi_x: b,
                    lo_y: c,
                    hi_y: d,
                },
            ) => closed_overlap((*lo_x, *hi_x), (*a, *b)) && closed_overlap((*lo_y, *hi_y), (*c, *d)),
            (
                Region::PairIntervals { lo1, hi1, lo2, hi2 },
                Region::PairIntervals {
                    lo1: a,
                    hi1: b,
                    lo2: c,
                    hi2: d,
                },
            ) => closed_overlap((*lo1, *hi1), (*a, *b)) && closed_overlap((*lo2, *hi2), (*c, *d)),
            (Region::IndexSet { ids }, Region::IndexSet { ids: other }) => !ids.is_disjoint(other),
            (a, _) => {
                return Err(Error::TypeMismatch {
                    region: a.kind(),
                    value: "region of another kind",
                })
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorClass {
    pub label: String,
    pub region: Region,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorClasses {
    pub factor: FactorId,
    #[serde(rename = "class")]
    pub classes: Vec<FactorClass>,
}

/// All factors with their classes, in [`FactorId::ALL`] order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TableFile", into = "TableFile")]
pub struct FactorClassTable {
    factors: Vec<FactorClasses>,
}

/// On-disk layout of a table (`[[factor]]` blocks, each with `[[factor.class]]`).
#[derive(Serialize, Deserialize)]
struct TableFile {
    factor: Vec<FactorClasses>,
}

impl TryFrom<TableFile> for FactorClassTable {
    type Error = Error;

    fn try_from(file: TableFile) -> Result<Self> {
        FactorClassTable::new(file.factor)
    }
}

impl From<FactorClassTable> for TableFile {
    fn from(table: FactorClassTable) -> Self {
        TableFile { factor: table.factors }
    }
}

/// One class index (0-based) per factor, in [`FactorId::ALL`] order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassCombination(pub [usize; 6]);

impl ClassCombination {
    pub fn get(&self, factor: FactorId) -> usize {
        self.0[factor.slot()]
    }

    pub fn set(&mut self, factor: FactorId, class: usize) {
        self.0[factor.slot()] = class;
    }
}

/// A concrete MNIST instance: digit label plus index within that digit's list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShapeRef {
    pub digit: u8,
    pub instance: usize,
}

/// A texture image plus a crop origin, normalized to `[0, 1)` of the free range
/// so the same realization works for any crop size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TextureRef {
    pub index: usize,
    pub origin: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorRealization {
    pub position: (f64, f64),
    pub hue: f64,
    pub lightness: (f64, f64),
    pub scale: f64,
    pub shape: ShapeRef,
    pub texture: TextureRef,
}

impl FactorRealization {
    pub fn value(&self, factor: FactorId) -> FactorValue {
        match factor {
            FactorId::Position => FactorValue::Point(self.position.0, self.position.1),
            FactorId::Hue => FactorValue::Angle(self.hue),
            FactorId::Lightness => FactorValue::Pair(self.lightness.0, self.lightness.1),
            FactorId::Scale => FactorValue::Scalar(self.scale),
            FactorId::Shape => FactorValue::Asset(u32::from(self.shape.digit)),
            FactorId::Texture => FactorValue::Asset(self.texture.index as u32),
        }
    }
}

/// Sizes of the loaded asset banks, needed to sample shape and texture indices.
pub trait AssetCatalog {
    fn shape_instances(&self, digit: u8) -> usize;
    fn texture_count(&self) -> usize;
}

impl FactorClassTable {
    /// Build and validate a table. `factors` must list every factor exactly once.
    pub fn new(mut factors: Vec<FactorClasses>) -> Result<Self> {
        factors.sort_by_key(|f| f.factor);
        let listed: Vec<FactorId> = factors.iter().map(|f| f.factor).collect();
        if listed != FactorId::ALL {
            return Err(Error::Config(format!(
                "table must list each of the six factors exactly once, got {listed:?}"
            )));
        }
        let table = FactorClassTable { factors };
        table.validate()?;
        Ok(table)
    }

    fn validate(&self) -> Result<()> {
        for fc in &self.factors {
            if fc.classes.is_empty() {
                return Err(Error::Config(format!("{} has no classes", fc.factor)));
            }
            for (j, class) in fc.classes.iter().enumerate() {
                class
                    .region
                    .validate()
                    .map_err(|e| Error::Config(format!("{} class `{}`: {e}", fc.factor, class.label)))?;
                let expected = match fc.factor {
                    FactorId::Position => "rect",
                    FactorId::Hue => "modular_interval",
                    FactorId::Lightness => "pair_intervals",
                    FactorId::Scale => "interval",
                    FactorId::Shape | FactorId::Texture => "index_set",
                };
                if class.region.kind() != expected {
                    return Err(Error::Config(format!(
                        "{} class `{}` must be a {expected} region",
                        fc.factor, class.label
                    )));
                }
                for other in &fc.classes[..j] {
                    if class.region.overlaps(&other.region)? {
                        return Err(Error::Config(format!(
                            "{} classes `{}` and `{}` overlap",
                            fc.factor, other.label, class.label
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Regions from the reference factor table.
    pub fn default_table() -> Self {
        fn class(label: &str, region: Region) -> FactorClass {
            FactorClass {
                label: label.to_string(),
                region,
            }
        }
        let bands = [(0.1, 0.3), (0.4, 0.6), (0.7, 0.9)];
        let rows = ["top", "middle", "bottom"];
        let cols = ["left", "center", "right"];
        let mut position = Vec::new();
        for (r, &(lo_y, hi_y)) in bands.iter().enumerate() {
            for (c, &(lo_x, hi_x)) in bands.iter().enumerate() {
                position.push(class(
                    &format!("{}-{}", rows[r], cols[c]),
                    Region::Rect { lo_x, hi_x, lo_y, hi_y },
                ));
            }
        }

        let hue = [
            ("red", 345.0, 15.0),
            ("yellow", 45.0, 75.0),
            ("green", 105.0, 135.0),
            ("cyan", 175.0, 205.0),
            ("blue", 225.0, 255.0),
            ("magenta", 285.0, 315.0),
        ]
        .map(|(l, lo, hi)| class(l, Region::ModularInterval { lo, hi }))
        .to_vec();

        let lightness = [
            ("dark", 0.0, 0.1, 0.4, 0.5),
            ("dim", 0.15, 0.25, 0.55, 0.65),
            ("bright", 0.3, 0.4, 0.7, 0.8),
            ("brighter", 0.45, 0.55, 0.85, 0.95),
        ]
        .map(|(l, lo1, hi1, lo2, hi2)| class(l, Region::PairIntervals { lo1, hi1, lo2, hi2 }))
        .to_vec();

        let scale = [
            ("small", 0.69, 0.74),
            ("smaller-medium", 0.83, 0.89),
            ("medium", 0.99, 1.06),
            ("larger-medium", 1.18, 1.26),
            ("large", 1.40, 1.45),
        ]
        .map(|(l, lo, hi)| class(l, Region::Interval { lo, hi }))
        .to_vec();

        let shape = (0..10u32)
            .map(|d| {
                class(
                    &format!("'{d}'"),
                    Region::IndexSet {
                        ids: BTreeSet::from([d]),
                    },
                )
            })
            .collect();

        let texture = crate::assets::DEFAULT_TEXTURES
            .iter()
            .enumerate()
            .map(|(i, name)| {
                class(
                    name,
                    Region::IndexSet {
                        ids: BTreeSet::from([i as u32]),
                    },
                )
            })
            .collect();

        let factors = vec![
            FactorClasses {
                factor: FactorId::Position,
                classes: position,
            },
            FactorClasses {
                factor: FactorId::Hue,
                classes: hue,
            },
            FactorClasses {
                factor: FactorId::Lightness,
                classes: lightness,
            },
            FactorClasses {
                factor: FactorId::Scale,
                classes: scale,
            },
            FactorClasses {
                factor: FactorId::Shape,
                classes: shape,
            },
            FactorClasses {
                factor: FactorId::Texture,
                classes: texture,
            },
        ];
        FactorClassTable::new(factors).expect("default table is valid")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("table serializes")
    }

    pub fn classes(&self, factor: FactorId) -> &[FactorClass] {
        &self.factors[factor.slot()].classes
    }

    pub fn class_count(&self, factor: FactorId) -> usize {
        self.classes(factor).len()
    }

    pub fn region(&self, factor: FactorId, class: usize) -> &Region {
        &self.classes(factor)[class].region
    }

    pub fn label(&self, factor: FactorId, class: usize) -> &str {
        &self.classes(factor)[class].label
    }

    pub fn combination_count(&self) -> usize {
        FactorId::ALL.iter().map(|&f| self.class_count(f)).product()
    }

    pub fn check_combination(&self, combination: &ClassCombination) -> Result<()> {
        for f in FactorId::ALL {
            let n = self.class_count(f);
            if combination.get(f) >= n {
                return Err(Error::Config(format!(
                    "{f} class index {} out of range (0..{n})",
                    combination.get(f)
                )));
            }
        }
        Ok(())
    }

    /// Draw a realization uniformly from the regions selected by `combination`.
    pub fn sample_realization(
        &self,
        combination: &ClassCombination,
        assets: &impl AssetCatalog,
        rng: &mut Rng,
    ) -> Result<FactorRealization> {
        self.check_combination(combination)?;
        let region = |f: FactorId| self.region(f, combination.get(f));
        let mut uniform = |lo: f64, hi: f64| lo + (hi - lo) * rng.random::<f64>();

        let position = match region(FactorId::Position) {
            Region::Rect { lo_x, hi_x, lo_y, hi_y } => (uniform(*lo_x, *hi_x), uniform(*lo_y, *hi_y)),
            _ => unreachable!("validated"),
        };
        let hue = match region(FactorId::Hue) {
            Region::ModularInterval { lo, hi } => {
                let width = (hi - lo).rem_euclid(360.0);
                wrap_degrees(uniform(*lo, lo + width))
            }
            _ => unreachable!("validated"),
        };
        let lightness = match region(FactorId::Lightness) {
            Region::PairIntervals { lo1, hi1, lo2, hi2 } => (uniform(*lo1, *hi1), uniform(*lo2, *hi2)),
            _ => unreachable!("validated"),
        };
        let scale = match region(FactorId::Scale) {
            Region::Interval { lo, hi } => uniform(*lo, *hi),
            _ => unreachable!("validated"),
        };

        let shape = match region(FactorId::Shape) {
            Region::IndexSet { ids } => {
                let counts: Vec<(u8, usize)> = ids
                    .iter()
                    .map(|&d| (d as u8, assets.shape_instances(d as u8)))
                    .collect();
                let total: usize = counts.iter().map(|c| c.1).sum();
                if total == 0 {
                    return Err(Error::Config(format!("shape digits {ids:?} have no loaded instances")));
                }
                let mut k = rng.random_range(0..total);
                let mut pick = None;
                for (digit, n) in counts {
                    if k < n {
                        pick = Some(ShapeRef { digit, instance: k });
                        break;
                    }
                    k -= n;
                }
                pick.expect("k < total")
            }
            _ => unreachable!("validated"),
        };

        let texture = match region(FactorId::Texture) {
            Region::IndexSet { ids } => {
                let available = assets.texture_count() as u32;
                let valid: Vec<u32> = ids.iter().copied().filter(|&i| i < available).collect();
                if valid.is_empty() {
                    return Err(Error::Config(format!("texture indices {ids:?} are not loaded")));
                }
                let index = valid[rng.random_range(0..valid.len())] as usize;
                let origin = (rng.random::<f64>(), rng.random::<f64>());
                TextureRef { index, origin }
            }
            _ => unreachable!("validated"),
        };

        Ok(FactorRealization {
            position,
            hue,
            lightness,
            scale,
            shape,
            texture,
        })
    }

    /// Class of one factor value.
    pub fn class_of_value(&self, factor: FactorId, value: FactorValue) -> Result<usize> {
        let mut found = None;
        for (j, class) in self.classes(factor).iter().enumerate() {
            if class.region.contains(value)? {
                if found.is_some() {
                    return Err(Error::AmbiguousClass {
                        factor,
                        value: value.to_string(),
                    });
                }
                found = Some(j);
            }
        }
        found.ok_or_else(|| Error::OutOfClass {
            factor,
            value: value.to_string(),
        })
    }

    /// The unique combination whose regions contain every component.
    pub fn class_of(&self, realization: &FactorRealization) -> Result<ClassCombination> {
        let mut combination = ClassCombination([0; 6]);
        for f in FactorId::ALL {
            combination.set(f, self.class_of_value(f, realization.value(f))?);
        }
        Ok(combination)
    }
}
