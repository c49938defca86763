use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Condition, ErrorRecord, Outcome};
use crate::error::{Error, Result};
use crate::scene::Surface;

/// Bins with fewer ground-truth samples (or true positives) are flagged.
pub const LOW_CONFIDENCE_THRESHOLD: usize = 30;

/// Partition of (distance, tilt, surface). Intervals are half-open `[lo, hi)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Binning {
    pub distance_edges: Vec<f64>,
    pub tilt_edges: Vec<f64>,
    pub surfaces: Vec<Surface>,
    #[serde(default = "default_threshold")]
    pub low_confidence_threshold: usize,
}

fn default_threshold() -> usize {
    LOW_CONFIDENCE_THRESHOLD
}

impl Default for Binning {
    fn default() -> Self {
        Self {
            distance_edges: vec![0.0, 7.5, 15.0, 25.0, f64::INFINITY],
            tilt_edges: vec![0.0, 22.5, 45.0, 90.0],
            surfaces: vec![Surface::Dry, Surface::Wet],
            low_confidence_threshold: LOW_CONFIDENCE_THRESHOLD,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BinId {
    pub distance: usize,
    pub tilt: usize,
    pub surface: Surface,
}

fn edges_ok(edges: &[f64]) -> bool {
    edges.len() >= 2 && !edges.iter().any(|e| e.is_nan()) && edges.windows(2).all(|w| w[0] < w[1])
}

fn interval(edges: &[f64], x: f64) -> Option<usize> {
    if !(x >= edges[0] && x < edges[edges.len() - 1]) {
        return None;
    }
    Some(edges.partition_point(|e| *e <= x) - 1)
}

impl Binning {
    pub fn validate(&self) -> Result<()> {
        let bad = |message: &str| Err(Error::Invalid { what: "binning", message: message.to_string() });
        if !edges_ok(&self.distance_edges) || self.distance_edges[0] < 0.0 {
            return bad("distance_edges must be at least two strictly increasing non-negative values");
        }
        if !edges_ok(&self.tilt_edges) || self.tilt_edges[0] < 0.0 {
            return bad("tilt_edges must be at least two strictly increasing non-negative values");
        }
        let mut surfaces = self.surfaces.clone();
        surfaces.sort();
        surfaces.dedup();
        if surfaces.is_empty() || surfaces.len() != self.surfaces.len() {
            return bad("surfaces must be non-empty and distinct");
        }
        Ok(())
    }

    pub fn locate(&self, c: &Condition) -> Option<BinId> {
        if !self.surfaces.contains(&c.surface) {
            return None;
        }
        Some(BinId {
            distance: interval(&self.distance_edges, c.distance)?,
            tilt: interval(&self.tilt_edges, c.tilt)?,
            surface: c.surface,
        })
    }

    /// Every bin, distance-major, then tilt, then surface in listed order.
    pub fn bins(&self) -> Vec<BinId> {
        let mut out = Vec::new();
        for distance in 0..self.distance_edges.len() - 1 {
            for tilt in 0..self.tilt_edges.len() - 1 {
                for &surface in &self.surfaces {
                    out.push(BinId { distance, tilt, surface });
                }
            }
        }
        out
    }

    pub fn distance_range(&self, id: BinId) -> [f64; 2] {
        [self.distance_edges[id.distance], self.distance_edges[id.distance + 1]]
    }

    pub fn tilt_range(&self, id: BinId) -> [f64; 2] {
        [self.tilt_edges[id.tilt], self.tilt_edges[id.tilt + 1]]
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelMetadata {
    /// Decimal string, so the full u64 range survives the file format.
    pub seed: Option<String>,
    pub grid_hash: Option<String>,
    pub calibration_date: Option<String>,
}

/// Calibrated statistics of one bin. Fields that need at least one sample
/// are absent when the bin has none.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BinModel {
    pub distance_range: [f64; 2],
    pub tilt_range: [f64; 2],
    pub surface: Surface,
    /// Ground-truth objects seen in this bin (true positives + false negatives).
    pub sample_count: usize,
    pub true_positives: usize,
    pub false_negatives: usize,
    pub false_positives: usize,
    pub low_confidence: bool,
    pub detection_probability: Option<f64>,
    /// False positives per ground-truth object (per scan for single-object scans).
    pub false_positive_rate: Option<f64>,
    pub center_error_mean: Option<[f64; 3]>,
    pub center_error_std: Option<[f64; 3]>,
    pub extent_error_mean: Option<[f64; 2]>,
    pub extent_error_std: Option<[f64; 2]>,
}

impl BinModel {
    pub fn is_populated(&self) -> bool {
        self.sample_count > 0
    }

    pub fn label(&self) -> String {
        format!(
            "{}-{} m/{}-{} deg/{}",
            self.distance_range[0], self.distance_range[1], self.tilt_range[0], self.tilt_range[1], self.surface
        )
    }

    /// Normalised distance from a condition to this bin; zero inside it.
    pub(crate) fn gap(&self, c: &Condition) -> f64 {
        let outside = |x: f64, r: [f64; 2]| {
            if x < r[0] {
                r[0] - x
            } else if x >= r[1] {
                x - r[1]
            } else {
                0.0
            }
        };
        let surface = if c.surface == self.surface { 0.0 } else { 100.0 };
        outside(c.distance, self.distance_range) / 10.0 + outside(c.tilt, self.tilt_range) / 22.5 + surface
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorModel {
    pub metadata: ModelMetadata,
    pub binning: Binning,
    #[serde(rename = "bin")]
    pub bins: Vec<BinModel>,
}

impl ErrorModel {
    pub fn get(&self, id: BinId) -> &BinModel {
        let per_distance = (self.binning.tilt_edges.len() - 1) * self.binning.surfaces.len();
        let s = self.binning.surfaces.iter().position(|s| *s == id.surface).expect("surface in binning");
        &self.bins[id.distance * per_distance + id.tilt * self.binning.surfaces.len() + s]
    }

    /// The populated bin containing `c`.
    pub fn lookup(&self, c: &Condition) -> Option<&BinModel> {
        let id = self.binning.locate(c)?;
        Some(self.get(id)).filter(|b| b.is_populated())
    }

    /// The populated bin closest to `c`, preferring the same surface; ties go to
    /// the earlier bin.
    pub fn nearest_populated(&self, c: &Condition) -> Option<&BinModel> {
        self.bins
            .iter()
            .filter(|b| b.is_populated())
            .map(|b| (b.gap(c), b))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, b)| b)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("error model serialises")
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let model: ErrorModel = toml::from_str(text).map_err(|e| Error::parse(origin, e))?;
        model.binning.validate()?;
        if model.bins.len() != model.binning.bins().len() {
            return Err(Error::parse(
                origin,
                format!("expected {} [[bin]] blocks, found {}", model.binning.bins().len(), model.bins.len()),
            ));
        }
        for (id, bin) in model.binning.bins().into_iter().zip(&model.bins) {
            if bin.distance_range != model.binning.distance_range(id)
                || bin.tilt_range != model.binning.tilt_range(id)
                || bin.surface != id.surface
            {
                return Err(Error::parse(origin, format!("bin {} does not match the binning", bin.label())));
            }
            if bin.detection_probability.is_some_and(|p| !(0.0..=1.0).contains(&p)) {
                return Err(Error::parse(origin, format!("bin {}: detection_probability outside [0, 1]", bin.label())));
            }
            let negative = |v: &[f64]| v.iter().any(|x| !(*x >= 0.0));
            if bin.center_error_std.is_some_and(|s| negative(&s))
                || bin.extent_error_std.is_some_and(|s| negative(&s))
                || bin.false_positive_rate.is_some_and(|r| !(r >= 0.0))
            {
                return Err(Error::parse(origin, format!("bin {}: negative deviation or rate", bin.label())));
            }
        }
        Ok(model)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }
}

#[derive(Default)]
struct Tally {
    tp: usize,
    fn_: usize,
    fp: usize,
    errors: Vec<[f64; 5]>,
}

fn mean_std<const N: usize>(rows: &[[f64; 5]], offset: usize) -> ([f64; N], [f64; N]) {
    let mut mean = [0.0; N];
    let mut m2 = [0.0; N];
    for (k, row) in rows.iter().enumerate() {
        for a in 0..N {
            let x = row[offset + a];
            let delta = x - mean[a];
            mean[a] += delta / (k + 1) as f64;
            m2[a] += delta * (x - mean[a]);
        }
    }
    let std = m2.map(|s| if rows.len() > 1 { (s / (rows.len() - 1) as f64).max(0.0).sqrt() } else { 0.0 });
    (mean, std)
}

/// Fits per-bin detection probability, false-positive rate and error moments.
/// The result depends only on the multiset of records, not their order.
pub fn calibrate(records: &[ErrorRecord], binning: &Binning) -> Result<ErrorModel> {
    if records.is_empty() {
        return Err(Error::NoRecords);
    }
    binning.validate()?;
    let mut tallies: BTreeMap<BinId, Tally> = BTreeMap::new();
    for r in records {
        if !r.is_consistent() {
            return Err(Error::Invalid {
                what: "error record",
                message: format!("{} record with mismatched parameter errors", r.outcome.as_str()),
            });
        }
        let id = binning.locate(&r.condition).ok_or_else(|| Error::Invalid {
            what: "error record",
            message: format!(
                "condition (distance {}, tilt {}, {}) lies outside the binning",
                r.condition.distance, r.condition.tilt, r.condition.surface
            ),
        })?;
        let t = tallies.entry(id).or_default();
        match r.outcome {
            Outcome::TruePositive => {
                t.tp += 1;
                let (c, e) = (r.center_error.unwrap(), r.extent_error.unwrap());
                t.errors.push([c[0], c[1], c[2], e[0], e[1]]);
            }
            Outcome::FalseNegative => t.fn_ += 1,
            Outcome::FalsePositive => t.fp += 1,
        }
    }
    let bins = binning
        .bins()
        .into_iter()
        .map(|id| {
            let mut t = tallies.remove(&id).unwrap_or_default();
            t.errors.sort_by(|a, b| {
                a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
            });
            let samples = t.tp + t.fn_;
            let (center, extent) = if t.tp > 0 {
                (Some(mean_std::<3>(&t.errors, 0)), Some(mean_std::<2>(&t.errors, 3)))
            } else {
                (None, None)
            };
            BinModel {
                distance_range: binning.distance_range(id),
                tilt_range: binning.tilt_range(id),
                surface: id.surface,
                sample_count: samples,
                true_positives: t.tp,
                false_negatives: t.fn_,
                false_positives: t.fp,
                low_confidence: samples < binning.low_confidence_threshold || t.tp < binning.low_confidence_threshold,
                detection_probability: (samples > 0).then(|| t.tp as f64 / samples as f64),
                false_positive_rate: (samples > 0).then(|| t.fp as f64 / samples as f64),
                center_error_mean: center.map(|c| c.0),
                center_error_std: center.map(|c| c.1),
                extent_error_mean: extent.map(|e| e.0),
                extent_error_std: extent.map(|e| e.1),
            }
        })
        .collect();
    Ok(ErrorModel { metadata: ModelMetadata::default(), binning: binning.clone(), bins })
}
