//! Object-level perception error model: a toy detector, ground-truth
//! association, condition-binned calibration and error injection.

mod apply;
mod detect;
mod harness;
pub mod io;
mod matching;
mod model;
mod validate;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PanelGeometry;
use crate::scene::{PanelSpec, Surface};

pub use apply::{apply, ApplyOutcome};
pub use detect::perceive;
pub use harness::scan_error_records;
pub use matching::{associate, match_objects};
pub use model::{calibrate, BinId, BinModel, Binning, ErrorModel, ModelMetadata, LOW_CONFIDENCE_THRESHOLD};
pub use validate::{validate, BinDivergence, DivergenceReport};

pub const DEFAULT_GATE: f64 = 2.0;
pub const DEFAULT_DETECTOR_MIN_POINTS: usize = 10;
pub const DEFAULT_CLUSTER_DISTANCE: f64 = 0.5;

/// `[pem]` section of a scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PemSettings {
    pub distance_edges: Vec<f64>,
    pub tilt_edges: Vec<f64>,
    pub surfaces: Vec<Surface>,
    /// Association gate in meters.
    pub gate: f64,
    pub detector_min_points: usize,
    /// Maximum point spacing inside one cluster, meters.
    pub cluster_distance: f64,
    pub low_confidence_threshold: usize,
}

impl Default for PemSettings {
    fn default() -> Self {
        let binning = Binning::default();
        Self {
            distance_edges: binning.distance_edges,
            tilt_edges: binning.tilt_edges,
            surfaces: binning.surfaces,
            gate: DEFAULT_GATE,
            detector_min_points: DEFAULT_DETECTOR_MIN_POINTS,
            cluster_distance: DEFAULT_CLUSTER_DISTANCE,
            low_confidence_threshold: LOW_CONFIDENCE_THRESHOLD,
        }
    }
}

impl PemSettings {
    pub fn binning(&self) -> Binning {
        Binning {
            distance_edges: self.distance_edges.clone(),
            tilt_edges: self.tilt_edges.clone(),
            surfaces: self.surfaces.clone(),
            low_confidence_threshold: self.low_confidence_threshold,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |message: &str| Err(Error::Invalid { what: "pem settings", message: message.to_string() });
        if !(self.gate > 0.0 && self.gate.is_finite()) {
            return bad("gate must be positive");
        }
        if self.detector_min_points < 1 {
            return bad("detector_min_points must be at least 1");
        }
        if !(self.cluster_distance > 0.0 && self.cluster_distance.is_finite()) {
            return bad("cluster_distance must be positive");
        }
        self.binning().validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthObject {
    pub id: String,
    pub class_label: String,
    /// Sensor frame, meters.
    pub center: [f64; 3],
    /// Width and height, meters.
    pub extent: [f64; 2],
    pub tilt: f64,
    pub surface: Surface,
    pub paint_code: String,
}

impl GroundTruthObject {
    pub const PANEL_CLASS: &'static str = "panel";

    pub fn from_panel(id: impl Into<String>, panel: &PanelSpec, geometry: &PanelGeometry) -> Self {
        Self {
            id: id.into(),
            class_label: Self::PANEL_CLASS.to_string(),
            center: geometry.center.into(),
            extent: [panel.side_length, panel.side_length],
            tilt: panel.elevation_angle,
            surface: panel.surface,
            paint_code: panel.paint.panel_code.clone(),
        }
    }

    pub fn distance(&self) -> f64 {
        norm(&self.center)
    }

    pub fn condition(&self) -> Condition {
        Condition {
            distance: self.distance(),
            tilt: self.tilt,
            surface: self.surface,
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.extent.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return Err(Error::Invalid {
                what: "ground-truth object",
                message: format!("`{}` has a non-positive extent", self.id),
            });
        }
        if self.center.iter().any(|c| !c.is_finite()) || !self.tilt.is_finite() {
            return Err(Error::Invalid {
                what: "ground-truth object",
                message: format!("`{}` has a non-finite center or tilt", self.id),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerceivedObject {
    pub matched_gt_id: Option<String>,
    pub center: [f64; 3],
    pub extent: [f64; 2],
    /// Absent for objects produced by [`apply`] rather than the detector.
    pub mean_intensity: Option<f64>,
    pub point_count: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    TruePositive,
    FalseNegative,
    FalsePositive,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::TruePositive => "true_positive",
            Outcome::FalseNegative => "false_negative",
            Outcome::FalsePositive => "false_positive",
        }
    }
}

impl std::str::FromStr for Outcome {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "true_positive" => Ok(Outcome::TruePositive),
            "false_negative" => Ok(Outcome::FalseNegative),
            "false_positive" => Ok(Outcome::FalsePositive),
            other => Err(format!("unknown outcome `{other}`")),
        }
    }
}

/// True distance, tilt and surface of the object a record refers to.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub distance: f64,
    pub tilt: f64,
    pub surface: Surface,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorRecord {
    pub condition: Condition,
    pub outcome: Outcome,
    /// Perceived minus true center; present only for true positives.
    pub center_error: Option<[f64; 3]>,
    /// Perceived minus true width and height; present only for true positives.
    pub extent_error: Option<[f64; 2]>,
}

impl ErrorRecord {
    pub fn miss(condition: Condition) -> Self {
        Self { condition, outcome: Outcome::FalseNegative, center_error: None, extent_error: None }
    }

    pub fn ghost(condition: Condition) -> Self {
        Self { condition, outcome: Outcome::FalsePositive, center_error: None, extent_error: None }
    }

    pub fn hit(condition: Condition, center_error: [f64; 3], extent_error: [f64; 2]) -> Self {
        Self {
            condition,
            outcome: Outcome::TruePositive,
            center_error: Some(center_error),
            extent_error: Some(extent_error),
        }
    }

    /// Parameter errors are present exactly for true positives.
    pub fn is_consistent(&self) -> bool {
        let tp = self.outcome == Outcome::TruePositive;
        self.center_error.is_some() == tp && self.extent_error.is_some() == tp
    }
}

pub(crate) fn norm(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

pub(crate) fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    norm(&[a[0] - b[0], a[1] - b[1], a[2] - b[2]])
}
