//! The full (paint × angle × distance × surface × run) experiment sweep.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::roi::{extract_panel_roi, DEFAULT_ROI_MARGIN};
use super::stats::{intensity_stats, IntensityStats};
use super::MIN_POINTS_THRESHOLD;
use crate::error::{Error, Result};
use crate::geometry::PanelGeometry;
use crate::paints::PaintTable;
use crate::pem::{match_objects, perceive, ErrorRecord, GroundTruthObject, PemSettings};
use crate::rng::RandomStream;
use crate::scanner::scan_with_sprays;
use crate::scene::{PanelSpec, Scene, Surface};

/// `[sweep]` section of a scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSettings {
    /// Empty means every code in the paint table.
    pub paints: Vec<String>,
    pub angles: Vec<f64>,
    pub distances: Vec<f64>,
    pub surfaces: Vec<Surface>,
    pub runs: u32,
    pub side_length: f64,
    pub roi_margin: f64,
    pub min_points: usize,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            paints: Vec::new(),
            angles: vec![0.0, 15.0, 30.0, 45.0, 60.0],
            distances: vec![5.0, 10.0, 20.0, 30.0],
            surfaces: vec![Surface::Dry, Surface::Wet],
            runs: 3,
            side_length: 0.5,
            roi_margin: DEFAULT_ROI_MARGIN,
            min_points: MIN_POINTS_THRESHOLD,
        }
    }
}

impl SweepSettings {
    pub fn validate(&self) -> Result<()> {
        let bad = |message: &str| Err(Error::Invalid { what: "sweep", message: message.to_string() });
        if self.angles.is_empty() || self.distances.is_empty() || self.surfaces.is_empty() {
            return bad("angles, distances and surfaces must be non-empty");
        }
        if self.runs < 1 {
            return bad("runs must be at least 1");
        }
        if self.angles.iter().any(|a| !(0.0..90.0).contains(a)) {
            return bad("angles must lie in [0, 90)");
        }
        if self.distances.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
            return bad("distances must be positive");
        }
        if !(self.side_length > 0.0 && self.side_length.is_finite()) {
            return bad("side_length must be positive");
        }
        if !(0.0..0.5).contains(&self.roi_margin) {
            return bad("roi_margin must lie in [0, 0.5)");
        }
        Ok(())
    }

    pub fn options(&self, pem: &PemSettings) -> SweepOptions {
        SweepOptions {
            side_length: self.side_length,
            roi_margin: self.roi_margin,
            min_points_threshold: self.min_points,
            pem: pem.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepGrid {
    pub panel_codes: Vec<String>,
    pub angles: Vec<f64>,
    pub distances: Vec<f64>,
    pub surfaces: Vec<Surface>,
    pub runs: u32,
    pub seed: u64,
}

impl SweepGrid {
    pub fn from_settings(settings: &SweepSettings, paints: &PaintTable, seed: u64) -> Self {
        let panel_codes = if settings.paints.is_empty() {
            paints.codes()
        } else {
            settings.paints.clone()
        };
        Self {
            panel_codes,
            angles: settings.angles.clone(),
            distances: settings.distances.clone(),
            surfaces: settings.surfaces.clone(),
            runs: settings.runs,
            seed,
        }
    }

    pub fn cell_count(&self) -> usize {
        self.panel_codes.len()
            * self.angles.len()
            * self.distances.len()
            * self.surfaces.len()
            * self.runs as usize
    }

    /// Cells in (code, angle, distance, surface, run) order.
    pub fn cells(&self) -> Vec<SweepCell> {
        let mut cells = Vec::with_capacity(self.cell_count());
        for code in &self.panel_codes {
            for &angle in &self.angles {
                for &distance in &self.distances {
                    for &surface in &self.surfaces {
                        for run in 1..=self.runs {
                            cells.push(SweepCell {
                                panel_code: code.clone(),
                                angle,
                                distance,
                                surface,
                                run,
                            });
                        }
                    }
                }
            }
        }
        cells
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepCell {
    pub panel_code: String,
    pub angle: f64,
    pub distance: f64,
    pub surface: Surface,
    pub run: u32,
}

impl SweepCell {
    pub fn label(&self) -> String {
        format!(
            "cell/{}/{}/{}/{}/{}",
            self.panel_code, self.angle, self.distance, self.surface, self.run
        )
    }

    /// The wetting a cell sees. Panels are sprayed once per (distance, run)
    /// at the first angle and not re-sprayed while the angle changes, so the
    /// label deliberately omits the angle.
    pub fn spray_label(&self) -> String {
        format!("spray/{}/{}/{}", self.panel_code, self.distance, self.run)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepOptions {
    pub side_length: f64,
    pub roi_margin: f64,
    pub min_points_threshold: usize,
    pub pem: PemSettings,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepSettings::default().options(&PemSettings::default())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentRecord {
    pub panel_code: String,
    pub angle_deg: f64,
    pub distance_m: f64,
    pub surface: Surface,
    pub run: u32,
    pub stats: IntensityStats,
    pub reliable: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepResult {
    pub records: Vec<ExperimentRecord>,
    /// Detector-vs-ground-truth outcomes, one scan per cell.
    pub errors: Vec<ErrorRecord>,
    /// The panel of every cell as a ground-truth object, in cell order.
    pub ground_truth: Vec<GroundTruthObject>,
}

/// Runs every grid cell against `template` (sensor, beams and model; its
/// panels are ignored). Cells are independent and run in parallel; each one
/// draws from its own labelled stream, so the output does not depend on
/// scheduling.
pub fn run_sweep(
    grid: &SweepGrid,
    template: &Scene,
    paints: &PaintTable,
    options: &SweepOptions,
) -> Result<SweepResult> {
    for code in &grid.panel_codes {
        paints.require(code)?;
    }
    let cells = grid.cells();
    let outcomes: Vec<CellOutcome> = cells
        .par_iter()
        .map(|cell| run_cell(cell, grid.seed, template, paints, options))
        .collect::<Result<_>>()?;
    let mut result = SweepResult::default();
    for (record, errors, gt) in outcomes {
        result.records.push(record);
        result.errors.extend(errors);
        result.ground_truth.push(gt);
    }
    Ok(result)
}

type CellOutcome = (ExperimentRecord, Vec<ErrorRecord>, GroundTruthObject);

fn run_cell(
    cell: &SweepCell,
    seed: u64,
    template: &Scene,
    paints: &PaintTable,
    options: &SweepOptions,
) -> Result<CellOutcome> {
    let panel = PanelSpec {
        paint: paints.require(&cell.panel_code)?.clone(),
        side_length: options.side_length,
        center_distance: cell.distance,
        elevation_angle: cell.angle,
        surface: cell.surface,
        center_height: template.sensor.mount_height,
        azimuth: 0.0,
    };
    let mut scene = template.clone();
    scene.scene_id = cell.label();
    scene.panels = vec![panel];
    let stream = RandomStream::new(seed, cell.label());
    let spray = cell
        .surface
        .is_wet()
        .then(|| RandomStream::new(seed, cell.spray_label()));
    let cloud = scan_with_sprays(&scene, &stream, &[spray])?;

    let geometry = PanelGeometry::new(0, &scene.panels[0], scene.sensor.mount_height);
    let roi = extract_panel_roi(&cloud, &geometry, options.roi_margin);
    let stats = match intensity_stats(&roi) {
        Ok(s) => s,
        Err(Error::EmptyRoi) => IntensityStats::EMPTY,
        Err(e) => return Err(e),
    };
    let record = ExperimentRecord {
        panel_code: cell.panel_code.clone(),
        angle_deg: cell.angle,
        distance_m: cell.distance,
        surface: cell.surface,
        run: cell.run,
        reliable: stats.count >= options.min_points_threshold,
        stats,
    };

    let gt = [GroundTruthObject::from_panel(cell.label(), &scene.panels[0], &geometry)];
    let perceived = perceive(&cloud, options.pem.detector_min_points, options.pem.cluster_distance);
    let errors = match_objects(&gt, &perceived, options.pem.gate);
    let [gt] = gt;
    Ok((record, errors, gt))
}
