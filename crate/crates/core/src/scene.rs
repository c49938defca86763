//! Domain types shared by every module, plus scene validation.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geometry::PanelGeometry;
use crate::reflectance::ReflectanceModel;

/// One strongest-mode return.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LidarPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub intensity: u8,
    pub channel: u16,
    /// Degrees in `[0, 360)`.
    pub azimuth: f64,
    pub range: f64,
}

impl LidarPoint {
    pub fn position(&self) -> nalgebra::Vector3<f64> {
        nalgebra::Vector3::new(self.x, self.y, self.z)
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct PointCloud {
    pub points: Vec<LidarPoint>,
    pub revolution_index: u64,
    pub scene_id: String,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Surface {
    Dry,
    Wet,
}

impl Surface {
    pub fn as_str(self) -> &'static str {
        match self {
            Surface::Dry => "dry",
            Surface::Wet => "wet",
        }
    }

    pub fn is_wet(self) -> bool {
        self == Surface::Wet
    }
}

impl fmt::Display for Surface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Surface {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dry" => Ok(Surface::Dry),
            "wet" => Ok(Surface::Wet),
            other => Err(format!("unknown surface `{other}` (expected dry or wet)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReturnMode {
    Strongest,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BeamPattern {
    /// Evenly spaced over the vertical field of view.
    Uniform,
    /// Half of the channels packed into ±4° around the horizon.
    DenseHorizon,
    /// Explicit elevation list from the scenario.
    Custom,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorConfig {
    pub channels: usize,
    pub vfov_min: f64,
    pub vfov_max: f64,
    pub hfov: f64,
    pub rotation_rpm: f64,
    pub azimuth_step: f64,
    pub return_mode: ReturnMode,
    /// Meters.
    pub range_noise_sigma: f64,
    /// Signal-independent intensity noise, intensity units.
    pub intensity_noise_sigma: f64,
    /// Signal-proportional intensity noise, fraction of the expected mean.
    pub intensity_noise_fraction: f64,
    pub min_detectable_intensity: f64,
    pub max_range: f64,
    pub mount_height: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            channels: 128,
            vfov_min: -25.0,
            vfov_max: 15.0,
            hfov: 360.0,
            rotation_rpm: 540.0,
            azimuth_step: 0.2,
            return_mode: ReturnMode::Strongest,
            range_noise_sigma: 0.02,
            intensity_noise_sigma: 1.0,
            intensity_noise_fraction: 0.01,
            min_detectable_intensity: 1.0,
            max_range: 200.0,
            mount_height: 1.0,
        }
    }
}

impl SensorConfig {
    pub fn azimuth_steps(&self) -> usize {
        (self.hfov / self.azimuth_step).round() as usize
    }

    /// Azimuth of the first firing; 0 for a full revolution, otherwise the
    /// field of view is centred on the boresight.
    pub fn azimuth_start(&self) -> f64 {
        if self.hfov >= 360.0 {
            0.0
        } else {
            (360.0 - self.hfov / 2.0).rem_euclid(360.0)
        }
    }

    pub fn azimuth_at(&self, step: usize) -> f64 {
        (self.azimuth_start() + step as f64 * self.azimuth_step).rem_euclid(360.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BeamTable {
    pub pattern: BeamPattern,
    pub elevations: Vec<f64>,
}

impl BeamTable {
    pub fn uniform(config: &SensorConfig) -> Self {
        let elevations = linspace(config.vfov_min, config.vfov_max, config.channels, true)
            .unwrap_or_else(|| vec![single_elevation(config)]);
        Self {
            pattern: BeamPattern::Uniform,
            elevations,
        }
    }

    pub fn dense_horizon(config: &SensorConfig) -> Self {
        let n = config.channels;
        let (lo, hi) = (config.vfov_min, config.vfov_max);
        let (band_lo, band_hi) = (lo.max(-4.0), hi.min(4.0));
        if n < 4 || band_lo >= band_hi {
            let mut table = Self::uniform(config);
            table.pattern = BeamPattern::DenseHorizon;
            return table;
        }
        let mid = n / 2;
        let rest = n - mid;
        let below_span = band_lo - lo;
        let above_span = hi - band_hi;
        let below = if below_span + above_span > 0.0 {
            ((rest as f64) * below_span / (below_span + above_span)).round() as usize
        } else {
            0
        };
        let above = rest - below;

        let mut elevations = Vec::with_capacity(n);
        // Outer segments exclude the band edges so the table stays strictly increasing.
        if below > 0 {
            let step = below_span / below as f64;
            elevations.extend((0..below).map(|i| lo + step * i as f64));
        }
        elevations.extend(linspace(band_lo, band_hi, mid, true).unwrap_or_else(|| vec![0.0]));
        if above > 0 {
            let step = above_span / above as f64;
            elevations.extend((1..=above).map(|i| band_hi + step * i as f64));
        }
        Self {
            pattern: BeamPattern::DenseHorizon,
            elevations,
        }
    }

    pub fn for_pattern(pattern: BeamPattern, config: &SensorConfig) -> Self {
        match pattern {
            BeamPattern::Uniform | BeamPattern::Custom => Self::uniform(config),
            BeamPattern::DenseHorizon => Self::dense_horizon(config),
        }
    }

    pub fn custom(elevations: Vec<f64>) -> Self {
        Self {
            pattern: BeamPattern::Custom,
            elevations,
        }
    }
}

fn linspace(lo: f64, hi: f64, n: usize, inclusive: bool) -> Option<Vec<f64>> {
    if n < 2 {
        return None;
    }
    let div = if inclusive { n - 1 } else { n } as f64;
    let step = (hi - lo) / div;
    Some((0..n).map(|i| if inclusive && i == n - 1 { hi } else { lo + step * i as f64 }).collect())
}

fn single_elevation(config: &SensorConfig) -> f64 {
    if config.vfov_min <= 0.0 && 0.0 <= config.vfov_max {
        0.0
    } else {
        0.5 * (config.vfov_min + config.vfov_max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Finish {
    Gloss,
    Matte,
}

impl Finish {
    pub fn as_str(self) -> &'static str {
        match self {
            Finish::Gloss => "gloss",
            Finish::Matte => "matte",
        }
    }
}

/// Near-infrared optical parameters of one paint panel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PaintParams {
    pub panel_code: String,
    pub color: String,
    pub finish: Finish,
    pub metallic: bool,
    pub functionalised: bool,
    /// Diffuse albedo at the sensor wavelength.
    pub base_reflectivity: f64,
    pub specular_weight: f64,
    pub specular_exponent: f64,
    #[serde(default = "default_wet_variance_factor")]
    pub wet_variance_factor: f64,
    #[serde(default)]
    pub wet_mean_shift: f64,
}

fn default_wet_variance_factor() -> f64 {
    1.5
}

#[derive(Clone, Debug, PartialEq)]
pub struct PanelSpec {
    pub paint: PaintParams,
    pub side_length: f64,
    /// Distance of the panel centre along its bearing, meters.
    pub center_distance: f64,
    /// Tilt about the horizontal pivot, degrees; 0 faces the sensor.
    pub elevation_angle: f64,
    pub surface: Surface,
    pub center_height: f64,
    /// Bearing of the panel centre, degrees; 0 is the sensor boresight.
    pub azimuth: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    pub scene_id: String,
    pub seed: u64,
    pub sensor: SensorConfig,
    pub beams: BeamTable,
    pub panels: Vec<PanelSpec>,
    /// Lux. Recorded for provenance only; no simulated quantity reads it.
    pub ambient_light_level: f64,
    pub model: ReflectanceModel,
    /// Paint table the panels were resolved against; `None` is the built-in table.
    pub paint_table: Option<String>,
}

impl Scene {
    /// Default sensor, uniform beam table, no panels.
    pub fn empty(scene_id: impl Into<String>) -> Self {
        let sensor = SensorConfig::default();
        let beams = BeamTable::uniform(&sensor);
        Self {
            scene_id: scene_id.into(),
            seed: 0,
            sensor,
            beams,
            panels: Vec::new(),
            ambient_light_level: 0.0,
            model: ReflectanceModel::default(),
            paint_table: None,
        }
    }

    pub fn panel_geometries(&self) -> Vec<PanelGeometry> {
        self.panels
            .iter()
            .enumerate()
            .map(|(i, p)| PanelGeometry::new(i, p, self.sensor.mount_height))
            .collect()
    }
}

/// One broken invariant; validation reports these as data.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub type_name: &'static str,
    pub field: String,
    pub message: String,
}

impl Violation {
    fn new(type_name: &'static str, field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            type_name,
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}: {}", self.type_name, self.field, self.message)
    }
}

fn finite_nonneg(v: f64) -> bool {
    v.is_finite() && v >= 0.0
}

pub fn validate_sensor(s: &SensorConfig, out: &mut Vec<Violation>) {
    const T: &str = "SensorConfig";
    if s.channels < 1 {
        out.push(Violation::new(T, "channels", "must be at least 1"));
    }
    if !(s.vfov_min.is_finite() && s.vfov_max.is_finite() && s.vfov_min < s.vfov_max) {
        out.push(Violation::new(T, "vfov_min", "vfov_min must be below vfov_max"));
    }
    if !(s.vfov_min >= -90.0 && s.vfov_max <= 90.0) {
        out.push(Violation::new(T, "vfov_max", "vertical field of view must lie within [-90, 90]"));
    }
    if !(s.hfov > 0.0 && s.hfov <= 360.0) {
        out.push(Violation::new(T, "hfov", "must lie in (0, 360]"));
    }
    if !(s.azimuth_step > 0.0 && s.azimuth_step.is_finite()) {
        out.push(Violation::new(T, "azimuth_step", "must be positive"));
    } else if s.hfov > 0.0 {
        let ratio = s.hfov / s.azimuth_step;
        if (ratio - ratio.round()).abs() > 1e-6 || ratio.round() < 1.0 {
            out.push(Violation::new(T, "azimuth_step", "must divide hfov"));
        }
    }
    if !(s.rotation_rpm > 0.0 && s.rotation_rpm.is_finite()) {
        out.push(Violation::new(T, "rotation_rpm", "must be positive"));
    }
    for (name, v) in [
        ("range_noise_sigma", s.range_noise_sigma),
        ("intensity_noise_sigma", s.intensity_noise_sigma),
        ("intensity_noise_fraction", s.intensity_noise_fraction),
    ] {
        if !finite_nonneg(v) {
            out.push(Violation::new(T, name, "must be finite and >= 0"));
        }
    }
    if !(0.0..=255.0).contains(&s.min_detectable_intensity) {
        out.push(Violation::new(T, "min_detectable_intensity", "must lie in [0, 255]"));
    }
    if !(s.max_range > 0.0) {
        out.push(Violation::new(T, "max_range", "must be positive"));
    }
    if !s.mount_height.is_finite() {
        out.push(Violation::new(T, "mount_height", "must be finite"));
    }
}

pub fn validate_beams(beams: &BeamTable, s: &SensorConfig, out: &mut Vec<Violation>) {
    const T: &str = "BeamTable";
    if beams.elevations.len() != s.channels {
        out.push(Violation::new(
            T,
            "elevations",
            format!(
                "length {} does not match {} channels",
                beams.elevations.len(),
                s.channels
            ),
        ));
    }
    if beams.elevations.windows(2).any(|w| !(w[0] < w[1])) {
        out.push(Violation::new(T, "elevations", "must be strictly increasing"));
    }
    if beams
        .elevations
        .iter()
        .any(|&e| !(e >= s.vfov_min - 1e-9 && e <= s.vfov_max + 1e-9))
    {
        out.push(Violation::new(
            T,
            "elevations",
            "every elevation must lie within [vfov_min, vfov_max]",
        ));
    }
}

pub fn validate_paint(p: &PaintParams, gloss_threshold: f64, out: &mut Vec<Violation>) {
    let field = |name: &str| format!("{}[{}]", name, p.panel_code);
    const T: &str = "PaintParams";
    if p.panel_code.trim().is_empty() {
        out.push(Violation::new(T, "panel_code", "must not be empty"));
    }
    if !(0.0..=1.0).contains(&p.base_reflectivity) {
        out.push(Violation::new(T, field("base_reflectivity"), "must lie in [0, 1]"));
    }
    if !(0.0..=1.0).contains(&p.specular_weight) {
        out.push(Violation::new(T, field("specular_weight"), "must lie in [0, 1]"));
    }
    if p.base_reflectivity + p.specular_weight > 1.0 + 1e-12 {
        out.push(Violation::new(
            T,
            field("specular_weight"),
            "base_reflectivity + specular_weight must not exceed 1",
        ));
    }
    if p.finish == Finish::Matte && p.specular_weight >= gloss_threshold {
        out.push(Violation::new(
            T,
            field("specular_weight"),
            format!("matte finish requires specular_weight below {gloss_threshold}"),
        ));
    }
    if !(p.specular_exponent > 0.0 && p.specular_exponent.is_finite()) {
        out.push(Violation::new(T, field("specular_exponent"), "must be positive"));
    }
    if !(p.wet_variance_factor >= 1.0 && p.wet_variance_factor.is_finite()) {
        out.push(Violation::new(T, field("wet_variance_factor"), "must be >= 1"));
    }
    if !p.wet_mean_shift.is_finite() {
        out.push(Violation::new(T, field("wet_mean_shift"), "must be finite"));
    }
}

pub fn validate_panel(i: usize, p: &PanelSpec, out: &mut Vec<Violation>) {
    const T: &str = "PanelSpec";
    let field = |name: &str| format!("panels[{i}].{name}");
    if !(p.side_length > 0.0 && p.side_length.is_finite()) {
        out.push(Violation::new(T, field("side_length"), "must be positive"));
    }
    if !(p.center_distance > 0.0 && p.center_distance.is_finite()) {
        out.push(Violation::new(T, field("center_distance"), "must be positive"));
    }
    if !(p.elevation_angle >= 0.0 && p.elevation_angle < 90.0) {
        out.push(Violation::new(
            T,
            field("elevation_angle"),
            "elevation_angle out of range [0, 90)",
        ));
    }
    if !p.center_height.is_finite() {
        out.push(Violation::new(T, field("center_height"), "must be finite"));
    }
    if !p.azimuth.is_finite() {
        out.push(Violation::new(T, field("azimuth"), "must be finite"));
    }
    if p.side_length > 0.0 && p.center_distance > 0.0 && p.center_distance <= p.side_length * 0.5 * 2f64.sqrt() {
        out.push(Violation::new(
            T,
            field("center_distance"),
            "panel must not enclose the sensor (distance below half-diagonal)",
        ));
    }
}

/// Every violated invariant of `scene`; empty iff the scene is valid.
pub fn validate_scene(scene: &Scene) -> Vec<Violation> {
    let mut out = Vec::new();
    validate_sensor(&scene.sensor, &mut out);
    validate_beams(&scene.beams, &scene.sensor, &mut out);
    scene.model.validate(&mut out);
    if !scene.ambient_light_level.is_finite() || scene.ambient_light_level < 0.0 {
        out.push(Violation::new("Scene", "ambient_light_level", "must be finite and >= 0"));
    }
    for (i, panel) in scene.panels.iter().enumerate() {
        validate_panel(i, panel, &mut out);
        validate_paint(&panel.paint, scene.model.gloss_threshold, &mut out);
    }
    let panel_ok = |p: &PanelSpec| {
        p.side_length > 0.0
            && p.center_distance > p.side_length * 0.5 * 2f64.sqrt()
            && (0.0..90.0).contains(&p.elevation_angle)
            && p.center_height.is_finite()
            && p.azimuth.is_finite()
    };
    let boxes: Vec<_> = scene
        .panels
        .iter()
        .enumerate()
        .filter(|(_, p)| panel_ok(p))
        .map(|(i, p)| (i, PanelGeometry::new(i, p, scene.sensor.mount_height).angular_box()))
        .collect();
    for (a, (i, box_i)) in boxes.iter().enumerate() {
        for (j, box_j) in boxes.iter().skip(a + 1) {
            if box_i.overlaps(box_j) {
                out.push(Violation::new(
                    "Scene",
                    format!("panels[{i}]/panels[{j}]"),
                    "panels overlap in angular extent as seen from the sensor",
                ));
            }
        }
    }
    out
}
