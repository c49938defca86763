//! Scenario files.
//!
//! A scenario is a TOML document: top-level keys for the scene, optional
//! `[sensor]`, `[beams]`, `[reflectance]`, `[sweep]` and `[pem]` tables, and
//! one `[[panel]]` block per mounted panel. Omitted fields take their
//! defaults; unknown keys are rejected.
//!
//! ```toml
//! scene_id = "sb-gloss-10m"
//! seed = 7
//!
//! [beams]
//! pattern = "uniform"        # or "dense-horizon", or "custom" + elevations
//!
//! [[panel]]
//! paint = "SB-Gloss"
//! center_distance = 10.0
//! elevation_angle = 0.0
//! surface = "dry"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::sweep::SweepSettings;
use crate::error::{Error, Result};
use crate::paints::{load_paint_table, PaintTable};
use crate::pem::PemSettings;
use crate::reflectance::ReflectanceModel;
use crate::scene::{validate_scene, BeamPattern, BeamTable, PanelSpec, Scene, SensorConfig, Surface};

#[derive(Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scene_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ambient_light_level: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    paint_table: Option<String>,
    #[serde(default)]
    sensor: SensorConfig,
    #[serde(default)]
    beams: BeamsSection,
    #[serde(default)]
    reflectance: ReflectanceModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sweep: Option<SweepSettings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pem: Option<PemSettings>,
    #[serde(default, rename = "panel")]
    panels: Vec<PanelSection>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BeamsSection {
    #[serde(default = "default_pattern")]
    pattern: BeamPattern,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    elevations: Option<Vec<f64>>,
}

impl Default for BeamsSection {
    fn default() -> Self {
        Self {
            pattern: default_pattern(),
            elevations: None,
        }
    }
}

fn default_pattern() -> BeamPattern {
    BeamPattern::Uniform
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PanelSection {
    paint: String,
    #[serde(default = "default_side")]
    side_length: f64,
    center_distance: f64,
    #[serde(default)]
    elevation_angle: f64,
    #[serde(default = "default_surface")]
    surface: Surface,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    center_height: Option<f64>,
    #[serde(default)]
    azimuth: f64,
}

fn default_side() -> f64 {
    0.5
}

fn default_surface() -> Surface {
    Surface::Dry
}

/// A parsed scenario: the scene plus sweep/PEM settings and the paint table
/// the panels were resolved against.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub scene: Scene,
    pub sweep: Option<SweepSettings>,
    pub pem: Option<PemSettings>,
    pub paints: PaintTable,
}

impl Scenario {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &path.display().to_string(), &base)
    }

    /// Parses scenario text; a relative `paint_table` resolves against `base_dir`.
    pub fn parse(text: &str, origin: &str, base_dir: &Path) -> Result<Self> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| Error::parse(origin, e))?;
        let paints = match &file.paint_table {
            None => PaintTable::builtin(),
            Some(p) => {
                let path = PathBuf::from(p);
                let path = if path.is_absolute() { path } else { base_dir.join(path) };
                load_paint_table(path)?
            }
        };
        let sensor = file.sensor;
        let beams = match (file.beams.pattern, file.beams.elevations) {
            (BeamPattern::Custom, Some(e)) => BeamTable::custom(e),
            (BeamPattern::Custom, None) => {
                return Err(Error::parse(origin, "beams.pattern = \"custom\" requires beams.elevations"))
            }
            (_, Some(_)) => {
                return Err(Error::parse(origin, "beams.elevations requires beams.pattern = \"custom\""))
            }
            (pattern, None) => BeamTable::for_pattern(pattern, &sensor),
        };
        let panels = file
            .panels
            .into_iter()
            .map(|p| {
                Ok(PanelSpec {
                    paint: paints.require(&p.paint)?.clone(),
                    side_length: p.side_length,
                    center_distance: p.center_distance,
                    elevation_angle: p.elevation_angle,
                    surface: p.surface,
                    center_height: p.center_height.unwrap_or(sensor.mount_height),
                    azimuth: p.azimuth,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let scene = Scene {
            scene_id: file.scene_id.unwrap_or_else(|| "scene".to_string()),
            seed: file.seed.unwrap_or(0),
            sensor,
            beams,
            panels,
            ambient_light_level: file.ambient_light_level.unwrap_or(0.0),
            model: file.reflectance,
            paint_table: file.paint_table,
        };
        let violations = validate_scene(&scene);
        if !violations.is_empty() {
            return Err(Error::InvalidScene(violations));
        }
        if let Some(sweep) = &file.sweep {
            sweep.validate()?;
            for code in &sweep.paints {
                paints.require(code)?;
            }
        }
        if let Some(pem) = &file.pem {
            pem.validate()?;
        }
        Ok(Self {
            scene,
            sweep: file.sweep,
            pem: file.pem,
            paints,
        })
    }

    /// Canonical text with every default spelled out.
    pub fn to_toml(&self) -> Result<String> {
        let scene = &self.scene;
        let file = ScenarioFile {
            scene_id: Some(scene.scene_id.clone()),
            seed: Some(scene.seed),
            ambient_light_level: Some(scene.ambient_light_level),
            paint_table: scene.paint_table.clone(),
            sensor: scene.sensor.clone(),
            beams: BeamsSection {
                pattern: scene.beams.pattern,
                elevations: (scene.beams.pattern == BeamPattern::Custom)
                    .then(|| scene.beams.elevations.clone()),
            },
            reflectance: scene.model.clone(),
            sweep: self.sweep.clone(),
            pem: self.pem.clone(),
            panels: scene
                .panels
                .iter()
                .map(|p| PanelSection {
                    paint: p.paint.panel_code.clone(),
                    side_length: p.side_length,
                    center_distance: p.center_distance,
                    elevation_angle: p.elevation_angle,
                    surface: p.surface,
                    center_height: Some(p.center_height),
                    azimuth: p.azimuth,
                })
                .collect(),
        };
        toml::to_string(&file).map_err(|e| Error::parse("scenario serialization", e))
    }

    /// Short hex digest of the canonical text; identifies the configuration in outputs.
    pub fn config_hash(&self) -> Result<String> {
        Ok(config_hash(&self.to_toml()?))
    }
}

pub fn config_hash(text: &str) -> String {
    let digest: [u8; 32] = Sha256::digest(text.as_bytes()).into();
    hex::encode(&digest[..8])
}

/// Loads a scenario file and returns its validated scene.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scene> {
    Scenario::load(path).map(|s| s.scene)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Scenario> {
        Scenario::parse(text, "test", Path::new("."))
    }

    const MINIMAL: &str = r#"
[[panel]]
paint = "SB-Gloss"
center_distance = 10.0
elevation_angle = 0.0
"#;

    #[test]
    fn minimal_scenario_gets_defaults() {
        let s = parse(MINIMAL).unwrap().scene;
        assert_eq!(s.panels.len(), 1);
        assert_eq!(s.sensor.channels, 128);
        assert_eq!(s.sensor.rotation_rpm, 540.0);
        assert_eq!(s.sensor.azimuth_step, 0.2);
        assert_eq!(s.sensor.hfov, 360.0);
        assert_eq!((s.sensor.vfov_min, s.sensor.vfov_max), (-25.0, 15.0));
        assert_eq!(s.beams.elevations.len(), 128);
        assert_eq!(s.panels[0].paint.panel_code, "SB-Gloss");
        assert_eq!(s.panels[0].center_height, s.sensor.mount_height);
        assert_eq!(s.panels[0].side_length, 0.5);
    }

    #[test]
    fn elevation_angle_90_is_rejected() {
        let text = MINIMAL.replace("elevation_angle = 0.0", "elevation_angle = 90.0");
        let err = parse(&text).unwrap_err().to_string();
        assert!(err.contains("elevation_angle out of range"), "{err}");
    }

    #[test]
    fn unknown_key_reports_location() {
        let text = format!("{MINIMAL}bogus = 3\n");
        let err = parse(&text).unwrap_err().to_string();
        assert!(err.contains("bogus"), "{err}");
        assert!(err.contains("line"), "{err}");
    }

    #[test]
    fn unknown_paint_is_named() {
        let text = MINIMAL.replace("SB-Gloss", "XX-Nope");
        let err = parse(&text).unwrap_err();
        assert!(matches!(&err, Error::UnknownPaint(c) if c == "XX-Nope"));
    }

    #[test]
    fn missing_required_field_is_named() {
        let err = parse("[[panel]]\npaint = \"SB-Gloss\"\n").unwrap_err().to_string();
        assert!(err.contains("center_distance"), "{err}");
    }

    #[test]
    fn dense_horizon_and_custom_tables() {
        let s = parse(&format!("[beams]\npattern = \"dense-horizon\"\n{MINIMAL}")).unwrap();
        assert_eq!(s.scene.beams.pattern, BeamPattern::DenseHorizon);
        let text = format!(
            "[sensor]\nchannels = 3\n[beams]\npattern = \"custom\"\nelevations = [-1.0, 0.0, 1.0]\n{MINIMAL}"
        );
        let s = parse(&text).unwrap();
        assert_eq!(s.scene.beams.elevations, vec![-1.0, 0.0, 1.0]);
        let text = format!("[beams]\nelevations = [0.0]\n{MINIMAL}");
        assert!(parse(&text).is_err());
    }

    #[test]
    fn round_trip_is_field_for_field() {
        let text = format!(
            "scene_id = \"rt\"\nseed = 99\nambient_light_level = 1200.5\n[sensor]\nrange_noise_sigma = 0.013\n[reflectance]\ndropout_per_cos = 0.25\n[sweep]\nruns = 2\n[pem]\ngate = 1.5\n{MINIMAL}[[panel]]\npaint = \"SW-Gloss\"\ncenter_distance = 20.0\nazimuth = 45.0\nsurface = \"wet\"\n"
        );
        let a = parse(&text).unwrap();
        let b = parse(&a.to_toml().unwrap()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.config_hash().unwrap(), b.config_hash().unwrap());
    }

    #[test]
    fn ambient_light_changes_hash_only() {
        let a = parse(MINIMAL).unwrap();
        let b = parse(&format!("ambient_light_level = 90000.0\n{MINIMAL}")).unwrap();
        assert_ne!(a.config_hash().unwrap(), b.config_hash().unwrap());
        assert_eq!(a.scene.panels, b.scene.panels);
    }

    #[test]
    fn custom_paint_table_resolves_relative_to_scenario() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("p.toml"), PaintTable::builtin_text()).unwrap();
        let path = dir.path().join("s.toml");
        std::fs::write(&path, format!("paint_table = \"p.toml\"\n{MINIMAL}")).unwrap();
        let scene = load_scenario(&path).unwrap();
        assert_eq!(scene.paint_table.as_deref(), Some("p.toml"));
    }
}
