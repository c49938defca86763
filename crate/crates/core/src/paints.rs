//! Paint tables: one `[[paint]]` block per panel code.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reflectance::ReflectanceModel;
use crate::scene::{validate_paint, Finish, PaintParams};

const BUILTIN: &str = include_str!("../data/paints.toml");

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PaintFile {
    #[serde(default)]
    paint: Vec<PaintParams>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PaintTable {
    paints: Vec<PaintParams>,
}

impl PaintTable {
    /// The shipped 13-panel table.
    pub fn builtin() -> Self {
        Self::parse(BUILTIN, "<builtin paint table>").expect("builtin paint table is valid")
    }

    pub fn builtin_text() -> &'static str {
        BUILTIN
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let file: PaintFile = toml::from_str(text).map_err(|e| Error::parse(origin, e))?;
        Self::from_paints(file.paint, ReflectanceModel::default().gloss_threshold)
    }

    pub fn from_paints(paints: Vec<PaintParams>, gloss_threshold: f64) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for p in &paints {
            if !seen.insert(p.panel_code.clone()) {
                return Err(Error::DuplicatePaint(p.panel_code.clone()));
            }
            let mut violations = Vec::new();
            validate_paint(p, gloss_threshold, &mut violations);
            if !violations.is_empty() {
                return Err(Error::InvalidScene(violations));
            }
        }
        Ok(Self { paints })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&PaintFile {
            paint: self.paints.clone(),
        })
        .expect("paint table serializes")
    }

    pub fn get(&self, code: &str) -> Option<&PaintParams> {
        self.paints.iter().find(|p| p.panel_code == code)
    }

    pub fn require(&self, code: &str) -> Result<&PaintParams> {
        self.get(code).ok_or_else(|| Error::UnknownPaint(code.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = &PaintParams> {
        self.paints.iter()
    }

    pub fn codes(&self) -> Vec<String> {
        self.paints.iter().map(|p| p.panel_code.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.paints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paints.is_empty()
    }

    /// Ordering constraints the measured panels exhibit. Custom tables that
    /// break them still load; the caller decides whether to surface these.
    pub fn ordering_warnings(&self) -> Vec<String> {
        let mut warnings = Vec::new();
        let normal_incidence = |p: &PaintParams| p.base_reflectivity + p.specular_weight;
        if let (Some(f), Some(s)) = (self.get("FB1-Matt"), self.get("SB-Matt")) {
            if f.base_reflectivity <= s.base_reflectivity {
                warnings.push(format!(
                    "FB1-Matt base_reflectivity {} should exceed SB-Matt {}",
                    f.base_reflectivity, s.base_reflectivity
                ));
            }
        }
        if let (Some(f), Some(s)) = (self.get("FB1-Gloss"), self.get("SB-Gloss")) {
            let gap = 255.0 * (normal_incidence(f) - normal_incidence(s)).abs();
            if gap > 5.0 {
                warnings.push(format!(
                    "FB1-Gloss and SB-Gloss differ by {gap:.1} intensity units at normal incidence (expected <= 5)"
                ));
            }
        }
        let glossy_mean = |metallic: bool| {
            let xs: Vec<f64> = self
                .paints
                .iter()
                .filter(|p| p.finish == Finish::Gloss && p.metallic == metallic)
                .map(|p| p.base_reflectivity)
                .collect();
            (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
        };
        if let (Some(plain), Some(metal)) = (glossy_mean(false), glossy_mean(true)) {
            if plain <= metal {
                warnings.push(format!(
                    "non-metallic glossy mean base_reflectivity {plain:.3} should exceed metallic glossy {metal:.3}"
                ));
            }
        }
        warnings
    }
}

pub fn load_paint_table(path: impl AsRef<Path>) -> Result<PaintTable> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    PaintTable::parse(&text, &path.display().to_string())
}
