use rayon::prelude::*;

use super::{match_objects, perceive, ErrorRecord, GroundTruthObject, PemSettings};
use crate::error::Result;
use crate::geometry::PanelGeometry;
use crate::rng::RandomStream;
use crate::scanner::scan;
use crate::scene::{PanelSpec, Scene};

/// Scans each panel alone in `template`'s sensor setup (one revolution per
/// panel, stream `pem-scan/{i}`), runs the detector and matches it against the
/// panel's ground truth.
pub fn scan_error_records(
    template: &Scene,
    panels: &[PanelSpec],
    seed: u64,
    settings: &PemSettings,
) -> Result<Vec<ErrorRecord>> {
    let per_panel: Vec<Vec<ErrorRecord>> = panels
        .par_iter()
        .enumerate()
        .map(|(i, panel)| {
            let mut scene = template.clone();
            scene.scene_id = format!("pem-scan/{i}");
            scene.panels = vec![panel.clone()];
            let cloud = scan(&scene, &RandomStream::new(seed, &scene.scene_id))?;
            let geometry = PanelGeometry::new(0, panel, scene.sensor.mount_height);
            let gt = [GroundTruthObject::from_panel(scene.scene_id.clone(), panel, &geometry)];
            let perceived = perceive(&cloud, settings.detector_min_points, settings.cluster_distance);
            Ok(match_objects(&gt, &perceived, settings.gate))
        })
        .collect::<Result<_>>()?;
    Ok(per_panel.into_iter().flatten().collect())
}
