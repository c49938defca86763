use crate::geometry::PanelGeometry;
use crate::scene::{LidarPoint, PointCloud};

pub const DEFAULT_ROI_MARGIN: f64 = 0.05;

/// Points farther than this from the panel plane along their own ray belong
/// to something else.
pub const ROI_RANGE_GATE: f64 = 0.25;

/// Points whose beam meets the panel inside the rectangle shrunk by
/// `margin × side` on every edge.
///
/// Uses the known panel pose: each point's ray is re-intersected with the
/// panel plane, which keeps range noise from moving points across the
/// boundary.
pub fn extract_panel_roi(cloud: &PointCloud, panel: &PanelGeometry, margin: f64) -> Vec<LidarPoint> {
    assert!((0.0..0.5).contains(&margin), "ROI margin must lie in [0, 0.5)");
    let half = panel.half_side * (1.0 - 2.0 * margin);
    cloud
        .points
        .iter()
        .filter(|p| {
            let pos = p.position();
            let norm = pos.norm();
            if norm == 0.0 {
                return false;
            }
            let dir = pos / norm;
            let Some(s) = panel.plane_distance(&dir) else {
                return false;
            };
            if (s - p.range).abs() > ROI_RANGE_GATE {
                return false;
            }
            let (a, b) = panel.plane_coords(&(dir * s));
            panel.contains_plane_coords(a, b, half)
        })
        .copied()
        .collect()
}
