//! CSV forms of ground-truth objects, perceived objects and error records.

use std::path::Path;

use super::{Condition, ErrorRecord, GroundTruthObject, Outcome, PerceivedObject};
use crate::analysis::io::{field, opt, read_file, table, write_table, Row};
use crate::error::Result;

pub const GROUND_TRUTH_HEADER: [&str; 10] =
    ["id", "class_label", "center_x", "center_y", "center_z", "width", "height", "tilt", "surface", "paint_code"];
pub const PERCEIVED_HEADER: [&str; 8] =
    ["matched_gt_id", "center_x", "center_y", "center_z", "width", "height", "mean_intensity", "point_count"];
pub const ERROR_RECORD_HEADER: [&str; 9] = [
    "distance",
    "tilt",
    "surface",
    "outcome",
    "center_error_x",
    "center_error_y",
    "center_error_z",
    "width_error",
    "height_error",
];

pub fn ground_truth_csv(objects: &[GroundTruthObject]) -> String {
    write_table(
        &GROUND_TRUTH_HEADER,
        objects.iter().map(|o| {
            vec![
                o.id.clone(),
                o.class_label.clone(),
                o.center[0].to_string(),
                o.center[1].to_string(),
                o.center[2].to_string(),
                o.extent[0].to_string(),
                o.extent[1].to_string(),
                o.tilt.to_string(),
                o.surface.to_string(),
                o.paint_code.clone(),
            ]
        }),
    )
}

pub fn parse_ground_truth(text: &str, origin: &str) -> Result<Vec<GroundTruthObject>> {
    table(text, origin, &GROUND_TRUTH_HEADER, |row: &Row| {
        let o = GroundTruthObject {
            id: row.text(0)?,
            class_label: row.text(1)?,
            center: [row.get(2)?, row.get(3)?, row.get(4)?],
            extent: [row.get(5)?, row.get(6)?],
            tilt: row.get(7)?,
            surface: row.get(8)?,
            paint_code: row.text(9)?,
        };
        o.check().map_err(|e| row.error(e))?;
        Ok(o)
    })
}

pub fn read_ground_truth(path: &Path) -> Result<Vec<GroundTruthObject>> {
    let text = read_file(path)?;
    parse_ground_truth(&text, &path.display().to_string())
}

pub fn perceived_csv(objects: &[PerceivedObject]) -> String {
    write_table(
        &PERCEIVED_HEADER,
        objects.iter().map(|o| {
            vec![
                o.matched_gt_id.clone().unwrap_or_default(),
                o.center[0].to_string(),
                o.center[1].to_string(),
                o.center[2].to_string(),
                o.extent[0].to_string(),
                o.extent[1].to_string(),
                field(o.mean_intensity),
                o.point_count.to_string(),
            ]
        }),
    )
}

pub fn parse_perceived(text: &str, origin: &str) -> Result<Vec<PerceivedObject>> {
    table(text, origin, &PERCEIVED_HEADER, |row: &Row| {
        let id = row.text(0)?;
        Ok(PerceivedObject {
            matched_gt_id: (!id.is_empty()).then_some(id),
            center: [row.get(1)?, row.get(2)?, row.get(3)?],
            extent: [row.get(4)?, row.get(5)?],
            mean_intensity: opt(row.get_opt(6)?),
            point_count: row.get(7)?,
        })
    })
}

pub fn error_records_csv(records: &[ErrorRecord]) -> String {
    write_table(
        &ERROR_RECORD_HEADER,
        records.iter().map(|r| {
            let c = r.center_error;
            let e = r.extent_error;
            vec![
                r.condition.distance.to_string(),
                r.condition.tilt.to_string(),
                r.condition.surface.to_string(),
                r.outcome.as_str().to_string(),
                field(c.map(|c| c[0])),
                field(c.map(|c| c[1])),
                field(c.map(|c| c[2])),
                field(e.map(|e| e[0])),
                field(e.map(|e| e[1])),
            ]
        }),
    )
}

pub fn parse_error_records(text: &str, origin: &str) -> Result<Vec<ErrorRecord>> {
    table(text, origin, &ERROR_RECORD_HEADER, |row: &Row| {
        let condition = Condition { distance: row.get(0)?, tilt: row.get(1)?, surface: row.get(2)? };
        let outcome: Outcome = row.get(3)?;
        let c: [Option<f64>; 3] = [row.get_opt(4)?, row.get_opt(5)?, row.get_opt(6)?];
        let e: [Option<f64>; 2] = [row.get_opt(7)?, row.get_opt(8)?];
        let record = match (c, e) {
            ([Some(x), Some(y), Some(z)], [Some(w), Some(h)]) => ErrorRecord {
                condition,
                outcome,
                center_error: Some([x, y, z]),
                extent_error: Some([w, h]),
            },
            ([None, None, None], [None, None]) => {
                ErrorRecord { condition, outcome, center_error: None, extent_error: None }
            }
            _ => return Err(row.error("parameter errors must be all present or all empty")),
        };
        if !record.is_consistent() {
            return Err(row.error("parameter errors must be present exactly for true_positive rows"));
        }
        Ok(record)
    })
}

pub fn read_error_records(path: &Path) -> Result<Vec<ErrorRecord>> {
    let text = read_file(path)?;
    parse_error_records(&text, &path.display().to_string())
}
