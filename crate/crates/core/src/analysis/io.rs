//! CSV forms of sweep results, aggregated cells, reports and plot data.

use std::path::Path;
use std::str::FromStr;

use super::aggregate::AggregatedRecord;
use super::report::{GroupSummary, PlotPoint, TrendReport};
use super::stats::IntensityStats;
use super::sweep::ExperimentRecord;
use crate::error::{Error, Result};

pub const RESULTS_HEADER: [&str; 9] =
    ["panel_code", "angle_deg", "distance_m", "surface", "run", "mean", "variance", "count", "reliable"];
pub const AGGREGATED_HEADER: [&str; 10] = [
    "panel_code",
    "angle_deg",
    "distance_m",
    "surface",
    "runs",
    "mean",
    "variance",
    "mean_run_variance",
    "count",
    "reliable",
];

pub(crate) fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn field(x: Option<f64>) -> String {
    x.map(|x| x.to_string()).unwrap_or_default()
}

pub(crate) fn opt<T>(x: Option<T>) -> Option<T> {
    x
}

pub(crate) fn write_table(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).expect("write to memory");
    for row in rows {
        w.write_record(&row).expect("write to memory");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv output is utf-8")
}

pub(crate) struct Row<'a> {
    record: &'a csv::StringRecord,
    origin: &'a str,
    line: u64,
    header: &'a [&'a str],
}

impl Row<'_> {
    pub(crate) fn error(&self, message: impl std::fmt::Display) -> Error {
        Error::parse(format!("{}:{}", self.origin, self.line), message)
    }

    pub(crate) fn text(&self, i: usize) -> Result<String> {
        Ok(self.record.get(i).unwrap_or_default().to_string())
    }

    pub(crate) fn get<T: FromStr>(&self, i: usize) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.record.get(i).unwrap_or_default();
        raw.trim()
            .parse()
            .map_err(|e| self.error(format!("column `{}`: cannot parse `{raw}`: {e}", self.header[i])))
    }

    pub(crate) fn get_opt<T: FromStr>(&self, i: usize) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        if self.record.get(i).unwrap_or_default().trim().is_empty() {
            Ok(None)
        } else {
            self.get(i).map(Some)
        }
    }
}

/// Parses a headed CSV whose header must equal `header` exactly.
pub(crate) fn table<T>(
    text: &str,
    origin: &str,
    header: &[&str],
    mut parse: impl FnMut(&Row) -> Result<T>,
) -> Result<Vec<T>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let found = reader.headers().map_err(|e| Error::csv(origin, e))?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::parse(
            origin,
            format!("unexpected header `{}` (expected `{}`)", found.iter().collect::<Vec<_>>().join(","), header.join(",")),
        ));
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::csv(origin, e))?;
        let line = record.position().map_or(0, |p| p.line());
        out.push(parse(&Row { record: &record, origin, line, header })?);
    }
    Ok(out)
}

pub fn results_csv(records: &[ExperimentRecord]) -> String {
    write_table(
        &RESULTS_HEADER,
        records.iter().map(|r| {
            vec![
                r.panel_code.clone(),
                r.angle_deg.to_string(),
                r.distance_m.to_string(),
                r.surface.to_string(),
                r.run.to_string(),
                r.stats.mean.to_string(),
                r.stats.variance.to_string(),
                r.stats.count.to_string(),
                r.reliable.to_string(),
            ]
        }),
    )
}

/// Parses a results file; a file with no data rows is an error.
pub fn parse_results(text: &str, origin: &str) -> Result<Vec<ExperimentRecord>> {
    let records = table(text, origin, &RESULTS_HEADER, |row: &Row| {
        Ok(ExperimentRecord {
            panel_code: row.text(0)?,
            angle_deg: row.get(1)?,
            distance_m: row.get(2)?,
            surface: row.get(3)?,
            run: row.get(4)?,
            stats: IntensityStats { mean: row.get(5)?, variance: row.get(6)?, count: row.get(7)? },
            reliable: row.get(8)?,
        })
    })?;
    if records.is_empty() {
        return Err(Error::parse(origin, "results file contains no records"));
    }
    Ok(records)
}

pub fn read_results(path: &Path) -> Result<Vec<ExperimentRecord>> {
    let text = read_file(path)?;
    parse_results(&text, &path.display().to_string())
}

pub fn aggregated_csv(records: &[AggregatedRecord]) -> String {
    write_table(
        &AGGREGATED_HEADER,
        records.iter().map(|r| {
            vec![
                r.panel_code.clone(),
                r.angle_deg.to_string(),
                r.distance_m.to_string(),
                r.surface.to_string(),
                r.runs.to_string(),
                r.stats.mean.to_string(),
                r.stats.variance.to_string(),
                r.mean_run_variance.to_string(),
                r.stats.count.to_string(),
                r.reliable.to_string(),
            ]
        }),
    )
}

pub fn groups_csv(groups: &[GroupSummary]) -> String {
    write_table(
        &["grouping", "group", "cells", "mean", "variance", "min_member_mean", "max_member_mean"],
        groups.iter().map(|g| {
            vec![
                g.grouping.as_str().to_string(),
                g.group.clone(),
                g.cells.to_string(),
                g.mean.to_string(),
                g.variance.to_string(),
                g.min_member_mean.to_string(),
                g.max_member_mean.to_string(),
            ]
        }),
    )
}

pub fn trend_csv(report: &TrendReport) -> String {
    write_table(
        &[
            "panel_code",
            "angle_monotone",
            "distance_monotone",
            "knee_present",
            "angle_series",
            "distance_series",
            "knee_series",
        ],
        report.paints.iter().map(|p| {
            vec![
                p.panel_code.clone(),
                p.angle_monotone.to_string(),
                p.distance_monotone.to_string(),
                p.knee_present.to_string(),
                p.angle_series.to_string(),
                p.distance_series.to_string(),
                p.knee_series.to_string(),
            ]
        }),
    )
}

pub fn plot_csv(points: &[PlotPoint]) -> String {
    write_table(
        &["figure", "curve", "x", "y"],
        points.iter().map(|p| vec![p.figure.clone(), p.curve.clone(), p.x.clone(), p.y.to_string()]),
    )
}
