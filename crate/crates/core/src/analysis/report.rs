//! Grouped comparisons, trend checks and plot-ready series.

use std::collections::BTreeMap;

use super::aggregate::AggregatedRecord;
use super::MONOTONE_SLACK;
use crate::error::Result;
use crate::paints::PaintTable;
use crate::scene::{Finish, PaintParams, Surface};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Grouping {
    Functionalised,
    Metallic,
    Finish,
    Surface,
}

impl Grouping {
    pub const ALL: [Grouping; 4] = [
        Grouping::Functionalised,
        Grouping::Metallic,
        Grouping::Finish,
        Grouping::Surface,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Grouping::Functionalised => "functionalised",
            Grouping::Metallic => "metallic",
            Grouping::Finish => "finish",
            Grouping::Surface => "surface",
        }
    }

    /// Group label; paint-type groupings are split by finish, as the
    /// glossy/matte behaviour differs.
    fn label(self, paint: &PaintParams, surface: Surface) -> String {
        let finish = paint.finish.as_str();
        match self {
            Grouping::Functionalised => {
                let kind = if paint.functionalised { "functionalised" } else { "standard" };
                format!("{kind}/{finish}")
            }
            Grouping::Metallic => {
                let kind = if paint.metallic { "metallic" } else { "non-metallic" };
                format!("{kind}/{finish}")
            }
            Grouping::Finish => finish.to_string(),
            Grouping::Surface => surface.as_str().to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupSummary {
    pub grouping: Grouping,
    pub group: String,
    pub cells: usize,
    /// Mean of member cell means.
    pub mean: f64,
    /// Mean of member cell (pooled) variances.
    pub variance: f64,
    pub min_member_mean: f64,
    pub max_member_mean: f64,
}

/// Per-group intensity mean and variance over reliable cells, sorted by group label.
pub fn group_compare(
    records: &[AggregatedRecord],
    paints: &PaintTable,
    grouping: Grouping,
) -> Result<Vec<GroupSummary>> {
    let mut groups: BTreeMap<String, Vec<&AggregatedRecord>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.reliable) {
        let paint = paints.require(&r.panel_code)?;
        groups.entry(grouping.label(paint, r.surface)).or_default().push(r);
    }
    Ok(groups
        .into_iter()
        .map(|(group, members)| {
            let n = members.len() as f64;
            let mean = members.iter().map(|r| r.stats.mean).sum::<f64>() / n;
            let variance = members.iter().map(|r| r.stats.variance).sum::<f64>() / n;
            let min = members.iter().map(|r| r.stats.mean).fold(f64::INFINITY, f64::min);
            let max = members.iter().map(|r| r.stats.mean).fold(f64::NEG_INFINITY, f64::max);
            GroupSummary {
                grouping,
                group,
                cells: members.len(),
                mean,
                variance,
                min_member_mean: min,
                max_member_mean: max,
            }
        })
        .collect())
}

/// Mean over reliable cells of one paint (all angles, distances, surfaces).
pub fn paint_mean(records: &[AggregatedRecord], code: &str) -> Option<f64> {
    let xs: Vec<f64> = records
        .iter()
        .filter(|r| r.reliable && r.panel_code == code)
        .map(|r| r.stats.mean)
        .collect();
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

pub const KNEE_DISTANCES: [f64; 3] = [5.0, 10.0, 20.0];

#[derive(Clone, Debug, PartialEq)]
pub struct PaintTrend {
    pub panel_code: String,
    /// Non-increasing over angle (with slack) in every reliable (distance, surface) series.
    pub angle_monotone: bool,
    /// Non-increasing over 5/10/20 m (with slack) in every (angle, surface) series.
    pub distance_monotone: bool,
    /// `m10 − m20 ≥ m5 − m10` in every series where all three cells are reliable.
    pub knee_present: bool,
    pub angle_series: usize,
    pub distance_series: usize,
    pub knee_series: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrendReport {
    pub paints: Vec<PaintTrend>,
    /// Human-readable description of each failing series.
    pub failures: Vec<String>,
}

impl TrendReport {
    pub fn get(&self, code: &str) -> Option<&PaintTrend> {
        self.paints.iter().find(|p| p.panel_code == code)
    }
}

fn non_increasing(values: &[f64], slack: f64) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] + slack)
}

/// Only reliable cells take part.
pub fn trend_check(records: &[AggregatedRecord]) -> TrendReport {
    let mut by_paint: BTreeMap<&str, Vec<&AggregatedRecord>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.reliable) {
        by_paint.entry(&r.panel_code).or_default().push(r);
    }
    let mut report = TrendReport::default();
    for (code, cells) in by_paint {
        let mut trend = PaintTrend {
            panel_code: code.to_string(),
            angle_monotone: true,
            distance_monotone: true,
            knee_present: true,
            angle_series: 0,
            distance_series: 0,
            knee_series: 0,
        };

        let mut angle_series: BTreeMap<(u64, Surface), Vec<(f64, f64)>> = BTreeMap::new();
        let mut distance_series: BTreeMap<(u64, Surface), Vec<(f64, f64)>> = BTreeMap::new();
        for r in &cells {
            angle_series
                .entry((r.distance_m.to_bits(), r.surface))
                .or_default()
                .push((r.angle_deg, r.stats.mean));
            if KNEE_DISTANCES.contains(&r.distance_m) {
                distance_series
                    .entry((r.angle_deg.to_bits(), r.surface))
                    .or_default()
                    .push((r.distance_m, r.stats.mean));
            }
        }
        for ((d, surface), mut series) in angle_series {
            if series.len() < 2 {
                continue;
            }
            series.sort_by(|a, b| a.0.total_cmp(&b.0));
            trend.angle_series += 1;
            let means: Vec<f64> = series.iter().map(|s| s.1).collect();
            if !non_increasing(&means, MONOTONE_SLACK) {
                trend.angle_monotone = false;
                report.failures.push(format!(
                    "{code} {surface} {} m: mean over angle not non-increasing {:?}",
                    f64::from_bits(d),
                    series
                ));
            }
        }
        for ((a, surface), mut series) in distance_series {
            series.sort_by(|x, y| x.0.total_cmp(&y.0));
            let angle = f64::from_bits(a);
            if series.len() >= 2 {
                trend.distance_series += 1;
                let means: Vec<f64> = series.iter().map(|s| s.1).collect();
                if !non_increasing(&means, MONOTONE_SLACK) {
                    trend.distance_monotone = false;
                    report.failures.push(format!(
                        "{code} {surface} {angle}°: mean over distance not non-increasing {series:?}"
                    ));
                }
            }
            if series.len() == KNEE_DISTANCES.len() {
                trend.knee_series += 1;
                let (m5, m10, m20) = (series[0].1, series[1].1, series[2].1);
                if m10 - m20 < m5 - m10 {
                    trend.knee_present = false;
                    report.failures.push(format!(
                        "{code} {surface} {angle}°: no knee (m5={m5:.3}, m10={m10:.3}, m20={m20:.3})"
                    ));
                }
            }
        }
        report.paints.push(trend);
    }
    report
}

/// One point of a plot series; `x` is a category label or a number.
#[derive(Clone, Debug, PartialEq)]
pub struct PlotPoint {
    pub figure: String,
    pub curve: String,
    pub x: String,
    pub y: f64,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Series behind the intensity-vs-angle, intensity-vs-distance, category and
/// surface charts, built from reliable cells.
pub fn plot_series(records: &[AggregatedRecord], paints: &PaintTable) -> Result<Vec<PlotPoint>> {
    let mut out = Vec::new();
    let reliable: Vec<&AggregatedRecord> = records.iter().filter(|r| r.reliable).collect();
    type Key = (Surface, String, u64);
    let mut by_angle: BTreeMap<Key, Vec<f64>> = BTreeMap::new();
    let mut by_distance: BTreeMap<Key, Vec<f64>> = BTreeMap::new();
    let mut by_surface: BTreeMap<(String, Surface), (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for r in &reliable {
        by_angle
            .entry((r.surface, r.panel_code.clone(), r.angle_deg.to_bits()))
            .or_default()
            .push(r.stats.mean);
        by_distance
            .entry((r.surface, r.panel_code.clone(), r.distance_m.to_bits()))
            .or_default()
            .push(r.stats.mean);
        let e = by_surface.entry((r.panel_code.clone(), r.surface)).or_default();
        e.0.push(r.stats.mean);
        e.1.push(r.stats.variance);
    }
    let mut numeric = |map: BTreeMap<Key, Vec<f64>>, name: &str| {
        let mut rows: Vec<_> = map.into_iter().collect();
        rows.sort_by(|a, b| {
            (a.0 .0, &a.0 .1)
                .cmp(&(b.0 .0, &b.0 .1))
                .then(f64::from_bits(a.0 .2).total_cmp(&f64::from_bits(b.0 .2)))
        });
        for ((surface, code, x), ys) in rows {
            out.push(PlotPoint {
                figure: format!("{name}_{surface}"),
                curve: code,
                x: f64::from_bits(x).to_string(),
                y: mean(&ys),
            });
        }
    };
    numeric(by_angle, "mean_vs_angle");
    numeric(by_distance, "mean_vs_distance");
    for ((code, surface), (means, vars)) in by_surface {
        out.push(PlotPoint {
            figure: "surface_mean".into(),
            curve: surface.to_string(),
            x: code.clone(),
            y: mean(&means),
        });
        out.push(PlotPoint {
            figure: "surface_variance".into(),
            curve: surface.to_string(),
            x: code,
            y: mean(&vars),
        });
    }
    for grouping in Grouping::ALL {
        for g in group_compare(records, paints, grouping)? {
            out.push(PlotPoint {
                figure: format!("group_{}_mean", grouping.as_str()),
                curve: g.group.clone(),
                x: "all".into(),
                y: g.mean,
            });
            out.push(PlotPoint {
                figure: format!("group_{}_variance", grouping.as_str()),
                curve: g.group,
                x: "all".into(),
                y: g.variance,
            });
        }
    }
    Ok(out)
}

impl Finish {
    pub fn is_gloss(self) -> bool {
        self == Finish::Gloss
    }
}
